"""Detection annotations (COCO-format subset) and blur-consistent expansion.

Boxes use the top-left + width/height convention. Supported dataset fields:
image {id, file_name, width, height}, annotation {image_id, category_id,
bbox, score?}, category {id, name}. Everything else in a source file is
dropped on load.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

from .kernels import Extents


class DatasetError(ValueError):
    """Malformed or inconsistent annotation data."""


@dataclass(frozen=True)
class BoundingBox:
    x: float
    y: float
    w: float
    h: float

    def __post_init__(self) -> None:
        for name in ("x", "y", "w", "h"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if self.w <= 0 or self.h <= 0:
            raise DatasetError(f"box needs positive size, got w={self.w}, h={self.h}")

    def as_list(self) -> list[float]:
        return [self.x, self.y, self.w, self.h]

    @property
    def area(self) -> float:
        return self.w * self.h

    def contains(self, other: "BoundingBox") -> bool:
        return (
            self.x <= other.x
            and self.y <= other.y
            and self.x + self.w >= other.x + other.w
            and self.y + self.h >= other.y + other.h
        )


@dataclass(frozen=True)
class Annotation:
    image_id: int
    category_id: int
    bbox: BoundingBox
    score: float | None = None

    def __post_init__(self) -> None:
        if self.image_id < 0 or self.category_id < 0:
            raise DatasetError("ids must be nonnegative")
        if self.score is not None and not 0 <= self.score <= 1:
            raise DatasetError(f"score must lie in [0, 1], got {self.score}")


@dataclass(frozen=True)
class ImageInfo:
    id: int
    file_name: str
    width: int
    height: int


@dataclass(frozen=True)
class Category:
    id: int
    name: str


@dataclass(frozen=True)
class Dataset:
    images: tuple[ImageInfo, ...]
    annotations: tuple[Annotation, ...]
    categories: tuple[Category, ...]

    def __post_init__(self) -> None:
        image_ids = {im.id for im in self.images}
        category_ids = {c.id for c in self.categories}
        for ann in self.annotations:
            if ann.image_id not in image_ids:
                raise DatasetError(f"annotation references missing image id {ann.image_id}")
            if ann.category_id not in category_ids:
                raise DatasetError(f"annotation references missing category id {ann.category_id}")

    def image_by_id(self, image_id: int) -> ImageInfo:
        for im in self.images:
            if im.id == image_id:
                return im
        raise DatasetError(f"no image with id {image_id}")


def _bbox_from_list(values) -> BoundingBox:
    if len(values) != 4:
        raise DatasetError(f"bbox must have 4 entries, got {values!r}")
    return BoundingBox(*(float(v) for v in values))


def load_annotations(path) -> Dataset:
    """Parse a COCO-subset JSON file into a Dataset."""
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise DatasetError(f"malformed JSON in {path}: {exc}") from exc
    for key in ("images", "annotations", "categories"):
        if key not in raw:
            raise DatasetError(f"missing top-level key {key!r} in {path}")
    images = tuple(
        ImageInfo(int(im["id"]), str(im["file_name"]), int(im["width"]), int(im["height"]))
        for im in raw["images"]
    )
    annotations = tuple(
        Annotation(
            image_id=int(a["image_id"]),
            category_id=int(a["category_id"]),
            bbox=_bbox_from_list(a["bbox"]),
            score=float(a["score"]) if "score" in a and a["score"] is not None else None,
        )
        for a in raw["annotations"]
    )
    categories = tuple(Category(int(c["id"]), str(c["name"])) for c in raw["categories"])
    return Dataset(images, annotations, categories)


def save_annotations(ds: Dataset, path) -> None:
    out = {
        "images": [
            {"id": im.id, "file_name": im.file_name, "width": im.width, "height": im.height}
            for im in ds.images
        ],
        "annotations": [
            {
                "image_id": a.image_id,
                "category_id": a.category_id,
                "bbox": a.bbox.as_list(),
                **({"score": a.score} if a.score is not None else {}),
            }
            for a in ds.annotations
        ],
        "categories": [{"id": c.id, "name": c.name} for c in ds.categories],
    }
    Path(path).write_text(json.dumps(out, indent=2, sort_keys=True) + "\n")


def load_predictions(path) -> list[Annotation]:
    """Parse a COCO-style results file (list of scored detections)."""
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise DatasetError(f"malformed JSON in {path}: {exc}") from exc
    if not isinstance(raw, list):
        raise DatasetError("prediction file must hold a JSON list")
    preds = []
    for item in raw:
        preds.append(
            Annotation(
                image_id=int(item["image_id"]),
                category_id=int(item["category_id"]),
                bbox=_bbox_from_list(item["bbox"]),
                score=float(item.get("score", 1.0)),
            )
        )
    return preds


def save_predictions(preds, path) -> None:
    out = [
        {
            "image_id": a.image_id,
            "category_id": a.category_id,
            "bbox": a.bbox.as_list(),
            "score": a.score if a.score is not None else 1.0,
        }
        for a in preds
    ]
    Path(path).write_text(json.dumps(out, indent=2, sort_keys=True) + "\n")


def expand_box(b: BoundingBox, e: Extents) -> BoundingBox:
    """Grow a box to the superset of positions reached under the blur.

    The top-left corner moves out by the magnitudes of the negative extents
    and the size grows by the total extent span per axis, so the result
    always contains the original box.
    """
    return BoundingBox(
        x=b.x - abs(e.x_minus),
        y=b.y - abs(e.y_minus),
        w=b.w + abs(e.x_minus) + abs(e.x_plus),
        h=b.h + abs(e.y_minus) + abs(e.y_plus),
    )


def _clip_box(b: BoundingBox, width: int, height: int) -> BoundingBox | None:
    x0 = max(b.x, 0.0)
    y0 = max(b.y, 0.0)
    x1 = min(b.x + b.w, float(width))
    y1 = min(b.y + b.h, float(height))
    if x1 <= x0 or y1 <= y0:
        return None
    return BoundingBox(x0, y0, x1 - x0, y1 - y0)


def transform_annotations(ds: Dataset, extents_by_image: dict[int, Extents], clip: bool = False) -> Dataset:
    """Expand every box by its image's extents; optionally clip to the image.

    Every annotated image must have an Extents entry. With clip=True, boxes
    are intersected with the image rectangle and dropped when the
    intersection is empty; without it the annotation count is preserved and
    coordinates may leave the image.
    """
    sizes = {im.id: (im.width, im.height) for im in ds.images}
    out = []
    for ann in ds.annotations:
        if ann.image_id not in extents_by_image:
            raise DatasetError(f"no extents provided for annotated image id {ann.image_id}")
        box = expand_box(ann.bbox, extents_by_image[ann.image_id])
        if clip:
            clipped = _clip_box(box, *sizes[ann.image_id])
            if clipped is None:
                continue
            box = clipped
        out.append(replace(ann, bbox=box))
    return Dataset(ds.images, tuple(out), ds.categories)
