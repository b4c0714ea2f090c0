"""COCO-style detection evaluation: IoU, per-class AP, mAP, and sweep reports.

AP follows the COCO convention: predictions sorted by descending score (ties
broken by input order), greedy matching to the unmatched ground truth with
the highest IoU at or above the threshold (ties by ground-truth index), and
101-point interpolated average precision. Classes without ground truth are
excluded from the mean.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .labels import Annotation, BoundingBox, Dataset, load_predictions

#: IoU thresholds for mAP@[0.5:0.95].
COCO_THRESHOLDS = tuple(round(0.5 + 0.05 * i, 2) for i in range(10))


class Regime(Enum):
    STANDARD = "standard"
    EXPANDED = "expanded"


@dataclass(frozen=True)
class EvalConfig:
    iou_thresholds: tuple[float, ...] = (0.5,)
    regime: Regime = Regime.STANDARD
    score_threshold: float = 0.0

    def __post_init__(self) -> None:
        if not self.iou_thresholds:
            raise ValueError("need at least one IoU threshold")
        if any(not 0 < t <= 1 for t in self.iou_thresholds):
            raise ValueError("IoU thresholds must lie in (0, 1]")
        if list(self.iou_thresholds) != sorted(self.iou_thresholds):
            raise ValueError("IoU thresholds must be sorted ascending")


@dataclass(frozen=True)
class EvalReport:
    per_class_ap: dict[int, dict[float, float]]
    map_at: dict[float, float]
    counts: dict[str, int]

    @property
    def map_mean(self) -> float:
        """Mean over configured thresholds (equals mAP@0.5 for one threshold)."""
        return float(np.mean(list(self.map_at.values()))) if self.map_at else 0.0

    def to_json(self) -> dict:
        return {
            "map": self.map_mean,
            "map_at": {f"{t:.2f}": v for t, v in self.map_at.items()},
            "per_class_ap": {
                str(cat): {f"{t:.2f}": v for t, v in aps.items()}
                for cat, aps in self.per_class_ap.items()
            },
            "counts": self.counts,
        }

    def csv_rows(self) -> list[list]:
        rows = [["category_id", "iou_threshold", "ap"]]
        for cat in sorted(self.per_class_ap):
            for t, v in self.per_class_ap[cat].items():
                rows.append([cat, f"{t:.2f}", f"{v:.6f}"])
        return rows


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union of two boxes; 0 when disjoint."""
    x0 = max(a.x, b.x)
    y0 = max(a.y, b.y)
    x1 = min(a.x + a.w, b.x + b.w)
    y1 = min(a.y + a.h, b.y + b.h)
    if x1 <= x0 or y1 <= y0:
        return 0.0
    inter = (x1 - x0) * (y1 - y0)
    return inter / (a.area + b.area - inter)


def _match(preds: Sequence[Annotation], gts: Sequence[Annotation], thr: float) -> list[bool]:
    """Greedy TP flags for score-ordered predictions of a single class."""
    order = sorted(range(len(preds)), key=lambda i: (-(preds[i].score or 0.0), i))
    gt_by_image: dict[int, list[int]] = {}
    for j, gt in enumerate(gts):
        gt_by_image.setdefault(gt.image_id, []).append(j)
    taken = [False] * len(gts)
    flags = []
    for i in order:
        pred = preds[i]
        best_j = -1
        best_iou = 0.0
        for j in gt_by_image.get(pred.image_id, ()):
            if taken[j]:
                continue
            overlap = iou(pred.bbox, gts[j].bbox)
            if overlap >= thr and overlap > best_iou:
                best_iou = overlap
                best_j = j
        if best_j >= 0:
            taken[best_j] = True
            flags.append(True)
        else:
            flags.append(False)
    return flags


def _interpolated_ap(flags: Sequence[bool], n_gt: int) -> float:
    if n_gt == 0:
        raise ValueError("AP is undefined without ground truth")
    if not flags:
        return 0.0
    tp = np.cumsum(np.asarray(flags, dtype=np.float64))
    recalls = tp / n_gt
    precisions = tp / np.arange(1, len(flags) + 1)
    envelope = np.maximum.accumulate(precisions[::-1])[::-1]
    points = np.linspace(0.0, 1.0, 101)
    idx = np.searchsorted(recalls, points, side="left")
    values = np.where(idx < len(envelope), envelope[np.minimum(idx, len(envelope) - 1)], 0.0)
    return float(values.mean())


def evaluate_class_ap(preds: Sequence[Annotation], gts: Sequence[Annotation], iou_thr: float) -> float | None:
    """101-point interpolated AP for one class; None when no ground truth."""
    if not gts:
        return None
    return _interpolated_ap(_match(preds, gts, iou_thr), len(gts))


def evaluate_map(predictions, gt_dataset: Dataset, config: EvalConfig = EvalConfig()) -> EvalReport:
    """Evaluate predictions (sequence or results-file path) against a dataset.

    For the EXPANDED regime the dataset must already carry expanded boxes
    (see labels.transform_annotations with the blur-manifest extents).
    """
    if isinstance(predictions, (str, Path)):
        predictions = load_predictions(predictions)
    image_ids = {im.id for im in gt_dataset.images}
    category_ids = {c.id for c in gt_dataset.categories}
    preds = [p for p in predictions if (p.score or 0.0) >= config.score_threshold]
    for p in preds:
        if p.image_id not in image_ids:
            raise ValueError(f"prediction references unknown image id {p.image_id}")
        if p.category_id not in category_ids:
            raise ValueError(f"prediction references unknown category id {p.category_id}")

    gts_by_cat: dict[int, list[Annotation]] = {}
    for gt in gt_dataset.annotations:
        gts_by_cat.setdefault(gt.category_id, []).append(gt)
    preds_by_cat: dict[int, list[Annotation]] = {}
    for p in preds:
        preds_by_cat.setdefault(p.category_id, []).append(p)

    per_class: dict[int, dict[float, float]] = {}
    for cat, gts in sorted(gts_by_cat.items()):
        per_class[cat] = {}
        for thr in config.iou_thresholds:
            per_class[cat][thr] = evaluate_class_ap(preds_by_cat.get(cat, []), gts, thr)

    map_at = {}
    for thr in config.iou_thresholds:
        values = [aps[thr] for aps in per_class.values()]
        map_at[thr] = float(np.mean(values)) if values else 0.0

    first_thr = config.iou_thresholds[0]
    matched = sum(
        sum(_match(preds_by_cat.get(cat, []), gts, first_thr))
        for cat, gts in gts_by_cat.items()
    )
    counts = {"gts": len(gt_dataset.annotations), "preds": len(preds), "matched": int(matched)}
    return EvalReport(per_class_ap=per_class, map_at=map_at, counts=counts)


def sweep_grid(
    eval_fn: Callable[[float, float], tuple[float, int]],
    p_values: Sequence[float],
    e_values: Sequence[float],
) -> list[dict]:
    """Evaluate a callable per (P, E) cell; failures yield empty cells."""
    rows = []
    for p in p_values:
        for e in e_values:
            row = {"p": float(p), "e": float(e), "map50": None, "n_images": 0}
            try:
                map50, n_images = eval_fn(float(p), float(e))
                row["map50"] = float(map50)
                row["n_images"] = int(n_images)
            except Exception:  # noqa: BLE001 - recorded as an empty cell
                pass
            rows.append(row)
    return rows


def sweep_rows_to_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["p", "e", "map50", "n_images"])
    for row in rows:
        map50 = "" if row["map50"] is None else f"{row['map50']:.6f}"
        writer.writerow([f"{row['p']:g}", f"{row['e']:g}", map50, row["n_images"]])
    return buf.getvalue()


def report_to_json(report: EvalReport) -> str:
    return json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n"
