"""Deterministic blur plans, dataset blurring, and specialist routing.

A plan pins every image of a dataset to a blur assignment (sharp, or a
(P, E) class plus kernel seed) under a mixing policy. Assignment uses exact
quotas instead of i.i.d. sampling so class ratios hold at any dataset size
and reruns are reproducible. Executing a plan writes blurred images, their
kernels, and a manifest that downstream label expansion and evaluation
consume.
"""

from __future__ import annotations

import json
import math
import shutil
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .blurspace import ALL_PAIRS, HIGH_EXPOSURES, LOW_EXPOSURE_PAIRS, BlurClass, EClass, PClass
from .convolve import convolve_reflect, sparsify_kernel
from .corpus import KERNEL_SUFFIX, write_kernel
from .imageio import load_image, save_image
from .kernels import Extents, generate_kernel
from .labels import Dataset
from .seeding import derive_seed, make_rng


@dataclass(frozen=True)
class MixPolicy:
    """Sharp/blurry mixing ratio plus the admissible (P, E) pairs."""

    name: str
    sharp_fraction: float
    pairs: tuple[tuple[PClass, EClass], ...]

    def __post_init__(self) -> None:
        if not 0 <= self.sharp_fraction <= 1:
            raise ValueError("sharp_fraction must lie in [0, 1]")
        if not self.pairs and self.sharp_fraction < 1:
            raise ValueError("a policy with blurred images needs at least one (P, E) pair")

    @classmethod
    def generalist(cls) -> "MixPolicy":
        """10% sharp, the rest spread over every (P, E) pair."""
        return cls("generalist", 0.10, ALL_PAIRS)

    @classmethod
    def low_exposure(cls) -> "MixPolicy":
        """25% sharp, the rest over low exposures (E1-E3) of every type."""
        return cls("low-exposure", 0.25, LOW_EXPOSURE_PAIRS)

    @classmethod
    def specialist(cls, p: PClass, high_exposure_only: bool = True) -> "MixPolicy":
        """Single-type training mix.

        With high_exposure_only, all images are blurred at E4/E5 of the given
        type; otherwise the standard 10% sharp mix restricted to that type.
        """
        if high_exposure_only:
            return cls(f"specialist-{p.name.lower()}-he", 0.0, tuple((p, e) for e in HIGH_EXPOSURES))
        return cls(f"specialist-{p.name.lower()}", 0.10, tuple((p, e) for e in EClass))

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "sharp_fraction": self.sharp_fraction,
            "pairs": [[p.name, e.name] for p, e in self.pairs],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "MixPolicy":
        pairs = tuple((PClass[p], EClass[e]) for p, e in obj["pairs"])
        return cls(obj["name"], float(obj["sharp_fraction"]), pairs)


@dataclass(frozen=True)
class PlanEntry:
    image_id: int
    file_name: str
    blur_class: BlurClass
    kernel_seed: int | None


@dataclass(frozen=True)
class BlurPlan:
    entries: tuple[PlanEntry, ...]
    policy: MixPolicy
    master_seed: int


def build_plan(ds: Dataset, policy: MixPolicy, master_seed: int) -> BlurPlan:
    """Assign a blur class and kernel seed to every image, deterministically.

    Image ids are sorted, shuffled by the master seed, and the first
    floor(sharp_fraction * N) become sharp; the remainder take the policy's
    (P, E) pairs round-robin in fixed order. Kernel seeds derive from
    (master_seed, image_id) so they are independent of the shuffle.
    """
    if not ds.images:
        raise ValueError("cannot plan over an empty dataset")
    images = sorted(ds.images, key=lambda im: im.id)
    order = make_rng(master_seed).permutation(len(images))
    shuffled = [images[i] for i in order]
    n_sharp = math.floor(policy.sharp_fraction * len(images))

    entries = []
    for rank, im in enumerate(shuffled):
        if rank < n_sharp:
            entries.append(PlanEntry(im.id, im.file_name, BlurClass.sharp(), None))
        else:
            p, e = policy.pairs[(rank - n_sharp) % len(policy.pairs)]
            entries.append(
                PlanEntry(im.id, im.file_name, BlurClass(p, e), derive_seed(master_seed, im.id))
            )
    entries.sort(key=lambda en: en.image_id)
    return BlurPlan(tuple(entries), policy, master_seed)


def _execute_entry(entry: dict, image_root: str, out_root: str, defocus_sigma: float) -> dict:
    src = Path(image_root) / entry["file_name"]
    dst = Path(out_root) / entry["file_name"]
    result = {
        "image_id": entry["image_id"],
        "file_name": entry["file_name"],
        "blur_class": entry["blur_class"],
        "kernel_seed": entry["kernel_seed"],
    }
    try:
        if entry["blur_class"] == "sharp":
            shutil.copyfile(src, dst)
            result["extents"] = Extents.zero().as_list()
            result["kernel_file"] = None
            return result
        blur = BlurClass.from_json(entry["blur_class"])
        kernel = generate_kernel(blur.p, blur.e, entry["kernel_seed"], defocus_sigma=defocus_sigma)
        kernel_file = f"kernels/{entry['image_id']:012d}{KERNEL_SUFFIX}"
        write_kernel(Path(out_root) / kernel_file, kernel)
        blurred = convolve_reflect(load_image(src), sparsify_kernel(kernel))
        save_image(dst, blurred)
        result["extents"] = kernel.meta.extents.as_list()
        result["kernel_file"] = kernel_file
        return result
    except Exception as exc:  # noqa: BLE001 - recorded per image
        result["error"] = str(exc)
        return result


def execute_plan(
    plan: BlurPlan,
    image_root,
    out_root,
    *,
    jobs: int = 1,
    defocus_sigma: float = 0.0,
) -> dict:
    """Run a plan over source images and emit the blur manifest.

    Sharp entries are byte-copied; blurred entries regenerate their kernel
    from (class, kernel_seed), convolve with reflection padding, and record
    the kernel file plus its extents. Entry failures are collected in the
    manifest rather than aborting the run.
    """
    out_root = Path(out_root)
    out_root.mkdir(parents=True, exist_ok=True)
    if any(not en.blur_class.is_sharp for en in plan.entries):
        (out_root / "kernels").mkdir(exist_ok=True)

    tasks = [
        {
            "image_id": en.image_id,
            "file_name": en.file_name,
            "blur_class": en.blur_class.to_json(),
            "kernel_seed": en.kernel_seed,
        }
        for en in plan.entries
    ]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(
                pool.map(_execute_entry, tasks, [str(image_root)] * len(tasks), [str(out_root)] * len(tasks), [defocus_sigma] * len(tasks))
            )
    else:
        results = [_execute_entry(t, str(image_root), str(out_root), defocus_sigma) for t in tasks]

    results.sort(key=lambda r: r["image_id"])
    failures = [r for r in results if "error" in r]
    manifest = {
        "master_seed": plan.master_seed,
        "policy": plan.policy.to_json(),
        "entries": results,
        "complete": not failures,
    }
    (out_root / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def manifest_extents(manifest: dict) -> dict[int, Extents]:
    """Per-image Extents from a blur manifest (sharp images map to zero)."""
    out = {}
    for entry in manifest["entries"]:
        if "error" in entry:
            continue
        out[entry["image_id"]] = Extents.from_list(entry["extents"])
    return out


class EstimatorScheme(Enum):
    """Class layouts for the blur-estimator labels."""

    SIXTEEN = "sixteen"
    FOUR = "four"

    @property
    def n_classes(self) -> int:
        return 16 if self is EstimatorScheme.SIXTEEN else 4


def estimator_class_of(bc: BlurClass, scheme: EstimatorScheme) -> int:
    """Map a blur class to its estimator label.

    SIXTEEN: sharp is 0, blurred is 1 + p_index * 5 + e_index.
    FOUR: sharp and low exposures (E1-E3) fold into 0; classes 1-3 are the
    high-exposure (E4/E5) groups of P1-P3.
    """
    if scheme is EstimatorScheme.SIXTEEN:
        if bc.is_sharp:
            return 0
        return 1 + int(bc.p) * len(EClass) + int(bc.e)
    if bc.is_sharp or bc.e in (EClass.E1, EClass.E2, EClass.E3):
        return 0
    return 1 + int(bc.p)


#: Routing roles per scheme, indexed by helper below.
_SIXTEEN_ROLES = ("sharp", "p1", "p2", "p3")
_FOUR_ROLES = ("low_exposure", "p1_he", "p2_he", "p3_he")


def specialist_role(class_index: int, scheme: EstimatorScheme) -> str:
    """Grouping role an estimator class routes to."""
    if not 0 <= class_index < scheme.n_classes:
        raise ValueError(f"class index {class_index} out of range for {scheme.value} scheme")
    if scheme is EstimatorScheme.SIXTEEN:
        if class_index == 0:
            return _SIXTEEN_ROLES[0]
        return _SIXTEEN_ROLES[1 + (class_index - 1) // len(EClass)]
    return _FOUR_ROLES[class_index]


def route_specialist(class_index: int, scheme: EstimatorScheme, registry: dict[str, str]) -> str:
    """Resolve an estimator class to the registered specialist id.

    The registry binds routing roles ("sharp"/"p1"/"p2"/"p3" for SIXTEEN,
    "low_exposure"/"p1_he"/"p2_he"/"p3_he" for FOUR) to deployment ids.
    """
    role = specialist_role(class_index, scheme)
    if role not in registry:
        raise KeyError(f"no specialist registered for role {role!r} (class {class_index})")
    return registry[role]
