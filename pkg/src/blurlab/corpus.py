"""Kernel serialization (BFK1) and seeded corpus generation.

File layout "BFK1": bytes 0-3 magic, u32 LE width, u32 LE height, then
width*height float32 LE weights, row-major. Each kernel gets a JSON sidecar
with the same stem carrying class labels, seed, centered flag, barycenter,
and extents. A corpus directory additionally holds `manifest.json`.
"""

from __future__ import annotations

import json
import struct
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .blurspace import ALL_PAIRS, EClass, PClass
from .kernels import BlurKernel, KernelMeta, generate_kernel
from .seeding import derive_seed
from .trajectory import TrajectoryParams

KERNEL_MAGIC = b"BFK1"
KERNEL_SUFFIX = ".bfk"


class KernelFormatError(ValueError):
    """Bytes do not follow the BFK1 layout."""


def kernel_to_bytes(k: BlurKernel) -> bytes:
    header = KERNEL_MAGIC + struct.pack("<II", k.width, k.height)
    return header + k.weights.astype("<f4").tobytes()


def kernel_from_bytes(data: bytes, meta: KernelMeta | None = None) -> BlurKernel:
    if len(data) < 12 or data[:4] != KERNEL_MAGIC:
        raise KernelFormatError("missing BFK1 magic")
    width, height = struct.unpack_from("<II", data, 4)
    expected = 12 + 4 * width * height
    if len(data) != expected:
        raise KernelFormatError(f"expected {expected} bytes for {width}x{height}, got {len(data)}")
    weights = np.frombuffer(data, dtype="<f4", offset=12).reshape(height, width).astype(np.float64)
    return BlurKernel(weights, meta or KernelMeta())


def sidecar_path(kernel_path: Path) -> Path:
    return kernel_path.with_suffix(".json")


def write_kernel(path: Path, k: BlurKernel, sidecar: bool = True) -> None:
    path = Path(path)
    path.write_bytes(kernel_to_bytes(k))
    if sidecar:
        sidecar_path(path).write_text(json.dumps(k.meta.to_json(), indent=2, sort_keys=True) + "\n")


def read_kernel(path: Path) -> BlurKernel:
    path = Path(path)
    meta = None
    side = sidecar_path(path)
    if side.exists():
        meta = KernelMeta.from_json(json.loads(side.read_text()))
    return kernel_from_bytes(path.read_bytes(), meta)


def kernel_filename(p: PClass, e: EClass, index: int) -> str:
    return f"{p.name}_{e.name}_{index:05d}{KERNEL_SUFFIX}"


def _build_one(args) -> tuple[str, bytes, dict] | tuple[None, None, str]:
    p_idx, e_idx, index, master_seed, defocus_sigma, stationary = args
    try:
        p = PClass(p_idx)
        e = EClass(e_idx)
        stream = derive_seed(master_seed, p_idx, e_idx, index)
        kernel = generate_kernel(p, e, stream, defocus_sigma=defocus_sigma, stationary=stationary)
        entry = dict(kernel.meta.to_json())
        entry["file"] = kernel_filename(p, e, index)
        entry["index"] = index
        return entry["file"], kernel_to_bytes(kernel), entry
    except Exception as exc:  # noqa: BLE001 - recorded per file by the caller
        return None, None, str(exc)


def generate_corpus(
    per_pair_count: int,
    seed: int,
    out_dir: Path,
    *,
    pairs: tuple[tuple[PClass, EClass], ...] = ALL_PAIRS,
    jobs: int = 1,
    defocus_sigma: float = 0.0,
    stationary: bool = False,
) -> dict:
    """Write `per_pair_count` centered kernels per (P, E) pair plus a manifest.

    Kernel i of pair (p, e) uses the stream seed hash(seed, p, e, i), so the
    output is byte-identical regardless of generation order or worker count.
    Per-file failures are collected in the manifest instead of aborting.
    """
    if per_pair_count < 0:
        raise ValueError("per_pair_count must be >= 0")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    tasks = [
        (int(p), int(e), i, seed, defocus_sigma, stationary)
        for p, e in pairs
        for i in range(per_pair_count)
    ]
    entries: list[dict] = []
    failures: list[dict] = []

    def _store(task, result) -> None:
        fname, blob, entry = result
        if fname is None:
            p_idx, e_idx, index = task[0], task[1], task[2]
            failures.append(
                {"p_class": PClass(p_idx).name, "e_class": EClass(e_idx).name, "index": index, "error": entry}
            )
            return
        try:
            (out_dir / fname).write_bytes(blob)
            side = sidecar_path(out_dir / fname)
            meta = {k: v for k, v in entry.items() if k not in ("file", "index")}
            side.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
            entries.append(entry)
        except OSError as exc:
            failures.append({"file": fname, "error": str(exc)})

    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for task, result in zip(tasks, pool.map(_build_one, tasks, chunksize=8)):
                _store(task, result)
    else:
        for task in tasks:
            _store(task, _build_one(task))

    entries.sort(key=lambda it: (it["p_class"], it["e_class"], it["index"]))
    defaults = TrajectoryParams(anxiety=0.0)
    manifest = {
        "format": "BFK1",
        "seed": seed,
        "per_pair_count": per_pair_count,
        "pairs": [[p.name, e.name] for p, e in pairs],
        "defocus_sigma": defocus_sigma,
        "stationary": stationary,
        "trajectory": {
            "n_steps": defaults.n_steps,
            "support": defaults.support,
            "path_length": defaults.path_length,
            "inertia_range": list(defaults.inertia_range),
            "sigma_range": list(defaults.sigma_range),
            "jerk_range": list(defaults.jerk_range),
        },
        "kernels": entries,
        "failures": failures,
        "complete": not failures,
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest
