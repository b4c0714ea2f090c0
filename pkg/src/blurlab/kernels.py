"""Blur kernel rasterization, centering, extents, and defocus compounding.

Kernels are (H, W) float64 grids of nonnegative weights summing to one.
Row index is y, column index is x; the continuous kernel center is
((W - 1) / 2, (H - 1) / 2). All math runs in float64; `quantize_kernel`
rounds through float32 so that stored files reproduce metadata exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .blurspace import EClass, PClass
from .seeding import derive_seed
from .trajectory import Trajectory, TrajectoryParams, sample_trajectory, stationary_trajectory

#: Weights at or below this absolute value are treated as numerically empty.
DEFAULT_TAP_THRESHOLD = 1e-8

_CENTER_RETRY_TAG = 0x6374

UNIT_SUM_TOL = 1e-6
CENTER_TOL = 0.05  # px


class CenteringError(RuntimeError):
    """Kernel barycenter is too far from the filter center to shift safely."""


@dataclass(frozen=True)
class Extents:
    """Extreme above-threshold tap offsets of a centered kernel.

    Offsets are relative to the continuous kernel center and rounded outward,
    so x_minus/y_minus are <= 0 and x_plus/y_plus are >= 0.
    """

    x_minus: int
    x_plus: int
    y_minus: int
    y_plus: int

    def __post_init__(self) -> None:
        if not (self.x_minus <= 0 <= self.x_plus and self.y_minus <= 0 <= self.y_plus):
            raise ValueError(f"extents must straddle zero, got {self.as_list()}")

    def as_list(self) -> list[int]:
        return [self.x_minus, self.x_plus, self.y_minus, self.y_plus]

    @classmethod
    def zero(cls) -> "Extents":
        return cls(0, 0, 0, 0)

    @classmethod
    def from_list(cls, values) -> "Extents":
        xm, xp, ym, yp = (int(v) for v in values)
        return cls(xm, xp, ym, yp)


@dataclass(frozen=True)
class KernelMeta:
    p_label: str | None = None
    e_label: str | None = None
    anxiety: float | None = None
    exposure: float | None = None
    seed: int | None = None
    centered: bool = False
    barycenter: tuple[float, float] | None = None
    extents: Extents | None = None

    def to_json(self) -> dict:
        return {
            "p_class": self.p_label,
            "e_class": self.e_label,
            "seed": self.seed,
            "centered": self.centered,
            "barycenter": list(self.barycenter) if self.barycenter else None,
            "extents": self.extents.as_list() if self.extents else None,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "KernelMeta":
        p_label = obj.get("p_class")
        e_label = obj.get("e_class")
        # Class labels carry the numeric values; raw-valued kernels do not
        # round-trip those through the sidecar.
        anxiety = PClass[p_label].anxiety if p_label in PClass.__members__ else None
        exposure = EClass[e_label].exposure if e_label in EClass.__members__ else None
        return cls(
            p_label=p_label,
            e_label=e_label,
            anxiety=anxiety,
            exposure=exposure,
            seed=obj.get("seed"),
            centered=bool(obj.get("centered", False)),
            barycenter=tuple(obj["barycenter"]) if obj.get("barycenter") else None,
            extents=Extents.from_list(obj["extents"]) if obj.get("extents") else None,
        )


@dataclass(frozen=True, eq=False)
class BlurKernel:
    weights: np.ndarray
    meta: KernelMeta

    def __post_init__(self) -> None:
        w = self.weights
        if w.ndim != 2:
            raise ValueError("kernel weights must be 2D")
        if np.any(w < 0):
            raise ValueError("kernel weights must be nonnegative")
        if abs(float(w.sum()) - 1.0) > UNIT_SUM_TOL:
            raise ValueError(f"kernel weights must sum to 1 within {UNIT_SUM_TOL}, got {w.sum()}")

    @property
    def height(self) -> int:
        return self.weights.shape[0]

    @property
    def width(self) -> int:
        return self.weights.shape[1]

    @property
    def center(self) -> tuple[float, float]:
        """Continuous (x, y) center of the support grid."""
        return ((self.width - 1) / 2.0, (self.height - 1) / 2.0)


def barycenter(weights: np.ndarray) -> tuple[float, float]:
    """Weight-averaged (x, y) position of kernel mass."""
    total = float(weights.sum())
    if total <= 0:
        raise ValueError("cannot compute the barycenter of an all-zero kernel")
    ys, xs = np.indices(weights.shape)
    bx = float((weights * xs).sum() / total)
    by = float((weights * ys).sum() / total)
    return bx, by


def support_bbox(weights: np.ndarray, threshold: float = 0.0) -> tuple[int, int, int, int]:
    """Grid-index bounding box (x0, x1, y0, y1) of taps with weight > threshold."""
    mask = weights > threshold
    if not mask.any():
        raise ValueError("kernel has no taps above threshold")
    cols = np.flatnonzero(mask.any(axis=0))
    rows = np.flatnonzero(mask.any(axis=1))
    return int(cols[0]), int(cols[-1]), int(rows[0]), int(rows[-1])


def _exposure_fraction(e) -> tuple[float, str | None]:
    if isinstance(e, EClass):
        return e.exposure, e.name
    frac = float(e)
    if not 0 < frac <= 1:
        raise ValueError(f"exposure fraction must lie in (0, 1], got {frac}")
    return frac, None


def rasterize_kernel(traj: Trajectory, e, support: int | None = None) -> BlurKernel:
    """Deposit the exposed prefix of a trajectory onto the kernel grid.

    `e` is an EClass or a raw exposure fraction in (0, 1]. The first
    max(1, round(fraction * n_steps)) samples each deposit equal mass split
    bilinearly over their four neighboring pixels; the result is normalized
    to unit sum. The centered flag is left unset.
    """
    fraction, e_label = _exposure_fraction(e)
    support = traj.support if support is None else int(support)
    n_used = max(1, round(fraction * len(traj)))
    pts = traj.samples[:n_used]
    if np.any(pts < 0) or np.any(pts > support - 1):
        raise RuntimeError("trajectory sample outside the kernel support; containment is broken")

    grid = np.zeros((support, support))
    x0 = np.floor(pts[:, 0]).astype(np.intp)
    y0 = np.floor(pts[:, 1]).astype(np.intp)
    fx = pts[:, 0] - x0
    fy = pts[:, 1] - y0
    mass = 1.0 / n_used
    for ix, iy, w in (
        (x0, y0, (1 - fx) * (1 - fy)),
        (x0 + 1, y0, fx * (1 - fy)),
        (x0, y0 + 1, (1 - fx) * fy),
        (x0 + 1, y0 + 1, fx * fy),
    ):
        live = w > 0
        if not live.any():
            continue
        if np.any(ix[live] >= support) or np.any(iy[live] >= support):
            raise RuntimeError("bilinear deposit outside the kernel support; containment is broken")
        np.add.at(grid, (iy[live], ix[live]), w[live] * mass)

    grid /= grid.sum()
    meta = KernelMeta(
        e_label=e_label,
        exposure=fraction,
        seed=traj.seed,
        centered=False,
        barycenter=barycenter(grid),
    )
    return BlurKernel(grid, meta)


def _shift_add(acc: np.ndarray, src: np.ndarray, tx: int, ty: int, coeff: float) -> None:
    """acc += coeff * src translated by (tx, ty), clipping at the borders."""
    h, w = src.shape
    ys0, ys1 = max(0, ty), h + min(0, ty)
    xs0, xs1 = max(0, tx), w + min(0, tx)
    if ys0 >= ys1 or xs0 >= xs1 or coeff == 0.0:
        return
    acc[ys0:ys1, xs0:xs1] += coeff * src[ys0 - ty : ys1 - ty, xs0 - tx : xs1 - tx]


def _bilinear_translate(weights: np.ndarray, sx: float, sy: float) -> np.ndarray:
    """Subpixel translation by forward bilinear splatting (moment-preserving)."""
    ix = math.floor(sx)
    iy = math.floor(sy)
    fx = sx - ix
    fy = sy - iy
    out = np.zeros_like(weights)
    _shift_add(out, weights, ix, iy, (1 - fx) * (1 - fy))
    _shift_add(out, weights, ix + 1, iy, fx * (1 - fy))
    _shift_add(out, weights, ix, iy + 1, (1 - fx) * fy)
    _shift_add(out, weights, ix + 1, iy + 1, fx * fy)
    return out


def center_kernel(k: BlurKernel) -> BlurKernel:
    """Shift kernel mass so its barycenter lands on the continuous center.

    Mass shifted outside the support is clipped and the kernel renormalized;
    if border clipping drags the barycenter off target, the shift is repeated
    (at most twice more). A required shift larger than a quarter of the
    support indicates a generation bug and raises CenteringError.
    """
    cx, cy = k.center
    weights = k.weights
    bx, by = barycenter(weights)
    if abs(cx - bx) > k.width / 4 or abs(cy - by) > k.height / 4:
        raise CenteringError(
            f"barycenter ({bx:.2f}, {by:.2f}) needs a shift beyond support/4 "
            f"to reach ({cx:.2f}, {cy:.2f})"
        )
    for _ in range(3):
        weights = _bilinear_translate(weights, cx - bx, cy - by)
        total = weights.sum()
        if total <= 0:
            raise CenteringError("all kernel mass was clipped while centering")
        weights = weights / total
        bx, by = barycenter(weights)
        if math.hypot(bx - cx, by - cy) <= CENTER_TOL / 10:
            break
    if math.hypot(bx - cx, by - cy) > CENTER_TOL:
        raise CenteringError("centering did not converge; too much border clipping")
    meta = replace(k.meta, centered=True, barycenter=(bx, by))
    return BlurKernel(weights, meta)


def kernel_extents(k: BlurKernel, threshold: float = DEFAULT_TAP_THRESHOLD) -> Extents:
    """Extreme above-threshold tap offsets relative to the continuous center.

    Expects a centered kernel (otherwise the offsets may not straddle zero).
    Minus offsets are floored, plus offsets are ceiled, so integer expansion
    by the result always covers every above-threshold tap.
    """
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    x0, x1, y0, y1 = support_bbox(k.weights, threshold)
    cx, cy = k.center
    return Extents(
        x_minus=math.floor(x0 - cx),
        x_plus=math.ceil(x1 - cx),
        y_minus=math.floor(y0 - cy),
        y_plus=math.ceil(y1 - cy),
    )


def _gaussian_taps(sigma: float) -> np.ndarray:
    radius = math.ceil(3 * sigma)
    offsets = np.arange(-radius, radius + 1)
    g = np.exp(-(offsets**2) / (2 * sigma * sigma))
    return g / g.sum()


def _convolve1d_clip(a: np.ndarray, taps: np.ndarray, axis: int) -> np.ndarray:
    radius = (len(taps) - 1) // 2
    out = np.zeros_like(a)
    for i, g in enumerate(taps):
        off = i - radius
        if axis == 0:
            _shift_add(out, a, 0, off, g)
        else:
            _shift_add(out, a, off, 0, g)
    return out


def defocus_kernel(k: BlurKernel, sigma: float) -> BlurKernel:
    """Compound motion blur with defocus: convolve with a truncated Gaussian.

    The Gaussian is discrete with radius ceil(3*sigma); support clipping is
    followed by renormalization. Symmetry preserves the barycenter (within
    the centering tolerance) unless significant mass sits at the border.
    """
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if sigma == 0:
        return k
    taps = _gaussian_taps(sigma)
    weights = _convolve1d_clip(k.weights, taps, axis=0)
    weights = _convolve1d_clip(weights, taps, axis=1)
    weights /= weights.sum()
    meta = replace(k.meta, barycenter=barycenter(weights))
    if k.meta.extents is not None:
        meta = replace(meta, extents=kernel_extents(BlurKernel(weights, KernelMeta())))
    return BlurKernel(weights, meta)


def quantize_kernel(k: BlurKernel, threshold: float = DEFAULT_TAP_THRESHOLD) -> BlurKernel:
    """Round weights through float32 and recompute metadata from the result.

    Serialized kernels store float32 weights; quantizing before metadata
    extraction guarantees that barycenter and extents recompute bit-exactly
    from the file contents.
    """
    weights = k.weights.astype(np.float32).astype(np.float64)
    meta = replace(k.meta, barycenter=barycenter(weights))
    if k.meta.centered:
        meta = replace(meta, extents=kernel_extents(BlurKernel(weights, KernelMeta()), threshold))
    return BlurKernel(weights, meta)


def _p_inputs(p) -> tuple[float, str | None]:
    if isinstance(p, PClass):
        return p.anxiety, p.name
    value = float(p)
    if value < 0:
        raise ValueError("anxiety must be >= 0")
    return value, None


def generate_kernel(
    p,
    e,
    seed: int,
    *,
    params: TrajectoryParams | None = None,
    center: bool = True,
    defocus_sigma: float = 0.0,
    stationary: bool = False,
    threshold: float = DEFAULT_TAP_THRESHOLD,
) -> BlurKernel:
    """Produce one finished (centered, quantized) kernel for (p, e, seed).

    `p` is a PClass or raw anxiety value; `e` an EClass or exposure fraction.
    This is the single factory used by corpus generation, dataset blurring,
    and the CLI, so identical inputs yield identical kernels everywhere.
    On the rare centering failure the seed is re-derived (hash-chained, up to
    8 times), then the trajectory is progressively shrunk; both paths are
    deterministic.
    """
    anxiety, p_label = _p_inputs(p)
    if params is None:
        params = TrajectoryParams(anxiety=anxiety)

    kernel: BlurKernel | None = None
    if stationary:
        traj = stationary_trajectory(params, seed)
        kernel = rasterize_kernel(traj, e)
        if center:
            kernel = center_kernel(kernel)
    else:
        for attempt in range(params.max_reseeds + 1):
            stream = seed if attempt == 0 else derive_seed(seed, _CENTER_RETRY_TAG, attempt)
            traj = sample_trajectory(params, stream)
            raw = rasterize_kernel(traj, e)
            if not center:
                kernel = raw
                break
            try:
                kernel = center_kernel(raw)
                break
            except CenteringError:
                continue
        if kernel is None:
            # Shrink the path about its center until centering succeeds.
            traj = sample_trajectory(params, seed)
            for shrink in range(1, 9):
                scale = 0.75**shrink
                mid = (traj.samples.min(axis=0) + traj.samples.max(axis=0)) / 2
                small = Trajectory(
                    (traj.samples - mid) * scale + mid,
                    traj.v0,
                    traj.drawn,
                    traj.seed,
                    traj.support,
                )
                try:
                    kernel = center_kernel(rasterize_kernel(small, e))
                    break
                except CenteringError:
                    continue
            else:
                raise CenteringError(f"could not produce a centered kernel for seed {seed}")

    if defocus_sigma > 0:
        kernel = defocus_kernel(kernel, defocus_sigma)
    kernel = BlurKernel(
        kernel.weights,
        replace(
            kernel.meta,
            p_label=p_label,
            anxiety=anxiety,
            seed=seed,
        ),
    )
    return quantize_kernel(kernel, threshold)
