"""Kernel shape statistics and anisotropic grid resampling.

Directional blur erases texture along its long axis; the compensating
transform undersamples the blurred axis before a model's backbone and
resamples activations back afterwards. Factors derive from the kernel's
weighted spread per axis; resampling is axis-aligned bilinear.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kernels import BlurKernel

#: Spread regularizer (px) so near-delta kernels stay at full resolution.
SPREAD_EPS = 0.5

#: Lower bound on either undersampling factor.
MIN_FACTOR = 0.25


@dataclass(frozen=True)
class AxisSpreads:
    """Weighted standard deviations of kernel mass.

    `s_x`/`s_y` are the axis-aligned marginal spreads; `sigma_major`,
    `sigma_minor`, and `theta` come from the eigen-decomposition of the
    weighted covariance (theta is the major-axis angle in (-pi/2, pi/2]).
    """

    s_x: float
    s_y: float
    theta: float
    sigma_major: float
    sigma_minor: float

    def __post_init__(self) -> None:
        if self.s_x < 0 or self.s_y < 0:
            raise ValueError("marginal spreads must be nonnegative")
        if self.sigma_major < self.sigma_minor - 1e-12 or self.sigma_minor < -1e-12:
            raise ValueError("principal spreads must satisfy major >= minor >= 0")

    @property
    def eccentricity(self) -> float:
        """Ratio of principal spreads; infinite for perfectly linear mass."""
        if self.sigma_minor == 0:
            return math.inf if self.sigma_major > 0 else 1.0
        return self.sigma_major / self.sigma_minor


def kernel_spreads(k: BlurKernel) -> AxisSpreads:
    """Weighted mean/covariance statistics over kernel tap positions."""
    w = k.weights
    total = float(w.sum())
    if total <= 0:
        raise ValueError("cannot compute spreads of an all-zero kernel")
    ys, xs = np.indices(w.shape)
    mx = float((w * xs).sum()) / total
    my = float((w * ys).sum()) / total
    dx = xs - mx
    dy = ys - my
    cxx = float((w * dx * dx).sum()) / total
    cyy = float((w * dy * dy).sum()) / total
    cxy = float((w * dx * dy).sum()) / total
    cov = np.array([[cxx, cxy], [cxy, cyy]])
    eigvals, eigvecs = np.linalg.eigh(cov)
    major = eigvecs[:, 1]
    theta = math.atan2(major[1], major[0])
    if theta > math.pi / 2:
        theta -= math.pi
    elif theta <= -math.pi / 2:
        theta += math.pi
    return AxisSpreads(
        s_x=math.sqrt(max(cxx, 0.0)),
        s_y=math.sqrt(max(cyy, 0.0)),
        theta=theta,
        sigma_major=math.sqrt(max(float(eigvals[1]), 0.0)),
        sigma_minor=math.sqrt(max(float(eigvals[0]), 0.0)),
    )


def squint_factors(sp: AxisSpreads, eps: float = SPREAD_EPS, f_min: float = MIN_FACTOR) -> tuple[float, float]:
    """Per-axis undersampling factors in (0, 1].

    Each factor is the square root of the opposing/own spread ratio (with an
    epsilon guard), clamped to [f_min, 1]; the pair is then scaled so the
    less-blurred axis keeps full resolution. Isotropic or sharp kernels map
    to (1, 1).
    """
    fx = math.sqrt((sp.s_y + eps) / (sp.s_x + eps))
    fy = math.sqrt((sp.s_x + eps) / (sp.s_y + eps))
    fx = min(max(fx, f_min), 1.0)
    fy = min(max(fy, f_min), 1.0)
    m = max(fx, fy)
    return fx / m, fy / m


def _axis_coords(n_out: int, n_in: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if n_out == 1:
        src = np.array([(n_in - 1) / 2.0])
    else:
        src = np.arange(n_out) * ((n_in - 1) / (n_out - 1))
    i0 = np.floor(src).astype(np.intp)
    i0 = np.minimum(i0, n_in - 1)
    frac = src - i0
    i1 = np.minimum(i0 + 1, n_in - 1)
    return i0, i1, frac


def _resize_bilinear(a: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    a64 = np.asarray(a, dtype=np.float64)
    squeeze = a64.ndim == 2
    if squeeze:
        a64 = a64[:, :, None]
    y0, y1, wy = _axis_coords(out_h, a64.shape[0])
    x0, x1, wx = _axis_coords(out_w, a64.shape[1])
    wy = wy[:, None, None]
    wx = wx[None, :, None]
    top = (1 - wx) * a64[np.ix_(y0, x0)] + wx * a64[np.ix_(y0, x1)]
    bot = (1 - wx) * a64[np.ix_(y1, x0)] + wx * a64[np.ix_(y1, x1)]
    out = ((1 - wy) * top + wy * bot).astype(np.float32)
    return out[:, :, 0] if squeeze else out


def _check_factors(f_x: float, f_y: float) -> None:
    if not (0 < f_x <= 1 and 0 < f_y <= 1):
        raise ValueError(f"factors must lie in (0, 1], got ({f_x}, {f_y})")


def resample_grid(g: np.ndarray, f_x: float, f_y: float) -> np.ndarray:
    """Bilinearly shrink a grid to (round(dim * f), minimum 1) per axis."""
    _check_factors(f_x, f_y)
    h, w = g.shape[:2]
    out_w = max(1, round(w * f_x))
    out_h = max(1, round(h * f_y))
    return _resize_bilinear(g, out_h, out_w)


def unsquint_grid(g: np.ndarray, f_x: float, f_y: float, target_w: int, target_h: int) -> np.ndarray:
    """Bilinearly resample a squinted grid back to the target dimensions."""
    _check_factors(f_x, f_y)
    if target_w < 1 or target_h < 1:
        raise ValueError("target dimensions must be >= 1")
    return _resize_bilinear(g, target_h, target_w)
