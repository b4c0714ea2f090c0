"""Camera-shake trajectory simulation.

A trajectory is a short continuous 2D path followed by the camera during an
exposure. Per step, velocity receives a Gaussian kick scaled by the shake
intensity (anxiety), a restoring pull toward the origin, and, on randomly
triggered jerk steps, an impulsive change of twice the current speed in a
random direction. Positions integrate velocity. The sampled path is then
translated so its bounding box sits centered inside the kernel support.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .blurspace import PClass
from .seeding import derive_seed, make_rng

_CONTAIN_RETRY_TAG = 0x7472


class TrajectoryError(RuntimeError):
    """Trajectory integration produced unusable values."""


@dataclass(frozen=True)
class TrajectoryParams:
    """Generation parameters for one shake class.

    `sigma_range` is expressed as a multiple of the nominal per-step path
    length `path_length / n_steps`; `jerk_range` bounds the per-step Bernoulli
    jerk probability; `inertia_range` bounds the restoring-force coefficient
    per unit position.
    """

    anxiety: float
    n_steps: int = 96
    support: int = 128
    path_length: float = 64.0
    inertia_range: tuple[float, float] = (0.0, 0.02)
    sigma_range: tuple[float, float] = (0.25, 1.0)
    jerk_range: tuple[float, float] = (0.0, 0.2)
    max_reseeds: int = 8

    def __post_init__(self) -> None:
        if self.anxiety < 0:
            raise ValueError("anxiety must be >= 0")
        if self.n_steps < 2:
            raise ValueError("n_steps must be >= 2")
        if self.support < 3:
            raise ValueError("support must be >= 3")
        if self.path_length <= 0:
            raise ValueError("path_length must be > 0")
        for name in ("inertia_range", "sigma_range", "jerk_range"):
            lo, hi = getattr(self, name)
            if not (0 <= lo <= hi):
                raise ValueError(f"{name} must satisfy 0 <= lo <= hi")
        if not 0 <= self.jerk_range[1] <= 1:
            raise ValueError("jerk_range must lie within [0, 1]")

    @classmethod
    def for_class(cls, p: PClass, **overrides) -> "TrajectoryParams":
        return cls(anxiety=p.anxiety, **overrides)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled camera path, already translated into the kernel support.

    `samples` is an (n_steps, 2) float64 array of (x, y) positions in
    kernel-pixel units, guaranteed to lie within [0, support - 1] on both
    axes. `drawn` holds the per-trajectory (inertia, sigma, jerk) draws.
    """

    samples: np.ndarray
    v0: np.ndarray
    drawn: tuple[float, float, float]
    seed: int
    support: int

    def __len__(self) -> int:
        return len(self.samples)


def _integrate(params: TrajectoryParams, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray, tuple]:
    """Run the velocity/position update loop from the origin."""
    step_len = params.path_length / params.n_steps
    inertia = float(rng.uniform(*params.inertia_range))
    sigma = float(rng.uniform(*params.sigma_range)) * step_len
    jerk = float(rng.uniform(*params.jerk_range))
    theta = rng.uniform(0.0, 2.0 * math.pi)
    v0 = step_len * np.array([math.cos(theta), math.sin(theta)])

    p = params.anxiety
    v = v0.copy()
    x = np.zeros(2)
    samples = np.empty((params.n_steps, 2))
    samples[0] = x
    for t in range(1, params.n_steps):
        dv = p * (rng.normal(0.0, sigma, size=2) - inertia * x)
        if rng.random() < jerk:
            phi = rng.uniform(0.0, 2.0 * math.pi)
            speed = math.hypot(v[0], v[1])
            dv = dv + 2.0 * p * speed * np.array([math.cos(phi), math.sin(phi)])
        v = v + dv
        x = x + v
        samples[t] = x
    return samples, v0, (inertia, sigma, jerk)


def _fit_to_support(samples: np.ndarray, support: int) -> np.ndarray | None:
    """Translate the path bounding box to the support center; None if too big."""
    lo = samples.min(axis=0)
    hi = samples.max(axis=0)
    if np.any(hi - lo > support - 1):
        return None
    offset = (support - 1) / 2.0 - (lo + hi) / 2.0
    placed = samples + offset
    # Guard against half-ulp overshoot from the translation arithmetic.
    return np.clip(placed, 0.0, support - 1)


def _rescale_to_support(samples: np.ndarray, support: int) -> np.ndarray:
    lo = samples.min(axis=0)
    hi = samples.max(axis=0)
    span = float((hi - lo).max())
    scale = (support - 1) / span
    center = (lo + hi) / 2.0
    scaled = (samples - center) * scale + (support - 1) / 2.0
    return np.clip(scaled, 0.0, support - 1)


def sample_trajectory(params: TrajectoryParams, seed: int) -> Trajectory:
    """Generate one trajectory; a pure function of (params, seed).

    If the integrated path does not fit the support, up to
    `params.max_reseeds` hash-chained reseeds are tried, after which the
    first attempt is uniformly rescaled to fit.
    """
    first = None
    for attempt in range(params.max_reseeds + 1):
        stream = seed if attempt == 0 else derive_seed(seed, _CONTAIN_RETRY_TAG, attempt)
        samples, v0, drawn = _integrate(params, make_rng(stream))
        if not np.isfinite(samples).all():
            raise TrajectoryError(f"non-finite trajectory for seed {stream} (base seed {seed})")
        if first is None:
            first = (samples, v0, drawn)
        placed = _fit_to_support(samples, params.support)
        if placed is not None:
            return Trajectory(placed, v0, drawn, seed, params.support)
    samples, v0, drawn = first
    placed = _rescale_to_support(samples, params.support)
    return Trajectory(placed, v0, drawn, seed, params.support)


def stationary_trajectory(params: TrajectoryParams, seed: int = 0) -> Trajectory:
    """Path that never moves: rasterizes to a delta kernel at the support center."""
    center = (params.support - 1) / 2.0
    samples = np.full((params.n_steps, 2), center)
    return Trajectory(samples, np.zeros(2), (0.0, 0.0, 0.0), seed, params.support)
