"""Covariate-shift normalization statistics merging.

Blends a model's stored ("source") per-channel statistics with those of an
incoming test minibatch ("target"), weighted by their effective sample
counts. Wiring the result into a network's normalization layers is the
integrator's job; this is the pure arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class ChannelStats:
    mu: np.ndarray
    var: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "mu", np.asarray(self.mu, dtype=np.float64))
        object.__setattr__(self, "var", np.asarray(self.var, dtype=np.float64))
        if self.mu.shape != self.var.shape or self.mu.ndim != 1:
            raise ValueError("mu and var must be 1D vectors of equal length")
        if np.any(self.var < 0):
            raise ValueError("variances must be nonnegative")

    def __len__(self) -> int:
        return len(self.mu)


def merge_batch_stats(
    source: ChannelStats,
    target: ChannelStats,
    n_source: float,
    n_target: float,
) -> ChannelStats:
    """Sample-count-weighted average of source and target statistics.

    The merged mean is n_target/(n_source+n_target) * target mean plus
    n_source/(n_source+n_target) * source mean, elementwise; variances blend
    with the same weights. Online inference typically uses n_source=16,
    n_target=1.
    """
    if len(source) != len(target):
        raise ValueError(f"channel count mismatch: {len(source)} vs {len(target)}")
    if n_source <= 0 or n_target <= 0:
        raise ValueError("sample counts must be positive")
    w_target = n_target / (n_source + n_target)
    w_source = n_source / (n_source + n_target)
    return ChannelStats(
        mu=w_target * target.mu + w_source * source.mu,
        var=w_target * target.var + w_source * source.var,
    )
