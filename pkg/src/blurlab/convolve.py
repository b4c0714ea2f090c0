"""Sparse-tap image convolution with reflection padding.

Image buffers are numpy arrays, float32 in [0, 1], row-major, either (H, W)
or (H, W, C) with interleaved channels. The orientation is true convolution:
a tap at offset (dx, dy) pulls the image value at (x - dx, y - dy). Border
handling mirrors without repeating the edge pixel (indices ... 2, 1, 0, 1,
2 ...), applied repeatedly for offsets deeper than the image.

The direct dense implementation (`convolve_dense_oracle`) exists purely as a
slow reference for validating the sparse engine; keep it naive.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .kernels import DEFAULT_TAP_THRESHOLD, UNIT_SUM_TOL, BlurKernel, KernelMeta


@dataclass(frozen=True, eq=False)
class SparseKernel:
    """Above-threshold kernel taps with integer offsets from the center pixel.

    The reference pixel is ((W - 1) // 2, (H - 1) // 2); on even-sized grids
    a subpixel-centered delta therefore becomes up to four taps.
    """

    dx: np.ndarray
    dy: np.ndarray
    w: np.ndarray
    meta: KernelMeta | None = None

    def __post_init__(self) -> None:
        if not (len(self.dx) == len(self.dy) == len(self.w)):
            raise ValueError("tap arrays must share one length")
        if len(self.w) == 0:
            raise ValueError("sparse kernel needs at least one tap")
        if abs(float(self.w.sum()) - 1.0) > UNIT_SUM_TOL:
            raise ValueError("sparse taps must sum to 1")

    def __len__(self) -> int:
        return len(self.w)

    def taps(self):
        """Iterate (dx, dy, weight) tuples."""
        return zip(self.dx.tolist(), self.dy.tolist(), self.w.tolist())


def sparsify_kernel(k: BlurKernel, threshold: float = DEFAULT_TAP_THRESHOLD) -> SparseKernel:
    """Keep taps with weight > threshold, renormalized to unit sum."""
    rows, cols = np.nonzero(k.weights > threshold)
    if len(rows) == 0:
        raise ValueError("no kernel taps above threshold")
    weights = k.weights[rows, cols]
    weights = weights / weights.sum()
    cx = (k.width - 1) // 2
    cy = (k.height - 1) // 2
    return SparseKernel(cols - cx, rows - cy, weights, k.meta)


def reflect_indices(idx: np.ndarray, n: int) -> np.ndarray:
    """Mirror indices into [0, n) without repeating the edge sample."""
    if n == 1:
        return np.zeros_like(idx)
    period = 2 * n - 2
    m = np.mod(idx, period)
    return np.where(m >= n, period - m, m)


def _accumulate_rows(img, sk, row_maps, col_maps, y0, y1):
    acc = np.zeros(img[y0:y1].shape, dtype=np.float64)
    for t in range(len(sk)):
        acc += sk.w[t] * img[np.ix_(row_maps[t][y0:y1], col_maps[t])]
    return acc


def convolve_reflect(img: np.ndarray, sk: SparseKernel, jobs: int = 1) -> np.ndarray:
    """Convolve an image with sparse taps under reflection padding.

    Output has the input's shape and float32 dtype. Accumulation runs in
    float64 with a fixed per-pixel tap order, so results are independent of
    the row partitioning used for `jobs` > 1.
    """
    img = np.asarray(img, dtype=np.float32)
    if img.ndim not in (2, 3):
        raise ValueError("image must be (H, W) or (H, W, C)")
    h, w = img.shape[:2]
    ys = np.arange(h)
    xs = np.arange(w)
    row_maps = [reflect_indices(ys - int(dy), h) for dy in sk.dy]
    col_maps = [reflect_indices(xs - int(dx), w) for dx in sk.dx]

    if jobs <= 1 or h < 2 * jobs:
        acc = _accumulate_rows(img, sk, row_maps, col_maps, 0, h)
        return acc.astype(np.float32)

    bounds = np.linspace(0, h, jobs + 1).astype(int)
    blocks = [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if a < b]
    out = np.empty(img.shape, dtype=np.float32)
    with ThreadPoolExecutor(max_workers=len(blocks)) as pool:
        futures = [pool.submit(_accumulate_rows, img, sk, row_maps, col_maps, a, b) for a, b in blocks]
        for (a, b), fut in zip(blocks, futures):
            out[a:b] = fut.result().astype(np.float32)
    return out


def _reflect_scalar(i: int, n: int) -> int:
    if n == 1:
        return 0
    period = 2 * n - 2
    m = i % period
    return period - m if m >= n else m


def convolve_dense_oracle(img: np.ndarray, k: BlurKernel) -> np.ndarray:
    """Quadruple-loop reference convolution; small inputs only."""
    img = np.asarray(img, dtype=np.float32)
    squeeze = img.ndim == 2
    if squeeze:
        img = img[:, :, None]
    h, w, channels = img.shape
    cy = (k.height - 1) // 2
    cx = (k.width - 1) // 2
    weights = k.weights
    out = np.zeros((h, w, channels), dtype=np.float64)
    for y in range(h):
        for x in range(w):
            for r in range(k.height):
                for col in range(k.width):
                    kw = weights[r, col]
                    if kw == 0.0:
                        continue
                    sy = _reflect_scalar(y - (r - cy), h)
                    sx = _reflect_scalar(x - (col - cx), w)
                    for c in range(channels):
                        out[y, x, c] += kw * float(img[sy, sx, c])
    out = out.astype(np.float32)
    return out[:, :, 0] if squeeze else out
