import math

import numpy as np
import pytest

from blurlab.blurspace import EClass, PClass
from blurlab.kernels import (
    BlurKernel,
    CenteringError,
    Extents,
    KernelMeta,
    barycenter,
    center_kernel,
    defocus_kernel,
    generate_kernel,
    kernel_extents,
    rasterize_kernel,
    support_bbox,
)
from blurlab.trajectory import Trajectory, TrajectoryParams, sample_trajectory, stationary_trajectory


def _line_trajectory(x0=10.0, y0=20.0, step=0.5, n=96, support=128):
    samples = np.stack([x0 + step * np.arange(n), np.full(n, y0)], axis=1)
    return Trajectory(samples, np.array([step, 0.0]), (0.0, 0.0, 0.0), 0, support)


def _bary_oracle(w):
    """Independent plain-loop barycenter."""
    sx = sy = total = 0.0
    for y in range(w.shape[0]):
        for x in range(w.shape[1]):
            v = float(w[y, x])
            total += v
            sx += v * x
            sy += v * y
    return sx / total, sy / total


def _extents_oracle(w, thr, cx, cy):
    """Exhaustive tap scan with outward rounding."""
    offs_x = []
    offs_y = []
    for y in range(w.shape[0]):
        for x in range(w.shape[1]):
            if w[y, x] > thr:
                offs_x.append(x - cx)
                offs_y.append(y - cy)
    return (
        math.floor(min(offs_x)),
        math.ceil(max(offs_x)),
        math.floor(min(offs_y)),
        math.ceil(max(offs_y)),
    )


class TestRasterize:
    def test_stationary_is_delta(self):
        # Odd support puts the center on a pixel: a single tap of weight 1.
        params = TrajectoryParams(anxiety=0.005, support=127)
        k = rasterize_kernel(stationary_trajectory(params), EClass.E5)
        assert k.weights[63, 63] == pytest.approx(1.0)
        assert np.count_nonzero(k.weights) == 1

    def test_e1_uses_exactly_four_samples(self):
        traj = _line_trajectory()
        k = rasterize_kernel(traj, EClass.E1)
        # samples at x = 10, 10.5, 11, 11.5 deposit into columns 10..12 only
        assert support_bbox(k.weights) == (10, 12, 20, 20)

    def test_prefix_sample_counts(self):
        traj = _line_trajectory()
        expected_last_col = {
            EClass.E1: 12,   # 4 samples ending at x=11.5
            EClass.E2: 15,   # 10 samples ending at x=14.5
            EClass.E3: 19,   # 19 samples ending at x=19.0
            EClass.E4: 34,   # 48 samples ending at x=33.5
            EClass.E5: 58,   # 96 samples ending at x=57.5
        }
        for e, last in expected_last_col.items():
            assert support_bbox(rasterize_kernel(traj, e).weights)[1] == last

    def test_unit_sum(self):
        for seed in range(10):
            traj = sample_trajectory(TrajectoryParams.for_class(PClass.P1), seed)
            for e in EClass:
                k = rasterize_kernel(traj, e)
                assert abs(k.weights.sum() - 1.0) <= 1e-6

    def test_meta_flags(self):
        traj = sample_trajectory(TrajectoryParams.for_class(PClass.P2), 3)
        k = rasterize_kernel(traj, EClass.E4)
        assert not k.meta.centered
        assert k.meta.e_label == "E4"
        assert k.meta.exposure == pytest.approx(0.5)

    def test_rejects_samples_outside_support(self):
        traj = _line_trajectory()
        with pytest.raises(RuntimeError):
            rasterize_kernel(traj, EClass.E5, support=32)


class TestCenter:
    def test_offset_delta_recentred(self):
        # Mass at (x=70, y=63.5) in 128x128 must land at (63.5, 63.5).
        w = np.zeros((128, 128))
        w[63, 70] = 0.5
        w[64, 70] = 0.5
        k = center_kernel(BlurKernel(w, KernelMeta()))
        assert barycenter(k.weights) == pytest.approx((63.5, 63.5), abs=1e-9)
        # Mass splits over the four pixels around the continuous center.
        assert k.weights[63, 63] == pytest.approx(0.25)
        assert k.weights[64, 64] == pytest.approx(0.25)

    def test_symmetric_kernel_unchanged(self):
        w = np.zeros((128, 128))
        for x0 in (58, 68):  # continuous x = 58.5 and 68.5, y = 63.5
            for dy in (0, 1):
                for dx in (0, 1):
                    w[63 + dy, x0 + dx] = 0.125
        k = BlurKernel(w, KernelMeta())
        out = center_kernel(k)
        assert np.array_equal(out.weights, w)

    def test_random_kernels_hit_center(self):
        for seed in range(5):
            traj = sample_trajectory(TrajectoryParams.for_class(PClass.P1), seed)
            k = center_kernel(rasterize_kernel(traj, EClass.E3))
            bx, by = _bary_oracle(k.weights)
            assert math.hypot(bx - 63.5, by - 63.5) <= 0.05
            assert k.meta.centered

    def test_large_shift_raises(self):
        w = np.zeros((128, 128))
        w[5, 5] = 1.0
        with pytest.raises(CenteringError):
            center_kernel(BlurKernel(w, KernelMeta()))


class TestExtents:
    def test_center_delta_is_zero(self):
        w = np.zeros((15, 15))
        w[7, 7] = 1.0
        assert kernel_extents(BlurKernel(w, KernelMeta())).as_list() == [0, 0, 0, 0]

    def test_two_tap_example(self):
        w = np.zeros((15, 15))
        w[7, 4] = 0.5    # offset (-3, 0)
        w[9, 12] = 0.5   # offset (+5, +2)
        ext = kernel_extents(BlurKernel(w, KernelMeta()))
        assert (ext.x_minus, ext.x_plus, ext.y_minus, ext.y_plus) == (-3, 5, 0, 2)

    def test_matches_exhaustive_scan(self):
        for seed in range(5):
            k = generate_kernel(PClass.P2, EClass.E4, seed)
            ext = kernel_extents(k)
            oracle = _extents_oracle(k.weights, 1e-8, 63.5, 63.5)
            assert (ext.x_minus, ext.x_plus, ext.y_minus, ext.y_plus) == oracle

    def test_all_zero_rejected(self):
        with pytest.raises(ValueError):
            support_bbox(np.zeros((8, 8)))

    def test_extents_must_straddle_zero(self):
        with pytest.raises(ValueError):
            Extents(1, 2, 0, 0)


class TestDefocus:
    def test_sigma_zero_identity(self):
        k = generate_kernel(PClass.P1, EClass.E2, 11)
        out = defocus_kernel(k, 0.0)
        assert out is k

    def test_unit_sum_preserved(self):
        k = generate_kernel(PClass.P3, EClass.E5, 2)
        for sigma in (0.5, 1.0, 2.5):
            out = defocus_kernel(k, sigma)
            assert abs(out.weights.sum() - 1.0) <= 1e-6

    def test_delta_matches_closed_form_gaussian(self):
        w = np.zeros((33, 33))
        w[16, 16] = 1.0
        out = defocus_kernel(BlurKernel(w, KernelMeta()), 1.0)
        # Directly evaluated normalized discrete Gaussian, radius ceil(3*1)=3.
        offsets = np.arange(-3, 4)
        g = np.exp(-(offsets**2) / 2.0)
        g /= g.sum()
        expected = np.zeros((33, 33))
        expected[13:20, 13:20] = np.outer(g, g)
        assert np.abs(out.weights - expected).max() <= 1e-6

    def test_barycenter_preserved(self):
        k = generate_kernel(PClass.P2, EClass.E5, 8)
        out = defocus_kernel(k, 1.5)
        bx, by = barycenter(out.weights)
        assert math.hypot(bx - 63.5, by - 63.5) <= 0.05

    def test_negative_sigma_rejected(self):
        k = generate_kernel(PClass.P1, EClass.E1, 0)
        with pytest.raises(ValueError):
            defocus_kernel(k, -0.1)


class TestQuantizeAndFactory:
    def test_quantize_roundtrips_float32(self):
        k = generate_kernel(PClass.P1, EClass.E5, 21)
        assert np.array_equal(k.weights, k.weights.astype(np.float32).astype(np.float64))

    def test_metadata_matches_quantized_weights(self):
        k = generate_kernel(PClass.P2, EClass.E3, 5)
        assert k.meta.barycenter == pytest.approx(_bary_oracle(k.weights), abs=1e-12)
        oracle = _extents_oracle(k.weights, 1e-8, 63.5, 63.5)
        ext = k.meta.extents
        assert (ext.x_minus, ext.x_plus, ext.y_minus, ext.y_plus) == oracle

    def test_factory_deterministic(self):
        a = generate_kernel(PClass.P3, EClass.E1, 77)
        b = generate_kernel(PClass.P3, EClass.E1, 77)
        assert np.array_equal(a.weights, b.weights)
        assert a.meta == b.meta

    def test_factory_labels(self):
        k = generate_kernel(PClass.P1, EClass.E4, 3)
        assert (k.meta.p_label, k.meta.e_label, k.meta.seed) == ("P1", "E4", 3)

    def test_raw_values_accepted(self):
        k = generate_kernel(0.002, 0.3, 4)
        assert k.meta.p_label is None
        assert k.meta.anxiety == pytest.approx(0.002)
        assert abs(k.weights.sum() - 1.0) <= 1e-6
