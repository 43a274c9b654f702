import numpy as np
import numpy.testing as npt
import pytest

from pixsr.baselines import (
    bicubic_upsample,
    box_mean,
    cubic_kernel,
    guide_to_gray,
    guided_filter,
    guided_filter_upsample,
)
from pixsr.imaging import block_downsample


def keys_weight_scalar(t):
    """Independent scalar Keys kernel, a = -0.5."""
    t = abs(t)
    if t <= 1.0:
        return (1.5 * t - 2.5) * t * t + 1.0
    if t < 2.0:
        return ((-0.5 * t + 2.5) * t - 4.0) * t + 2.0
    return 0.0


def bicubic_oracle(s, d):
    """Slow direct 2-D convolution with clamped edges and row normalization."""
    m = s.shape[0]
    n = m * d
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            u = (i + 0.5) / d - 0.5
            v = (j + 0.5) / d - 0.5
            i0, j0 = int(np.floor(u)), int(np.floor(v))
            acc = 0.0
            wsum = 0.0
            for a in range(-1, 3):
                for b in range(-1, 3):
                    w = keys_weight_scalar(u - (i0 + a)) * keys_weight_scalar(v - (j0 + b))
                    si = min(max(i0 + a, 0), m - 1)
                    sj = min(max(j0 + b, 0), m - 1)
                    acc += w * s[si, sj]
                    wsum += w
            out[i, j] = acc / wsum
    return out


class TestBicubic:
    def test_kernel_basics(self):
        assert cubic_kernel(0.0) == 1.0
        assert cubic_kernel(1.0) == 0.0
        assert cubic_kernel(2.0) == 0.0
        assert cubic_kernel(3.0) == 0.0

    def test_constant_source_exact(self):
        for c in (2.5, 7.0, -3.25):
            out = bicubic_upsample(np.full((4, 4), c), 8)
            npt.assert_array_equal(out, np.full((32, 32), c))

    def test_zero_source(self):
        npt.assert_array_equal(bicubic_upsample(np.zeros((4, 4)), 4), 0.0)

    def test_linear_ramp_interior(self):
        m, d = 8, 4
        ramp = np.arange(m, dtype=np.float64)[np.newaxis, :].repeat(m, axis=0)
        out = bicubic_upsample(ramp, d)
        i = np.arange(m * d)
        expected = (i + 0.5) / d - 0.5
        interior = slice(2 * d, -2 * d)  # away from clamped edges
        want = np.broadcast_to(expected[interior], out[interior, interior].shape)
        npt.assert_allclose(out[interior, interior], want, atol=1e-6)

    def test_matches_direct_convolution_oracle(self):
        rng = np.random.default_rng(60)
        s = rng.normal(size=(8, 8))
        npt.assert_allclose(bicubic_upsample(s, 4), bicubic_oracle(s, 4), atol=1e-6)

    def test_block_consistency_on_smooth_image(self):
        # downsampling the upsampled image reproduces a smooth source in the
        # interior; the clamped border biases the outermost blocks
        i = np.arange(8.0)
        s = 0.5 * i[:, np.newaxis] + 0.25 * i[np.newaxis, :]
        down = block_downsample(bicubic_upsample(s, 4), 4)
        npt.assert_allclose(down[2:-2, 2:-2], s[2:-2, 2:-2], atol=1e-10)

    def test_identity_factor(self):
        rng = np.random.default_rng(61)
        s = rng.normal(size=(5, 5))
        npt.assert_allclose(bicubic_upsample(s, 1), s, atol=1e-12)

    def test_too_small_source(self):
        with pytest.raises(ValueError):
            bicubic_upsample(np.zeros((1, 1)), 4)


def box_mean_oracle(img, r):
    h, w = img.shape
    out = np.zeros((h, w))
    for i in range(h):
        for j in range(w):
            lo_i, hi_i = max(i - r, 0), min(i + r + 1, h)
            lo_j, hi_j = max(j - r, 0), min(j + r + 1, w)
            out[i, j] = img[lo_i:hi_i, lo_j:hi_j].mean()
    return out


def guided_filter_oracle(guide, p, r, eps):
    mean_i = box_mean_oracle(guide, r)
    mean_p = box_mean_oracle(p, r)
    cov = box_mean_oracle(guide * p, r) - mean_i * mean_p
    var = box_mean_oracle(guide * guide, r) - mean_i * mean_i
    a = cov / (var + eps)
    b = mean_p - a * mean_i
    return box_mean_oracle(a, r) * guide + box_mean_oracle(b, r)


class TestGuidedFilter:
    def test_box_mean_matches_oracle(self):
        rng = np.random.default_rng(62)
        img = rng.normal(size=(13, 13))
        npt.assert_allclose(box_mean(img, 3), box_mean_oracle(img, 3), rtol=1e-12, atol=1e-12)

    def test_self_guidance_identity(self):
        rng = np.random.default_rng(63)
        img = rng.normal(size=(16, 16))
        out = guided_filter(img, img, radius=2, eps=0.0)
        npt.assert_allclose(out, img, atol=1e-8)

    def test_huge_eps_approaches_double_box_mean(self):
        # as eps grows, a -> 0 and b -> the window mean, so the output tends
        # to the box mean of the box-mean image
        rng = np.random.default_rng(64)
        img = rng.normal(size=(16, 16))
        guide = rng.normal(size=(16, 16))
        out = guided_filter(guide, img, radius=2, eps=1e12)
        limit = box_mean(box_mean(img, 2), 2)
        assert np.max(np.abs(out - limit)) <= 1e-4

    def test_matches_per_window_oracle(self):
        rng = np.random.default_rng(65)
        guide = rng.normal(size=(16, 16))
        img = rng.normal(size=(16, 16))
        got = guided_filter(guide, img, radius=2, eps=1e-2)
        want = guided_filter_oracle(guide, img, 2, 1e-2)
        npt.assert_allclose(got, want, rtol=1e-10, atol=1e-10)

    def test_invariant_to_constant_guide_shift(self):
        rng = np.random.default_rng(66)
        guide = rng.normal(size=(12, 12))
        img = rng.normal(size=(12, 12))
        a = guided_filter(guide, img, radius=2, eps=1e-3)
        b = guided_filter(guide + 100.0, img, radius=2, eps=1e-3)
        npt.assert_allclose(a, b, atol=1e-10)

    def test_input_validation(self):
        with pytest.raises(ValueError):
            guided_filter(np.zeros((4, 4)), np.zeros((5, 5)), radius=1, eps=0.1)
        with pytest.raises(ValueError):
            guided_filter(np.zeros((4, 4)), np.zeros((4, 4)), radius=0, eps=0.1)
        with pytest.raises(ValueError):
            guided_filter(np.zeros((4, 4)), np.zeros((4, 4)), radius=1, eps=-0.1)


class TestGuidedFilterUpsample:
    def test_gray_conversion_is_channel_mean(self):
        guide = np.stack([np.full((4, 4), 1.0), np.full((4, 4), 3.0)], axis=-1)
        npt.assert_array_equal(guide_to_gray(guide), np.full((4, 4), 2.0))

    def test_end_to_end_shapes(self):
        rng = np.random.default_rng(67)
        source = rng.normal(size=(8, 8))
        guide = rng.normal(size=(32, 32, 3))
        out = guided_filter_upsample(source, guide)
        assert out.shape == (32, 32)
        assert np.all(np.isfinite(out))

    def test_size_mismatch(self):
        with pytest.raises(ValueError):
            guided_filter_upsample(np.zeros((8, 8)), np.zeros((33, 33, 3)))
