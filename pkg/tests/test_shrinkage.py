import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from declip.shrinkage import (
    Neighborhood, clip_conjugate, hard_threshold_k, hinge, shrink_social, soft_threshold,
)


def sort_and_mask(z, k):
    idx = sorted(range(z.size), key=lambda i: (-abs(z[i]), i))[:k]
    out = np.zeros_like(z)
    out[idx] = z[idx]
    return out


class TestHardThreshold:
    def test_example(self):
        np.testing.assert_array_equal(hard_threshold_k(np.array([3, -1, 2, 0.5]), 2), [3, 0, 2, 0])

    def test_extremes(self):
        z = np.array([1.0, -4.0, 2.5])
        np.testing.assert_array_equal(hard_threshold_k(z, 0), np.zeros(3))
        np.testing.assert_array_equal(hard_threshold_k(z, 3), z)

    def test_ties_lowest_index(self):
        np.testing.assert_array_equal(hard_threshold_k(np.array([1.0, -1.0, 1.0]), 2), [1.0, -1.0, 0.0])

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            hard_threshold_k(np.ones(4), 5)
        with pytest.raises(ValueError):
            hard_threshold_k(np.ones(8), 6, conjugate_pairs=True)

    @pytest.mark.parametrize("seed", range(5))
    def test_sort_oracle(self, seed):
        rng = np.random.default_rng(seed)
        z = rng.standard_normal(30) + 1j * rng.standard_normal(30)
        for k in (0, 1, 7, 30):
            np.testing.assert_array_equal(hard_threshold_k(z, k), sort_and_mask(z, k))

    def test_rows_with_per_row_k(self):
        rng = np.random.default_rng(1)
        z = rng.standard_normal((3, 10))
        out = hard_threshold_k(z, np.array([1, 4, 9]))
        for t, k in enumerate((1, 4, 9)):
            np.testing.assert_array_equal(out[t], sort_and_mask(z[t], k))

    @settings(max_examples=50)
    @given(st.integers(0, 9999), st.integers(0, 9))
    def test_pair_counting(self, seed, k):
        rng = np.random.default_rng(seed)
        P = 16
        z = np.fft.fft(rng.standard_normal(P))
        out = hard_threshold_k(z, k, conjugate_pairs=True)
        kept_pairs = np.count_nonzero(out[: P // 2 + 1])
        assert kept_pairs == min(k, P // 2 + 1)
        np.testing.assert_allclose(out[1:][::-1], np.conj(out[1:]))
        assert np.max(np.abs(np.fft.ifft(out).imag)) < 1e-12

    @given(st.integers(0, 9999), st.integers(0, 20))
    def test_nnz(self, seed, k):
        rng = np.random.default_rng(seed)
        z = rng.standard_normal(20) * (rng.random(20) < 0.5)
        assert np.count_nonzero(hard_threshold_k(z, k)) == min(k, np.count_nonzero(z))


class TestSoft:
    def test_examples(self):
        assert soft_threshold(2.0, 0.5) == 1.5
        assert soft_threshold(-0.3, 0.5) == 0.0

    @pytest.mark.parametrize("phi", np.linspace(-np.pi, np.pi, 7))
    def test_phase(self, phi):
        out = soft_threshold(2 * np.exp(1j * phi), 1.0)
        assert abs(out - np.exp(1j * phi)) < 1e-15

    @pytest.mark.parametrize("z,tau", [(2.0, 0.5), (-0.7, 0.3), (0.2, 0.4), (-3.1, 1.7)])
    def test_grid_prox_oracle(self, z, tau):
        grid = np.arange(-5, 5, 1e-4)
        v = grid[np.argmin(0.5 * (grid - z) ** 2 + tau * np.abs(grid))]
        assert abs(soft_threshold(z, tau) - v) <= 1e-4

    def test_weighted(self):
        out = soft_threshold(np.array([1.0, 1.0, -1.0]), np.array([0.2, 2.0, 0.5]))
        np.testing.assert_allclose(out, [0.8, 0.0, -0.5])

    def test_clip_examples(self):
        assert clip_conjugate(2.0, 0.5) == 0.5
        assert clip_conjugate(-0.3, 0.5) == -0.3

    def test_moreau_identity(self):
        rng = np.random.default_rng(0)
        z = rng.standard_normal(100) + 1j * rng.standard_normal(100)
        w = rng.random(100)
        np.testing.assert_array_equal(clip_conjugate(z, w) + soft_threshold(z, w), z)
        assert np.all(np.abs(clip_conjugate(z, w)) <= w + 1e-15)


class TestSocial:
    def test_ew_example(self):
        assert shrink_social(np.array([[2.0]]), 1.0, "EW")[0, 0] == 1.5

    def test_l_is_soft(self):
        z = np.random.default_rng(0).standard_normal((4, 5))
        np.testing.assert_array_equal(shrink_social(z, 0.3, "L"), soft_threshold(z, 0.3))

    def test_pew_1x1_is_ew(self):
        rng = np.random.default_rng(1)
        z = rng.standard_normal((6, 9)) + 1j * rng.standard_normal((6, 9))
        np.testing.assert_array_equal(
            shrink_social(z, 0.8, "PEW", Neighborhood(1, 1)), shrink_social(z, 0.8, "EW"))

    def test_wgl_direct_oracle(self):
        rng = np.random.default_rng(2)
        z = rng.standard_normal((3, 3))
        lam = 0.9
        exp = np.empty_like(z)
        for f in range(3):
            for t in range(3):
                nb = [z[f, s] for s in (t - 1, t, t + 1) if 0 <= s < 3]
                norm = np.sqrt(sum(v * v for v in nb))
                exp[f, t] = z[f, t] * max(1 - lam / norm, 0)
        np.testing.assert_allclose(shrink_social(z, lam, "WGL", Neighborhood(1, 3)), exp, rtol=1e-14)

    def test_missing_neighborhood(self):
        with pytest.raises(ValueError, match="neighborhood"):
            shrink_social(np.ones((2, 2)), 1.0, "PEW")
        with pytest.raises(ValueError):
            Neighborhood(2, 3)

    def test_default_neighborhood(self):
        nb = Neighborhood()
        assert (nb.extent_freq, nb.extent_time) == (3, 7)

    @pytest.mark.parametrize("kind", ["L", "WGL", "EW", "PEW"])
    def test_nonexpansive_and_phase_invariant(self, kind):
        rng = np.random.default_rng(3)
        z = rng.standard_normal((8, 12)) + 1j * rng.standard_normal((8, 12))
        nb = Neighborhood()
        out = shrink_social(z, 0.7, kind, nb)
        assert np.all(np.abs(out) <= np.abs(z) + 1e-15)
        rot = np.exp(0.83j)
        np.testing.assert_allclose(shrink_social(z * rot, 0.7, kind, nb), out * rot, atol=1e-13)

    def test_conjugate_symmetric_rows(self):
        rng = np.random.default_rng(4)
        z = np.fft.fft(rng.standard_normal((10, 16)), axis=0)  # 10 bins x 16 frames
        out = shrink_social(z, 1.0, "PEW", Neighborhood(3, 3), conjugate_symmetric=True)
        np.testing.assert_allclose(out[1:][::-1], np.conj(out[1:]), atol=1e-13)


class TestHinge:
    def test_examples(self):
        np.testing.assert_array_equal(hinge([-0.2, 0.3, 0.0]), [-0.2, 0.0, 0.0])

    def test_gradient_fd(self):
        rng = np.random.default_rng(0)
        u = rng.standard_normal(20)
        f = lambda v: 0.5 * np.sum(hinge(v) ** 2)
        h = 1e-6
        fd = np.array([(f(u + h * e) - f(u - h * e)) / (2 * h) for e in np.eye(20)])
        np.testing.assert_allclose(fd, hinge(u), atol=1e-6)
