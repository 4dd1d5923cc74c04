import numpy as np
import pytest

from declip.frames import TransformSpec
from declip.shrinkage import Neighborhood
from declip.signal import clip, clip_to_target_sdr
from declip.social import SocialConfig, smooth_objective, social_declip, social_gradient

SPEC = TransformSpec("gabor", "hann", 64, 16, 128)


def instance(seed=0, n=300, theta=0.8):
    x = np.random.default_rng(seed).standard_normal(n)
    y, m = clip(x, theta)
    return y, m, SPEC.assemble(n)


def random_grid(F, rng):
    """Conjugate-symmetric random coefficients (analysis of a random signal plus
    a random symmetric perturbation outside the range of A)."""
    z = F.analyze(rng.standard_normal(F.length))
    pert = np.fft.fft(rng.standard_normal(F.shape), axis=0) / np.sqrt(F.shape[0])
    return z + 0.3 * pert


class TestGradient:
    def test_zero_at_feasible_interpolant(self):
        y, m, F = instance()
        x = y.copy()
        x[m.high] += 0.2
        x[m.low] -= 0.1
        g = social_gradient(F.analyze(x), y, m, F)
        assert np.max(np.abs(g)) < 1e-12

    @pytest.mark.parametrize("seed", range(20))
    def test_finite_differences(self, seed):
        rng = np.random.default_rng(seed)
        y, m, F = instance(seed % 3)
        z = random_grid(F, rng)
        g = social_gradient(z, y, m, F)
        d = random_grid(F, rng)
        d /= np.linalg.norm(d)
        h = 1e-6
        fd = (smooth_objective(z + h * d, y, m, F) - smooth_objective(z - h * d, y, m, F)) / (2 * h)
        an = np.real(np.vdot(g, d))
        assert abs(fd - an) <= 1e-5 * max(abs(an), 1e-3)

    def test_no_clipping_reduces_to_reliable_term(self):
        rng = np.random.default_rng(1)
        x = 0.2 * rng.standard_normal(300)
        y, m = clip(x, 1.0)
        F = SPEC.assemble(300)
        z = random_grid(F, rng)
        expected = F.analyze(F.synthesize(z) - y)
        np.testing.assert_allclose(social_gradient(z, y, m, F), expected, atol=1e-12)


def test_large_lambda_kills_everything():
    y, m, F = instance()
    r = social_declip(y, m, F, SocialConfig("L", lambdas=(1e6,), inner_iters=5))
    np.testing.assert_array_equal(r.samples, 0.0)


def test_ista_lasso_monotone():
    y, m, F = instance(2)
    hist = []
    social_declip(y, m, F, SocialConfig("L", lambdas=(0.05,), inner_iters=200, delta=0.0,
                                        extrapolate=False), history=hist)
    obj = np.array([h[1] for h in hist])
    assert np.all(np.diff(obj) <= 1e-12 * np.abs(obj[:-1]) + 1e-12)


def test_pew_1x1_equals_ew():
    y, m, F = instance(3)
    lam = (1e-1, 1e-2)
    a = social_declip(y, m, F, SocialConfig("EW", lambdas=lam, inner_iters=30)).samples
    b = social_declip(y, m, F, SocialConfig("PEW", lambdas=lam, inner_iters=30,
                                            nb=Neighborhood(1, 1))).samples
    np.testing.assert_array_equal(a, b)


def test_one_analysis_one_synthesis_per_iteration():
    y, m, F = instance(4)
    F.reset_counters()
    r = social_declip(y, m, F, SocialConfig("EW", lambdas=(0.1, 0.01), inner_iters=20, delta=0.0))
    assert F.n_synthesis == r.iterations
    assert F.n_analysis == r.iterations + 1  # one analysis of y for the divergence reference


def test_schedule_validation():
    with pytest.raises(ValueError):
        SocialConfig(lambdas=(1e-2, 1e-1))
    with pytest.raises(ValueError):
        SocialConfig(kind="XYZ")


def test_distance_reported_and_improves():
    x = np.random.default_rng(5).standard_normal(2000)
    y, m, _ = clip_to_target_sdr(x, 10)
    r = social_declip(y, m, TransformSpec("gabor", "hann", 256, 64, 512),
                      SocialConfig("PEW", lambdas=tuple(np.logspace(-1, -3, 5)), inner_iters=100))
    assert np.isfinite(r.notes["distance_to_gamma"])
    assert r.notes["distance_to_gamma"] / np.linalg.norm(y) < 0.1
