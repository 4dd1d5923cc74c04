import numpy as np
import pytest

from declip.frames import BlockPlan, TransformSpec
from declip.signal import (
    clip, clip_to_target_sdr, delta_sdr, in_gamma_clipped, in_gamma_reliable, sdr,
)
from declip.spade import (
    SpadeConfig, aspade_block, block_spec, k_schedule, spade_blocks, spade_declip, sspade_block,
)

from synth import five_sines

FRAME = block_spec(BlockPlan(1024, 256)).assemble()


def test_k_schedule():
    cfg = SpadeConfig(s=1, r=2)
    assert [k_schedule(i, cfg) for i in range(5)] == [1, 1, 2, 2, 3]
    assert [k_schedule(i, SpadeConfig(s=3)) for i in range(3)] == [3, 6, 9]


def test_config_validation():
    with pytest.raises(ValueError):
        SpadeConfig(s=0)
    with pytest.raises(ValueError):
        SpadeConfig(epsilon=0)


@pytest.mark.parametrize("block", [aspade_block, sspade_block])
def test_unclipped_block_identity(block):
    y = 0.3 * np.sin(np.arange(1024) / 7)
    yc, m = clip(y, 0.5)
    x, it, _ = block(yc, m, FRAME)
    np.testing.assert_array_equal(x, y)


@pytest.mark.parametrize("variant", ["analysis", "synthesis"])
def test_block_output_in_gamma(variant):
    rng = np.random.default_rng(0)
    F = TransformSpec("block-dft", "rectangular", 64, 16, 128).assemble()
    y, m = clip(rng.standard_normal((5, 64)), 0.8)
    x, it, res = spade_blocks(y, m, F, variant)
    for t in range(5):
        assert np.array_equal(x[t][m.reliable[t]], y[t][m.reliable[t]])
        assert np.all(x[t][m.high[t]] >= 0.8) and np.all(x[t][m.low[t]] <= -0.8)
    assert np.all(res <= 0.1)


@pytest.mark.parametrize("variant", ["analysis", "synthesis"])
def test_one_analysis_one_synthesis_per_iteration(variant):
    F = TransformSpec("block-dft", "rectangular", 64, 16, 128).assemble()
    y, m = clip(np.random.default_rng(1).standard_normal(64), 0.7)
    _, it, _ = spade_blocks(y[None], m, F, variant)
    extra = 1 if variant == "analysis" else 0  # initial A y
    assert F.n_synthesis == it[0]
    assert F.n_analysis == it[0] + extra


def test_sinusoid_oracle_agreement():
    """Known-sparsity recovery on a unitary block (1 conjugate pair)."""
    F = TransformSpec("block-dft", "rectangular", 1024, 1024, 1024).assemble()
    x = np.sin(2 * np.pi * 37 * np.arange(1024) / 1024 + 0.3)
    y, m, _ = clip_to_target_sdr(x, 3)
    cfg = SpadeConfig(max_k=1)
    xa, _, _ = aspade_block(y, m, F, cfg)
    xs, _, _ = sspade_block(y, m, F, cfg)
    da, ds = delta_sdr(x, y, xa), delta_sdr(x, y, xs)
    assert da >= 20
    assert abs(da - ds) <= 1.0


@pytest.fixture(scope="module")
def regression_case():
    x = five_sines()
    y, m, _ = clip_to_target_sdr(x, 7)
    return x, y, m


@pytest.mark.parametrize("variant", ["analysis", "synthesis"])
def test_declip_consistent_and_improves(regression_case, variant):
    x, y, m = regression_case
    out = spade_declip(y, m, variant=variant).samples
    assert in_gamma_reliable(out, m, y) and in_gamma_clipped(out, m)
    assert sdr(x, out) > sdr(x, y) + 10


def test_declip_identity_unclipped():
    x = 0.5 * np.sin(np.arange(3000) / 9)
    y, m = clip(x, 0.9)
    np.testing.assert_array_equal(spade_declip(y, m).samples, x)


@pytest.mark.parametrize("variant", ["analysis", "synthesis"])
def test_smaller_epsilon_does_not_improve(regression_case, variant):
    x, y, m = regression_case
    a = sdr(x, spade_declip(y, m, variant=variant).samples)
    b = sdr(x, spade_declip(y, m, variant=variant, cfg=SpadeConfig(epsilon=0.01)).samples)
    assert b - a < 0.1
