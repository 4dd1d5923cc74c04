import numpy as np
import pytest

from declip.frames import (
    DESK_GABOR, BlockPlan, FrameError, TransformSpec, analyze, make_window, overlap_add,
    project_gamma_star, split_blocks, synthesize,
)
from declip.signal import ClipMask, clip, in_gamma_clipped, in_gamma_reliable, project_gamma

from oracles import constraint_rows, from_real, project_affine_box_dual, real_synthesis_matrix, to_real

SPECS = [
    TransformSpec("block-dft", "hann", 64, 16, 128),
    TransformSpec("block-dct", "hann", 64, 16, 128),
    TransformSpec("gabor", "hann", 64, 16, 128),
    TransformSpec("gabor", "sine", 60, 25, 64),
]


def frame_for(spec, n=500):
    return spec.assemble(n if spec.kind == "gabor" else None)


def random_coefs(frame, rng):
    shape = frame.shape if hasattr(frame, "shape") else (frame.n_coef,)
    z = rng.standard_normal(shape)
    if frame.spec.kind != "block-dct":
        z = z + 1j * rng.standard_normal(shape)
    return z


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: f"{s.kind}-{s.window}")
class TestParseval:
    def test_reconstruction_and_energy(self, spec):
        rng = np.random.default_rng(0)
        F = frame_for(spec)
        for _ in range(10):
            x = rng.standard_normal(F.length)
            z = F.analyze(x)
            assert np.linalg.norm(F.synthesize(z) - x) <= 1e-10 * np.linalg.norm(x)
            assert abs(np.linalg.norm(z) - np.linalg.norm(x)) <= 1e-10 * np.linalg.norm(x)

    def test_adjointness(self, spec):
        rng = np.random.default_rng(1)
        F = frame_for(spec)
        x = rng.standard_normal(F.length)
        z = random_coefs(F, rng)
        lhs = np.real(np.vdot(F.analyze(x), z))
        rhs = np.dot(x, F.adjoint(z))
        assert abs(lhs - rhs) <= 1e-10 * np.linalg.norm(x) * np.linalg.norm(z)

    def test_range_projector(self, spec):
        rng = np.random.default_rng(2)
        F = frame_for(spec)
        z1, z2 = random_coefs(F, rng), random_coefs(F, rng)
        p1 = F.analyze(F.adjoint(z1))
        p2 = F.analyze(F.adjoint(z2))
        assert np.linalg.norm(F.analyze(F.adjoint(p1)) - p1) <= 1e-8 * np.linalg.norm(z1)
        a = np.real(np.vdot(p1, z2))
        b = np.real(np.vdot(z1, p2))
        assert abs(a - b) <= 1e-8 * np.linalg.norm(z1) * np.linalg.norm(z2)

    def test_zero_coefficients(self, spec):
        F = frame_for(spec)
        z = np.zeros(F.shape if hasattr(F, "shape") else F.n_coef,
                     dtype=float if spec.kind == "block-dct" else complex)
        np.testing.assert_array_equal(F.synthesize(z), np.zeros(F.length))


def test_unitary_dft_roundtrip():
    spec = TransformSpec("block-dft", "rectangular", 32, 32, 32)
    x = np.random.default_rng(3).standard_normal(32)
    np.testing.assert_allclose(synthesize(analyze(x, spec), spec), x, atol=1e-12)


def test_impulse_flat_spectrum():
    spec = TransformSpec("block-dft", "hann", 64, 16, 128)
    d = np.zeros(64)
    d[0] = 1
    np.testing.assert_allclose(np.abs(analyze(d, spec)), 1 / np.sqrt(128), rtol=1e-14)


def test_length_errors():
    with pytest.raises(FrameError):
        analyze(np.zeros(10), TransformSpec("block-dft", "hann", 64, 16, 128))
    with pytest.raises(FrameError):
        TransformSpec("gabor", "hann", 64, 80, 128)
    with pytest.raises(FrameError):
        TransformSpec("gabor", "hann", 64, 16, 32)


def test_asymmetric_coefficients_rejected():
    F = TransformSpec("block-dft", "hann", 16, 4, 32).assemble()
    z = np.zeros(32, complex)
    z[3] = 1j
    with pytest.raises(FrameError, match="imaginary residue"):
        F.synthesize(z)


def test_conjugate_pair_edits_stay_real():
    rng = np.random.default_rng(4)
    F = DESK_GABOR.assemble(3000)
    z = F.analyze(rng.standard_normal(3000))
    keep = np.abs(z) > np.median(np.abs(z))
    F.synthesize(np.where(keep, z, 0))  # strict: raises if not real


def test_paper_gabor_setting():
    from declip.frames import PAPER_GABOR

    assert (PAPER_GABOR.window_length, PAPER_GABOR.channels) == (8192, 16384)
    assert PAPER_GABOR.hop == 8192 // 4


class TestProjectGammaStar:
    def test_unchanged_when_feasible(self):
        spec = TransformSpec("block-dft", "hann", 32, 8, 64)
        F = spec.assemble()
        rng = np.random.default_rng(5)
        x = rng.standard_normal(32)
        y, m = clip(x, 0.7)
        z = F.analyze(y)
        np.testing.assert_allclose(project_gamma_star(z, m, y, F), z, atol=1e-12)

    def test_unitary_reduces_to_time_projection(self):
        spec = TransformSpec("block-dft", "rectangular", 16, 16, 16)
        F = spec.assemble()
        rng = np.random.default_rng(6)
        y, m = clip(rng.standard_normal(16), 0.5)
        z = F.analyze(rng.standard_normal(16))
        expected = F.analyze(project_gamma(F.synthesize(z), m, y))
        np.testing.assert_allclose(project_gamma_star(z, m, y, F), expected, atol=1e-12)

    @pytest.mark.parametrize("kind", ["block-dft", "block-dct"])
    @pytest.mark.parametrize("seed", range(5))
    def test_matches_dual_oracle(self, kind, seed):
        spec = TransformSpec(kind, "hann", 8, 2, 16)
        F = spec.assemble()
        rng = np.random.default_rng(seed)
        y, m = clip(rng.standard_normal(8), 0.6)
        if kind == "block-dft":
            z0 = np.fft.fft(rng.standard_normal(16)) / 4  # Hermitian, not in range(A)
        else:
            z0 = rng.standard_normal(16)
        got = project_gamma_star(z0, m, y, F)
        G = real_synthesis_matrix(F.atoms())
        v = project_affine_box_dual(to_real(z0), *constraint_rows(G, y, m))
        np.testing.assert_allclose(got, from_real(v, kind == "block-dft"), atol=1e-6)

    def test_idempotent_and_feasible(self):
        F = DESK_GABOR.assemble(4000)
        rng = np.random.default_rng(7)
        x = rng.standard_normal(4000)
        y, m = clip(x, 0.8)
        z = F.analyze(rng.standard_normal(4000))
        p = project_gamma_star(z, m, y, F)
        assert np.linalg.norm(project_gamma_star(p, m, y, F) - p) <= 1e-10 * np.linalg.norm(p)
        xs = F.synthesize(p)
        assert np.max(np.abs(project_gamma(xs, m, y) - xs)) < 1e-10
        clamped = project_gamma(xs, m, y)
        assert in_gamma_reliable(clamped, m, y) and in_gamma_clipped(clamped, m)

    def test_non_tight_rejected(self):
        spec = TransformSpec("gabor", "hann", 64, 16, 128, canonical_tight=False)
        F = spec.assemble(300)
        y, m = clip(np.random.default_rng(0).standard_normal(300), 0.5)
        with pytest.raises(FrameError, match="Parseval"):
            project_gamma_star(F.analyze(y), m, y, F)


class TestBlocks:
    def test_rectangular_partition_exact(self):
        plan = BlockPlan(64, 64, "rectangular")
        x = np.random.default_rng(0).standard_normal(1000)
        blocks = split_blocks(x, plan)
        assert blocks.shape[1] == 64
        np.testing.assert_array_equal(overlap_add(blocks, plan, 1000), x)

    @pytest.mark.parametrize("window,hop,aw", [("hann", 256, False), ("sine", 512, True), ("hann", 128, False)])
    def test_partition_of_unity(self, window, hop, aw):
        plan = BlockPlan(1024, hop, window, aw)
        x = np.random.default_rng(1).standard_normal(5000)
        np.testing.assert_allclose(overlap_add(split_blocks(x, plan), plan, 5000), x, atol=1e-12)

    def test_hann_cola_interior(self):
        plan = BlockPlan(1024, 256, "hann")
        s = plan.coverage(10000)
        w = make_window("hann", 1024)
        assert np.allclose(s, w.reshape(4, 256).sum(0)[0], atol=1e-12)

    def test_padding_masks_reliable(self):
        plan = BlockPlan(8, 4, "hann")
        y, m = clip(np.array([2.0, 0.1, -2.0, 0.3, 0.2]), 1.0)
        bm = plan.split_mask(m)
        assert bm.reliable.shape == split_blocks(y, plan).shape
        assert bm.reliable[0, :4].all()
        assert bm.high.sum() == 2 and bm.low.sum() == 2  # each clipped sample seen by 2 blocks

    def test_reassembled_blocks_stay_in_gamma(self):
        plan = BlockPlan(8, 4, "hann")
        rng = np.random.default_rng(2)
        x = 1.5 * rng.standard_normal(12)
        y, m = clip(x, 0.8)
        blocks, bm = split_blocks(y, plan), plan.split_mask(m)
        assert blocks.shape[0] == 4
        raw = rng.standard_normal(blocks.shape) * 3
        proj = project_gamma(raw, bm, blocks)
        out = overlap_add(proj, plan, 12)
        assert np.allclose(out[m.reliable], y[m.reliable], atol=1e-14)
        assert np.all(out[m.high] >= 0.8 - 1e-14) and np.all(out[m.low] <= -0.8 + 1e-14)

    def test_inconsistent_plan(self):
        with pytest.raises(FrameError):
            BlockPlan(64, 128)
        plan = BlockPlan(8, 4)
        with pytest.raises(FrameError):
            overlap_add(np.zeros((2, 8)), plan, 20)
