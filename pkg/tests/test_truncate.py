import numpy as np
import pytest

from modetrunc import (
    DenseCore,
    DiagCore,
    KronCore,
    TruncationConfig,
    TruncationReport,
    TuckerLike,
    error_bound,
    frob_distance,
    frob_norm,
    from_canonical,
    hadamard,
    refine_als,
    residual_frob_norm,
    structured_norm_sq,
    to_dense,
    truncate,
)
from modetrunc.baselines import hosvd_dense

rng = np.random.default_rng(7)


def random_tucker(n, r, seed=0):
    g = np.random.default_rng(seed)
    return TuckerLike(DenseCore(g.standard_normal((r, r, r))),
                      *(g.standard_normal((n, r)) for _ in range(3)))


def ortho_tucker(n, r, seed=0):
    g = np.random.default_rng(seed)
    return TuckerLike(DenseCore(g.standard_normal((r, r, r))),
                      *(np.linalg.qr(g.standard_normal((n, r)))[0] for _ in range(3)))


class TestConfig:
    def test_defaults(self):
        cfg = TruncationConfig()
        assert cfg.eps_gram == 1e-12 and cfg.stopping == "frobenius"

    def test_bad_eps(self):
        with pytest.raises(ValueError):
            TruncationConfig(eps_gram=0.0)


class TestTruncate:
    def test_exact_rank_recovery(self):
        f = random_tucker(30, 4, seed=1)
        g, rep = truncate(f, TruncationConfig(eps_gram=1e-13))
        assert rep.ranks == (4, 4, 4)
        assert rep.rel_frob_error <= 1e-6
        d = residual_frob_norm(f, g) / np.sqrt(structured_norm_sq(f))
        assert d <= 1e-12

    def test_rank_one(self):
        f = from_canonical(*(rng.standard_normal((20, 1)) for _ in range(3)))
        g, rep = truncate(f)
        assert rep.ranks == (1, 1, 1)
        assert np.allclose(to_dense(g), to_dense(f), rtol=1e-12, atol=1e-12)

    def test_zero_tensor(self):
        f = TuckerLike(DenseCore(np.zeros((2, 2, 2))),
                       *(rng.standard_normal((10, 2)) for _ in range(3)))
        g, rep = truncate(f)
        assert rep.ranks == (0, 0, 0)
        assert g.factors[0].shape == (10, 0)
        assert rep.rel_frob_error == 0.0

    def test_rank_caps(self):
        f = random_tucker(25, 5, seed=2)
        g, rep = truncate(f, TruncationConfig(r_max=(2, 3, 4)))
        assert rep.ranks == (2, 3, 4)
        assert rep.rmax_hit

    def test_orthonormal_output(self):
        f = random_tucker(18, 3, seed=3)
        g, _ = truncate(f)
        for b in g.factors:
            assert np.allclose(b.T @ b, np.eye(b.shape[1]), atol=1e-10)

    def test_hadamard_square(self):
        t = ortho_tucker(40, 3, seed=4)
        f = hadamard(t, t)
        g, rep = truncate(f, TruncationConfig(eps_gram=1e-13))
        assert all(r <= 9 for r in rep.ranks)
        ref = to_dense(f)
        err = frob_norm(to_dense(g) - ref) / frob_norm(ref)
        assert err <= 1e-6
        # reported error agrees with the dense oracle down to its floor
        assert rep.rel_frob_error <= max(2 * err, 1e-7)

    def test_projection_is_best_core(self):
        # perturbing the convolution core can only increase the error
        f = random_tucker(15, 3, seed=5)
        g, _ = truncate(f, TruncationConfig(r_max=(2, 2, 2)))
        base = residual_frob_norm(f, g)
        r = np.random.default_rng(6)
        for _ in range(5):
            pert = type(g)(g.core + 1e-3 * r.standard_normal(g.core.shape),
                           *g.factors)
            assert residual_frob_norm(f, pert) >= base - 1e-12

    def test_rotation_invariance(self):
        # rotating a factor and counter-rotating the core leaves errors fixed
        f = random_tucker(20, 3, seed=7)
        q = np.linalg.qr(np.random.default_rng(8).standard_normal((3, 3)))[0]
        core2 = np.einsum("ap,pjk->ajk", q.T, f.core.t)
        f2 = TuckerLike(DenseCore(core2), f.u @ q, f.v, f.w)
        _, r1 = truncate(f, TruncationConfig(r_max=(2, 2, 2)))
        _, r2 = truncate(f2, TruncationConfig(r_max=(2, 2, 2)))
        assert r1.rel_frob_error == pytest.approx(r2.rel_frob_error,
                                                  rel=1e-6, abs=1e-9)

    def test_error_identity(self):
        # ||F - G||^2 = ||F||^2 - ||core||^2 for the projected core
        f = random_tucker(20, 4, seed=9)
        g, _ = truncate(f, TruncationConfig(r_max=(3, 3, 3)))
        nf2 = structured_norm_sq(f)
        lhs = residual_frob_norm(f, g) ** 2
        rhs = nf2 - np.sum(g.core ** 2)
        assert lhs == pytest.approx(rhs, rel=1e-8, abs=1e-10 * nf2)

    def test_matches_hosvd_error_order(self):
        f = random_tucker(20, 5, seed=10)
        g, rep = truncate(f, TruncationConfig(r_max=(3, 3, 3)))
        ref = hosvd_dense(to_dense(f), ranks=(3, 3, 3))
        dense_err = frob_norm(to_dense(f) - to_dense(ref)) / frob_norm(to_dense(f))
        # cross-based projection is near the quasi-best HOSVD error
        assert rep.rel_frob_error <= 3 * dense_err + 1e-10

    def test_report_error_off(self):
        f = random_tucker(10, 2, seed=11)
        _, rep = truncate(f, TruncationConfig(report_error=False))
        assert np.isnan(rep.rel_frob_error)

    def test_summary_schema(self):
        f = random_tucker(10, 3, seed=12)
        _, rep = truncate(f)
        s = rep.summary()
        assert set(s) >= {"ranks", "rel_frob_error", "c_f", "timings",
                          "floor_hit", "rmax_hit", "per_mode"}
        assert len(s["per_mode"]) == 3
        assert all("pivots" in m and "err_trajectory" in m for m in s["per_mode"])

    def test_kron_reports_cf(self):
        t = ortho_tucker(25, 2, seed=13)
        f = hadamard(t, t)
        _, rep = truncate(f)
        assert all(c >= 1.0 - 1e-10 for c in rep.c_f)


class TestRefineAls:
    def test_fixed_point_on_exact(self):
        f = random_tucker(20, 3, seed=20)
        g, rep = truncate(f)
        assert rep.rel_frob_error <= 1e-7
        g2, err = refine_als(f, g)
        assert err <= rep.rel_frob_error + 1e-12
        # same subspace, possibly rotated: all principal cosines are 1
        s = np.linalg.svd(g2.factors[0].T @ g.factors[0], compute_uv=False)
        assert np.allclose(s, 1.0, atol=1e-8)

    def test_reduces_error(self):
        t = ortho_tucker(60, 4, seed=21)
        f = hadamard(t, t)
        g, rep = truncate(f, TruncationConfig(eps_gram=1e-8))
        g2, err = refine_als(f, g)
        nrm = np.sqrt(structured_norm_sq(f))
        before = residual_frob_norm(f, g) / nrm
        after = residual_frob_norm(f, g2) / nrm
        assert after <= before * (1 + 1e-8) + 1e-13
        assert after <= 1e-10

    def test_monotone_sweeps(self):
        f = random_tucker(25, 5, seed=22)
        g, _ = truncate(f, TruncationConfig(r_max=(3, 3, 3)))
        nrm = np.sqrt(structured_norm_sq(f))
        prev = residual_frob_norm(f, g)
        cur = g
        for _ in range(3):
            cur, _ = refine_als(f, cur)
            now = residual_frob_norm(f, cur)
            # slack absorbs jitter once the residual hits the machine floor
            assert now <= prev * (1 + 1e-10) + 1e-14 * nrm
            prev = now

    def test_drops_negligible_directions(self):
        f = random_tucker(20, 2, seed=23)
        # pad the guess with an extra random orthogonal direction
        g, _ = truncate(f)
        extra = [np.linalg.qr(np.hstack([b, np.random.default_rng(24)
                                         .standard_normal((20, 1))]))[0]
                 for b in g.factors]
        g2, err = refine_als(f, type(g)(np.zeros((3, 3, 3)), *extra))
        assert g2.core.shape == (2, 2, 2)
        assert err <= 1e-10

    def test_shape_mismatch(self):
        f = random_tucker(10, 2, seed=25)
        g, _ = truncate(random_tucker(11, 2, seed=25))
        with pytest.raises(ValueError):
            refine_als(f, g)


class TestErrorBound:
    def test_all_ones(self):
        rep = TruncationReport((1, 1, 1), (), 0.0, (1.0, 1.0, 1.0))
        assert error_bound(rep, 1e-12) == pytest.approx(np.sqrt(3) * 1e-6,
                                                        rel=1e-12)

    def test_scaling(self):
        rep = TruncationReport((1, 1, 1), (), 0.0, (2.0, 2.0, 2.0))
        assert error_bound(rep, 1e-8) == pytest.approx(2 * np.sqrt(3) * 1e-4,
                                                       rel=1e-12)

    def test_bound_dominates_measured(self):
        t = ortho_tucker(30, 3, seed=30)
        f = hadamard(t, t)
        g, rep = truncate(f, TruncationConfig(eps_gram=1e-10))
        bound = error_bound(rep, 1e-10)
        measured = residual_frob_norm(f, g) / np.sqrt(structured_norm_sq(f))
        assert measured <= bound * (1 + 1e-6)
