import numpy as np
import pytest

from modetrunc import (
    CoreGram,
    DenseCore,
    DiagCore,
    GramOracle,
    KronCore,
    TuckerLike,
    TuckerOrtho,
    core_grams,
    eigensplit_stop,
    gram_column,
    gram_diag,
    hadamard,
    mode_subspace,
    oracle_from_matrix,
    rediagonalize,
    run_cross,
    to_dense,
    unfold,
)
from modetrunc.baselines import hosvd_dense, pivoted_cholesky

rng = np.random.default_rng(99)


def random_kron_oracle(n, rg, rh, seed=0, mode=1):
    r = np.random.default_rng(seed)
    core = KronCore(r.standard_normal((rg,) * 3), r.standard_normal((rh,) * 3))
    u = r.standard_normal((n, rg * rh))
    return GramOracle(u, core_grams(core, mode)), u, core


def explicit_matrix(oracle, u, core, mode=1):
    cg = oracle.core_gram
    s = np.kron(cg.ghat, cg.hhat)
    return u @ s @ u.T


class TestCoreGrams:
    def test_unit_cores(self):
        cg = core_grams(KronCore(np.ones((1, 1, 1)), np.ones((1, 1, 1))), 1)
        assert np.allclose(cg.ghat, [[1.0]])
        assert np.allclose(cg.hhat, [[1.0]])

    def test_diagonal_core(self):
        w = np.array([2.0, -3.0, 0.5])
        cg = core_grams(DiagCore(w), 2)
        assert np.allclose(cg.weights_sq, w ** 2)

    @pytest.mark.parametrize("mode", [1, 2, 3])
    def test_matches_unfolding_product(self, mode):
        g = rng.standard_normal((3, 3, 3))
        h = rng.standard_normal((3, 3, 3))
        cg = core_grams(KronCore(g, h), mode)
        gu, hu = unfold(g, mode), unfold(h, mode)
        assert np.allclose(cg.ghat, gu @ gu.T, rtol=1e-13)
        assert np.allclose(cg.hhat, hu @ hu.T, rtol=1e-13)
        # combined Gram of the materialized Kron core unfolding
        ku = unfold(KronCore(g, h).materialize(), mode)
        assert np.allclose(np.kron(cg.ghat, cg.hhat), ku @ ku.T, rtol=1e-12)

    def test_dense_core(self):
        c = rng.standard_normal((2, 3, 4))
        cg = core_grams(DenseCore(c), 3)
        cu = unfold(c, 3)
        assert np.allclose(cg.s, cu @ cu.T, rtol=1e-13)


class TestGramDiag:
    def test_single_column_unit_core(self):
        u = rng.standard_normal((10, 1))
        o = GramOracle(u, core_grams(KronCore(np.ones((1, 1, 1)),
                                              np.ones((1, 1, 1))), 1))
        assert np.allclose(gram_diag(o), u[:, 0] ** 2, rtol=1e-14)

    def test_orthonormal_identity_coregram(self):
        u = np.linalg.qr(rng.standard_normal((10, 4)))[0]
        o = GramOracle(u, CoreGram("dense", 1, s=np.eye(4)))
        assert np.allclose(gram_diag(o), np.sum(u ** 2, axis=1), rtol=1e-13)

    def test_matches_explicit_gram(self):
        o, u, core = random_kron_oracle(50, 3, 1, seed=5)
        a = explicit_matrix(o, u, core)
        assert np.allclose(gram_diag(o), np.diag(a), rtol=1e-12)
        assert np.min(gram_diag(o)) >= -1e-12 * np.max(gram_diag(o))


class TestGramColumn:
    def test_rank_one(self):
        u = rng.standard_normal((8, 1))
        o = GramOracle(u, core_grams(KronCore(np.ones((1, 1, 1)),
                                              np.ones((1, 1, 1))), 1))
        assert np.allclose(gram_column(o, 3), u[:, 0] * u[3, 0], rtol=1e-14)

    def test_symmetry(self):
        o, u, core = random_kron_oracle(20, 2, 2, seed=6)
        c3 = gram_column(o, 3)
        c7 = gram_column(o, 7)
        assert c3[7] == pytest.approx(c7[3], rel=1e-12)

    def test_matches_explicit(self):
        o, u, core = random_kron_oracle(50, 3, 1, seed=7)
        a = explicit_matrix(o, u, core)
        for i in (0, 17, 49):
            assert np.allclose(gram_column(o, i), a[:, i], rtol=1e-12,
                               atol=1e-12 * np.abs(a).max())
        d = gram_diag(o)
        assert gram_column(o, 17)[17] == pytest.approx(d[17], rel=1e-12)

    def test_out_of_range(self):
        o, _, _ = random_kron_oracle(10, 2, 1, seed=8)
        with pytest.raises(ValueError):
            gram_column(o, 10)


class TestRediagonalize:
    def test_zero_update(self):
        lam = np.array([3.0, 1.0])
        v, d = rediagonalize(lam, np.zeros(3))
        assert np.allclose(sorted(d, reverse=True), [3.0, 1.0, 0.0])
        # V columns are signed unit vectors (permutation)
        assert np.allclose(np.abs(v).sum(axis=0), 1.0)
        assert np.allclose(v.T @ v, np.eye(3), atol=1e-14)

    def test_empty_lam(self):
        v, d = rediagonalize(np.zeros(0), np.array([2.0]))
        assert np.allclose(d, [4.0])
        assert np.allclose(np.abs(v), [[1.0]])

    def test_reconstruction_and_interlacing(self):
        lam = np.sort(rng.standard_normal(5) ** 2)[::-1]
        b = rng.standard_normal(6)
        v, d = rediagonalize(lam, b)
        m = np.diag(np.append(lam, 0.0)) + np.outer(b, b)
        scale = np.max(np.abs(lam)) + np.dot(b, b)
        assert np.linalg.norm(v @ np.diag(d) @ v.T - m) <= 1e-12 * scale
        # eigenvalues of the rank-one update interlace diag(lam, 0)
        base = np.sort(np.append(lam, 0.0))
        upd = np.sort(d)
        ref = np.linalg.eigvalsh(m)  # dense symmetric eigensolver oracle
        assert np.allclose(upd, ref, atol=1e-12 * scale)
        assert np.all(upd[1:] >= base[:-1] - 1e-12 * scale)


class TestRunCross:
    def test_diagonal_matrix(self):
        o = oracle_from_matrix(np.diag([4.0, 1.0, 0.0]))
        st = run_cross(o, 1e-12, 3)
        assert st.pivots == [0, 1]
        assert np.allclose(sorted(st.lam, reverse=True), [4.0, 1.0], atol=1e-12)
        assert st.err <= 1e-12 * st.nrm

    def test_exact_rank_termination(self):
        b = np.random.default_rng(10).standard_normal((100, 4))
        o = oracle_from_matrix(b @ b.T)
        st = run_cross(o, 1e-14, 100)
        assert st.rank == 4
        assert st.err <= 1e-12 * st.nrm

    def test_full_rank_accuracy(self):
        a = np.random.default_rng(11).standard_normal((40, 40))
        a = a @ a.T
        o = oracle_from_matrix(a)
        st = run_cross(o, 1e-2, 40)
        assert st.err <= 1e-2 * st.nrm
        approx = st.x @ np.diag(st.lam) @ st.x.T
        # residual trace bounds the Frobenius norm of an SPSD residual
        assert np.linalg.norm(a - approx, "fro") <= st.err * (1 + 1e-6)

    def test_zero_matrix(self):
        st = run_cross(oracle_from_matrix(np.zeros((5, 5))), 1e-8, 5)
        assert st.rank == 0 and st.err == 0.0

    def test_state_invariants(self):
        a = np.random.default_rng(12).standard_normal((30, 30))
        o = oracle_from_matrix(a @ a.T)
        st = run_cross(o, 1e-6, 30)
        p = st.rank
        assert np.linalg.norm(st.x.T @ st.x - np.eye(p)) <= 1e-10
        assert st.err == pytest.approx(np.sum(np.maximum(st.d, 0.0)), rel=1e-10)
        assert np.min(st.lam) >= -1e-12 * st.nrm
        assert len(set(st.pivots)) == len(st.pivots)

    def test_monotone_error(self):
        a = np.random.default_rng(13).standard_normal((30, 30))
        o = oracle_from_matrix(a @ a.T)
        st = run_cross(o, 1e-12, 30)
        eh = np.array([st.nrm] + st.err_history)
        assert np.all(np.diff(eh) <= 1e-12 * st.nrm)

    def test_pivot_exactness_on_cross(self):
        a = np.random.default_rng(14).standard_normal((25, 25))
        o = oracle_from_matrix(a @ a.T)
        st = run_cross(o, 1e-12, 25)
        assert np.all(np.abs(st.d[st.pivots]) <= 1e-12 * st.nrm)

    def test_cholesky_equivalence(self):
        for seed in range(10):
            r = np.random.default_rng(100 + seed)
            n = int(r.integers(10, 60))
            b = r.standard_normal((n, n))
            a = b @ b.T
            st = run_cross(oracle_from_matrix(a), 1e-6, n)
            _, piv, traces = pivoted_cholesky(a, 1e-6, n)
            assert st.pivots == piv
            m = min(len(traces), len(st.err_history))
            assert np.allclose(traces[:m], st.err_history[:m], rtol=1e-10,
                               atol=1e-12 * np.trace(a))

    def test_trace_identity(self):
        # nrm = trace(A) = squared Frobenius norm of the split tensor
        o, u, core = random_kron_oracle(20, 2, 2, seed=15)
        st = run_cross(o, 1e-10, 20)
        from modetrunc.dense import mode_mul
        uprime = mode_mul(core.materialize(), u, 1)
        assert st.nrm == pytest.approx(np.sum(uprime ** 2), rel=1e-12)

    def test_usage_errors(self):
        o = oracle_from_matrix(np.eye(3))
        with pytest.raises(ValueError):
            run_cross(o, 0.0, 3)
        with pytest.raises(ValueError):
            run_cross(o, 1e-8, 0)


class TestModeSubspace:
    def test_rank1(self):
        u = rng.standard_normal((12, 1))
        f = TuckerLike(KronCore(np.ones((1, 1, 1)), np.ones((1, 1, 1))),
                       u, rng.standard_normal((12, 1)), rng.standard_normal((12, 1)))
        basis, st = mode_subspace(f, 1, 1e-12, 12)
        assert basis.shape == (12, 1)
        assert np.allclose(np.abs(basis[:, 0]), np.abs(u[:, 0] / np.linalg.norm(u)),
                           atol=1e-12)

    def principal_angle(self, a, b):
        qa = np.linalg.qr(a)[0]
        qb = np.linalg.qr(b)[0]
        s = np.linalg.svd(qa.T @ qb, compute_uv=False)
        return np.sqrt(max(0.0, 1.0 - np.min(s) ** 2))

    def test_recovers_hosvd_subspace(self):
        r = np.random.default_rng(16)
        core = np.zeros((3, 3, 3))
        core[0, 0, 0], core[1, 1, 1], core[2, 2, 2] = 100.0, 10.0, 1.0
        core += 0.01 * r.standard_normal((3, 3, 3))
        q1, q2, q3 = (np.linalg.qr(r.standard_normal((30, 3)))[0] for _ in range(3))
        f = TuckerLike(DenseCore(core), q1, q2, q3)
        basis, _ = mode_subspace(f, 1, 1e-14, 3)
        ref = hosvd_dense(to_dense(f), ranks=(3, 3, 3))
        assert self.principal_angle(basis, ref.x) <= 1e-6

    def test_hadamard_square_subspace(self):
        r = np.random.default_rng(17)
        n = 200
        t = TuckerLike(DenseCore(r.standard_normal((3, 3, 3))),
                       *(np.linalg.qr(r.standard_normal((n, 3)))[0] for _ in range(3)))
        f = hadamard(t, t)
        basis, st = mode_subspace(f, 1, 1e-14, 9)
        assert basis.shape[1] <= 9
        u = np.linalg.svd(unfold(to_dense(f), 1), full_matrices=False)[0]
        k = basis.shape[1]
        assert self.principal_angle(basis, u[:, :k]) <= 1e-5

    @pytest.mark.parametrize("mode", [2, 3])
    def test_other_modes(self, mode):
        f = TuckerLike(KronCore(rng.standard_normal((2, 2, 2)),
                                rng.standard_normal((2, 2, 2))),
                       *(rng.standard_normal((15, 4)) for _ in range(3)))
        basis, st = mode_subspace(f, mode, 1e-13, 15)
        d = to_dense(f)
        u, s, _ = np.linalg.svd(unfold(d, mode), full_matrices=False)
        k = basis.shape[1]
        proj = basis @ (basis.T @ unfold(d, mode))
        # retained energy matches the cross residual bound
        res = np.linalg.norm(unfold(d, mode) - proj) ** 2
        assert res <= max(st.err, 1e-12 * st.nrm) * 1.5 + 1e-10 * st.nrm


class TestEigensplitStop:
    def test_tiny_tail(self):
        st = run_cross(oracle_from_matrix(np.diag([1.0, 1e-20, 1e-20])), 1e-30, 3)
        st.lam = np.array([1.0, 1e-20, 1e-20])
        assert eigensplit_stop(st, 1e-10, 2)

    def test_no_small_part(self):
        st = run_cross(oracle_from_matrix(np.eye(4)), 1e-12, 4)
        st.lam = np.array([1.0, 0.9, 0.8, 0.7])
        assert not eigensplit_stop(st, 1e-10, 2)

    def test_agreement_with_frobenius_rule(self):
        r = np.random.default_rng(18)
        t = TuckerLike(DenseCore(r.standard_normal((3, 3, 3))),
                       *(np.linalg.qr(r.standard_normal((64, 3)))[0] for _ in range(3)))
        f = hadamard(t, t)
        _, st_f = mode_subspace(f, 1, 1e-10, 64, stopping="frobenius")
        _, st_e = mode_subspace(f, 1, 1e-10, 64, stopping="eigensplit", window=3)
        assert abs(st_f.rank - st_e.rank) <= 2
