"""Dense oracles and reference algorithms used to validate the fast paths.

Everything here materializes its inputs and trades speed for
transparency: HOSVD and Tucker-ALS on explicit tensors, diagonal-pivoted
Cholesky on explicit SPSD matrices, skeleton (cross) matrix approximation
built from pivot sets, the higher-order power method for the tensor
spectral norm, and the explicit Gram matrix of a structured tensor's
unfolding.
"""

from dataclasses import dataclass

import numpy as np

from .dense import fold, mode_mul, unfold
from .formats import TuckerOrtho, _as_like, contract_core


@dataclass
class CrossMatrixApprox:
    """Skeleton approximation of an SPSD matrix on a pivot set."""
    row_set: list
    column_set: list
    generator_cho: np.ndarray       # Cholesky factor of A[I, I]
    residual_2norm: float


def _sym(a):
    return 0.5 * (a + a.T)


def hosvd_dense(t, eps=None, ranks=None):
    """Multilinear SVD of an explicit tensor; ranks either fixed or chosen
    by the per-mode threshold sigma >= eps * sigma_1."""
    t = np.asarray(t, dtype=np.float64)
    if (eps is None) == (ranks is None):
        raise ValueError("give exactly one of eps or ranks")
    bases = []
    for mode in (1, 2, 3):
        u, s, _ = np.linalg.svd(unfold(t, mode), full_matrices=False)
        if ranks is not None:
            r = min(ranks[mode - 1], u.shape[1])
        else:
            r = int(np.sum(s >= eps * s[0])) if s.size and s[0] > 0 else 0
        bases.append(u[:, :r])
    core = t
    for mode, b in zip((1, 2, 3), bases):
        core = mode_mul(core, b.T, mode)
    return TuckerOrtho(core, *bases)


def tucker_als_dense(t, ranks, sweeps=1):
    """Standard Tucker-ALS on an explicit tensor, HOSVD-initialized."""
    t = np.asarray(t, dtype=np.float64)
    approx = hosvd_dense(t, ranks=ranks)
    bases = list(approx.factors)
    for _ in range(sweeps):
        for mode in (1, 2, 3):
            proj = t
            for l in (1, 2, 3):
                if l != mode:
                    proj = mode_mul(proj, bases[l - 1].T, l)
            u, _, _ = np.linalg.svd(unfold(proj, mode), full_matrices=False)
            bases[mode - 1] = u[:, :min(ranks[mode - 1], u.shape[1])]
    core = t
    for mode, b in zip((1, 2, 3), bases):
        core = mode_mul(core, b.T, mode)
    return TuckerOrtho(core, *bases)


def pivoted_cholesky(a, eps, r_max):
    """Diagonal-pivoted partial Cholesky of an explicit SPSD matrix.

    Stops when the residual trace drops below eps times the initial trace
    or the rank cap is reached; ties break toward the lowest index.
    Returns the n x r factor L (A ~ L L^T), the pivot list, and the
    residual-trace trajectory.
    """
    r = _sym(np.asarray(a, dtype=np.float64)).copy()
    n = r.shape[0]
    trace0 = float(np.sum(np.maximum(np.diag(r), 0.0)))
    cols, pivots, traces = [], [], []
    if trace0 == 0.0:
        return np.zeros((n, 0)), pivots, traces
    floor_hit = False
    while len(pivots) < r_max:
        d = np.maximum(np.diag(r), 0.0)
        i = int(np.argmax(d))
        if d[i] <= 1e-15 * trace0:
            floor_hit = True
            break
        c = r[:, i] / np.sqrt(r[i, i])
        r -= np.outer(c, c)
        cols.append(c)
        pivots.append(i)
        traces.append(float(np.sum(np.maximum(np.diag(r), 0.0))))
        if traces[-1] <= eps * trace0:
            break
    l = np.column_stack(cols) if cols else np.zeros((n, 0))
    return l, pivots, traces


def cross_matrix(a, pivots):
    """Skeleton approximation [A(:,I)] A(I,I)^-1 [A(I,:)] of an SPSD
    matrix; exact on the pivot rows and columns."""
    a = _sym(np.asarray(a, dtype=np.float64))
    idx = list(pivots)
    a_ii = _sym(a[np.ix_(idx, idx)])
    lam = np.linalg.eigvalsh(a_ii)
    if lam[0] <= 1e-10 * max(lam[-1], 0.0) or lam[-1] <= 0.0:
        raise ValueError("generator submatrix is numerically singular")
    cho = np.linalg.cholesky(a_ii)
    approx = a[:, idx] @ np.linalg.solve(a_ii, a[idx, :])
    res = np.linalg.norm(a - approx, 2)
    return CrossMatrixApprox(idx, list(idx), cho, float(res))


def interpolative_factor(u, split):
    """Interpolative factor from the leading ``split`` columns.

    B^T = [I  A11^-1 A12] reproduces U1 exactly; returns (B, ||U - U1 B^T||_2).
    """
    u = np.asarray(u, dtype=np.float64)
    u1 = u[:, :split]
    a11 = _sym(u1.T @ u1)
    lam = np.linalg.eigvalsh(a11)
    if lam[0] <= 1e-12 * max(lam[-1], 1e-300):
        raise ValueError("leading block is numerically rank deficient")
    a12 = u1.T @ u[:, split:]
    bt = np.hstack([np.eye(split), np.linalg.solve(a11, a12)])
    res = np.linalg.norm(u - u1 @ bt, 2)
    return bt.T, float(res)


def tensor_2norm_dense(t, iters=100, restarts=5, seed=0):
    """Spectral norm of an explicit tensor by higher-order power iteration.

    Nonconvex; the best of ``restarts`` random starts is a lower bound on
    the true norm and is only ever used on the small side of inequality
    checks.
    """
    t = np.asarray(t, dtype=np.float64)
    rng = np.random.default_rng(seed)
    n1, n2, n3 = t.shape
    best = 0.0
    for _ in range(restarts):
        u, v, w = (rng.standard_normal(n) for n in (n1, n2, n3))
        u, v, w = u / np.linalg.norm(u), v / np.linalg.norm(v), w / np.linalg.norm(w)
        val = 0.0
        for _ in range(iters):
            u = np.einsum("ijk,j,k->i", t, v, w)
            u /= max(np.linalg.norm(u), 1e-300)
            v = np.einsum("ijk,i,k->j", t, u, w)
            v /= max(np.linalg.norm(v), 1e-300)
            w = np.einsum("ijk,i,j->k", t, u, v)
            nw = np.linalg.norm(w)
            w /= max(nw, 1e-300)
            if abs(nw - val) <= 1e-14 * max(nw, 1.0):
                val = nw
                break
            val = nw
        best = max(best, float(val))
    return best


def explicit_gram_of_F(f, mode, n_cap=200, rank_cap=5):
    """Explicit n x n Gram matrix of a structured tensor's mode unfolding.

    O(r^6)-per-element object from the expensive route the fast algorithm
    avoids; only for small validation instances.
    """
    f = _as_like(f)
    if f.dims[mode - 1] > n_cap:
        raise ValueError("mode size exceeds the explicit-Gram cap")
    if max(f.core.g.shape if hasattr(f.core, "g") else f.ranks) > rank_cap ** 2:
        raise ValueError("ranks exceed the explicit-Gram cap")
    k = contract_core(f.core, [None, None, None])       # materialized core
    k = np.moveaxis(k, mode - 1, 0)
    others = [f.factors[l - 1] for l in (1, 2, 3) if l != mode]
    mv = others[0].T @ others[0]
    mw = others[1].T @ others[1]
    g = np.einsum("xuv,yzw,uz,vw->xy", k, k, mv, mw, optimize=True)
    fac = f.factors[mode - 1]
    return _sym(fac @ g @ fac.T)
