"""Cross approximation of Gram matrices of structured unfoldings.

The implied matrix is A = U S U^T where U is a mode factor and S the Gram
matrix of the core's mode unfolding (Kronecker-factored for Kron cores).
Diagonal pivoting widens the supported cross one row/column per step while
maintaining an eigen-form approximation X Lambda X^T; for Gram matrices
this is the unfinished Cholesky decomposition, at O(n r^2 + r^3) per step
after an O(r^4) core precomputation.

Tolerance semantics: ``eps`` compares residual *traces* (squared Frobenius
norms of the residual factor), so ``err <= eps * nrm`` bounds the factor
norm by sqrt(eps) times its initial value.  The default pipeline eps of
1e-12 therefore targets subspace errors around 1e-6.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .dense import unfold
from .formats import DiagCore, KronCore, TuckerOrtho

#: residual diagonal entries below this fraction of the initial trace are
#: treated as roundoff noise
_FLOOR = 1e-15


@dataclass
class CoreGram:
    """Gram data of a core's mode unfolding.

    ``kind`` is "kron" (ghat, hhat set), "dense" (s set) or "diag"
    (weights_sq set).  All blocks are symmetric positive semidefinite.
    """
    kind: str
    mode: int
    ghat: np.ndarray | None = None
    hhat: np.ndarray | None = None
    s: np.ndarray | None = None
    weights_sq: np.ndarray | None = None


@dataclass
class GramOracle:
    factor: np.ndarray
    core_gram: CoreGram

    def __post_init__(self):
        self.factor = np.asarray(self.factor, dtype=np.float64)
        cg = self.core_gram
        if cg.kind == "kron":
            self._u3 = np.ascontiguousarray(
                self.factor.reshape(self.factor.shape[0],
                                    cg.ghat.shape[0], cg.hhat.shape[0]))

    @property
    def n(self):
        return self.factor.shape[0]


@dataclass
class CrossState:
    """Running eigen-form approximation of a Gram matrix (pivoting state)."""
    x: np.ndarray
    lam: np.ndarray
    d: np.ndarray
    nrm: float
    err: float
    pivots: list
    err_history: list = field(default_factory=list)
    floor_hit: bool = False
    rmax_hit: bool = False

    @property
    def rank(self):
        return self.x.shape[1]


def _sym(a):
    return 0.5 * (a + a.T)


def core_grams(core, mode):
    """Precompute the Gram data of a core's mode unfolding.

    Kron cores give Ghat[p,p'] = G[p,qs] G[qs,p'] and the analogous Hhat in
    O(r^4); dense cores give the full R x R unfolding Gram; diagonal cores
    reduce to squared weights.
    """
    if mode not in (1, 2, 3):
        raise ValueError(f"mode must be 1, 2 or 3, got {mode}")
    if isinstance(core, KronCore):
        gu = unfold(core.g, mode)
        hu = unfold(core.h, mode)
        return CoreGram("kron", mode, ghat=_sym(gu @ gu.T), hhat=_sym(hu @ hu.T))
    if isinstance(core, DiagCore):
        return CoreGram("diag", mode, weights_sq=core.weights ** 2)
    cu = unfold(core.t, mode)
    return CoreGram("dense", mode, s=_sym(cu @ cu.T))


def oracle_from_matrix(a):
    """Oracle whose implied matrix is the explicit SPSD matrix ``a``
    (identity factor, dense core Gram); used for oracle-equivalence tests."""
    a = _sym(np.asarray(a, dtype=np.float64))
    return GramOracle(np.eye(a.shape[0]), CoreGram("dense", 1, s=a))


def gram_diag(o):
    """Diagonal of the implied Gram matrix, O(r^3) per entry on the Kron
    path."""
    cg = o.core_gram
    if cg.kind == "kron":
        return kernels.gram_diag_kron(o._u3, cg.ghat, cg.hhat)
    if cg.kind == "diag":
        return (o.factor ** 2) @ cg.weights_sq
    return kernels.gram_diag_dense(o.factor, cg.s)


def gram_column(o, i_star):
    """Column ``i_star`` of the implied Gram matrix, O(n r^2 + r^3) on the
    Kron path via the two-stage product."""
    if not 0 <= i_star < o.n:
        raise ValueError(f"pivot index {i_star} out of range [0, {o.n})")
    cg = o.core_gram
    if cg.kind == "kron":
        return kernels.gram_column_kron(o.factor, o._u3, cg.ghat, cg.hhat,
                                        i_star)
    if cg.kind == "diag":
        return o.factor @ (cg.weights_sq * o.factor[i_star])
    return kernels.gram_column_dense(o.factor, cg.s, i_star)


def rediagonalize(lam, b):
    """Eigen-decompose diag(lam, 0) + b b^T; returns orthogonal V and the
    eigenvalues D in descending order.

    A full dense symmetric eigensolve is used; it has the same O(p^3)
    bound as the specialized rank-one secular-equation updaters and p
    stays small.
    """
    lam = np.asarray(lam, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if b.size != lam.size + 1:
        raise ValueError("update vector must have one more entry than lam")
    m = np.diag(np.append(lam, 0.0)) + np.outer(b, b)
    d, v = np.linalg.eigh(m)
    return v[:, ::-1], d[::-1]


def eigensplit_stop(state, eps, window):
    """Eigenvalue-split stopping rule: true when the ``window`` smallest
    eigenvalues (the most recently added ones) all fall below eps times
    the dominant eigenvalue.  Off by default in the pipeline."""
    if window < 1:
        raise ValueError("window must be >= 1")
    lam = state.lam
    if lam.size <= window:
        return False
    return bool(np.all(lam[-window:] < eps * lam[0]))


def run_cross(o, eps, r_max, stopping="frobenius", window=3):
    """Diagonal-pivoted cross approximation of the implied Gram matrix.

    Iterates until the residual trace drops below ``eps`` times the
    initial trace, the rank reaches ``r_max``, or the pivot hits the
    machine-precision floor.  Ties in the pivot search break toward the
    lowest index.  Negative residual diagonal entries (roundoff) are
    clamped to zero for pivoting and error accumulation.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if r_max < 1:
        raise ValueError("r_max must be >= 1")
    n = o.n
    d = gram_diag(o).astype(np.float64).copy()
    nrm = float(np.sum(np.maximum(d, 0.0)))
    x = np.zeros((n, 0))
    lam = np.zeros(0)
    state = CrossState(x, lam, d, nrm, nrm, [])
    if nrm == 0.0:
        state.err = 0.0
        return state

    while True:
        d_pos = np.maximum(state.d, 0.0)
        i_star = int(np.argmax(d_pos))
        if d_pos[i_star] <= _FLOOR * nrm:
            state.floor_hit = True
            break
        a_col = gram_column(o, i_star)
        if state.rank:
            a_col = a_col - state.x @ (state.lam * state.x[i_star])
        piv = a_col[i_star]
        if piv <= _FLOOR * nrm:
            state.floor_hit = True
            break
        x_star = a_col / np.sqrt(piv)
        state.d = state.d - x_star ** 2

        # orthogonalize against span X (classical Gram-Schmidt, twice)
        b1 = state.x.T @ x_star
        w = x_star - state.x @ b1
        b2 = state.x.T @ w
        w = w - state.x @ b2
        beta = float(np.linalg.norm(w))
        if beta <= 1e-14 * float(np.linalg.norm(x_star)):
            state.floor_hit = True
            break
        b = np.append(b1 + b2, beta)
        v, dd = rediagonalize(state.lam, b)
        state.x = np.hstack([state.x, (w / beta)[:, None]]) @ v
        state.lam = dd
        state.pivots.append(i_star)
        state.err = float(np.sum(np.maximum(state.d, 0.0)))
        state.err_history.append(state.err)

        if state.err <= eps * nrm:
            break
        if stopping == "eigensplit" and eigensplit_stop(state, eps, window):
            break
        if state.rank >= r_max:
            state.rmax_hit = state.err > eps * nrm
            break
    return state


def mode_subspace(f, mode, eps, r_max, stopping="frobenius", window=3):
    """Orthonormal basis approximating the dominant mode subspace of a
    structured tensor, via the cross on the Gram of the simpler split
    tensor (core times this mode's factor only)."""
    if isinstance(f, TuckerOrtho):
        f = f.as_like()
    factor = f.factors[mode - 1]
    oracle = GramOracle(factor, core_grams(f.core, mode))
    state = run_cross(oracle, eps, r_max, stopping=stopping, window=window)
    return state.x, state
