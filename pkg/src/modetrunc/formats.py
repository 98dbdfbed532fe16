"""Tucker-like tensor formats and structured algebra that never builds F.

Three core variants are supported:

* ``DenseCore``    -- an explicit r1 x r2 x r3 core tensor,
* ``DiagCore``     -- superdiagonal core (canonical format weights),
* ``KronCore``     -- Kronecker product of two cores, Kron(G, H)[ap, bq, cs]
  = g(p, q, s) h(a, b, c), the structure produced by Hadamard products.

Merged factor indices such as "ap" always put the second sub-index (the
H-side one) fastest; :func:`modetrunc.dense.row_kron` produces factors in
exactly this ordering, so Gram matrices of Kron-core unfoldings factor as
``kron(Ghat, Hhat)``.
"""

import json
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .dense import frob_norm, matrix_2norm, row_kron, unfold, read_tkr, write_tkr
from .errors import ResourceCapError

#: largest dense object (elements) that to_dense and exact residual
#: evaluation are allowed to materialize
MATERIALIZE_CAP = 20_000_000

#: largest product of effective mode ranks accepted by structured_inner
STRUCTURED_CAP = 100_000_000

#: switch structured_norm_sq to the eigen-truncated path above this
#: effective core size
_NORM_DIRECT_CAP = 2_000_000


# ---------------------------------------------------------------------------
# cores

@dataclass
class DenseCore:
    t: np.ndarray

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=np.float64)
        if self.t.ndim != 3:
            raise ValueError("dense core must be a 3-tensor")

    @property
    def ranks(self):
        return self.t.shape

    def materialize(self):
        return self.t


@dataclass
class DiagCore:
    weights: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64).ravel()

    @property
    def ranks(self):
        r = self.weights.size
        return (r, r, r)

    def materialize(self):
        r = self.weights.size
        t = np.zeros((r, r, r))
        idx = np.arange(r)
        t[idx, idx, idx] = self.weights
        return t


@dataclass
class KronCore:
    g: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        self.g = np.asarray(self.g, dtype=np.float64)
        self.h = np.asarray(self.h, dtype=np.float64)
        if self.g.ndim != 3 or self.h.ndim != 3:
            raise ValueError("Kron core parts must be 3-tensors")

    @property
    def ranks(self):
        return tuple(rg * rh for rg, rh in zip(self.g.shape, self.h.shape))

    def materialize(self):
        if int(np.prod(self.ranks)) > MATERIALIZE_CAP:
            raise ResourceCapError("Kron core too large to materialize")
        ra, rb = self.g.shape, self.h.shape
        return np.einsum("pqs,abc->paqbsc", self.g, self.h).reshape(
            ra[0] * rb[0], ra[1] * rb[1], ra[2] * rb[2])


def _promote(core):
    """Diagonal cores become dense; dense stays; Kron is rejected."""
    if isinstance(core, DiagCore):
        return DenseCore(core.materialize())
    if isinstance(core, DenseCore):
        return core
    raise ValueError("operation requires a dense or diagonal core")


# ---------------------------------------------------------------------------
# containers

@dataclass
class TuckerLike:
    core: object
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray
    _norm2: float | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=np.float64)
        self.v = np.asarray(self.v, dtype=np.float64)
        self.w = np.asarray(self.w, dtype=np.float64)
        for f, r in zip(self.factors, self.core.ranks):
            if f.ndim != 2 or f.shape[1] != r:
                raise ValueError("factor column count does not match the "
                                 "core's effective mode rank")

    @property
    def factors(self):
        return (self.u, self.v, self.w)

    @property
    def dims(self):
        return (self.u.shape[0], self.v.shape[0], self.w.shape[0])

    @property
    def ranks(self):
        return self.core.ranks


@dataclass
class TuckerOrtho:
    core: np.ndarray
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    _norm2: float | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.core = np.asarray(self.core, dtype=np.float64)
        self.x = np.asarray(self.x, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64)
        self.z = np.asarray(self.z, dtype=np.float64)
        for f in (self.x, self.y, self.z):
            r = f.shape[1]
            if r and frob_norm(f.T @ f - np.eye(r)) > 1e-10 * max(1.0, np.sqrt(r)):
                raise ValueError("factors of TuckerOrtho must be orthonormal")

    @property
    def factors(self):
        return (self.x, self.y, self.z)

    @property
    def dims(self):
        return (self.x.shape[0], self.y.shape[0], self.z.shape[0])

    @property
    def ranks(self):
        return self.core.shape

    def as_like(self):
        return TuckerLike(DenseCore(self.core), self.x, self.y, self.z,
                          _norm2=self._norm2)


def _as_like(t):
    return t.as_like() if isinstance(t, TuckerOrtho) else t


# ---------------------------------------------------------------------------
# core contraction machinery

def _kron_first_contract(core, m, mode):
    """Contract one mode of a Kron core with matrix ``m`` in two stages
    (H-side sub-index first, then G-side), returning a dense array whose
    remaining axes keep the merged "ap" indexing.  Axes come out in mode
    order with the contracted mode replaced by the rows of ``m``."""
    perm = {1: (0, 1, 2), 2: (1, 0, 2), 3: (2, 0, 1)}[mode]
    g = np.transpose(core.g, perm)
    h = np.transpose(core.h, perm)
    out = m.shape[0]
    mr = m.reshape(out, g.shape[0], h.shape[0])
    t1 = np.einsum("opa,abc->opbc", mr, h)
    t2 = np.einsum("opbc,pqs->oqbsc", t1, g)
    res = t2.reshape(out, g.shape[1] * h.shape[1], g.shape[2] * h.shape[2])
    if mode == 2:
        res = np.moveaxis(res, 0, 1)        # axes back to (1, out, 3)
    elif mode == 3:
        res = np.moveaxis(res, 0, 2)
    return res


def _tensordot_mode(arr, m, mode):
    res = np.tensordot(m, arr, axes=(1, mode - 1))
    return np.moveaxis(res, 0, mode - 1)


def contract_core(core, mats):
    """Contract a core with one matrix per mode.

    ``mats`` is a 3-sequence; entry ``l`` is an ``(out_l, R_l)`` matrix or
    ``None`` to leave that mode's (merged) effective index untouched.
    Modes are processed smallest output dimension first, which fixes the
    intermediate sizes deterministically.
    """
    mats = list(mats)
    if isinstance(core, DiagCore):
        r = core.weights.size
        full = [np.eye(r) if m is None else np.asarray(m) for m in mats]
        return np.einsum("s,as,bs,cs->abc", core.weights, *full, optimize=True)

    todo = [(l, np.asarray(mats[l - 1])) for l in (1, 2, 3)
            if mats[l - 1] is not None]
    todo.sort(key=lambda lm: lm[1].shape[0])

    if isinstance(core, KronCore):
        if not todo:
            return core.materialize()
        mode0, m0 = todo[0]
        arr = _kron_first_contract(core, m0, mode0)
        todo = todo[1:]
    else:
        arr = core.materialize()
    for mode, m in todo:
        arr = _tensordot_mode(arr, m, mode)
    return arr


def _core_inner(core, d):
    """Frobenius inner product of a core with a dense array of equal
    effective shape, without materializing Kron cores."""
    if isinstance(core, DenseCore):
        return float(np.dot(core.t.ravel(), d.ravel()))
    if isinstance(core, DiagCore):
        return float(np.einsum("sss->s", d) @ core.weights)
    ra, rb = core.g.shape, core.h.shape
    dr = d.reshape(ra[0], rb[0], ra[1], rb[1], ra[2], rb[2])
    return float(np.einsum("pqs,abc,paqbsc->", core.g, core.h, dr,
                           optimize=True))


# ---------------------------------------------------------------------------
# constructors for bilinear operations

def from_canonical(u, v, w):
    """Wrap a canonical (CP) triple as a Tucker-like tensor with a
    superdiagonal core of unit weights."""
    u, v, w = (np.asarray(f, dtype=np.float64) for f in (u, v, w))
    if not (u.shape[1] == v.shape[1] == w.shape[1]):
        raise ValueError("canonical factors must share the column count")
    return TuckerLike(DiagCore(np.ones(u.shape[1])), u, v, w)


def hadamard(a, b):
    """Pointwise product of two Tucker-like tensors as a Kron-core tensor."""
    a, b = _as_like(a), _as_like(b)
    if a.dims != b.dims:
        raise ValueError(f"mode size mismatch: {a.dims} vs {b.dims}")
    ca, cb = _promote(a.core), _promote(b.core)
    return TuckerLike(KronCore(ca.t, cb.t),
                      row_kron(a.u, b.u),
                      row_kron(a.v, b.v),
                      row_kron(a.w, b.w))


def linear_combine(terms):
    """Sum of scaled Tucker-like tensors as one block-diagonal-core tensor."""
    terms = [(float(c), _as_like(t)) for c, t in terms]
    if not terms:
        raise ValueError("need at least one term")
    dims = terms[0][1].dims
    for _, t in terms:
        if t.dims != dims:
            raise ValueError("mode size mismatch in linear combination")
    cores = [_promote(t.core).t for _, t in terms]
    sizes = np.array([c.shape for c in cores])
    big = np.zeros(tuple(sizes.sum(axis=0)))
    offs = np.zeros(3, dtype=int)
    for (coef, _), c in zip(terms, cores):
        s = c.shape
        big[offs[0]:offs[0] + s[0], offs[1]:offs[1] + s[1],
            offs[2]:offs[2] + s[2]] = coef * c
        offs += s
    return TuckerLike(DenseCore(big),
                      np.hstack([t.u for _, t in terms]),
                      np.hstack([t.v for _, t in terms]),
                      np.hstack([t.w for _, t in terms]))


def to_dense(t, cap=MATERIALIZE_CAP):
    """Evaluate a structured tensor elementwise (successive mode products)."""
    t = _as_like(t)
    if int(np.prod(t.dims)) > cap:
        raise ResourceCapError(f"dense evaluation of dims {t.dims} exceeds "
                               f"the cap of {cap} elements")
    return contract_core(t.core, list(t.factors))


# ---------------------------------------------------------------------------
# inner products, norms, distances

def structured_inner(a, b):
    """Frobenius inner product via per-mode factor cross-Gram matrices.

    Cost is O(n Ra Rb) per mode plus core contractions; the full tensors
    are never formed.  The core with the larger effective size is
    contracted first (smallest-intermediate-first inside contract_core).
    """
    a, b = _as_like(a), _as_like(b)
    if a.dims != b.dims:
        raise ValueError(f"mode size mismatch: {a.dims} vs {b.dims}")
    pa, pb = int(np.prod(a.ranks)), int(np.prod(b.ranks))
    if min(pa, pb) > STRUCTURED_CAP:
        raise ResourceCapError("effective rank product exceeds the "
                               "structured_inner cap")
    mats = [fa.T @ fb for fa, fb in zip(a.factors, b.factors)]
    if pa <= pb:
        d = contract_core(b.core, mats)
        return _core_inner(a.core, d)
    d = contract_core(a.core, [m.T for m in mats])
    return _core_inner(b.core, d)


def structured_norm_sq(t):
    """Cached squared Frobenius norm of a structured tensor.

    For large effective cores the factor Gram matrices are eigen-truncated
    first, which bounds the contracted core by min(n, R) per mode.
    """
    tl = _as_like(t)
    if t._norm2 is not None:
        return t._norm2
    if int(np.prod(tl.ranks)) <= _NORM_DIRECT_CAP:
        val = structured_inner(tl, tl)
    else:
        ls = []
        for f in tl.factors:
            m = f.T @ f
            lam, q = np.linalg.eigh(0.5 * (m + m.T))
            keep = lam > max(lam[-1], 0.0) * 1e-15
            ls.append((np.sqrt(lam[keep])[:, None] * q[:, keep].T))
        c = contract_core(tl.core, ls)
        val = float(np.dot(c.ravel(), c.ravel()))
    val = max(val, 0.0)
    t._norm2 = val
    tl._norm2 = val
    return val


def frob_distance(a, b):
    """Gram-based Frobenius distance sqrt(<a,a> - 2<a,b> + <b,b>).

    The radicand is clamped at zero; cancellation limits the resolvable
    relative distance to about 1e-8 (square root of machine precision).
    """
    sq = structured_norm_sq(a) - 2.0 * structured_inner(a, b) \
        + structured_norm_sq(b)
    return float(np.sqrt(max(sq, 0.0)))


def residual_frob_norm(a, b, cap=MATERIALIZE_CAP):
    """Exact structured ||a - b||_F via per-mode QR of stacked factors.

    Unlike :func:`frob_distance` this forms the difference in an
    orthonormal basis and sums only nonnegative terms, so it resolves
    residuals down to machine precision.  The contracted difference core
    has at most min(n, Ra + Rb) entries per mode, which must stay under
    ``cap`` in total.
    """
    a, b = _as_like(a), _as_like(b)
    if a.dims != b.dims:
        raise ValueError(f"mode size mismatch: {a.dims} vs {b.dims}")
    ras, rbs = [], []
    total = 1
    for fa, fb in zip(a.factors, b.factors):
        q, r = np.linalg.qr(np.hstack([fa, fb]))
        ras.append(r[:, :fa.shape[1]])
        rbs.append(r[:, fa.shape[1]:])
        total *= r.shape[0]
    if total > cap:
        raise ResourceCapError("residual core exceeds the materialization cap")
    da = contract_core(a.core, ras)
    db = contract_core(b.core, rbs)
    return float(np.linalg.norm((da - db).ravel()))


def accuracy_constant_cF(f, mode):
    """Frobenius perturbation constant ||U'||_F ||V||_2 ||W||_2 / ||F||_F
    for the splitting that isolates ``mode``."""
    f = _as_like(f)
    if not isinstance(f.core, KronCore):
        raise ValueError("accuracy constant is defined for Kron cores")
    ghat_u = unfold(f.core.g, mode)
    hhat_u = unfold(f.core.h, mode)
    ghat = ghat_u @ ghat_u.T
    hhat = hhat_u @ hhat_u.T
    fac = f.factors[mode - 1]
    m = (fac.T @ fac).reshape(ghat.shape[0], hhat.shape[0],
                              ghat.shape[0], hhat.shape[0])
    upf2 = float(np.einsum("paPA,pP,aA->", m, ghat, hhat, optimize=True))
    upf = np.sqrt(max(upf2, 0.0))
    others = [f.factors[l - 1] for l in (1, 2, 3) if l != mode]
    return upf * matrix_2norm(others[0]) * matrix_2norm(others[1]) \
        / np.sqrt(structured_norm_sq(f))


# ---------------------------------------------------------------------------
# serialization: directory of TKR1 binaries plus a JSON manifest

def _atomic_json(path, obj):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    with os.fdopen(fd, "w") as fh:
        json.dump(obj, fh, indent=2)
    os.replace(tmp, path)


def save_tucker(t, directory):
    os.makedirs(directory, exist_ok=True)
    tl = _as_like(t)
    kind = {"DenseCore": "dense", "DiagCore": "diagonal",
            "KronCore": "kron"}[type(tl.core).__name__]
    manifest = {
        "format": "tucker-ortho" if isinstance(t, TuckerOrtho) else "tucker-like",
        "core": kind,
        "dims": [int(d) for d in tl.dims],
        "ranks": [int(r) for r in tl.ranks],
    }
    for name, f in zip(("factor1", "factor2", "factor3"), tl.factors):
        write_tkr(os.path.join(directory, name + ".tkr"), f)
    if kind == "dense":
        write_tkr(os.path.join(directory, "core.tkr"), tl.core.t)
    elif kind == "diagonal":
        write_tkr(os.path.join(directory, "core_diag.tkr"),
                  tl.core.weights[:, None])
    else:
        write_tkr(os.path.join(directory, "core_g.tkr"), tl.core.g)
        write_tkr(os.path.join(directory, "core_h.tkr"), tl.core.h)
    _atomic_json(os.path.join(directory, "manifest.json"), manifest)


def load_tucker(directory):
    with open(os.path.join(directory, "manifest.json")) as fh:
        manifest = json.load(fh)
    facs = [read_tkr(os.path.join(directory, f"factor{l}.tkr"))
            for l in (1, 2, 3)]
    kind = manifest["core"]
    if kind == "dense":
        core = DenseCore(read_tkr(os.path.join(directory, "core.tkr")))
    elif kind == "diagonal":
        core = DiagCore(read_tkr(os.path.join(directory, "core_diag.tkr")).ravel())
    elif kind == "kron":
        core = KronCore(read_tkr(os.path.join(directory, "core_g.tkr")),
                        read_tkr(os.path.join(directory, "core_h.tkr")))
    else:
        raise ValueError(f"unknown core kind {kind!r}")
    if manifest["format"] == "tucker-ortho":
        return TuckerOrtho(core.t if isinstance(core, DenseCore)
                           else core.materialize(), *facs)
    return TuckerLike(core, *facs)
