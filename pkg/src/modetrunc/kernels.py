"""Hot kernels for the Gram cross approximation, numba-jitted when available.

Set the environment variable ``MODETRUNC_NO_NUMBA=1`` to force the pure
numpy implementations (also used automatically when numba is missing).
``benchmarks/bench_kernels.py`` compares both paths.

All kernels take the mode factor already reshaped to ``(n, ra, rb)`` where
column ``ap`` of the original ``n x ra*rb`` factor maps to ``[p, a]`` (the
second sub-index ``a`` varies fastest).
"""

import os

import numpy as np

_want_numba = os.environ.get("MODETRUNC_NO_NUMBA", "") not in ("1", "true", "yes")

if _want_numba:
    try:
        from numba import njit
    except ImportError:          # pragma: no cover - numba is a hard dep here
        _want_numba = False

USE_NUMBA = _want_numba


def gram_diag_kron_np(u3, ghat, hhat):
    """d(i) = trace(Ghat @ U_i @ Hhat @ U_i^T) for every row block U_i."""
    t = np.matmul(ghat, u3)          # (n, ra, rb) via broadcasting
    t = np.matmul(t, hhat)
    return np.einsum("ipa,ipa->i", t, u3)


def gram_column_kron_np(u2, u3, ghat, hhat, i_star):
    """Column i_star of U (Ghat (x) Hhat) U^T, two-stage product."""
    m = ghat @ u3[i_star] @ hhat     # (ra, rb)
    return u2 @ m.ravel()


if USE_NUMBA:
    from numba import njit

    @njit(cache=True)
    def _gram_diag_kron_nb(u3, ghat, hhat):
        n, ra, rb = u3.shape
        d = np.empty(n)
        for i in range(n):
            t = np.dot(np.dot(ghat, u3[i]), hhat)
            acc = 0.0
            for p in range(ra):
                for a in range(rb):
                    acc += t[p, a] * u3[i, p, a]
            d[i] = acc
        return d

    @njit(cache=True)
    def _gram_column_kron_nb(u2, u3, ghat, hhat, i_star):
        m = np.dot(np.dot(ghat, u3[i_star]), hhat)
        return np.dot(u2, m.ravel())

    def gram_diag_kron(u3, ghat, hhat):
        return _gram_diag_kron_nb(np.ascontiguousarray(u3),
                                  np.ascontiguousarray(ghat),
                                  np.ascontiguousarray(hhat))

    def gram_column_kron(u2, u3, ghat, hhat, i_star):
        return _gram_column_kron_nb(np.ascontiguousarray(u2),
                                    np.ascontiguousarray(u3),
                                    np.ascontiguousarray(ghat),
                                    np.ascontiguousarray(hhat), i_star)
else:
    gram_diag_kron = gram_diag_kron_np
    gram_column_kron = gram_column_kron_np


def gram_diag_dense(u, s):
    """d(i) = U[i, :] S U[i, :]^T for a dense R x R core Gram."""
    return np.einsum("ir,rs,is->i", u, s, u, optimize=True)


def gram_column_dense(u, s, i_star):
    return u @ (s @ u[i_star])
