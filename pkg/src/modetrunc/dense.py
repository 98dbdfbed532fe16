"""Dense 3-tensor container plus the small matrix utilities everything uses.

A dense 3-tensor is a float64 ``numpy.ndarray`` of shape ``(n1, n2, n3)``.
Logically the element a(i, j, k) uses 1-based indices in documentation and
0-based indices in code; storage follows column-major (Fortran) layout
semantics: in a merged multi-index the first listed index varies fastest.

The three unfoldings use the cyclic convention

    A1 = A[i, jk]   (n1 x n2*n3, j fastest)
    A2 = A[j, ki]   (n2 x n3*n1, k fastest)
    A3 = A[k, ij]   (n3 x n1*n2, i fastest)
"""

import struct

import numpy as np

_MAGIC = b"TKR1"


def _as3d(t):
    t = np.asarray(t, dtype=np.float64)
    if t.ndim != 3:
        raise ValueError(f"expected a 3-tensor, got ndim={t.ndim}")
    return t


def unfold(t, mode):
    """Matricize ``t`` along ``mode`` (1, 2 or 3), cyclic column ordering."""
    t = _as3d(t)
    n1, n2, n3 = t.shape
    if mode == 1:
        return t.reshape(n1, n2 * n3, order="F")
    if mode == 2:
        return np.transpose(t, (1, 2, 0)).reshape(n2, n3 * n1, order="F")
    if mode == 3:
        return np.transpose(t, (2, 0, 1)).reshape(n3, n1 * n2, order="F")
    raise ValueError(f"mode must be 1, 2 or 3, got {mode}")


def fold(m, mode, dims):
    """Inverse of :func:`unfold`; bit-exact roundtrip."""
    m = np.asarray(m, dtype=np.float64)
    n1, n2, n3 = dims
    shapes = {1: (n1, n2 * n3), 2: (n2, n3 * n1), 3: (n3, n1 * n2)}
    if mode not in shapes:
        raise ValueError(f"mode must be 1, 2 or 3, got {mode}")
    if m.shape != shapes[mode]:
        raise ValueError(f"matrix shape {m.shape} does not match mode-{mode} "
                         f"unfolding of dims {dims}")
    if mode == 1:
        return m.reshape(n1, n2, n3, order="F")
    if mode == 2:
        return np.transpose(m.reshape(n2, n3, n1, order="F"), (2, 0, 1))
    return np.transpose(m.reshape(n3, n1, n2, order="F"), (1, 2, 0))


def mode_mul(t, m, mode):
    """Multiply ``t`` by matrix ``m`` along ``mode``."""
    t = _as3d(t)
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError("mode factor must be a matrix")
    if m.shape[1] != t.shape[mode - 1]:
        raise ValueError(f"matrix has {m.shape[1]} columns, mode-{mode} size "
                         f"is {t.shape[mode - 1]}")
    dims = list(t.shape)
    dims[mode - 1] = m.shape[0]
    return fold(m @ unfold(t, mode), mode, tuple(dims))


def frob_inner(a, b):
    """Frobenius inner product of two equally sized dense tensors."""
    a = _as3d(a)
    b = _as3d(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.dot(a.ravel(), b.ravel()))


def frob_norm(a):
    return float(np.linalg.norm(np.asarray(a, dtype=np.float64).ravel()))


def matrix_2norm(m):
    """Spectral norm via the eigenvalues of the smaller-side Gram matrix."""
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError("expected a matrix")
    if m.size == 0:
        return 0.0
    g = m @ m.T if m.shape[0] <= m.shape[1] else m.T @ m
    g = 0.5 * (g + g.T)
    lam = np.linalg.eigvalsh(g)[-1]
    return float(np.sqrt(max(lam, 0.0)))


def row_kron(a, b):
    """Row-wise Kronecker (transposed Khatri-Rao) product.

    Column (a_col from ``b``, p_col from ``a``) of the result is the
    elementwise product b[:, a_col] * a[:, p_col]; the second operand's
    column index varies fastest, matching the merged "ap" factor index of
    Kronecker-structured cores.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape[0] != b.shape[0]:
        raise ValueError(f"row mismatch: {a.shape[0]} vs {b.shape[0]}")
    n = a.shape[0]
    return (a[:, :, None] * b[:, None, :]).reshape(n, a.shape[1] * b.shape[1])


# ---------------------------------------------------------------------------
# Binary tensor container: magic "TKR1", u8 order (2 or 3), order x u64 LE
# dims, then raw little-endian float64 data in column-major order.

def write_tkr(path, arr):
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim not in (2, 3):
        raise ValueError("TKR1 containers hold matrices or 3-tensors")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<B", arr.ndim))
        for d in arr.shape:
            fh.write(struct.pack("<Q", d))
        fh.write(np.asfortranarray(arr).tobytes(order="F"))


def read_tkr(path):
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _MAGIC:
            raise ValueError(f"bad magic bytes {magic!r}, expected {_MAGIC!r}")
        (order,) = struct.unpack("<B", fh.read(1))
        if order not in (2, 3):
            raise ValueError(f"unsupported tensor order {order}")
        dims = struct.unpack(f"<{order}Q", fh.read(8 * order))
        count = int(np.prod(dims))
        data = np.frombuffer(fh.read(8 * count), dtype="<f8", count=count)
    return data.reshape(dims, order="F").astype(np.float64)
