"""Dense complex matrix primitives.

Matrices are plain ``numpy.ndarray`` objects of dtype ``complex128``. All
routines are pure functions of their inputs.
"""
import math

import numpy as np

# Leading coefficient of the backward error of the [13/13] Pade approximant,
# (13!)^2 / (26! 27!).
_PADE13_ERR_COEF = math.factorial(13) ** 2 / (math.factorial(26) * math.factorial(27))
_UNIT_ROUNDOFF = 2.0 ** -53

_PADE13 = (
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
)


def as_matrix(a, name="matrix"):
    """Coerce ``a`` to a finite 2-D complex array."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    return m


def _square(a, name="matrix"):
    m = as_matrix(a, name)
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be square, got shape {m.shape}")
    return m


def kron(a, b):
    """Kronecker product with the second factor as the fast index."""
    return np.kron(as_matrix(a, "a"), as_matrix(b, "b"))


def pade_threshold(tol):
    """Largest 1-norm for which the [13/13] approximant meets ``tol``."""
    tol = max(float(tol), _UNIT_ROUNDOFF)
    return (tol / _PADE13_ERR_COEF) ** (1.0 / 26.0)


def mat_exp(a, tol=1e-13):
    """Matrix exponential by scaling and squaring with a [13/13] Pade approximant.

    The scaling power is chosen so that the scaled matrix has 1-norm below
    the threshold at which the approximant's relative backward error is
    at most ``tol``.
    """
    a = _square(a, "a")
    dim = a.shape[0]
    ident = np.eye(dim, dtype=complex)
    norm1 = np.linalg.norm(a, 1)
    if norm1 == 0.0:
        return ident
    theta = pade_threshold(tol)
    s = max(0, int(math.ceil(math.log2(norm1 / theta))))
    x = a / 2.0**s

    b = _PADE13
    x2 = x @ x
    x4 = x2 @ x2
    x6 = x4 @ x2
    u = x @ (x6 @ (b[13] * x6 + b[11] * x4 + b[9] * x2)
             + b[7] * x6 + b[5] * x4 + b[3] * x2 + b[1] * ident)
    v = (x6 @ (b[12] * x6 + b[10] * x4 + b[8] * x2)
         + b[6] * x6 + b[4] * x4 + b[2] * x2 + b[0] * ident)
    r = np.linalg.solve(v - u, v + u)
    for _ in range(s):
        r = r @ r
    return r


def partial_trace_bath(x, d_sys, d_bath):
    """Trace out the second (bath) factor of a system-bath operator."""
    x = _square(x, "x")
    if x.shape[0] != d_sys * d_bath:
        raise ValueError(
            f"operator of size {x.shape[0]} does not factor as {d_sys} x {d_bath}"
        )
    return np.einsum("ibjb->ij", x.reshape(d_sys, d_bath, d_sys, d_bath))


def trace_norm(a):
    """Sum of singular values."""
    a = _square(a, "a")
    return float(np.sum(np.linalg.svd(a, compute_uv=False)))


def op_norm(a, kind="spectral"):
    """Spectral (largest singular value) or Frobenius norm."""
    a = as_matrix(a)
    if a.size == 0:
        return 0.0
    if kind == "spectral":
        return float(np.linalg.norm(a, 2))
    if kind == "fro":
        return float(np.linalg.norm(a, "fro"))
    raise ValueError(f"unknown norm kind {kind!r}")


def hermitian_residual(a, kind="spectral"):
    """Norm of ``a - a^dagger``."""
    a = _square(a, "a")
    return op_norm(a - a.conj().T, kind)


def unitary_residual(a, kind="spectral"):
    """Norm of ``a^dagger a - I``."""
    a = _square(a, "a")
    return op_norm(a.conj().T @ a - np.eye(a.shape[0]), kind)
