"""Dense complex-matrix primitives.

All operators on a bipartite space H (x) K use the input-major flat index
``i = h * dim_k + k``, so ``np.kron(a_on_H, b_on_K)`` is the natural product
and the partial trace over K is a contiguous-stride sum.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError, InvalidArgumentError, NumericalFailureError

HERMITIAN_TOL = 1e-12
PSD_DOMAIN_TOL = 1e-6


def as_matrix(m) -> np.ndarray:
    """Coerce ``m`` to a 2-D complex128 array."""
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise InvalidArgumentError(f"expected a non-empty 2-D matrix, got shape {a.shape}")
    return a


def hermitize(m) -> np.ndarray:
    """Return ``(M + M^dagger) / 2``, unchecked."""
    a = np.asarray(m, dtype=np.complex128)
    return 0.5 * (a + a.conj().T)


def as_hermitian(m, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Validate ``m`` as Hermitian and return its symmetrized copy.

    The asymmetry ``max |M[i,j] - conj(M[j,i])|`` must not exceed
    ``tol * max(1, max|M|)``; anything larger is treated as a bug upstream
    rather than rounding drift.
    """
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise InvalidArgumentError(f"Hermitian matrix must be square, got {a.shape}")
    scale = max(1.0, float(np.max(np.abs(a))))
    asym = float(np.max(np.abs(a - a.conj().T)))
    if asym > tol * scale:
        raise InvalidArgumentError(f"matrix is not Hermitian (asymmetry {asym:.3e})")
    return hermitize(a)


def kron(a, b) -> np.ndarray:
    """Kronecker product with ``out[i1*rb + i2, j1*cb + j2] = a[i1, j1] * b[i2, j2]``."""
    return np.kron(as_matrix(a), as_matrix(b))


def partial_trace_k(s, dim_h: int, dim_k: int) -> np.ndarray:
    """Trace out the output factor K of an operator on H (x) K."""
    a = as_matrix(s)
    if a.shape != (dim_h * dim_k, dim_h * dim_k):
        raise InvalidArgumentError(
            f"operator of shape {a.shape} does not act on a {dim_h}x{dim_k} space"
        )
    return np.einsum("ikjk->ij", a.reshape(dim_h, dim_k, dim_h, dim_k))


def partial_trace_h(s, dim_h: int, dim_k: int) -> np.ndarray:
    """Trace out the input factor H of an operator on H (x) K."""
    a = as_matrix(s)
    if a.shape != (dim_h * dim_k, dim_h * dim_k):
        raise InvalidArgumentError(
            f"operator of shape {a.shape} does not act on a {dim_h}x{dim_k} space"
        )
    return np.einsum("hihj->ij", a.reshape(dim_h, dim_k, dim_h, dim_k))


def herm_eig(m) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian matrix.

    Returns ascending real eigenvalues and the unitary matrix whose columns
    are the corresponding eigenvectors.
    """
    a = as_hermitian(m)
    try:
        w, v = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailureError(f"Hermitian eigensolver did not converge: {exc}") from exc
    return w, v


def psd_power(m, exponent: float) -> np.ndarray:
    """Matrix power of a PSD matrix through its eigen-decomposition.

    Slightly negative eigenvalues (round-off) are clamped to zero. For
    negative exponents eigenvalues are clamped from below at
    ``1e-12 * max(lambda_max, 1)`` so near-singular inputs stay finite.
    """
    w, v = herm_eig(m)
    top = float(w[-1])
    if w[0] < -PSD_DOMAIN_TOL * max(top, 0.0) or (top <= 0.0 and w[0] < 0.0):
        raise DomainError(f"matrix is not positive semidefinite: eigenvalue {w[0]:.6e}")
    if exponent < 0:
        floor = 1e-12 * max(top, 1.0)
        w = np.maximum(w, floor)
    else:
        w = np.maximum(w, 0.0)
    return hermitize((v * w**exponent) @ v.conj().T)


def psd_project(m, floor: float = 0.0) -> np.ndarray:
    """Clamp the spectrum of a Hermitian matrix from below at ``floor``."""
    w, v = herm_eig(m)
    return hermitize((v * np.maximum(w, floor)) @ v.conj().T)


def matrix_to_json(m) -> dict:
    """Encode a complex matrix as ``{"rows", "cols", "data": [[re, im], ...]}``."""
    a = as_matrix(m)
    flat = a.reshape(-1)
    return {
        "rows": int(a.shape[0]),
        "cols": int(a.shape[1]),
        "data": [[float(z.real), float(z.imag)] for z in flat],
    }


def matrix_from_json(obj: dict) -> np.ndarray:
    try:
        rows, cols, data = int(obj["rows"]), int(obj["cols"]), obj["data"]
    except (KeyError, TypeError) as exc:
        raise InvalidArgumentError(f"malformed matrix JSON: {exc}") from exc
    if rows < 1 or cols < 1 or len(data) != rows * cols:
        raise InvalidArgumentError("matrix JSON entry count does not match rows*cols")
    arr = np.array([complex(float(re), float(im)) for re, im in data], dtype=np.complex128)
    return arr.reshape(rows, cols)
