"""Small dense complex Hermitian linear algebra.

Everything here works on ``numpy`` complex128 arrays of shape (d, d) with
d at most a few dozen.  The eigensolver is a cyclic complex Jacobi method
(compiled when available).  ``*_stack`` variants act on arrays of shape
(k, d, d) and take a vectorised shortcut when d == 1.
"""

from typing import NamedTuple

import numpy as np

from ._backend import kernels
from .errors import InputDomainError, UsageError

SUPPORTED_POWERS = (-1.0, -0.5, 0.5)


class EigenH(NamedTuple):
    values: np.ndarray
    vectors: np.ndarray


def as_matrix(M) -> np.ndarray:
    """Validate and convert to a finite square complex128 array."""
    arr = np.array(M, dtype=np.complex128, copy=True)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
        raise InputDomainError(f"expected a square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InputDomainError("matrix has non-finite entries")
    return arr


def hermitian(M) -> np.ndarray:
    """Hermitian matrix from ``M``, symmetrised so H[i, j] == conj(H[j, i]) exactly."""
    arr = as_matrix(M)
    return 0.5 * (arr + arr.conj().T)


def _check_hermitian(H) -> np.ndarray:
    arr = as_matrix(H)
    scale = 1.0 + np.abs(arr).max()
    if np.abs(arr - arr.conj().T).max() > 1e-12 * scale:
        raise InputDomainError("matrix is not Hermitian")
    return 0.5 * (arr + arr.conj().T)


def eigh(H) -> EigenH:
    """Ascending eigenvalues and orthonormal eigenvector columns of a Hermitian matrix."""
    h = _check_hermitian(H)
    w, v = kernels.jacobi_eigh(h)
    return EigenH(np.asarray(w), np.asarray(v))


def spectral_norm_hermitian(values) -> float:
    return float(np.max(np.abs(values))) if len(values) else 0.0


def default_floor(values) -> float:
    """Strict-positivity floor 1e-12 * (1 + ||H||)."""
    return 1e-12 * (1.0 + spectral_norm_hermitian(values))


def _from_spectrum(vectors, fvals) -> np.ndarray:
    out = (vectors * fvals) @ vectors.conj().T
    return 0.5 * (out + out.conj().T)


def positive_part(H, floor: float = 0.0) -> np.ndarray:
    """B_+ = sum of lambda * P_lambda over eigenvalues lambda > floor."""
    w, v = eigh(H)
    return _from_spectrum(v, np.where(w > floor, w, 0.0))


def opp_power(H, p: float, floor: float | None = None) -> np.ndarray:
    """f(H) with f(lam) = lam**p for lam > floor and 0 otherwise.

    With p = -1 this is the inverse of the positive part on its range,
    extended by zero.  ``floor`` defaults to 1e-12 * (1 + ||H||).
    """
    p = _check_power(p)
    w, v = eigh(H)
    if floor is None:
        floor = default_floor(w)
    keep = w > floor
    fw = np.zeros_like(w)
    fw[keep] = w[keep] ** p
    return _from_spectrum(v, fw)


def _check_power(p):
    p = float(p)
    if p not in SUPPORTED_POWERS:
        raise UsageError(f"unsupported exponent {p}; expected one of {SUPPORTED_POWERS}")
    return p


def op_norm(M) -> float:
    """Largest singular value, via the top eigenvalue of M* M."""
    arr = as_matrix(M)
    w, _ = kernels.jacobi_eigh(arr.conj().T @ arr)
    return float(np.sqrt(max(w[-1], 0.0)))


def min_max_eig_stack(Hs) -> tuple[np.ndarray, np.ndarray]:
    """Per-block smallest and largest eigenvalue for a (k, d, d) Hermitian stack."""
    Hs = np.asarray(Hs, dtype=np.complex128)
    if Hs.shape[1] == 1:
        vals = Hs[:, 0, 0].real
        return vals.copy(), vals.copy()
    lo = np.empty(Hs.shape[0])
    hi = np.empty(Hs.shape[0])
    for i, h in enumerate(Hs):
        w, _ = kernels.jacobi_eigh(h)
        lo[i], hi[i] = w[0], w[-1]
    return lo, hi


def opp_power_stack(Hs, p: float, floor: float | None = None) -> np.ndarray:
    """``opp_power`` applied block by block."""
    p = _check_power(p)
    Hs = np.asarray(Hs, dtype=np.complex128)
    if Hs.shape[1] == 1:
        vals = Hs[:, 0, 0].real
        fl = 1e-12 * (1.0 + np.abs(vals)) if floor is None else floor
        keep = vals > fl
        out = np.zeros(vals.shape)
        out[keep] = vals[keep] ** p
        return out.reshape(-1, 1, 1).astype(np.complex128)
    return np.stack([opp_power(h, p, floor) for h in Hs])


def op_norm_stack(Ms) -> np.ndarray:
    Ms = np.asarray(Ms, dtype=np.complex128)
    if Ms.shape[1] == 1:
        return np.abs(Ms[:, 0, 0])
    return np.array([op_norm(m) for m in Ms])
