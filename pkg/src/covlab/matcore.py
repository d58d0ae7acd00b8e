"""Dense symmetric-matrix numerics.

Matrices are plain ``numpy`` arrays. ``as_sym`` is the gatekeeper that turns an
arbitrary square array into a validated, exactly symmetric, read-only copy;
``Spectrum`` carries a sorted eigenvalue list when the eigenvalues are known
in closed form (as for the experiment covariances).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DomainError, NumericFailure, SizeError
from .rng import RandomStream

KRON_MAX_DIM = 256


def as_sym(a) -> np.ndarray:
    """Validate ``a`` and return the symmetrized copy ``(a + a.T) / 2``."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise DomainError(f"expected a nonempty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DomainError("matrix has non-finite entries")
    s = 0.5 * (a + a.T)
    s.flags.writeable = False
    return s


@dataclass(frozen=True)
class Spectrum:
    """Nonincreasing, nonnegative eigenvalues of a nonzero PSD matrix."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float).ravel()
        if v.size < 1:
            raise DomainError("empty spectrum")
        if not np.all(np.isfinite(v)):
            raise DomainError("spectrum has non-finite entries")
        if np.any(v < 0):
            raise DomainError("spectrum has negative entries")
        if np.any(np.diff(v) > 0):
            raise DomainError("spectrum must be nonincreasing")
        if v[0] <= 0:
            raise DomainError("spectrum of the zero matrix")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def from_values(cls, values) -> "Spectrum":
        """Sort arbitrary nonnegative eigenvalues into a Spectrum."""
        return cls(np.sort(np.asarray(values, dtype=float))[::-1])

    @property
    def dim(self) -> int:
        return self.values.size

    def scaled(self, c: float) -> "Spectrum":
        return Spectrum(self.values * c)

    def diag(self) -> np.ndarray:
        return np.diag(self.values)


MatrixLike = Union[np.ndarray, Spectrum]


def trace_power(a: MatrixLike, k: int) -> float:
    """Tr(A^k), by repeated multiplication for matrices or as sum(l_i^k) for spectra."""
    if k < 1 or int(k) != k:
        raise DomainError(f"k must be a positive integer, got {k}")
    if isinstance(a, Spectrum):
        return float(np.sum(a.values ** k))
    a = as_sym(a)
    p = a
    for _ in range(int(k) - 1):
        p = p @ a
    return float(np.trace(p))


def _is_diagonal(a: np.ndarray) -> bool:
    return not np.any(a - np.diag(np.diag(a)))


def operator_norm(a: MatrixLike, tol: float = 1e-12, max_iter: int | None = None) -> float:
    """Largest absolute eigenvalue of a symmetric matrix.

    Power iteration accelerated by repeated squaring: after ``k`` steps the
    iterate is proportional to ``A^(2^k)``, whose largest column is a power
    iterate that cannot be orthogonal to the top eigenspace. The estimate is
    ``|A v| / |v|`` and iteration stops once it changes by less than ``tol``
    relative. Diagonal input is answered exactly.

    A nearly degenerate top pair (gap eps) leaves an error of at most
    ``eps (1 - eps)^(2^k) <= 1 / (e 2^k)`` after k squarings, so at least
    ``log2(1 / tol)`` squarings are taken before the stopping test applies.
    """
    if isinstance(a, Spectrum):
        return float(a.values[0])
    if tol <= 0:
        raise DomainError("tol must be positive")
    a = as_sym(a)
    d = a.shape[0]
    if _is_diagonal(a):
        return float(np.max(np.abs(np.diag(a))))
    if max_iter is None:
        max_iter = int(10 * d * math.log(d) + 1000)

    min_steps = max(1, math.ceil(math.log2(1.0 / tol)))
    p = a / np.linalg.norm(a)
    estimate = 0.0
    for it in range(1, max_iter + 1):
        p = p @ p
        fro = np.linalg.norm(p)
        if fro == 0.0:
            # nilpotent-looking underflow cannot happen for symmetric nonzero a
            raise NumericFailure("power iterate underflowed", iterations=it)
        p /= fro
        v = p[:, np.argmax(np.sum(p * p, axis=0))]
        new = float(np.linalg.norm(a @ v) / np.linalg.norm(v))
        if it >= min_steps and abs(new - estimate) <= tol * new:
            return new
        estimate = new
    raise NumericFailure(
        f"operator_norm did not converge in {max_iter} iterations",
        iterations=max_iter,
        error_estimate=abs(new - estimate),
    )


def frobenius_norm(a: MatrixLike) -> float:
    if isinstance(a, Spectrum):
        return float(np.sqrt(np.sum(a.values ** 2)))
    return float(np.linalg.norm(np.asarray(a, dtype=float)))


def effective_rank(a: MatrixLike) -> float:
    """Tr(A) / ||A|| for a nonzero PSD matrix or spectrum."""
    if isinstance(a, Spectrum):
        return float(np.sum(a.values) / a.values[0])
    a = as_sym(a)
    if not np.any(a):
        raise DomainError("effective rank of the zero matrix is undefined")
    return trace_power(a, 1) / operator_norm(a)


def power_spectrum(a: Spectrum, k: int) -> Spectrum:
    """Spectrum of A^k for PSD A."""
    return Spectrum(a.values ** k)


def haar_orthogonal(d: int, rng: RandomStream) -> np.ndarray:
    """Haar-distributed d x d orthogonal matrix.

    QR of a standard Gaussian matrix, with columns flipped so that the
    diagonal of R is positive.
    """
    if d < 1:
        raise DomainError("d must be positive")
    g = rng.standard_normal((d, d))
    q, r = np.linalg.qr(g)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


def orthogonality_defect(q: np.ndarray) -> float:
    """||Q^T Q - I||_F."""
    q = np.asarray(q, dtype=float)
    return float(np.linalg.norm(q.T @ q - np.eye(q.shape[1])))


def kron(a, b) -> np.ndarray:
    """Kronecker product ``a (x) b`` built block by block (oracle use only)."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    p, q = a.shape
    r, s = b.shape
    if p * r > KRON_MAX_DIM or q * s > KRON_MAX_DIM:
        raise SizeError(f"kron result {p * r}x{q * s} exceeds cap {KRON_MAX_DIM}")
    out = np.empty((p * r, q * s))
    for i in range(p):
        for j in range(q):
            out[i * r:(i + 1) * r, j * s:(j + 1) * s] = a[i, j] * b
    return out


def vec(a) -> np.ndarray:
    """Column-stacking vectorization."""
    return np.asarray(a, dtype=float).reshape(-1, order="F")


def unvec(v, rows: int, cols: int) -> np.ndarray:
    return np.asarray(v, dtype=float).reshape((rows, cols), order="F")
