"""The Lambda_t covariance family and the experiment grid."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .matcore import Spectrum, as_sym, haar_orthogonal
from .rng import RandomStream
from .samplers import DistKind


def lambda_t(t: float, d: int) -> Spectrum:
    """Spectrum of Lambda_t.

    For ``t <= 0.5`` the entries are ``1, 2t(1 - k/d)`` for ``k = 1..d-1``;
    above 0.5 they are ``1, (1 - k/d)^(2(1-t))``. Both forms coincide at 0.5,
    which is assigned to the linear branch. At ``t = 1`` every power is 0 and
    the spectrum is all ones.
    """
    t = float(t)
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"t must lie in [0, 1], got {t}")
    if d < 2:
        raise DomainError(f"d must be at least 2, got {d}")
    frac = 1.0 - np.arange(1, d) / d
    if t <= 0.5:
        tail = 2.0 * t * frac
    else:
        tail = frac ** (2.0 * (1.0 - t))
    return Spectrum(np.concatenate(([1.0], tail)))


def grid(count: int = 70) -> list[float]:
    """Equispaced grid {k / (count - 1)} on [0, 1]."""
    if count < 2:
        raise DomainError("grid needs at least two points")
    return [k / (count - 1) for k in range(count)]


@dataclass(frozen=True)
class CovModel:
    """Population model Sigma = U diag(lambda) U^T with a sampling law."""

    U: np.ndarray
    spectrum: Spectrum
    dist: DistKind
    sigma: np.ndarray

    @classmethod
    def from_spectrum(cls, spectrum: Spectrum, dist: DistKind, U=None) -> "CovModel":
        d = spectrum.dim
        U = np.eye(d) if U is None else np.asarray(U, dtype=float)
        if U.shape != (d, d):
            raise DomainError(f"U has shape {U.shape}, spectrum has dimension {d}")
        sigma = as_sym((U * spectrum.values) @ U.T)
        return cls(U=U, spectrum=spectrum, dist=DistKind(dist), sigma=sigma)

    @property
    def dim(self) -> int:
        return self.spectrum.dim


def build_cov(t: float, d: int, dist: DistKind, rng: RandomStream) -> CovModel:
    """Sigma_t = U Lambda_t U^T with a fresh Haar U drawn from ``rng``."""
    spec = lambda_t(t, d)
    return CovModel.from_spectrum(spec, dist, haar_orthogonal(d, rng))
