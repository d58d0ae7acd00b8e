"""Samplers for the population laws: truncated Laplace, uniform sphere, Gaussian.

Each law is defined through a whitened vector xi with E xi xi^T = I; an
observation is ``X = U diag(sqrt(lambda)) xi``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import TYPE_CHECKING

import numpy as np

from .errors import DomainError
from .rng import RandomStream

if TYPE_CHECKING:
    from .spectra import CovModel

LAPLACE_CUTOFF = 6.0
_E6 = math.exp(-LAPLACE_CUTOFF)
# normalizing constant of e^{-|x|} on [-6, 6]
LAPLACE_Z = 2.0 * (1.0 - _E6)


class DistKind(str, enum.Enum):
    TRUNC_LAPLACE = "trunc_laplace"
    UNIFORM_SPHERE = "uniform_sphere"
    GAUSSIAN = "gaussian"

    def __str__(self):
        return self.value


def trunc_laplace_cdf(x):
    """CDF of the density e^{-|x|} 1(|x| <= 6) / Z."""
    x = np.clip(np.asarray(x, dtype=float), -LAPLACE_CUTOFF, LAPLACE_CUTOFF)
    neg = (np.exp(-np.abs(x)) - _E6) / LAPLACE_Z
    return np.where(x <= 0, neg, 1.0 - neg)


def trunc_laplace_quantile(u):
    """Exact inverse CDF, using the mirror image for u > 1/2."""
    u = np.asarray(u, dtype=float)
    if np.any((u < 0) | (u > 1)):
        raise DomainError("quantile level outside [0, 1]")
    lower = np.minimum(u, 1.0 - u)
    x = np.log(_E6 + lower * LAPLACE_Z)
    return np.where(u <= 0.5, x, -x)


def trunc_laplace_scalar(rng: RandomStream) -> float:
    return float(trunc_laplace_quantile(rng.random()))


@lru_cache(maxsize=None)
def sigma2_trunc_laplace() -> float:
    """Variance of the truncated Laplace law, cross-checked by quadrature."""
    from .moments import laplace_moment

    return laplace_moment(2)


@lru_cache(maxsize=None)
def kurtosis_trunc_laplace() -> float:
    from .moments import laplace_moment

    return laplace_moment(4) / sigma2_trunc_laplace() ** 2


def sample_sphere(d: int, rng: RandomStream) -> np.ndarray:
    """Uniform point on the unit sphere in R^d."""
    if d < 1:
        raise DomainError("d must be positive")
    while True:
        g = rng.standard_normal(d)
        norm = np.linalg.norm(g)
        if norm > 0:
            return g / norm


def whitened(dist: DistKind, d: int, n: int, rng: RandomStream) -> np.ndarray:
    """``n`` draws of the isotropic vector xi (rows), E xi xi^T = I."""
    dist = DistKind(dist)
    if dist is DistKind.TRUNC_LAPLACE:
        u = rng.random((n, d))
        return trunc_laplace_quantile(u) / math.sqrt(sigma2_trunc_laplace())
    if dist is DistKind.UNIFORM_SPHERE:
        g = rng.standard_normal((n, d))
        norms = np.linalg.norm(g, axis=1)
        # zero rows have probability zero; redraw them anyway
        while np.any(norms == 0):
            bad = norms == 0
            g[bad] = rng.standard_normal((int(bad.sum()), d))
            norms = np.linalg.norm(g, axis=1)
        return g / norms[:, None] * math.sqrt(d)
    return rng.standard_normal((n, d))


@dataclass(frozen=True)
class SampleBatch:
    rows: np.ndarray

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def d(self) -> int:
        return self.rows.shape[1]


def draw_X(model: "CovModel", n: int, rng: RandomStream) -> SampleBatch:
    """Draw n i.i.d. observations X = U Lambda^{1/2} xi."""
    if n < 1:
        raise DomainError("n must be positive")
    xi = whitened(model.dist, model.dim, n, rng)
    root = np.sqrt(model.spectrum.values)
    return SampleBatch(rows=(xi * root) @ model.U.T)


def sample_covariance(batch: SampleBatch | np.ndarray) -> np.ndarray:
    """(1/n) sum_i X_i X_i^T, without centering."""
    x = batch.rows if isinstance(batch, SampleBatch) else np.asarray(batch, dtype=float)
    if x.shape[0] < 1:
        raise DomainError("empty batch")
    s = (x.T @ x) / x.shape[0]
    return 0.5 * (s + s.T)
