"""Exact expectation of the squared Frobenius error of the sample covariance.

For an observation X = U Lambda^{1/2} xi the per-observation error
``m = E ||X X^T - Sigma||_F^2`` depends only on the spectrum and on the fourth
moments of xi; ``E ||Sigma_hat - Sigma||_F^2 = m / n``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError, NumericFailure
from .matcore import Spectrum
from .samplers import LAPLACE_CUTOFF, DistKind

QUAD_TOL = 1e-12
KURTOSIS_AGREEMENT = 1e-9


def adaptive_quadrature(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: float = QUAD_TOL,
    max_depth: int = 50,
    max_intervals: int = 200_000,
) -> float:
    """Adaptive Simpson integration of ``f`` over [a, b].

    A panel is accepted when the two-half estimate differs from the whole-panel
    estimate by at most ``15 * tol_panel``; the accepted value carries the
    Richardson correction. Tolerances are split in half on each bisection.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    if a == b:
        return 0.0
    sign = 1.0
    if a > b:
        a, b, sign = b, a, -1.0

    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    total = 0.0
    # Kahan-compensated accumulation of accepted panels
    comp = 0.0
    worst = 0.0
    panels = 0
    while stack:
        a0, b0, fa0, fm0, fb0, s0, tol0, depth = stack.pop()
        m0 = 0.5 * (a0 + b0)
        lm, rm = 0.5 * (a0 + m0), 0.5 * (m0 + b0)
        flm, frm = f(lm), f(rm)
        left = (m0 - a0) / 6.0 * (fa0 + 4.0 * flm + fm0)
        right = (b0 - m0) / 6.0 * (fm0 + 4.0 * frm + fb0)
        err = left + right - s0
        panels += 1
        if abs(err) <= 15.0 * tol0 or depth >= max_depth:
            if abs(err) > 15.0 * tol0:
                worst = max(worst, abs(err) / 15.0)
            y = left + right + err / 15.0 - comp
            t = total + y
            comp = (t - total) - y
            total = t
        else:
            stack.append((m0, b0, fm0, frm, fb0, right, 0.5 * tol0, depth + 1))
            stack.append((a0, m0, fa0, flm, fm0, left, 0.5 * tol0, depth + 1))
        if panels > max_intervals:
            raise NumericFailure(
                "adaptive_quadrature exceeded its subdivision cap",
                iterations=panels,
                error_estimate=abs(err) / 15.0,
            )
    if worst > tol:
        raise NumericFailure(
            "adaptive_quadrature hit the depth cap", iterations=panels, error_estimate=worst
        )
    return sign * total


def _laplace_moment_closed(k: int) -> float:
    # int_0^c x^k e^{-x} dx = k! (1 - e^{-c} sum_{j<=k} c^j / j!)
    c = LAPLACE_CUTOFF
    partial = sum(c ** j / math.factorial(j) for j in range(k + 1))
    half = math.factorial(k) * (1.0 - math.exp(-c) * partial)
    return half / (1.0 - math.exp(-c))


def _laplace_moment_quad(k: int, tol: float = QUAD_TOL) -> float:
    half = adaptive_quadrature(lambda x: x ** k * math.exp(-x), 0.0, LAPLACE_CUTOFF, tol)
    return half / (1.0 - math.exp(-LAPLACE_CUTOFF))


def laplace_moment(k: int, rtol: float = KURTOSIS_AGREEMENT) -> float:
    """E x^k for even k under the truncated Laplace density.

    Computed from the antiderivative and by adaptive quadrature; raises
    NumericFailure if the two disagree beyond ``rtol``.
    """
    if k % 2:
        return 0.0
    exact = _laplace_moment_closed(k)
    quad = _laplace_moment_quad(k)
    if abs(exact - quad) > rtol * abs(exact):
        raise NumericFailure(
            f"moment {k}: antiderivative {exact!r} vs quadrature {quad!r}",
            error_estimate=abs(exact - quad),
        )
    return exact


def laplace_moment_routes(k: int) -> tuple[float, float]:
    """(antiderivative, quadrature) values of E x^k, for cross-checks."""
    return _laplace_moment_closed(k), _laplace_moment_quad(k)


@dataclass(frozen=True)
class MomentReport:
    kind: DistKind
    n: int
    expected_frob_sq: float
    trace_sq_term: float
    trace2_term: float

    @property
    def m(self) -> float:
        """n * E||Sigma_hat - Sigma||_F^2."""
        return self.expected_frob_sq * self.n


def frob_error_coefficients(kind: DistKind, d: int) -> tuple[float, float]:
    """(a, b) with m = a (Tr Lambda)^2 + b Tr(Lambda^2)."""
    from .samplers import kurtosis_trunc_laplace

    kind = DistKind(kind)
    if kind is DistKind.GAUSSIAN:
        return 1.0, 1.0
    if kind is DistKind.TRUNC_LAPLACE:
        return 1.0, kurtosis_trunc_laplace() - 2.0
    if kind is DistKind.UNIFORM_SPHERE:
        return d / (d + 2.0), (d - 2.0) / (d + 2.0)
    raise DomainError(f"unknown distribution kind {kind!r}")


def expected_frob_error_spectrum(spectrum: Spectrum, kind: DistKind, n: int) -> MomentReport:
    if n < 1:
        raise DomainError("n must be positive")
    a, b = frob_error_coefficients(kind, spectrum.dim)
    tr = float(np.sum(spectrum.values))
    tr2 = float(np.sum(spectrum.values ** 2))
    first, second = a * tr * tr, b * tr2
    return MomentReport(
        kind=DistKind(kind),
        n=n,
        expected_frob_sq=(first + second) / n,
        trace_sq_term=first,
        trace2_term=second,
    )


def expected_frob_error(model, n: int) -> MomentReport:
    """E||Sigma_hat - Sigma||_F^2 for ``model`` at sample size ``n``."""
    return expected_frob_error_spectrum(model.spectrum, model.dist, n)
