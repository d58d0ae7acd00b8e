"""Explicit deviation bounds, admissibility conditions and proof constants.

Every evaluator accepts either a ``Spectrum`` or a symmetric PSD matrix and
depends on it only through traces of powers and the operator norm, so the
results are invariant under orthogonal conjugation.

Notation: ``r1 = Tr(S)/||S||``, ``r2 = Tr(S^2)/||S||^2``,
``r4 = Tr(S^4)/||S||^4`` (effective ranks of S, S^2, S^4).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .errors import DomainError
from .matcore import MatrixLike, operator_norm, trace_power

G_TERM_CUTOFF = 1e-16


@dataclass(frozen=True)
class TailParams:
    """Assumption constants plus the (n, delta) pair fed to the evaluators."""

    tau: float
    rho_max: float
    alpha: float
    delta: float
    n: int
    omega: float | None = None

    def __post_init__(self):
        if self.tau <= 0 or self.rho_max <= 0 or self.alpha <= 0:
            raise DomainError("tau, rho_max and alpha must be positive")
        if not 0.0 < self.delta < 1.0:
            raise DomainError(f"delta must lie in (0, 1), got {self.delta}")
        if self.n < 1:
            raise DomainError("n must be positive")

    @classmethod
    def from_omega(cls, omega: float, alpha: float, delta: float, n: int) -> "TailParams":
        tau, rho_max = tau_from_omega(omega)
        return cls(tau=tau, rho_max=rho_max, alpha=alpha, delta=delta, n=n, omega=omega)


@dataclass(frozen=True)
class RankSummary:
    op: float
    tr: float
    tr2: float
    tr4: float

    @property
    def r1(self) -> float:
        return self.tr / self.op

    @property
    def r2(self) -> float:
        return self.tr2 / self.op ** 2

    @property
    def r4(self) -> float:
        return self.tr4 / self.op ** 4

    @property
    def fro_sq(self) -> float:
        return self.tr2


def ranks(spec: MatrixLike) -> RankSummary:
    op = operator_norm(spec)
    if op <= 0:
        raise DomainError("zero covariance")
    return RankSummary(
        op=op, tr=trace_power(spec, 1), tr2=trace_power(spec, 2), tr4=trace_power(spec, 4)
    )


def _check_delta(delta: float):
    if not 0.0 < delta < 1.0:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")


def tau_from_omega(omega: float) -> tuple[float, float]:
    """(tau, rho_max) = (64 omega^2, 1 / (6 omega))."""
    if omega <= 0:
        raise DomainError("omega must be positive")
    return 64.0 * omega * omega, 1.0 / (6.0 * omega)


def R_sigma_delta(spec: MatrixLike, tau: float, delta: float) -> float:
    """2 r1 + sqrt(tau r2) / 2 + 2 sqrt(e log(2/delta))."""
    _check_delta(delta)
    if tau <= 0:
        raise DomainError("tau must be positive")
    rs = ranks(spec)
    return 2.0 * rs.r1 + 0.5 * math.sqrt(tau * rs.r2) + 2.0 * math.sqrt(math.e * math.log(2.0 / delta))


def upper_admissible(spec: MatrixLike, tau: float, rho_max: float, delta: float, n: int):
    """Sample-size conditions for the upper deviation bound.

    Returns ``(ok, (margin1, margin2))`` where the margins are
    ``rho_max sqrt(n) - ||S|| R`` and ``36 n - r1^2 R^2 (tau^3 R^2 / 4 + 3 tau^2)``;
    both must be nonnegative.
    """
    rs = ranks(spec)
    R = R_sigma_delta(spec, tau, delta)
    m1 = rho_max * math.sqrt(n) - rs.op * R
    m2 = 36.0 * n - rs.r1 ** 2 * R ** 2 * (tau ** 3 * R ** 2 / 4.0 + 3.0 * tau ** 2)
    return (m1 >= 0 and m2 >= 0), (m1, m2)


def upper_min_n(spec: MatrixLike, tau: float, rho_max: float, delta: float) -> int:
    """Smallest n satisfying both upper admissibility inequalities."""
    rs = ranks(spec)
    R = R_sigma_delta(spec, tau, delta)
    n1 = (rs.op * R / rho_max) ** 2
    n2 = rs.r1 ** 2 * R ** 2 * (tau ** 3 * R ** 2 / 4.0 + 3.0 * tau ** 2) / 36.0
    n = max(1, math.ceil(max(n1, n2)))
    while not upper_admissible(spec, tau, rho_max, delta, n)[0]:
        n += 1
    return n


def upper_deviation_bound(spec: MatrixLike, tau: float, delta: float, n: int) -> float:
    """(4||S||^2/n) max{sqrt(2(tau r2^2 + tau^2 r4) L), 4 e tau L}, L = log(2/delta)."""
    _check_delta(delta)
    rs = ranks(spec)
    L = math.log(2.0 / delta)
    inner = max(math.sqrt(2.0 * (tau * rs.r2 ** 2 + tau ** 2 * rs.r4) * L), 4.0 * math.e * tau * L)
    return 4.0 * rs.op ** 2 / n * inner


def lower_admissible(spec: MatrixLike, alpha: float, n: int):
    """Sample-size conditions for the lower deviation bound, with slack margins."""
    if alpha <= 0:
        raise DomainError("alpha must be positive")
    rs = ranks(spec)
    common = rs.r1 ** 2 + alpha * rs.r2
    m1 = n - 7.0 * alpha ** 2 * rs.r2 ** 2 * common
    m2 = n - 96.0 * (1.0 + math.sqrt(alpha)) ** 2 * rs.r2 * common
    return (m1 >= 0 and m2 >= 0), (m1, m2)


def lower_min_n(spec: MatrixLike, alpha: float) -> int:
    _, (m1, m2) = lower_admissible(spec, alpha, 0)
    return max(1, math.ceil(-min(m1, m2)))


def frak_R(spec: MatrixLike, alpha: float, n: float) -> float:
    """alpha r2^2 + alpha^2 r4 + 15 alpha^2 r1^2 r2 (r1^2 + alpha r2) / (4n).

    ``n = math.inf`` drops the finite-sample term.
    """
    if alpha <= 0:
        raise DomainError("alpha must be positive")
    if n < 1:
        raise DomainError("n must be positive")
    rs = ranks(spec)
    finite = 15.0 * alpha ** 2 * rs.r1 ** 2 * rs.r2 * (rs.r1 ** 2 + alpha * rs.r2) / (4.0 * n)
    return alpha * rs.r2 ** 2 + alpha ** 2 * rs.r4 + finite


def lower_deviation_bound(spec: MatrixLike, alpha: float, delta: float, n: int) -> float:
    """(4||S||^2/n) max{2 log(5/delta), sqrt(2 frakR log(5/delta))}."""
    _check_delta(delta)
    rs = ranks(spec)
    L = math.log(5.0 / delta)
    return 4.0 * rs.op ** 2 / n * max(2.0 * L, math.sqrt(2.0 * frak_R(spec, alpha, n) * L))


def ratio_deviation(spec: MatrixLike, delta: float) -> tuple[float, float]:
    """Deviation scale of ||Sigma_hat - Sigma||_F^2 / E||...||_F^2 around 1.

    Returns ``(form, envelope)``: ``max{r2 sqrt(L), L} / (r1^2 - r2)`` and its
    simplification ``max{sqrt(L) / (r1 - 1), L / (r1 (r1 - 1))}``, L = log(7/delta).
    """
    _check_delta(delta)
    rs = ranks(spec)
    r1, r2 = rs.r1, rs.r2
    # a rank-one spectrum gives r1 = 1 up to rounding; the ratio is then undefined
    if r1 <= 1.0 + 1e-12:
        raise DomainError("ratio deviation needs effective rank > 1")
    L = math.log(7.0 / delta)
    denom = r1 * r1 - r2
    form = max(r2 * math.sqrt(L), L) / denom
    envelope = max(math.sqrt(L) / (r1 - 1.0), L / (r1 * (r1 - 1.0)))
    return form, envelope


def g_series(u: float) -> tuple[float, float, int]:
    """Partial sum of g(u) = sum_{k>=0} exp(-(e^k - 1) u / (2e)).

    Summation stops at the first term below 1e-16. Consecutive term ratios
    decrease with k, so the omitted tail is at most ``T / (1 - q)`` for the
    first omitted term T and its successor ratio q. Returns
    ``(value, tail_bound, terms_used)``.
    """
    if u <= 0:
        raise DomainError("g diverges for u <= 0")
    c = u / (2.0 * math.e)
    total = 0.0
    k = 0
    while True:
        term = math.exp(-(math.expm1(k)) * c)
        if term < G_TERM_CUTOFF:
            q = math.exp(-(math.e - 1.0) * math.exp(k) * c)
            return total, term / (1.0 - q), k
        total += term
        k += 1


def g_func(u: float) -> float:
    return g_series(u)[0]


def G_func(lam: float, z: float, spec: MatrixLike, tau: float, n: int) -> float:
    """lam (z lam + sqrt(2 lam) Tr S)^2 / (36 n) * (tau^3 (z lam + sqrt(2 lam) Tr S)^2 + 3 tau^2)."""
    if lam < 0 or z < 0:
        raise DomainError("lambda and z must be nonnegative")
    s = z * lam + math.sqrt(2.0 * lam) * trace_power(spec, 1)
    return lam * s * s / (36.0 * n) * (tau ** 3 * s * s + 3.0 * tau ** 2)


def _kappa_bar(spec: MatrixLike, kappa: float) -> float:
    return max(kappa, operator_norm(spec) ** 2)


def choose_lambda_z(spec: MatrixLike, kappa: float, v_sq: float, m: float, delta: float):
    """Return (lambda, z^2) used in the large-deviation step.

    z^2 = m + max{4 v sqrt(2 L), 16 e K L} and
    lambda = min{e (z^2 - m) / (8 v^2), 1 / (4 K)} with K = max(kappa, ||S||^2),
    L = log(2/delta).
    """
    _check_delta(delta)
    if kappa <= 0 or v_sq <= 0 or m <= 0:
        raise DomainError("kappa, v^2 and m must be positive")
    K = _kappa_bar(spec, kappa)
    L = math.log(2.0 / delta)
    z_sq = m + max(4.0 * math.sqrt(v_sq) * math.sqrt(2.0 * L), 16.0 * math.e * K * L)
    lam = min(math.e * (z_sq - m) / (8.0 * v_sq), 1.0 / (4.0 * K))
    return lam, z_sq


def lambda_objective(lam: float, z_sq: float, m: float, v_sq: float) -> float:
    """-lam (z^2 - m) / (2e) + 2 lam^2 v^2 / e^2."""
    return -lam * (z_sq - m) / (2.0 * math.e) + 2.0 * lam * lam * v_sq / math.e ** 2


def lambda_objective_min(spec: MatrixLike, kappa: float, v_sq: float, m: float, z_sq: float) -> float:
    """Closed-form minimum of ``lambda_objective`` over lambda in [0, 1/(4K)]."""
    K = _kappa_bar(spec, kappa)
    gap = z_sq - m
    if math.e * gap / (8.0 * v_sq) <= 1.0 / (4.0 * K):
        return -gap * gap / (32.0 * v_sq)
    return -gap / (8.0 * math.e * K) + v_sq / (8.0 * math.e ** 2 * K * K)


def lambda_substitution_value(spec: MatrixLike, kappa: float, v_sq: float, m: float, z_sq: float) -> float:
    """-min{(z^2 - m)^2 / (32 v^2), (z^2 - m) / (16 e K)}.

    Equals the objective at the chosen lambda when lambda is unclamped and
    bounds it from above when lambda sits at 1/(4K).
    """
    K = _kappa_bar(spec, kappa)
    gap = z_sq - m
    return -min(gap * gap / (32.0 * v_sq), gap / (16.0 * math.e * K))


def rho_sq(spec: MatrixLike, alpha: float) -> float:
    """3 ||S||_F^2 (r1^2 + alpha r2)."""
    if alpha <= 0:
        raise DomainError("alpha must be positive")
    rs = ranks(spec)
    return 3.0 * rs.fro_sq * (rs.r1 ** 2 + alpha * rs.r2)


def mean_sandwich(spec: MatrixLike, alpha: float) -> tuple[float, float]:
    """((Tr S)^2 - Tr S^2, (Tr S)^2 + (alpha - 1) Tr S^2)."""
    tr, tr2 = trace_power(spec, 1), trace_power(spec, 2)
    return tr * tr - tr2, tr * tr + (alpha - 1.0) * tr2


def variance_bounds(spec: MatrixLike, alpha: float) -> tuple[float, float]:
    """Upper bounds (v^2, kappa) <= (alpha (Tr S^2)^2 + (alpha^2 - alpha) Tr S^4, alpha ||S||^2)."""
    if alpha <= 0:
        raise DomainError("alpha must be positive")
    tr2, tr4 = trace_power(spec, 2), trace_power(spec, 4)
    return alpha * tr2 * tr2 + (alpha * alpha - alpha) * tr4, alpha * operator_norm(spec) ** 2


def rho_inequality_terms(spec: MatrixLike, alpha: float) -> tuple[float, float, float]:
    """(2 rho^2 / ||S||_F^2, (rho^2 - Tr^2)^2 / (||S||_F^4 + ||S||^2 (rho^2 - Tr^2)), r1^2 + (alpha - 1) r2)."""
    rs = ranks(spec)
    r2sq = rho_sq(spec, alpha)
    excess = r2sq - rs.tr ** 2
    first = 2.0 * r2sq / rs.fro_sq
    second = excess ** 2 / (rs.fro_sq ** 2 + rs.op ** 2 * excess)
    target = rs.r1 ** 2 + (alpha - 1.0) * rs.r2
    return first, second, target


def rho_inequality_check(spec: MatrixLike, alpha: float) -> bool:
    """Whether min of the two rho-terms dominates r1^2 + (alpha - 1) r2 (alpha >= 1 only)."""
    if alpha < 1.0:
        raise DomainError("the rho inequality is only checked for alpha >= 1")
    first, second, target = rho_inequality_terms(spec, alpha)
    return min(first, second) >= target


@dataclass(frozen=True)
class BoundReport:
    r1: float
    r2: float
    r4: float
    R_const: float
    upper_ok: bool
    upper_margin1: float
    upper_margin2: float
    upper_dev: float
    lower_ok: bool
    lower_margin1: float
    lower_margin2: float
    frakR: float
    lower_dev: float
    ratio_dev: float | None
    ratio_envelope: float | None

    def to_dict(self) -> dict:
        return asdict(self)


def evaluate_bounds(spec: MatrixLike, params: TailParams) -> BoundReport:
    """Evaluate every bound quantity for ``spec`` under ``params``."""
    rs = ranks(spec)
    upper_ok, (um1, um2) = upper_admissible(spec, params.tau, params.rho_max, params.delta, params.n)
    lower_ok, (lm1, lm2) = lower_admissible(spec, params.alpha, params.n)
    try:
        ratio, envelope = ratio_deviation(spec, params.delta)
    except DomainError:
        ratio, envelope = None, None
    return BoundReport(
        r1=rs.r1,
        r2=rs.r2,
        r4=rs.r4,
        R_const=R_sigma_delta(spec, params.tau, params.delta),
        upper_ok=upper_ok,
        upper_margin1=um1,
        upper_margin2=um2,
        upper_dev=upper_deviation_bound(spec, params.tau, params.delta, params.n),
        lower_ok=lower_ok,
        lower_margin1=lm1,
        lower_margin2=lm2,
        frakR=frak_R(spec, params.alpha, params.n),
        lower_dev=lower_deviation_bound(spec, params.alpha, params.delta, params.n),
        ratio_dev=ratio,
        ratio_envelope=envelope,
    )

