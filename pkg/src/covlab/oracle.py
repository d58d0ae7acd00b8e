"""Independent Monte Carlo and brute-force checks at small dimension.

Nothing here is used by the experiment harness; these routines exist to test
the closed forms in ``moments`` and ``bounds`` by a separate route. Suprema
over directions (alpha, kappa, tau, omega) are approximated by sweeping a few
canonical directions plus random unit-Frobenius symmetric ones, so every such
estimate is a lower bound on the true constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp

from .bounds import tau_from_omega
from .errors import DomainError, SizeError
from .matcore import as_sym, kron, vec
from .rng import RandomStream, split
from .samplers import DistKind, whitened
from .spectra import CovModel

V_SQ_MAX_DIM = 12
# rows per vectorized chunk in the replicate loops
_CHUNK_ELEMS = 2_000_000


@dataclass(frozen=True)
class McEstimate:
    value: float
    std_error: float
    reps: int

    def __post_init__(self):
        if self.std_error < 0 or not math.isfinite(self.std_error):
            raise DomainError("standard error must be finite and nonnegative")
        if self.reps < 2:
            raise DomainError("an MC estimate needs at least two replicates")

    def within(self, target: float, k: float = 3.0) -> bool:
        return abs(self.value - target) <= k * self.std_error


def _mean_estimate(samples: np.ndarray) -> McEstimate:
    samples = np.asarray(samples, dtype=float)
    reps = samples.size
    return McEstimate(float(samples.mean()), float(samples.std(ddof=1) / math.sqrt(reps)), reps)


def random_unit_symmetric(d: int, rng: RandomStream) -> np.ndarray:
    """Symmetric Gaussian matrix scaled to unit Frobenius norm."""
    g = rng.standard_normal((d, d))
    s = 0.5 * (g + g.T)
    return s / np.linalg.norm(s)


def canonical_directions(d: int) -> list[np.ndarray]:
    """I / sqrt(d), e1 e1^T and (e1 e2^T + e2 e1^T) / sqrt(2)."""
    out = [np.eye(d) / math.sqrt(d)]
    e11 = np.zeros((d, d))
    e11[0, 0] = 1.0
    out.append(e11)
    if d >= 2:
        off = np.zeros((d, d))
        off[0, 1] = off[1, 0] = 1.0 / math.sqrt(2.0)
        out.append(off)
    return out


def _directions(d: int, count: int, rng: RandomStream) -> list[np.ndarray]:
    return canonical_directions(d) + [random_unit_symmetric(d, rng) for _ in range(count)]


def _quad_forms(x: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Rows x_i -> x_i^T v x_i."""
    return np.einsum("ij,jk,ik->i", x, v, x)


def frob_errors(model: CovModel, n: int, reps: int, rng: RandomStream) -> np.ndarray:
    """||Sigma_hat - Sigma||_F^2 for ``reps`` independent samples of size n."""
    d = model.dim
    root = np.sqrt(model.spectrum.values)
    out = np.empty(reps)
    per_rep = n * d
    if per_rep <= _CHUNK_ELEMS:
        chunk = max(1, _CHUNK_ELEMS // per_rep)
        for start in range(0, reps, chunk):
            k = min(chunk, reps - start)
            xi = whitened(model.dist, d, k * n, rng).reshape(k, n, d)
            x = (xi * root) @ model.U.T
            s = np.einsum("rni,rnj->rij", x, x) / n
            out[start:start + k] = np.sum((s - model.sigma) ** 2, axis=(1, 2))
        return out
    rows = max(1, _CHUNK_ELEMS // d)
    for r in range(reps):
        acc = np.zeros((d, d))
        for start in range(0, n, rows):
            k = min(rows, n - start)
            x = (whitened(model.dist, d, k, rng) * root) @ model.U.T
            acc += x.T @ x
        s = acc / n
        out[r] = np.sum((0.5 * (s + s.T) - model.sigma) ** 2)
    return out


def mc_mean_frob_error(model: CovModel, n: int, reps: int, rng: RandomStream) -> McEstimate:
    """MC estimate of m = n E||Sigma_hat - Sigma||_F^2 with plug-in standard error."""
    if reps < 100:
        raise DomainError("mc_mean_frob_error needs reps >= 100")
    return _mean_estimate(n * frob_errors(model, n, reps, rng))


def _max_over(estimates: list[McEstimate]) -> McEstimate:
    return max(estimates, key=lambda e: e.value)


def estimate_alpha(dist: DistKind, d: int, reps: int, directions: int, rng: RandomStream) -> McEstimate:
    """Largest sqrt(E(xi^T V xi - Tr V)^4) over swept unit-Frobenius V.

    A lower bound on any admissible fourth-moment constant alpha.
    """
    if directions < 10:
        raise DomainError("estimate_alpha needs at least 10 random directions")
    s_dir, s_xi = split(rng, 2)
    xi = whitened(dist, d, reps, s_xi)
    out = []
    for v in _directions(d, directions, s_dir):
        y4 = (_quad_forms(xi, v) - np.trace(v)) ** 4
        m4 = float(y4.mean())
        root = math.sqrt(m4)
        se = float(y4.std(ddof=1) / math.sqrt(reps))
        out.append(McEstimate(root, se / (2.0 * root) if root > 0 else 0.0, reps))
    return _max_over(out)


def psi1_norm(samples: np.ndarray) -> float:
    """Empirical Orlicz psi_1 norm: the t with mean(exp(|y| / t)) = 2."""
    a = np.abs(np.asarray(samples, dtype=float))
    top = float(a.max())
    if top == 0.0:
        return 0.0
    log_r = math.log(a.size)

    def excess(log_t):
        return float(logsumexp(a / math.exp(log_t))) - log_r - math.log(2.0)

    hi = math.log(top / math.log(2.0))
    lo = hi - 1.0
    while excess(lo) <= 0:
        lo -= 1.0
    return math.exp(brentq(excess, lo, hi, xtol=1e-12))


def estimate_omega(dist: DistKind, d: int, reps: int, directions: int, rng: RandomStream) -> McEstimate:
    """Largest empirical ||xi^T V xi - Tr V||_psi1 over swept unit-Frobenius V.

    The standard error comes from 10 disjoint batches.
    """
    s_dir, s_xi = split(rng, 2)
    xi = whitened(dist, d, reps, s_xi)
    best = None
    for v in _directions(d, directions, s_dir):
        y = _quad_forms(xi, v) - np.trace(v)
        value = psi1_norm(y)
        if best is None or value > best[0]:
            best = (value, y)
    value, y = best
    batches = np.array([psi1_norm(b) for b in np.array_split(y, 10)])
    return McEstimate(value, float(batches.std(ddof=1) / math.sqrt(10)), reps)


@dataclass(frozen=True)
class TiltedSpec:
    """A tilt U and a test direction V for the tilted measure P_U."""

    U: np.ndarray
    V: np.ndarray
    dist: DistKind
    rho_max: float = math.inf

    def __post_init__(self):
        u, v = as_sym(self.U), as_sym(self.V)
        if u.shape != v.shape:
            raise DomainError("U and V must have the same shape")
        if not np.any(v):
            raise DomainError("V must be nonzero")
        if np.linalg.norm(u) > self.rho_max * (1 + 1e-12):
            raise DomainError(f"||U||_F = {np.linalg.norm(u):.4g} exceeds rho_max = {self.rho_max:.4g}")
        dist = DistKind(self.dist)
        if dist is DistKind.GAUSSIAN and np.linalg.eigvalsh(u)[-1] >= 0.25:
            raise DomainError("Gaussian tilt weights have infinite variance for lambda_max(U) >= 1/4")
        object.__setattr__(self, "U", u)
        object.__setattr__(self, "V", v)
        object.__setattr__(self, "dist", dist)

    @property
    def d(self) -> int:
        return self.U.shape[0]


def _log_weights(xi: np.ndarray, u: np.ndarray) -> np.ndarray:
    lw = _quad_forms(xi, u)
    return lw - lw.max()


def _tilted_central(q: np.ndarray, lw: np.ndarray, k: int) -> McEstimate:
    w = np.exp(lw)
    sw = w.sum()
    mu = float(np.dot(w, q) / sw)
    f = (q - mu) ** k
    est = float(np.dot(w, f) / sw)
    se = float(math.sqrt(np.dot(w * w, (f - est) ** 2)) / sw)
    return McEstimate(est, se, q.size)


def tilted_moment(spec: TiltedSpec, k: int, reps: int, rng: RandomStream) -> McEstimate:
    """Self-normalized importance estimate of P_U (xi^T V xi - P_U xi^T V xi)^k."""
    if k not in (1, 2, 3, 4):
        raise DomainError("k must be in 1..4")
    if reps < 10_000:
        raise DomainError("tilted_moment needs reps >= 1e4")
    xi = whitened(spec.dist, spec.d, reps, rng)
    return _tilted_central(_quad_forms(xi, spec.V), _log_weights(xi, spec.U), k)


def estimate_tau(dist: DistKind, d: int, rho_max: float, reps: int, directions: int, rng: RandomStream) -> float:
    """Largest sqrt(P_U (xi^T V xi - P_U xi^T V xi)^4) over swept U (||U||_F <= rho_max) and V."""
    s_dir, s_xi = split(rng, 2)
    xi = whitened(dist, d, reps, s_xi)
    tilts = [np.zeros((d, d))]
    for scale in (0.5, 1.0):
        tilts += [scale * rho_max * u for u in _directions(d, max(2, directions // 4), s_dir)]
    if DistKind(dist) is DistKind.GAUSSIAN:
        tilts = [u for u in tilts if np.linalg.eigvalsh(u)[-1] < 0.25]
    vs = _directions(d, directions, s_dir)
    best = 0.0
    for u in tilts:
        lw = _log_weights(xi, u)
        for v in vs:
            m4 = _tilted_central(_quad_forms(xi, v), lw, 4).value
            best = max(best, math.sqrt(m4))
    return best


@dataclass(frozen=True)
class AssumptionEstimate:
    """Empirical assumption constants for one law in dimension d (all lower bounds)."""

    dist: DistKind
    d: int
    omega: McEstimate
    alpha: McEstimate
    rho_max: float
    tau: float
    tau_from_omega: float


def estimate_assumption_constants(
    dist: DistKind, d: int, rng: RandomStream, reps: int = 100_000, directions: int = 20
) -> AssumptionEstimate:
    """omega_hat, alpha_hat and tau_hat for ``dist``.

    rho_max is taken as 1 / (6 omega_hat); tau_hat is swept over tilts up to
    that radius. ``tau_from_omega`` is 64 omega_hat^2.
    """
    s_om, s_al, s_tau = split(rng, 3)
    omega = estimate_omega(dist, d, reps, directions, s_om)
    alpha = estimate_alpha(dist, d, reps, directions, s_al)
    tau_om, rho_max = tau_from_omega(omega.value)
    tau = estimate_tau(dist, d, rho_max, reps, directions, s_tau)
    return AssumptionEstimate(
        dist=DistKind(dist), d=d, omega=omega, alpha=alpha, rho_max=rho_max, tau=tau, tau_from_omega=tau_om
    )


def _observations(model: CovModel, reps: int, rng: RandomStream) -> np.ndarray:
    xi = whitened(model.dist, model.dim, reps, rng)
    return (xi * np.sqrt(model.spectrum.values)) @ model.U.T


def mc_v_sq(model: CovModel, reps: int, rng: RandomStream, unbiased: bool = False) -> McEstimate:
    """||E vec(XX^T - S) vec(XX^T - S)^T||_F^2 from ``reps`` observations.

    The default plug-in value squares the averaged outer product and is biased
    upward by (E||eta||^4 - v^2) / reps; ``unbiased=True`` removes the diagonal
    terms of the double sum. The standard error comes from 10 batches of the
    unbiased estimator.
    """
    d = model.dim
    if d > V_SQ_MAX_DIM:
        raise SizeError(f"mc_v_sq holds a d^2 x d^2 matrix; d={d} exceeds {V_SQ_MAX_DIM}")
    if reps < 10_000:
        raise DomainError("mc_v_sq needs reps >= 1e4")
    x = _observations(model, reps, rng)
    eta = (x[:, :, None] * x[:, None, :] - model.sigma).reshape(reps, d * d)

    def both(e):
        r = e.shape[0]
        m = e.T @ e / r
        plug = float(np.sum(m * m))
        fourth = float(np.sum(np.sum(e * e, axis=1) ** 2))
        return plug, (r * r * plug - fourth) / (r * (r - 1))

    plug, unb = both(eta)
    batches = np.array([both(b)[1] for b in np.array_split(eta, 10)])
    se = float(batches.std(ddof=1) / math.sqrt(10))
    return McEstimate(unb if unbiased else plug, se, reps)


def mc_kappa(model: CovModel, reps: int, directions: int, rng: RandomStream) -> McEstimate:
    """Largest E(X^T U X - Tr(U S))^2 over swept unit-Frobenius U (top eigen-direction included)."""
    if directions < 10:
        raise DomainError("mc_kappa needs at least 10 random directions")
    s_dir, s_x = split(rng, 2)
    x = _observations(model, reps, s_x)
    top = model.U[:, 0]
    dirs = [np.outer(top, top)] + _directions(model.dim, directions, s_dir)
    return _max_over([_mean_estimate((_quad_forms(x, u) - np.sum(u * model.sigma)) ** 2) for u in dirs])


@dataclass(frozen=True)
class DerivativeCheck:
    second_difference: float
    second_difference_se: float
    tilted_second: float
    tilted_second_se: float
    tolerance: float

    @property
    def discrepancy(self) -> float:
        return abs(self.second_difference - self.tilted_second)

    @property
    def passed(self) -> bool:
        return self.discrepancy <= self.tolerance


def _second_difference(qu: np.ndarray, qv: np.ndarray, h: float) -> float:
    lw = qu - qu.max()
    base = logsumexp(lw)
    plus = logsumexp(lw + h * qv) - base
    minus = logsumexp(lw - h * qv) - base
    return float((plus + minus) / (h * h))


def derivative_identity_check(
    spec: TiltedSpec, h: float, reps: int, rng: RandomStream, tau_hat: float | None = None
) -> DerivativeCheck:
    """Compare a finite second difference of phi(U) = log E exp(xi^T U xi) with the tilted variance.

    phi is estimated at U - hV, U, U + hV from one sample (common random
    numbers); the tilted second moment uses an independent sample. The
    tolerance is 3 (combined SE + h^2 tau_hat^{3/2} ||V||_F^3); without
    ``tau_hat`` the local value sqrt(P_U (.)^4) / ||V||_F^2 is used.
    """
    if not 1e-4 <= h <= 1e-2:
        raise DomainError("h must lie in [1e-4, 1e-2]")
    s_fd, s_tilt = split(rng, 2)
    xi = whitened(spec.dist, spec.d, reps, s_fd)
    qu, qv = _quad_forms(xi, spec.U), _quad_forms(xi, spec.V)
    fd = _second_difference(qu, qv, h)
    batch = np.array([
        _second_difference(a, b, h) for a, b in zip(np.array_split(qu, 20), np.array_split(qv, 20))
    ])
    fd_se = float(batch.std(ddof=1) / math.sqrt(20))

    tilted = tilted_moment(spec, 2, reps, s_tilt)
    vnorm = float(np.linalg.norm(spec.V))
    if tau_hat is None:
        tau_hat = math.sqrt(_tilted_central(qv, _log_weights(xi, spec.U), 4).value) / vnorm ** 2
    slack = h * h * tau_hat ** 1.5 * vnorm ** 3
    tol = 3.0 * (math.hypot(fd_se, tilted.std_error) + slack)
    return DerivativeCheck(fd, fd_se, tilted.value, tilted.std_error, tol)


def kron_residuals(a, b, c, d_, u, v) -> dict[str, float]:
    """Residuals of the Kronecker identities for one tuple of matrices.

    Shapes: a (p,q), b (r,s), c (q,k), d_ (s,l), u (s,q), v (r,p). The
    eigenvalue-based identities (trace, Frobenius, operator norm) use the
    symmetric parts of the square corners of a and b; the Frobenius identity
    is compared in squared form.
    """
    res = {}
    res["mixed_product"] = float(np.max(np.abs(kron(a, b) @ kron(c, d_) - kron(a @ c, b @ d_))))
    sa = 0.5 * (a[: min(a.shape), : min(a.shape)] + a[: min(a.shape), : min(a.shape)].T)
    sb = 0.5 * (b[: min(b.shape), : min(b.shape)] + b[: min(b.shape), : min(b.shape)].T)
    k = kron(sa, sb)
    res["trace"] = abs(np.trace(k) - np.trace(sa) * np.trace(sb))
    res["frobenius"] = abs(np.sum(k * k) - np.sum(sa * sa) * np.sum(sb * sb))
    res["operator"] = abs(np.linalg.norm(k, 2) - np.linalg.norm(sa, 2) * np.linalg.norm(sb, 2))
    res["vec"] = float(np.max(np.abs(kron(a, b) @ vec(u) - vec(b @ u @ a.T))))
    res["trace_bilinear"] = abs(float(np.trace(v.T @ b @ u @ a.T) - vec(v) @ kron(a, b) @ vec(u)))
    return res


@dataclass
class KronReport:
    trials: int
    max_residual: dict[str, float] = field(default_factory=dict)
    tol: float = 1e-10

    @property
    def worst(self) -> float:
        return max(self.max_residual.values()) if self.max_residual else 0.0

    @property
    def passed(self) -> bool:
        return self.worst <= self.tol


def _unit(m: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(m)
    return m / norm if norm > 0 else m


def brute_kron_checks(trials: int, rng: RandomStream, max_dim: int = 4) -> KronReport:
    """Run every Kronecker identity on random unit-Frobenius inputs with dimensions <= max_dim."""
    if trials < 1:
        raise DomainError("trials must be positive")
    report = KronReport(trials=trials)
    for _ in range(trials):
        p, q, r, s, k, l = rng.integers(1, max_dim + 1, size=6)
        mats = [
            _unit(rng.standard_normal(shape))
            for shape in ((p, q), (r, s), (q, k), (s, l), (s, q), (r, p))
        ]
        for name, value in kron_residuals(*mats).items():
            report.max_residual[name] = max(report.max_residual.get(name, 0.0), value)
    return report
