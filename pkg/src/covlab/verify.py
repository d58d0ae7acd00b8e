"""The ``covlab verify`` suite: every oracle cross-check as one pass/fail table."""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from . import bounds, oracle
from .matcore import Spectrum, effective_rank
from .moments import expected_frob_error, laplace_moment_routes
from .rng import RandomStream, stream
from .samplers import DistKind
from .spectra import build_cov, grid, lambda_t

BOUNDED = (DistKind.TRUNC_LAPLACE, DistKind.UNIFORM_SPHERE)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def __post_init__(self):
        self.passed = bool(self.passed)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class SuiteSize:
    mc_reps: int
    oracle_reps: int
    directions: int
    tuples: int


QUICK = SuiteSize(mc_reps=500, oracle_reps=20_000, directions=10, tuples=100)
FULL = SuiteSize(mc_reps=2000, oracle_reps=100_000, directions=20, tuples=1000)


def check_kron(rng: RandomStream, size: SuiteSize) -> CheckResult:
    rep = oracle.brute_kron_checks(100, rng)
    return CheckResult("kronecker identities", rep.passed, f"max residual {rep.worst:.2e}")


def check_spectra(rng: RandomStream, size: SuiteSize) -> CheckResult:
    d = 50
    jump = float(np.max(np.abs(lambda_t(0.5 + 1e-9, d).values - lambda_t(0.5, d).values)))
    ranks = [effective_rank(lambda_t(t, d)) for t in grid(70)]
    ok = (
        jump <= 1e-7
        and abs(ranks[0] - 1.0) < 1e-12
        and abs(ranks[-1] - d) < 1e-9
        and all(b > a for a, b in zip(ranks, ranks[1:]))
    )
    return CheckResult("lambda_t family", ok, f"branch jump {jump:.1e}, ranks {ranks[0]:.3g}..{ranks[-1]:.3g}")


def check_laplace_routes(rng: RandomStream, size: SuiteSize) -> CheckResult:
    worst = 0.0
    for k in (2, 4):
        exact, quad = laplace_moment_routes(k)
        worst = max(worst, abs(exact - quad) / exact)
    return CheckResult("laplace moment routes", worst <= 1e-9, f"relative gap {worst:.1e}")


def _closed_form_cells(rng: RandomStream, size: SuiteSize):
    """(dist, t, model, closed form m, MC estimate) for d=10, n=50."""
    out = []
    for dist in BOUNDED:
        for t in (0.25, 0.5, 0.75):
            model = build_cov(t, 10, dist, rng)
            exact = expected_frob_error(model, 50).m
            out.append((dist, t, model, exact, oracle.mc_mean_frob_error(model, 50, size.mc_reps, rng)))
    return out


def check_gaussian(rng: RandomStream, size: SuiteSize) -> CheckResult:
    model = build_cov(0.5, 10, DistKind.GAUSSIAN, rng)
    exact = expected_frob_error(model, 20).m
    est = oracle.mc_mean_frob_error(model, 20, size.mc_reps, rng)
    z = (est.value - exact) / est.std_error
    return CheckResult("gaussian control", abs(z) <= 3.0, f"z = {z:+.2f}")


def check_closed_forms(rng: RandomStream, size: SuiteSize) -> list[CheckResult]:
    cells = _closed_form_cells(rng, size)
    zs = {(str(dist), t): (est.value - exact) / est.std_error for dist, t, _, exact, est in cells}
    results = []
    for dist in BOUNDED:
        mine = {t: z for (name, t), z in zs.items() if name == str(dist)}
        worst = max(abs(z) for z in mine.values())
        results.append(CheckResult(f"closed form m ({dist})", worst <= 3.0, f"max |z| = {worst:.2f}"))
    alphas = {dist: oracle.estimate_alpha(dist, 10, size.oracle_reps, size.directions, rng) for dist in BOUNDED}
    inside = []
    for dist, _, model, exact, _ in cells:
        a = alphas[dist]
        lo, hi = bounds.mean_sandwich(model.spectrum, a.value + 3.0 * a.std_error)
        inside.append(lo <= exact <= hi)
    results.append(CheckResult("mean sandwich", all(inside), f"{sum(inside)}/{len(inside)} cells inside"))
    return results


def check_variance(rng: RandomStream, size: SuiteSize) -> CheckResult:
    notes, ok = [], True
    for dist in BOUNDED:
        model = build_cov(0.5, 5, dist, rng)
        a = oracle.estimate_alpha(dist, 5, size.oracle_reps, size.directions, rng)
        v_hi, k_hi = bounds.variance_bounds(model.spectrum, a.value)
        v = oracle.mc_v_sq(model, size.oracle_reps, rng)
        k = oracle.mc_kappa(model, size.oracle_reps, size.directions, rng)
        ok &= v.value <= v_hi + 3 * v.std_error and k.value <= k_hi + 3 * k.std_error
        notes.append(f"{dist}: v2 {v.value:.3g}<={v_hi:.3g}, kappa {k.value:.3g}<={k_hi:.3g}")
    return CheckResult("variance domination", ok, "; ".join(notes))


def random_spectrum(rng: RandomStream, max_dim: int = 50) -> Spectrum:
    d = int(rng.integers(1, max_dim + 1))
    vals = np.sort(rng.exponential(size=d) ** rng.uniform(0.2, 4.0))[::-1]
    return Spectrum(vals / vals[0])


def check_rho(rng: RandomStream, size: SuiteSize) -> CheckResult:
    fails = sum(
        not bounds.rho_inequality_check(random_spectrum(rng), float(rng.uniform(1.0, 20.0)))
        for _ in range(size.tuples)
    )
    return CheckResult("rho inequalities", fails == 0, f"{fails}/{size.tuples} failures")


def check_g(rng: RandomStream, size: SuiteSize) -> CheckResult:
    value, tail, _ = bounds.g_series(4 * math.e * math.log(2))
    us = np.logspace(-2, 3, 60)
    gs = [bounds.g_func(u) for u in us]
    mono = all(b <= a for a, b in zip(gs, gs[1:]))
    ok = value <= 1.1 and tail < 1e-15 and mono
    return CheckResult("g function", ok, f"g(4e log 2) = {value:.6f}, tail {tail:.1e}, monotone {mono}")


def random_lambda_tuple(rng: RandomStream):
    spec = random_spectrum(rng, 20)
    kappa = float(rng.uniform(0.1, 5.0))
    v_sq = float(10 ** rng.uniform(-2, 3))
    m = float(10 ** rng.uniform(-1, 3))
    delta = float(rng.uniform(0.001, 0.5))
    return spec, kappa, v_sq, m, delta


def check_lambda(rng: RandomStream, size: SuiteSize) -> CheckResult:
    worst, floor_ok = 0.0, True
    for _ in range(size.tuples):
        spec, kappa, v_sq, m, delta = random_lambda_tuple(rng)
        lam, z_sq = bounds.choose_lambda_z(spec, kappa, v_sq, m, delta)
        direct = bounds.lambda_objective(lam, z_sq, m, v_sq)
        closed = bounds.lambda_objective_min(spec, kappa, v_sq, m, z_sq)
        worst = max(worst, abs(direct - closed) / abs(closed))
        floor_ok &= z_sq * lam >= 4 * math.e * math.log(2) * (1 - 1e-12)
    ok = worst <= 1e-10 and floor_ok
    return CheckResult("lambda/z choice", ok, f"max rel gap {worst:.1e}, z^2 lambda floor {floor_ok}")


def check_derivative(rng: RandomStream, size: SuiteSize) -> CheckResult:
    results = []
    for dist in BOUNDED:
        for d in (3, 5):
            consts = oracle.estimate_assumption_constants(dist, d, rng, size.oracle_reps, size.directions)
            dirs = oracle.canonical_directions(d)[1:] + [oracle.random_unit_symmetric(d, rng)]
            for radius in (0.0, consts.rho_max / 2):
                u = radius * oracle.random_unit_symmetric(d, rng)
                for v in dirs:
                    spec = oracle.TiltedSpec(u, v, dist, consts.rho_max)
                    results.append(oracle.derivative_identity_check(spec, 1e-3, size.oracle_reps, rng, consts.tau))
    passed = sum(r.passed for r in results)
    worst = max(r.discrepancy / r.tolerance for r in results)
    return CheckResult("derivative identity", passed == len(results),
                       f"{passed}/{len(results)} pass, worst discrepancy/tolerance {worst:.2f}")


CHECKS: list[Callable] = [
    check_kron, check_spectra, check_laplace_routes, check_gaussian, check_closed_forms,
    check_variance, check_rho, check_g, check_lambda, check_derivative,
]


def run_suite(seed: int, full: bool = False) -> list[CheckResult]:
    size = FULL if full else QUICK
    out = []
    for idx, check in enumerate(CHECKS):
        start = time.perf_counter()
        res = check(stream(seed, 100 + idx), size)
        res = res if isinstance(res, list) else [res]
        elapsed = time.perf_counter() - start
        for r in res:
            r.seconds = elapsed / len(res)
        out.extend(res)
    return out


def format_table(results: list[CheckResult]) -> str:
    width = max(len(r.name) for r in results)
    lines = [f"{'check':<{width}}  result  detail"]
    for r in results:
        lines.append(f"{r.name:<{width}}  {'PASS' if r.passed else 'FAIL':<6}  {r.detail}")
    return "\n".join(lines)
