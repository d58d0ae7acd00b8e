"""Empirical violation frequency of the upper and lower deviation bounds.

Estimates the assumption constants for the truncated Laplace law, picks the
smallest admissible n (at least 1e6), and counts replicates whose squared
Frobenius error leaves [E - lower_dev, E + upper_dev].

    python scripts/bound_coverage.py --reps 500 --delta 0.1 --seed 1
"""

import argparse
import math

import numpy as np

from covlab import bounds, oracle
from covlab.matcore import Spectrum
from covlab.moments import expected_frob_error
from covlab.rng import stream
from covlab.samplers import DistKind
from covlab.spectra import CovModel


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--spectrum", type=float, nargs="+", default=[1.0, 0.1, 0.01])
    parser.add_argument("--delta", type=float, default=0.1)
    parser.add_argument("--reps", type=int, default=500)
    parser.add_argument("--seed", type=int, default=1)
    args = parser.parse_args()

    spec = Spectrum.from_values(args.spectrum)
    dist = DistKind.TRUNC_LAPLACE
    consts = oracle.estimate_assumption_constants(dist, spec.dim, stream(args.seed, 0), reps=200_000)
    alpha = consts.alpha.value + 3 * consts.alpha.std_error
    n = max(10 ** 6, bounds.upper_min_n(spec, consts.tau, consts.rho_max, args.delta), bounds.lower_min_n(spec, alpha))
    params = bounds.TailParams(tau=consts.tau, rho_max=consts.rho_max, alpha=alpha, delta=args.delta, n=n)
    report = bounds.evaluate_bounds(spec, params)
    print(f"tau_hat={consts.tau:.3f} rho_max_hat={consts.rho_max:.4f} alpha={alpha:.3f} n={n}")
    print(f"upper_ok={report.upper_ok} lower_ok={report.lower_ok}")

    model = CovModel.from_spectrum(spec, dist)
    mean = expected_frob_error(model, n).expected_frob_sq
    errs = oracle.frob_errors(model, n, args.reps, stream(args.seed, 1))
    upper = int(np.sum(errs - mean > report.upper_dev))
    lower = int(np.sum(mean - errs > report.lower_dev))
    limit = args.delta + 3 * math.sqrt(args.delta * (1 - args.delta) / args.reps)
    print(f"upper violations {upper}, lower violations {lower}, of {args.reps}; allowed frequency {limit:.3f}")
    print(f"largest excess / upper_dev {np.max(errs - mean) / report.upper_dev:.3f}")
    print(f"largest shortfall / lower_dev {np.max(mean - errs) / report.lower_dev:.3f}")


if __name__ == "__main__":
    main()
