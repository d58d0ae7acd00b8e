"""Command-line entry point: ``covlab {spectra,bounds,verify,simulate,plot}``."""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

from .errors import ConfigError, DomainError, NumericFailure

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4

log = logging.getLogger("covlab")


def cmd_spectra(args) -> int:
    from .matcore import effective_rank, power_spectrum, trace_power
    from .spectra import grid, lambda_t

    print("t,r_sigma,r_sigma2,tr,tr2")
    for t in grid(args.grid):
        spec = lambda_t(t, args.d)
        r1 = effective_rank(spec)
        r2 = effective_rank(power_spectrum(spec, 2))
        print(f"{t!r},{r1!r},{r2!r},{trace_power(spec, 1)!r},{trace_power(spec, 2)!r}")
    return EXIT_OK


def cmd_bounds(args) -> int:
    from .bounds import TailParams, evaluate_bounds
    from .moments import expected_frob_error_spectrum
    from .samplers import DistKind
    from .spectra import lambda_t

    spec = lambda_t(args.t, args.d)
    if args.moments:
        print("kind,n,t,expected_frob_sq")
        for kind in DistKind:
            rep = expected_frob_error_spectrum(spec, kind, args.n)
            print(f"{kind},{args.n},{args.t!r},{rep.expected_frob_sq!r}")
        return EXIT_OK
    if args.tau is None or args.alpha is None:
        raise ConfigError("--tau and --alpha are required unless --moments is given")
    # tau = 64 omega^2 and rho_max = 1 / (6 omega) give rho_max = 4 / (3 sqrt(tau))
    rho_max = args.rho_max if args.rho_max is not None else 4.0 / (3.0 * math.sqrt(args.tau))
    params = TailParams(tau=args.tau, rho_max=rho_max, alpha=args.alpha, delta=args.delta, n=args.n)
    report = evaluate_bounds(spec, params)
    if args.json:
        print(json.dumps(report.to_dict(), indent=2))
    else:
        rows = report.to_dict()
        width = max(map(len, rows))
        for key, value in rows.items():
            print(f"{key:<{width}}  {value}")
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import format_table, run_suite

    results = run_suite(args.seed, full=args.full)
    if args.json:
        print(json.dumps([r.to_dict() for r in results], indent=2))
    else:
        print(format_table(results))
    return EXIT_OK if all(r.passed for r in results) else EXIT_NUMERIC


def cmd_simulate(args) -> int:
    from .harness import load_config, run_cells, write_outputs

    config = load_config(args.config, full=args.full, master_seed=args.seed, out_dir=args.out)
    out_dir = Path(config.out_dir)
    cells = run_cells(config, workers=args.workers)
    try:
        summaries = write_outputs(config, cells, out_dir)
    except OSError as exc:
        log.error("cannot write outputs to %s: %s", out_dir, exc)
        return EXIT_IO
    aborted = [c for c in cells if c.error is not None]
    print(f"{len(cells) - len(aborted)} cells, {len(summaries)} summaries written to {out_dir}")
    if aborted:
        for c in aborted:
            log.error(c.error)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_plot(args) -> int:
    from .harness import emit_plot, read_summary_csv

    src = Path(args.input)
    try:
        summaries = read_summary_csv(src / "summary.csv")
        meta_path = src / "metadata.json"
        grid_count = json.loads(meta_path.read_text())["config"]["grid_count"] if meta_path.exists() else None
        paths = emit_plot(summaries, src, grid_count)
    except OSError as exc:
        log.error("plot failed in %s: %s", src, exc)
        return EXIT_IO
    for p in paths:
        print(p)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="covlab")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectra", help="effective ranks of Lambda_t over the grid")
    p.add_argument("--d", type=int, default=50)
    p.add_argument("--grid", type=int, default=70)
    p.set_defaults(func=cmd_spectra)

    p = sub.add_parser("bounds", help="evaluate deviation bounds for Lambda_t")
    p.add_argument("--d", type=int, default=50)
    p.add_argument("--t", type=float, default=0.5)
    p.add_argument("--tau", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--rho-max", type=float, help="defaults to 4 / (3 sqrt(tau))")
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--json", action="store_true")
    p.add_argument("--moments", action="store_true", help="print exact E||S_hat - S||_F^2 per law instead")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("verify", help="run the oracle cross-checks")
    size = p.add_mutually_exclusive_group()
    size.add_argument("--quick", action="store_true", help="small replicate counts (default)")
    size.add_argument("--full", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("simulate", help="run the rank-sweep experiment")
    p.add_argument("--config", type=Path)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", type=str)
    p.add_argument("--full", action="store_true", help="5000 replicates, n in {10, 50, 100, 1000}")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("plot", help="draw figures from a simulate output directory")
    p.add_argument("--in", dest="input", required=True)
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DomainError) as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except NumericFailure as exc:
        log.error("%s", exc)
        return EXIT_NUMERIC
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
