"""Run the rank sweep, write CSVs and figures, and print the concentration diagnostics.

    python scripts/rank_sweep.py --out runs/sweep --seed 1 [--full] [--workers 4]
"""

import argparse
from pathlib import Path

from covlab.harness import ExperimentConfig, emit_plot, run_cells, trend_report, write_outputs


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", type=Path, default=Path("runs/sweep"))
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--full", action="store_true")
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args()

    overrides = dict(master_seed=args.seed, out_dir=str(args.out))
    config = ExperimentConfig(**overrides) if args.full else ExperimentConfig.scaled(**overrides)
    cells = run_cells(config, workers=args.workers)
    summaries = write_outputs(config, cells, args.out)
    for path in emit_plot(summaries, args.out, config.grid_count):
        print("wrote", path)

    print("dist,n,spearman,quantile_ratio,max_centering_z")
    for dist in config.dists:
        for n in config.n_list:
            rep = trend_report(cells, dist, n, config.ci_level)
            print(f"{dist},{n},{rep.spearman:.4f},{rep.sharp_ratio:.3f},{rep.max_centering_z:.2f}")


if __name__ == "__main__":
    main()
