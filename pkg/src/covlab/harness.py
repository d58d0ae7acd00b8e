"""Grid x distribution x sample-size simulation of the normalized Frobenius error.

For every cell (dist, n, t) the harness draws ``reps`` samples of size n from
Sigma_t = U Lambda_t U^T and records a = ||Sigma_hat - Sigma_t||_F^2 divided by
its exact expectation. Summaries are central empirical interval widths of a.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import logging
import math
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import ConfigError, DomainError
from .matcore import effective_rank, haar_orthogonal
from .moments import expected_frob_error
from .rng import stream
from .samplers import DistKind, whitened
from .spectra import CovModel, grid, lambda_t

log = logging.getLogger(__name__)

RECORD_COLUMNS = ("dist", "n", "t", "r_sigma", "j", "a")
SUMMARY_COLUMNS = ("dist", "n", "t", "r_sigma", "w", "log2_w")

# stable stream keys: never reorder
_DIST_CODE = {DistKind.TRUNC_LAPLACE: 0, DistKind.UNIFORM_SPHERE: 1, DistKind.GAUSSIAN: 2}
_KEY_ROTATION, _KEY_REPLICATE = 0, 1


@dataclass(frozen=True)
class ExperimentConfig:
    d: int = 50
    n_list: tuple[int, ...] = (10, 50, 100, 1000)
    grid_count: int = 70
    reps: int = 5000
    dists: tuple[DistKind, ...] = (DistKind.TRUNC_LAPLACE, DistKind.UNIFORM_SPHERE)
    master_seed: int = 0
    out_dir: str = "runs/default"
    ci_level: float = 0.95

    def __post_init__(self):
        object.__setattr__(self, "n_list", tuple(int(n) for n in self.n_list))
        try:
            object.__setattr__(self, "dists", tuple(DistKind(x) for x in self.dists))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.d < 2:
            raise ConfigError("d must be at least 2")
        if not self.n_list or min(self.n_list) < 1:
            raise ConfigError("n_list must be a nonempty list of positive sizes")
        if self.grid_count < 2:
            raise ConfigError("grid_count must be at least 2")
        if self.reps < 2:
            raise ConfigError("reps must be at least 2")
        if not self.dists:
            raise ConfigError("dists must be nonempty")
        # repeated entries would reuse stream keys
        if len(set(self.dists)) != len(self.dists) or len(set(self.n_list)) != len(self.n_list):
            raise ConfigError("dists and n_list must not repeat entries")
        if not 0.0 < self.ci_level < 1.0:
            raise ConfigError("ci_level must lie in (0, 1)")
        if not 0 <= self.master_seed < 2 ** 64:
            raise ConfigError("master_seed must be a 64-bit unsigned integer")

    @classmethod
    def scaled(cls, **overrides) -> "ExperimentConfig":
        """Desk-scale profile: 1000 replicates at n in {10, 100, 1000}."""
        return cls(**{"reps": 1000, "n_list": (10, 100, 1000), **overrides})

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["n_list"] = list(self.n_list)
        out["dists"] = [str(x) for x in self.dists]
        return out


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(ExperimentConfig)}


def _parse_value(key: str, raw: str):
    raw = raw.strip()
    try:
        if key in ("d", "grid_count", "reps", "master_seed"):
            return int(raw)
        if key == "ci_level":
            return float(raw)
        if key == "n_list":
            return tuple(int(x) for x in raw.replace(",", " ").split())
        if key == "dists":
            return tuple(DistKind(x) for x in raw.replace(",", " ").split())
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {raw!r} ({exc})") from None
    return raw


def parse_config_text(text: str) -> dict:
    """Parse flat ``key = value`` lines; '#' starts a comment."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in _FIELD_TYPES:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = _parse_value(key, raw)
    return values


def load_config(path: str | Path | None, full: bool = False, **overrides) -> ExperimentConfig:
    """Profile defaults, then the config file, then explicit overrides."""
    values = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        values.update(parse_config_text(text))
    values.update({k: v for k, v in overrides.items() if v is not None})
    if full:
        return ExperimentConfig(**values)
    return ExperimentConfig.scaled(**values)


@dataclass(frozen=True)
class RunRecord:
    dist: DistKind
    n: int
    t: float
    r_sigma: float
    j: int
    a: float


@dataclass(frozen=True)
class SummaryRecord:
    dist: DistKind
    n: int
    t: float
    r_sigma: float
    w: float
    log2_w: float


@dataclass(frozen=True)
class CellTask:
    d: int
    dist: DistKind
    n: int
    t_index: int
    grid_count: int
    reps: int
    master_seed: int


@dataclass
class CellResult:
    dist: DistKind
    n: int
    t_index: int
    t: float
    r_sigma: float
    a: np.ndarray = field(repr=False)
    error: str | None = None

    def records(self) -> Iterator[RunRecord]:
        for j, value in enumerate(self.a):
            yield RunRecord(self.dist, self.n, self.t, self.r_sigma, j, float(value))


def cell_model(d: int, dist: DistKind, t_index: int, grid_count: int, master_seed: int) -> CovModel:
    """Sigma_t with the rotation shared by every n and replicate of (dist, t)."""
    t = grid(grid_count)[t_index]
    rot = haar_orthogonal(d, stream(master_seed, _KEY_ROTATION, _DIST_CODE[dist], t_index))
    return CovModel.from_spectrum(lambda_t(t, d), dist, rot)


def run_cell(task: CellTask) -> CellResult:
    t = grid(task.grid_count)[task.t_index]
    model = cell_model(task.d, task.dist, task.t_index, task.grid_count, task.master_seed)
    expected = expected_frob_error(model, task.n).expected_frob_sq
    root = np.sqrt(model.spectrum.values)
    code = _DIST_CODE[task.dist]
    a = np.empty(task.reps)
    for j in range(task.reps):
        rng = stream(task.master_seed, _KEY_REPLICATE, code, task.t_index, task.n, j)
        x = (whitened(task.dist, task.d, task.n, rng) * root) @ model.U.T
        err = x.T @ x / task.n - model.sigma
        a[j] = np.sum(err * err) / expected
    result = CellResult(task.dist, task.n, task.t_index, t, effective_rank(model.spectrum), a)
    bad = ~np.isfinite(a)
    if bad.any():
        result.error = f"{int(bad.sum())} non-finite ratios in cell dist={task.dist} n={task.n} t={t!r}"
        log.error(result.error)
    return result


def cell_tasks(config: ExperimentConfig) -> list[CellTask]:
    """Cells in (dist, n, t) order."""
    return [
        CellTask(config.d, dist, n, k, config.grid_count, config.reps, config.master_seed)
        for dist in sorted(config.dists, key=str)
        for n in sorted(config.n_list)
        for k in range(config.grid_count)
    ]


def run_cells(config: ExperimentConfig, workers: int = 1) -> list[CellResult]:
    tasks = cell_tasks(config)
    if workers <= 1:
        return [run_cell(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run_cell, tasks, chunksize=1))


def run_experiment(config: ExperimentConfig, workers: int = 1) -> Iterator[RunRecord]:
    """Records of every successful cell; cells with non-finite ratios are skipped."""
    for cell in run_cells(config, workers):
        if cell.error is None:
            yield from cell.records()


def ci_width(values: Sequence[float], level: float = 0.95) -> float:
    """Width of the central empirical interval, type-7 quantiles."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise DomainError("ci_width of an empty sample")
    if not 0.0 < level < 1.0:
        raise DomainError("level must lie in (0, 1)")
    lo, hi = np.quantile(arr, [(1.0 - level) / 2.0, (1.0 + level) / 2.0], method="linear")
    return float(hi - lo)


def group_cells(records: Iterable[RunRecord]) -> dict[tuple, list[RunRecord]]:
    cells = defaultdict(list)
    for rec in records:
        cells[(str(rec.dist), rec.n, rec.t)].append(rec)
    return cells


def summarize(records: Iterable[RunRecord], level: float = 0.95) -> list[SummaryRecord]:
    """One summary per (dist, n, t), sorted; zero-width cells are logged and dropped."""
    out = []
    for key, recs in sorted(group_cells(records).items()):
        if not recs:
            raise DomainError(f"empty cell {key}")
        w = ci_width([r.a for r in recs], level)
        if w <= 0.0:
            log.warning("cell dist=%s n=%d t=%r has zero interval width; not emitted", *key)
            continue
        first = recs[0]
        out.append(SummaryRecord(first.dist, first.n, first.t, first.r_sigma, w, math.log2(w)))
    return out


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path: Path, columns: Sequence[str], rows: Iterable) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(getattr(row, c)) for c in columns])


def read_summary_csv(path: Path) -> list[SummaryRecord]:
    with open(path, newline="") as fh:
        return [
            SummaryRecord(DistKind(r["dist"]), int(r["n"]), float(r["t"]), float(r["r_sigma"]),
                          float(r["w"]), float(r["log2_w"]))
            for r in csv.DictReader(fh)
        ]


def read_records_csv(path: Path) -> list[RunRecord]:
    with open(path, newline="") as fh:
        return [
            RunRecord(DistKind(r["dist"]), int(r["n"]), float(r["t"]), float(r["r_sigma"]),
                      int(r["j"]), float(r["a"]))
            for r in csv.DictReader(fh)
        ]


def rotation_checksums(config: ExperimentConfig) -> dict[str, dict[str, str]]:
    """sha256 of each shared rotation, keyed by dist then repr(t)."""
    out = {}
    for dist in sorted(config.dists, key=str):
        per_t = {}
        for k, t in enumerate(grid(config.grid_count)):
            rot = cell_model(config.d, dist, k, config.grid_count, config.master_seed).U
            per_t[repr(t)] = hashlib.sha256(np.ascontiguousarray(rot).tobytes()).hexdigest()
        out[str(dist)] = per_t
    return out


def write_outputs(config: ExperimentConfig, cells: list[CellResult], out_dir: Path) -> list[SummaryRecord]:
    """records.csv, summary.csv and metadata.json; returns the summaries."""
    from . import __version__

    out_dir.mkdir(parents=True, exist_ok=True)
    good = [c for c in cells if c.error is None]
    records = [rec for c in good for rec in c.records()]
    write_csv(out_dir / "records.csv", RECORD_COLUMNS, records)
    summaries = summarize(records, config.ci_level)
    write_csv(out_dir / "summary.csv", SUMMARY_COLUMNS, summaries)
    meta = {
        "config": config.to_dict(),
        "seed": config.master_seed,
        "code_version": __version__,
        "rotation_sha256": rotation_checksums(config),
        "aborted_cells": [c.error for c in cells if c.error is not None],
    }
    (out_dir / "metadata.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return summaries


def emit_plot(summaries: Sequence[SummaryRecord], out_dir: str | Path, grid_count: int | None = None) -> list[Path]:
    """One SVG per distribution (log2 width against effective rank, one curve per n).

    Cells missing from a curve are drawn as gaps; pass ``grid_count`` so that
    grid points absent from every curve are known too. The plotted points are
    also written to ``figure_data.csv``.
    """
    if not summaries:
        raise DomainError("nothing to plot")
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_csv(out_dir / "figure_data.csv", SUMMARY_COLUMNS, summaries)
    matplotlib.rcParams["svg.hashsalt"] = "covlab"

    by_dist = defaultdict(list)
    for s in summaries:
        by_dist[str(s.dist)].append(s)
    written = []
    for dist, rows in sorted(by_dist.items()):
        ts = sorted(set(grid(grid_count)) | {s.t for s in rows}) if grid_count else sorted({s.t for s in rows})
        fig, ax = plt.subplots(figsize=(6, 4))
        for n in sorted({s.n for s in rows}):
            pts = {s.t: (s.r_sigma, s.log2_w) for s in rows if s.n == n}
            xy = np.array([pts.get(t, (np.nan, np.nan)) for t in ts])
            ax.plot(xy[:, 0], xy[:, 1], marker=".", label=f"n={n}", gid=f"curve_n{n}")
        ax.set_xlabel("effective rank r(Sigma_t)")
        ax.set_ylabel("log2 of 95% interval width")
        ax.set_title(dist)
        ax.legend()
        fig.tight_layout()
        path = out_dir / f"figure_{dist}.svg"
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
        written.append(path)
    return written


@dataclass(frozen=True)
class TrendReport:
    dist: DistKind
    n: int
    spearman: float
    sharp_ratio: float
    max_centering_z: float
    worst_centering_t: float


def trend_report(cells: Sequence[CellResult], dist: DistKind, n: int, level: float = 0.95) -> TrendReport:
    """Concentration diagnostics for one (dist, n) curve.

    ``spearman`` correlates effective rank with interval width over t > 0;
    ``sharp_ratio`` is the 95% quantile of |a - 1| at the rank nearest 5
    divided by the same quantile at the largest rank; ``max_centering_z`` is
    the largest |mean(a) - 1| / SE over cells.
    """
    from scipy.stats import spearmanr

    curve = sorted((c for c in cells if c.dist == DistKind(dist) and c.n == n and c.error is None),
                   key=lambda c: c.t)
    if not curve:
        raise DomainError(f"no cells for dist={dist} n={n}")
    pos = [c for c in curve if c.t > 0]
    rho = spearmanr([c.r_sigma for c in pos], [ci_width(c.a, level) for c in pos]).statistic
    near5 = min(curve, key=lambda c: abs(c.r_sigma - 5.0))
    top = max(curve, key=lambda c: c.r_sigma)
    q = lambda c: float(np.quantile(np.abs(c.a - 1.0), 0.95, method="linear"))
    z = [abs(c.a.mean() - 1.0) / (c.a.std(ddof=1) / math.sqrt(c.a.size)) for c in curve]
    worst = int(np.argmax(z))
    return TrendReport(DistKind(dist), n, float(rho), q(near5) / q(top), float(z[worst]), curve[worst].t)

