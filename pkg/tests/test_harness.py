import math
import re

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from covlab.errors import ConfigError, DomainError
from covlab.harness import (
    RECORD_COLUMNS,
    ExperimentConfig,
    RunRecord,
    SummaryRecord,
    CellTask,
    ci_width,
    emit_plot,
    load_config,
    parse_config_text,
    read_records_csv,
    read_summary_csv,
    run_cell,
    run_cells,
    run_experiment,
    summarize,
    trend_report,
    write_outputs,
)
from covlab.samplers import DistKind
from covlab.spectra import grid

TINY = dict(d=3, n_list=(5,), grid_count=2, reps=2)


def test_config_defaults_and_profile():
    full = ExperimentConfig()
    assert (full.d, full.n_list, full.grid_count, full.reps, full.ci_level) == (50, (10, 50, 100, 1000), 70, 5000, 0.95)
    assert set(full.dists) == {DistKind.TRUNC_LAPLACE, DistKind.UNIFORM_SPHERE}
    scaled = ExperimentConfig.scaled()
    assert (scaled.reps, scaled.n_list) == (1000, (10, 100, 1000))


@pytest.mark.parametrize(
    "bad", [dict(reps=1), dict(ci_level=1.0), dict(n_list=()), dict(dists=("cauchy",)), dict(n_list=(5, 5))]
)
def test_config_invariants(bad):
    with pytest.raises(ConfigError):
        ExperimentConfig(**bad)


def test_parse_config_text():
    text = "# comment\nd = 4\nn_list = 10, 20\ndists = gaussian uniform_sphere\nci_level=0.9\nout_dir = runs/x\n"
    values = parse_config_text(text)
    assert values == {
        "d": 4,
        "n_list": (10, 20),
        "dists": (DistKind.GAUSSIAN, DistKind.UNIFORM_SPHERE),
        "ci_level": 0.9,
        "out_dir": "runs/x",
    }
    for bad in ("nonsense = 3", "d = 4\nd = 5", "d: 4", "reps = many"):
        with pytest.raises(ConfigError):
            parse_config_text(bad)


def test_load_config_layers(tmp_path):
    path = tmp_path / "exp.cfg"
    path.write_text("reps = 7\nmaster_seed = 3\n")
    cfg = load_config(path, master_seed=11)
    assert (cfg.reps, cfg.master_seed, cfg.n_list) == (7, 11, (10, 100, 1000))
    assert load_config(path, full=True).n_list == (10, 50, 100, 1000)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.cfg")


def test_tiny_run_record_count():
    cfg = ExperimentConfig(**TINY)
    records = list(run_experiment(cfg))
    assert len(records) == 2 * 2 * len(cfg.dists)
    assert all(r.a >= 0 and math.isfinite(r.a) for r in records)


def test_ratio_is_centered():
    for dist in (DistKind.TRUNC_LAPLACE, DistKind.UNIFORM_SPHERE):
        cell = run_cell(CellTask(d=10, dist=dist, n=20, t_index=3, grid_count=5, reps=3000, master_seed=1))
        se = cell.a.std(ddof=1) / math.sqrt(cell.a.size)
        assert abs(cell.a.mean() - 1.0) <= 3 * se


def test_cells_independent_of_worker_count():
    cfg = ExperimentConfig(d=4, n_list=(5, 8), grid_count=3, reps=20, master_seed=9)
    serial = run_cells(cfg, workers=1)
    parallel = run_cells(cfg, workers=2)
    for a, b in zip(serial, parallel):
        assert (a.dist, a.n, a.t) == (b.dist, b.n, b.t)
        assert np.array_equal(a.a, b.a)


def test_outputs_are_byte_identical_across_runs(tmp_path):
    cfg = ExperimentConfig(d=4, n_list=(5,), grid_count=3, reps=10, master_seed=2)
    write_outputs(cfg, run_cells(cfg), tmp_path / "a")
    write_outputs(cfg, run_cells(cfg, workers=2), tmp_path / "b")
    for name in ("records.csv", "summary.csv", "metadata.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    header = (tmp_path / "a" / "records.csv").read_text().splitlines()[0]
    assert header == ",".join(RECORD_COLUMNS)
    assert (tmp_path / "a" / "summary.csv").read_text().startswith("dist,n,t,r_sigma,w,log2_w\n")


def test_records_round_trip(tmp_path):
    cfg = ExperimentConfig(**TINY)
    cells = run_cells(cfg)
    write_outputs(cfg, cells, tmp_path)
    assert read_records_csv(tmp_path / "records.csv") == [r for c in cells for r in c.records()]


def test_metadata_contents(tmp_path):
    import json

    cfg = ExperimentConfig(**TINY, master_seed=5)
    write_outputs(cfg, run_cells(cfg), tmp_path)
    meta = json.loads((tmp_path / "metadata.json").read_text())
    assert meta["seed"] == 5 and meta["config"]["reps"] == 2
    assert set(meta["rotation_sha256"]["trunc_laplace"]) == {"0.0", "1.0"}
    assert meta["code_version"]


def test_ci_width_examples():
    assert ci_width([2.5] * 10) == 0.0
    assert ci_width(list(range(1, 101)), 0.95) == pytest.approx(94.05, abs=1e-12)
    with pytest.raises(DomainError):
        ci_width([])
    with pytest.raises(DomainError):
        ci_width([1.0, 2.0], 1.0)


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=60), st.randoms(use_true_random=False))
def test_ci_width_permutation_invariant(values, rnd):
    shuffled = list(values)
    rnd.shuffle(shuffled)
    assert ci_width(shuffled) == ci_width(values)
    assert ci_width(values) >= 0.0


def _records(dist, n, t, r, values):
    return [RunRecord(dist, n, t, r, j, v) for j, v in enumerate(values)]


def test_summarize_flags_constant_cells_and_sorts():
    recs = (
        _records(DistKind.UNIFORM_SPHERE, 10, 0.5, 2.0, [1.0, 1.5, 0.5])
        + _records(DistKind.TRUNC_LAPLACE, 100, 0.0, 1.0, [1.0, 1.0, 1.0])
        + _records(DistKind.TRUNC_LAPLACE, 10, 1.0, 3.0, [0.9, 1.1, 1.0])
        + _records(DistKind.TRUNC_LAPLACE, 10, 0.5, 2.0, [0.8, 1.2, 1.0])
    )
    out = summarize(recs)
    assert [(str(s.dist), s.n, s.t) for s in out] == [
        ("trunc_laplace", 10, 0.5), ("trunc_laplace", 10, 1.0), ("uniform_sphere", 10, 0.5)
    ]
    assert all(s.log2_w == pytest.approx(math.log2(s.w)) for s in out)


def test_summary_rank_column_matches_closed_form():
    d = 6
    cfg = ExperimentConfig(d=d, n_list=(5,), grid_count=5, reps=4)
    for s in summarize(run_experiment(cfg)):
        # sum of the spectrum over its top entry, written out per branch
        k = np.arange(1, d)
        tail = 2 * s.t * (1 - k / d) if s.t <= 0.5 else (1 - k / d) ** (2 * (1 - s.t))
        assert s.r_sigma == pytest.approx(1 + tail.sum(), rel=1e-14)


def _summaries(dists=("trunc_laplace", "uniform_sphere"), ns=(10, 50, 100, 1000), skip=()):
    out = []
    for dist in dists:
        for n in ns:
            for k, t in enumerate(grid(6)):
                if (dist, n, k) in skip:
                    continue
                w = 1.0 / (1 + k) / math.sqrt(n)
                out.append(SummaryRecord(DistKind(dist), n, t, 1 + 9 * t, w, math.log2(w)))
    return out


def test_emit_plot_files_curves_and_sidecar(tmp_path):
    summaries = _summaries()
    paths = emit_plot(summaries, tmp_path)
    assert sorted(p.name for p in paths) == ["figure_trunc_laplace.svg", "figure_uniform_sphere.svg"]
    curves = sum(len(re.findall(r'<g id="curve_n\d+"', p.read_text())) for p in paths)
    assert curves == 8
    assert read_summary_csv(tmp_path / "figure_data.csv") == summaries


def test_emit_plot_leaves_gaps(tmp_path):
    summaries = _summaries(dists=("trunc_laplace",), ns=(10,), skip={("trunc_laplace", 10, 3)})
    (path,) = emit_plot(summaries, tmp_path, grid_count=6)
    group = re.search(r'<g id="curve_n10">(.*?)</g>', path.read_text(), re.S).group(1)
    line = re.search(r'<path d="([^"]*)"', group).group(1)
    assert line.count("M") == 2


def test_emit_plot_requires_data(tmp_path):
    with pytest.raises(DomainError):
        emit_plot([], tmp_path)


def test_trend_report_on_small_run():
    cfg = ExperimentConfig(d=20, n_list=(200,), grid_count=8, reps=300, dists=(DistKind.UNIFORM_SPHERE,))
    rep = trend_report(run_cells(cfg), DistKind.UNIFORM_SPHERE, 200)
    assert rep.spearman <= -0.9
    assert rep.sharp_ratio > 1.0
