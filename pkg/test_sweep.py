#!/usr/bin/env python3
"""
Sweep tests: run-key caching, forced recomputation and the perturbation grid
on each model's best cell.
"""

import sys
from pathlib import Path

import pytest

# Add the project root to the path
sys.path.insert(0, str(Path(__file__).parent))

from analysis.report import NO_PERTURBATION, aggregate_reports
from config.experiment_config import parse_experiment_config
from experiments.progress_observers import ProgressObserver, ProgressReporter
from experiments.sweep import SweepRunner, best_cells
from test_report import make_report


class RecordingObserver(ProgressObserver):
    def __init__(self):
        self.events = []

    async def on_progress_update(self, event):
        self.events.append(("progress", event))

    async def on_sweep_started(self, event):
        self.events.append(("started", event))

    async def on_sweep_completed(self, event):
        self.events.append(("completed", event))

    async def on_sweep_error(self, event):
        self.events.append(("error", event))


def small_config(tmp_path, perturbations=None):
    return parse_experiment_config({
        "name": "sweep-test",
        "dataset": {"rows": 200, "seed": 1},
        "models": {"kinds": ["ncp", "lstm"], "neurons": [4], "epochs": [1], "seeds": [0, 1],
                   "overtraining": False, "truncation_len": 16},
        "perturbations": perturbations or {"enabled": False},
        "output_dir": str(tmp_path),
    })


def test_best_cells_pick_the_highest_mean_r2():
    reports = [
        make_report(neurons=16, epochs=50, r2=0.6),
        make_report(neurons=32, epochs=100, r2=0.7),
        make_report(neurons=32, epochs=100, r2=0.9, perturbation="noise:features:0.1"),
        make_report(model_kind="lstm", sparsity=None, neurons=64, epochs=50, r2=0.5),
    ]
    assert best_cells(reports) == {"ncp": (32, 100, 0.9), "lstm": (64, 50, None)}


def test_best_cells_skip_the_overtraining_cell():
    reports = [
        make_report(neurons=16, epochs=50, r2=0.6),
        make_report(neurons=32, epochs=100, r2=0.7),
        make_report(neurons=16, epochs=800, r2=0.95),
    ]
    assert best_cells(reports)["ncp"] == (16, 800, 0.9)
    assert best_cells(reports, main_epochs=[50, 100, 200, 400])["ncp"] == (32, 100, 0.9)


@pytest.mark.asyncio
async def test_second_sweep_is_served_from_cache(tmp_path):
    config = small_config(tmp_path)
    observer = RecordingObserver()
    first = await SweepRunner(config, workers=2, use_processes=False,
                              reporter=ProgressReporter(observer)).run()
    assert (first.total, first.trained, first.cached) == (4, 4, 0)
    assert not first.failures
    assert observer.events[0][0] == "started"
    assert observer.events[-1][0] == "completed"

    second = await SweepRunner(config, workers=2, use_processes=False,
                               reporter=ProgressReporter(RecordingObserver())).run()
    assert (second.trained, second.cached) == (0, 4)
    assert sorted(r.run_key for r in second.reports) == sorted(r.run_key for r in first.reports)

    forced = await SweepRunner(config, workers=2, force=True, use_processes=False,
                               reporter=ProgressReporter(RecordingObserver())).run()
    assert (forced.trained, forced.cached) == (4, 0)


@pytest.mark.asyncio
async def test_perturbation_grid_runs_on_the_best_cells(tmp_path):
    config = small_config(tmp_path, {"noise": [0.05], "drift": [0.05]})
    summary = await SweepRunner(config, workers=2, use_processes=False,
                                reporter=ProgressReporter(RecordingObserver())).run()
    assert summary.trained == 4
    # two models x two seeds x one noise and one drift level
    assert summary.perturbation_runs == 8
    assert summary.total == 12
    perturbed = [r for r in summary.reports if r.perturbation != NO_PERTURBATION]
    assert {r.perturbation for r in perturbed} == {"noise:features:0.05", "drift:label:0.05"}
    assert all(r.ks_statistic is not None for r in perturbed)
    assert (tmp_path / "summary.csv").exists()


@pytest.mark.slow
@pytest.mark.asyncio
async def test_ncp_is_less_sensitive_to_the_training_budget(tmp_path):
    main_epochs = [50, 100, 200, 400]
    config = parse_experiment_config({
        "name": "sensitivity",
        "dataset": {"rows": 600, "seed": 1},
        "models": {"kinds": ["ncp", "lstm"], "neurons": [16, 32], "epochs": main_epochs,
                   "seeds": [0, 1], "overtraining": True, "overtraining_epochs": 800,
                   "overtraining_neurons": [16]},
        "perturbations": {"enabled": False},
        "output_dir": str(tmp_path),
    })
    summary = await SweepRunner(config, workers=4,
                                reporter=ProgressReporter(RecordingObserver())).run()
    assert not summary.failures

    cells = aggregate_reports(summary.reports)
    spread, peak, overtrained = {}, {}, {}
    for model in ("ncp", "lstm"):
        rows = cells[cells["model"] == model]
        main = rows[rows["epochs"].isin(main_epochs)]
        assert len(main) == 2 * len(main_epochs)
        spread[model] = float(main["r2_mean"].std(ddof=0))
        peak[model] = float(main["r2_mean"].max())
        overtrained[model] = float(rows.loc[rows["epochs"] == 800, "r2_mean"].iloc[0])

    assert spread["ncp"] <= spread["lstm"]
    assert peak["lstm"] - overtrained["lstm"] >= 0.05
    assert peak["ncp"] - overtrained["ncp"] <= 0.05
