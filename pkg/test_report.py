#!/usr/bin/env python3
"""
Report tests: per-run report validation, aggregation across seeds,
hyperparameter sensitivity and the final per-model comparison.
"""

import sys
from pathlib import Path
from types import SimpleNamespace

import numpy as np
import pandas as pd
import pytest
from pydantic import ValidationError

# Add the project root to the path
sys.path.insert(0, str(Path(__file__).parent))

from analysis.compute_cost import CostLedger
from analysis.report import (
    NO_PERTURBATION,
    ROW_COLUMNS,
    EvalReport,
    ReportError,
    aggregate_reports,
    assemble_report,
    evaluate_predictions,
    evaluation_summary,
    hp_sensitivity_summary,
    load_report,
    write_json,
    write_reports_csv,
)
from robustness.ks import KsResult


def make_report(**overrides):
    fields = dict(
        run_key="k", config_hash="h", model_kind="ncp", neurons=16, epochs=50, seed=0,
        sparsity=0.9, perturbation=NO_PERTURBATION, r2=0.5, mse=0.5, tail_mse_p90=0.8,
        n_test=600, n_tail=60, param_count=100, flops_per_step=1000, flops_total=10 ** 6,
        train_wall_time=1.0,
    )
    fields.update(overrides)
    return EvalReport(**fields)


def ledger():
    return CostLedger(run_id="r", model_kind="ncp", params=10, flops_per_step=20, train_steps=5,
                      epochs=2, flops_total=600, wall_seconds=0.25)


def test_r2_above_one_is_rejected():
    with pytest.raises(ValidationError):
        make_report(r2=1.01)
    assert make_report(r2=1.0).r2 == 1.0
    assert make_report(r2=-3.0).r2 == -3.0


def test_unknown_fields_are_rejected():
    with pytest.raises(ValidationError):
        make_report(colour="blue")


def test_short_test_split_has_no_tail():
    metrics = evaluate_predictions(np.arange(5.0), np.arange(5.0) + 0.1)
    assert metrics["tail_mse_p90"] is None and metrics["n_tail"] == 0
    assert metrics["mse"] == pytest.approx(0.01)
    assert metrics["n_test"] == 5

    full = evaluate_predictions(np.arange(100.0), np.arange(100.0))
    assert full["tail_mse_p90"] == 0.0 and full["n_tail"] == 10


def test_assemble_report_combines_every_source():
    identifiers = dict(run_key="abc", model_kind="ncp", neurons=16, epochs=50, seed=3, sparsity=0.9,
                       perturbation="drift:label:0.05")
    metrics = evaluate_predictions(np.arange(20.0), np.arange(20.0) * 0.9)
    report = assemble_report(SimpleNamespace(config_hash="cfg"), metrics, ledger(), identifiers,
                             ks=KsResult(0.4, 0.01, 20, 20))
    assert report.config_hash == "cfg"
    assert report.flops_total == 600 and report.train_wall_time == 0.25
    assert report.ks_statistic == 0.4 and report.ks_p == 0.01
    assert report.train_energy_joules is None
    assert list(report.to_row()) == ROW_COLUMNS


def test_assemble_report_names_missing_fields():
    identifiers = dict(run_key="abc", model_kind="ncp", neurons=16, epochs=50, seed=3)
    with pytest.raises(ReportError, match="r2"):
        assemble_report(SimpleNamespace(config_hash="cfg"), {"mse": 1.0, "n_test": 3}, ledger(), identifiers)


def test_aggregate_across_seeds():
    reports = [make_report(seed=s, r2=r2) for s, r2 in enumerate([0.5, 0.6, 0.7])]
    reports += [make_report(model_kind="lstm", sparsity=None, seed=s, r2=0.4) for s in range(2)]
    cells = aggregate_reports(reports).set_index("model")
    assert cells.loc["ncp", "n_seeds"] == 3
    assert cells.loc["ncp", "r2_mean"] == pytest.approx(0.6)
    assert cells.loc["ncp", "r2_lo"] == pytest.approx(0.505)
    assert cells.loc["ncp", "r2_hi"] == pytest.approx(0.695)
    assert cells.loc["lstm", "n_seeds"] == 2
    assert pd.isna(cells.loc["lstm", "sparsity"])
    assert cells.loc["ncp", "sparsity"] == pytest.approx(0.9)


def test_aggregate_of_nothing():
    assert aggregate_reports([]).empty


def sensitivity_reports():
    reports = []
    for epochs, r2 in ((50, 0.6), (100, 0.8), (800, 0.5)):
        reports += [make_report(epochs=epochs, seed=s, r2=r2) for s in range(2)]
    reports += [make_report(epochs=100, seed=0, r2=0.7, perturbation="noise:features:0.1")]
    return reports


def test_hp_sensitivity_and_overtraining_drop():
    summary = hp_sensitivity_summary(sensitivity_reports())["ncp"]
    assert summary["r2_std"] == pytest.approx(0.1)
    assert summary["r2_peak"] == pytest.approx(0.8)
    assert (summary["peak_neurons"], summary["peak_epochs"], summary["cells"]) == (16, 100, 2)
    assert summary["overtraining_r2"] == pytest.approx(0.5)
    assert summary["overtraining_drop"] == pytest.approx(0.3)


def test_evaluation_summary_reports_robustness_drops():
    summary = evaluation_summary(sensitivity_reports()).set_index("model")
    assert summary.loc["ncp", "best_r2"] == pytest.approx(0.8)
    assert summary.loc["ncp", "best_epochs"] == 100
    assert summary.loc["ncp", "noise_r2_drop"] == pytest.approx(0.1)
    assert pd.isna(summary.loc["ncp", "drift_r2_drop"])


def test_csv_and_json_files(tmp_path):
    reports = sensitivity_reports()
    frame = pd.read_csv(write_reports_csv(reports, tmp_path / "out" / "reports.csv"))
    assert list(frame.columns) == ROW_COLUMNS
    assert len(frame) == len(reports)

    path = write_json(reports[0], tmp_path / "one.json")
    assert load_report(path) == reports[0]


def test_unreadable_report(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{\"run_key\": 1")
    with pytest.raises(ReportError):
        load_report(bad)
    with pytest.raises(ReportError):
        load_report(tmp_path / "absent.json")
