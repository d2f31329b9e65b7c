# experiments/runner.py
"""Single-run orchestration: dataset preparation, training, evaluation and on-disk artifacts.

Layout of an output directory:

    dataset.zip                 packaged dataset shared by every run
    checkpoints/<run_key>.ckpt  trained parameters
    checkpoints/<run_key>.trace.json
    reports/<run_key>.json      one EvalReport per run (the sweep cache)
"""

import hashlib
import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np

from analysis.compute_cost import ledger_for
from analysis.report import (
    NO_PERTURBATION,
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
from config.experiment_config import ExperimentConfig, PipelineOptions, RunSpec
from data.clustering import kmeans_cluster, low_drift_sites, site_drift_summary
from data.dataset import Dataset
from data.ingest import load_site_directory
from data.pipeline import (
    PipelineError,
    aggregate_by_unit,
    align_sites,
    build_dataset,
    filter_unit_types,
    unit_series,
)
from data.schema import ENERGY
from data.synthetic import SyntheticProfile, synth_generate
from models.base import SequenceModel
from models.factory import build_model
from models.wiring import WiringSpec, build_ncp_wiring, save_wiring
from robustness.ks import KsResult
from robustness.perturbations import PerturbationSpec, perturb_dataset
from training.checkpoint import config_from_meta, load_checkpoint, save_checkpoint
from training.trainer import TrainConfig, TrainTrace, predict_test_rows, train
from utils.containers import ContainerError, read_container
from utils.logger import experiment_logger, get_logger, performance_logger

logger = get_logger(__name__)

DATASET_FILE = "dataset.zip"
REPORTS_DIR = "reports"
CHECKPOINTS_DIR = "checkpoints"


class RunError(Exception):
    """A run cannot start: missing artifacts or inconsistent inputs."""
    pass


@dataclass(frozen=True)
class RunPaths:
    output_dir: Path
    run_key: str

    @property
    def report(self) -> Path:
        return self.output_dir / REPORTS_DIR / f"{self.run_key}.json"

    @property
    def checkpoint(self) -> Path:
        return self.output_dir / CHECKPOINTS_DIR / f"{self.run_key}.ckpt"

    @property
    def trace(self) -> Path:
        return trace_path(self.checkpoint)


def trace_path(checkpoint: Union[str, Path]) -> Path:
    checkpoint = Path(checkpoint)
    return checkpoint.with_name(checkpoint.stem + ".trace.json")


# ---------------------------------------------------------------------------
# Datasets
# ---------------------------------------------------------------------------

def select_site(series: Dict[str, Any], options: PipelineOptions) -> Tuple[str, Dict[str, Any]]:
    """First site of the low-drift cluster; falls back to the first site when clustering is off or impossible."""
    site_ids = sorted(series)
    if not options.low_drift_only:
        return site_ids[0], {}

    candidates = [options.forced_k] if options.forced_k else \
        [k for k in options.k_candidates if k <= len(site_ids) - 1]
    if len(site_ids) < 3 or not candidates:
        logger.warning(f"Too few sites ({len(site_ids)}) to cluster; using {site_ids[0]}")
        return site_ids[0], {}

    summaries = np.array([
        site_drift_summary(series[s][ENERGY].to_numpy(dtype=np.float64),
                           options.train_fraction, options.test_fraction)
        for s in site_ids
    ])
    result = kmeans_cluster(summaries, candidates, seed=options.cluster_seed)
    low = low_drift_sites(site_ids, result)
    info = {
        "k": result.k,
        "silhouette": result.silhouette,
        "labels": dict(zip(site_ids, result.labels.tolist())),
        "low_drift_sites": low,
    }
    logger.info(f"Low-drift cluster ({len(low)} of {len(site_ids)} sites): {', '.join(low)}")
    return low[0], info


def preprocess_sites(csv_dir: Union[str, Path], options: Optional[PipelineOptions] = None,
                     site: Optional[str] = None, max_workers: Optional[int] = None) -> Dataset:
    """Raw per-cell CSVs -> unit series per site -> common interval -> one site's Dataset."""
    options = options or PipelineOptions()
    sites = load_site_directory(csv_dir, max_workers=max_workers)

    series = {}
    for site_id, frame in sites.items():
        frame = filter_unit_types(frame, options.unit_types)
        if frame.empty:
            logger.warning(f"Site {site_id} has no rows after the unit-type filter")
            continue
        series[site_id] = unit_series(aggregate_by_unit(frame), site_id)
    if not series:
        raise PipelineError(f"no usable sites in {csv_dir}")

    aligned = align_sites(series)
    if site is not None and site not in aligned:
        raise PipelineError(f"unknown site {site!r}; available: {', '.join(sorted(aligned))}")
    clustering: Dict[str, Any] = {}
    if site is None:
        site, clustering = select_site(aligned, options)

    return build_dataset(
        aligned[site], None, ENERGY, options.train_fraction, options.test_fraction,
        source="csv", site=site, clustering=clustering,
    )


def prepare_dataset(config: ExperimentConfig, max_workers: Optional[int] = None) -> Dataset:
    source = config.dataset
    if source.source == "synthetic":
        profile = SyntheticProfile(rows=source.rows, n_features=source.n_features, seed=source.seed,
                                   noise_variance=source.noise_variance, drift=source.drift)
        dataset = synth_generate(profile, config.pipeline.train_fraction, config.pipeline.test_fraction)
    elif source.source == "csv":
        dataset = preprocess_sites(source.csv_dir, config.pipeline, source.site, max_workers)
    else:
        dataset = Dataset.load(source.path)
    dataset.meta["dataset_key"] = config.dataset_key()
    return dataset


def ensure_dataset(config: ExperimentConfig, output_dir: Union[str, Path],
                   max_workers: Optional[int] = None) -> Path:
    """Packaged dataset for the sweep, rebuilt only when the dataset key changed."""
    path = Path(output_dir) / DATASET_FILE
    if path.exists():
        try:
            _, meta = read_container(path)
            if (meta.get("meta") or {}).get("dataset_key") == config.dataset_key():
                logger.info(f"Reusing dataset {path}")
                return path
        except ContainerError as e:
            logger.warning(f"Rebuilding unreadable dataset {path}: {e}")
    prepare_dataset(config, max_workers).save(path)
    return path


# ---------------------------------------------------------------------------
# Runs
# ---------------------------------------------------------------------------

def train_run(dataset: Dataset, cfg: TrainConfig) -> Tuple[SequenceModel, TrainTrace]:
    model = build_model(cfg.model_kind, dataset.n_features, cfg.neuron_count, seed=cfg.seed,
                        sparsity=cfg.sparsity, ode_unfolds=cfg.ode_unfolds, dt=cfg.dt)
    return model, train(model, dataset, cfg)


def run_identifiers(run_key: str, cfg: TrainConfig, perturbation: str = NO_PERTURBATION) -> Dict[str, Any]:
    return {
        "run_key": run_key,
        "model_kind": cfg.model_kind,
        "neurons": cfg.neuron_count,
        "epochs": cfg.epochs,
        "seed": cfg.seed,
        "sparsity": None if cfg.model_kind == "lstm" else cfg.sparsity,
        "perturbation": perturbation,
    }


def evaluate_model(model: SequenceModel, dataset: Dataset, cfg: TrainConfig, trace: TrainTrace,
                   run_key: str, perturbation: str = NO_PERTURBATION,
                   ks: Optional[KsResult] = None) -> EvalReport:
    """Test-split metrics, cost ledger and identifiers of one trained model."""
    pred = predict_test_rows(model, dataset)
    metrics = evaluate_predictions(dataset.test_target, pred)
    ledger = ledger_for(cfg, model, dataset, trace.wall_seconds, run_id=run_key)
    return assemble_report(trace, metrics, ledger, run_identifiers(run_key, cfg, perturbation), ks)


def write_trace(trace: TrainTrace, path: Union[str, Path]) -> Path:
    return write_json({**trace.to_dict(), "wall_seconds": trace.wall_seconds}, path)


def read_trace(path: Union[str, Path], config_hash: str) -> TrainTrace:
    """Trace saved next to a checkpoint; an empty trace when none exists."""
    path = Path(path)
    if not path.exists():
        return TrainTrace(config_hash=config_hash)
    document = json.loads(path.read_text())
    return TrainTrace(
        config_hash=document.get("config_hash", config_hash),
        train_loss=list(document.get("train_loss", [])),
        test_r2=list(document.get("test_r2", [])),
        epoch_seconds=list(document.get("epoch_seconds", [])),
    )


def execute_run(config_doc: Dict[str, Any], run_doc: Dict[str, Any], dataset_path: str) -> Dict[str, Any]:
    """Train and evaluate one grid cell; writes checkpoint, trace and report. Process-pool entry point."""
    config = ExperimentConfig.model_validate(config_doc)
    run = RunSpec.model_validate(run_doc)
    run_key = config.run_key(run)
    paths = RunPaths(Path(config.output_dir), run_key)
    cfg = config.train_config(run)
    dataset = Dataset.load(dataset_path)

    experiment_logger.run_started(run_key, run.model_kind, run.neurons, run.epochs, run.seed,
                                  sparsity=run.sparsity)
    model, trace = train_run(dataset, cfg)
    save_checkpoint(paths.checkpoint, model, cfg)
    write_trace(trace, paths.trace)

    report = evaluate_model(model, dataset, cfg, trace, run_key)
    write_json(report, paths.report)
    experiment_logger.run_completed(run_key, report.r2, report.mse, trace.wall_seconds,
                                    model_kind=run.model_kind)
    return report.model_dump()


def execute_perturbation(config_doc: Dict[str, Any], run_doc: Dict[str, Any], spec_doc: Dict[str, Any],
                         dataset_path: str) -> Dict[str, Any]:
    """Evaluate an already trained grid cell on a perturbed test split."""
    config = ExperimentConfig.model_validate(config_doc)
    run = RunSpec.model_validate(run_doc)
    spec = PerturbationSpec(**spec_doc)
    base = RunPaths(Path(config.output_dir), config.run_key(run))
    if not base.checkpoint.exists():
        raise RunError(f"no checkpoint for run {base.run_key}; train it first")

    cfg = config.train_config(run)
    model, _ = load_checkpoint(base.checkpoint)
    trace = read_trace(base.trace, cfg.config_hash())
    perturbed, ks = perturb_dataset(Dataset.load(dataset_path), spec)

    run_key = config.run_key(run, spec.to_dict())
    report = evaluate_model(model, perturbed, cfg, trace, run_key, spec.label, ks)
    write_json(report, RunPaths(Path(config.output_dir), run_key).report)
    return report.model_dump()


def evaluation_key(config_hash: str, perturbation: Optional[Dict[str, Any]] = None) -> str:
    """Report key of an ad-hoc evaluation: the config hash, salted with any perturbation."""
    if not perturbation:
        return config_hash
    canonical = json.dumps({"config_hash": config_hash, "perturbation": perturbation},
                           sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def evaluate_checkpoint(checkpoint: Union[str, Path], dataset: Dataset,
                        run_key: Optional[str] = None) -> EvalReport:
    """Report for a saved checkpoint; a perturbed dataset contributes its label and KS shift."""
    model, meta = load_checkpoint(checkpoint)
    cfg = config_from_meta(meta)
    if cfg is None:
        raise RunError(f"checkpoint {checkpoint} carries no training config")
    trace = read_trace(trace_path(checkpoint), meta["config_hash"])

    perturbation, ks = NO_PERTURBATION, None
    spec_doc = dataset.meta.get("perturbation")
    if spec_doc:
        perturbation = PerturbationSpec(**spec_doc).label
        if dataset.meta.get("ks"):
            ks = KsResult(**dataset.meta["ks"])
    run_key = run_key or evaluation_key(meta["config_hash"], spec_doc)
    return evaluate_model(model, dataset, cfg, trace, run_key, perturbation, ks)


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

def collect_reports(output_dir: Union[str, Path]) -> List[EvalReport]:
    """Every readable report under <output_dir>/reports, sorted by run key."""
    reports_dir = Path(output_dir) / REPORTS_DIR
    reports = []
    for path in sorted(reports_dir.glob("*.json")):
        try:
            reports.append(load_report(path))
        except ReportError as e:
            logger.warning(f"Skipping report: {e}")
    return reports


def write_report_bundle(reports: List[EvalReport], output_dir: Union[str, Path],
                        config: Optional[ExperimentConfig] = None,
                        export_wiring: bool = False) -> Dict[str, Path]:
    """Plot-ready CSV/JSON tables for a set of reports."""
    started = time.perf_counter()
    output_dir = Path(output_dir)
    main_epochs = tuple(config.models.epochs) if config else (50, 100, 200, 400)
    overtraining = config.models.overtraining_epochs if config else 800

    aggregate = aggregate_reports(reports)
    written = {
        "reports": write_reports_csv(reports, output_dir / "reports.csv"),
        "aggregate_csv": output_dir / "aggregate.csv",
        "aggregate_json": write_json(aggregate, output_dir / "aggregate.json"),
        "hp_sensitivity": write_json(hp_sensitivity_summary(reports, main_epochs, overtraining),
                                     output_dir / "hp_sensitivity.json"),
        "summary": output_dir / "summary.csv",
    }
    aggregate.to_csv(written["aggregate_csv"], index=False)
    evaluation_summary(reports).to_csv(written["summary"], index=False)

    if export_wiring:
        written.update(export_wirings(reports, output_dir))

    performance_logger.execution_time("report", time.perf_counter() - started,
                                      {"reports": len(reports)})
    logger.info(f"Wrote report tables for {len(reports)} run(s) to {output_dir}")
    return written


def export_wirings(reports: List[EvalReport], output_dir: Union[str, Path]) -> Dict[str, Path]:
    """Adjacency documents of the NCP wirings behind the reports, read from their checkpoints."""
    output_dir = Path(output_dir)
    written = {}
    for report in reports:
        if report.model_kind == "lstm" or report.perturbation != NO_PERTURBATION:
            continue
        name = f"{report.model_kind}_n{report.neurons}_s{report.sparsity:g}_seed{report.seed}"
        checkpoint = RunPaths(output_dir, report.run_key).checkpoint
        if name in written or not checkpoint.exists():
            continue
        _, meta = read_container(checkpoint)
        wiring = build_ncp_wiring(WiringSpec(**meta["model"]["wiring"]))
        written[name] = save_wiring(wiring, output_dir / "wiring" / f"{name}.json")
    return written
