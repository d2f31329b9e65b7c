#!/usr/bin/env python3
# main.py
"""LTC/NCP vs LSTM energy-forecasting experiments: command-line entry point.

    python main.py synth --seed 1 --rows 2000
    python main.py --config experiment.json sweep --workers 4
    python main.py report

Exit codes: 0 success, 2 configuration error, 3 runtime failure, 4 numerical abort.
"""

import argparse
import asyncio
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

# Add project root to Python path
project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))

from analysis.report import write_json
from config.experiment_config import (
    ConfigError,
    ExperimentConfig,
    RunSpec,
    load_experiment_config,
    parse_experiment_config,
)
from config.settings import Settings, SettingsError, validate_settings
from data.dataset import Dataset
from data.synthetic import synth_sites
from experiments.runner import (
    DATASET_FILE,
    RunPaths,
    collect_reports,
    ensure_dataset,
    evaluate_checkpoint,
    preprocess_sites,
    prepare_dataset,
    trace_path,
    train_run,
    write_report_bundle,
    write_trace,
)
from experiments.sweep import SweepRunner
from models.ltc import SolverError
from robustness.perturbations import PerturbationError, PerturbationSpec, perturb_dataset
from training.checkpoint import save_checkpoint
from training.trainer import NumericalAbort, TrainingError
from utils.converters import safe_json_dumps
from utils.logger import experiment_logger, get_logger

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3
EXIT_NUMERICAL = 4


def _override(config: ExperimentConfig, section: str, **values) -> ExperimentConfig:
    """Re-validated copy of `config` with non-None values merged into one section."""
    document = config.model_dump()
    document[section].update({k: v for k, v in values.items() if v is not None})
    return parse_experiment_config(document)


def _dataset_path(config: ExperimentConfig, explicit: Optional[str]) -> Path:
    if explicit:
        return Path(explicit)
    return ensure_dataset(config, config.output_dir)


def _emit(document: Dict[str, Any]) -> None:
    print(safe_json_dumps(document))


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_synth(args, config: ExperimentConfig) -> int:
    config = _override(config, "dataset", source="synthetic", seed=args.seed, rows=args.rows,
                       n_features=args.features, noise_variance=args.noise_variance)
    if args.csv_dir:
        paths = synth_sites(args.csv_dir, n_sites=args.sites, rows=config.dataset.rows,
                            n_features=config.dataset.n_features, seed=config.dataset.seed)
        _emit({"csv_dir": args.csv_dir, "files": [str(p) for p in paths]})
        return EXIT_OK

    dataset = prepare_dataset(config)
    path = dataset.save(args.out or Path(config.output_dir) / DATASET_FILE)
    _emit({"dataset": str(path), "rows": dataset.n_rows, "features": dataset.n_features,
           "ceiling_r2": dataset.meta.get("ceiling_r2")})
    return EXIT_OK


def cmd_preprocess(args, config: ExperimentConfig) -> int:
    csv_dir = args.csv_dir or config.dataset.csv_dir
    if not csv_dir:
        raise ConfigError("preprocess needs --csv-dir or dataset.csv_dir in the config")
    pipeline = config.pipeline
    if args.k is not None:
        pipeline = _override(config, "pipeline", forced_k=args.k).pipeline
    dataset = preprocess_sites(csv_dir, pipeline, site=args.site or config.dataset.site,
                               max_workers=Settings.MAX_WORKERS)
    path = dataset.save(args.out or Path(config.output_dir) / DATASET_FILE)
    _emit({"dataset": str(path), "site": dataset.meta.get("site"), "rows": dataset.n_rows,
           "features": dataset.feature_names, "clustering": dataset.meta.get("clustering")})
    return EXIT_OK


def cmd_train(args, config: ExperimentConfig) -> int:
    config = _override(config, "models", learning_rate=args.lr)
    run = RunSpec(
        model_kind=args.model,
        neurons=args.neurons,
        epochs=args.epochs,
        seed=args.seed if args.seed is not None else Settings.DEFAULT_SEED,
        sparsity=args.sparsity if args.sparsity is not None else config.models.sparsities[0],
    )
    cfg = config.train_config(run)
    cfg.validate()
    run_key = config.run_key(run)
    dataset = Dataset.load(_dataset_path(config, args.dataset))

    experiment_logger.run_started(run_key, run.model_kind, run.neurons, run.epochs, run.seed)
    model, trace = train_run(dataset, cfg)
    if args.checkpoint:
        checkpoint = Path(args.checkpoint)
    else:
        checkpoint = RunPaths(Path(config.output_dir), run_key).checkpoint
    save_checkpoint(checkpoint, model, cfg)
    write_trace(trace, trace_path(checkpoint))
    _emit({"run_key": run_key, "checkpoint": str(checkpoint), "final_loss": trace.final_loss,
           "params": model.param_count(), "wall_seconds": trace.wall_seconds})
    return EXIT_OK


def cmd_evaluate(args, config: ExperimentConfig) -> int:
    dataset = Dataset.load(_dataset_path(config, args.dataset))
    report = evaluate_checkpoint(args.checkpoint, dataset)
    out = Path(args.out) if args.out else RunPaths(Path(config.output_dir), report.run_key).report
    write_json(report, out)
    experiment_logger.run_completed(report.run_key, report.r2, report.mse, report.train_wall_time,
                                    perturbation=report.perturbation)
    _emit({"report": str(out), **report.model_dump()})
    return EXIT_OK


def cmd_perturb(args, config: ExperimentConfig) -> int:
    spec = PerturbationSpec(kind=args.kind, epsilon=args.epsilon, target=args.target,
                            seed=args.seed if args.seed is not None else config.perturbations.seed,
                            reference=args.reference)
    spec.validate()
    dataset = Dataset.load(_dataset_path(config, args.dataset))
    perturbed, ks = perturb_dataset(dataset, spec)
    out = args.out or Path(config.output_dir) / f"perturbed_{spec.kind}_{spec.target}_{spec.epsilon:g}.zip"
    path = perturbed.save(out)
    _emit({"dataset": str(path), "perturbation": spec.label, **ks.to_dict()})
    return EXIT_OK


def cmd_sweep(args, config: ExperimentConfig) -> int:
    runner = SweepRunner(config, workers=args.workers, force=args.force, use_processes=not args.threads)
    summary = asyncio.run(runner.run())
    _emit(summary.to_dict())
    if not summary.failures:
        return EXIT_OK
    return EXIT_NUMERICAL if summary.numerical_only else EXIT_RUNTIME


def cmd_report(args, config: ExperimentConfig) -> int:
    directory = Path(args.reports_dir or config.output_dir)
    reports = collect_reports(directory)
    if not reports:
        logger.warning(f"No reports found under {directory}")
    written = write_report_bundle(reports, directory, config, export_wiring=args.wiring)
    _emit({"reports": len(reports), "files": {k: str(v) for k, v in written.items()}})
    return EXIT_OK


COMMANDS = {
    "synth": cmd_synth,
    "preprocess": cmd_preprocess,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "perturb": cmd_perturb,
    "sweep": cmd_sweep,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="main.py", description=__doc__.split("\n")[0])
    parser.add_argument("--config", help="experiment JSON file (defaults apply when omitted)")
    parser.add_argument("--output-dir", help="override the config's output_dir")
    parser.add_argument("--log-level", help="DEBUG, INFO, WARNING, ERROR")
    parser.add_argument("--log-json", action="store_true", help="JSON-lines log output")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a seeded synthetic dataset")
    p.add_argument("--seed", type=int)
    p.add_argument("--rows", type=int)
    p.add_argument("--features", type=int)
    p.add_argument("--noise-variance", type=float)
    p.add_argument("--out", help="dataset container path")
    p.add_argument("--csv-dir", help="write raw multi-site CSVs here instead")
    p.add_argument("--sites", type=int, default=6)

    p = sub.add_parser("preprocess", help="raw site CSVs -> packaged dataset")
    p.add_argument("--csv-dir")
    p.add_argument("--site", help="site id; default: first site of the low-drift cluster")
    p.add_argument("--k", type=int, help="force the number of clusters")
    p.add_argument("--out")

    p = sub.add_parser("train", help="train one model")
    p.add_argument("--dataset")
    p.add_argument("--model", default="ncp", choices=["ncp", "ctrnn", "lstm"])
    p.add_argument("--neurons", type=int, default=16)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--seed", type=int)
    p.add_argument("--sparsity", type=float)
    p.add_argument("--lr", type=float)
    p.add_argument("--checkpoint")

    p = sub.add_parser("evaluate", help="test metrics of a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--dataset")
    p.add_argument("--out")

    p = sub.add_parser("perturb", help="inject noise or drift into the test split")
    p.add_argument("--dataset")
    p.add_argument("--kind", required=True, choices=["noise", "drift"])
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--target", choices=["features", "label"])
    p.add_argument("--seed", type=int)
    p.add_argument("--reference", default="test", choices=["test", "train"])
    p.add_argument("--out")

    p = sub.add_parser("sweep", help="run the configured grid")
    p.add_argument("--workers", type=int)
    p.add_argument("--force", action="store_true", help="recompute cached runs")
    p.add_argument("--threads", action="store_true", help="run cells in threads instead of processes")

    p = sub.add_parser("report", help="aggregate reports into plot-ready tables")
    p.add_argument("--reports-dir")
    p.add_argument("--wiring", action="store_true", help="also export NCP adjacency documents")
    return parser


def load_config(args) -> ExperimentConfig:
    if args.config:
        config = load_experiment_config(args.config)
    else:
        config = ExperimentConfig(output_dir=str(Settings.OUTPUT_DIR))
    if args.output_dir:
        document = config.model_dump()
        document["output_dir"] = args.output_dir
        config = parse_experiment_config(document)
    return config


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    if args.log_json:
        Settings.LOG_JSON = True
    Settings.setup_logging(args.log_level)

    try:
        validate_settings()
        config = load_config(args)
        return COMMANDS[args.command](args, config)
    except (ConfigError, SettingsError) as e:
        logger.error(str(e))
        print(str(e), file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalAbort, SolverError) as e:
        logger.error(f"Numerical abort: {e}")
        return EXIT_NUMERICAL
    except (TrainingError, PerturbationError) as e:
        logger.error(f"Invalid setup: {e}")
        return EXIT_CONFIG
    except KeyboardInterrupt:
        logger.warning("Interrupted")
        return EXIT_RUNTIME
    except Exception as e:
        logger.error(f"{args.command} failed: {type(e).__name__}: {e}")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
