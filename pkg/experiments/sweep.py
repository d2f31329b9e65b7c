# experiments/sweep.py
"""Parallel grid sweep with a run-key cache.

Every grid cell is an independent task executed in a process pool, bounded
by an asyncio semaphore. Finished cells leave a report under
<output_dir>/reports/<run_key>.json; a rerun skips those unless forced, so
an interrupted sweep resumes where it stopped. After the training grid the
perturbation grid is evaluated on each model's best cell.
"""

import asyncio
import time
from concurrent.futures import Executor, ProcessPoolExecutor, ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import pandas as pd

from analysis.report import NO_PERTURBATION, EvalReport, aggregate_reports, load_report, write_json
from config.experiment_config import ExperimentConfig, RunSpec
from config.settings import Settings
from experiments.progress_observers import ProgressReporter, default_reporter
from experiments.runner import RunPaths, ensure_dataset, execute_perturbation, execute_run, write_report_bundle
from models.ltc import SolverError
from robustness.perturbations import PerturbationSpec
from training.trainer import NumericalAbort
from utils.logger import get_logger

logger = get_logger(__name__)

# (run_key, run document, worker function, worker arguments)
Job = Tuple[str, Dict[str, Any], Callable[..., Dict[str, Any]], tuple]


@dataclass
class SweepFailure:
    run_key: str
    run: Dict[str, Any]
    error_type: str
    message: str
    numerical: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            "run_key": self.run_key,
            "run": self.run,
            "error_type": self.error_type,
            "message": self.message,
            "numerical": self.numerical,
        }


@dataclass
class SweepSummary:
    total: int = 0
    trained: int = 0
    cached: int = 0
    perturbation_runs: int = 0
    failures: List[SweepFailure] = field(default_factory=list)
    reports: List[EvalReport] = field(default_factory=list)
    duration_seconds: float = 0.0

    @property
    def numerical_only(self) -> bool:
        return bool(self.failures) and all(f.numerical for f in self.failures)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "total": self.total,
            "trained": self.trained,
            "cached": self.cached,
            "perturbation_runs": self.perturbation_runs,
            "failed": len(self.failures),
            "failures": [f.to_dict() for f in self.failures[:20]],
            "reports": len(self.reports),
            "duration_seconds": round(self.duration_seconds, 3),
        }


def best_cells(reports: List[EvalReport],
               main_epochs: Optional[Sequence[int]] = None) -> Dict[str, Tuple[int, int, Optional[float]]]:
    """(neurons, epochs, sparsity) of the highest mean test R2 per model, unperturbed runs only.

    With `main_epochs` only those epoch budgets compete, so an over-training
    cell never becomes the perturbation target.
    """
    clean = [r for r in reports if r.perturbation == NO_PERTURBATION]
    if main_epochs is not None:
        allowed = set(int(e) for e in main_epochs)
        clean = [r for r in clean if r.epochs in allowed]
    cells = aggregate_reports(clean)
    best = {}
    for model, rows in cells.groupby("model", sort=True):
        top = rows.loc[rows["r2_mean"].idxmax()]
        sparsity = None if pd.isna(top["sparsity"]) else float(top["sparsity"])
        best[model] = (int(top["neurons"]), int(top["epochs"]), sparsity)
    return best


class SweepRunner:
    """Runs the configured grid with bounded parallelism and caching."""

    def __init__(self, config: ExperimentConfig, workers: Optional[int] = None, force: bool = False,
                 reporter: Optional[ProgressReporter] = None, use_processes: bool = True):
        self.config = config
        self.output_dir = Path(config.output_dir)
        self.workers = workers or config.workers or Settings.MAX_WORKERS
        self.force = force
        self.reporter = reporter or default_reporter(self.output_dir)
        self.use_processes = use_processes
        self.summary = SweepSummary()

    def _executor(self) -> Executor:
        if self.use_processes:
            return ProcessPoolExecutor(max_workers=self.workers)
        return ThreadPoolExecutor(max_workers=self.workers)

    def _cached(self, run_key: str) -> Optional[EvalReport]:
        path = RunPaths(self.output_dir, run_key).report
        if self.force or not path.exists():
            return None
        try:
            return load_report(path)
        except Exception as e:
            logger.warning(f"Ignoring unreadable cached report {path}: {e}")
            return None

    async def _run_task(self, semaphore: asyncio.Semaphore, executor: Executor, job: Job):
        """(job, report, error); exactly one of report and error is set."""
        _, _, fn, args = job
        async with semaphore:
            loop = asyncio.get_running_loop()
            try:
                document = await loop.run_in_executor(executor, fn, *args)
                return job, EvalReport(**document), None
            except Exception as e:
                return job, None, e

    async def _run_batch(self, jobs: List[Job], label: str) -> None:
        """Run jobs, skipping cached run keys, and record outcomes."""
        pending = []
        for job in jobs:
            cached = self._cached(job[0])
            if cached is not None:
                self.summary.cached += 1
                self.summary.reports.append(cached)
            else:
                pending.append(job)

        total = len(jobs)
        done = total - len(pending)
        await self.reporter.report_item_progress(f"{label}: cache checked", done, total,
                                                 cached=self.summary.cached)
        if not pending:
            return

        semaphore = asyncio.Semaphore(self.workers)
        with self._executor() as executor:
            tasks = [self._run_task(semaphore, executor, job) for job in pending]
            for future in asyncio.as_completed(tasks):
                (run_key, run_doc, fn, _), report, error = await future
                if error is None:
                    self.summary.reports.append(report)
                    if fn is execute_run:
                        self.summary.trained += 1
                    else:
                        self.summary.perturbation_runs += 1
                else:
                    numerical = isinstance(error, (NumericalAbort, SolverError))
                    self.summary.failures.append(
                        SweepFailure(run_key, run_doc, type(error).__name__, str(error), numerical))
                    logger.error(f"Run {run_key[:12]} failed: {type(error).__name__}: {error}")
                done += 1
                await self.reporter.report_item_progress(
                    label, done, total, cached=self.summary.cached, failed=len(self.summary.failures))

    def training_jobs(self, dataset_path: Path) -> List[Job]:
        config_doc = self.config.model_dump()
        jobs = []
        for run in self.config.run_grid():
            run_doc = run.model_dump()
            jobs.append((self.config.run_key(run), run_doc, execute_run, (config_doc, run_doc, str(dataset_path))))
        return jobs

    def perturbation_jobs(self, dataset_path: Path) -> List[Job]:
        grid = self.config.perturbations
        if not grid.enabled:
            return []
        config_doc = self.config.model_dump()
        jobs = []
        for model, (neurons, epochs, sparsity) in best_cells(self.summary.reports,
                                                               self.config.models.epochs).items():
            for seed in self.config.models.seeds:
                run = RunSpec(model_kind=model, neurons=neurons, epochs=epochs, seed=seed,
                              sparsity=sparsity if sparsity is not None else self.config.models.sparsities[0])
                if not RunPaths(self.output_dir, self.config.run_key(run)).checkpoint.exists():
                    continue
                run_doc = run.model_dump()
                for kind, eps_grid, target in (("noise", grid.noise, grid.noise_target),
                                               ("drift", grid.drift, grid.drift_target)):
                    for epsilon in eps_grid:
                        spec_doc = PerturbationSpec(kind=kind, epsilon=float(epsilon), target=target,
                                                    seed=grid.seed).to_dict()
                        jobs.append((self.config.run_key(run, spec_doc), run_doc, execute_perturbation,
                                     (config_doc, run_doc, spec_doc, str(dataset_path))))
        return jobs

    async def run(self) -> SweepSummary:
        started = time.perf_counter()
        self.output_dir.mkdir(parents=True, exist_ok=True)
        self.summary = SweepSummary()
        try:
            dataset_path = ensure_dataset(self.config, self.output_dir, max_workers=self.workers)
            training = self.training_jobs(dataset_path)
            self.summary.total = len(training)
            await self.reporter.report_started(self.config.name, total_count=len(training),
                                               workers=self.workers, force=self.force)

            await self._run_batch(training, "training grid")
            perturbations = self.perturbation_jobs(dataset_path)
            self.summary.total += len(perturbations)
            if perturbations:
                await self._run_batch(perturbations, "perturbation grid")

            self.summary.reports.sort(key=lambda r: r.run_key)
            write_report_bundle(self.summary.reports, self.output_dir, self.config)
            self.summary.duration_seconds = time.perf_counter() - started
            write_json(self.summary.to_dict(), self.output_dir / "sweep_summary.json")
            if self.summary.failures:
                write_json([f.to_dict() for f in self.summary.failures], self.output_dir / "failures.json")

            await self.reporter.report_completed(
                self.config.name, processed=self.summary.trained + self.summary.perturbation_runs,
                total=self.summary.total, cached=self.summary.cached, failed=len(self.summary.failures),
                duration_seconds=round(self.summary.duration_seconds, 2))
            return self.summary
        except Exception as e:
            await self.reporter.report_error(f"{type(e).__name__}: {e}")
            raise


async def run_sweep(config: ExperimentConfig, workers: Optional[int] = None, force: bool = False,
                    use_processes: bool = True) -> SweepSummary:
    return await SweepRunner(config, workers=workers, force=force, use_processes=use_processes).run()
