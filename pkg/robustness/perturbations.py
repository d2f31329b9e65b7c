# robustness/perturbations.py
"""Gaussian noise and level drift injection on test data, sized by the test range.

For a column D of the test split:
    noise:  D' = D + N(0, s2),  s2 = (max D - min D) * epsilon
    drift:  D' = D - (max D - min D) * epsilon
Multivariate feature blocks use each column's own range.
"""

from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from analysis.metrics import mse, r2_score
from data.dataset import Dataset
from robustness.ks import KsResult, ks_2samp
from training.trainer import predict_test_rows
from utils.logger import get_logger

logger = get_logger(__name__)

NOISE_GRID = (0.025, 0.05, 0.1)
DRIFT_GRID = (0.01, 0.05, 0.075)
DEFAULT_TARGETS = {"noise": "features", "drift": "label"}


class PerturbationError(ValueError):
    pass


@dataclass
class PerturbationSpec:
    kind: str
    epsilon: float
    target: Optional[str] = None
    seed: int = 0
    reference: str = "test"

    def __post_init__(self):
        if self.target is None and self.kind in DEFAULT_TARGETS:
            self.target = DEFAULT_TARGETS[self.kind]

    def validate(self) -> None:
        if self.kind not in DEFAULT_TARGETS:
            raise PerturbationError(f"kind must be noise or drift, got {self.kind!r}")
        if not np.isfinite(self.epsilon) or self.epsilon < 0:
            raise PerturbationError(f"epsilon must be a non-negative number, got {self.epsilon}")
        if self.target not in ("features", "label"):
            raise PerturbationError(f"target must be features or label, got {self.target!r}")
        if self.reference not in ("test", "train"):
            raise PerturbationError(f"reference must be test or train, got {self.reference!r}")

    @property
    def label(self) -> str:
        return f"{self.kind}:{self.target}:{self.epsilon:g}"

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _column_range(data: np.ndarray) -> np.ndarray:
    return data.max(axis=0) - data.min(axis=0)


def _as_columns(data) -> Tuple[np.ndarray, bool]:
    data = np.asarray(data, dtype=np.float64)
    if data.size == 0:
        raise PerturbationError("cannot perturb an empty sample")
    return (data[:, None], True) if data.ndim == 1 else (data, False)


def add_noise(data, spec: PerturbationSpec) -> np.ndarray:
    """Zero-mean Gaussian noise with per-column variance range * epsilon; seeded."""
    spec.validate()
    if spec.kind != "noise":
        raise PerturbationError(f"add_noise needs a noise spec, got {spec.kind!r}")
    columns, flat = _as_columns(data)
    std = np.sqrt(_column_range(columns) * spec.epsilon)
    rng = np.random.default_rng(spec.seed)
    perturbed = columns + rng.standard_normal(columns.shape) * std
    return perturbed[:, 0] if flat else perturbed


def add_drift(data, spec: PerturbationSpec) -> np.ndarray:
    """Constant downward shift of range * epsilon per column."""
    spec.validate()
    if spec.kind != "drift":
        raise PerturbationError(f"add_drift needs a drift spec, got {spec.kind!r}")
    columns, flat = _as_columns(data)
    perturbed = columns - _column_range(columns) * spec.epsilon
    return perturbed[:, 0] if flat else perturbed


def perturb(data, spec: PerturbationSpec) -> np.ndarray:
    return add_noise(data, spec) if spec.kind == "noise" else add_drift(data, spec)


def shift_statistic(reference: np.ndarray, perturbed: np.ndarray) -> KsResult:
    """KS between reference and perturbed samples; feature blocks report mean D and min p."""
    if reference.ndim == 1:
        return ks_2samp(reference, perturbed)
    results = [ks_2samp(reference[:, j], perturbed[:, j]) for j in range(reference.shape[1])]
    return KsResult(
        statistic=float(np.mean([r.statistic for r in results])),
        p_value=float(min(r.p_value for r in results)),
        n=results[0].n,
        m=results[0].m,
    )


def perturb_dataset(dataset: Dataset, spec: PerturbationSpec) -> Tuple[Dataset, KsResult]:
    """Perturb only the test rows; returns the new dataset and the induced shift."""
    spec.validate()
    rows = dataset.test_idx
    reference_rows = dataset.test_idx if spec.reference == "test" else dataset.train_idx

    if spec.target == "features":
        features = dataset.features.copy()
        features[rows] = perturb(dataset.features[rows], spec)
        result = shift_statistic(dataset.features[reference_rows], features[rows])
        perturbed = dataset.with_values(features=features, perturbation=spec.to_dict())
    else:
        target = dataset.target.copy()
        target[rows] = perturb(dataset.target[rows], spec)
        result = shift_statistic(dataset.target[reference_rows], target[rows])
        perturbed = dataset.with_values(target=target, perturbation=spec.to_dict())

    perturbed.meta["ks"] = result.to_dict()
    logger.info(f"Applied {spec.label}: KS D={result.statistic:.4f} p={result.p_value:.3g}")
    return perturbed, result


def robustness_curve(model, dataset: Dataset, kind: str, eps_grid: Sequence[float],
                     seed: int = 0, target: Optional[str] = None) -> List[Dict[str, Any]]:
    """Test R2/MSE and KS shift of a trained model at each epsilon."""
    rows = []
    for epsilon in eps_grid:
        spec = PerturbationSpec(kind=kind, epsilon=float(epsilon), target=target, seed=seed)
        perturbed, ks = perturb_dataset(dataset, spec)
        pred = predict_test_rows(model, perturbed)
        rows.append({
            "kind": kind,
            "target": spec.target,
            "epsilon": float(epsilon),
            "r2": r2_score(perturbed.test_target, pred),
            "mse": mse(perturbed.test_target, pred),
            "ks_statistic": ks.statistic,
            "ks_p": ks.p_value,
        })
    return rows
