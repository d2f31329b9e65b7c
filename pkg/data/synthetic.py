# data/synthetic.py
"""Seeded synthetic base-station data with a known generating function.

Counters are daily-periodic load curves (period 96 bins of 15 minutes)
plus a slow per-counter trend and Gaussian noise. With z a fixed weighted
sum of the observed counters, the standardized signal is

    s = standardize(softplus(z))

and the energy label is an affine image of s + e, where e is zero-mean
heteroscedastic noise whose mean variance is `noise_variance`. Because s
has unit variance, the best achievable R2 is 1 / (1 + noise_variance).
"""

from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from data.dataset import Dataset
from data.pipeline import build_dataset
from data.schema import CELL_ID, COUNTER_COLUMNS, ENERGY, SITE_ID, TIMESTAMP, UNIT_ID
from utils.datetime_utils import bin_range
from utils.logger import get_logger

logger = get_logger(__name__)

BINS_PER_DAY = 96
MIN_ROWS = 96
# 1 / (1 + 0.1765) ~= 0.85
DEFAULT_NOISE_VARIANCE = 0.1765
ENERGY_BASE = 1000.0
ENERGY_SCALE = 100.0


class SyntheticError(ValueError):
    pass


@dataclass
class SyntheticProfile:
    rows: int = 2000
    n_features: int = 6
    seed: int = 0
    noise_variance: float = DEFAULT_NOISE_VARIANCE
    # Trend amplitude over the whole series, in units of a counter's daily amplitude
    drift: float = 0.1
    feature_noise: float = 0.2
    start: str = "2023-01-02T00:00:00"

    def validate(self) -> None:
        if self.rows < MIN_ROWS:
            raise SyntheticError(f"rows must be at least {MIN_ROWS}, got {self.rows}")
        if self.n_features < 1:
            raise SyntheticError("n_features must be positive")
        if self.noise_variance < 0 or self.feature_noise < 0:
            raise SyntheticError("noise levels cannot be negative")

    @property
    def ceiling_r2(self) -> float:
        return 1.0 / (1.0 + self.noise_variance)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def feature_names(n_features: int) -> List[str]:
    names = list(COUNTER_COLUMNS[:n_features])
    return names + [f"counter_{j}" for j in range(len(names), n_features)]


def generate_series(profile: SyntheticProfile) -> Tuple[pd.DataFrame, np.ndarray]:
    """Frame of (timestamp, counters..., energy) and the standardized noiseless signal s."""
    profile.validate()
    rng = np.random.default_rng(profile.seed)
    T, F = profile.rows, profile.n_features
    t = np.arange(T, dtype=np.float64)
    omega = 2.0 * np.pi / BINS_PER_DAY

    phase = rng.uniform(0.0, 2.0 * np.pi, size=F)
    harmonic = rng.uniform(0.1, 0.4, size=F)
    slope = rng.choice((-1.0, 1.0), size=F) * profile.drift
    daily = (np.sin(omega * t[:, None] + phase)
             + harmonic * np.sin(2.0 * omega * t[:, None] + 2.0 * phase))
    trend = slope * (t[:, None] / T)
    components = daily + trend + profile.feature_noise * rng.standard_normal((T, F))

    weights = rng.uniform(0.5, 1.5, size=F) * rng.choice((-1.0, 1.0), size=F)
    z = components @ weights / np.sqrt(F)
    g = np.logaddexp(0.0, z)
    signal = (g - g.mean()) / g.std()

    # Heteroscedastic scale with mean one: noisier at high load
    spread = 1.0 + 0.5 * np.tanh(signal)
    spread /= spread.mean()
    noise = np.sqrt(profile.noise_variance * spread) * rng.standard_normal(T)

    frame = pd.DataFrame(10.0 + 3.0 * components, columns=feature_names(F))
    frame.insert(0, TIMESTAMP, bin_range(profile.start, T))
    frame[ENERGY] = ENERGY_BASE + ENERGY_SCALE * (signal + noise)
    return frame, signal


def synth_generate(profile: Optional[SyntheticProfile] = None, train_fraction: float = 0.65,
                   test_fraction: float = 0.30) -> Dataset:
    """Packaged, scaled and split synthetic dataset."""
    profile = profile or SyntheticProfile()
    frame, _ = generate_series(profile)
    dataset = build_dataset(
        frame, feature_names(profile.n_features), ENERGY, train_fraction, test_fraction,
        source="synthetic", profile=profile.to_dict(), ceiling_r2=profile.ceiling_r2,
    )
    logger.info(f"Generated synthetic dataset: {profile.rows} rows, {profile.n_features} features, "
                f"R2 ceiling {profile.ceiling_r2:.3f}")
    return dataset


def synth_sites(directory: Union[str, Path], n_sites: int = 6, cells_per_unit: int = 2,
                rows: int = 2000, n_features: int = 6, seed: int = 0,
                drift_levels: Optional[Sequence[float]] = None,
                missing_rate: float = 0.01) -> List[Path]:
    """Write raw per-site cell-level CSVs plus unit_map.csv.

    Each site has one radio unit split into `cells_per_unit` cells. Counters
    are split across cells, energy is repeated on every cell row, random
    bins are dropped, and the energy of the last 40% of each site is shifted
    by its drift level (in label standard deviations).
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    if drift_levels is None:
        drift_levels = np.linspace(0.0, 2.0, n_sites)
    if len(drift_levels) != n_sites:
        raise SyntheticError("drift_levels must have one entry per site")

    rng = np.random.default_rng(seed)
    written: List[Path] = []
    unit_rows = []
    for s in range(n_sites):
        site_id = f"site{s:03d}"
        unit_id = f"{site_id}-ru0"
        frame, _ = generate_series(SyntheticProfile(rows=rows, n_features=n_features, seed=seed + 1 + s))
        frame.loc[int(0.6 * rows):, ENERGY] += ENERGY_SCALE * float(drift_levels[s])

        counters = feature_names(n_features)
        keep = rng.random(rows) >= missing_rate
        keep[0] = True
        frame = frame[keep].reset_index(drop=True)

        shares = rng.dirichlet(np.ones(cells_per_unit), size=len(frame))
        cell_frames = []
        for c in range(cells_per_unit):
            cell_id = f"{site_id}-c{c}"
            cell = frame.copy()
            cell[counters] = frame[counters].to_numpy() * shares[:, [c]]
            cell.insert(1, SITE_ID, site_id)
            cell.insert(2, CELL_ID, cell_id)
            cell_frames.append(cell)
            unit_rows.append({CELL_ID: cell_id, UNIT_ID: unit_id})

        site_frame = pd.concat(cell_frames).sort_values([TIMESTAMP, CELL_ID], kind="stable")
        site_frame[TIMESTAMP] = site_frame[TIMESTAMP].dt.strftime("%Y-%m-%dT%H:%M:%S")
        path = directory / f"{site_id}.csv"
        site_frame.to_csv(path, index=False)
        written.append(path)

    pd.DataFrame(unit_rows).to_csv(directory / "unit_map.csv", index=False)
    logger.info(f"Wrote {n_sites} synthetic site file(s) to {directory}")
    return written
