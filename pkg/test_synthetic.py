#!/usr/bin/env python3
"""
Synthetic generator tests: seeded determinism, the known R2 ceiling and the
raw per-site CSV layout.
"""

import sys
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

# Add the project root to the path
sys.path.insert(0, str(Path(__file__).parent))

from data.ingest import load_site_directory
from data.synthetic import (
    DEFAULT_NOISE_VARIANCE,
    SyntheticError,
    SyntheticProfile,
    feature_names,
    generate_series,
    synth_generate,
    synth_sites,
)


def test_same_seed_same_series():
    a, signal_a = generate_series(SyntheticProfile(rows=300, seed=5))
    b, signal_b = generate_series(SyntheticProfile(rows=300, seed=5))
    pd.testing.assert_frame_equal(a, b)
    np.testing.assert_array_equal(signal_a, signal_b)

    c, _ = generate_series(SyntheticProfile(rows=300, seed=6))
    assert not np.allclose(a["energy"], c["energy"])


def test_signal_is_standardized():
    _, signal = generate_series(SyntheticProfile(rows=1000))
    assert signal.mean() == pytest.approx(0.0, abs=1e-12)
    assert signal.std() == pytest.approx(1.0)


def test_energy_explained_by_signal_matches_the_ceiling():
    profile = SyntheticProfile(rows=4000, seed=2)
    frame, signal = generate_series(profile)
    explained = np.corrcoef(frame["energy"].to_numpy(), signal)[0, 1] ** 2
    assert profile.ceiling_r2 == pytest.approx(1.0 / (1.0 + DEFAULT_NOISE_VARIANCE))
    assert explained == pytest.approx(profile.ceiling_r2, abs=0.03)


def test_noiseless_profile_is_perfectly_explained():
    frame, signal = generate_series(SyntheticProfile(rows=500, noise_variance=0.0))
    np.testing.assert_allclose(frame["energy"].to_numpy(), 1000.0 + 100.0 * signal)


def test_series_layout():
    frame, _ = generate_series(SyntheticProfile(rows=200, n_features=11))
    assert list(frame.columns) == ["timestamp"] + feature_names(11) + ["energy"]
    assert feature_names(11)[-2:] == ["counter_9", "counter_10"]
    steps = np.diff(frame["timestamp"].to_numpy()).astype("timedelta64[m]").astype(int)
    assert set(steps) == {15}


def test_synth_generate_packages_a_split_dataset():
    dataset = synth_generate(SyntheticProfile(rows=400, seed=1))
    assert dataset.n_rows == 400
    assert dataset.n_features == 6
    assert len(dataset.train_idx) == 260 and len(dataset.test_idx) == 120
    assert dataset.meta["source"] == "synthetic"
    assert dataset.meta["ceiling_r2"] == pytest.approx(SyntheticProfile().ceiling_r2)
    assert dataset.meta["profile"]["seed"] == 1

    again = synth_generate(SyntheticProfile(rows=400, seed=1))
    np.testing.assert_array_equal(dataset.features, again.features)
    np.testing.assert_array_equal(dataset.target, again.target)


@pytest.mark.parametrize("field,value", [("rows", 95), ("n_features", 0), ("noise_variance", -0.1)])
def test_invalid_profiles(field, value):
    with pytest.raises(SyntheticError):
        generate_series(SyntheticProfile(**{field: value}))


def test_synth_sites_writes_raw_cell_files(tmp_path):
    paths = synth_sites(tmp_path, n_sites=3, cells_per_unit=2, rows=120, seed=4, missing_rate=0.0)
    assert [p.name for p in paths] == ["site000.csv", "site001.csv", "site002.csv"]

    unit_map = pd.read_csv(tmp_path / "unit_map.csv")
    assert len(unit_map) == 6
    assert set(unit_map["unit_id"]) == {"site000-ru0", "site001-ru0", "site002-ru0"}

    raw = pd.read_csv(paths[0])
    assert len(raw) == 120 * 2
    assert set(raw["cell_id"]) == {"site000-c0", "site000-c1"}

    sites = load_site_directory(tmp_path)
    assert sorted(sites) == ["site000", "site001", "site002"]
    assert set(sites["site001"]["unit_id"]) == {"site001-ru0"}


def test_synth_sites_needs_one_drift_level_per_site(tmp_path):
    with pytest.raises(SyntheticError):
        synth_sites(tmp_path, n_sites=3, rows=120, drift_levels=[0.0, 1.0])
