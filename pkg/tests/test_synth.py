"""Synthetic dataset generator tests: format, determinism, NaN injection."""

from __future__ import annotations

import numpy as np
import pytest

from har_pioneer.catalog import load_catalog
from har_pioneer.errors import ConfigurationError, DatasetError
from har_pioneer.ingest import load_recording
from har_pioneer.labels import ActivityLabel
from har_pioneer.synth import (
    DEFAULT_SYNTH_RUNS,
    SYNTH_LOCATION_IDS,
    synth_catalog,
    synthesize_dataset,
)


def read_raw(path):
    """Raw text of a .dat file as a list of token rows (NaN kept as text)."""
    return [line.split() for line in path.read_text().splitlines()]


def test_default_runs_cover_the_protocol():
    assert DEFAULT_SYNTH_RUNS == ("ADL1", "ADL2", "ADL3", "Drill", "ADL4", "ADL5")


def test_catalog_covers_every_preset_location():
    cat = synth_catalog()
    assert set(cat.location_ids) == set(SYNTH_LOCATION_IDS)
    assert len(cat.location_ids) == 14
    # Label codes present and complete.
    assert cat.map_locomotion_label(1) is ActivityLabel.Stand
    assert cat.map_locomotion_label(0) is ActivityLabel.Others


def test_file_shape_and_naming(tmp_path):
    paths = synthesize_dataset(
        tmp_path, seed=0, n_subjects=2, duration_s=60.0, runs=("ADL1", "ADL4")
    )
    assert [p.name for p in paths] == [
        "S1-ADL1.dat",
        "S1-ADL4.dat",
        "S2-ADL1.dat",
        "S2-ADL4.dat",
    ]
    rows = read_raw(paths[0])
    assert len(rows) == 1800  # 60 s at 30 Hz
    # 1 time col + 14 locations x 3 axes + 1 label col.
    assert all(len(r) == 44 for r in rows)
    assert (tmp_path / "catalog.yaml").exists()


def test_timestamps_are_millisecond_ticks(tmp_path):
    paths = synthesize_dataset(
        tmp_path, seed=0, n_subjects=1, duration_s=10.0, runs=("ADL1",)
    )
    rows = read_raw(paths[0])
    times = [float(r[0]) for r in rows]
    assert times[0] == 0.0
    deltas = np.diff(times)
    assert set(np.unique(deltas)) <= {33.0, 34.0}  # 30 Hz in integer ms


def test_generation_is_deterministic(tmp_path):
    a = synthesize_dataset(
        tmp_path / "a", seed=5, n_subjects=1, duration_s=30.0, runs=("ADL1",)
    )
    b = synthesize_dataset(
        tmp_path / "b", seed=5, n_subjects=1, duration_s=30.0, runs=("ADL1",)
    )
    assert a[0].read_bytes() == b[0].read_bytes()
    c = synthesize_dataset(
        tmp_path / "c", seed=6, n_subjects=1, duration_s=30.0, runs=("ADL1",)
    )
    assert a[0].read_bytes() != c[0].read_bytes()


def test_nan_rate_is_respected(tmp_path):
    paths = synthesize_dataset(
        tmp_path, seed=1, n_subjects=1, duration_s=300.0, nan_rate=0.02,
        runs=("ADL1",),
    )
    rows = read_raw(paths[0])
    sensor_cells = [cell for row in rows for cell in row[1:-1]]
    frac = sum(1 for cell in sensor_cells if cell == "NaN") / len(sensor_cells)
    assert frac == pytest.approx(0.02, abs=0.005)
    # Time and label columns never go missing.
    assert all(row[0] != "NaN" and row[-1] != "NaN" for row in rows)


def test_zero_nan_rate_writes_no_nans(tmp_path):
    paths = synthesize_dataset(
        tmp_path, seed=1, n_subjects=1, duration_s=30.0, nan_rate=0.0,
        runs=("ADL1",),
    )
    assert "NaN" not in paths[0].read_text()


def test_all_five_classes_appear_over_ten_minutes(tmp_path):
    synthesize_dataset(tmp_path, seed=2, n_subjects=1, duration_s=600.0, runs=("ADL1",))
    cat = load_catalog(tmp_path / "catalog.yaml")
    rec = load_recording(tmp_path / "S1-ADL1.dat", ["HIP"], cat)
    assert set(np.unique(rec.labels)) == {0, 1, 2, 3, 4}


def test_loadable_via_standard_ingest(tmp_path):
    synthesize_dataset(tmp_path, seed=3, n_subjects=1, duration_s=30.0, runs=("ADL1",))
    cat = load_catalog(tmp_path / "catalog.yaml")
    rec = load_recording(
        tmp_path / "S1-ADL1.dat", list(cat.location_ids), cat
    )
    assert len(rec) == 900
    for loc in cat.location_ids:
        triad = rec.channels[loc]["acc"]
        assert triad.shape == (900, 3)
        assert np.isfinite(triad).all()


def test_validation_errors(tmp_path):
    with pytest.raises(ConfigurationError):
        synthesize_dataset(tmp_path, n_subjects=0)
    with pytest.raises(ConfigurationError):
        synthesize_dataset(tmp_path, duration_s=0.0)
    with pytest.raises(ConfigurationError):
        synthesize_dataset(tmp_path, nan_rate=0.9)
    with pytest.raises(ConfigurationError):
        synthesize_dataset(tmp_path, runs=())
    blocked = tmp_path / "file"
    blocked.write_text("x")
    with pytest.raises(DatasetError):
        synthesize_dataset(blocked / "sub")
