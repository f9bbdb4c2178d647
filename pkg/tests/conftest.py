"""Shared fixtures: the shipped catalog and a small synthetic dataset."""

from __future__ import annotations

import pytest

from har_pioneer.catalog import load_catalog
from har_pioneer.synth import synthesize_dataset


@pytest.fixture(scope="session")
def catalog():
    return load_catalog()


@pytest.fixture(scope="session")
def synth_root(tmp_path_factory):
    """One-subject synthetic dataset: ADL1/Drill for training, ADL4 for test."""
    root = tmp_path_factory.mktemp("synth-data")
    synthesize_dataset(
        root, seed=11, n_subjects=1, duration_s=600.0, runs=("ADL1", "Drill", "ADL4")
    )
    return root


@pytest.fixture(scope="session")
def synth_catalog(synth_root):
    return load_catalog(synth_root / "catalog.yaml")
