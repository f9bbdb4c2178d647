"""Synthetic Opportunity-format dataset generator.

Produces a desk-scale stand-in for the real dataset so the full pipeline can
run in CI: each activity class is generated by a distinct signal regime
(its own gravity orientation per body location, oscillation amplitude,
dominant frequency, and noise level), laid out in bouts of 60-90 s. Files
follow the ingest conventions — whitespace-separated columns, column 1 =
time in ms, "NaN" missing markers, label codes in the last column — and a
matching ``catalog.yaml`` is written next to them so ``run()`` picks it up.

Everything is driven by ``np.random.default_rng((seed, subject, run))``:
a fixed seed reproduces the files byte-for-byte.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
import yaml

from har_pioneer.catalog import SensorCatalog, SensorLocation, catalog_to_dict
from har_pioneer.errors import ConfigurationError, DatasetError
from har_pioneer.labels import ActivityLabel, CLASS_ORDER, N_CLASSES

DEFAULT_SYNTH_RUNS: tuple[str, ...] = (
    "ADL1", "ADL2", "ADL3", "Drill", "ADL4", "ADL5",
)

# Locations covering every preset's sensor list; one accelerometer triad each.
SYNTH_LOCATION_IDS: tuple[str, ...] = (
    "RUA^", "LUA^", "RUA_", "LUA_", "R-SHOE", "L-SHOE", "RWR", "LWR",
    "HIP", "RLA", "LLA", "BACK", "RUA", "LUA",
)

_SYNTH_DESCRIPTIONS = {
    "RUA^": "right upper arm (top) accelerometer",
    "LUA^": "left upper arm (top) accelerometer",
    "RUA_": "right upper arm (bottom) accelerometer",
    "LUA_": "left upper arm (bottom) accelerometer",
    "R-SHOE": "right shoe sensor",
    "L-SHOE": "left shoe sensor",
    "RWR": "right wrist accelerometer",
    "LWR": "left wrist accelerometer",
    "HIP": "hip-worn accelerometer",
    "RLA": "right lower arm sensor",
    "LLA": "left lower arm sensor",
    "BACK": "back-mounted sensor",
    "RUA": "right upper arm sensor",
    "LUA": "left upper arm sensor",
}

_SYNTH_ALIASES = {
    "RUA^": ("right upper arm top",),
    "LUA^": ("left upper arm top",),
    "RUA_": ("right upper arm bottom",),
    "LUA_": ("left upper arm bottom",),
    "R-SHOE": ("right shoe", "right foot"),
    "L-SHOE": ("left shoe", "left foot"),
    "RWR": ("right wrist",),
    "LWR": ("left wrist",),
    "HIP": ("hip", "waist"),
    "RLA": ("right lower arm",),
    "LLA": ("left lower arm",),
    "BACK": ("back", "lower back"),
    "RUA": ("right upper arm",),
    "LUA": ("left upper arm",),
}

# Class index -> raw locomotion code written to the label column.
_CLASS_TO_CODE = {0: 1, 1: 4, 2: 2, 3: 5, 4: 0}

# Per-class regimes: oscillation amplitude, dominant frequency (Hz), noise sd.
_AMPLITUDE = np.array([0.3, 0.2, 2.5, 0.15, 4.0])
_FREQ_HZ = np.array([0.4, 0.25, 2.0, 0.5, 3.2])
_NOISE_SD = np.array([0.15, 0.1, 0.5, 0.08, 0.9])
_GRAVITY = 9.81
_GOLDEN_ANGLE = 2.399963229728653


def synth_catalog() -> SensorCatalog:
    """In-memory catalog describing the synthetic column layout."""
    locations = []
    for i, loc_id in enumerate(SYNTH_LOCATION_IDS):
        first = 2 + 3 * i
        locations.append(
            SensorLocation(
                id=loc_id,
                description=_SYNTH_DESCRIPTIONS[loc_id],
                aliases=_SYNTH_ALIASES[loc_id],
                channels={"acc": (first, first + 1, first + 2)},
            )
        )
    return SensorCatalog(
        locations=locations,
        locomotion_codes={
            code: CLASS_ORDER[cls]
            for cls, code in _CLASS_TO_CODE.items()
            if CLASS_ORDER[cls] is not ActivityLabel.Others
        },
        sample_rate_hz=30.0,
        time_column=1,
        label_column=2 + 3 * len(SYNTH_LOCATION_IDS),
        version=1,
        dataset="synthetic",
    )


def _class_gravity(class_index: int, location_index: int) -> np.ndarray:
    """Deterministic unit gravity direction per (class, location)."""
    theta = _GOLDEN_ANGLE * (class_index + 1) * (location_index + 1)
    phi = math.pi * (((class_index * 5 + location_index) % 7) + 1) / 8.0
    return _GRAVITY * np.array(
        [
            math.sin(phi) * math.cos(theta),
            math.sin(phi) * math.sin(theta),
            math.cos(phi),
        ]
    )


def _bout_labels(n: int, fs: float, rng: np.random.Generator) -> np.ndarray:
    """Per-sample class indices in 60-90 s bouts cycling a shuffled order."""
    order = rng.permutation(N_CLASSES)
    labels = np.empty(n, dtype=np.int64)
    pos = 0
    k = 0
    while pos < n:
        length = int(round(rng.uniform(60.0, 90.0) * fs))
        labels[pos : pos + length] = order[k % N_CLASSES]
        pos += length
        k += 1
    return labels


def _inject_nans(
    column: np.ndarray, nan_rate: float, rng: np.random.Generator
) -> None:
    """Mask missing runs in place; run lengths 1-4, mean 2.5."""
    if nan_rate <= 0:
        # keep the stream position aligned regardless of the rate
        rng.random(column.size)
        rng.integers(1, 5, size=column.size)
        return
    starts = rng.random(column.size) < nan_rate / 2.5
    lengths = rng.integers(1, 5, size=column.size)
    for i in np.flatnonzero(starts):
        column[i : i + lengths[i]] = np.nan


def _render_rows(
    times: np.ndarray, signals: np.ndarray, codes: np.ndarray
) -> str:
    cells = np.char.mod("%.6f", signals)
    cells[~np.isfinite(signals)] = "NaN"
    lines = [
        f"{int(t)} {' '.join(row)} {int(code)}"
        for t, row, code in zip(times, cells, codes)
    ]
    return "\n".join(lines) + "\n"


def synthesize_dataset(
    out_dir: str | Path,
    seed: int = 0,
    n_subjects: int = 2,
    duration_s: float = 600.0,
    nan_rate: float = 0.01,
    runs: tuple[str, ...] = DEFAULT_SYNTH_RUNS,
    sample_rate_hz: float = 30.0,
) -> list[Path]:
    """Write S<i>-<run>.dat files plus catalog.yaml; return the data paths."""
    if n_subjects < 1:
        raise ConfigurationError("n_subjects must be >= 1")
    if not runs:
        raise ConfigurationError("at least one run name is required")
    if not 0 <= nan_rate <= 0.5:
        raise ConfigurationError("nan_rate must be in [0, 0.5]")
    fs = float(sample_rate_hz)
    n = int(round(duration_s * fs))
    if n < 1:
        raise ConfigurationError("duration_s too short for one sample")

    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        probe = out_dir / ".write-probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise DatasetError(f"cannot write to {out_dir}: {exc}") from None

    catalog = synth_catalog()
    (out_dir / "catalog.yaml").write_text(
        yaml.safe_dump(catalog_to_dict(catalog), sort_keys=True)
    )

    n_locations = len(SYNTH_LOCATION_IDS)
    times = np.round(np.arange(n) * (1000.0 / fs)).astype(np.int64)
    paths: list[Path] = []
    for subject in range(1, n_subjects + 1):
        for run_index, run in enumerate(runs):
            rng = np.random.default_rng((seed, subject, run_index))
            class_idx = _bout_labels(n, fs, rng)
            codes = np.array([_CLASS_TO_CODE[c] for c in class_idx])
            signals = np.empty((n, 3 * n_locations))
            for li in range(n_locations):
                gravity = np.stack(
                    [_class_gravity(c, li) for c in range(N_CLASSES)]
                )  # (5, 3)
                per_sample_gravity = gravity[class_idx]  # (n, 3)
                amp = _AMPLITUDE[class_idx]
                freq = _FREQ_HZ[class_idx]
                noise_sd = _NOISE_SD[class_idx]
                t_seconds = np.arange(n) / fs
                for axis in range(3):
                    phase = rng.uniform(0.0, 2.0 * math.pi)
                    wave = amp * np.sin(
                        2.0 * math.pi * freq * t_seconds + phase
                    )
                    noise = rng.standard_normal(n) * noise_sd
                    signals[:, 3 * li + axis] = (
                        per_sample_gravity[:, axis] + wave + noise
                    )
            for col in range(3 * n_locations):
                _inject_nans(signals[:, col], nan_rate, rng)
            path = out_dir / f"S{subject}-{run}.dat"
            path.write_text(_render_rows(times, signals, codes))
            paths.append(path)
    return paths
