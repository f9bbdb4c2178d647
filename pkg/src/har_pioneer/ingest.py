"""Loading Opportunity-format recordings.

Files are whitespace-separated numeric columns, one row per sample, with
missing values spelled ``NaN``. Column 1 is time in milliseconds; sensor
columns and the locomotion label column come from the catalog.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from har_pioneer.catalog import SensorCatalog
from har_pioneer.errors import ConfigurationError, ParseError
from har_pioneer.labels import ActivityLabel, class_index


@dataclass(frozen=True)
class Provenance:
    subject: str
    run: str
    source_path: str


@dataclass
class Recording:
    """One loaded file: imputed channels, per-sample label indices.

    ``channels`` maps location id -> modality group -> float array of shape
    (n_samples, 3). ``labels`` holds indices into the fixed class order.
    A Recording is never mutated after construction.
    """

    sample_rate_hz: float
    timestamps: np.ndarray
    channels: dict[str, dict[str, np.ndarray]]
    labels: np.ndarray
    provenance: Provenance

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def location_ids(self) -> list[str]:
        return list(self.channels)

    def label_values(self) -> list[ActivityLabel]:
        from har_pioneer.labels import CLASS_ORDER

        return [CLASS_ORDER[i] for i in self.labels]


def impute_missing(series: np.ndarray) -> np.ndarray:
    """Fill NaN runs with the mean of the nearest valid neighbors.

    Every sample in a maximal missing run gets the single value
    (prev_valid + next_valid) / 2; a leading run copies the first valid
    value, a trailing run the last one, and an all-missing series becomes
    zeros. Valid samples are preserved bit-exactly.
    """
    x = np.asarray(series, dtype=float)
    if x.ndim != 1:
        raise ValueError("impute_missing expects a 1-D series")
    if x.size == 0:
        raise ValueError("impute_missing expects a non-empty series")
    out = x.copy()
    missing = np.isnan(out)
    if not missing.any():
        return out
    valid_idx = np.flatnonzero(~missing)
    if valid_idx.size == 0:
        return np.zeros_like(out)

    # Maximal missing runs: starts where missing begins, ends where it stops.
    edges = np.diff(missing.astype(np.int8))
    starts = np.flatnonzero(edges == 1) + 1
    ends = np.flatnonzero(edges == -1) + 1
    if missing[0]:
        starts = np.concatenate(([0], starts))
    if missing[-1]:
        ends = np.concatenate((ends, [out.size]))
    for start, end in zip(starts, ends):
        prev_val = out[start - 1] if start > 0 else None
        next_val = out[end] if end < out.size else None
        if prev_val is None:
            fill = next_val
        elif next_val is None:
            fill = prev_val
        else:
            fill = (prev_val + next_val) / 2.0
        out[start:end] = fill
    return out


def map_locomotion_label(raw_code: int, catalog: SensorCatalog) -> ActivityLabel:
    """Class for a raw locomotion code; 0 and unknown codes are Others."""
    return catalog.map_locomotion_label(raw_code)


_FILENAME_RE = re.compile(r"^(?P<subject>[^-]+)-(?P<run>.+)$")


def provenance_from_path(path: Path) -> Provenance:
    """Subject and run parsed from names like ``S1-ADL4.dat``."""
    m = _FILENAME_RE.match(path.stem)
    if m:
        return Provenance(m.group("subject"), m.group("run"), str(path))
    return Provenance(path.stem, path.stem, str(path))


def _read_matrix(path: Path) -> np.ndarray:
    try:
        data = np.loadtxt(path, dtype=float, ndmin=2)
    except FileNotFoundError:
        raise ParseError(f"{path}: file not found") from None
    except ValueError as exc:
        # numpy reports 0-based rows; surface 1-based line numbers.
        msg = str(exc)
        m = re.search(r"at row (\d+)", msg)
        if m:
            msg += f" (line {int(m.group(1)) + 1})"
        raise ParseError(f"{path}: {msg}") from None
    if data.size == 0:
        raise ParseError(f"{path}: empty file")
    return data


def load_recording(
    path: str | Path,
    selection: list[str],
    catalog: SensorCatalog,
) -> Recording:
    """Load one file, keeping only the selected locations' channels.

    Missing samples are imputed per channel column before the Recording is
    returned; labels come from the catalog's locomotion column and code
    table.
    """
    path = Path(path)
    if not selection:
        raise ConfigurationError("empty sensor selection")
    locations = [catalog.get(loc_id) for loc_id in selection]

    data = _read_matrix(path)
    n_cols = data.shape[1]
    needed = max(
        [catalog.time_column, catalog.label_column]
        + [c for loc in locations for c in loc.all_columns]
    )
    if n_cols < needed:
        raise ParseError(
            f"{path}: file has {n_cols} columns but the catalog needs column {needed}"
        )

    timestamps = data[:, catalog.time_column - 1]

    raw_labels = data[:, catalog.label_column - 1]
    raw_labels = np.where(np.isfinite(raw_labels), raw_labels, 0).astype(np.int64)
    labels = np.fromiter(
        (class_index(catalog.map_locomotion_label(code)) for code in raw_labels),
        dtype=np.int8,
        count=raw_labels.size,
    )

    channels: dict[str, dict[str, np.ndarray]] = {}
    for loc in locations:
        groups: dict[str, np.ndarray] = {}
        for modality, cols in loc.channels.items():
            triad = np.column_stack(
                [impute_missing(data[:, c - 1]) for c in cols]
            )
            groups[modality] = triad
        channels[loc.id] = groups

    return Recording(
        sample_rate_hz=catalog.sample_rate_hz,
        timestamps=timestamps,
        channels=channels,
        labels=labels,
        provenance=provenance_from_path(path),
    )


def discover_recordings(root: str | Path, pattern: str = "*.dat") -> list[Path]:
    """Dataset files under a root directory, sorted for determinism."""
    root = Path(root)
    if not root.is_dir():
        raise ConfigurationError(f"dataset root is not a directory: {root}")
    return sorted(root.rglob(pattern))
