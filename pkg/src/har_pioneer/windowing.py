"""Sliding-window segmentation with majority-vote labels."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from har_pioneer.errors import EmptySegmentationError
from har_pioneer.ingest import Provenance, Recording
from har_pioneer.labels import CLASS_ORDER, N_CLASSES, ActivityLabel


@dataclass
class Window:
    """One fixed-length slice of a recording with a resolved label.

    Channel slices are views into the parent recording (same index range
    across all channels) and must not be written to.
    """

    start_index: int
    end_index: int
    channels: dict[str, dict[str, np.ndarray]]
    label_index: int
    provenance: Provenance

    @property
    def label(self) -> ActivityLabel:
        return CLASS_ORDER[self.label_index]

    def __len__(self) -> int:
        return self.end_index - self.start_index


def window_label(label_indices: np.ndarray) -> int:
    """Majority vote over a window's per-sample label indices.

    Ties prefer non-Others and then the earliest class in the fixed order;
    because Others is last, both rules reduce to "lowest index wins", which
    is what argmax over bincount returns.
    """
    labels = np.asarray(label_indices)
    if labels.size == 0:
        raise ValueError("window_label expects a non-empty slice")
    counts = np.bincount(labels, minlength=N_CLASSES)
    return int(np.argmax(counts))


def window_params(window_s: float, overlap_frac: float, sample_rate_hz: float) -> tuple[int, int]:
    """(window length, step) in samples for the given segmentation config."""
    if not 0 <= overlap_frac < 1:
        raise ValueError(f"overlap_frac must be in [0, 1), got {overlap_frac}")
    window_len = int(round(window_s * sample_rate_hz))
    if window_len < 2:
        raise ValueError(
            f"window of {window_s} s at {sample_rate_hz} Hz is {window_len} samples; need >= 2"
        )
    step = max(1, int(round(window_len * (1.0 - overlap_frac))))
    return window_len, step


def segment(rec: Recording, window_s: float, overlap_frac: float) -> list[Window]:
    """Split a recording into fixed-length windows.

    Windows start at 0, step, 2*step, ...; the trailing partial window is
    discarded. A recording shorter than one window is an error rather than
    an empty list so that misconfigured runs fail loudly.
    """
    window_len, step = window_params(window_s, overlap_frac, rec.sample_rate_hz)
    n = len(rec)
    if n < window_len:
        raise EmptySegmentationError(
            f"{rec.provenance.source_path}: recording has {n} samples, "
            f"shorter than one {window_len}-sample window"
        )
    windows = []
    for start in range(0, n - window_len + 1, step):
        end = start + window_len
        channels = {
            loc: {mod: triad[start:end] for mod, triad in groups.items()}
            for loc, groups in rec.channels.items()
        }
        windows.append(
            Window(
                start_index=start,
                end_index=end,
                channels=channels,
                label_index=window_label(rec.labels[start:end]),
                provenance=rec.provenance,
            )
        )
    return windows
