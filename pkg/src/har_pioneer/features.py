"""Window-level feature extraction.

Every feature is registered in :data:`FEATURES` with a kind that decides how
it maps onto a sensor triad:

* ``axis``      - computed independently per axis column (x, y, z),
* ``triad``     - one computation over the (N, 3) window,
* ``acc_triad`` - like ``triad`` but only meaningful for accelerometer
  groups (orientation angles), silently skipped for gyro / magnetometer.

Column naming is ``<location>.<modality>_<axis>.<feature>[.<part>]`` for axis
features (``HIP.acc_x.mean``, ``HIP.acc_y.fft_coeffs.2``) and
``<location>.<modality>.<feature>[.<part>]`` for triad features
(``HIP.acc.sma``, ``HIP.acc.axis_corr.xy``, ``HIP.acc.pitch_roll.pitch``).
The schema is a pure function of the feature specs and the channel layout,
so train/predict schema checks can be exact string comparisons.

Numeric conventions (pinned by the test-suite oracles):

* moments are population statistics (``ddof=0``);
* ``entropy`` is Shannon entropy over a 16-bin equal-width value histogram
  spanning [min, max], normalized by ``log2(bins)`` into [0, 1]; a constant
  window has entropy 0;
* ``zcr`` counts strict sign products ``x[i] * x[i+1] < 0`` over ``N - 1``
  adjacent pairs; ``mcr`` is the same after subtracting the window mean;
* ``fft_coeffs`` are the magnitudes of DFT bins 1..k (no normalization,
  i.e. ``|np.fft.rfft(x)[1:k+1]|``) and require ``N >= 2k + 2``;
* ``axis_corr`` is the population Pearson coefficient with the convention
  that a zero-variance axis yields correlation 0;
* ``pitch_roll`` uses the window-mean acceleration: pitch =
  ``atan2(-mx, sqrt(my^2 + mz^2))``, roll = ``atan2(my, mz)``, radians;
* ``jerk`` is ``mean(|diff(x)|) * fs``;
* ``peak_freq`` is ``m * fs / N`` for the largest-magnitude DFT bin m in
  1..floor(N/2), ties resolved to the lowest bin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from har_pioneer.catalog import AXES, SensorCatalog
from har_pioneer.errors import (
    AmbiguousNameError,
    ConfigurationError,
    FeatureComputationError,
    UnresolvedNameError,
    WindowTooShortError,
)
from har_pioneer.labels import CLASS_ORDER
from har_pioneer.naming import overlap_score, tokenize
from har_pioneer.windowing import Window


def _require(n: int, needed: int, what: str) -> None:
    if n < needed:
        raise WindowTooShortError(f"{what} needs at least {needed} samples, got {n}")


# ---------------------------------------------------------------------------
# Column-wise kernels. Each takes an (N, 3) array and returns (3,) or (3, m);
# the public single-series functions below are thin wrappers so there is only
# one implementation of every formula.
# ---------------------------------------------------------------------------


def _k_mean(a: np.ndarray, p: Mapping[str, int], fs: float) -> np.ndarray:
    return np.mean(a, axis=0)


def _k_std(a: np.ndarray, p: Mapping[str, int], fs: float) -> np.ndarray:
    return np.std(a, axis=0)


def _k_var(a: np.ndarray, p: Mapping[str, int], fs: float) -> np.ndarray:
    return np.var(a, axis=0)


def _k_min(a: np.ndarray, p: Mapping[str, int], fs: float) -> np.ndarray:
    return np.min(a, axis=0)


def _k_max(a: np.ndarray, p: Mapping[str, int], fs: float) -> np.ndarray:
    return np.max(a, axis=0)


def _k_energy(a: np.ndarray, p: Mapping[str, int], fs: float) -> np.ndarray:
    return np.mean(a * a, axis=0)


def _k_entropy(a: np.ndarray, p: Mapping[str, int], fs: float) -> np.ndarray:
    bins = int(p["bins"])
    out = np.zeros(a.shape[1])
    for j in range(a.shape[1]):
        col = a[:, j]
        lo, hi = float(np.min(col)), float(np.max(col))
        if lo == hi:
            continue
        counts, _ = np.histogram(col, bins=bins, range=(lo, hi))
        prob = counts[counts > 0] / col.size
        out[j] = float(-np.sum(prob * np.log2(prob)) / math.log2(bins))
    return out


def _k_zcr(a: np.ndarray, p: Mapping[str, int], fs: float) -> np.ndarray:
    crossings = np.count_nonzero(a[:-1] * a[1:] < 0, axis=0)
    return crossings / (a.shape[0] - 1)


def _k_mcr(a: np.ndarray, p: Mapping[str, int], fs: float) -> np.ndarray:
    return _k_zcr(a - np.mean(a, axis=0), p, fs)


def _k_fft(a: np.ndarray, p: Mapping[str, int], fs: float) -> np.ndarray:
    k = int(p["k"])
    return np.abs(np.fft.rfft(a, axis=0)[1 : k + 1]).T


def _k_jerk(a: np.ndarray, p: Mapping[str, int], fs: float) -> np.ndarray:
    return np.mean(np.abs(np.diff(a, axis=0)), axis=0) * fs


def _k_peak_freq(a: np.ndarray, p: Mapping[str, int], fs: float) -> np.ndarray:
    n = a.shape[0]
    mags = np.abs(np.fft.rfft(a, axis=0))
    half = mags[1 : n // 2 + 1]
    peak_bin = 1 + np.argmax(half, axis=0)
    return peak_bin * fs / n


def _k_sma(a: np.ndarray, p: Mapping[str, int], fs: float) -> np.ndarray:
    return np.array([float(np.mean(np.sum(np.abs(a), axis=1)))])


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    xd, yd = x - np.mean(x), y - np.mean(y)
    sx = math.sqrt(float(np.mean(xd * xd)))
    sy = math.sqrt(float(np.mean(yd * yd)))
    if sx == 0.0 or sy == 0.0:
        return 0.0
    r = float(np.mean(xd * yd)) / (sx * sy)
    return min(1.0, max(-1.0, r))


def _k_axis_corr(a: np.ndarray, p: Mapping[str, int], fs: float) -> np.ndarray:
    return np.array(
        [
            _pearson(a[:, 0], a[:, 1]),
            _pearson(a[:, 0], a[:, 2]),
            _pearson(a[:, 1], a[:, 2]),
        ]
    )


def _k_pitch_roll(a: np.ndarray, p: Mapping[str, int], fs: float) -> np.ndarray:
    mx, my, mz = (float(v) for v in np.mean(a, axis=0))
    pitch = math.atan2(-mx, math.sqrt(my * my + mz * mz))
    roll = math.atan2(my, mz)
    return np.array([pitch, roll])


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FeatureDef:
    """Registered feature: kernel, parameter spec, aliases for resolution."""

    name: str
    kind: str  # "axis" | "triad" | "acc_triad"
    description: str
    aliases: tuple[str, ...]
    compute: Callable[[np.ndarray, Mapping[str, int], float], np.ndarray] = field(
        hash=False
    )
    # param name -> (default, minimum allowed)
    param_spec: dict[str, tuple[int, int]] = field(default_factory=dict, hash=False)
    min_samples: Callable[[Mapping[str, int]], int] = field(
        default=lambda p: 1, hash=False
    )
    suffixes: Callable[[Mapping[str, int]], tuple[str, ...]] = field(
        default=lambda p: ("",), hash=False
    )


_SCALAR = lambda p: ("",)  # noqa: E731

FEATURES: dict[str, FeatureDef] = {
    d.name: d
    for d in [
        FeatureDef(
            "mean", "axis", "arithmetic mean of the axis signal",
            ("average", "mean value"), _k_mean,
        ),
        FeatureDef(
            "std", "axis", "population standard deviation of the axis signal",
            ("standard deviation", "stdev"), _k_std,
        ),
        FeatureDef(
            "var", "axis", "population variance of the axis signal",
            ("variance",), _k_var,
        ),
        FeatureDef(
            "min", "axis", "minimum sample value in the window",
            ("minimum",), _k_min,
        ),
        FeatureDef(
            "max", "axis", "maximum sample value in the window",
            ("maximum",), _k_max,
        ),
        FeatureDef(
            "sma", "triad",
            "signal magnitude area: mean of |x| + |y| + |z| over the window",
            ("signal magnitude area",), _k_sma,
        ),
        FeatureDef(
            "energy", "axis", "mean squared sample value of the axis signal",
            ("signal energy",), _k_energy,
        ),
        FeatureDef(
            "entropy", "axis",
            "normalized Shannon entropy of a 16-bin value histogram",
            ("signal entropy", "histogram entropy"), _k_entropy,
            param_spec={"bins": (16, 2)},
        ),
        FeatureDef(
            "zcr", "axis", "fraction of adjacent sample pairs crossing zero",
            ("zero crossing rate", "zero crossings"), _k_zcr,
            min_samples=lambda p: 2,
        ),
        FeatureDef(
            "mcr", "axis",
            "fraction of adjacent pairs crossing the window mean",
            ("mean crossing rate", "mean crossings"), _k_mcr,
            min_samples=lambda p: 2,
        ),
        FeatureDef(
            "fft_coeffs", "axis",
            "magnitudes of the first k non-DC Fourier coefficients",
            ("fft coefficients", "fourier coefficients", "fft"), _k_fft,
            param_spec={"k": (5, 1)},
            min_samples=lambda p: 2 * int(p["k"]) + 2,
            suffixes=lambda p: tuple(str(i) for i in range(1, int(p["k"]) + 1)),
        ),
        FeatureDef(
            "axis_corr", "triad",
            "pairwise Pearson correlation between the three axes",
            ("correlation between axes", "axis correlation",
             "inter-axis correlation", "correlation of axes"), _k_axis_corr,
            suffixes=lambda p: ("xy", "xz", "yz"),
        ),
        FeatureDef(
            "pitch_roll", "acc_triad",
            "pitch and roll angles from the window-mean gravity direction",
            ("pitch and roll", "pitch", "roll", "orientation angles",
             "tilt angles"), _k_pitch_roll,
            suffixes=lambda p: ("pitch", "roll"),
        ),
        FeatureDef(
            "jerk", "axis",
            "mean absolute first difference scaled by the sample rate",
            ("jerk magnitude", "mean jerk"), _k_jerk,
            min_samples=lambda p: 2,
        ),
        FeatureDef(
            "peak_freq", "axis",
            "frequency of the largest-magnitude DFT bin, in Hz",
            ("peak frequency", "dominant frequency"), _k_peak_freq,
            min_samples=lambda p: 2,
        ),
    ]
}

BASELINE_FEATURE_NAMES: tuple[str, ...] = ("mean", "std", "var", "min", "max")
ALL_FEATURE_NAMES: tuple[str, ...] = tuple(FEATURES)


# ---------------------------------------------------------------------------
# Specs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FeatureSpec:
    """A feature name plus its parameters (defaults filled at canonicalize)."""

    name: str
    params: dict[str, int] = field(default_factory=dict, hash=False)

    def to_dict(self) -> dict:
        out: dict = {"name": self.name}
        if self.params:
            out["params"] = dict(sorted(self.params.items()))
        return out

    @classmethod
    def from_dict(cls, raw: Mapping) -> "FeatureSpec":
        return cls(name=str(raw["name"]), params=dict(raw.get("params", {})))


def canonical_spec(spec: FeatureSpec | str) -> FeatureSpec:
    """Validate a spec against the registry and fill parameter defaults."""
    if isinstance(spec, str):
        spec = FeatureSpec(spec)
    definition = FEATURES.get(spec.name)
    if definition is None:
        raise ConfigurationError(
            f"unknown feature {spec.name!r}; known features: "
            + ", ".join(FEATURES)
        )
    params: dict[str, int] = {}
    for key, value in spec.params.items():
        if key not in definition.param_spec:
            raise ConfigurationError(
                f"feature {spec.name!r} does not take a parameter {key!r}"
            )
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigurationError(
                f"parameter {key!r} of feature {spec.name!r} must be an integer"
            )
        params[key] = value
    for key, (default, minimum) in definition.param_spec.items():
        params.setdefault(key, default)
        if params[key] < minimum:
            raise ConfigurationError(
                f"parameter {key!r} of feature {spec.name!r} must be >= {minimum}"
            )
    return FeatureSpec(spec.name, params)


def canonical_specs(specs: Iterable[FeatureSpec | str]) -> tuple[FeatureSpec, ...]:
    canon = tuple(canonical_spec(s) for s in specs)
    seen: set[str] = set()
    for s in canon:
        if s.name in seen:
            raise ConfigurationError(f"duplicate feature spec {s.name!r}")
        seen.add(s.name)
    return canon


def default_specs(names: Iterable[str]) -> tuple[FeatureSpec, ...]:
    return canonical_specs(names)


def resolve_feature(
    name_or_alias: str, registry: Mapping[str, FeatureDef] | None = None
) -> FeatureDef:
    """Resolve a free-form feature name to a registry entry.

    Matching order mirrors the sensor catalog: exact name, exact alias,
    a registry name appearing as a word of the query, then the longest
    token-level alias overlap. Ties raise AmbiguousNameError, no match
    raises UnresolvedNameError.
    """
    registry = FEATURES if registry is None else registry
    query = name_or_alias.strip().lower()
    if not query:
        raise UnresolvedNameError(name_or_alias)
    if query in registry:
        return registry[query]

    tokens = tokenize(name_or_alias)
    norm = " ".join(tokens)
    exact = [d for d in registry.values() if norm in d.aliases or norm == d.name]
    if len(exact) == 1:
        return exact[0]
    if len(exact) > 1:
        raise AmbiguousNameError(name_or_alias, [d.name for d in exact])

    name_hits = sorted({t for t in tokens if t in registry})
    if len(name_hits) == 1:
        return registry[name_hits[0]]
    if len(name_hits) > 1:
        raise AmbiguousNameError(name_or_alias, name_hits)

    best_score = 0
    best: list[FeatureDef] = []
    for definition in registry.values():
        score = 0
        for alias in definition.aliases:
            score = max(score, overlap_score(tokens, tokenize(alias)))
        if score > best_score:
            best_score, best = score, [definition]
        elif score == best_score and score > 0 and definition not in best:
            best.append(definition)
    if not best:
        raise UnresolvedNameError(name_or_alias)
    if len(best) > 1:
        raise AmbiguousNameError(name_or_alias, [d.name for d in best])
    return best[0]


# ---------------------------------------------------------------------------
# Public single-series functions (same kernels, convenience signatures)
# ---------------------------------------------------------------------------


def _as_series(x, what: str, min_len: int = 1) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise ConfigurationError(f"{what} expects a 1-D series")
    _require(arr.size, min_len, what)
    return arr


def _as_triad(a, what: str, min_len: int = 1) -> np.ndarray:
    arr = np.asarray(a, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ConfigurationError(f"{what} expects an (N, 3) array")
    _require(arr.shape[0], min_len, what)
    return arr


def basic_stats(x) -> dict[str, float]:
    """Mean, population std/var, min and max of a series."""
    arr = _as_series(x, "basic_stats")
    col = arr[:, None]
    return {
        "mean": float(_k_mean(col, {}, 0.0)[0]),
        "std": float(_k_std(col, {}, 0.0)[0]),
        "var": float(_k_var(col, {}, 0.0)[0]),
        "min": float(_k_min(col, {}, 0.0)[0]),
        "max": float(_k_max(col, {}, 0.0)[0]),
    }


def signal_magnitude_area(xyz) -> float:
    arr = _as_triad(xyz, "sma")
    return float(_k_sma(arr, {}, 0.0)[0])


def signal_energy(x) -> float:
    arr = _as_series(x, "energy")
    return float(_k_energy(arr[:, None], {}, 0.0)[0])


def histogram_entropy(x, bins: int = 16) -> float:
    spec = canonical_spec(FeatureSpec("entropy", {"bins": bins}))
    arr = _as_series(x, "entropy")
    return float(_k_entropy(arr[:, None], spec.params, 0.0)[0])


def zero_crossing_rate(x) -> float:
    arr = _as_series(x, "zcr", min_len=2)
    return float(_k_zcr(arr[:, None], {}, 0.0)[0])


def mean_crossing_rate(x) -> float:
    arr = _as_series(x, "mcr", min_len=2)
    return float(_k_mcr(arr[:, None], {}, 0.0)[0])


def fft_coefficients(x, k: int = 5) -> np.ndarray:
    spec = canonical_spec(FeatureSpec("fft_coeffs", {"k": k}))
    arr = _as_series(x, f"fft_coeffs(k={k})", min_len=2 * k + 2)
    return _k_fft(arr[:, None], spec.params, 0.0)[0]


def axis_correlation(x, y) -> float:
    xa = _as_series(x, "axis_corr")
    ya = _as_series(y, "axis_corr")
    if xa.size != ya.size:
        raise ConfigurationError("axis_corr expects series of equal length")
    return _pearson(xa, ya)


def pitch_and_roll(xyz) -> tuple[float, float]:
    arr = _as_triad(xyz, "pitch_roll")
    pitch, roll = _k_pitch_roll(arr, {}, 0.0)
    return float(pitch), float(roll)


def mean_jerk(x, sample_rate_hz: float) -> float:
    arr = _as_series(x, "jerk", min_len=2)
    return float(_k_jerk(arr[:, None], {}, float(sample_rate_hz))[0])


def peak_frequency(x, sample_rate_hz: float) -> float:
    arr = _as_series(x, "peak_freq", min_len=2)
    return float(_k_peak_freq(arr[:, None], {}, float(sample_rate_hz))[0])


# ---------------------------------------------------------------------------
# Schema and window featurization
# ---------------------------------------------------------------------------

Layout = tuple[tuple[str, str], ...]  # ((location_id, modality), ...)


def layout_for_selection(catalog: SensorCatalog, selection: Sequence[str]) -> Layout:
    """(location, modality) pairs in selection order, catalog modality order."""
    if not selection:
        raise ConfigurationError("sensor selection is empty")
    pairs: list[tuple[str, str]] = []
    for loc_id in selection:
        loc = catalog.get(loc_id)
        pairs.extend((loc.id, modality) for modality in loc.modalities)
    return tuple(pairs)


def layout_from_window(window: Window) -> Layout:
    return tuple(
        (loc, modality)
        for loc, groups in window.channels.items()
        for modality in groups
    )


def _spec_columns(spec: FeatureSpec, prefix: str) -> list[str]:
    definition = FEATURES[spec.name]
    return [
        f"{prefix}.{spec.name}" + (f".{suffix}" if suffix else "")
        for suffix in definition.suffixes(spec.params)
    ]


def feature_schema(
    specs: Sequence[FeatureSpec | str], layout: Layout
) -> tuple[str, ...]:
    """Ordered feature column names for the given specs and channel layout."""
    canon = canonical_specs(specs)
    if not layout:
        raise ConfigurationError("channel layout is empty")
    axis_specs = [s for s in canon if FEATURES[s.name].kind == "axis"]
    triad_specs = [s for s in canon if FEATURES[s.name].kind != "axis"]
    names: list[str] = []
    for loc, modality in layout:
        for axis in AXES:
            for spec in axis_specs:
                names.extend(_spec_columns(spec, f"{loc}.{modality}_{axis}"))
        for spec in triad_specs:
            if FEATURES[spec.name].kind == "acc_triad" and "acc" not in modality:
                continue
            names.extend(_spec_columns(spec, f"{loc}.{modality}"))
    return tuple(names)


@dataclass(frozen=True)
class FeatureVector:
    """Feature values for one window, aligned with ``names``."""

    names: tuple[str, ...]
    values: np.ndarray = field(hash=False)
    label_index: int

    def __post_init__(self):
        if len(self.names) != self.values.size:
            raise ConfigurationError(
                f"{len(self.names)} column names for {self.values.size} values"
            )

    def as_dict(self) -> dict[str, float]:
        return {n: float(v) for n, v in zip(self.names, self.values)}


def featurize_window(
    window: Window,
    specs: Sequence[FeatureSpec | str],
    sample_rate_hz: float,
) -> FeatureVector:
    """Compute all feature columns for one window.

    Raises WindowTooShortError naming the offending group when the window
    has fewer samples than some extractor needs, and
    FeatureComputationError if any resulting value is non-finite.
    """
    canon = canonical_specs(specs)
    layout = layout_from_window(window)
    names = feature_schema(canon, layout)
    fs = float(sample_rate_hz)
    axis_specs = [s for s in canon if FEATURES[s.name].kind == "axis"]
    triad_specs = [s for s in canon if FEATURES[s.name].kind != "axis"]

    chunks: list[np.ndarray] = []
    for loc, modality in layout:
        arr = np.asarray(window.channels[loc][modality], dtype=float)
        n = arr.shape[0]
        per_spec: dict[str, np.ndarray] = {}
        for spec in axis_specs:
            definition = FEATURES[spec.name]
            needed = definition.min_samples(spec.params)
            if n < needed:
                raise WindowTooShortError(
                    f"{loc}.{modality}: {spec.name} needs at least {needed} "
                    f"samples, got {n}"
                )
            result = definition.compute(arr, spec.params, fs)
            per_spec[spec.name] = result.reshape(3, -1)
        for axis_index in range(len(AXES)):
            for spec in axis_specs:
                chunks.append(per_spec[spec.name][axis_index])
        for spec in triad_specs:
            definition = FEATURES[spec.name]
            if definition.kind == "acc_triad" and "acc" not in modality:
                continue
            _require(n, definition.min_samples(spec.params), f"{loc}.{modality}.{spec.name}")
            chunks.append(np.atleast_1d(definition.compute(arr, spec.params, fs)))

    values = (
        np.concatenate(chunks).astype(float) if chunks else np.zeros(0)
    )
    if not np.all(np.isfinite(values)):
        bad = [names[i] for i in np.flatnonzero(~np.isfinite(values))[:5]]
        raise FeatureComputationError(
            f"non-finite feature values in columns {bad} "
            f"({window.provenance.subject}/{window.provenance.run})"
        )
    return FeatureVector(names=names, values=values, label_index=window.label_index)


@dataclass
class FeatureMatrix:
    """Stacked feature vectors plus window labels."""

    column_names: tuple[str, ...]
    X: np.ndarray
    y: np.ndarray

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    @property
    def n_columns(self) -> int:
        return self.X.shape[1]


def featurize_windows(
    windows: Sequence[Window],
    specs: Sequence[FeatureSpec | str],
    sample_rate_hz: float,
) -> FeatureMatrix:
    """Featurize every window into one matrix (rows in window order)."""
    if not windows:
        raise ConfigurationError("no windows to featurize")
    vectors = [featurize_window(w, specs, sample_rate_hz) for w in windows]
    names = vectors[0].names
    for vec in vectors[1:]:
        if vec.names != names:
            raise ConfigurationError(
                "windows do not share a channel layout; cannot stack features"
            )
    X = np.stack([vec.values for vec in vectors])
    y = np.array([vec.label_index for vec in vectors], dtype=np.int8)
    return FeatureMatrix(column_names=names, X=X, y=y)


def write_features_csv(path: str | Path, matrix: FeatureMatrix) -> None:
    """Write a feature matrix as CSV with a trailing human-readable label."""
    path = Path(path)
    lines = [",".join(matrix.column_names + ("label",))]
    for row, label_index in zip(matrix.X, matrix.y):
        cells = [repr(float(v)) for v in row]
        cells.append(CLASS_ORDER[int(label_index)].value)
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n")
