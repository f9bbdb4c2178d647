"""Experiment orchestration: presets, end-to-end runs, and results storage.

An ExperimentConfig pins everything a run depends on — dataset root, sensor
selection, feature specs, windowing, split protocol, classifier
hyperparameters, and seed — and serializes to canonical JSON whose SHA-256
is the config fingerprint. ``run()`` is deterministic given (config, dataset
bytes); reports are stored as fingerprint-named JSON files plus an index,
written atomically addressing concurrent runs.

The six presets (a)-(f) pair the published sensor lists with the baseline
five features or the full fifteen-feature set. The published reference
accuracies/F1 scores are kept in REFERENCE_RESULTS for the reproduction
report, which compares a run of all presets against them (soft check: the
reference pipeline's classifier and split protocol are not public, so
deviations are flagged, never failed).
"""

from __future__ import annotations

import fnmatch
import hashlib
import json
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from har_pioneer.catalog import SensorCatalog, load_catalog
from har_pioneer.errors import (
    ConfigurationError,
    DatasetError,
    HarPioneerError,
)
from har_pioneer.features import (
    ALL_FEATURE_NAMES,
    BASELINE_FEATURE_NAMES,
    FeatureMatrix,
    FeatureSpec,
    canonical_specs,
    featurize_windows,
)
from har_pioneer.ingest import (
    discover_recordings,
    load_recording,
    provenance_from_path,
)
from har_pioneer.labels import CLASS_ORDER, N_CLASSES, ActivityLabel
from har_pioneer.model import (
    DEFAULT_TEST_RUNS,
    DEFAULT_TRAIN_RUNS,
    EvaluationReport,
    ForestHyperparams,
    evaluate,
    predict,
    split_train_test,
    train_forest,
)
from har_pioneer.pioneer import PromptContext, SuggestionSet, build_context
from har_pioneer.synth import synthesize_dataset  # re-export  # noqa: F401
from har_pioneer.windowing import segment

BASELINE_SENSORS: tuple[str, ...] = ("RUA^", "LUA^", "RUA_", "LUA_")
SENSOR_SET_A: tuple[str, ...] = (
    "R-SHOE", "L-SHOE", "RWR", "LWR", "RUA_", "RUA^", "LUA_", "LUA^", "HIP",
)
SENSOR_SET_B: tuple[str, ...] = (
    "R-SHOE", "L-SHOE", "RLA", "LLA", "BACK", "RUA", "LUA", "RWR", "LWR", "HIP",
)

# preset id -> (sensor ids or "ALL", feature names); published pairing
PRESETS: dict[str, tuple[tuple[str, ...] | str, tuple[str, ...]]] = {
    "a": (BASELINE_SENSORS, BASELINE_FEATURE_NAMES),
    "b": ("ALL", BASELINE_FEATURE_NAMES),
    "c": ("ALL", ALL_FEATURE_NAMES),
    "d": (SENSOR_SET_A, ALL_FEATURE_NAMES),
    "e": (SENSOR_SET_B, BASELINE_FEATURE_NAMES),
    "f": (SENSOR_SET_B, ALL_FEATURE_NAMES),
}

# Published reference results per preset: (accuracy %, F1 %).
REFERENCE_RESULTS: dict[str, tuple[float, float]] = {
    "a": (74.3, 75.4),
    "b": (81.2, 82.9),
    "c": (83.3, 84.8),
    "d": (78.5, 80.6),
    "e": (80.5, 82.0),
    "f": (81.3, 82.8),
}

REPRODUCTION_FLAG_POINTS = 8.0


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one experiment depends on; canonical-JSON serializable."""

    data_root: str
    sensors: tuple[str, ...]
    features: tuple[FeatureSpec, ...]
    window_s: float = 5.0
    overlap_frac: float = 0.3
    sample_rate_hz: float | None = None  # None: take the catalog's rate
    subjects: tuple[str, ...] = ("*",)
    train_runs: tuple[str, ...] = DEFAULT_TRAIN_RUNS
    test_runs: tuple[str, ...] = DEFAULT_TEST_RUNS
    hyperparams: ForestHyperparams = field(default_factory=ForestHyperparams)
    seed: int = 7
    preset: str | None = None
    drop_others_windows: bool = False
    rebalance_classes: bool = False
    provenance: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.sensors:
            raise ConfigurationError("config needs at least one sensor location")
        if len(set(self.sensors)) != len(self.sensors):
            raise ConfigurationError("sensor selection contains duplicates")
        object.__setattr__(self, "features", canonical_specs(self.features))
        if not self.features:
            raise ConfigurationError("config needs at least one feature spec")
        if not self.subjects:
            raise ConfigurationError("config needs at least one subject glob")
        if self.window_s <= 0:
            raise ConfigurationError("window_s must be positive")
        if not 0 <= self.overlap_frac < 1:
            raise ConfigurationError("overlap_frac must be in [0, 1)")

    def to_dict(self) -> dict:
        return {
            "version": 1,
            "data_root": self.data_root,
            "sensors": list(self.sensors),
            "features": [s.to_dict() for s in self.features],
            "window_s": self.window_s,
            "overlap_frac": self.overlap_frac,
            "sample_rate_hz": self.sample_rate_hz,
            "subjects": list(self.subjects),
            "train_runs": list(self.train_runs),
            "test_runs": list(self.test_runs),
            "hyperparams": self.hyperparams.to_dict(),
            "seed": self.seed,
            "preset": self.preset,
            "drop_others_windows": self.drop_others_windows,
            "rebalance_classes": self.rebalance_classes,
            "provenance": list(self.provenance),
        }

    @classmethod
    def from_dict(cls, raw: Mapping) -> "ExperimentConfig":
        try:
            return cls(
                data_root=str(raw["data_root"]),
                sensors=tuple(str(s) for s in raw["sensors"]),
                features=tuple(
                    FeatureSpec.from_dict(f) for f in raw["features"]
                ),
                window_s=float(raw.get("window_s", 5.0)),
                overlap_frac=float(raw.get("overlap_frac", 0.3)),
                sample_rate_hz=(
                    None
                    if raw.get("sample_rate_hz") is None
                    else float(raw["sample_rate_hz"])
                ),
                subjects=tuple(str(s) for s in raw.get("subjects", ("*",))),
                train_runs=tuple(
                    str(r) for r in raw.get("train_runs", DEFAULT_TRAIN_RUNS)
                ),
                test_runs=tuple(
                    str(r) for r in raw.get("test_runs", DEFAULT_TEST_RUNS)
                ),
                hyperparams=ForestHyperparams.from_dict(
                    raw.get("hyperparams", {})
                ),
                seed=int(raw.get("seed", 7)),
                preset=(
                    None if raw.get("preset") is None else str(raw["preset"])
                ),
                drop_others_windows=bool(raw.get("drop_others_windows", False)),
                rebalance_classes=bool(raw.get("rebalance_classes", False)),
                provenance=tuple(str(p) for p in raw.get("provenance", ())),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigurationError(f"malformed config: {exc}") from None

    def fingerprint(self) -> str:
        canonical = json.dumps(
            self.to_dict(), sort_keys=True, separators=(",", ":")
        )
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def save_config(path: str | Path, config: ExperimentConfig) -> None:
    Path(path).write_text(
        json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n"
    )


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigurationError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigurationError(
            f"config file {path} is not valid JSON: {exc}"
        ) from None
    return ExperimentConfig.from_dict(raw)


def preset_config(
    preset: str,
    data_root: str | Path,
    catalog: SensorCatalog,
    seed: int = 7,
    **overrides,
) -> ExperimentConfig:
    """Instantiate a preset; "ALL" sensor presets expand to the catalog."""
    if preset not in PRESETS:
        raise ConfigurationError(
            f"unknown preset {preset!r}; choose from {', '.join(PRESETS)}"
        )
    sensors, feature_names = PRESETS[preset]
    if sensors == "ALL":
        sensor_ids: tuple[str, ...] = tuple(catalog.location_ids)
    else:
        sensor_ids = tuple(sensors)
    missing = [s for s in sensor_ids if s not in catalog]
    if missing:
        raise ConfigurationError(
            f"preset {preset!r} needs locations absent from the catalog: "
            f"{', '.join(missing)}"
        )
    return ExperimentConfig(
        data_root=str(data_root),
        sensors=sensor_ids,
        features=canonical_specs(feature_names),
        seed=seed,
        preset=preset,
        **overrides,
    )


# ---------------------------------------------------------------------------
# Running
# ---------------------------------------------------------------------------


@contextmanager
def _stage(name: str):
    """Tag expected failures with the pipeline stage they came from."""
    try:
        yield
    except HarPioneerError as exc:
        if exc.args and isinstance(exc.args[0], str):
            exc.args = (f"[{name}] {exc.args[0]}",) + exc.args[1:]
        raise


def resolve_catalog(config: ExperimentConfig) -> SensorCatalog:
    """The dataset's own catalog.yaml when present, else the shipped one."""
    local = Path(config.data_root) / "catalog.yaml"
    return load_catalog(local) if local.exists() else load_catalog()


def _matching_paths(config: ExperimentConfig) -> list[Path]:
    root = Path(config.data_root)
    if not root.is_dir():
        raise DatasetError(f"dataset root {root} is not a directory")
    paths = []
    for path in discover_recordings(root):
        provenance = provenance_from_path(path)
        if any(
            fnmatch.fnmatchcase(provenance.subject, g) for g in config.subjects
        ):
            paths.append(path)
    if not paths:
        raise DatasetError(
            f"no recordings under {root} match subjects {list(config.subjects)}"
        )
    return paths


def _rebalance(matrix: FeatureMatrix, seed: int) -> FeatureMatrix:
    """Upsample minority classes (with replacement) to the majority count."""
    rng = np.random.default_rng((seed, 977))
    counts = np.bincount(matrix.y, minlength=N_CLASSES)
    target = counts.max()
    extra_chunks = []
    extra_labels = []
    for cls in range(N_CLASSES):
        if 0 < counts[cls] < target:
            idx = np.flatnonzero(matrix.y == cls)
            picks = rng.choice(idx, size=int(target - counts[cls]), replace=True)
            extra_chunks.append(matrix.X[picks])
            extra_labels.append(matrix.y[picks])
    if not extra_chunks:
        return matrix
    return FeatureMatrix(
        column_names=matrix.column_names,
        X=np.concatenate([matrix.X] + extra_chunks),
        y=np.concatenate([matrix.y] + extra_labels),
    )


def run(
    config: ExperimentConfig, results_dir: str | Path | None = None
) -> EvaluationReport:
    """Execute ingest → window → featurize → train → evaluate for a config.

    Deterministic given the config (the seed is part of it). When
    ``results_dir`` is given, the report is also persisted via store_report.
    """
    with _stage("catalog"):
        catalog = resolve_catalog(config)
    fs = (
        float(config.sample_rate_hz)
        if config.sample_rate_hz is not None
        else catalog.sample_rate_hz
    )

    with _stage("ingest"):
        paths = _matching_paths(config)
        recordings = [
            load_recording(p, config.sensors, catalog) for p in paths
        ]

    with _stage("split"):
        train_recs, test_recs = split_train_test(
            recordings, config.train_runs, config.test_runs
        )

    with _stage("windowing"):
        others_index = CLASS_ORDER.index(ActivityLabel.Others)

        def windows_of(recordings_):
            windows = []
            for rec in recordings_:
                windows.extend(segment(rec, config.window_s, config.overlap_frac))
            if config.drop_others_windows:
                windows = [w for w in windows if w.label_index != others_index]
            return windows

        train_windows = windows_of(train_recs)
        test_windows = windows_of(test_recs)
        if not train_windows:
            raise DatasetError("no training windows after segmentation")
        if not test_windows:
            raise DatasetError("no test windows after segmentation")

    with _stage("features"):
        train_matrix = featurize_windows(train_windows, config.features, fs)
        test_matrix = featurize_windows(test_windows, config.features, fs)

    if config.rebalance_classes:
        train_matrix = _rebalance(train_matrix, config.seed)

    with _stage("train"):
        model = train_forest(
            train_matrix.X,
            train_matrix.y,
            train_matrix.column_names,
            config.hyperparams,
            seed=config.seed,
        )

    with _stage("evaluate"):
        predictions = predict(model, test_matrix.X, test_matrix.column_names)
        subjects = [w.provenance.subject for w in test_windows]
        report = evaluate(test_matrix.y, predictions, subjects=subjects)

    if results_dir is not None:
        store_report(results_dir, config, report)
    return report


# ---------------------------------------------------------------------------
# Results store
# ---------------------------------------------------------------------------


def report_to_dict(config: ExperimentConfig, report: EvaluationReport) -> dict:
    return {
        "version": 1,
        "preset": config.preset,
        "config_fingerprint": config.fingerprint(),
        "config": config.to_dict(),
        "evaluation": report.to_dict(),
    }


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text)
    tmp.replace(path)


def store_report(
    results_dir: str | Path,
    config: ExperimentConfig,
    report: EvaluationReport,
) -> Path:
    """Write report-<fp12>.json and refresh index.json; returns the path."""
    results_dir = Path(results_dir)
    results_dir.mkdir(parents=True, exist_ok=True)
    fingerprint = config.fingerprint()
    path = results_dir / f"report-{fingerprint[:12]}.json"
    _atomic_write(
        path,
        json.dumps(report_to_dict(config, report), indent=2, sort_keys=True)
        + "\n",
    )
    index_path = results_dir / "index.json"
    index = {"version": 1, "reports": {}}
    if index_path.exists():
        try:
            index = json.loads(index_path.read_text())
        except json.JSONDecodeError:
            pass
    index.setdefault("reports", {})[fingerprint] = {
        "path": path.name,
        "preset": config.preset,
        "accuracy": report.accuracy,
        "macro_f1": report.macro_f1,
    }
    _atomic_write(index_path, json.dumps(index, indent=2, sort_keys=True) + "\n")
    return path


def load_report(path: str | Path) -> dict:
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigurationError(f"report file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigurationError(
            f"report file {path} is not valid JSON: {exc}"
        ) from None
    if "evaluation" not in raw:
        raise ConfigurationError(f"report file {path} has no evaluation section")
    return raw


# ---------------------------------------------------------------------------
# Applying suggestions
# ---------------------------------------------------------------------------


def apply_suggestions(
    config: ExperimentConfig,
    suggestions: SuggestionSet,
    catalog: SensorCatalog | None = None,
) -> ExperimentConfig:
    """Union the suggestions into a new config (monotone and idempotent).

    Sensor suggestions extend the sensor list, feature suggestions add
    default-parameter specs; existing entries and their order are kept. A
    provenance note recording the suggestion fingerprint is added once.
    """
    if not suggestions.resolved:
        raise ConfigurationError("suggestion set has no resolved entries")
    note = (
        f"applied {suggestions.kind} suggestions "
        f"(prompt {suggestions.prompt_fingerprint or 'unrecorded'})"
    )
    provenance = (
        config.provenance
        if note in config.provenance
        else config.provenance + (note,)
    )
    if suggestions.kind == "sensor":
        if catalog is not None:
            unknown = [s for s in suggestions.resolved if s not in catalog]
            if unknown:
                raise ConfigurationError(
                    f"suggested locations not in the catalog: {', '.join(unknown)}"
                )
        new_sensors = config.sensors + tuple(
            s for s in suggestions.resolved if s not in config.sensors
        )
        if new_sensors == config.sensors and provenance == config.provenance:
            return config
        return replace(
            config, sensors=new_sensors, provenance=provenance, preset=None
        )
    current_names = {spec.name for spec in config.features}
    new_features = config.features + canonical_specs(
        [name for name in suggestions.resolved if name not in current_names]
    )
    if new_features == config.features and provenance == config.provenance:
        return config
    return replace(
        config, features=new_features, provenance=provenance, preset=None
    )


def context_from_config(
    config: ExperimentConfig,
    catalog: SensorCatalog,
    evaluation: EvaluationReport | None = None,
) -> PromptContext:
    """PromptContext for the current config (plus optional latest result)."""
    return build_context(
        catalog=catalog,
        sensor_ids=config.sensors,
        feature_specs=config.features,
        window_s=config.window_s,
        overlap_frac=config.overlap_frac,
        evaluation=evaluation,
    )


# ---------------------------------------------------------------------------
# Reproduction report
# ---------------------------------------------------------------------------


def build_reproduction_report(
    reports: Mapping[str, EvaluationReport],
) -> dict:
    """Compare preset runs against the published reference numbers.

    Soft check only: presets deviating by more than ±8 accuracy points are
    flagged, and the three directional claims — (b) > (a), (f) ≥ (e),
    (c) ≥ (b) — are evaluated on the run's own numbers.
    """
    presets = {}
    for preset, (ref_acc, ref_f1) in REFERENCE_RESULTS.items():
        report = reports.get(preset)
        if report is None:
            presets[preset] = {"status": "not run"}
            continue
        acc_pct = report.accuracy * 100.0
        f1_pct = report.macro_f1 * 100.0
        delta = acc_pct - ref_acc
        presets[preset] = {
            "status": "ok",
            "accuracy_pct": acc_pct,
            "macro_f1_pct": f1_pct,
            "reference_accuracy_pct": ref_acc,
            "reference_f1_pct": ref_f1,
            "accuracy_delta_pct": delta,
            "flagged": abs(delta) > REPRODUCTION_FLAG_POINTS,
        }

    def _acc(preset: str) -> float | None:
        entry = presets.get(preset, {})
        return entry.get("accuracy_pct")

    def _check(lhs: str, rhs: str, strict: bool) -> bool | None:
        a, b = _acc(lhs), _acc(rhs)
        if a is None or b is None:
            return None
        return a > b if strict else a >= b

    return {
        "version": 1,
        "flag_threshold_pct": REPRODUCTION_FLAG_POINTS,
        "presets": presets,
        "directional_checks": {
            "b_gt_a": _check("b", "a", strict=True),
            "f_ge_e": _check("f", "e", strict=False),
            "c_ge_b": _check("c", "b", strict=False),
        },
        "note": (
            "Reference numbers are published results; the reference "
            "classifier and split protocol are not public, so comparisons "
            "are informational and never gate tests."
        ),
    }
