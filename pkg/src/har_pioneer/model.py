"""Random-forest classifier, evaluation metrics, and the train/test split.

The forest is implemented directly on numpy arrays so its behaviour is fully
pinned: axis-aligned CART trees with Gini impurity, midpoint thresholds,
bootstrap resampling, and a per-tree RNG stream seeded as
``np.random.default_rng((seed, tree_index))``. The forest prediction is the
majority vote over trees; ties are broken toward the lowest class index in
the fixed class order, and the same rule applies inside leaf nodes.
"""

from __future__ import annotations

import fnmatch
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from har_pioneer.errors import (
    ConfigurationError,
    DatasetError,
    EvaluationError,
    SchemaMismatchError,
    TrainingError,
)
from har_pioneer.ingest import Recording
from har_pioneer.labels import CLASS_ORDER, N_CLASSES

DEFAULT_TRAIN_RUNS: tuple[str, ...] = ("ADL1", "ADL2", "ADL3", "Drill")
DEFAULT_TEST_RUNS: tuple[str, ...] = ("ADL4", "ADL5")


@dataclass(frozen=True)
class ForestHyperparams:
    """Forest shape. ``max_features`` is "sqrt" or "all"; ``max_depth`` may
    be None for unbounded trees."""

    n_trees: int = 100
    max_depth: int | None = 12
    max_features: str = "sqrt"
    bootstrap: bool = True
    min_samples_split: int = 2

    def __post_init__(self):
        if self.n_trees < 1:
            raise ConfigurationError("n_trees must be >= 1")
        if self.max_depth is not None and self.max_depth < 1:
            raise ConfigurationError("max_depth must be >= 1 or None")
        if self.max_features not in ("sqrt", "all"):
            raise ConfigurationError('max_features must be "sqrt" or "all"')
        if self.min_samples_split < 2:
            raise ConfigurationError("min_samples_split must be >= 2")

    def to_dict(self) -> dict:
        return {
            "n_trees": self.n_trees,
            "max_depth": self.max_depth,
            "max_features": self.max_features,
            "bootstrap": self.bootstrap,
            "min_samples_split": self.min_samples_split,
        }

    @classmethod
    def from_dict(cls, raw: Mapping) -> "ForestHyperparams":
        return cls(
            n_trees=int(raw.get("n_trees", 100)),
            max_depth=(None if raw.get("max_depth", 12) is None
                       else int(raw["max_depth"])),
            max_features=str(raw.get("max_features", "sqrt")),
            bootstrap=bool(raw.get("bootstrap", True)),
            min_samples_split=int(raw.get("min_samples_split", 2)),
        )


# ---------------------------------------------------------------------------
# Decision tree
# ---------------------------------------------------------------------------


@dataclass
class _Tree:
    """Flat node arrays; leaf nodes carry ``leaf_class >= 0``."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    leaf_class: np.ndarray


def _leaf_label(counts: np.ndarray) -> int:
    # argmax returns the first maximum, i.e. the lowest class index on ties
    return int(np.argmax(counts))


def _best_split(
    X: np.ndarray, y: np.ndarray, candidates: np.ndarray
) -> tuple[int, float, np.ndarray] | None:
    """Best (feature, threshold, left_mask) by Gini, or None if unsplittable.

    Ties keep the earliest candidate feature and the lowest threshold, so
    the result is deterministic for a fixed candidate order.
    """
    n = y.size
    total = np.bincount(y, minlength=N_CLASSES).astype(float)
    best_impurity = math.inf
    best: tuple[int, float, np.ndarray] | None = None
    positions = np.arange(1, n, dtype=float)
    for f in candidates:
        values = X[:, f]
        order = np.argsort(values, kind="stable")
        sorted_vals = values[order]
        valid = sorted_vals[1:] > sorted_vals[:-1]
        if not valid.any():
            continue
        onehot = np.zeros((n, N_CLASSES))
        onehot[np.arange(n), y[order]] = 1.0
        left_counts = np.cumsum(onehot, axis=0)[:-1][valid]
        n_left = positions[valid]
        n_right = n - n_left
        right_counts = total - left_counts
        gini_left = 1.0 - np.sum((left_counts / n_left[:, None]) ** 2, axis=1)
        gini_right = 1.0 - np.sum((right_counts / n_right[:, None]) ** 2, axis=1)
        impurity = (n_left * gini_left + n_right * gini_right) / n
        j = int(np.argmin(impurity))
        if impurity[j] < best_impurity:
            pos = int(np.flatnonzero(valid)[j])
            lo, hi = float(sorted_vals[pos]), float(sorted_vals[pos + 1])
            threshold = lo + (hi - lo) / 2.0
            if threshold >= hi:  # midpoint rounded up to hi: fall back to lo
                threshold = lo
            best_impurity = float(impurity[j])
            best = (int(f), threshold, values <= threshold)
    return best


def _grow_tree(
    X: np.ndarray,
    y: np.ndarray,
    rng: np.random.Generator,
    hyper: ForestHyperparams,
) -> _Tree:
    n_features = X.shape[1]
    if hyper.max_features == "all":
        n_candidates = n_features
    else:
        n_candidates = max(1, math.isqrt(n_features))

    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    leaf_class: list[int] = []

    def new_node() -> int:
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        leaf_class.append(-1)
        return len(feature) - 1

    # Explicit stack; children of a node draw fresh feature subsets from the
    # same rng, so tree construction order is part of the pinned behaviour.
    root = new_node()
    stack: list[tuple[int, np.ndarray, int]] = [(root, np.arange(X.shape[0]), 0)]
    while stack:
        node, idx, depth = stack.pop()
        yn = y[idx]
        counts = np.bincount(yn, minlength=N_CLASSES)
        at_depth_limit = hyper.max_depth is not None and depth >= hyper.max_depth
        if (
            at_depth_limit
            or idx.size < hyper.min_samples_split
            or np.count_nonzero(counts) <= 1
        ):
            leaf_class[node] = _leaf_label(counts)
            continue
        candidates = rng.choice(n_features, size=n_candidates, replace=False)
        split = _best_split(X[idx], yn, candidates)
        if split is None:
            leaf_class[node] = _leaf_label(counts)
            continue
        f, thr, left_mask = split
        feature[node] = f
        threshold[node] = thr
        left_node = new_node()
        right_node = new_node()
        left[node] = left_node
        right[node] = right_node
        stack.append((right_node, idx[~left_mask], depth + 1))
        stack.append((left_node, idx[left_mask], depth + 1))

    return _Tree(
        feature=np.asarray(feature, dtype=np.int32),
        threshold=np.asarray(threshold, dtype=np.float64),
        left=np.asarray(left, dtype=np.int32),
        right=np.asarray(right, dtype=np.int32),
        leaf_class=np.asarray(leaf_class, dtype=np.int32),
    )


def _tree_predict(tree: _Tree, X: np.ndarray) -> np.ndarray:
    node = np.zeros(X.shape[0], dtype=np.int32)
    while True:
        active = np.flatnonzero(tree.leaf_class[node] < 0)
        if active.size == 0:
            return tree.leaf_class[node].copy()
        current = node[active]
        go_left = X[active, tree.feature[current]] <= tree.threshold[current]
        node[active] = np.where(
            go_left, tree.left[current], tree.right[current]
        )


# ---------------------------------------------------------------------------
# Forest
# ---------------------------------------------------------------------------


@dataclass
class TrainedForest:
    """Fitted forest plus the exact feature schema it was trained on."""

    feature_names: tuple[str, ...]
    hyperparams: ForestHyperparams
    seed: int
    trees: list[_Tree] = field(repr=False)

    @property
    def n_features(self) -> int:
        return len(self.feature_names)


def train_forest(
    X: np.ndarray,
    y: np.ndarray,
    feature_names: Sequence[str],
    hyperparams: ForestHyperparams | None = None,
    seed: int = 0,
) -> TrainedForest:
    """Fit a forest; tree t uses the stream ``default_rng((seed, t))``."""
    hyper = hyperparams or ForestHyperparams()
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.size:
        raise TrainingError(
            f"X {X.shape} and y {y.shape} are not an aligned 2-D/1-D pair"
        )
    if X.shape[0] < 10:
        raise TrainingError(
            f"training needs at least 10 rows, got {X.shape[0]}"
        )
    if X.shape[1] != len(feature_names):
        raise TrainingError(
            f"{X.shape[1]} columns but {len(feature_names)} feature names"
        )
    if not np.all(np.isfinite(X)):
        raise TrainingError("training features contain non-finite values")
    if y.min() < 0 or y.max() >= N_CLASSES:
        raise TrainingError(f"labels outside 0..{N_CLASSES - 1}")
    if np.unique(y).size < 2:
        raise TrainingError("training labels contain a single class")

    n = X.shape[0]
    trees = []
    for t in range(hyper.n_trees):
        rng = np.random.default_rng((seed, t))
        if hyper.bootstrap:
            idx = rng.integers(0, n, size=n)
        else:
            idx = np.arange(n)
        trees.append(_grow_tree(X[idx], y[idx], rng, hyper))
    return TrainedForest(
        feature_names=tuple(feature_names),
        hyperparams=hyper,
        seed=int(seed),
        trees=trees,
    )


def _align_columns(
    model: TrainedForest, X: np.ndarray, feature_names: Sequence[str] | None
) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise SchemaMismatchError([], [])
    if feature_names is None:
        if X.shape[1] != model.n_features:
            raise SchemaMismatchError(
                list(model.feature_names[X.shape[1]:]), []
            )
        return X
    given = tuple(feature_names)
    if given == model.feature_names:
        return X
    missing = [n for n in model.feature_names if n not in set(given)]
    extra = [n for n in given if n not in set(model.feature_names)]
    if missing or extra:
        raise SchemaMismatchError(missing, extra)
    # same column set, different order: permute to the training order
    index = {n: i for i, n in enumerate(given)}
    return X[:, [index[n] for n in model.feature_names]]


def predict_tree_votes(
    model: TrainedForest,
    X: np.ndarray,
    feature_names: Sequence[str] | None = None,
) -> np.ndarray:
    """Per-tree class predictions, shape (n_trees, n_samples)."""
    X = _align_columns(model, X, feature_names)
    return np.stack([_tree_predict(tree, X) for tree in model.trees])


def predict(
    model: TrainedForest,
    X: np.ndarray,
    feature_names: Sequence[str] | None = None,
) -> np.ndarray:
    """Majority vote over trees; ties go to the lowest class index."""
    votes = predict_tree_votes(model, X, feature_names)
    counts = np.zeros((votes.shape[1], N_CLASSES), dtype=np.int64)
    rows = np.arange(votes.shape[1])
    for tree_votes in votes:
        counts[rows, tree_votes] += 1
    return np.argmax(counts, axis=1)


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------


def model_to_dict(model: TrainedForest) -> dict:
    return {
        "version": 1,
        "kind": "random_forest",
        "feature_names": list(model.feature_names),
        "hyperparams": model.hyperparams.to_dict(),
        "seed": model.seed,
        "trees": [
            {
                "feature": tree.feature.tolist(),
                "threshold": tree.threshold.tolist(),
                "left": tree.left.tolist(),
                "right": tree.right.tolist(),
                "leaf_class": tree.leaf_class.tolist(),
            }
            for tree in model.trees
        ],
    }


def model_from_dict(raw: Mapping) -> TrainedForest:
    try:
        trees = [
            _Tree(
                feature=np.asarray(t["feature"], dtype=np.int32),
                threshold=np.asarray(t["threshold"], dtype=np.float64),
                left=np.asarray(t["left"], dtype=np.int32),
                right=np.asarray(t["right"], dtype=np.int32),
                leaf_class=np.asarray(t["leaf_class"], dtype=np.int32),
            )
            for t in raw["trees"]
        ]
        return TrainedForest(
            feature_names=tuple(raw["feature_names"]),
            hyperparams=ForestHyperparams.from_dict(raw["hyperparams"]),
            seed=int(raw["seed"]),
            trees=trees,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigurationError(f"malformed model file: {exc}") from None


def save_model(path: str | Path, model: TrainedForest) -> None:
    Path(path).write_text(
        json.dumps(model_to_dict(model), sort_keys=True, separators=(",", ":"))
    )


def load_model(path: str | Path) -> TrainedForest:
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigurationError(f"model file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"model file {path} is not valid JSON: {exc}") from None
    return model_from_dict(raw)


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def confusion_matrix(y_true: np.ndarray, y_pred: np.ndarray) -> np.ndarray:
    """5x5 count matrix; rows are truth, columns are prediction, both in the
    fixed class order."""
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape or y_true.ndim != 1:
        raise EvaluationError(
            f"truth {y_true.shape} and prediction {y_pred.shape} differ"
        )
    if y_true.size == 0:
        raise EvaluationError("cannot evaluate zero windows")
    for name, arr in (("truth", y_true), ("prediction", y_pred)):
        if arr.min() < 0 or arr.max() >= N_CLASSES:
            raise EvaluationError(f"{name} labels outside 0..{N_CLASSES - 1}")
    flat = np.bincount(y_true * N_CLASSES + y_pred, minlength=N_CLASSES * N_CLASSES)
    return flat.reshape(N_CLASSES, N_CLASSES)


def _f1_terms(confusion: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    tp = np.diag(confusion).astype(float)
    col = confusion.sum(axis=0).astype(float)
    row = confusion.sum(axis=1).astype(float)
    precision = np.divide(tp, col, out=np.zeros_like(tp), where=col > 0)
    recall = np.divide(tp, row, out=np.zeros_like(tp), where=row > 0)
    pr = precision + recall
    f1 = np.divide(
        2 * precision * recall, pr, out=np.zeros_like(tp), where=pr > 0
    )
    return precision, recall, f1


@dataclass
class EvaluationReport:
    """Confusion matrix plus derived metrics for one evaluation."""

    confusion: np.ndarray
    accuracy: float
    macro_f1: float
    per_class: dict[str, dict[str, float]]
    n_windows: int
    per_subject: dict[str, dict[str, float]] | None = None

    def to_dict(self) -> dict:
        out = {
            "accuracy": self.accuracy,
            "macro_f1": self.macro_f1,
            "n_windows": self.n_windows,
            "class_order": [c.value for c in CLASS_ORDER],
            "confusion": self.confusion.tolist(),
            "per_class": self.per_class,
        }
        if self.per_subject is not None:
            out["per_subject"] = self.per_subject
            accs = [m["accuracy"] for m in self.per_subject.values()]
            f1s = [m["macro_f1"] for m in self.per_subject.values()]
            out["subject_mean"] = {
                "accuracy": float(np.mean(accs)),
                "macro_f1": float(np.mean(f1s)),
            }
        return out


def evaluation_from_dict(raw: Mapping) -> EvaluationReport:
    """Rebuild an EvaluationReport from its to_dict form."""
    try:
        confusion = np.asarray(raw["confusion"], dtype=np.int64)
        if confusion.shape != (N_CLASSES, N_CLASSES):
            raise EvaluationError(
                f"confusion matrix must be {N_CLASSES}x{N_CLASSES}"
            )
        return EvaluationReport(
            confusion=confusion,
            accuracy=float(raw["accuracy"]),
            macro_f1=float(raw["macro_f1"]),
            per_class={
                str(k): {m: float(x) for m, x in v.items()}
                for k, v in raw["per_class"].items()
            },
            n_windows=int(raw["n_windows"]),
            per_subject=(
                None
                if raw.get("per_subject") is None
                else {
                    str(k): {m: float(x) for m, x in v.items()}
                    for k, v in raw["per_subject"].items()
                }
            ),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigurationError(f"malformed evaluation: {exc}") from None


def evaluate(
    y_true: np.ndarray,
    y_pred: np.ndarray,
    subjects: Sequence[str] | None = None,
) -> EvaluationReport:
    """Compute the confusion matrix, accuracy, per-class F1 and macro F1.

    Macro F1 averages over all five classes, scoring 0 for a class absent
    from both truth and prediction. With ``subjects`` given (one id per
    window) the report also carries per-subject accuracy and macro F1.
    """
    confusion = confusion_matrix(y_true, y_pred)
    n = int(confusion.sum())
    precision, recall, f1 = _f1_terms(confusion)
    per_class = {
        CLASS_ORDER[i].value: {
            "precision": float(precision[i]),
            "recall": float(recall[i]),
            "f1": float(f1[i]),
            "support": int(confusion[i].sum()),
        }
        for i in range(N_CLASSES)
    }
    per_subject = None
    if subjects is not None:
        subjects = list(subjects)
        if len(subjects) != n:
            raise EvaluationError(
                f"{len(subjects)} subject ids for {n} windows"
            )
        per_subject = {}
        y_true = np.asarray(y_true)
        y_pred = np.asarray(y_pred)
        for subject in sorted(set(subjects)):
            mask = np.array([s == subject for s in subjects])
            sub_conf = confusion_matrix(y_true[mask], y_pred[mask])
            _, _, sub_f1 = _f1_terms(sub_conf)
            per_subject[subject] = {
                "accuracy": float(np.trace(sub_conf) / sub_conf.sum()),
                "macro_f1": float(np.mean(sub_f1)),
                "n_windows": int(sub_conf.sum()),
            }
    return EvaluationReport(
        confusion=confusion,
        accuracy=float(np.trace(confusion) / n),
        macro_f1=float(np.mean(f1)),
        per_class=per_class,
        n_windows=n,
        per_subject=per_subject,
    )


# ---------------------------------------------------------------------------
# Train/test split
# ---------------------------------------------------------------------------


def _matches_any(run: str, patterns: Sequence[str]) -> bool:
    return any(fnmatch.fnmatchcase(run, p) for p in patterns)


def split_train_test(
    recordings: Sequence[Recording],
    train_runs: Sequence[str] = DEFAULT_TRAIN_RUNS,
    test_runs: Sequence[str] = DEFAULT_TEST_RUNS,
) -> tuple[list[Recording], list[Recording]]:
    """Split by run name (fnmatch patterns, e.g. "ADL[123]" or "Drill").

    Every subject contributes to both sides; a recording matching both
    pattern lists is a configuration error, and one matching neither is
    dropped.
    """
    train, test = [], []
    for rec in recordings:
        run = rec.provenance.run
        in_train = _matches_any(run, train_runs)
        in_test = _matches_any(run, test_runs)
        if in_train and in_test:
            raise ConfigurationError(
                f"run {run!r} matches both train {list(train_runs)} and "
                f"test {list(test_runs)} patterns"
            )
        if in_train:
            train.append(rec)
        elif in_test:
            test.append(rec)
    if not train:
        raise DatasetError(
            f"no recordings matched the train patterns {list(train_runs)}"
        )
    if not test:
        raise DatasetError(
            f"no recordings matched the test patterns {list(test_runs)}"
        )
    return train, test
