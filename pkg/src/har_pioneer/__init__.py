"""LLM-guided sensor placement and feature augmentation for wearable HAR.

The pipeline evaluates locomotion classifiers over configurable sensor and
feature sets, renders structured prompts asking an LLM where to place new
sensors (and which features to compute), and turns the replies into new
experiment configurations.
"""

__version__ = "0.1.0"

from har_pioneer.catalog import SensorCatalog, SensorLocation, load_catalog
from har_pioneer.experiment import (
    ExperimentConfig,
    PRESETS,
    REFERENCE_RESULTS,
    apply_suggestions,
    build_reproduction_report,
    preset_config,
    run,
)
from har_pioneer.features import (
    ALL_FEATURE_NAMES,
    BASELINE_FEATURE_NAMES,
    FeatureSpec,
    featurize_windows,
)
from har_pioneer.labels import CLASS_ORDER, ActivityLabel
from har_pioneer.llm_client import LLMClient, LLMConfig
from har_pioneer.model import (
    EvaluationReport,
    ForestHyperparams,
    TrainedForest,
    evaluate,
    train_forest,
)
from har_pioneer.pioneer import (
    PromptContext,
    SuggestionSet,
    parse_feature_suggestions,
    parse_sensor_suggestions,
    render_feature_prompt,
    render_sensor_prompt,
)
from har_pioneer.synth import synthesize_dataset

__all__ = [
    "ALL_FEATURE_NAMES",
    "ActivityLabel",
    "BASELINE_FEATURE_NAMES",
    "CLASS_ORDER",
    "EvaluationReport",
    "ExperimentConfig",
    "FeatureSpec",
    "ForestHyperparams",
    "LLMClient",
    "LLMConfig",
    "PRESETS",
    "PromptContext",
    "REFERENCE_RESULTS",
    "SensorCatalog",
    "SensorLocation",
    "SuggestionSet",
    "TrainedForest",
    "apply_suggestions",
    "build_reproduction_report",
    "evaluate",
    "featurize_windows",
    "load_catalog",
    "parse_feature_suggestions",
    "parse_sensor_suggestions",
    "preset_config",
    "render_feature_prompt",
    "render_sensor_prompt",
    "run",
    "synthesize_dataset",
    "train_forest",
    "__version__",
]
