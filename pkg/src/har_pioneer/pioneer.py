"""Prompt rendering and reply parsing for LLM-guided pioneering.

Two prompt families are rendered from plain-text template files:

* the sensor-pioneering prompt, in variant A (five sections: role, problem,
  labels, current features, task) or variant B (six sections: the same plus
  a "Current result" section summarizing the latest evaluation);
* the feature-augmentation prompt (four sections: problem, labels, current
  computed features, task).

Rendering is a pure function of (template file, PromptContext) and is
byte-deterministic; golden tests freeze the exact output. Replies are parsed
leniently: numbered/bulleted list items and an optional trailing
machine-readable block are resolved against the sensor catalog or feature
registry, and anything unresolvable is kept verbatim in ``unresolved``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from string import Template
from typing import Mapping, Sequence

from har_pioneer.catalog import SensorCatalog
from har_pioneer.errors import (
    AmbiguousNameError,
    ConfigurationError,
    UnresolvedNameError,
)
from har_pioneer.features import (
    FEATURES,
    FeatureDef,
    FeatureSpec,
    canonical_specs,
    resolve_feature,
)
from har_pioneer.labels import CLASS_ORDER, N_CLASSES
from har_pioneer.model import EvaluationReport
from har_pioneer.resources import template_path

DEFAULT_ROLE_TEXT = (
    "You are an expert in wearable computing and human activity recognition. "
    "You reason about which body-worn sensor placements and which signal "
    "features carry the most information about everyday activities."
)

DEFAULT_TASK_DESCRIPTION = (
    "We classify human locomotion activities from body-worn motion sensors "
    "recorded during activities of daily living. The goal is to maximize "
    "classification accuracy on held-out recordings."
)

SENSOR_TASK_INSTRUCTION = (
    "Suggest the body locations where sensors should be placed for the next "
    "experiment, choosing only from the available locations listed above. "
    "You may keep locations already in use. Reply with a numbered list, one "
    "location per line, giving a short justification after a colon."
)

FEATURE_TASK_INSTRUCTION = (
    "Suggest additional per-window feature calculations that would help the "
    "classifier separate the activity labels. Reply with a numbered list, "
    "one feature per line, giving a short justification after a colon."
)

DEFAULT_LABEL_DESCRIPTIONS: dict[str, str] = {
    "Others": "any other activity, including transitions",
}


@dataclass(frozen=True)
class PromptContext:
    """Everything a prompt template may substitute.

    ``evaluation`` must be present exactly when rendering variant B (or a
    feature prompt following a result); variant A forbids it so that A/B
    renders differ only by the "Current result" section.
    """

    label_names: tuple[str, ...]
    current_sensor_locations: tuple[tuple[str, str], ...]  # (id, human name)
    current_features: tuple[str, ...]  # display names, e.g. "entropy (bins=16)"
    available_sensor_locations: tuple[tuple[str, str], ...]
    available_features: tuple[tuple[str, str], ...]  # (name, description)
    window_seconds: float
    overlap_frac: float
    evaluation: EvaluationReport | None = None
    role_text: str = DEFAULT_ROLE_TEXT
    task_description: str = DEFAULT_TASK_DESCRIPTION
    task_instruction: str = ""
    label_descriptions: Mapping[str, str] = field(
        default_factory=lambda: dict(DEFAULT_LABEL_DESCRIPTIONS), hash=False
    )

    def __post_init__(self):
        expected = {c.value for c in CLASS_ORDER}
        if len(self.label_names) != N_CLASSES or set(self.label_names) != expected:
            raise ConfigurationError(
                f"label_names must be exactly {sorted(expected)}"
            )


def feature_display(spec: FeatureSpec) -> str:
    """Human-readable spec name, e.g. ``fft_coeffs (k=5)``."""
    if spec.params:
        inner = ", ".join(f"{k}={v}" for k, v in sorted(spec.params.items()))
        return f"{spec.name} ({inner})"
    return spec.name


def build_context(
    catalog: SensorCatalog,
    sensor_ids: Sequence[str],
    feature_specs: Sequence[FeatureSpec | str],
    window_s: float,
    overlap_frac: float,
    evaluation: EvaluationReport | None = None,
    task_instruction: str = "",
    role_text: str = DEFAULT_ROLE_TEXT,
    task_description: str = DEFAULT_TASK_DESCRIPTION,
) -> PromptContext:
    """Assemble a PromptContext from catalog entries and feature specs."""
    specs = canonical_specs(feature_specs)
    current = tuple(
        (catalog.get(sid).id, catalog.get(sid).description) for sid in sensor_ids
    )
    available = tuple((loc.id, loc.description) for loc in catalog.locations)
    return PromptContext(
        label_names=tuple(c.value for c in CLASS_ORDER),
        current_sensor_locations=current,
        current_features=tuple(feature_display(s) for s in specs),
        available_sensor_locations=available,
        available_features=tuple(
            (d.name, d.description) for d in FEATURES.values()
        ),
        window_seconds=float(window_s),
        overlap_frac=float(overlap_frac),
        evaluation=evaluation,
        role_text=role_text,
        task_description=task_description,
        task_instruction=task_instruction,
    )


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------


def _bullet_block(pairs: Sequence[tuple[str, str]]) -> str:
    return "\n".join(f"- {name}: {desc}" if desc else f"- {name}" for name, desc in pairs)


def _labels_block(ctx: PromptContext) -> str:
    return _bullet_block(
        [(name, ctx.label_descriptions.get(name, "")) for name in ctx.label_names]
    )


def _features_block(ctx: PromptContext) -> str:
    described = dict(ctx.available_features)
    pairs = []
    for display in ctx.current_features:
        base = display.split(" (")[0]
        pairs.append((display, described.get(base, "")))
    return _bullet_block(pairs)


def summarize_confusions(report: EvaluationReport, top_k: int = 3) -> str:
    """Accuracy/F1 line plus the largest off-diagonal confusion cells.

    Cells are ordered by descending count, ties by fixed class order of the
    true then predicted class; at most ``top_k`` cells are listed. With no
    off-diagonal counts at all, a "no frequent misclassifications" sentinel
    follows the accuracy line.
    """
    if top_k < 0:
        raise ConfigurationError("top_k must be >= 0")
    lines = [
        f"Accuracy {report.accuracy * 100:.1f}%, macro F1 "
        f"{report.macro_f1 * 100:.1f}% over {report.n_windows} windows."
    ]
    confusion = report.confusion
    cells = [
        (int(confusion[i, j]), i, j)
        for i in range(N_CLASSES)
        for j in range(N_CLASSES)
        if i != j and confusion[i, j] > 0
    ]
    cells.sort(key=lambda c: (-c[0], c[1], c[2]))
    if not cells:
        lines.append("There are no frequent misclassifications.")
        return "\n".join(lines)
    for count, i, j in cells[:top_k]:
        truth = CLASS_ORDER[i].value
        pred = CLASS_ORDER[j].value
        pct = 100.0 * count / int(confusion[i].sum())
        lines.append(
            f"{truth} is often misclassified as {pred} "
            f"({count} windows, {pct:.1f}% of {truth})."
        )
    return "\n".join(lines)


def _base_substitutions(ctx: PromptContext) -> dict[str, str]:
    if not ctx.current_sensor_locations:
        raise ConfigurationError("prompt context has an empty sensor list")
    return {
        "role_text": ctx.role_text,
        "task_description": ctx.task_description,
        "available_sensors_block": _bullet_block(ctx.available_sensor_locations),
        "current_sensors_block": _bullet_block(ctx.current_sensor_locations),
        "labels_block": _labels_block(ctx),
        "features_block": _features_block(ctx),
        "window_seconds": f"{ctx.window_seconds:g}",
        "overlap_percent": f"{ctx.overlap_frac * 100:g}",
    }


def render_sensor_prompt(ctx: PromptContext, variant: str) -> str:
    """Render the sensor-pioneering prompt, variant "A" or "B".

    Variant B embeds the "Current result" section built by
    summarize_confusions and requires ``ctx.evaluation``; variant A forbids
    it, guaranteeing the two renders differ only by that section.
    """
    if variant not in ("A", "B"):
        raise ConfigurationError(f'variant must be "A" or "B", got {variant!r}')
    if variant == "B" and ctx.evaluation is None:
        raise ConfigurationError("variant B requires an evaluation in the context")
    if variant == "A" and ctx.evaluation is not None:
        raise ConfigurationError(
            "variant A context must not carry an evaluation"
        )
    subs = _base_substitutions(ctx)
    if variant == "B":
        subs["current_result_block"] = (
            "## Current result\n" + summarize_confusions(ctx.evaluation) + "\n\n"
        )
    else:
        subs["current_result_block"] = ""
    subs["task_instruction"] = ctx.task_instruction or SENSOR_TASK_INSTRUCTION
    template = Template(template_path("sensor_prompt.txt").read_text())
    return template.substitute(subs)


def render_feature_prompt(ctx: PromptContext) -> str:
    """Render the feature-augmentation prompt (four sections)."""
    if not ctx.current_features:
        raise ConfigurationError("prompt context has an empty feature list")
    subs = _base_substitutions(ctx)
    current_bases = {d.split(" (")[0] for d in ctx.current_features}
    remaining = [
        (name, desc)
        for name, desc in ctx.available_features
        if name not in current_bases
    ]
    subs["available_features_block"] = (
        _bullet_block(remaining)
        if remaining
        else "- (every registry feature is already enabled)"
    )
    subs["task_instruction"] = ctx.task_instruction or FEATURE_TASK_INSTRUCTION
    template = Template(template_path("feature_prompt.txt").read_text())
    return template.substitute(subs)


# ---------------------------------------------------------------------------
# Reply parsing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SuggestionSet:
    """Parsed LLM suggestions: resolved ids plus unresolvable leftovers."""

    kind: str  # "sensor" | "feature"
    resolved: tuple[str, ...]
    unresolved: tuple[str, ...]
    raw_reply: str
    prompt_fingerprint: str | None = None

    def __post_init__(self):
        if self.kind not in ("sensor", "feature"):
            raise ConfigurationError(f"unknown suggestion kind {self.kind!r}")
        if len(set(self.resolved)) != len(self.resolved):
            raise ConfigurationError("resolved suggestions must be unique")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "resolved": list(self.resolved),
            "unresolved": list(self.unresolved),
            "raw_reply": self.raw_reply,
            "prompt_fingerprint": self.prompt_fingerprint,
        }

    @classmethod
    def from_dict(cls, raw: Mapping) -> "SuggestionSet":
        try:
            return cls(
                kind=str(raw["kind"]),
                resolved=tuple(str(x) for x in raw["resolved"]),
                unresolved=tuple(str(x) for x in raw["unresolved"]),
                raw_reply=str(raw.get("raw_reply", "")),
                prompt_fingerprint=(
                    None
                    if raw.get("prompt_fingerprint") is None
                    else str(raw["prompt_fingerprint"])
                ),
            )
        except KeyError as exc:
            raise ConfigurationError(
                f"suggestion file is missing key {exc}"
            ) from None


_ITEM_RE = re.compile(r"^\s*(?:\d+\s*[.)]|[-*•])\s+(.+?)\s*$")
_MACHINE_RE = re.compile(
    r"^\s*SUGGESTED_(SENSORS|FEATURES)\s*:\s*(\[.*?\])\s*$", re.MULTILINE
)
# Free-text fallback: "place a sensor on the tail", "sensors at the hip"
_FALLBACK_RE = re.compile(
    r"sensors?\s+(?:worn\s+|placed\s+|mounted\s+)?(?:on|at|to)\s+(?:the\s+)?"
    r"([^.,;:\n]+)",
    re.IGNORECASE,
)


def _strip_markdown(text: str) -> str:
    return text.replace("**", "").replace("`", "").strip().strip("*_ ")


def _machine_entries(reply: str, kind_word: str) -> list[str]:
    entries: list[str] = []
    for match in _MACHINE_RE.finditer(reply):
        if match.group(1) != kind_word:
            continue
        blob = match.group(2)
        try:
            parsed = json.loads(blob)
            items = [str(x) for x in parsed] if isinstance(parsed, list) else []
        except json.JSONDecodeError:
            items = [
                part.strip().strip("\"'")
                for part in blob.strip("[]").split(",")
            ]
        entries.extend(item for item in items if item)
    return entries


def _extract_items(reply: str, kind_word: str) -> list[str]:
    items: list[str] = []
    for line in reply.splitlines():
        if _MACHINE_RE.match(line):
            continue
        match = _ITEM_RE.match(line)
        if not match:
            continue
        text = match.group(1)
        name = text.split(":", 1)[0]
        name = _strip_markdown(name)
        if name:
            items.append(name)
    items.extend(_machine_entries(reply, kind_word))
    if not items:
        items = [m.group(1).strip() for m in _FALLBACK_RE.finditer(reply)]
    return [i for i in items if i]


def _parse(
    reply: str,
    kind: str,
    kind_word: str,
    resolver,
    prompt_fingerprint: str | None,
) -> SuggestionSet:
    resolved: list[str] = []
    unresolved: list[str] = []
    for item in _extract_items(reply or "", kind_word):
        try:
            rid = resolver(item)
        except (UnresolvedNameError, AmbiguousNameError):
            if item not in unresolved:
                unresolved.append(item)
            continue
        if rid not in resolved:
            resolved.append(rid)
    return SuggestionSet(
        kind=kind,
        resolved=tuple(resolved),
        unresolved=tuple(unresolved),
        raw_reply=reply or "",
        prompt_fingerprint=prompt_fingerprint,
    )


def parse_sensor_suggestions(
    reply: str,
    catalog: SensorCatalog,
    prompt_fingerprint: str | None = None,
) -> SuggestionSet:
    """Parse an LLM reply into sensor-location suggestions.

    Never raises on content: unknown or ambiguous names end up in
    ``unresolved``; an empty reply yields an empty set.
    """
    return _parse(
        reply,
        "sensor",
        "SENSORS",
        lambda item: catalog.resolve(item).id,
        prompt_fingerprint,
    )


def parse_feature_suggestions(
    reply: str,
    registry: Mapping[str, FeatureDef] | None = None,
    prompt_fingerprint: str | None = None,
) -> SuggestionSet:
    """Parse an LLM reply into feature suggestions against the registry."""
    return _parse(
        reply,
        "feature",
        "FEATURES",
        lambda item: resolve_feature(item, registry).name,
        prompt_fingerprint,
    )


def save_suggestions(path: str | Path, suggestions: SuggestionSet) -> None:
    Path(path).write_text(
        json.dumps(suggestions.to_dict(), indent=2, sort_keys=True) + "\n"
    )


def load_suggestions(path: str | Path) -> SuggestionSet:
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigurationError(f"suggestion file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigurationError(
            f"suggestion file {path} is not valid JSON: {exc}"
        ) from None
    return SuggestionSet.from_dict(raw)
