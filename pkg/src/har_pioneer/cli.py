"""Command-line surface: run experiments, pioneer suggestions, apply them.

Exit codes: 0 on success, 1 for expected pipeline failures (bad data, missing
files, cassette misses, ...), 2 for usage errors. Every subcommand accepts
``--format json`` for machine-readable output; the default is a short human
summary. Only ``pioneer --mode live|record`` ever touches the network.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from har_pioneer.catalog import load_catalog
from har_pioneer.errors import ConfigurationError, HarPioneerError
from har_pioneer.experiment import (
    ExperimentConfig,
    PRESETS,
    apply_suggestions,
    context_from_config,
    load_config,
    load_report,
    preset_config,
    run,
    save_config,
    store_report,
)
from har_pioneer.labels import CLASS_ORDER
from har_pioneer.llm_client import (
    DEFAULT_BASE_URL,
    DEFAULT_MODEL,
    LLMClient,
    LLMConfig,
    load_session,
    new_session,
    save_session,
)
from har_pioneer.model import evaluation_from_dict
from har_pioneer.pioneer import (
    load_suggestions,
    parse_feature_suggestions,
    parse_sensor_suggestions,
    render_feature_prompt,
    render_sensor_prompt,
    save_suggestions,
)
from har_pioneer.resources import fixture_path
from har_pioneer.synth import synthesize_dataset


def _emit(args, payload: dict, text_lines: list[str]) -> None:
    if args.format == "json":
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        for line in text_lines:
            print(line)


def _catalog_for_root(data_root: str | Path):
    local = Path(data_root) / "catalog.yaml"
    return load_catalog(local) if local.exists() else load_catalog()


def _config_from_args(
    parser: argparse.ArgumentParser, args
) -> ExperimentConfig:
    if args.config:
        config = load_config(args.config)
        if args.data:
            config = ExperimentConfig.from_dict(
                {**config.to_dict(), "data_root": str(args.data)}
            )
        if args.seed is not None:
            config = ExperimentConfig.from_dict(
                {**config.to_dict(), "seed": args.seed}
            )
        return config
    if not args.preset:
        parser.error("either --preset or --config is required")
    if not args.data:
        parser.error("--preset needs --data pointing at the dataset root")
    catalog = _catalog_for_root(args.data)
    return preset_config(
        args.preset,
        args.data,
        catalog,
        seed=args.seed if args.seed is not None else 7,
    )


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_run(parser, args) -> int:
    config = _config_from_args(parser, args)
    report = run(config)
    report_path = store_report(args.out, config, report)
    label = config.preset or config.fingerprint()[:12]
    _emit(
        args,
        {
            "preset": config.preset,
            "config_fingerprint": config.fingerprint(),
            "accuracy": report.accuracy,
            "macro_f1": report.macro_f1,
            "n_windows": report.n_windows,
            "report_path": str(report_path),
        },
        [
            f"{label}: {report.accuracy * 100:.1f}% / "
            f"{report.macro_f1 * 100:.1f}% "
            f"(accuracy / macro F1, {report.n_windows} windows)",
            f"report written to {report_path}",
        ],
    )
    return 0


def cmd_pioneer(parser, args) -> int:
    config = _config_from_args(parser, args)
    catalog = _catalog_for_root(config.data_root)

    if args.kind == "sensors":
        if args.variant == "B" and not args.from_report:
            parser.error("--variant B requires --from-report")
        if args.variant == "A" and args.from_report:
            parser.error("--variant A does not take --from-report")
    evaluation = None
    if args.from_report:
        evaluation = evaluation_from_dict(
            load_report(args.from_report)["evaluation"]
        )

    context = context_from_config(config, catalog, evaluation)
    if args.kind == "sensors":
        prompt = render_sensor_prompt(context, args.variant)
    else:
        prompt = render_feature_prompt(context)

    cassette = args.cassette or str(fixture_path("cassette.json"))
    if args.mode == "record" and not args.cassette:
        raise ConfigurationError(
            "record mode would overwrite the shipped fixture cassette; "
            "pass an explicit --cassette path"
        )
    client = LLMClient(
        LLMConfig(
            mode=args.mode,
            base_url=args.base_url,
            model=args.model,
            temperature=args.temperature,
            cassette_path=cassette if args.mode != "live" else None,
        )
    )
    if args.session and Path(args.session).exists():
        session = load_session(args.session)
    else:
        session = new_session(model=args.model, temperature=args.temperature)
    reply = client.complete(session, prompt)
    fingerprint = client.last_fingerprint(session)
    if args.session:
        save_session(args.session, session)

    if args.kind == "sensors":
        suggestions = parse_sensor_suggestions(
            reply, catalog, prompt_fingerprint=fingerprint
        )
    else:
        suggestions = parse_feature_suggestions(
            reply, prompt_fingerprint=fingerprint
        )

    out = Path(args.out)
    save_suggestions(out, suggestions)
    prompt_path = out.with_name(out.stem + ".prompt.txt")
    prompt_path.write_text(prompt)
    _emit(
        args,
        {
            "kind": suggestions.kind,
            "resolved": list(suggestions.resolved),
            "unresolved": list(suggestions.unresolved),
            "prompt_fingerprint": fingerprint,
            "suggestions_path": str(out),
            "prompt_path": str(prompt_path),
        },
        [
            f"resolved ({len(suggestions.resolved)}): "
            + (", ".join(suggestions.resolved) or "-"),
            f"unresolved ({len(suggestions.unresolved)}): "
            + (", ".join(suggestions.unresolved) or "-"),
            f"suggestions written to {out}",
        ],
    )
    return 0


def cmd_apply(parser, args) -> int:
    config = load_config(args.config)
    suggestions = load_suggestions(args.suggestions)
    catalog = _catalog_for_root(config.data_root)
    updated = apply_suggestions(config, suggestions, catalog)
    save_config(args.out, updated)
    _emit(
        args,
        {
            "sensors": list(updated.sensors),
            "features": [s.name for s in updated.features],
            "provenance": list(updated.provenance),
            "config_path": str(args.out),
        },
        [
            f"sensors ({len(updated.sensors)}): {', '.join(updated.sensors)}",
            f"features ({len(updated.features)}): "
            + ", ".join(s.name for s in updated.features),
            f"config written to {args.out}",
        ],
    )
    return 0


def cmd_synth(parser, args) -> int:
    paths = synthesize_dataset(
        args.out,
        seed=args.seed,
        n_subjects=args.n_subjects,
        duration_s=args.duration_s,
        nan_rate=args.nan_rate,
    )
    _emit(
        args,
        {
            "out": str(args.out),
            "files": [p.name for p in paths],
            "n_files": len(paths),
        },
        [f"wrote {len(paths)} recordings (plus catalog.yaml) to {args.out}"],
    )
    return 0


def cmd_report(parser, args) -> int:
    raw = load_report(args.path)
    if args.format == "json":
        print(json.dumps(raw, indent=2, sort_keys=True))
        return 0
    evaluation = raw["evaluation"]
    print(f"preset:      {raw.get('preset')}")
    print(f"fingerprint: {raw.get('config_fingerprint')}")
    print(
        f"accuracy:    {evaluation['accuracy'] * 100:.1f}%   "
        f"macro F1: {evaluation['macro_f1'] * 100:.1f}%   "
        f"windows: {evaluation['n_windows']}"
    )
    print("per-class F1:")
    per_class = evaluation["per_class"]
    ordered = [c.value for c in CLASS_ORDER if c.value in per_class]
    ordered += [n for n in per_class if n not in ordered]
    for name in ordered:
        metrics = per_class[name]
        print(
            f"  {name:<6} f1={metrics['f1']:.3f} "
            f"precision={metrics['precision']:.3f} "
            f"recall={metrics['recall']:.3f} "
            f"support={int(metrics['support'])}"
        )
    print("confusion (rows=truth, cols=pred, order "
          + ", ".join(c.value for c in CLASS_ORDER) + "):")
    for row in evaluation["confusion"]:
        print("  " + " ".join(f"{int(v):>6}" for v in row))
    if evaluation.get("per_subject"):
        print("per-subject:")
        for subject, metrics in evaluation["per_subject"].items():
            print(
                f"  {subject}: accuracy={metrics['accuracy'] * 100:.1f}% "
                f"macro_f1={metrics['macro_f1'] * 100:.1f}% "
                f"windows={int(metrics['n_windows'])}"
            )
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _add_format(sub: argparse.ArgumentParser) -> None:
    sub.add_argument(
        "--format", choices=("text", "json"), default="text",
        help="output format (default: text)",
    )


def _add_config_source(sub: argparse.ArgumentParser) -> None:
    sub.add_argument(
        "--preset", choices=tuple(PRESETS), help="preset id (a-f)"
    )
    sub.add_argument("--config", help="experiment config JSON path")
    sub.add_argument("--data", help="dataset root directory")
    sub.add_argument("--seed", type=int, default=None, help="RNG seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="har-pioneer",
        description="LLM-guided sensor/feature pioneering for wearable HAR",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    p_run = subparsers.add_parser("run", help="run one experiment config")
    _add_config_source(p_run)
    p_run.add_argument(
        "--out", default="results", help="results directory (default: results)"
    )
    _add_format(p_run)
    p_run.set_defaults(func=cmd_run)

    p_pio = subparsers.add_parser(
        "pioneer", help="render a prompt, query the LLM, parse suggestions"
    )
    _add_config_source(p_pio)
    p_pio.add_argument(
        "--kind", choices=("sensors", "features"), required=True,
        help="what to pioneer",
    )
    p_pio.add_argument(
        "--variant", choices=("A", "B"), default="A",
        help="sensor prompt variant (B includes the current result)",
    )
    p_pio.add_argument(
        "--from-report", help="report JSON whose evaluation feeds the prompt"
    )
    p_pio.add_argument(
        "--mode", choices=("live", "record", "replay"), default="replay",
        help="LLM client mode (default: replay)",
    )
    p_pio.add_argument(
        "--cassette",
        help="cassette path (default: the shipped fixture cassette)",
    )
    p_pio.add_argument(
        "--session",
        help="chat session JSON to continue and/or save",
    )
    p_pio.add_argument(
        "--out", default="suggestions.json",
        help="suggestions output path (default: suggestions.json)",
    )
    p_pio.add_argument("--model", default=DEFAULT_MODEL)
    p_pio.add_argument("--temperature", type=float, default=0.0)
    p_pio.add_argument("--base-url", default=DEFAULT_BASE_URL)
    _add_format(p_pio)
    p_pio.set_defaults(func=cmd_pioneer)

    p_apply = subparsers.add_parser(
        "apply", help="apply a suggestion set to a config"
    )
    p_apply.add_argument("--config", required=True)
    p_apply.add_argument("--suggestions", required=True)
    p_apply.add_argument("--out", required=True)
    _add_format(p_apply)
    p_apply.set_defaults(func=cmd_apply)

    p_synth = subparsers.add_parser(
        "synth", help="generate a synthetic dataset"
    )
    p_synth.add_argument("--out", required=True)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--duration-s", type=float, default=600.0)
    p_synth.add_argument("--n-subjects", type=int, default=2)
    p_synth.add_argument("--nan-rate", type=float, default=0.01)
    _add_format(p_synth)
    p_synth.set_defaults(func=cmd_synth)

    p_rep = subparsers.add_parser("report", help="pretty-print a stored report")
    p_rep.add_argument("--path", required=True)
    _add_format(p_rep)
    p_rep.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(parser, args)
    except HarPioneerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
