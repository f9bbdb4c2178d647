#!/usr/bin/env python3
"""Run presets (a)-(f) on a real dataset and compare to published results.

Produces the reproduction report: per-preset accuracy/macro-F1 next to the
published reference numbers, a flag for any preset deviating by more than
the +-8 accuracy-point threshold, and the three directional checks
(b) > (a), (f) >= (e), (c) >= (b). The exact published numbers are not
expected to be matched (classifier, split and subject set were not fully
specified); the report is informational.

    python3 scripts/reproduce_results.py --data /path/to/opportunity \
        --out results

The dataset root must contain S{n}-{run}.dat recordings; a local
catalog.yaml there overrides the shipped sensor catalog.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from har_pioneer.catalog import load_catalog
from har_pioneer.errors import HarPioneerError
from har_pioneer.experiment import (
    REFERENCE_RESULTS,
    build_reproduction_report,
    preset_config,
    run,
    store_report,
)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument(
        "--data", required=True, help="dataset root directory"
    )
    parser.add_argument(
        "--out", default="results", help="results directory (default: results)"
    )
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument(
        "--presets", nargs="+", choices=tuple(REFERENCE_RESULTS),
        default=tuple(REFERENCE_RESULTS),
        help="subset of presets to run (default: all six)",
    )
    args = parser.parse_args(argv)

    data_root = Path(args.data)
    local_catalog = data_root / "catalog.yaml"
    catalog = (
        load_catalog(local_catalog) if local_catalog.exists() else load_catalog()
    )

    results = {}
    for preset in args.presets:
        config = preset_config(preset, data_root, catalog, seed=args.seed)
        started = time.monotonic()
        print(f"running preset ({preset}) ...", flush=True)
        report = run(config)
        results[preset] = report
        path = store_report(args.out, config, report)
        print(
            f"  accuracy {report.accuracy * 100:.1f}% / "
            f"macro F1 {report.macro_f1 * 100:.1f}% "
            f"({report.n_windows} windows, {time.monotonic() - started:.0f}s) "
            f"-> {path}"
        )

    reproduction = build_reproduction_report(results)
    out_path = Path(args.out) / "reproduction.json"
    out_path.write_text(
        json.dumps(reproduction, indent=2, sort_keys=True) + "\n"
    )

    print()
    print("preset  accuracy  reference  delta     flag")
    for preset, entry in reproduction["presets"].items():
        if entry["status"] != "ok":
            print(f"({preset})     not run")
            continue
        flag = "FLAGGED" if entry["flagged"] else "ok"
        print(
            f"({preset})     {entry['accuracy_pct']:5.1f}%    "
            f"{entry['reference_accuracy_pct']:5.1f}%    "
            f"{entry['accuracy_delta_pct']:+5.1f}     {flag}"
        )
    print()
    for name, value in reproduction["directional_checks"].items():
        shown = "not evaluated" if value is None else value
        print(f"directional check {name}: {shown}")
    print(f"\nreproduction report written to {out_path}")
    print(f"note: {reproduction['note']}")
    return 0


if __name__ == "__main__":
    try:
        sys.exit(main())
    except HarPioneerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        sys.exit(1)
