"""Command-line interface tests: exit codes, output formats, replay flows.

Usage mistakes must exit 2 (argparse), expected pipeline failures exit 1
with an ``error:`` line on stderr, and successes exit 0. The pioneer tests
run fully offline against the shipped fixture cassette.
"""

from __future__ import annotations

import contextlib
import io
import json
import re
from pathlib import Path

import pytest

from har_pioneer.cli import main
from har_pioneer.experiment import (
    SENSOR_SET_A,
    SENSOR_SET_B,
    load_config,
    preset_config,
    save_config,
)
from har_pioneer.features import ALL_FEATURE_NAMES
from har_pioneer.llm_client import fingerprint_request
from har_pioneer.resources import fixture_path

GOLDEN_DIR = Path(__file__).parent / "golden"


def invoke(argv):
    """Run the CLI, mapping argparse's SystemExit to its exit code."""
    try:
        return main(list(argv))
    except SystemExit as exc:
        return exc.code


# ---------------------------------------------------------------------------
# Exit codes
# ---------------------------------------------------------------------------

USAGE_ERRORS = [
    [],
    ["no-such-command"],
    ["run"],
    ["run", "--preset", "a"],
    ["run", "--preset", "z", "--data", "x"],
    ["pioneer"],
    ["pioneer", "--kind", "sensors", "--variant", "B",
     "--preset", "a", "--data", "x"],
    ["pioneer", "--kind", "sensors", "--variant", "A",
     "--from-report", "r.json", "--preset", "a", "--data", "x"],
    ["synth"],
]


@pytest.mark.parametrize(
    "argv", USAGE_ERRORS, ids=[" ".join(a) or "<no args>" for a in USAGE_ERRORS]
)
def test_usage_errors_exit_2(argv, capsys):
    assert invoke(argv) == 2
    assert "usage:" in capsys.readouterr().err


def test_missing_config_exits_1(tmp_path, capsys):
    rc = invoke(["run", "--config", str(tmp_path / "missing.json")])
    assert rc == 1
    assert capsys.readouterr().err.startswith("error:")


def test_missing_report_exits_1(tmp_path, capsys):
    assert invoke(["report", "--path", str(tmp_path / "nope.json")]) == 1
    assert capsys.readouterr().err.startswith("error:")


# ---------------------------------------------------------------------------
# Pioneer: offline replay against the shipped cassette
# ---------------------------------------------------------------------------


@pytest.fixture()
def fixture_configs(tmp_path, monkeypatch, catalog):
    """Configs matching the shipped cassette prompts, in an isolated cwd."""
    monkeypatch.chdir(tmp_path)
    cfg_a = tmp_path / "cfg_a.json"
    cfg_b = tmp_path / "cfg_b.json"
    save_config(cfg_a, preset_config("a", "data/opportunity", catalog))
    save_config(cfg_b, preset_config("b", "data/opportunity", catalog))
    return cfg_a, cfg_b


def test_record_mode_refuses_the_fixture_cassette(fixture_configs, capsys):
    cfg_a, _ = fixture_configs
    rc = invoke(
        ["pioneer", "--kind", "sensors", "--config", str(cfg_a),
         "--mode", "record"]
    )
    assert rc == 1
    assert "cassette" in capsys.readouterr().err


def test_replay_miss_exits_1(fixture_configs, capsys):
    cfg_a, _ = fixture_configs
    rc = invoke(
        ["pioneer", "--kind", "sensors", "--config", str(cfg_a),
         "--model", "gpt-3.5-turbo"]
    )
    assert rc == 1
    assert capsys.readouterr().err.startswith("error:")


def test_pioneer_replay_variant_a(fixture_configs, tmp_path, capsys):
    cfg_a, _ = fixture_configs
    out = tmp_path / "sugg_a.json"
    rc = invoke(
        ["pioneer", "--kind", "sensors", "--config", str(cfg_a),
         "--out", str(out), "--format", "json"]
    )
    assert rc == 0
    payload = json.loads(capsys.readouterr().out)
    assert set(SENSOR_SET_A) <= set(payload["resolved"])
    assert payload["unresolved"] == ["Chest strap"]

    prompt_text = (tmp_path / "sugg_a.prompt.txt").read_text()
    assert prompt_text == (GOLDEN_DIR / "prompt_sensors_A.txt").read_text()
    assert payload["prompt_fingerprint"] == fingerprint_request(
        "gpt-4", 0.0, [{"role": "user", "content": prompt_text}]
    )
    assert json.loads(out.read_text())["kind"] == "sensor"


def test_pioneer_replay_variant_b(fixture_configs, tmp_path, capsys):
    cfg_a, _ = fixture_configs
    out = tmp_path / "sugg_b.json"
    rc = invoke(
        ["pioneer", "--kind", "sensors", "--variant", "B",
         "--config", str(cfg_a),
         "--from-report", str(fixture_path("baseline_report.json")),
         "--out", str(out), "--format", "json"]
    )
    assert rc == 0
    payload = json.loads(capsys.readouterr().out)
    assert sorted(payload["resolved"]) == sorted(SENSOR_SET_B)
    assert payload["unresolved"] == []
    prompt_text = (tmp_path / "sugg_b.prompt.txt").read_text()
    assert prompt_text == (GOLDEN_DIR / "prompt_sensors_B.txt").read_text()


def test_pioneer_features_then_apply_reaches_full_set(
    fixture_configs, tmp_path, capsys
):
    _, cfg_b = fixture_configs
    sugg = tmp_path / "sugg_f.json"
    rc = invoke(
        ["pioneer", "--kind", "features", "--config", str(cfg_b),
         "--out", str(sugg)]
    )
    assert rc == 0
    text = capsys.readouterr().out
    assert "resolved (10):" in text
    assert "unresolved (4):" in text
    prompt_text = (tmp_path / "sugg_f.prompt.txt").read_text()
    assert prompt_text == (GOLDEN_DIR / "prompt_features.txt").read_text()

    out_cfg = tmp_path / "cfg_after.json"
    rc = invoke(
        ["apply", "--config", str(cfg_b), "--suggestions", str(sugg),
         "--out", str(out_cfg)]
    )
    assert rc == 0
    updated = load_config(out_cfg)
    assert {s.name for s in updated.features} == set(ALL_FEATURE_NAMES)
    assert updated.preset is None
    assert updated.provenance


def test_pioneer_persists_the_session(fixture_configs, tmp_path):
    cfg_a, _ = fixture_configs
    sess = tmp_path / "sess.json"
    rc = invoke(
        ["pioneer", "--kind", "sensors", "--config", str(cfg_a),
         "--session", str(sess), "--out", str(tmp_path / "s.json")]
    )
    assert rc == 0
    data = json.loads(sess.read_text())
    assert [m["role"] for m in data["messages"]] == ["user", "assistant"]


# ---------------------------------------------------------------------------
# run / report on the synthetic dataset
# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def run_outputs(synth_root, tmp_path_factory):
    out_dir = tmp_path_factory.mktemp("cli-results")

    def call(argv):
        buf = io.StringIO()
        with contextlib.redirect_stdout(buf):
            rc = main(argv)
        return rc, buf.getvalue()

    base = [
        "run", "--preset", "a", "--data", str(synth_root),
        "--seed", "3", "--out", str(out_dir),
    ]
    rc_text, text = call(base)
    rc_json, raw = call(base + ["--format", "json"])
    return {
        "rc_text": rc_text,
        "text": text,
        "rc_json": rc_json,
        "json": json.loads(raw),
        "out_dir": out_dir,
    }


def test_run_text_summary(run_outputs):
    assert run_outputs["rc_text"] == 0
    first, second = run_outputs["text"].splitlines()[:2]
    assert re.fullmatch(
        r"a: \d{1,3}\.\d% / \d{1,3}\.\d% "
        r"\(accuracy / macro F1, \d+ windows\)",
        first,
    )
    assert second.startswith("report written to ")


def test_run_json_payload(run_outputs):
    assert run_outputs["rc_json"] == 0
    payload = run_outputs["json"]
    assert payload["preset"] == "a"
    assert payload["accuracy"] >= 0.8
    assert payload["n_windows"] > 100
    assert len(payload["config_fingerprint"]) == 64
    assert Path(payload["report_path"]).exists()
    # Both invocations ran the same config, so they share one report file.
    text_path = run_outputs["text"].splitlines()[1].removeprefix(
        "report written to "
    )
    assert text_path == payload["report_path"]


def test_run_refreshes_the_index(run_outputs):
    index = json.loads((run_outputs["out_dir"] / "index.json").read_text())
    assert len(index["reports"]) == 1


def test_report_pretty_print(run_outputs, capsys):
    path = run_outputs["json"]["report_path"]
    assert invoke(["report", "--path", path]) == 0
    out = capsys.readouterr().out
    assert "accuracy:" in out
    assert "per-class F1:" in out
    assert "confusion (rows=truth" in out
    positions = [out.find(name) for name in ("Stand", "Sit", "Walk", "Lie")]
    assert all(p >= 0 for p in positions)
    assert positions == sorted(positions)


def test_report_json_echoes_the_stored_file(run_outputs, capsys):
    path = run_outputs["json"]["report_path"]
    assert invoke(["report", "--path", path, "--format", "json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload == json.loads(Path(path).read_text())


def test_run_config_with_data_and_seed_overrides(
    synth_root, synth_catalog, tmp_path, capsys
):
    cfg_path = tmp_path / "cfg.json"
    save_config(cfg_path, preset_config("a", "wrong/root", synth_catalog))
    rc = invoke(
        ["run", "--config", str(cfg_path), "--data", str(synth_root),
         "--seed", "5", "--out", str(tmp_path / "res"), "--format", "json"]
    )
    assert rc == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["preset"] == "a"
    assert Path(payload["report_path"]).exists()


# ---------------------------------------------------------------------------
# synth subcommand
# ---------------------------------------------------------------------------


def test_synth_subcommand(tmp_path, capsys):
    out = tmp_path / "data"
    rc = invoke(
        ["synth", "--out", str(out), "--seed", "1", "--duration-s", "10",
         "--n-subjects", "1", "--format", "json"]
    )
    assert rc == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["n_files"] == 6
    assert (out / "catalog.yaml").exists()
    for name in payload["files"]:
        assert (out / name).exists()
