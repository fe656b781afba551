from __future__ import annotations

import json
from pathlib import Path

import pytest
from rich.console import Console

from conformalcalc.engine import CheckResult, Report
from conformalcalc.reporters.json_reporter import (
    REPORT_SCHEMA_VERSION,
    parse_json_report,
    render_json,
    spec_digest,
)
from conformalcalc.reporters.terminal import render_terminal

SCHEMA = Path(__file__).resolve().parents[1] / "schemas" / "conformalcalc-report.schema.json"


def _report() -> Report:
    return Report(
        tool_version="0.1.0",
        spec_digest=spec_digest("algebra x {}\n"),
        subject="builtin:r_minus_one(d=1)",
        checks=(
            CheckResult("jacobi(h,e,f)", "fail", residual="-2 L", elapsed=0.02, detail="[h_L[e_M f]]"),
            CheckResult("skew(h,e)", "pass", elapsed=0.01),
        ),
        findings=("[e,f] = -h",),
        wall_clock=0.5,
    )


def test_spec_digest_is_sha256() -> None:
    digest = spec_digest("abc")
    assert len(digest) == 64
    assert digest == spec_digest("abc")
    assert digest != spec_digest("abd")


def test_render_json_layout() -> None:
    payload = json.loads(render_json(_report()))
    assert payload["schema_version"] == REPORT_SCHEMA_VERSION
    assert payload["tool"] == {"name": "conformal-calc", "version": "0.1.0"}
    assert payload["summary"] == {"total": 2, "passed": 1, "failed": 1}
    assert [c["name"] for c in payload["checks"]] == ["jacobi(h,e,f)", "skew(h,e)"]
    assert payload["checks"][0]["residual"] == "-2 L"
    assert payload["checks"][0]["detail"] == "[h_L[e_M f]]"
    assert "elapsed" not in payload["checks"][0]
    assert "wall_clock" not in payload
    assert payload["findings"] == ["[e,f] = -h"]


def test_render_json_with_timings() -> None:
    payload = json.loads(render_json(_report(), timings=True))
    assert payload["wall_clock"] == 0.5
    assert payload["checks"][1]["elapsed"] == 0.01


def test_json_report_round_trips() -> None:
    report = _report()
    parsed = parse_json_report(render_json(report, timings=True))
    assert parsed == report


def test_json_report_matches_schema_keys() -> None:
    schema = json.loads(SCHEMA.read_text(encoding="utf-8"))
    payload = json.loads(render_json(_report(), timings=True))
    assert set(schema["required"]) <= set(payload)
    assert set(payload) <= set(schema["properties"])


@pytest.mark.parametrize(
    ("text", "message"),
    [
        ("[]", "must be an object"),
        ('{"schema_version": 99}', "Unsupported report schema_version"),
        ('{"schema_version": 1, "tool": {}}', "tool.version"),
        ('{"schema_version": 1, "tool": {"version": "1"}, "spec_digest": "x", "checks": {}}', "must be a list"),
        (
            '{"schema_version": 1, "tool": {"version": "1"}, "spec_digest": "x", "checks": [{"name": "a"}]}',
            "pass/fail",
        ),
        (
            '{"schema_version": 1, "tool": {"version": "1"}, "spec_digest": "x", "checks": [],'
            ' "summary": {"total": 3}}',
            "does not match",
        ),
    ],
)
def test_parse_json_report_rejects_malformed_input(text: str, message: str) -> None:
    with pytest.raises(ValueError, match=message):
        parse_json_report(text)


def test_render_terminal_lists_checks_and_summary() -> None:
    console = Console(record=True, width=120)
    render_terminal(_report(), console=console, title="axiom verification")
    out = console.export_text()
    assert "conformal-calc" in out
    assert "builtin:r_minus_one(d=1)" in out
    assert "[e,f] = -h" in out
    assert "✖ jacobi(h,e,f)" in out
    assert "residual: -2 L" in out
    assert "✔ skew(h,e)" in out
    assert "1/2 checks passed, 1 failed" in out


def test_render_terminal_can_hide_passed_checks() -> None:
    console = Console(record=True, width=120)
    render_terminal(_report(), console=console, title="t", show_passed=False, timings=True)
    out = console.export_text()
    assert "skew(h,e)" not in out
    assert "Wall clock: 0.500s" in out
