from __future__ import annotations

import hashlib
import json
from typing import Any

from conformalcalc import __version__
from conformalcalc.engine.types import CheckResult, Report, sorted_checks

REPORT_SCHEMA_VERSION = 1
REPORT_SCHEMA_URI = "schemas/conformalcalc-report.schema.json"
TOOL_NAME = "conformal-calc"


def spec_digest(canonical_text: str) -> str:
    return hashlib.sha256(canonical_text.encode("utf-8")).hexdigest()


def render_json(report: Report, *, timings: bool = False) -> str:
    payload: dict[str, Any] = {
        "$schema": REPORT_SCHEMA_URI,
        "schema_version": REPORT_SCHEMA_VERSION,
        "tool": {"name": TOOL_NAME, "version": report.tool_version},
        "subject": report.subject,
        "spec_digest": report.spec_digest,
        "summary": {"total": report.total, "passed": report.passed, "failed": report.failed},
        "findings": list(report.findings),
        "checks": [_check_to_dict(c, timings=timings) for c in sorted_checks(report.checks)],
    }
    if timings:
        payload["wall_clock"] = round(report.wall_clock, 6)
    return json.dumps(payload, indent=2, sort_keys=False, ensure_ascii=False)


def _check_to_dict(check: CheckResult, *, timings: bool) -> dict[str, Any]:
    out: dict[str, Any] = {"name": check.name, "status": check.status, "residual": check.residual}
    if check.detail:
        out["detail"] = check.detail
    if timings:
        out["elapsed"] = round(check.elapsed, 6)
    return out


def parse_json_report(text: str) -> Report:
    """
    Parse a JSON report produced by `render_json()` back into a `Report`.

    Timings are optional; everything else must be present and well typed.
    """

    data = json.loads(text)
    if not isinstance(data, dict):
        raise ValueError("JSON report must be an object.")

    version = data.get("schema_version")
    if not isinstance(version, int) or version > REPORT_SCHEMA_VERSION:
        raise ValueError(f"Unsupported report schema_version: {version!r}.")

    tool = data.get("tool")
    if not isinstance(tool, dict) or not isinstance(tool.get("version"), str):
        raise ValueError("JSON report missing required field: tool.version.")

    digest = data.get("spec_digest")
    subject = data.get("subject", "")
    if not isinstance(digest, str) or not isinstance(subject, str):
        raise ValueError("JSON report missing required fields: spec_digest/subject.")

    findings_raw = data.get("findings", [])
    if not isinstance(findings_raw, list):
        raise ValueError("JSON report `findings` must be a list.")

    checks_raw = data.get("checks")
    if not isinstance(checks_raw, list):
        raise ValueError("JSON report `checks` must be a list.")
    checks = tuple(_parse_check(item) for item in checks_raw)

    summary = data.get("summary")
    if isinstance(summary, dict) and summary.get("total") != len(checks):
        raise ValueError("JSON report summary does not match its checks.")

    wall_clock = data.get("wall_clock", 0.0)
    return Report(
        tool_version=tool["version"] or __version__,
        spec_digest=digest,
        subject=subject,
        checks=checks,
        findings=tuple(str(f) for f in findings_raw),
        wall_clock=float(wall_clock) if isinstance(wall_clock, int | float) else 0.0,
    )


def _parse_check(item: Any) -> CheckResult:
    if not isinstance(item, dict):
        raise ValueError("JSON report checks must be objects.")
    name = item.get("name")
    status = item.get("status")
    if not isinstance(name, str) or status not in {"pass", "fail"}:
        raise ValueError("JSON report check needs a name and a pass/fail status.")
    residual = item.get("residual", "")
    detail = item.get("detail", "")
    elapsed = item.get("elapsed", 0.0)
    return CheckResult(
        name=name,
        status=status,
        residual=str(residual),
        elapsed=float(elapsed) if isinstance(elapsed, int | float) else 0.0,
        detail=str(detail),
    )
