from __future__ import annotations

from rich.console import Console
from rich.panel import Panel
from rich.text import Text

from conformalcalc.engine.types import CheckResult, Report, sorted_checks

_STATUS_ICON = {"pass": "✔", "fail": "✖"}
_STATUS_STYLE = {"pass": "green", "fail": "bold red"}


def render_terminal(
    report: Report,
    *,
    console: Console,
    title: str,
    show_passed: bool = True,
    timings: bool = False,
) -> None:
    header = Text()
    header.append("conformal-calc ", style="bold")
    header.append(f"v{report.tool_version}", style="dim")
    header.append(f"  {title}", style="dim")

    console.print(Panel(header, subtitle=report.subject, border_style="cyan"))

    for line in report.findings:
        console.print(Text(f"  {line}"))
    if report.findings and report.checks:
        console.print()

    for check in sorted_checks(report.checks):
        if check.ok and not show_passed:
            continue
        _print_check(console, check, timings=timings)

    _print_summary(report, console=console, timings=timings)


def _print_check(console: Console, check: CheckResult, *, timings: bool) -> None:
    line = Text()
    line.append(f"  {_STATUS_ICON[check.status]} ", style=_STATUS_STYLE[check.status])
    line.append(check.name, style="bold" if not check.ok else "")
    if timings:
        line.append(f"  ({check.elapsed:.3f}s)", style="dim")
    if check.detail:
        line.append(f"  {check.detail}", style="dim")
    console.print(line)
    if check.residual:
        console.print(f"     residual: {check.residual}", style="red", markup=False)


def _print_summary(report: Report, *, console: Console, timings: bool) -> None:
    if not report.checks:
        return
    console.print(Text("─" * 60, style="dim"))
    style = "bold green" if report.ok else "bold red"
    console.print(Text(f"{report.passed}/{report.total} checks passed, {report.failed} failed", style=style))
    if timings:
        console.print(Text(f"Wall clock: {report.wall_clock:.3f}s", style="dim"))
    console.print(Text(f"Spec digest: {report.spec_digest[:16]}", style="dim"))
