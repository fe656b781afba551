from __future__ import annotations

import logging
import time
from collections.abc import Callable, Iterator
from contextlib import contextmanager
from fractions import Fraction
from pathlib import Path
from typing import Annotated

import click
import typer
from rich.console import Console

from conformalcalc import __version__
from conformalcalc.algebras import ParseError, dump, parse_expr
from conformalcalc.algebras.builtins import BUILTIN_HELP
from conformalcalc.algebras.registry import BUILTIN_PREFIX, ResolvedAlgebra, builtin_names, resolve
from conformalcalc.config import CalcConfig, ConfigError, load_config
from conformalcalc.engine import CheckResult, Engine, Report
from conformalcalc.engine.types import sorted_checks
from conformalcalc.logging_utils import configure_logging
from conformalcalc.pfamily import alpha0_solve, classical_classify, classify_nonzero_alpha
from conformalcalc.reporters.json_reporter import render_json, spec_digest
from conformalcalc.reporters.terminal import render_terminal
from conformalcalc.verify import property_checks, verify_algebra
from conformalcalc.wakimoto import run_all
from conformalcalc.workers import worker_count_from_env
from conformalcalc.zhu import HamiltonianData, closed_form_checks, presentation

app = typer.Typer(
    add_completion=False,
    no_args_is_help=True,
    help="conformal-calc: exact λ-bracket calculus for non-linear Lie conformal algebras.",
)
console = Console()
err_console = Console(stderr=True)
logger = logging.getLogger(__name__)


def _version_callback(value: bool) -> None:
    if value:
        typer.echo(__version__)
        raise typer.Exit()


@app.callback()
def _main(
    ctx: typer.Context,
    version: Annotated[
        bool,
        typer.Option(
            "--version",
            callback=_version_callback,
            is_eager=True,
            help="Show version and exit.",
        ),
    ] = False,
    verbose: Annotated[
        bool,
        typer.Option("--verbose", "-v", help="Verbose logs (printed to stderr)."),
    ] = False,
    quiet: Annotated[
        bool,
        typer.Option("--quiet", "-q", help="Only print failing checks."),
    ] = False,
) -> None:
    """conformal-calc CLI."""

    if verbose and quiet:
        raise typer.BadParameter("Choose at most one: --verbose or --quiet.")
    configure_logging(verbose=verbose, quiet=quiet)
    ctx.obj = {"verbose": verbose, "quiet": quiet}


def _cli_settings() -> dict[str, bool]:
    ctx = click.get_current_context(silent=True)
    if ctx is None or not isinstance(ctx.obj, dict):
        return {"verbose": False, "quiet": False}
    return {"verbose": bool(ctx.obj.get("verbose", False)), "quiet": bool(ctx.obj.get("quiet", False))}


def _config() -> CalcConfig:
    try:
        return load_config(Path.cwd())
    except ConfigError as exc:
        err_console.print(f"Invalid configuration: {exc}")
        raise typer.Exit(code=2) from exc


@contextmanager
def _usage_errors(what: str) -> Iterator[None]:
    """Map bad input to exit code 2 and internal limits to a clear message."""

    try:
        yield
    except ParseError as exc:
        err_console.print(f"Parse error in {what}: {exc}", markup=False)
        raise typer.Exit(code=2) from exc
    except (ValueError, OSError) as exc:
        err_console.print(f"Invalid {what}: {exc}", markup=False)
        raise typer.Exit(code=2) from exc
    except RuntimeError as exc:
        err_console.print(f"Computation limit reached: {exc}", markup=False)
        raise typer.Exit(code=2) from exc


def _resolve(target: str, params: list[str] | None) -> ResolvedAlgebra:
    with _usage_errors("algebra"):
        return resolve(target, params or ())


def _emit(report: Report, *, title: str, as_json: bool, config: CalcConfig, timings: bool) -> None:
    if as_json or config.format == "json":
        typer.echo(render_json(report, timings=timings))
    else:
        render_terminal(
            report,
            console=console,
            title=title,
            show_passed=not _cli_settings()["quiet"],
            timings=timings,
        )
    if not report.ok:
        raise typer.Exit(code=1)


def _timed_report(subject: str, digest_text: str, run: Callable[[], tuple[list[CheckResult], list[str]]]) -> Report:
    start = time.perf_counter()
    with _usage_errors("input"):
        checks, findings = run()
    return Report(
        tool_version=__version__,
        spec_digest=spec_digest(digest_text),
        subject=subject,
        checks=sorted_checks(checks),
        findings=tuple(findings),
        wall_clock=time.perf_counter() - start,
    )


def _parse_rational(value: str, *, option: str) -> Fraction:
    try:
        return Fraction(value.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise typer.BadParameter(f"{option} must be a rational number such as 3 or -1/2.") from exc


TargetArg = Annotated[
    str,
    typer.Argument(help=f"Algebra file, or {BUILTIN_PREFIX}NAME (see `conformal-calc builtins`)."),
]
ParamsArg = Annotated[
    list[str] | None,
    typer.Argument(help="key=value parameters for builtin algebras (e.g. d=3)."),
]
JsonOpt = Annotated[bool, typer.Option("--json", help="Emit the JSON report on stdout.")]
TimingsOpt = Annotated[bool, typer.Option("--timings", help="Include per-check timings in the output.")]


@app.command()
def verify(
    target: TargetArg,
    params: ParamsArg = None,
    as_json: JsonOpt = False,
    max_weight: Annotated[
        int | None,
        typer.Option("--max-weight", min=1, help="Weight bound for randomized property sweeps (default: config, 6)."),
    ] = None,
    no_relations: Annotated[
        bool,
        typer.Option("--no-relations", help="Ignore declared relations and check the free algebra."),
    ] = False,
    seed: Annotated[int | None, typer.Option("--seed", min=0, help="Seed for property sweeps.")] = None,
    cases: Annotated[
        int | None,
        typer.Option("--cases", min=0, help="Random cases per property (0 disables the sweeps)."),
    ] = None,
    timings: TimingsOpt = False,
) -> None:
    """Check skew-symmetry and the Jacobi identity on every generator triple."""

    config = _config()
    resolved = _resolve(target, params)
    spec = resolved.spec.without_relations() if no_relations else resolved.spec
    workers = worker_count_from_env()

    def run() -> tuple[list[CheckResult], list[str]]:
        engine = Engine(spec, weight_cap=config.weight_cap)
        checks = verify_algebra(spec, engine=engine, workers=workers)
        sweep_cases = config.property_cases if cases is None else cases
        if sweep_cases:
            checks.extend(
                property_checks(
                    engine,
                    max_weight=max_weight or config.max_weight,
                    seed=config.seed if seed is None else seed,
                    cases=sweep_cases,
                    workers=workers,
                )
            )
        return checks, []

    subject = resolved.source + (" (relations ignored)" if no_relations and resolved.spec.relations else "")
    report = _timed_report(subject, dump(spec), run)
    _emit(report, title="axiom verification", as_json=as_json, config=config, timings=timings)


@app.command()
def classify(
    d: Annotated[int, typer.Argument(min=1, help="Degree d of [e_λ f].")],
    mode: Annotated[
        str,
        typer.Option("--mode", help="quantum (vertex algebras) or classical (Poisson vertex algebras)."),
    ] = "quantum",
    alpha_zero: Annotated[
        bool,
        typer.Option("--alpha-zero", help="Quantum mode: solve the degenerate case α = 0."),
    ] = False,
    alpha: Annotated[
        str,
        typer.Option("--alpha", help="Classical mode: the value of α (0 for P = p(h))."),
    ] = "-1",
    as_json: JsonOpt = False,
) -> None:
    """List the admissible brackets [e_λ f] of degree d."""

    config = _config()
    normalized = mode.strip().lower()
    if normalized not in ("quantum", "classical"):
        raise typer.BadParameter("Unsupported mode. Use: quantum, classical.")
    if normalized == "classical" and alpha_zero:
        raise typer.BadParameter("--alpha-zero applies to quantum mode; use --alpha 0 in classical mode.")
    alpha_value = _parse_rational(alpha, option="--alpha")

    def run() -> tuple[list[CheckResult], list[str]]:
        if normalized == "classical":
            found = [s.describe() for s in classical_classify(d, alpha_value)]
            return [], found or ["no solutions"]
        if alpha_zero:
            solution = alpha0_solve(d, weight_cap=config.weight_cap)
            lines = [f"e-side: {', '.join(str(p) for p in solution.e_side) or 'none'}"]
            lines.append(f"f-side: {', '.join(str(p) for p in solution.f_side) or 'none'}")
            lines.append(f"both sides: {', '.join(str(p) for p in solution.both_sides) or 'none'}")
            return [], lines
        found = [s.describe() for s in classify_nonzero_alpha(d)]
        return [], found or ["no solutions"]

    if normalized == "classical":
        subject = f"classify d={d} classical alpha={alpha_value}"
    else:
        subject = f"classify d={d} quantum alpha={'0' if alpha_zero else 'nonzero'}"
    report = _timed_report(subject, subject, run)
    _emit(report, title="classification", as_json=as_json, config=config, timings=False)


@app.command()
def wakimoto(
    d: Annotated[int, typer.Argument(min=1, help="Degree d of the target algebra R^d_{-1}.")],
    n: Annotated[
        int | None,
        typer.Option("--n", min=0, help="Realization index 0 <= n <= d (default: all)."),
    ] = None,
    bound: Annotated[
        int | None,
        typer.Option("--bound", "-N", min=0, help="Check the bracket lemma for 0 <= m, n <= N (default: config, 4)."),
    ] = None,
    as_json: JsonOpt = False,
    timings: TimingsOpt = False,
) -> None:
    """Free-field realizations of R^d_{-1} inside the Fock algebra."""

    config = _config()
    if n is not None and n > d:
        raise typer.BadParameter("--n must satisfy 0 <= n <= d.")
    N = config.wakimoto_bound if bound is None else bound
    subject = f"wakimoto d={d} n={'all' if n is None else n} N={N}"
    report = _timed_report(subject, subject, lambda: (run_all(d, n, N, workers=worker_count_from_env()), []))
    _emit(report, title="free-field realization", as_json=as_json, config=config, timings=timings)


@app.command()
def zhu(
    target: TargetArg,
    params: ParamsArg = None,
    delta_e: Annotated[
        str | None,
        typer.Option("--delta-e", help="Conformal weight of e (default: the declared weight)."),
    ] = None,
    as_json: JsonOpt = False,
) -> None:
    """Generators and relations of the Zhu algebra."""

    config = _config()
    resolved = _resolve(target, params)
    delta = None if delta_e is None else _parse_rational(delta_e, option="--delta-e")

    def run() -> tuple[list[CheckResult], list[str]]:
        H = HamiltonianData.for_hef_family(resolved.spec, delta)
        result = presentation(resolved.spec, H, engine=Engine(resolved.spec, weight_cap=config.weight_cap))
        return closed_form_checks(resolved.spec, result), result.lines()

    report = _timed_report(resolved.source, dump(resolved.spec), run)
    _emit(report, title="Zhu algebra", as_json=as_json, config=config, timings=False)


@app.command()
def expand(
    expr: Annotated[str, typer.Argument(help='Expression or bracket, e.g. "[e _ f]" or ":h h: + 2 T h".')],
    target: TargetArg,
    params: ParamsArg = None,
    as_json: JsonOpt = False,
) -> None:
    """Evaluate an expression in an algebra and print its canonical form."""

    config = _config()
    resolved = _resolve(target, params)
    with _usage_errors("expression"):
        engine = Engine(resolved.spec, weight_cap=config.weight_cap)
        rendered = engine.render(parse_expr(expr, engine))
    if as_json or config.format == "json":
        report = Report(__version__, spec_digest(dump(resolved.spec)), resolved.source, findings=(rendered,))
        typer.echo(render_json(report))
        return
    typer.echo(rendered)


@app.command("dump")
def dump_command(target: TargetArg, params: ParamsArg = None) -> None:
    """Print the canonical declaration text of an algebra."""

    resolved = _resolve(target, params)
    typer.echo(dump(resolved.spec), nl=False)


@app.command("builtins")
def builtins_command() -> None:
    """List builtin algebras and their parameters."""

    for name in builtin_names():
        typer.echo(f"{BUILTIN_PREFIX}{name}  {BUILTIN_HELP[name]}")
