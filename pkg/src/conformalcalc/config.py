from __future__ import annotations

import tomllib
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Literal

from conformalcalc.engine.rewrite import DEFAULT_WEIGHT_CAP
from conformalcalc.verify import DEFAULT_MAX_WEIGHT, DEFAULT_PROPERTY_CASES
from conformalcalc.wakimoto import DEFAULT_BOUND


class ConfigError(ValueError):
    """Raised when the `[tool.conformalcalc]` table is invalid."""


OutputFormat = Literal["text", "json"]

DEFAULT_SEED = 0
DEFAULT_FORMAT: OutputFormat = "text"
_FORMATS = ("text", "json")


@dataclass(frozen=True, slots=True)
class CalcConfig:
    weight_cap: int = DEFAULT_WEIGHT_CAP
    max_weight: int = DEFAULT_MAX_WEIGHT
    wakimoto_bound: int = DEFAULT_BOUND
    seed: int = DEFAULT_SEED
    property_cases: int = DEFAULT_PROPERTY_CASES
    format: OutputFormat = DEFAULT_FORMAT


def load_config(project_dir: Path | str = ".") -> CalcConfig:
    """
    Load conformalcalc configuration from `pyproject.toml` within `project_dir`.

    If no file / no `[tool.conformalcalc]` table exists, returns defaults.
    """

    pyproject_path = Path(project_dir) / "pyproject.toml"
    if not pyproject_path.exists():
        return CalcConfig()

    try:
        data = tomllib.loads(pyproject_path.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"Invalid TOML in {pyproject_path}: {exc}") from exc

    tool_table = data.get("tool", {})
    if not isinstance(tool_table, dict):
        return CalcConfig()

    table = tool_table.get("conformalcalc", {})
    if not isinstance(table, dict):
        raise ConfigError("`tool.conformalcalc` must be a table.")
    if not table:
        return CalcConfig()

    return _parse_table(table)


def _lookup(table: dict[str, Any], key: str, default: Any) -> Any:
    return table.get(key, table.get(key.replace("-", "_"), default))


def _int_field(table: dict[str, Any], key: str, default: int, *, minimum: int) -> int:
    value = _lookup(table, key, default)
    if not isinstance(value, int) or isinstance(value, bool):
        raise ConfigError(f"`tool.conformalcalc.{key}` must be an integer.")
    if value < minimum:
        if minimum == 1:
            raise ConfigError(f"`tool.conformalcalc.{key}` must be a positive integer.")
        raise ConfigError(f"`tool.conformalcalc.{key}` must be >= {minimum}.")
    return value


def _parse_table(table: dict[str, Any]) -> CalcConfig:
    known = {"weight-cap", "max-weight", "wakimoto-bound", "seed", "property-cases", "format"}
    for key in table:
        if str(key).replace("_", "-") not in known:
            raise ConfigError(f"`tool.conformalcalc` contains unknown key: {key!r}.")

    fmt = _lookup(table, "format", DEFAULT_FORMAT)
    if not isinstance(fmt, str):
        raise ConfigError("`tool.conformalcalc.format` must be a string.")
    fmt = fmt.strip().lower()
    if fmt not in _FORMATS:
        raise ConfigError("`tool.conformalcalc.format` must be one of: json, text.")

    return CalcConfig(
        weight_cap=_int_field(table, "weight-cap", DEFAULT_WEIGHT_CAP, minimum=1),
        max_weight=_int_field(table, "max-weight", DEFAULT_MAX_WEIGHT, minimum=1),
        wakimoto_bound=_int_field(table, "wakimoto-bound", DEFAULT_BOUND, minimum=0),
        seed=_int_field(table, "seed", DEFAULT_SEED, minimum=0),
        property_cases=_int_field(table, "property-cases", DEFAULT_PROPERTY_CASES, minimum=0),
        format="json" if fmt == "json" else "text",
    )
