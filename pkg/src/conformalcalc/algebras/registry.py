from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

from conformalcalc.algebras.builtins import BUILTIN_HELP, BadParameter, BuiltinId, make
from conformalcalc.algebras.loader import load_path
from conformalcalc.engine.types import AlgebraSpec

BUILTIN_PREFIX = "builtin:"


@dataclass(frozen=True, slots=True)
class ResolvedAlgebra:
    spec: AlgebraSpec
    source: str


def builtin_names() -> tuple[str, ...]:
    return tuple(sorted(BUILTIN_HELP))


def parse_builtin(name: str, params: Sequence[str] = ()) -> BuiltinId:
    """
    Build a `BuiltinId` from ``NAME`` and ``key=value`` words.

    Coefficient lists (``p=1,0,2``) keep their commas; values are validated by
    the builtin constructor.
    """

    if name.startswith(BUILTIN_PREFIX):
        name = name[len(BUILTIN_PREFIX) :]
    words = name.split()
    if not words:
        raise BadParameter("missing builtin name")
    name, extra = words[0], [*words[1:], *params]
    if name not in BUILTIN_HELP:
        known = ", ".join(builtin_names())
        raise BadParameter(f"unknown builtin algebra: {name!r} (known: {known})")
    pairs: dict[str, str] = {}
    for word in extra:
        key, sep, value = word.partition("=")
        if not sep or not key.strip() or not value.strip():
            raise BadParameter(f"expected key=value, got {word!r}")
        key = key.strip().replace("-", "_")
        if key in pairs:
            raise BadParameter(f"parameter {key!r} given twice")
        pairs[key] = value.strip()
    return BuiltinId(name, tuple(sorted(pairs.items())))


def resolve(target: str, params: Sequence[str] = ()) -> ResolvedAlgebra:
    """Resolve ``builtin:NAME key=val...`` or a path to an algebra file."""

    if target.startswith(BUILTIN_PREFIX):
        builtin = parse_builtin(target, params)
        return ResolvedAlgebra(make(builtin), f"builtin:{builtin.describe()}")
    if params:
        raise BadParameter("key=value parameters are only accepted for builtin algebras")
    path = Path(target)
    return ResolvedAlgebra(load_path(path), str(path))
