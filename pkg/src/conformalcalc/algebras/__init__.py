"""Builtin algebras and the declaration format."""

from __future__ import annotations

from conformalcalc.algebras.builtins import (
    BadParameter,
    BuiltinId,
    alpha_zero,
    current_sl2,
    fock,
    free_boson,
    from_polynomial,
    lattice,
    make,
    poisson_p_of_h,
    r_minus_one,
    r_minus_one_generic,
)
from conformalcalc.algebras.loader import ParseError, dump, load, load_path, parse_expr
from conformalcalc.algebras.registry import parse_builtin, resolve

__all__ = [
    "BadParameter",
    "BuiltinId",
    "ParseError",
    "alpha_zero",
    "current_sl2",
    "dump",
    "fock",
    "free_boson",
    "from_polynomial",
    "lattice",
    "load",
    "load_path",
    "make",
    "parse_builtin",
    "parse_expr",
    "poisson_p_of_h",
    "r_minus_one",
    "r_minus_one_generic",
    "resolve",
]
