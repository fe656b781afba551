from __future__ import annotations

from fractions import Fraction
from pathlib import Path

import pytest

from conformalcalc.algebras import (
    BadParameter,
    BuiltinId,
    alpha_zero,
    current_sl2,
    free_boson,
    lattice,
    make,
    parse_builtin,
    poisson_p_of_h,
    r_minus_one,
    r_minus_one_generic,
    resolve,
)
from conformalcalc.algebras.registry import builtin_names


def test_builtin_names_are_sorted_and_complete() -> None:
    names = builtin_names()
    assert list(names) == sorted(names)
    assert set(names) == {
        "alpha_zero",
        "current_sl2",
        "fock",
        "free_boson",
        "lattice",
        "poisson_p_of_h",
        "r_minus_one",
        "r_minus_one_generic",
    }


def test_parse_builtin_accepts_inline_and_separate_parameters() -> None:
    expected = BuiltinId("r_minus_one", (("d", "3"),))
    assert parse_builtin("builtin:r_minus_one", ["d=3"]) == expected
    assert parse_builtin("r_minus_one d=3") == expected


def test_parse_builtin_normalizes_dashes() -> None:
    builtin = parse_builtin("builtin:r_minus_one", ["d=2", "delta-e=1/2"])
    assert dict(builtin.params) == {"d": "2", "delta_e": "1/2"}


@pytest.mark.parametrize(
    ("name", "params", "message"),
    [
        ("builtin:nope", [], "unknown builtin algebra"),
        ("builtin:lattice", ["beta"], "expected key=value"),
        ("builtin:lattice", ["beta=2", "beta=3"], "given twice"),
        ("builtin:", [], "missing builtin name"),
    ],
)
def test_parse_builtin_errors(name: str, params: list[str], message: str) -> None:
    with pytest.raises(BadParameter, match=message):
        parse_builtin(name, params)


def test_make_validates_parameters() -> None:
    with pytest.raises(BadParameter, match="needs `d=...`"):
        make(BuiltinId("r_minus_one"))
    with pytest.raises(BadParameter, match="unexpected parameters"):
        make(BuiltinId.of("fock", d=2))
    with pytest.raises(BadParameter, match="must be an integer"):
        make(BuiltinId.of("lattice", beta="x"))
    with pytest.raises(BadParameter, match=">= 1"):
        make(BuiltinId.of("alpha_zero", d=0))


def test_make_is_memoized() -> None:
    builtin = BuiltinId.of("r_minus_one", d=2)
    assert make(builtin) is make(builtin)
    assert make(builtin) == r_minus_one(2)


def test_resolve_builtin_source_label() -> None:
    resolved = resolve("builtin:lattice", ["beta=2"])
    assert resolved.source == "builtin:lattice(beta=2)"
    assert resolved.spec == lattice(2)


def test_resolve_rejects_parameters_for_files(specs_dir: Path) -> None:
    with pytest.raises(BadParameter):
        resolve(str(specs_dir / "fock.alg"), ["d=1"])


def test_resolve_reads_files(specs_dir: Path) -> None:
    resolved = resolve(str(specs_dir / "fock.alg"))
    assert resolved.spec.names == ("a", "b")
    assert resolved.source.endswith("fock.alg")


def test_r_minus_one_weights_default_to_the_midpoint() -> None:
    spec = r_minus_one(2)
    assert spec.generator("e").weight == Fraction(3, 2)
    assert spec.generator("f").weight == Fraction(3, 2)
    shifted = r_minus_one(2, delta_e=1)
    assert shifted.generator("f").weight == 2
    assert shifted.parameters["delta_e"] == 1


def test_r_minus_one_rejects_bad_input() -> None:
    with pytest.raises(BadParameter):
        r_minus_one(0)
    with pytest.raises(BadParameter):
        r_minus_one(1, delta_e=3)


def test_generic_p_reproduces_the_power_family() -> None:
    assert r_minus_one_generic([0, 1]) == r_minus_one(1)
    with pytest.raises(BadParameter):
        r_minus_one_generic([5])


def test_lattice_shape() -> None:
    spec = lattice(3)
    assert spec.parameters["alpha"] == Fraction(1, 3)
    assert spec.generator("e").parity == 1
    assert spec.generator("f").weight == Fraction(3, 2)
    assert len(spec.relations) == 2
    with pytest.raises(BadParameter):
        lattice(0)


def test_current_algebra_parameters() -> None:
    spec = current_sl2(Fraction(1, 2))
    assert spec.parameters == {"k": Fraction(1, 2)}
    assert spec.mode == "quantum"


def test_poisson_family_is_classical_and_possibly_filtered() -> None:
    assert poisson_p_of_h([0, 0, 1]).graded
    filtered = poisson_p_of_h([1, 0, 2])
    assert filtered.mode == "classical"
    assert not filtered.graded
    with pytest.raises(BadParameter):
        poisson_p_of_h([3, 0])


def test_free_boson_default_level() -> None:
    assert make(BuiltinId("free_boson")) == free_boson(1)


def test_alpha_zero_family() -> None:
    spec = alpha_zero(2)
    assert spec.parameters["alpha"] == 0
    assert spec.graded
