from __future__ import annotations

import dataclasses
from fractions import Fraction
from math import factorial

import pytest
import sympy as sp

from conformalcalc.algebras import current_sl2, fock, lattice, r_minus_one, r_minus_one_generic
from conformalcalc.engine import Engine, ShapeMismatch
from conformalcalc.terms import DerivedGenerator, StateVector
from conformalcalc.zhu import (
    DELTA_E,
    H_SYMBOL,
    HamiltonianData,
    NonHomogeneous,
    ZhuProjector,
    ZhuWord,
    closed_form_checks,
    commutator_soundness,
    ef_commutator,
    interpolate_commutator,
    lattice_closed_form,
    lattice_even_form,
    presentation,
    smith_binomial_form,
    smith_closed_form,
    star_bracket,
    star_n,
    zhu_project,
)

h = H_SYMBOL


def test_words_concatenate_without_reordering() -> None:
    e, f = ZhuWord.letter("e"), ZhuWord.letter("f")
    assert (e * f - f * e).terms == {("e", "f"): 1, ("f", "e"): -1}
    assert (e * ZhuWord.one()) == e
    assert not (e - e)


def test_word_rendering_puts_longest_words_first() -> None:
    word = ZhuWord({("e",): Fraction(-1, 2), ("h", "e"): 1, (): 3})
    assert word.render() == "h e - 1/2 e + 3"
    assert ZhuWord().render() == "0"
    assert word.length == 2


def test_monic_scales_by_the_leading_word() -> None:
    word = ZhuWord({("h", "e"): -2, ("e",): 1})
    assert word.monic() == ZhuWord({("h", "e"): 1, ("e",): Fraction(-1, 2)})


def test_as_polynomial_in_rejects_other_letters() -> None:
    assert ZhuWord({("h", "h"): 1, (): -2}).as_polynomial_in("h", h) == h**2 - 2
    with pytest.raises(ValueError):
        ZhuWord.letter("e").as_polynomial_in("h")


def test_hamiltonian_for_the_hef_family() -> None:
    H = HamiltonianData.for_hef_family(r_minus_one(3), 1)
    assert H.names == ("h", "e", "f")
    assert H.weights == (Fraction(1), Fraction(1), Fraction(3))


def test_hamiltonian_weight_of_mixed_state_is_rejected(r1_engine: Engine) -> None:
    H = HamiltonianData.of_spec(r1_engine.spec)
    mixed = r1_engine.generator("h") + r1_engine.generator("e", 1)
    with pytest.raises(NonHomogeneous):
        H.weight(mixed)


@pytest.mark.parametrize("n", range(5))
def test_projection_of_derivatives(r1_engine: Engine, n: int) -> None:
    H = HamiltonianData.of_spec(r1_engine.spec)
    image = zhu_project(r1_engine.generator("h", n), H, r1_engine)
    assert image == ZhuWord.letter("h", (-1) ** n * factorial(n))


def test_projection_of_a_product_subtracts_bracket_terms(r1_engine: Engine) -> None:
    H = HamiltonianData.of_spec(r1_engine.spec)
    he = r1_engine.normalize(["h", "e"])
    assert zhu_project(he, H, r1_engine) == ZhuWord({("h", "e"): 1, ("e",): -1})


def test_projector_memoizes_monomials(r2_engine: Engine) -> None:
    projector = ZhuProjector(r2_engine, HamiltonianData.of_spec(r2_engine.spec))
    state = r2_engine.normalize(["h", "h", "e"])
    first = projector.project(state)
    size = projector.cache_size
    assert projector.project(state) == first
    assert projector.cache_size == size


def test_projector_requires_matching_weights(r1_engine: Engine) -> None:
    with pytest.raises(ShapeMismatch):
        ZhuProjector(r1_engine, HamiltonianData(("h",), (Fraction(1),)))


def test_star_products_of_the_current_algebra(sl2_engine: Engine) -> None:
    H = HamiltonianData.of_spec(sl2_engine.spec)
    e, f = sl2_engine.generator("e"), sl2_engine.generator("f")
    assert star_n(e, f, -1, H, sl2_engine) == sl2_engine.wick(e, f) + sl2_engine.generator("h").scale(2)
    assert star_bracket(e, f, H, sl2_engine) == sl2_engine.generator("h").scale(2)


def test_r_minus_one_degree_one_commutator(r1_engine: Engine) -> None:
    assert ef_commutator(r1_engine, 1) == -h


def test_r_minus_one_degree_two_commutator(r2_engine: Engine) -> None:
    assert sp.expand(ef_commutator(r2_engine, 2) - (h**2 - h)) == 0


@pytest.mark.parametrize("delta_e", [Fraction(1, 2), 1, 2, 3])
def test_degree_three_matches_closed_form(r3_engine: Engine, delta_e: Fraction | int) -> None:
    assert sp.expand(ef_commutator(r3_engine, delta_e) - smith_closed_form(3, delta_e)) == 0


def test_interpolation_recovers_symbolic_closed_form() -> None:
    assert sp.expand(interpolate_commutator(1, [0, 1, 2]) - smith_closed_form(1)) == 0
    assert sp.expand(interpolate_commutator(2, [1, 2, 3], workers=1) - smith_closed_form(2)) == 0


def test_interpolation_needs_enough_points() -> None:
    with pytest.raises(ValueError):
        interpolate_commutator(3, [1, 2, 2, 3])


@pytest.mark.parametrize("d", range(1, 7))
def test_binomial_and_product_forms_agree(d: int) -> None:
    assert sp.expand(smith_binomial_form(d) - smith_closed_form(d)) == 0


def test_closed_form_keeps_delta_symbolic() -> None:
    assert smith_closed_form(1) == DELTA_E - h - 1


@pytest.mark.parametrize("k", [1, 2, 3])
def test_even_lattice_form(k: int) -> None:
    assert sp.expand(lattice_even_form(k) - lattice_closed_form(2 * k)) == 0


def test_lattice_presentation_has_extra_relations() -> None:
    result = presentation(lattice(2))
    assert result.commutator("h", "e") == ZhuWord.letter("e")
    assert result.commutator("f", "h") == ZhuWord.letter("f")
    assert result.commutator("e", "f") == ZhuWord.letter("h", 2)
    assert result.lines() == [
        "[h,e] = e",
        "[h,f] = -f",
        "[e,f] = 2 h",
        "h e - 1/2 e = 0",
        "h f + 1/2 f = 0",
    ]


def test_commutator_lookup_requires_a_known_pair() -> None:
    result = presentation(current_sl2(1))
    with pytest.raises(KeyError):
        result.commutator("h", "x")


def test_presentation_rejects_other_shapes() -> None:
    with pytest.raises(ShapeMismatch):
        presentation(fock())
    with pytest.raises(ShapeMismatch):
        presentation(lattice(1))


def test_closed_form_checks_for_builtins() -> None:
    spec = r_minus_one(2)
    (check,) = closed_form_checks(spec, presentation(spec))
    assert check.name == "zhu:smith(d=2,delta_e=3/2)"
    assert check.ok

    (lattice_check,) = closed_form_checks(lattice(2), presentation(lattice(2)))
    assert lattice_check.name == "zhu:lattice(beta=2)"
    assert lattice_check.ok


def test_closed_form_check_fails_for_the_wrong_weight() -> None:
    spec = r_minus_one(2)
    result = presentation(spec)
    shifted = dataclasses.replace(result, hamiltonian=HamiltonianData.for_hef_family(spec, Fraction(5, 2)))
    (check,) = closed_form_checks(spec, shifted)
    assert check.name == "zhu:smith(d=2,delta_e=5/2)"
    assert not check.ok
    assert sp.expand(sp.sympify(check.residual) - (2 * h - 1)) == 0


def test_binomial_form_matches_literal_values() -> None:
    # 2! binom(3/2 - h - 1, 2) at h = 0 and Δ_e = 3/2
    assert smith_binomial_form(2, Fraction(3, 2)).subs(h, 0) == sp.Rational(-1, 4)
    assert smith_binomial_form(3, 4).subs(h, 0) == 6


def test_closed_form_checks_skip_unknown_families() -> None:
    spec = current_sl2(2)
    assert closed_form_checks(spec, presentation(spec)) == []


@pytest.mark.parametrize("spec", [current_sl2(3), r_minus_one(1), r_minus_one(2)], ids=["current", "d1", "d2"])
def test_commutators_are_sound(spec) -> None:  # type: ignore[no-untyped-def]
    engine = Engine(spec)
    residuals = commutator_soundness(engine, HamiltonianData.for_hef_family(spec))
    assert set(residuals) == {("h", "e"), ("h", "f"), ("e", "f")}
    assert all(not word for word in residuals.values())


def test_filtered_algebra_projects_homogeneous_pieces() -> None:
    spec = r_minus_one_generic([1, 0, 1])
    engine = Engine(spec)
    H = HamiltonianData.for_hef_family(spec)
    word = zhu_project(StateVector.monomial((DerivedGenerator(0), DerivedGenerator(0))), H, engine)
    assert word.terms[("h", "h")] == 1
