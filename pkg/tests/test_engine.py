from __future__ import annotations

from dataclasses import replace
from fractions import Fraction

import pytest

from conformalcalc.algebras import current_sl2, free_boson, lattice, poisson_p_of_h, r_minus_one
from conformalcalc.engine import Engine, Relation, UnknownGenerator, WeightOverflow
from conformalcalc.terms import DerivedGenerator, LambdaPoly, StateVector

H0 = DerivedGenerator(0)
TH0 = DerivedGenerator(0, 1)


def test_generator_brackets_follow_the_table(sl2_engine: Engine) -> None:
    h, e, f = (sl2_engine.generator(n) for n in ("h", "e", "f"))
    assert sl2_engine.bracket(h, h) == LambdaPoly({1: StateVector.vacuum(Fraction(3, 2))})
    assert sl2_engine.bracket(h, e) == LambdaPoly.constant(e)
    assert sl2_engine.bracket(e, f) == LambdaPoly({0: h.scale(2), 1: StateVector.vacuum(3)})


def test_missing_pairs_are_filled_by_skew_symmetry(sl2_engine: Engine) -> None:
    h, e, f = (sl2_engine.generator(n) for n in ("h", "e", "f"))
    assert sl2_engine.bracket(e, h) == LambdaPoly.constant(-e)
    assert sl2_engine.bracket(f, e) == LambdaPoly({0: h.scale(-2), 1: StateVector.vacuum(3)})


def test_skew_matches_the_computed_reverse_bracket(r2_engine: Engine) -> None:
    e, f = r2_engine.generator("e"), r2_engine.generator("f")
    assert r2_engine.bracket(f, e) == r2_engine.skew(r2_engine.bracket(e, f), 0)


def test_bracket_with_a_normally_ordered_product() -> None:
    engine = Engine(free_boson(1))
    h = engine.generator("h")
    hh = engine.normalize(["h", "h"])
    assert engine.bracket(h, hh) == LambdaPoly({1: h.scale(2)})
    assert engine.bracket(hh, h) == LambdaPoly({1: h.scale(2), 0: engine.generator("h", 1).scale(2)})


def test_nth_products() -> None:
    engine = Engine(free_boson(Fraction(1, 2)))
    h = engine.generator("h")
    assert engine.nth_product(h, h, 1) == StateVector.vacuum(Fraction(1, 2))
    assert engine.nth_product(h, h, 0).is_zero()
    assert engine.nth_product(h, h, -1) == engine.wick(h, h)


def test_T_is_a_derivation_of_the_free_boson_square() -> None:
    engine = Engine(free_boson(1))
    hh = engine.normalize(["h", "h"])
    assert engine.apply_T(hh) == StateVector.monomial((H0, TH0), 2)
    assert engine.apply_T(StateVector.vacuum()).is_zero()


def test_quasicommutator_correction_in_quantum_mode(r1_engine: Engine) -> None:
    h, f = r1_engine.generator("h"), r1_engine.generator("f")
    hf = StateVector.monomial((DerivedGenerator(0), DerivedGenerator(2)))
    assert r1_engine.wick(h, f) == hf
    assert r1_engine.wick(f, h) == hf + r1_engine.generator("f", 1)


def test_classical_products_commute() -> None:
    engine = Engine(poisson_p_of_h([0, 0, 1]))
    h, f = engine.generator("h"), engine.generator("f")
    assert engine.mode == "classical"
    assert engine.wick(f, h) == engine.wick(h, f)


def test_expanded_bracket_renders_canonically(r2_engine: Engine) -> None:
    e, f = r2_engine.generator("e"), r2_engine.generator("f")
    assert r2_engine.render(r2_engine.bracket(e, f)) == "L^2 - 2 L :h: - :T^1 h: + :h h:"


def test_shifted_power_rebuilds_the_defining_bracket(r3_engine: Engine) -> None:
    e, f, h = (r3_engine.generator(n) for n in ("e", "f", "h"))
    assert r3_engine.shifted_power(-h, 3, StateVector.vacuum()) == r3_engine.bracket(e, f)


def test_operator_polynomial_is_linear_in_its_coefficients(r2_engine: Engine) -> None:
    h = r2_engine.generator("h")
    vac = StateVector.vacuum()
    combined = r2_engine.operator_polynomial([1, 0, 3], -h, vac)
    separate = LambdaPoly.constant(vac) + r2_engine.shifted_power(-h, 2, vac).scale(3)
    assert combined == separate


def test_normalize_accepts_names_states_and_nested_sequences(r1_engine: Engine) -> None:
    h, e = r1_engine.generator("h"), r1_engine.generator("e")
    nested = r1_engine.normalize(["h", [e, DerivedGenerator(0)]])
    assert nested == r1_engine.wick(h, r1_engine.wick(e, h))
    assert r1_engine.normalize([]) == StateVector.vacuum()


def test_canonicalize_is_idempotent(r1_engine: Engine) -> None:
    raw = StateVector.monomial((DerivedGenerator(2), DerivedGenerator(0)))
    once = r1_engine.canonicalize(raw)
    assert r1_engine.canonicalize(once) == once


def test_parity_of_odd_lattice_generators() -> None:
    engine = Engine(lattice(1))
    assert engine.parity_of(engine.generator("e")) == 1
    assert engine.parity_of(engine.generator("h")) == 0


def test_relations_rewrite_derivatives() -> None:
    engine = Engine(lattice(2))
    assert engine.has_relations
    he = StateVector.monomial((DerivedGenerator(0), DerivedGenerator(1)))
    assert engine.reduce(engine.generator("e", 1)) == he.scale(2)


def test_reduce_without_relations_is_identity(r1_engine: Engine) -> None:
    v = r1_engine.generator("e", 2)
    assert not r1_engine.has_relations
    assert r1_engine.reduce(v) == v


def test_relation_with_several_factors_rewrites_the_innermost_product() -> None:
    hh = StateVector.monomial((H0, H0))
    spec = replace(free_boson(1), relations=(Relation(hh, StateVector.zero()),))
    engine = Engine(spec)
    assert engine.reduce(hh).is_zero()
    assert engine.reduce(StateVector.monomial((H0, H0, H0))).is_zero()
    # :h :h Th:: has :h h: outermost only
    outer = StateVector.monomial((H0, H0, TH0))
    assert engine.reduce(outer) == outer


def test_image_under_identity_map(fock_engine: Engine) -> None:
    a, b = fock_engine.generator("a"), fock_engine.generator("b")
    ab = fock_engine.normalize(["a", "b"])
    assert fock_engine.image(ab, [a, b]) == ab


def test_image_needs_every_generator(fock_engine: Engine) -> None:
    with pytest.raises(UnknownGenerator):
        fock_engine.image(fock_engine.generator("b"), [fock_engine.generator("a")])


def test_unknown_generator_name(r1_engine: Engine) -> None:
    with pytest.raises(UnknownGenerator):
        r1_engine.generator("z")


def test_weight_cap_is_enforced() -> None:
    engine = Engine(r_minus_one(1), weight_cap=3)
    with pytest.raises(WeightOverflow):
        engine.apply_T(engine.generator("h"), 5)
    with pytest.raises(WeightOverflow):
        engine.bracket(engine.generator("e", 2), engine.generator("f", 1))


def test_negative_T_power_is_rejected(r1_engine: Engine) -> None:
    with pytest.raises(ValueError):
        r1_engine.apply_T(r1_engine.generator("h"), -1)


def test_cache_info_reports_every_cache() -> None:
    engine = Engine(current_sl2(1))
    engine.bracket(engine.generator("e"), engine.normalize(["h", "f"]))
    info = engine.cache_info()
    assert set(info) == {"insert", "product", "bracket", "derivative", "integral"}
    assert info["bracket"] > 0
