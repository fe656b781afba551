from __future__ import annotations

from fractions import Fraction

import pytest

from conformalcalc.terms import (
    DerivedGenerator,
    Generator,
    LambdaMuPoly,
    LambdaPoly,
    StateVector,
    apply_T,
    binom,
    integrate_lambda,
    render_lambda,
    render_state,
    scalar,
    substitute_lambda,
)

GENS = (Generator("h", 0, Fraction(1)), Generator("e", 0, Fraction(1)))
H = DerivedGenerator(0)
E = DerivedGenerator(1)


def test_scalar_rejects_floats() -> None:
    assert scalar("-3/2") == Fraction(-3, 2)
    with pytest.raises(TypeError):
        scalar(0.5)  # type: ignore[arg-type]


@pytest.mark.parametrize(
    ("q", "n", "expected"),
    [
        (5, 2, Fraction(10)),
        (Fraction(1, 2), 2, Fraction(-1, 8)),
        (-1, 3, Fraction(-1)),
        (3, 0, Fraction(1)),
        (3, -1, Fraction(0)),
        (2, 5, Fraction(0)),
    ],
)
def test_generalized_binomial(q: Fraction | int, n: int, expected: Fraction) -> None:
    assert binom(q, n) == expected


def test_state_vector_drops_zero_coefficients() -> None:
    v = StateVector({(H,): 2, (E,): 0})
    assert len(v) == 1
    assert (v - v).is_zero()
    assert not StateVector.zero()


def test_state_vector_arithmetic_is_exact() -> None:
    v = StateVector.generator(0).scale(Fraction(1, 3)) + StateVector.generator(0).scale(Fraction(2, 3))
    assert v == StateVector.generator(0)
    assert -v == StateVector.generator(0).scale(-1)


def test_weights_and_parities() -> None:
    v = StateVector({(H, E): 1, (DerivedGenerator(0, 1),): 1})
    assert v.weights(GENS) == {Fraction(2)}
    assert v.parities(GENS) == {0}


def test_apply_T_on_vacuum_is_zero() -> None:
    assert apply_T(StateVector.vacuum()).is_zero()


def test_apply_T_single_generator() -> None:
    assert apply_T(StateVector.generator(0)) == StateVector.generator(0, 1)


def test_apply_T_without_engine_needs_reorder_for_out_of_order_factors() -> None:
    with pytest.raises(ValueError):
        apply_T(StateVector.monomial((H, H)))


def test_lambda_poly_degree_and_derivative() -> None:
    p = LambdaPoly({0: StateVector.generator(0), 2: StateVector.vacuum(3)})
    assert p.degree == 2
    assert p.derivative() == LambdaPoly({1: StateVector.vacuum(6)})
    assert LambdaPoly().degree == -1


def test_lambda_poly_times_and_shift() -> None:
    lam = LambdaPoly({1: StateVector.vacuum()})
    p = LambdaPoly.constant(StateVector.generator(0))
    assert p.times(lam) == p.shift(1)


def test_substitute_lambda_plus_mu_expands_binomially() -> None:
    p = LambdaPoly({2: StateVector.vacuum()})
    out = substitute_lambda(p, "lambda_plus_mu")
    assert isinstance(out, LambdaMuPoly)
    assert out.coefficient(1, 1) == StateVector.vacuum(2)
    assert out.coefficient(2, 0) == StateVector.vacuum()
    assert out.coefficient(0, 2) == StateVector.vacuum()


def test_substitute_minus_lambda_minus_T() -> None:
    p = LambdaPoly({1: StateVector.generator(0)})
    out = substitute_lambda(p, "minus_lambda_minus_T", derive=apply_T)
    assert out == LambdaPoly({1: -StateVector.generator(0), 0: -StateVector.generator(0, 1)})


def test_substitute_requires_helpers() -> None:
    p = LambdaPoly({1: StateVector.vacuum()})
    with pytest.raises(ValueError):
        substitute_lambda(p, "minus_lambda_minus_T")
    with pytest.raises(ValueError):
        substitute_lambda(p, "shift_by_T")


def test_lambda_mu_swap() -> None:
    p = LambdaMuPoly({(2, 1): StateVector.vacuum()})
    assert p.swap() == LambdaMuPoly({(1, 2): StateVector.vacuum()})


def test_integrate_lambda_zero_to_lambda() -> None:
    p = LambdaPoly({1: StateVector.vacuum()})
    assert integrate_lambda(p, "zero_to_lambda") == LambdaPoly({2: StateVector.vacuum(Fraction(1, 2))})


def test_integrate_minus_T_to_zero_of_constant() -> None:
    p = LambdaPoly.constant(StateVector.generator(0))
    assert integrate_lambda(p, "minus_T_to_zero", derive=apply_T) == StateVector.generator(0, 1)


def test_render_state_and_lambda() -> None:
    v = StateVector({(H, E): 2, (): -1})
    assert render_state(v, GENS) == "-vac + 2 :h e:"
    p = LambdaPoly({0: StateVector.generator(1), 2: StateVector.vacuum(Fraction(1, 2))})
    assert render_lambda(p, GENS) == "1/2 L^2 + :e:"
    assert render_state(StateVector.zero(), GENS) == "0"
