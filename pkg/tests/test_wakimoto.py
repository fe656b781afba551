from __future__ import annotations

from fractions import Fraction

import pytest

from conformalcalc.engine import Engine
from conformalcalc.terms import LambdaPoly, StateVector
from conformalcalc.wakimoto import (
    build,
    check_lemma,
    check_pi,
    check_pi_pairs,
    check_skew_cross,
    kernel_witness,
    pi_images,
    run_all,
)


def test_family_starts_from_the_fock_generators(fock_engine: Engine) -> None:
    family = build(1, engine=fock_engine)
    a, b = fock_engine.generator("a"), fock_engine.generator("b")
    assert family.E[0] == a
    assert family.F[0] == b
    assert family.H == -fock_engine.normalize(["a", "b"])
    assert family.F[1] == fock_engine.wick(family.H, b) - fock_engine.generator("b", 1)


def test_family_weights(fock_engine: Engine) -> None:
    weights = build(3, engine=fock_engine).weights(fock_engine)
    assert weights["H"] == {Fraction(1)}
    for n in range(4):
        assert weights[f"E_{n}"] == {Fraction(n + 1)}
        assert weights[f"F_{n}"] <= {Fraction(n)}


def test_negative_bound_is_rejected() -> None:
    with pytest.raises(ValueError):
        build(-1)


def test_H_is_a_free_boson_of_level_minus_one(fock_engine: Engine) -> None:
    family = build(0, engine=fock_engine)
    assert fock_engine.bracket(family.H, family.H) == LambdaPoly({1: StateVector.vacuum(-1)})


def test_bracket_lemma_up_to_three(fock_engine: Engine) -> None:
    results = check_lemma(3, engine=fock_engine, workers=1)
    assert [r.name for r in results if not r.ok] == []
    names = {r.name for r in results}
    assert {"lemma:HH", "lemma:EF(1,2)", "lemma:wick_EF(3,0)", "lemma:weights(3)"} <= names


def test_skew_cross_checks(fock_engine: Engine) -> None:
    results = check_skew_cross(2, engine=fock_engine)
    assert len(results) == 9
    assert all(r.ok for r in results)


def test_pi_images_scale_the_f_image(fock_engine: Engine) -> None:
    family = build(2, engine=fock_engine)
    h_img, e_img, f_img = pi_images(2, 1, family)
    assert h_img == family.H
    assert e_img == family.E[1]
    assert f_img == family.F[1].scale(Fraction(1, 3))


def test_pi_images_validate_indices(fock_engine: Engine) -> None:
    family = build(1, engine=fock_engine)
    with pytest.raises(ValueError):
        pi_images(1, 2, family)
    with pytest.raises(ValueError):
        pi_images(2, 0, family)


@pytest.mark.parametrize(("d", "n"), [(1, 0), (1, 1), (2, 0), (2, 2)])
def test_pi_is_a_homomorphism(fock_engine: Engine, d: int, n: int) -> None:
    result = check_pi(d, n, engine=fock_engine)
    assert result.ok, result.residual
    assert result.name == f"pi(d={d},n={n})"


def test_pi_pair_checks_include_weights(fock_engine: Engine) -> None:
    results = check_pi_pairs(1, 0, engine=fock_engine)
    assert len(results) == 10
    assert results[-1].name == "pi(d=1,n=0):weights"
    assert all(r.ok for r in results)


@pytest.mark.parametrize(("d", "n"), [(1, 0), (2, 1)])
def test_kernel_witness_vanishes(fock_engine: Engine, d: int, n: int) -> None:
    result = kernel_witness(d, n, engine=fock_engine)
    assert result.ok, result.residual
    assert result.detail


def test_run_all_for_one_realization() -> None:
    results = run_all(1, 0, 1, workers=1)
    names = [r.name for r in results]
    assert names == sorted(names)
    assert "pi(d=1,n=0)" in names
    assert "kernel(d=1,n=0)" in names
    assert all(r.ok for r in results)
