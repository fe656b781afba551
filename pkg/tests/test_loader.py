from __future__ import annotations

from fractions import Fraction
from pathlib import Path

import pytest

from conformalcalc.algebras import (
    ParseError,
    current_sl2,
    dump,
    fock,
    lattice,
    load,
    load_path,
    parse_expr,
    poisson_p_of_h,
    r_minus_one,
)
from conformalcalc.engine import (
    AlgebraSpec,
    BracketTable,
    Engine,
    UnknownGenerator,
    ValidationError,
)
from conformalcalc.terms import Generator, LambdaPoly, StateVector

FREE_BOSON = """
# a single boson
algebra boson {
  param alpha = 1/2;
  gen h parity even weight 1;
  bracket h h = 1/2 L;
}
"""


def test_load_minimal_declaration() -> None:
    spec = load(FREE_BOSON)
    assert spec.name == "boson"
    assert spec.mode == "quantum"
    assert spec.parameters == {"alpha": Fraction(1, 2)}
    assert spec.table.get(0, 0) == LambdaPoly({1: StateVector.vacuum(Fraction(1, 2))})


@pytest.mark.parametrize(
    "spec",
    [r_minus_one(2), lattice(2), lattice(3), poisson_p_of_h([1, 0, 2]), fock(), current_sl2(Fraction(-3, 2))],
    ids=["r_minus_one", "lattice2", "lattice3", "poisson_filtered", "fock", "current"],
)
def test_dump_text_loads_back_to_the_same_algebra(spec: AlgebraSpec) -> None:
    assert load(dump(spec)) == spec


def test_dump_is_stable(r2_engine: Engine) -> None:
    text = dump(r2_engine.spec)
    assert dump(load(text)) == text
    assert "bracket e f = L^2 - 2 L :h: - :T^1 h: + :h h:;" in text


@pytest.mark.parametrize(
    ("filename", "expected"),
    [
        ("r_minus_one_d2.alg", r_minus_one(2)),
        ("current_sl2_level2.alg", current_sl2(2)),
        ("fock.alg", fock()),
    ],
)
def test_example_declarations_match_builtins(specs_dir: Path, filename: str, expected: AlgebraSpec) -> None:
    assert load_path(specs_dir / filename) == expected


def test_parse_error_reports_position() -> None:
    text = "algebra broken {\n  gen h parity even weight 1;\n  bracket h h = ;\n}\n"
    with pytest.raises(ParseError) as excinfo:
        load(text)
    assert excinfo.value.line == 3
    assert "line 3" in str(excinfo.value)


def test_unknown_generator_in_bracket() -> None:
    text = "algebra x { gen h parity even weight 1; bracket h g = 0; }"
    with pytest.raises(UnknownGenerator):
        load(text)


def test_unknown_generator_in_expression() -> None:
    text = "algebra x { gen h parity even weight 1; bracket h h = :g:; }"
    with pytest.raises(UnknownGenerator, match="unknown generator 'g'"):
        load(text)


def test_duplicate_bracket_is_rejected() -> None:
    text = "algebra x { gen h parity even weight 1; bracket h h = L; bracket h h = L; }"
    with pytest.raises(ValidationError, match="declared twice"):
        load(text)


def test_missing_pair_is_rejected() -> None:
    text = "algebra x { gen a parity even weight 1; gen b parity even weight 1; bracket a a = 0; bracket b b = 0; }"
    with pytest.raises(ValidationError, match="no bracket declared"):
        load(text)


def test_weight_mismatch_is_rejected_when_graded() -> None:
    text = "algebra x { gen h parity even weight 1; bracket h h = L + 1; }"
    with pytest.raises(ValidationError, match="weight"):
        load(text)


def test_filtered_grading_allows_lower_weights() -> None:
    text = "algebra x { grading filtered; gen h parity even weight 1; bracket h h = L + 1; }"
    assert not load(text).graded


def test_reserved_and_duplicate_names() -> None:
    table = BracketTable({(0, 0): LambdaPoly()})
    with pytest.raises(ValidationError, match="reserved"):
        AlgebraSpec(generators=(Generator("T", 0, Fraction(1)),), table=table)
    with pytest.raises(ValidationError, match="duplicate"):
        AlgebraSpec(
            generators=(Generator("a", 0, Fraction(1)), Generator("a", 0, Fraction(1))),
            table=BracketTable({(0, 0): LambdaPoly(), (0, 1): LambdaPoly(), (1, 1): LambdaPoly()}),
        )


def test_weights_must_be_half_integers() -> None:
    with pytest.raises(ValidationError, match="half-integer"):
        load("algebra x { gen h parity even weight 1/3; bracket h h = 0; }")


def test_inconsistent_declared_skew_is_rejected() -> None:
    text = (
        "algebra x { gen a parity even weight 1; gen b parity even weight 1;"
        " bracket a a = 0; bracket b b = 0; bracket a b = L; bracket b a = -L; }"
    )
    spec = load(text)
    with pytest.raises(ValidationError, match="skew-symmetry"):
        Engine(spec)


def test_relations_are_parsed() -> None:
    text = """
algebra lat {
  gen h parity even weight 1;
  gen e parity even weight 1;
  gen f parity even weight 1;
  bracket h h = 1/2 L;
  bracket h e = e;
  bracket h f = -f;
  bracket e e = 0;
  bracket f f = 0;
  bracket e f = L + 2 h;
  relation T^1 e -> 2 :h e:;
  relation T f -> -2 :h f:;
}
"""
    spec = load(text)
    assert spec.relations == lattice(2).relations


def test_parse_expr_bracket_and_states(r2_engine: Engine) -> None:
    assert r2_engine.render(parse_expr("[e _ f]", r2_engine)) == "L^2 - 2 L :h: - :T^1 h: + :h h:"
    assert r2_engine.render(parse_expr(":h h: + 2 T h", r2_engine)) == "2 :T^1 h: + :h h:"
    assert r2_engine.render(parse_expr("L :h:", r2_engine)) == "L :h:"


def test_parse_expr_nested_products_need_parentheses(r1_engine: Engine) -> None:
    nested = parse_expr(":h (:e f:):", r1_engine).coefficient(0)
    assert nested == r1_engine.normalize(["h", ["e", "f"]])


def test_parse_expr_rejects_juxtaposed_states(r1_engine: Engine) -> None:
    with pytest.raises(ValidationError, match="normally ordered product"):
        parse_expr("h e", r1_engine)


def test_parse_expr_rejects_lambda_inside_brackets(r1_engine: Engine) -> None:
    with pytest.raises(ValidationError, match="may not appear"):
        parse_expr("[e _ L]", r1_engine)
