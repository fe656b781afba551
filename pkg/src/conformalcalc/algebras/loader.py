"""
Text format for algebra declarations.

    algebra NAME {
      mode quantum;                 # or classical
      grading graded;               # or filtered
      param alpha = -1;
      gen h parity even weight 1;
      bracket e f = L - :h:;
      relation T^1 e -> 2 :h e:;
    }

Expressions are rational combinations of ``vac``, ``L`` (λ), generators,
``T^k g`` and right-nested normally ordered products ``:g1 g2 ...:``; the
text produced by :func:`dump` parses back to the same algebra.
"""

from __future__ import annotations

import re
from collections.abc import Sequence
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from types import MappingProxyType
from typing import TYPE_CHECKING, Any

from lark import Lark, Token, Transformer, v_args
from lark.exceptions import UnexpectedInput, VisitError

from conformalcalc.engine.types import (
    AlgebraSpec,
    BracketTable,
    Mode,
    Relation,
    UnknownGenerator,
    ValidationError,
)
from conformalcalc.terms import (
    DerivedGenerator,
    Generator,
    LambdaPoly,
    StateVector,
    render_lambda,
    render_state,
)

if TYPE_CHECKING:
    from conformalcalc.engine import Engine


class ParseError(ValueError):
    """Raised when algebra or expression text does not match the grammar."""

    def __init__(self, message: str, line: int = 0, column: int = 0) -> None:
        super().__init__(f"line {line}, column {column}: {message}" if line else message)
        self.line = line
        self.column = column


GRAMMAR = r"""
    document: "algebra" NAME "{" statement* "}"

    ?statement: "mode" MODE ";"                                  -> mode_stmt
              | "grading" GRADING ";"                            -> grading_stmt
              | "param" NAME "=" SIGNED ";"                      -> param_stmt
              | "gen" NAME "parity" PARITY "weight" SIGNED ";"   -> gen_stmt
              | "bracket" NAME NAME "=" expr ";"                 -> bracket_stmt
              | "relation" expr "->" expr ";"                    -> relation_stmt

    ?expand: expr
           | "[" expr "_" expr "]"       -> bracket_expr

    ?expr: product
         | expr "+" product              -> add
         | expr "-" product              -> sub

    ?product: signed
            | product "*" signed         -> mul

    ?signed: juxt
           | "-" signed                  -> neg

    ?juxt: atom
         | juxt atom                     -> mul

    ?atom: NUMBER                        -> number
         | "vac"                         -> vac
         | "L" "^" INT                   -> lam
         | "L"                           -> lam
         | factor
         | ":" item+ ":"                 -> normal
         | "(" expr ")"

    ?item: factor
         | "(" expr ")"

    ?factor: NAME                   -> plain_factor
           | "T" "^" INT NAME        -> derived_factor
           | "T" NAME                -> first_derivative

    MODE: "quantum" | "classical"
    GRADING: "graded" | "filtered"
    PARITY: "even" | "odd"
    NUMBER: /\d+(\/\d+)?/
    SIGNED: /-?\d+(\/\d+)?/
    COMMENT: /#[^\n]*/

    %import common.CNAME -> NAME
    %import common.INT
    %import common.WS
    %ignore WS
    %ignore COMMENT
"""

_PARSER = Lark(GRAMMAR, parser="lalr", start=["document", "expand"], propagate_positions=True)


# Expression trees: tuples tagged by their first element.
Node = tuple[Any, ...]


@v_args(inline=True)
class _ToTree(Transformer):  # type: ignore[type-arg]
    def number(self, token: Token) -> Node:
        return ("num", Fraction(str(token)))

    def vac(self) -> Node:
        return ("num", Fraction(1))

    def lam(self, power: Token | None = None) -> Node:
        return ("lam", int(power) if power is not None else 1)

    def plain_factor(self, name: Token) -> Node:
        return ("gen", str(name), 0, name.line, name.column)

    def derived_factor(self, order: Token, name: Token) -> Node:
        return ("gen", str(name), int(order), name.line, name.column)

    def first_derivative(self, name: Token) -> Node:
        return ("gen", str(name), 1, name.line, name.column)

    def normal(self, *items: Node) -> Node:
        return ("normal", items)

    def add(self, a: Node, b: Node) -> Node:
        return ("add", a, b)

    def sub(self, a: Node, b: Node) -> Node:
        return ("sub", a, b)

    def mul(self, a: Node, b: Node) -> Node:
        return ("mul", a, b)

    def neg(self, a: Node) -> Node:
        return ("neg", a)

    def bracket_expr(self, a: Node, b: Node) -> Node:
        return ("bracket", a, b)

    def mode_stmt(self, token: Token) -> Node:
        return ("mode", str(token))

    def grading_stmt(self, token: Token) -> Node:
        return ("grading", str(token))

    def param_stmt(self, name: Token, value: Token) -> Node:
        return ("param", str(name), Fraction(str(value)))

    def gen_stmt(self, name: Token, parity: Token, weight: Token) -> Node:
        return ("gen_decl", str(name), 1 if str(parity) == "odd" else 0, Fraction(str(weight)), name.line)

    def bracket_stmt(self, left: Token, right: Token, value: Node) -> Node:
        return ("bracket_decl", str(left), str(right), value, left.line)

    def relation_stmt(self, lhs: Node, rhs: Node) -> Node:
        return ("relation", lhs, rhs)

    def document(self, name: Token, *statements: Node) -> Node:
        return ("document", str(name), statements)


def _parse(text: str, start: str) -> Node:
    try:
        tree = _PARSER.parse(text, start=start)
        result: Node = _ToTree().transform(tree)
    except UnexpectedInput as exc:
        line = getattr(exc, "line", 0) or 0
        column = getattr(exc, "column", 0) or 0
        raise ParseError(f"unexpected input near {exc.get_context(text).strip()!r}", line, column) from exc
    except VisitError as exc:
        raise ParseError(str(exc.orig_exc)) from exc
    return result


@dataclass(frozen=True, slots=True)
class _Evaluator:
    names: dict[str, int]
    engine: Engine | None = None

    def value(self, node: Node) -> LambdaPoly:
        tag = node[0]
        if tag == "num":
            return LambdaPoly.constant(StateVector.vacuum(node[1]))
        if tag == "lam":
            return LambdaPoly({node[1]: StateVector.vacuum()})
        if tag == "gen":
            return LambdaPoly.constant(StateVector.generator(self._index(node), node[2]))
        if tag == "normal":
            return LambdaPoly.constant(self._normal(node[1]))
        if tag == "add":
            return self.value(node[1]) + self.value(node[2])
        if tag == "sub":
            return self.value(node[1]) - self.value(node[2])
        if tag == "neg":
            return -self.value(node[1])
        if tag == "mul":
            a, b = self.value(node[1]), self.value(node[2])
            if all(v.is_scalar() for _, v in b.items()):
                return a.times(b)
            if all(v.is_scalar() for _, v in a.items()):
                return b.times(a)
            raise ValidationError("juxtaposed states must be written as a normally ordered product :a b:")
        if tag == "bracket":
            if self.engine is None:
                raise ValidationError("λ-brackets can only be evaluated against a built algebra")
            left, right = self.state(node[1]), self.state(node[2])
            return self.engine.bracket(left, right)
        raise ValidationError(f"unsupported expression node {tag!r}")

    def state(self, node: Node) -> StateVector:
        poly = self.value(node)
        if not poly.is_constant():
            raise ValidationError("λ may not appear here")
        return poly.coefficient(0)

    def _index(self, node: Node) -> int:
        name = node[1]
        if name not in self.names:
            raise UnknownGenerator(f"line {node[3]}, column {node[4]}: unknown generator {name!r}")
        return self.names[name]

    def _normal(self, items: Sequence[Node]) -> StateVector:
        if self.engine is not None:
            return self.engine.normalize([self.state(item) for item in items])
        factors = []
        for item in items:
            if item[0] != "gen":
                raise ValidationError("normally ordered products in a declaration must list generator factors")
            factors.append(DerivedGenerator(self._index(item), item[2]))
        return StateVector.monomial(tuple(factors))


def load(text: str) -> AlgebraSpec:
    """Parse and validate an algebra declaration."""

    _, name, statements = _parse(text, "document")
    mode: Mode = "quantum"
    graded = True
    params: dict[str, Fraction] = {}
    generators: list[Generator] = []
    brackets: list[Node] = []
    relations: list[Node] = []
    for stmt in statements:
        tag = stmt[0]
        if tag == "mode":
            mode = "classical" if stmt[1] == "classical" else "quantum"
        elif tag == "grading":
            graded = stmt[1] == "graded"
        elif tag == "param":
            params[stmt[1]] = stmt[2]
        elif tag == "gen_decl":
            generators.append(Generator(stmt[1], stmt[2], stmt[3]))
        elif tag == "bracket_decl":
            brackets.append(stmt)
        else:
            relations.append(stmt)

    evaluator = _Evaluator({g.name: i for i, g in enumerate(generators)})
    entries: dict[tuple[int, int], LambdaPoly] = {}
    for _, left, right, value, line in brackets:
        for gen_name in (left, right):
            if gen_name not in evaluator.names:
                raise UnknownGenerator(f"line {line}: unknown generator {gen_name!r}")
        key = (evaluator.names[left], evaluator.names[right])
        if key in entries:
            raise ValidationError(f"line {line}: bracket [{left} _ {right}] declared twice")
        entries[key] = evaluator.value(value)

    rels = tuple(Relation(evaluator.state(lhs), evaluator.state(rhs)) for _, lhs, rhs in relations)
    return AlgebraSpec(
        generators=tuple(generators),
        table=BracketTable(entries, mode),
        relations=rels,
        parameters=MappingProxyType(params),
        name=name,
        graded=graded,
    )


def load_path(path: Path) -> AlgebraSpec:
    return load(path.read_text(encoding="utf-8"))


def parse_expr(text: str, engine: Engine) -> LambdaPoly:
    """Evaluate an expression, or a bracket ``[x _ y]``, in the algebra of ``engine``."""

    node = _parse(text, "expand")
    names = {name: i for i, name in enumerate(engine.spec.names)}
    return _Evaluator(names, engine).value(node)


def _identifier(name: str) -> str:
    cleaned = re.sub(r"\W+", "_", name).strip("_")
    if not cleaned or cleaned[0].isdigit():
        cleaned = f"a_{cleaned}"
    return cleaned


def dump(spec: AlgebraSpec) -> str:
    """Canonical text of ``spec``; ``load(dump(spec)) == spec``."""

    gens = spec.generators
    lines = [f"algebra {_identifier(spec.name)} {{", f"  mode {spec.mode};"]
    if not spec.graded:
        lines.append("  grading filtered;")
    for key, value in sorted(spec.parameters.items()):
        lines.append(f"  param {key} = {value};")
    for gen in gens:
        parity = "odd" if gen.parity else "even"
        lines.append(f"  gen {gen.name} parity {parity} weight {gen.weight};")
    for (i, j), poly in sorted(spec.table.entries.items()):
        lines.append(f"  bracket {gens[i].name} {gens[j].name} = {render_lambda(poly, gens)};")
    for rel in spec.relations:
        lines.append(f"  relation {render_state(rel.lhs, gens)} -> {render_state(rel.rhs, gens)};")
    lines.append("}")
    return "\n".join(lines) + "\n"
