from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field, replace
from fractions import Fraction
from types import MappingProxyType
from typing import Literal

from conformalcalc.terms import (
    DerivedGenerator,
    Generator,
    LambdaPoly,
    Monomial,
    StateVector,
    monomial_parity,
    monomial_weight,
)

Mode = Literal["quantum", "classical"]
Status = Literal["pass", "fail"]

RESERVED_NAMES = frozenset({"T", "L", "M", "vac"})


class ValidationError(ValueError):
    """Raised when an algebra declaration violates grading, parity or coverage rules."""


class UnknownGenerator(ValueError):
    """Raised when a name does not refer to a declared generator."""


class MissingBracketEntry(ValueError):
    """Raised when a generator pair has no bracket, directly or by skew-symmetry."""


class ShapeMismatch(ValueError):
    """Raised when an algebra does not have the h, e, f shape an operation needs."""


class WeightOverflow(RuntimeError):
    """Raised when an input exceeds the configured conformal weight cap."""


class RewriteLimitExceeded(RuntimeError):
    """Raised when relation rewriting does not reach a fixpoint."""


@dataclass(frozen=True, slots=True)
class Relation:
    """
    Oriented rewrite rule ``lhs -> rhs``; the head is the largest monomial of ``lhs``.

    A one-factor head ``T^k g`` rewrites every factor ``T^m g`` with ``m >= k``
    (through ``T^{m-k}`` of the right-hand side). A head with several factors
    only rewrites the innermost factors of a monomial: ``:a :b c::`` contains
    ``:b c:`` but ``:b :c a::`` does not, since normal ordering is not associative.
    """

    lhs: StateVector
    rhs: StateVector


@dataclass(frozen=True, slots=True)
class BracketTable:
    entries: Mapping[tuple[int, int], LambdaPoly]
    mode: Mode = "quantum"

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", MappingProxyType(dict(self.entries)))

    def get(self, i: int, j: int) -> LambdaPoly | None:
        return self.entries.get((i, j))


@dataclass(frozen=True, slots=True)
class AlgebraSpec:
    generators: tuple[Generator, ...]
    table: BracketTable
    relations: tuple[Relation, ...] = ()
    parameters: Mapping[str, Fraction] = field(default_factory=lambda: MappingProxyType({}))
    name: str = field(default="algebra", compare=False)
    graded: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "generators", tuple(self.generators))
        object.__setattr__(self, "relations", tuple(self.relations))
        object.__setattr__(
            self,
            "parameters",
            MappingProxyType({k: Fraction(v) for k, v in self.parameters.items()}),
        )
        _validate(self)

    @property
    def mode(self) -> Mode:
        return self.table.mode

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(g.name for g in self.generators)

    def index(self, name: str) -> int:
        for i, gen in enumerate(self.generators):
            if gen.name == name:
                return i
        raise UnknownGenerator(f"unknown generator: {name!r}")

    def generator(self, name: str) -> Generator:
        return self.generators[self.index(name)]

    def state(self, name: str, order: int = 0) -> StateVector:
        return StateVector.generator(self.index(name), order)

    def without_relations(self) -> AlgebraSpec:
        return replace(self, relations=())

    def rescaled(self, name: str, factor: Fraction | int) -> AlgebraSpec:
        """Spec in the basis where generator ``name`` is replaced by ``factor * name``."""

        gamma = Fraction(factor)
        if not gamma:
            raise ValidationError("rescaling factor must be nonzero")
        k = self.index(name)

        def convert(v: StateVector) -> StateVector:
            return v.map_coefficients(
                lambda mono, c: c / gamma ** sum(1 for f in mono if f.index == k)
            )

        entries = {
            (i, j): poly.map_states(convert).scale(gamma ** ((i == k) + (j == k)))
            for (i, j), poly in self.table.entries.items()
        }
        relations = tuple(Relation(convert(r.lhs), convert(r.rhs)) for r in self.relations)
        return replace(
            self,
            table=BracketTable(entries, self.table.mode),
            relations=relations,
        )


def _expected_weight(spec: AlgebraSpec, i: int, j: int, n: int) -> Fraction:
    return spec.generators[i].weight + spec.generators[j].weight - n - 1


def _check_state(
    spec: AlgebraSpec, label: str, state: StateVector, weight: Fraction, parity: int
) -> None:
    gens = spec.generators
    for mono, _ in state.items():
        _check_monomial(spec, label, mono)
        w = monomial_weight(mono, gens)
        if spec.graded and w != weight:
            raise ValidationError(f"{label}: term of weight {w} where weight {weight} is required")
        if not spec.graded and w > weight:
            raise ValidationError(f"{label}: term of weight {w} exceeds the filtration bound {weight}")
        if monomial_parity(mono, gens) != parity % 2:
            raise ValidationError(f"{label}: parity is not homogeneous")


def _check_monomial(spec: AlgebraSpec, label: str, mono: Monomial) -> None:
    count = len(spec.generators)
    for pos, factor in enumerate(mono):
        if not isinstance(factor, DerivedGenerator) or not 0 <= factor.index < count:
            raise ValidationError(f"{label}: reference to an undeclared generator")
        if factor.order < 0:
            raise ValidationError(f"{label}: negative derivative order")
        if pos and mono[pos - 1] > factor:
            raise ValidationError(f"{label}: monomial factors are not in canonical order")
        if pos and mono[pos - 1] == factor and spec.generators[factor.index].parity:
            raise ValidationError(f"{label}: repeated odd factor")


def _validate(spec: AlgebraSpec) -> None:
    gens = spec.generators
    if not gens:
        raise ValidationError("an algebra needs at least one generator")
    seen: set[str] = set()
    for gen in gens:
        if gen.name in RESERVED_NAMES:
            raise ValidationError(f"generator name {gen.name!r} is reserved")
        if gen.name in seen:
            raise ValidationError(f"duplicate generator name {gen.name!r}")
        seen.add(gen.name)
        if gen.parity not in (0, 1):
            raise ValidationError(f"generator {gen.name!r}: parity must be 0 or 1")
        if gen.weight < 0 or (2 * gen.weight).denominator != 1:
            raise ValidationError(
                f"generator {gen.name!r}: weight must be a non-negative half-integer"
            )

    count = len(gens)
    for (i, j), poly in spec.table.entries.items():
        if not (0 <= i < count and 0 <= j < count):
            raise ValidationError(f"bracket entry {(i, j)} refers to an undeclared generator")
        label = f"bracket [{gens[i].name} _ {gens[j].name}]"
        for n, state in poly.items():
            _check_state(spec, label, state, _expected_weight(spec, i, j, n), gens[i].parity + gens[j].parity)

    for i in range(count):
        for j in range(i, count):
            if (i, j) not in spec.table.entries and (j, i) not in spec.table.entries:
                raise ValidationError(
                    f"no bracket declared for the pair ({gens[i].name}, {gens[j].name})"
                )

    for number, rel in enumerate(spec.relations, start=1):
        label = f"relation {number}"
        if rel.lhs.is_zero():
            raise ValidationError(f"{label}: left-hand side is zero")
        weights = rel.lhs.weights(gens) | rel.rhs.weights(gens)
        parities = rel.lhs.parities(gens) | rel.rhs.parities(gens)
        if len(weights) != 1 or len(parities) != 1:
            raise ValidationError(f"{label}: not weight- and parity-homogeneous")
        (weight,) = weights
        (parity,) = parities
        _check_state(spec, label, rel.lhs, weight, parity)
        _check_state(spec, label, rel.rhs, weight, parity)


@dataclass(frozen=True, slots=True)
class CheckResult:
    name: str
    status: Status
    residual: str = ""
    elapsed: float = 0.0
    detail: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "pass"


@dataclass(frozen=True, slots=True)
class Report:
    tool_version: str
    spec_digest: str
    subject: str
    checks: tuple[CheckResult, ...] = ()
    findings: tuple[str, ...] = ()
    wall_clock: float = 0.0

    @property
    def total(self) -> int:
        return len(self.checks)

    @property
    def passed(self) -> int:
        return sum(1 for c in self.checks if c.ok)

    @property
    def failed(self) -> int:
        return self.total - self.passed

    @property
    def ok(self) -> bool:
        return self.failed == 0


def sorted_checks(checks: Sequence[CheckResult]) -> tuple[CheckResult, ...]:
    return tuple(sorted(checks, key=lambda c: c.name))
