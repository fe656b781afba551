"""
Zhu algebras of enveloping vertex algebras.

States are projected onto noncommutative words in the generators using
``π(T a) = -Δ_a π(a)`` and ``π(:a B:) = π(a) π(B) - Σ_j binom(Δ_a, j+1) π(a_(j) B)``.
Words are never reordered; commutators only appear in `presentation`.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial
from types import MappingProxyType

import sympy as sp

from conformalcalc.algebras.builtins import r_minus_one
from conformalcalc.engine import AlgebraSpec, CheckResult, Engine, ShapeMismatch
from conformalcalc.pfamily import to_rational
from conformalcalc.terms import (
    DerivedGenerator,
    Monomial,
    StateVector,
    binom,
    join_terms,
)
from conformalcalc.verify import hef_alpha
from conformalcalc.workers import ordered_map

logger = logging.getLogger(__name__)

Word = tuple[str, ...]

H_SYMBOL = sp.Symbol("h")
DELTA_E = sp.Symbol("Delta_e")


class NonHomogeneous(ValueError):
    """Raised when a conformal weight is needed for a state that has several."""


@dataclass(frozen=True, slots=True)
class ZhuWord:
    terms: Mapping[Word, Fraction] = field(default_factory=lambda: MappingProxyType({}))

    def __post_init__(self) -> None:
        cleaned = {tuple(w): Fraction(c) for w, c in self.terms.items() if c}
        object.__setattr__(self, "terms", MappingProxyType(cleaned))

    @classmethod
    def one(cls) -> ZhuWord:
        return cls({(): Fraction(1)})

    @classmethod
    def letter(cls, name: str, coeff: Fraction | int = 1) -> ZhuWord:
        return cls({(name,): Fraction(coeff)})

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __add__(self, other: ZhuWord) -> ZhuWord:
        out = dict(self.terms)
        for word, coeff in other.terms.items():
            out[word] = out.get(word, Fraction(0)) + coeff
        return ZhuWord(out)

    def __sub__(self, other: ZhuWord) -> ZhuWord:
        return self + other.scale(-1)

    def __neg__(self) -> ZhuWord:
        return self.scale(-1)

    def __mul__(self, other: ZhuWord) -> ZhuWord:
        out: dict[Word, Fraction] = {}
        for left, a in self.terms.items():
            for right, b in other.terms.items():
                word = left + right
                out[word] = out.get(word, Fraction(0)) + a * b
        return ZhuWord(out)

    def scale(self, factor: Fraction | int) -> ZhuWord:
        return ZhuWord({w: c * factor for w, c in self.terms.items()})

    @property
    def length(self) -> int:
        return max((len(w) for w in self.terms), default=0)

    def leading(self) -> tuple[Word, Fraction]:
        word = min(self.terms, key=_word_order)
        return word, self.terms[word]

    def monic(self) -> ZhuWord:
        if not self:
            return self
        return self.scale(1 / self.leading()[1])

    def as_polynomial_in(self, letter: str, symbol: sp.Symbol | None = None) -> sp.Expr:
        """Commutative polynomial for words in a single letter."""

        symbol = symbol if symbol is not None else sp.Symbol(letter)
        total = sp.Integer(0)
        for word, coeff in self.terms.items():
            if any(ch != letter for ch in word):
                raise ValueError(f"word {' '.join(word)!r} uses letters other than {letter!r}")
            total += to_rational(coeff) * symbol ** len(word)
        return sp.expand(total)

    def render(self) -> str:
        chunks: list[tuple[Fraction, str]] = []
        for word in sorted(self.terms, key=_word_order):
            coeff = self.terms[word]
            if word:
                chunks.append((coeff, " ".join(word)))
            else:
                chunks.append((Fraction(1 if coeff > 0 else -1), str(abs(coeff))))
        return join_terms(chunks)

    def __str__(self) -> str:
        return self.render()


def _word_order(word: Word) -> tuple[int, Word]:
    return -len(word), word


@dataclass(frozen=True, slots=True)
class HamiltonianData:
    """Conformal weight of each generator, in declaration order."""

    names: tuple[str, ...]
    weights: tuple[Fraction, ...]

    @classmethod
    def of_spec(cls, spec: AlgebraSpec) -> HamiltonianData:
        return cls(spec.names, tuple(g.weight for g in spec.generators))

    @classmethod
    def for_hef_family(cls, spec: AlgebraSpec, delta_e: Fraction | int | None = None) -> HamiltonianData:
        """``Δ(h) = 1``, ``Δ(e) = delta_e`` and ``Δ(e) + Δ(f)`` as declared."""

        hef_alpha(spec)
        e, f = spec.generator("e"), spec.generator("f")
        delta = e.weight if delta_e is None else Fraction(delta_e)
        return cls(spec.names, (Fraction(1), delta, e.weight + f.weight - delta))

    def factor_weight(self, factor: DerivedGenerator) -> Fraction:
        return self.weights[factor.index] + factor.order

    def monomial_weight(self, mono: Monomial) -> Fraction:
        return sum((self.factor_weight(f) for f in mono), Fraction(0))

    def weight(self, state: StateVector) -> Fraction:
        weights = {self.monomial_weight(mono) for mono in state}
        if len(weights) > 1:
            raise NonHomogeneous(f"state has weights {sorted(weights)}")
        return next(iter(weights), Fraction(0))


def star_n(a: StateVector, b: StateVector, n: int, H: HamiltonianData, engine: Engine) -> StateVector:
    """``a *_n b = Σ_j binom(Δ_a, j) a_(n+j) b``."""

    delta = H.weight(a)
    bracket = engine.bracket(a, b)
    top = max(bracket.degree, -1)
    total = StateVector.zero()
    for j in range(top - n + 1):
        m = n + j
        coeff = binom(delta, j)
        if not coeff:
            continue
        if m >= 0:
            term = bracket.coefficient(m).scale(factorial(m))
        else:
            term = engine.nth_product(a, b, m)
        total = total + term.scale(coeff)
    return total


def star_bracket(a: StateVector, b: StateVector, H: HamiltonianData, engine: Engine) -> StateVector:
    """``[a_* b] = Σ_j binom(Δ_a - 1, j) a_(j) b``."""

    delta = H.weight(a)
    total = StateVector.zero()
    for j, state in engine.bracket(a, b).items():
        total = total + state.scale(binom(delta - 1, j) * factorial(j))
    return total


class ZhuProjector:
    """Projection ``V -> Zhu_H V`` memoized per monomial."""

    def __init__(self, engine: Engine, H: HamiltonianData) -> None:
        if len(H.weights) != len(engine.spec.generators):
            raise ShapeMismatch("Hamiltonian data does not match the generators")
        self.engine = engine
        self.H = H
        self._cache: dict[Monomial, ZhuWord] = {}

    @property
    def cache_size(self) -> int:
        return len(self._cache)

    def project(self, v: StateVector) -> ZhuWord:
        total = ZhuWord()
        for mono, coeff in self.engine.canonicalize(v).items():
            total = total + self._monomial(mono).scale(coeff)
        return total

    def _factor(self, factor: DerivedGenerator) -> ZhuWord:
        delta = self.H.weights[factor.index]
        coeff = Fraction(1)
        for i in range(factor.order):
            coeff *= -(delta + i)
        return ZhuWord.letter(self.H.names[factor.index], coeff)

    def _monomial(self, mono: Monomial) -> ZhuWord:
        cached = self._cache.get(mono)
        if cached is not None:
            return cached
        if not mono:
            return ZhuWord.one()
        head, rest = mono[0], mono[1:]
        result = self._factor(head) * self._monomial(rest)
        if rest:
            delta = self.H.factor_weight(head)
            corrections = self.engine.bracket(StateVector.monomial((head,)), StateVector.monomial(rest))
            for j, state in corrections.items():
                coeff = binom(delta, j + 1) * factorial(j)
                if coeff:
                    result = result - self.project(state).scale(coeff)
        self._cache[mono] = result
        return result


def zhu_project(v: StateVector, H: HamiltonianData, engine: Engine) -> ZhuWord:
    return ZhuProjector(engine, H).project(v)


@dataclass(frozen=True, slots=True)
class ZhuPresentation:
    generators: tuple[str, ...]
    commutators: tuple[tuple[str, str, ZhuWord], ...]
    extra: tuple[ZhuWord, ...]
    hamiltonian: HamiltonianData

    def commutator(self, a: str, b: str) -> ZhuWord:
        for left, right, value in self.commutators:
            if (left, right) == (a, b):
                return value
            if (left, right) == (b, a):
                return -value
        raise KeyError(f"no commutator for ({a}, {b})")

    def lines(self) -> list[str]:
        out = [f"[{a},{b}] = {value}" for a, b, value in self.commutators]
        out.extend(f"{word} = 0" for word in self.extra)
        return out


def presentation(
    spec: AlgebraSpec,
    H: HamiltonianData | None = None,
    *,
    engine: Engine | None = None,
) -> ZhuPresentation:
    """
    Generators and relations of ``Zhu_H V`` for an h, e, f shaped algebra.

    Commutators are ``π([a_* b])`` over generator pairs; each declared relation
    ``lhs -> rhs`` contributes ``π(lhs - rhs) = 0`` scaled to a monic leading word.
    """

    hef_alpha(spec)
    if spec.generator("e").parity:
        raise ShapeMismatch("Zhu presentations are computed for even e and f")
    H = H or HamiltonianData.for_hef_family(spec)
    engine = engine or Engine(spec)
    projector = ZhuProjector(engine, H)
    names = spec.names
    commutators = []
    for i, a in enumerate(names):
        for b in names[i + 1 :]:
            value = projector.project(star_bracket(engine.generator(a), engine.generator(b), H, engine))
            commutators.append((a, b, value))
    extra: list[ZhuWord] = []
    for rel in spec.relations:
        word = projector.project(rel.lhs - rel.rhs).monic()
        if word and word not in extra:
            extra.append(word)
    logger.debug("zhu presentation of %s: %d cached monomials", spec.name, projector.cache_size)
    return ZhuPresentation(names, tuple(commutators), tuple(extra), H)


def ef_commutator(engine: Engine, delta_e: Fraction | int) -> sp.Expr:
    """``[e, f]`` in the Zhu algebra at ``Δ(e) = delta_e``, as a polynomial in ``h``."""

    H = HamiltonianData.for_hef_family(engine.spec, delta_e)
    star = star_bracket(engine.generator("e"), engine.generator("f"), H, engine)
    return zhu_project(star, H, engine).as_polynomial_in("h", H_SYMBOL)


def interpolate_commutator(
    d: int,
    points: Sequence[Fraction | int],
    *,
    workers: int | None = None,
) -> sp.Expr:
    """Interpolate ``[e, f]`` for ``R^d_{-1}`` as a polynomial in ``Δ_e`` and ``h``."""

    samples = [Fraction(p) for p in points]
    if len(set(samples)) < d + 1:
        raise ValueError(f"need at least {d + 1} distinct values of Δ_e")
    engine = Engine(r_minus_one(d))
    values = ordered_map(lambda pt: ef_commutator(engine, pt), samples, workers=workers)
    top = max((int(sp.degree(v, H_SYMBOL)) for v in values if v != 0), default=0)
    total = sp.Integer(0)
    for k in range(top + 1):
        data = [(to_rational(pt), sp.expand(v).coeff(H_SYMBOL, k)) for pt, v in zip(samples, values)]
        total += sp.interpolate(data, DELTA_E) * H_SYMBOL**k
    return sp.expand(total)


def _falling(value: sp.Expr, n: int) -> sp.Expr:
    out = sp.Integer(1)
    for i in range(n):
        out *= value - i
    return out


def _delta(delta_e: Fraction | int | None) -> sp.Expr:
    return DELTA_E if delta_e is None else to_rational(delta_e)


def smith_closed_form(d: int, delta_e: Fraction | int | None = None) -> sp.Expr:
    """``(Δ_e - h - 1)(Δ_e - h - 2)...(Δ_e - h - d)``; ``Δ_e`` stays symbolic when omitted."""

    delta = _delta(delta_e)
    out = sp.Integer(1)
    for i in range(1, d + 1):
        out *= delta - H_SYMBOL - i
    return sp.expand(out)


def smith_binomial_form(d: int, delta_e: Fraction | int | None = None) -> sp.Expr:
    """``d! binom(Δ_e - h - 1, d)``, expanded from sympy's binomial."""

    delta = _delta(delta_e)
    return sp.expand(sp.expand_func(sp.factorial(d) * sp.binomial(delta - H_SYMBOL - 1, d)))


def lattice_closed_form(beta: int) -> sp.Expr:
    """``binom(β/2 + βh - 1, β - 1)``."""

    if beta < 1:
        raise ValueError("beta must be a positive integer")
    top = sp.Rational(beta, 2) + beta * H_SYMBOL - 1
    return sp.expand(_falling(top, beta - 1) / sp.factorial(beta - 1))


def lattice_even_form(k: int) -> sp.Expr:
    """``(2k / (2k-1)!) h Π_{i<k} (4k²h² - i²)``, the β = 2k case of `lattice_closed_form`."""

    if k < 1:
        raise ValueError("k must be positive")
    out = sp.Rational(2 * k) / sp.factorial(2 * k - 1) * H_SYMBOL
    for i in range(1, k):
        out *= 4 * k**2 * H_SYMBOL**2 - i**2
    return sp.expand(out)


def commutator_soundness(
    engine: Engine,
    H: HamiltonianData,
    pairs: Iterable[tuple[str, str]] | None = None,
) -> dict[tuple[str, str], ZhuWord]:
    """``π(a *_{-1} b) - π(b *_{-1} a) - π([a_* b])`` per generator pair; all zero when sound."""

    names = engine.spec.names
    if pairs is None:
        pairs = [(a, b) for i, a in enumerate(names) for b in names[i + 1 :]]
    projector = ZhuProjector(engine, H)
    out = {}
    for a, b in pairs:
        sa, sb = engine.generator(a), engine.generator(b)
        lhs = projector.project(star_n(sa, sb, -1, H, engine)) - projector.project(star_n(sb, sa, -1, H, engine))
        out[(a, b)] = lhs - projector.project(star_bracket(sa, sb, H, engine))
    return out


def closed_form_checks(spec: AlgebraSpec, result: ZhuPresentation) -> list[CheckResult]:
    """Compare ``[e, f]`` with the known closed forms for the builtin families."""

    params = spec.parameters
    delta_e = result.hamiltonian.weights[1]
    expected: sp.Expr | None = None
    label = ""
    if "d" in params and params.get("alpha") == -1 and spec.name.startswith("r_minus_one("):
        d = int(params["d"])
        expected, label = smith_closed_form(d, delta_e), f"zhu:smith(d={d},delta_e={delta_e})"
    elif "beta" in params and spec.name.startswith("lattice(") and delta_e == params["beta"] / 2:
        beta = int(params["beta"])
        expected, label = lattice_closed_form(beta), f"zhu:lattice(beta={beta})"
    if expected is None:
        return []
    try:
        actual = result.commutator("e", "f").as_polynomial_in("h", H_SYMBOL)
    except ValueError as exc:
        return [CheckResult(label, "fail", str(exc))]
    residual = sp.expand(actual - expected)
    if residual != 0:
        return [CheckResult(label, "fail", str(residual))]
    return [CheckResult(label, "pass", detail=str(expected))]
