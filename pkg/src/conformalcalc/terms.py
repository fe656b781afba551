from __future__ import annotations

from collections.abc import Callable, Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial
from types import MappingProxyType
from typing import Literal, NamedTuple

Scalar = Fraction
Parity = Literal[0, 1]

ZERO = Fraction(0)
ONE = Fraction(1)

LambdaTarget = Literal["lambda_plus_mu", "minus_lambda_minus_T", "shift_by_T"]
IntegralBounds = Literal["zero_to_lambda", "minus_T_to_zero"]


def scalar(value: int | str | Fraction) -> Fraction:
    """Parse an exact rational (``3``, ``"-3/2"``, ``Fraction``); floats are rejected."""

    if isinstance(value, bool) or isinstance(value, float):
        raise TypeError("scalars are exact rationals; floats are not accepted")
    return Fraction(value)


def binom(q: Fraction | int, n: int) -> Fraction:
    """Generalized binomial q(q-1)...(q-n+1)/n! for rational q."""

    if n < 0:
        return ZERO
    numerator = ONE
    for i in range(n):
        numerator *= Fraction(q) - i
    return numerator / factorial(n)


@dataclass(frozen=True, slots=True)
class Generator:
    name: str
    parity: Parity
    weight: Fraction


class DerivedGenerator(NamedTuple):
    """``T^order`` applied to the generator at ``index`` (declaration order)."""

    index: int
    order: int = 0


Monomial = tuple[DerivedGenerator, ...]
VACUUM: Monomial = ()

RawState = dict[Monomial, Fraction]
RawLambda = dict[int, RawState]
Reorder = Callable[[Sequence[DerivedGenerator]], Mapping[Monomial, Fraction]]


def accumulate(acc: RawState, src: Mapping[Monomial, Fraction], coeff: Fraction = ONE) -> None:
    if not coeff:
        return
    for mono, value in src.items():
        total = acc.get(mono, ZERO) + value * coeff
        if total:
            acc[mono] = total
        else:
            acc.pop(mono, None)


def accumulate_lambda(
    acc: RawLambda, power: int, src: Mapping[Monomial, Fraction], coeff: Fraction = ONE
) -> None:
    if not src or not coeff:
        return
    target = acc.setdefault(power, {})
    accumulate(target, src, coeff)
    if not target:
        del acc[power]


def monomial_weight(mono: Monomial, generators: Sequence[Generator]) -> Fraction:
    return sum((generators[f.index].weight + f.order for f in mono), ZERO)


def monomial_parity(mono: Monomial, generators: Sequence[Generator]) -> Parity:
    return 1 if sum(generators[f.index].parity for f in mono) % 2 else 0


class StateVector:
    """Finite rational combination of canonical normally ordered monomials."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[Monomial, Fraction | int] | None = None) -> None:
        cleaned: RawState = {}
        for mono, value in (terms or {}).items():
            coeff = Fraction(value)
            if coeff:
                cleaned[tuple(DerivedGenerator(*f) for f in mono)] = coeff
        self._terms = cleaned

    @classmethod
    def _wrap(cls, terms: RawState) -> StateVector:
        # Callers hand over zero-free dictionaries they never mutate again.
        obj = cls.__new__(cls)
        obj._terms = terms
        return obj

    @classmethod
    def from_raw(cls, terms: Mapping[Monomial, Fraction]) -> StateVector:
        return cls._wrap({m: c for m, c in terms.items() if c})

    @classmethod
    def zero(cls) -> StateVector:
        return cls._wrap({})

    @classmethod
    def vacuum(cls, coeff: Fraction | int = 1) -> StateVector:
        return cls({VACUUM: coeff})

    @classmethod
    def monomial(cls, mono: Monomial, coeff: Fraction | int = 1) -> StateVector:
        return cls({mono: coeff})

    @classmethod
    def generator(cls, index: int, order: int = 0) -> StateVector:
        return cls._wrap({(DerivedGenerator(index, order),): ONE})

    @property
    def terms(self) -> Mapping[Monomial, Fraction]:
        return MappingProxyType(self._terms)

    def raw(self) -> Mapping[Monomial, Fraction]:
        return self._terms

    def items(self) -> Iterable[tuple[Monomial, Fraction]]:
        return self._terms.items()

    def coefficient(self, mono: Monomial) -> Fraction:
        return self._terms.get(mono, ZERO)

    def is_zero(self) -> bool:
        return not self._terms

    def is_scalar(self) -> bool:
        return all(not mono for mono in self._terms)

    def scalar_value(self) -> Fraction:
        return self._terms.get(VACUUM, ZERO)

    def weights(self, generators: Sequence[Generator]) -> set[Fraction]:
        return {monomial_weight(mono, generators) for mono in self._terms}

    def parities(self, generators: Sequence[Generator]) -> set[Parity]:
        return {monomial_parity(mono, generators) for mono in self._terms}

    def map_coefficients(self, fn: Callable[[Monomial, Fraction], Fraction]) -> StateVector:
        return StateVector({mono: fn(mono, c) for mono, c in self._terms.items()})

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self) -> Iterator[Monomial]:
        return iter(self._terms)

    def __add__(self, other: StateVector) -> StateVector:
        out = dict(self._terms)
        accumulate(out, other._terms)
        return StateVector._wrap(out)

    def __sub__(self, other: StateVector) -> StateVector:
        out = dict(self._terms)
        accumulate(out, other._terms, -ONE)
        return StateVector._wrap(out)

    def __neg__(self) -> StateVector:
        return StateVector._wrap({m: -c for m, c in self._terms.items()})

    def scale(self, factor: Fraction | int) -> StateVector:
        factor = Fraction(factor)
        if not factor:
            return StateVector.zero()
        return StateVector._wrap({m: c * factor for m, c in self._terms.items()})

    def __mul__(self, factor: Fraction | int) -> StateVector:
        return self.scale(factor)

    __rmul__ = __mul__

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, StateVector):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self) -> int:
        return hash(frozenset(self._terms.items()))

    def __repr__(self) -> str:
        return f"StateVector({self._terms!r})"


class LambdaPoly:
    """Polynomial in λ with StateVector coefficients."""

    __slots__ = ("_coeffs",)

    def __init__(self, coeffs: Mapping[int, StateVector] | None = None) -> None:
        self._coeffs = {n: v for n, v in (coeffs or {}).items() if v}
        if any(n < 0 for n in self._coeffs):
            raise ValueError("λ exponents must be non-negative")

    @classmethod
    def from_raw(cls, raw: Mapping[int, RawState]) -> LambdaPoly:
        obj = cls.__new__(cls)
        obj._coeffs = {n: StateVector._wrap(dict(s)) for n, s in raw.items() if s}
        return obj

    @classmethod
    def constant(cls, state: StateVector) -> LambdaPoly:
        return cls({0: state})

    @classmethod
    def zero(cls) -> LambdaPoly:
        return cls()

    def raw(self) -> dict[int, Mapping[Monomial, Fraction]]:
        return {n: v.raw() for n, v in self._coeffs.items()}

    def coefficient(self, power: int) -> StateVector:
        return self._coeffs.get(power, StateVector.zero())

    def items(self) -> list[tuple[int, StateVector]]:
        return sorted(self._coeffs.items())

    @property
    def degree(self) -> int:
        return max(self._coeffs, default=-1)

    def is_zero(self) -> bool:
        return not self._coeffs

    def is_constant(self) -> bool:
        return all(n == 0 for n in self._coeffs)

    def derivative(self) -> LambdaPoly:
        return LambdaPoly({n - 1: v.scale(n) for n, v in self._coeffs.items() if n})

    def map_states(self, fn: Callable[[StateVector], StateVector]) -> LambdaPoly:
        return LambdaPoly({n: fn(v) for n, v in self._coeffs.items()})

    def scale(self, factor: Fraction | int) -> LambdaPoly:
        return self.map_states(lambda v: v.scale(factor))

    def shift(self, power: int) -> LambdaPoly:
        """Multiply by λ^power."""

        return LambdaPoly({n + power: v for n, v in self._coeffs.items()})

    def times(self, other: LambdaPoly) -> LambdaPoly:
        """Product with a polynomial whose coefficients are multiples of the vacuum."""

        if not all(v.is_scalar() for v in other._coeffs.values()):
            raise ValueError("only scalar λ-polynomials can multiply a LambdaPoly")
        out: dict[int, StateVector] = {}
        for n, v in self._coeffs.items():
            for m, s in other._coeffs.items():
                out[n + m] = out.get(n + m, StateVector.zero()) + v.scale(s.scalar_value())
        return LambdaPoly(out)

    def __add__(self, other: LambdaPoly) -> LambdaPoly:
        out = dict(self._coeffs)
        for n, v in other._coeffs.items():
            out[n] = out[n] + v if n in out else v
        return LambdaPoly(out)

    def __sub__(self, other: LambdaPoly) -> LambdaPoly:
        return self + (-other)

    def __neg__(self) -> LambdaPoly:
        return LambdaPoly({n: -v for n, v in self._coeffs.items()})

    def __bool__(self) -> bool:
        return bool(self._coeffs)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LambdaPoly):
            return NotImplemented
        return self._coeffs == other._coeffs

    def __hash__(self) -> int:
        return hash(frozenset(self._coeffs.items()))

    def __repr__(self) -> str:
        return f"LambdaPoly({self._coeffs!r})"


class LambdaMuPoly:
    """Polynomial in λ, μ with StateVector coefficients, keyed by (λ exponent, μ exponent)."""

    __slots__ = ("_coeffs",)

    def __init__(self, coeffs: Mapping[tuple[int, int], StateVector] | None = None) -> None:
        self._coeffs = {k: v for k, v in (coeffs or {}).items() if v}

    @classmethod
    def from_raw(cls, raw: Mapping[tuple[int, int], RawState]) -> LambdaMuPoly:
        obj = cls.__new__(cls)
        obj._coeffs = {k: StateVector._wrap(dict(s)) for k, s in raw.items() if s}
        return obj

    def coefficient(self, lam: int, mu: int) -> StateVector:
        return self._coeffs.get((lam, mu), StateVector.zero())

    def items(self) -> list[tuple[tuple[int, int], StateVector]]:
        return sorted(self._coeffs.items(), key=lambda kv: (kv[0][0] + kv[0][1], kv[0]))

    def is_zero(self) -> bool:
        return not self._coeffs

    def swap(self) -> LambdaMuPoly:
        return LambdaMuPoly({(m, n): v for (n, m), v in self._coeffs.items()})

    def map_states(self, fn: Callable[[StateVector], StateVector]) -> LambdaMuPoly:
        return LambdaMuPoly({k: fn(v) for k, v in self._coeffs.items()})

    def scale(self, factor: Fraction | int) -> LambdaMuPoly:
        return self.map_states(lambda v: v.scale(factor))

    def __add__(self, other: LambdaMuPoly) -> LambdaMuPoly:
        out = dict(self._coeffs)
        for k, v in other._coeffs.items():
            out[k] = out[k] + v if k in out else v
        return LambdaMuPoly(out)

    def __sub__(self, other: LambdaMuPoly) -> LambdaMuPoly:
        return self + other.scale(-1)

    def __bool__(self) -> bool:
        return bool(self._coeffs)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LambdaMuPoly):
            return NotImplemented
        return self._coeffs == other._coeffs

    def __hash__(self) -> int:
        return hash(frozenset(self._coeffs.items()))

    def __repr__(self) -> str:
        return f"LambdaMuPoly({self._coeffs!r})"


def apply_T(v: StateVector, reorder: Reorder | None = None) -> StateVector:
    """Leibniz action of T; out-of-order factors are handed to ``reorder``."""

    out: RawState = {}
    for mono, coeff in v.items():
        for j, factor in enumerate(mono):
            bumped = DerivedGenerator(factor.index, factor.order + 1)
            if j + 1 == len(mono) or bumped < mono[j + 1]:
                accumulate(out, {mono[:j] + (bumped,) + mono[j + 1 :]: ONE}, coeff)
                continue
            if reorder is None:
                raise ValueError("reordering a derived monomial requires an engine")
            accumulate(out, reorder(mono[:j] + (bumped,) + mono[j + 1 :]), coeff)
    return StateVector._wrap(out)


def substitute_lambda(
    p: LambdaPoly,
    target: LambdaTarget,
    *,
    derive: Callable[[StateVector], StateVector] | None = None,
    combine: Callable[[int, StateVector], StateVector] | None = None,
) -> LambdaPoly | LambdaMuPoly:
    """Substitute the bracket variable.

    ``minus_lambda_minus_T`` needs ``derive`` (T on states); ``shift_by_T`` needs
    ``combine(k, c)`` returning the coefficient ``c`` multiplied by ``T^k`` of the
    designated left factor.
    """

    if target == "lambda_plus_mu":
        out_mu: dict[tuple[int, int], StateVector] = {}
        for n, state in p.items():
            for k in range(n + 1):
                key = (k, n - k)
                out_mu[key] = out_mu.get(key, StateVector.zero()) + state.scale(comb(n, k))
        return LambdaMuPoly(out_mu)

    out: dict[int, StateVector] = {}
    if target == "minus_lambda_minus_T":
        if derive is None:
            raise ValueError("minus_lambda_minus_T requires a T action")
        for n, state in p.items():
            derivatives = [state]
            for _ in range(n):
                derivatives.append(derive(derivatives[-1]))
            sign = -1 if n % 2 else 1
            for k in range(n + 1):
                term = derivatives[n - k].scale(sign * comb(n, k))
                out[k] = out.get(k, StateVector.zero()) + term
        return LambdaPoly(out)

    if target == "shift_by_T":
        if combine is None:
            raise ValueError("shift_by_T requires a left factor")
        for n, state in p.items():
            for k in range(n + 1):
                term = combine(k, state).scale(comb(n, k))
                out[n - k] = out.get(n - k, StateVector.zero()) + term
        return LambdaPoly(out)

    raise ValueError(f"unknown substitution target: {target!r}")


def integrate_lambda(
    p: LambdaPoly,
    bounds: IntegralBounds,
    *,
    derive: Callable[[StateVector], StateVector] | None = None,
) -> LambdaPoly | StateVector:
    if bounds == "zero_to_lambda":
        return LambdaPoly({n + 1: v.scale(Fraction(1, n + 1)) for n, v in p.items()})
    if bounds == "minus_T_to_zero":
        if derive is None:
            raise ValueError("minus_T_to_zero requires a T action")
        total = StateVector.zero()
        for n, state in p.items():
            lifted = state
            for _ in range(n + 1):
                lifted = derive(lifted)
            total = total + lifted.scale(Fraction((-1) ** n, n + 1))
        return total
    raise ValueError(f"unknown integration bounds: {bounds!r}")


# Rendering


def render_factor(factor: DerivedGenerator, generators: Sequence[Generator]) -> str:
    name = generators[factor.index].name
    return f"T^{factor.order} {name}" if factor.order else name


def render_monomial(mono: Monomial, generators: Sequence[Generator]) -> str:
    if not mono:
        return "vac"
    return ":" + " ".join(render_factor(f, generators) for f in mono) + ":"


def _variable(symbol: str, power: int) -> str:
    if power == 0:
        return ""
    return symbol if power == 1 else f"{symbol}^{power}"


def _body(variables: Sequence[str], mono: Monomial, generators: Sequence[Generator]) -> str:
    parts = [v for v in variables if v]
    if mono or not parts:
        parts.append(render_monomial(mono, generators))
    return " ".join(parts)


def join_terms(terms: Sequence[tuple[Fraction, str]]) -> str:
    if not terms:
        return "0"
    chunks: list[str] = []
    for position, (coeff, body) in enumerate(terms):
        magnitude = abs(coeff)
        text = body if magnitude == 1 else f"{magnitude} {body}"
        if position == 0:
            chunks.append(f"-{text}" if coeff < 0 else text)
        else:
            chunks.append(f" - {text}" if coeff < 0 else f" + {text}")
    return "".join(chunks)


def _state_terms(state: StateVector, generators: Sequence[Generator]) -> list[tuple[Monomial, Fraction]]:
    return sorted(
        state.items(),
        key=lambda kv: (monomial_weight(kv[0], generators), render_monomial(kv[0], generators)),
    )


def render_state(state: StateVector, generators: Sequence[Generator]) -> str:
    return join_terms([(c, _body((), m, generators)) for m, c in _state_terms(state, generators)])


def render_lambda(p: LambdaPoly, generators: Sequence[Generator], *, lowest_first: bool = False) -> str:
    powers = p.items() if lowest_first else list(reversed(p.items()))
    terms: list[tuple[Fraction, str]] = []
    for n, state in powers:
        for mono, coeff in _state_terms(state, generators):
            terms.append((coeff, _body((_variable("L", n),), mono, generators)))
    return join_terms(terms)


def render_lambda_mu(p: LambdaMuPoly, generators: Sequence[Generator]) -> str:
    terms: list[tuple[Fraction, str]] = []
    for (n, m), state in p.items():
        for mono, coeff in _state_terms(state, generators):
            terms.append((coeff, _body((_variable("L", n), _variable("M", m)), mono, generators)))
    return join_terms(terms)


def render(value: StateVector | LambdaPoly | LambdaMuPoly, generators: Sequence[Generator]) -> str:
    if isinstance(value, StateVector):
        return render_state(value, generators)
    if isinstance(value, LambdaPoly):
        return render_lambda(value, generators)
    return render_lambda_mu(value, generators)
