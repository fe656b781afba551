from __future__ import annotations

import logging
import random
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial
from typing import Union

from conformalcalc.engine.types import (
    AlgebraSpec,
    MissingBracketEntry,
    Mode,
    Relation,
    RewriteLimitExceeded,
    UnknownGenerator,
    ValidationError,
    WeightOverflow,
)
from conformalcalc.terms import (
    ONE,
    VACUUM,
    DerivedGenerator,
    LambdaMuPoly,
    LambdaPoly,
    Monomial,
    RawLambda,
    RawState,
    StateVector,
    accumulate,
    accumulate_lambda,
    apply_T,
    monomial_weight,
    render,
    substitute_lambda,
)

logger = logging.getLogger(__name__)

DEFAULT_WEIGHT_CAP = 64
DEFAULT_REWRITE_LIMIT = 1000

# A leaf is a state, a derived generator or a generator name; a sequence is the
# right-nested normally ordered product of its children (empty = vacuum).
ProductTree = Union[StateVector, DerivedGenerator, str, Sequence["ProductTree"]]


@dataclass(frozen=True, slots=True)
class _Rule:
    head: Monomial
    replacement: RawState


def _head_key(mono: Monomial) -> tuple[int, int, Monomial]:
    return (sum(f.order for f in mono), len(mono), mono)


class Engine:
    """
    λ-bracket and normal-ordering engine for one AlgebraSpec.

    Every state handled internally is a combination of canonical monomials:
    right-nested products whose factors are sorted by (generator index, T order)
    with no repeated odd factor. Memo caches are plain per-engine dictionaries;
    entries are written once and never mutated, so concurrent readers see
    either a miss or the final value.
    """

    def __init__(
        self,
        spec: AlgebraSpec,
        *,
        weight_cap: int = DEFAULT_WEIGHT_CAP,
        rewrite_limit: int = DEFAULT_REWRITE_LIMIT,
    ) -> None:
        self.spec = spec
        self.weight_cap = weight_cap
        self.rewrite_limit = rewrite_limit
        self._classical = spec.mode == "classical"
        self._parity = tuple(g.parity for g in spec.generators)

        self._insert_cache: dict[tuple[DerivedGenerator, Monomial], RawState] = {}
        self._product_cache: dict[tuple[Monomial, Monomial], RawState] = {}
        self._bracket_cache: dict[tuple[Monomial, Monomial], RawLambda] = {}
        self._derivative_cache: dict[Monomial, RawState] = {}
        self._integral_cache: dict[tuple[DerivedGenerator, DerivedGenerator], RawState] = {}
        self._base: dict[tuple[int, int], RawLambda] = {}
        self._pending: set[tuple[int, int]] = set()

        # Complete the generator table up front so later lookups never write it.
        count = len(spec.generators)
        for i in range(count):
            for j in range(count):
                self._base_pair(i, j)
        self._check_declared_skew()
        self._rules = tuple(self._prepare_rule(rel) for rel in spec.relations)
        logger.debug(
            "engine ready for %s (%s mode, %d generators, %d relations)",
            spec.name,
            spec.mode,
            count,
            len(self._rules),
        )

    # Public API

    @property
    def mode(self) -> Mode:
        return self.spec.mode

    def generator(self, name: str, order: int = 0) -> StateVector:
        return self.spec.state(name, order)

    def render(self, value: StateVector | LambdaPoly | LambdaMuPoly) -> str:
        return render(value, self.spec.generators)

    def canonicalize(self, v: StateVector) -> StateVector:
        self._guard(v)
        return StateVector.from_raw(self._canonical_raw(v))

    def bracket(self, u: StateVector, v: StateVector) -> LambdaPoly:
        self._guard(u, v)
        raw = self._bracket_state(self._canonical_raw(u), self._canonical_raw(v))
        return LambdaPoly.from_raw(raw)

    def wick(self, u: StateVector, v: StateVector) -> StateVector:
        self._guard(u, v)
        return StateVector.from_raw(self._product_state(self._canonical_raw(u), self._canonical_raw(v)))

    def normalize(self, expr: ProductTree) -> StateVector:
        return StateVector.from_raw(self._evaluate(expr))

    def nth_product(self, u: StateVector, v: StateVector, n: int) -> StateVector:
        """``u_(n) v`` for any integer ``n``."""

        if n >= 0:
            return self.bracket(u, v).coefficient(n).scale(factorial(n))
        m = -n - 1
        return self.wick(self.apply_T(u, m), v).scale(Fraction(1, factorial(m)))

    def apply_T(self, v: StateVector, times: int = 1) -> StateVector:
        if times < 0:
            raise ValueError("T can only be applied a non-negative number of times")
        self._guard(v)
        if max(v.weights(self.spec.generators), default=0) + times > self.weight_cap:
            raise WeightOverflow(f"weight cap {self.weight_cap} exceeded")
        return StateVector.from_raw(self._derive(self._canonical_raw(v), times))

    def apply_T_lambda(self, p: LambdaPoly) -> LambdaPoly:
        return p.map_states(self.apply_T)

    def skew(self, p: LambdaPoly, parity_product: int) -> LambdaPoly:
        """``-(-1)^{p(a)p(b)} p(-λ-T)``: turns ``[a_λ b]`` into ``[b_λ a]``."""

        flipped = substitute_lambda(p, "minus_lambda_minus_T", derive=self.apply_T)
        assert isinstance(flipped, LambdaPoly)
        return flipped.scale(1 if parity_product % 2 else -1)

    def parity_of(self, v: StateVector) -> int:
        parities = v.parities(self.spec.generators)
        if len(parities) > 1:
            raise ValueError("state is not parity-homogeneous")
        return next(iter(parities), 0)

    def image(self, v: StateVector, images: Sequence[StateVector]) -> StateVector:
        """Image of ``v`` under the homomorphism sending source generator ``i`` to ``images[i]``."""

        targets = [self._canonical_raw(img) for img in images]
        out: RawState = {}
        for mono, coeff in v.items():
            acc: RawState = {VACUUM: ONE}
            for factor in reversed(mono):
                if not 0 <= factor.index < len(targets):
                    raise UnknownGenerator(f"no image declared for generator #{factor.index}")
                acc = self._product_state(self._derive(targets[factor.index], factor.order), acc)
            accumulate(out, acc, coeff)
        return StateVector.from_raw(out)

    def shifted_power(
        self,
        shift: StateVector,
        power: int,
        start: StateVector,
        *,
        lam: Fraction | int = 1,
        t: Fraction | int = 1,
    ) -> LambdaPoly:
        """``:(lam·λ + t·T + shift)^power start:`` with T acting rightward."""

        if power < 0:
            raise ValueError("power must be non-negative")
        return self.operator_polynomial([0] * power + [1], shift, start, lam=lam, t=t)

    def operator_polynomial(
        self,
        coeffs: Sequence[Fraction | int],
        shift: StateVector,
        start: StateVector,
        *,
        lam: Fraction | int = 1,
        t: Fraction | int = 1,
    ) -> LambdaPoly:
        """``Σ coeffs[k] :(lam·λ + t·T + shift)^k start:`` (coefficients low to high)."""

        self._guard(shift, start)
        shift_raw = self._canonical_raw(shift)
        current: RawLambda = {}
        accumulate_lambda(current, 0, self._canonical_raw(start))
        total: RawLambda = {}
        for k, coeff in enumerate(coeffs):
            if k:
                current = self._operator_step(current, shift_raw, Fraction(lam), Fraction(t))
            for n, state in current.items():
                accumulate_lambda(total, n, state, Fraction(coeff))
        return LambdaPoly.from_raw(total)

    def reduce(self, v: StateVector, *, rng: random.Random | None = None) -> StateVector:
        """
        Rewrite ``v`` with the declared relations until no relation head occurs.

        Heads with several factors match only the trailing factors of a
        monomial; see :class:`Relation`.
        """

        return StateVector.from_raw(self._reduce_raw(self._canonical_raw(v), rng))

    def reduce_lambda(self, p: LambdaPoly, *, rng: random.Random | None = None) -> LambdaPoly:
        if not self._rules:
            return p
        return p.map_states(lambda v: self.reduce(v, rng=rng))

    def reduce_lambda_mu(self, p: LambdaMuPoly, *, rng: random.Random | None = None) -> LambdaMuPoly:
        if not self._rules:
            return p
        return p.map_states(lambda v: self.reduce(v, rng=rng))

    @property
    def has_relations(self) -> bool:
        return bool(self._rules)

    def cache_info(self) -> dict[str, int]:
        return {
            "insert": len(self._insert_cache),
            "product": len(self._product_cache),
            "bracket": len(self._bracket_cache),
            "derivative": len(self._derivative_cache),
            "integral": len(self._integral_cache),
        }

    # Input checks

    def _guard(self, *states: StateVector) -> None:
        gens = self.spec.generators
        total = Fraction(0)
        for state in states:
            top = Fraction(0)
            for mono in state:
                for factor in mono:
                    if not 0 <= factor.index < len(gens):
                        raise UnknownGenerator(f"unknown generator #{factor.index}")
                top = max(top, monomial_weight(mono, gens))
            total += top
        if total > self.weight_cap:
            raise WeightOverflow(
                f"input weight {total} exceeds the weight cap {self.weight_cap}"
            )

    def _is_canonical(self, mono: Monomial) -> bool:
        for left, right in zip(mono, mono[1:]):
            if left > right or (left == right and self._parity[left.index]):
                return False
        return True

    def _canonical_raw(self, v: StateVector) -> RawState:
        out: RawState = {}
        for mono, coeff in v.items():
            if self._is_canonical(mono):
                accumulate(out, {mono: ONE}, coeff)
            else:
                accumulate(out, self._nest_sequence(mono), coeff)
        return out

    def _evaluate(self, expr: ProductTree) -> RawState:
        if isinstance(expr, StateVector):
            self._guard(expr)
            return self._canonical_raw(expr)
        if isinstance(expr, DerivedGenerator):
            if not 0 <= expr.index < len(self.spec.generators):
                raise UnknownGenerator(f"unknown generator #{expr.index}")
            return {(expr,): ONE}
        if isinstance(expr, str):
            return {(DerivedGenerator(self.spec.index(expr)),): ONE}
        acc: RawState = {VACUUM: ONE}
        for part in reversed([self._evaluate(child) for child in expr]):
            acc = self._product_state(part, acc)
        return acc

    # Generator table

    def _base_pair(self, i: int, j: int) -> RawLambda:
        cached = self._base.get((i, j))
        if cached is not None:
            return cached
        gens = self.spec.generators
        declared = self.spec.table.get(i, j)
        if declared is not None:
            raw: RawLambda = {n: dict(state.raw()) for n, state in declared.items()}
        else:
            other = self.spec.table.get(j, i)
            if other is None or (i, j) in self._pending:
                raise MissingBracketEntry(
                    f"cannot derive [{gens[i].name} _ {gens[j].name}] from the declared table"
                )
            self._pending.add((i, j))
            try:
                raw = self._skew_raw(
                    {n: state.raw() for n, state in other.items()},
                    self._parity[i] * self._parity[j],
                )
            finally:
                self._pending.discard((i, j))
        self._base[(i, j)] = raw
        return raw

    def _skew_raw(
        self, p: Mapping[int, Mapping[Monomial, Fraction]], parity_product: int
    ) -> RawLambda:
        sign = ONE if parity_product % 2 else -ONE
        out: RawLambda = {}
        for n, state in p.items():
            derivatives: list[RawState] = [dict(state)]
            for _ in range(n):
                derivatives.append(self._derive(derivatives[-1]))
            for k in range(n + 1):
                coeff = sign * (-1) ** n * comb(n, k)
                accumulate_lambda(out, k, derivatives[n - k], Fraction(coeff))
        return out

    def _check_declared_skew(self) -> None:
        gens = self.spec.generators
        for (i, j), entry in self.spec.table.entries.items():
            if i > j and (j, i) in self.spec.table.entries:
                continue
            if i != j and (j, i) not in self.spec.table.entries:
                continue
            expected = self._skew_raw(
                {n: state.raw() for n, state in entry.items()},
                self._parity[i] * self._parity[j],
            )
            if expected != self._base[(j, i)]:
                raise ValidationError(
                    f"declared brackets [{gens[i].name} _ {gens[j].name}] and "
                    f"[{gens[j].name} _ {gens[i].name}] violate skew-symmetry"
                )

    # Derivation

    def _t_mono(self, mono: Monomial) -> RawState:
        cached = self._derivative_cache.get(mono)
        if cached is None:
            cached = dict(apply_T(StateVector.monomial(mono), self._nest_sequence).raw())
            self._derivative_cache[mono] = cached
        return cached

    def _derive(self, state: RawState, times: int = 1) -> RawState:
        current = state
        for _ in range(times):
            out: RawState = {}
            for mono, coeff in current.items():
                accumulate(out, self._t_mono(mono), coeff)
            current = out
        return current

    # Normal ordering

    def _nest_sequence(self, factors: Sequence[DerivedGenerator]) -> RawState:
        state: RawState = {VACUUM: ONE}
        for factor in reversed(factors):
            state = self._insert_state(factor, state)
        return state

    def _insert_state(self, factor: DerivedGenerator, state: RawState) -> RawState:
        out: RawState = {}
        for mono, coeff in state.items():
            accumulate(out, self._insert(factor, mono), coeff)
        return out

    def _insert(self, x: DerivedGenerator, mono: Monomial) -> RawState:
        """Canonical form of ``:x mono:`` for a canonical ``mono``."""

        key = (x, mono)
        cached = self._insert_cache.get(key)
        if cached is not None:
            return cached
        result: RawState
        if not mono or x < mono[0] or (x == mono[0] and not self._parity[x.index]):
            result = {(x,) + mono: ONE}
        elif x == mono[0]:
            # :x x C: for odd x
            result = {}
            if not self._classical:
                half = self._product_state(self._qcom_integral(x, x), {mono[1:]: ONE})
                accumulate(result, half, Fraction(1, 2))
        else:
            y, rest = mono[0], mono[1:]
            sign = -ONE if self._parity[x.index] and self._parity[y.index] else ONE
            result = {}
            for inner, coeff in self._insert(x, rest).items():
                accumulate(result, self._insert(y, inner), coeff * sign)
            if not self._classical:
                accumulate(result, self._product_state(self._qcom_integral(x, y), {rest: ONE}))
        self._insert_cache[key] = result
        return result

    def _qcom_integral(self, x: DerivedGenerator, y: DerivedGenerator) -> RawState:
        """``∫_{-T}^0 [x_λ y] dλ``."""

        key = (x, y)
        cached = self._integral_cache.get(key)
        if cached is not None:
            return cached
        out: RawState = {}
        for n, state in self._bracket_mono((x,), (y,)).items():
            accumulate(out, self._derive(state, n + 1), Fraction((-1) ** n, n + 1))
        self._integral_cache[key] = out
        return out

    def _product_state(self, left: RawState, right: RawState) -> RawState:
        out: RawState = {}
        for a, ca in left.items():
            for b, cb in right.items():
                accumulate(out, self._product_mono(a, b), ca * cb)
        return out

    def _product_mono(self, a_mono: Monomial, b_mono: Monomial) -> RawState:
        if not a_mono:
            return {b_mono: ONE}
        if not b_mono:
            return {a_mono: ONE}
        key = (a_mono, b_mono)
        cached = self._product_cache.get(key)
        if cached is not None:
            return cached
        a, rest = a_mono[0], a_mono[1:]
        if not rest:
            result = self._insert(a, b_mono)
        else:
            result = {}
            for mono, coeff in self._product_mono(rest, b_mono).items():
                accumulate(result, self._insert(a, mono), coeff)
            if not self._classical:
                # :(:a A:)B: - :a:AB:: = :(∫_0^T a)[A_λ B]: + p(a,A) :(∫_0^T A)[a_λ B]:
                for n, state in self._bracket_mono(rest, b_mono).items():
                    shifted = DerivedGenerator(a.index, a.order + n + 1)
                    accumulate(result, self._insert_state(shifted, state), Fraction(1, n + 1))
                sign = self._sign(a_mono[:1], rest)
                for n, state in self._bracket_mono(a_mono[:1], b_mono).items():
                    lifted = self._derive({rest: ONE}, n + 1)
                    accumulate(result, self._product_state(lifted, state), sign / (n + 1))
        self._product_cache[key] = result
        return result

    def _sign(self, left: Monomial, right: Monomial) -> Fraction:
        pl = sum(self._parity[f.index] for f in left)
        pr = sum(self._parity[f.index] for f in right)
        return -ONE if pl % 2 and pr % 2 else ONE

    # Brackets

    def _bracket_state(self, left: RawState, right: RawState) -> RawLambda:
        out: RawLambda = {}
        for a, ca in left.items():
            for b, cb in right.items():
                for n, state in self._bracket_mono(a, b).items():
                    accumulate_lambda(out, n, state, ca * cb)
        return out

    def _bracket_mono(self, a_mono: Monomial, b_mono: Monomial) -> RawLambda:
        if not a_mono or not b_mono:
            return {}
        key = (a_mono, b_mono)
        cached = self._bracket_cache.get(key)
        if cached is not None:
            return cached
        if len(b_mono) > 1:
            result = self._wick_right(a_mono, b_mono)
        elif len(a_mono) > 1:
            result = self._wick_left(a_mono, b_mono[0])
        else:
            result = self._bracket_factors(a_mono[0], b_mono[0])
        self._bracket_cache[key] = result
        return result

    def _bracket_factors(self, x: DerivedGenerator, y: DerivedGenerator) -> RawLambda:
        """``[T^i a_λ T^j b] = (-λ)^i (λ+T)^j [a_λ b]``."""

        out: RawLambda = {}
        sign = -1 if x.order % 2 else 1
        for n, state in self._base_pair(x.index, y.index).items():
            for m in range(y.order + 1):
                power = n + x.order + y.order - m
                accumulate_lambda(out, power, self._derive(state, m), Fraction(sign * comb(y.order, m)))
        return out

    def _wick_right(self, a_mono: Monomial, b_mono: Monomial) -> RawLambda:
        b, tail = b_mono[0], b_mono[1:]
        tail_state: RawState = {tail: ONE}
        out: RawLambda = {}
        inner = self._bracket_mono(a_mono, (b,))
        for n, state in inner.items():
            accumulate_lambda(out, n, self._product_state(state, tail_state))
        sign = self._sign(a_mono, (b,))
        for n, state in self._bracket_mono(a_mono, tail).items():
            accumulate_lambda(out, n, self._insert_state(b, state), sign)
        if not self._classical:
            # ∫_0^λ [[a_λ b]_μ B] dμ
            for n, state in inner.items():
                for m, nested in self._bracket_state(state, tail_state).items():
                    accumulate_lambda(out, n + m + 1, nested, Fraction(1, m + 1))
        return out

    def _wick_left(self, a_mono: Monomial, c: DerivedGenerator) -> RawLambda:
        a, rest = a_mono[0], a_mono[1:]
        sign = self._sign(a_mono[:1], rest)
        out: RawLambda = {}
        for n, state in self._bracket_mono(rest, (c,)).items():
            for k in range(n + 1):
                shifted = DerivedGenerator(a.index, a.order + k)
                accumulate_lambda(out, n - k, self._insert_state(shifted, state), Fraction(comb(n, k)))
        outer = self._bracket_mono(a_mono[:1], (c,))
        for n, state in outer.items():
            for k in range(n + 1):
                lifted = self._derive({rest: ONE}, k)
                accumulate_lambda(out, n - k, self._product_state(lifted, state), sign * comb(n, k))
        if not self._classical:
            # ∫_0^λ [A_μ [a_{λ-μ} c]] dμ
            for m, state in outer.items():
                for j, nested in self._bracket_state({rest: ONE}, state).items():
                    weight = Fraction(factorial(m) * factorial(j), factorial(m + j + 1))
                    accumulate_lambda(out, m + j + 1, nested, sign * weight)
        return out

    # Operator powers

    def _operator_step(
        self, current: RawLambda, shift: RawState, lam: Fraction, t: Fraction
    ) -> RawLambda:
        out: RawLambda = {}
        for n, state in current.items():
            if lam:
                accumulate_lambda(out, n + 1, state, lam)
            if t:
                accumulate_lambda(out, n, self._derive(state), t)
            accumulate_lambda(out, n, self._product_state(shift, state))
        return out

    # Relations

    def _prepare_rule(self, rel: Relation) -> _Rule:
        lhs = self._canonical_raw(rel.lhs)
        rhs = self._canonical_raw(rel.rhs)
        if not lhs:
            raise ValidationError("relation left-hand side normalizes to zero")
        head = max(lhs, key=_head_key)
        lead = lhs[head]
        replacement = dict(rhs)
        accumulate(replacement, {m: c for m, c in lhs.items() if m != head}, -ONE)
        replacement = {m: c / lead for m, c in replacement.items()}
        if head in replacement:
            raise ValidationError(f"relation for {self.render(StateVector.monomial(head))} is circular")
        return _Rule(head, replacement)

    def _matches(self, mono: Monomial) -> list[tuple[_Rule, int]]:
        found: list[tuple[_Rule, int]] = []
        for rule in self._rules:
            head = rule.head
            if len(head) == 1:
                target = head[0]
                for pos, factor in enumerate(mono):
                    if factor.index == target.index and factor.order >= target.order:
                        found.append((rule, pos))
            # several factors: only as the innermost product
            elif len(mono) >= len(head) and mono[-len(head) :] == head:
                found.append((rule, len(mono) - len(head)))
        return found

    def _apply_rule(self, rule: _Rule, mono: Monomial, pos: int) -> RawState:
        if len(rule.head) == 1:
            extra = mono[pos].order - rule.head[0].order
            state = self._product_state(self._derive(rule.replacement, extra), {mono[pos + 1 :]: ONE})
        else:
            state = rule.replacement
        for factor in reversed(mono[:pos]):
            state = self._insert_state(factor, state)
        return state

    def _reduce_raw(self, state: RawState, rng: random.Random | None) -> RawState:
        if not self._rules:
            return state
        current = state
        for passes in range(self.rewrite_limit):
            out: RawState = {}
            changed = False
            for mono, coeff in current.items():
                found = self._matches(mono)
                if not found:
                    accumulate(out, {mono: ONE}, coeff)
                    continue
                rule, pos = rng.choice(found) if rng is not None else found[0]
                accumulate(out, self._apply_rule(rule, mono, pos), coeff)
                changed = True
            if not changed:
                logger.debug("relation rewriting settled after %d passes", passes)
                return out
            current = out
        raise RewriteLimitExceeded(
            f"relation rewriting did not settle within {self.rewrite_limit} passes"
        )
