"""
Residual-based checks of the λ-bracket axioms.

Every check computes an exact residual in the engine and passes iff the
residual canonicalizes (and, with relations, rewrites) to zero.
"""

from __future__ import annotations

import logging
import random
import time
from collections.abc import Callable, Sequence
from dataclasses import replace
from fractions import Fraction
from itertools import combinations_with_replacement
from math import factorial
from types import MappingProxyType

from conformalcalc.algebras.builtins import from_polynomial
from conformalcalc.engine import (
    AlgebraSpec,
    BracketTable,
    CheckResult,
    Engine,
    Relation,
    ShapeMismatch,
)
from conformalcalc.engine.types import sorted_checks
from conformalcalc.pfamily import build_P, eef_leading_coefficients
from conformalcalc.terms import (
    DerivedGenerator,
    Generator,
    LambdaMuPoly,
    LambdaPoly,
    StateVector,
    substitute_lambda,
)
from conformalcalc.workers import ordered_map

logger = logging.getLogger(__name__)

GeneratorRef = str | StateVector
Target = AlgebraSpec | Engine

DEFAULT_PROPERTY_CASES = 200
DEFAULT_MAX_WEIGHT = 6


def _engine_for(target: Target) -> Engine:
    return target if isinstance(target, Engine) else Engine(target)


def _state(engine: Engine, ref: GeneratorRef) -> StateVector:
    return engine.generator(ref) if isinstance(ref, str) else ref


def _add(acc: dict[tuple[int, int], StateVector], key: tuple[int, int], value: StateVector) -> None:
    acc[key] = acc[key] + value if key in acc else value


def _nested(
    engine: Engine, left: StateVector, inner: LambdaPoly, *, outer_is_lambda: bool
) -> dict[tuple[int, int], StateVector]:
    out: dict[tuple[int, int], StateVector] = {}
    for m, state in inner.items():
        for n, coeff in engine.bracket(left, state).items():
            _add(out, (n, m) if outer_is_lambda else (m, n), coeff)
    return out


def jacobi_residual(
    a: GeneratorRef,
    b: GeneratorRef,
    c: GeneratorRef,
    target: Target,
    *,
    reduce: bool = True,
    rng: random.Random | None = None,
) -> LambdaMuPoly:
    """
    ``[a_λ[b_μ c]] - (-1)^{p(a)p(b)} [b_μ[a_λ c]] - [[a_λ b]_{λ+μ} c]``.

    When the algebra carries relations the residual is rewritten with them
    before it is returned (unless ``reduce`` is false).
    """

    engine = _engine_for(target)
    sa, sb, sc = (_state(engine, ref) for ref in (a, b, c))
    sign = -1 if engine.parity_of(sa) * engine.parity_of(sb) % 2 else 1

    total = _nested(engine, sa, engine.bracket(sb, sc), outer_is_lambda=True)
    for key, value in _nested(engine, sb, engine.bracket(sa, sc), outer_is_lambda=False).items():
        _add(total, key, value.scale(-sign))
    for n, state in engine.bracket(sa, sb).items():
        shifted = substitute_lambda(engine.bracket(state, sc), "lambda_plus_mu")
        assert isinstance(shifted, LambdaMuPoly)
        for (k, j), value in shifted.items():
            _add(total, (k + n, j), -value)

    residual = LambdaMuPoly(total)
    if reduce and engine.has_relations:
        residual = engine.reduce_lambda_mu(residual, rng=rng)
    return residual


def _orderings(triple: tuple[int, int, int]) -> list[tuple[int, int, int]]:
    # Swapping the two outer arguments only exchanges λ and μ, so one ordering
    # per choice of the innermost argument covers the triple.
    out: list[tuple[int, int, int]] = []
    for last in sorted(set(triple), reverse=True):
        rest = list(triple)
        rest.remove(last)
        out.append((rest[0], rest[1], last))
    return out


def _triple_check(engine: Engine, triple: tuple[int, int, int]) -> CheckResult:
    names = engine.spec.names
    label = f"jacobi({','.join(names[i] for i in triple)})"
    start = time.perf_counter()
    for order in _orderings(triple):
        a, b, c = (names[i] for i in order)
        residual = jacobi_residual(a, b, c, engine)
        if residual:
            elapsed = time.perf_counter() - start
            return CheckResult(
                label,
                "fail",
                residual=engine.render(residual),
                elapsed=elapsed,
                detail=f"[{a}_L[{b}_M {c}]]",
            )
    elapsed = time.perf_counter() - start
    logger.debug("%s passed in %.3fs", label, elapsed)
    return CheckResult(label, "pass", elapsed=elapsed)


def skew_consistency(target: Target) -> list[CheckResult]:
    """``[b_λ a]`` against the skew transform of ``[a_λ b]`` for every pair."""

    engine = _engine_for(target)
    names = engine.spec.names
    results = []
    for i, j in combinations_with_replacement(range(len(names)), 2):
        start = time.perf_counter()
        a, b = engine.generator(names[i]), engine.generator(names[j])
        parity = engine.parity_of(a) * engine.parity_of(b)
        diff = engine.bracket(b, a) - engine.skew(engine.bracket(a, b), parity)
        diff = engine.reduce_lambda(diff)
        label = f"skew({names[i]},{names[j]})"
        status = "fail" if diff else "pass"
        results.append(
            CheckResult(
                label,
                status,
                residual=engine.render(diff) if diff else "",
                elapsed=time.perf_counter() - start,
            )
        )
    return results


def verify_algebra(
    spec: AlgebraSpec,
    *,
    relations: bool = True,
    engine: Engine | None = None,
    workers: int | None = None,
) -> list[CheckResult]:
    """One check per unordered generator triple plus skew-consistency per pair."""

    if not relations and spec.relations:
        spec = spec.without_relations()
        engine = None
    engine = engine or Engine(spec)
    triples = list(combinations_with_replacement(range(len(spec.generators)), 3))
    logger.info("verifying %s: %d triples", spec.name, len(triples))
    checks = ordered_map(lambda t: _triple_check(engine, t), triples, workers=workers)
    checks.extend(skew_consistency(engine))
    logger.debug("cache sizes after %s: %s", spec.name, engine.cache_info())
    return list(sorted_checks(checks))


# Change of generators h -> -h, e -> f, f -> e


def _hef_alpha(spec: AlgebraSpec, engine: Engine) -> Fraction:
    if spec.names != ("h", "e", "f"):
        raise ShapeMismatch(f"expected generators h, e, f; got {', '.join(spec.names)}")
    h, e, f = spec.generators
    if h.parity or e.parity != f.parity:
        raise ShapeMismatch("h must be even and e, f must share a parity")
    sh, se, sf = (engine.generator(n) for n in ("h", "e", "f"))
    hh = engine.bracket(sh, sh)
    if hh.coefficient(0) or any(n > 1 for n, _ in hh.items()) or not hh.coefficient(1).is_scalar():
        raise ShapeMismatch("[h_λ h] must be a multiple of λ vac")
    if engine.bracket(sh, se) != LambdaPoly.constant(se):
        raise ShapeMismatch("[h_λ e] must equal e")
    if engine.bracket(sh, sf) != LambdaPoly.constant(-sf):
        raise ShapeMismatch("[h_λ f] must equal -f")
    if engine.bracket(se, se) or engine.bracket(sf, sf):
        raise ShapeMismatch("[e_λ e] and [f_λ f] must vanish")
    for _, state in engine.bracket(se, sf).items():
        if any(factor.index != 0 for mono in state for factor in mono):
            raise ShapeMismatch("[e_λ f] must be a differential polynomial in h")
    return hh.coefficient(1).scalar_value()


def hef_alpha(spec: AlgebraSpec) -> Fraction:
    """α of an h, e, f shaped algebra; raises ShapeMismatch otherwise."""

    return _hef_alpha(spec, Engine(spec.without_relations()))


_SWAP = (0, 2, 1)


def _negate_h(state: StateVector) -> StateVector:
    return state.map_coefficients(lambda mono, c: -c if len(mono) % 2 else c)


def _transport_state(state: StateVector, engine: Engine) -> StateVector:
    total = StateVector.zero()
    for mono, coeff in state.items():
        factors = [DerivedGenerator(_SWAP[f.index], f.order) for f in mono]
        sign = -1 if sum(1 for f in mono if f.index == 0) % 2 else 1
        total = total + engine.normalize(factors).scale(coeff * sign)
    return total


def symmetry_transport(spec: AlgebraSpec) -> AlgebraSpec:
    """The algebra in the generators ``h̃ = -h``, ``ẽ = f``, ``f̃ = e``."""

    engine = Engine(spec.without_relations())
    _hef_alpha(spec, engine)
    h, e, f = spec.generators
    sh, se, sf = (engine.generator(n) for n in ("h", "e", "f"))
    transported = engine.bracket(sf, se).map_states(_negate_h)
    entries = {
        (0, 0): engine.bracket(sh, sh),
        (0, 1): LambdaPoly.constant(se),
        (0, 2): LambdaPoly.constant(-sf),
        (1, 1): LambdaPoly(),
        (2, 2): LambdaPoly(),
        (1, 2): transported,
    }
    parameters = dict(spec.parameters)
    if "delta_e" in parameters:
        parameters["delta_e"] = f.weight
    base = AlgebraSpec(
        generators=(h, Generator("e", f.parity, f.weight), Generator("f", e.parity, e.weight)),
        table=BracketTable(entries, spec.mode),
        parameters=MappingProxyType(parameters),
        name=f"transport({spec.name})",
        graded=spec.graded,
    )
    if not spec.relations:
        return base
    target = Engine(base)
    relations = tuple(
        Relation(_transport_state(rel.lhs, target), _transport_state(rel.rhs, target))
        for rel in spec.relations
    )
    return replace(base, relations=relations)


# Identity oracles


def check_derivative_identity(target: Target, k: int) -> CheckResult:
    """
    For ``p = λ^k``, ``b = -h`` with ``[b_λ e] = -e``:
    ``:e (p(T+b)1): = :p(T+b) e:`` and ``[e_λ :p(T+b)1:] = :p'(λ+T+b) e:``.
    """

    engine = _engine_for(target)
    start = time.perf_counter()
    vac = StateVector.vacuum()
    e = engine.generator("e")
    minus_h = -engine.generator("h")
    power = engine.shifted_power(minus_h, k, vac, lam=0).coefficient(0)
    product_diff = engine.wick(e, power) - engine.shifted_power(minus_h, k, e, lam=0).coefficient(0)
    expected = engine.shifted_power(minus_h, k - 1, e).scale(k) if k else LambdaPoly()
    bracket_diff = engine.bracket(e, power) - expected
    label = f"derivative_identity(k={k})"
    elapsed = time.perf_counter() - start
    if product_diff:
        return CheckResult(label, "fail", engine.render(product_diff), elapsed, "normally ordered product")
    if bracket_diff:
        return CheckResult(label, "fail", engine.render(bracket_diff), elapsed, "λ-bracket")
    return CheckResult(label, "pass", elapsed=elapsed)


def check_eef_leading(d: int, beta: Fraction | int) -> CheckResult:
    """Compare the predicted leading coefficients of ``[e_λ[e_μ f]]`` with the engine."""

    start = time.perf_counter()
    expected = eef_leading_coefficients(d, beta)
    P = build_P("schur_form", d, beta, 1)
    spec = from_polynomial(P, alpha=1 / Fraction(beta), name=f"schur(d={d},beta={beta})")
    engine = Engine(spec)
    e = engine.generator("e")
    he = engine.normalize(["h", "e"])
    te = engine.generator("e", 1)
    double: dict[tuple[int, int], StateVector] = _nested(
        engine, e, engine.bracket(e, engine.generator("f")), outer_is_lambda=True
    )

    def coeff(key: tuple[int, int]) -> StateVector:
        return double.get(key, StateVector.zero())

    mismatches: list[str] = []
    for k, value in enumerate(expected.mixed):
        want = e.scale(value / (factorial(k) * factorial(d - 1 - k)))
        if coeff((k, d - 1 - k)) != want:
            mismatches.append(f"L^{k} M^{d - 1 - k}")
    norm = Fraction(1, factorial(d - 2))
    if coeff((d - 2, 0)) != (he.scale(expected.lambda_he) + te.scale(expected.lambda_te)).scale(norm):
        mismatches.append(f"L^{d - 2}")
    if coeff((0, d - 2)) != (he.scale(expected.mu_he) + te.scale(expected.mu_te)).scale(norm):
        mismatches.append(f"M^{d - 2}")
    label = f"eef_leading(d={d},beta={Fraction(beta)})"
    elapsed = time.perf_counter() - start
    if mismatches:
        return CheckResult(label, "fail", ", ".join(mismatches), elapsed)
    return CheckResult(label, "pass", elapsed=elapsed)


# Randomized property sweeps


def random_state(engine: Engine, rng: random.Random, max_weight: int) -> StateVector:
    """A random normally ordered monomial of weight at most ``max_weight`` (when possible)."""

    gens = engine.spec.generators
    lightest = min(range(len(gens)), key=lambda i: gens[i].weight)
    for _ in range(8):
        factors: list[DerivedGenerator] = []
        weight = Fraction(0)
        for _ in range(rng.randint(1, 3)):
            index = rng.randrange(len(gens))
            order = rng.randint(0, 2)
            if weight + gens[index].weight + order > max_weight:
                continue
            factors.append(DerivedGenerator(index, order))
            weight += gens[index].weight + order
        state = engine.normalize(factors or [DerivedGenerator(lightest)])
        if state:
            coeff = rng.choice((1, -1, 2, Fraction(1, 2), -3))
            return state.scale(coeff)
    return engine.generator(gens[lightest].name)


def _top_weight(engine: Engine, v: StateVector) -> Fraction:
    return max(v.weights(engine.spec.generators), default=Fraction(0))


def _prop_skew(engine: Engine, rng: random.Random, w: int) -> str | None:
    u, v = random_state(engine, rng, w), random_state(engine, rng, w)
    parity = engine.parity_of(u) * engine.parity_of(v)
    diff = engine.bracket(v, u) - engine.skew(engine.bracket(u, v), parity)
    return engine.render(diff) if diff else None


def _prop_grading(engine: Engine, rng: random.Random, w: int) -> str | None:
    u, v = random_state(engine, rng, w), random_state(engine, rng, w)
    if engine.spec.graded and (len(u.weights(engine.spec.generators)) > 1 or len(v.weights(engine.spec.generators)) > 1):
        return "normal ordering produced a mixed-weight state"
    bound = _top_weight(engine, u) + _top_weight(engine, v)
    for n, coeff in engine.bracket(u, v).items():
        expected = bound - n - 1
        for weight in coeff.weights(engine.spec.generators):
            if weight > expected or (engine.spec.graded and weight != expected):
                return f"L^{n}: weight {weight}, expected {expected}"
    return None


def _prop_idempotent(engine: Engine, rng: random.Random, w: int) -> str | None:
    u, v, x = (random_state(engine, rng, max(1, w // 2)) for _ in range(3))
    nested = engine.normalize([u, [v, x]])
    if engine.canonicalize(nested) != nested or engine.normalize(nested) != nested:
        return engine.render(nested)
    diff = nested - engine.wick(u, engine.wick(v, x))
    return engine.render(diff) if diff else None


def _prop_derivation(engine: Engine, rng: random.Random, w: int) -> str | None:
    u, v = random_state(engine, rng, w), random_state(engine, rng, w)
    diff = engine.apply_T(engine.wick(u, v)) - engine.wick(engine.apply_T(u), v) - engine.wick(u, engine.apply_T(v))
    return engine.render(diff) if diff else None


def _prop_sesquilinear(engine: Engine, rng: random.Random, w: int) -> str | None:
    u, v = random_state(engine, rng, w), random_state(engine, rng, w)
    base = engine.bracket(u, v)
    left = engine.bracket(engine.apply_T(u), v) + base.shift(1)
    right = engine.bracket(u, engine.apply_T(v)) - base.shift(1) - engine.apply_T_lambda(base)
    if left:
        return engine.render(left)
    return engine.render(right) if right else None


def _prop_leibniz(engine: Engine, rng: random.Random, w: int) -> str | None:
    u, v, x = (random_state(engine, rng, max(1, w // 2)) for _ in range(3))
    sign = -1 if engine.parity_of(u) * engine.parity_of(v) % 2 else 1
    expected = engine.bracket(u, v).map_states(lambda s: engine.wick(s, x)) + engine.bracket(u, x).map_states(
        lambda s: engine.wick(v, s).scale(sign)
    )
    diff = engine.bracket(u, engine.wick(v, x)) - expected
    return engine.render(diff) if diff else None


def _prop_confluence(engine: Engine, rng: random.Random, w: int) -> str | None:
    v = random_state(engine, rng, w)
    results = {engine.reduce(v, rng=random.Random(rng.random())) for _ in range(3)}
    if len(results) > 1:
        return " | ".join(sorted(engine.render(r) for r in results))
    return None


Property = Callable[[Engine, random.Random, int], str | None]


def _properties(engine: Engine) -> list[tuple[str, Property]]:
    props: list[tuple[str, Property]] = [
        ("skew_symmetry", _prop_skew),
        ("grading", _prop_grading),
        ("normal_form_idempotence", _prop_idempotent),
        ("derivation", _prop_derivation),
        ("sesquilinearity", _prop_sesquilinear),
    ]
    if engine.mode == "classical":
        props.append(("leibniz", _prop_leibniz))
    if engine.has_relations:
        props.append(("confluence", _prop_confluence))
    return props


def property_checks(
    target: Target,
    *,
    max_weight: int = DEFAULT_MAX_WEIGHT,
    seed: int = 0,
    cases: int = DEFAULT_PROPERTY_CASES,
    workers: int | None = None,
) -> list[CheckResult]:
    """Randomized axiom sweeps; each property draws from its own seeded generator."""

    engine = _engine_for(target)
    props = _properties(engine)

    def run(item: tuple[int, tuple[str, Property]]) -> CheckResult:
        offset, (name, prop) = item
        rng = random.Random(seed * 1009 + offset)
        start = time.perf_counter()
        for case in range(cases):
            witness = prop(engine, rng, max_weight)
            if witness is not None:
                return CheckResult(
                    f"property:{name}",
                    "fail",
                    residual=witness,
                    elapsed=time.perf_counter() - start,
                    detail=f"case {case + 1} of {cases}",
                )
        return CheckResult(
            f"property:{name}", "pass", elapsed=time.perf_counter() - start, detail=f"{cases} cases"
        )

    return ordered_map(run, list(enumerate(props)), workers=workers)


def summarize(checks: Sequence[CheckResult]) -> tuple[int, int]:
    passed = sum(1 for c in checks if c.ok)
    return passed, len(checks) - passed
