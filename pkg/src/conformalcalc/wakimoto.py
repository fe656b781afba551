"""
Free-field realization in the Fock algebra ``[a_λ b] = 1``.

``H = -:ab:``, ``E_{n+1} = :H E_n: + T E_n`` and ``F_{n+1} = :H F_n: - T F_n``
starting from ``E_0 = a`` and ``F_0 = b``.
"""

from __future__ import annotations

import logging
import time
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from fractions import Fraction
from itertools import product

from conformalcalc.algebras.builtins import fock, r_minus_one
from conformalcalc.engine import CheckResult, Engine
from conformalcalc.engine.types import sorted_checks
from conformalcalc.terms import LambdaPoly, StateVector
from conformalcalc.workers import ordered_map

logger = logging.getLogger(__name__)

DEFAULT_BOUND = 4


@dataclass(frozen=True, slots=True)
class WakimotoFamily:
    bound: int
    H: StateVector
    E: tuple[StateVector, ...]
    F: tuple[StateVector, ...]

    def weights(self, engine: Engine) -> dict[str, set[Fraction]]:
        gens = engine.spec.generators
        out = {"H": self.H.weights(gens)}
        for n in range(self.bound + 1):
            out[f"E_{n}"] = self.E[n].weights(gens)
            out[f"F_{n}"] = self.F[n].weights(gens)
        return out


def fock_engine() -> Engine:
    return Engine(fock())


def build(N: int, *, engine: Engine | None = None) -> WakimotoFamily:
    if N < 0:
        raise ValueError("N must be non-negative")
    engine = engine or fock_engine()
    H = -engine.normalize(["a", "b"])
    E = [engine.generator("a")]
    F = [engine.generator("b")]
    for _ in range(N):
        E.append(engine.wick(H, E[-1]) + engine.apply_T(E[-1]))
        F.append(engine.wick(H, F[-1]) - engine.apply_T(F[-1]))
    return WakimotoFamily(N, H, tuple(E), tuple(F))


def _timed(name: str, engine: Engine, compute: Callable[[], StateVector | LambdaPoly]) -> CheckResult:
    start = time.perf_counter()
    residual = compute()
    elapsed = time.perf_counter() - start
    if residual:
        return CheckResult(name, "fail", engine.render(residual), elapsed)
    return CheckResult(name, "pass", elapsed=elapsed)


def _pair_checks(engine: Engine, family: WakimotoFamily, m: int, n: int) -> list[CheckResult]:
    H, E, F = family.H, family.E, family.F
    vac = StateVector.vacuum()
    k = m + n

    def e_lambda_f() -> LambdaPoly:
        expected = engine.shifted_power(H, k, vac, lam=-1, t=-1).scale(k + 1)
        return engine.bracket(E[m], F[n]) - expected

    def e_wick_f() -> StateVector:
        expected = -engine.shifted_power(H, k + 1, vac, lam=0, t=-1).coefficient(0)
        return engine.wick(E[m], F[n]) - expected

    return [
        _timed(f"lemma:EE({m},{n})", engine, lambda: engine.bracket(E[m], E[n]).derivative()),
        _timed(f"lemma:FF({m},{n})", engine, lambda: engine.bracket(F[m], F[n]).derivative()),
        _timed(f"lemma:EF({m},{n})", engine, e_lambda_f),
        _timed(f"lemma:wick_EF({m},{n})", engine, e_wick_f),
    ]


def _single_checks(engine: Engine, family: WakimotoFamily, n: int) -> list[CheckResult]:
    H, E, F = family.H, family.E, family.F
    gens = engine.spec.generators
    results = [
        _timed(f"lemma:HE({n})", engine, lambda: engine.bracket(H, E[n]) - LambdaPoly.constant(E[n])),
        _timed(f"lemma:HF({n})", engine, lambda: engine.bracket(H, F[n]) + LambdaPoly.constant(F[n])),
        _timed(f"lemma:EE_zero({n})", engine, lambda: engine.bracket(E[n], E[n])),
    ]
    weights_ok = E[n].weights(gens) == {Fraction(n + 1)} and F[n].weights(gens) <= {Fraction(n)}
    results.append(
        CheckResult(
            f"lemma:weights({n})",
            "pass" if weights_ok else "fail",
            "" if weights_ok else f"E_{n}: {sorted(E[n].weights(gens))}, F_{n}: {sorted(F[n].weights(gens))}",
        )
    )
    return results


def check_lemma(
    N: int = DEFAULT_BOUND,
    *,
    engine: Engine | None = None,
    family: WakimotoFamily | None = None,
    workers: int | None = None,
) -> list[CheckResult]:
    """Brackets and products among ``H``, ``E_m``, ``F_n`` for ``0 <= m, n <= N``."""

    engine = engine or fock_engine()
    family = family or build(N, engine=engine)
    vac = StateVector.vacuum()
    results = [
        _timed(
            "lemma:HH",
            engine,
            lambda: engine.bracket(family.H, family.H) - LambdaPoly({1: -vac}),
        )
    ]
    for group in ordered_map(lambda n: _single_checks(engine, family, n), range(N + 1), workers=workers):
        results.extend(group)
    pairs = list(product(range(N + 1), repeat=2))
    for group in ordered_map(lambda mn: _pair_checks(engine, family, *mn), pairs, workers=workers):
        results.extend(group)
    logger.debug("wakimoto lemma N=%d: cache sizes %s", N, engine.cache_info())
    return list(sorted_checks(results))


def check_skew_cross(
    N: int = DEFAULT_BOUND,
    *,
    engine: Engine | None = None,
    family: WakimotoFamily | None = None,
) -> list[CheckResult]:
    """``[F_n λ E_m]`` computed directly against the skew transform of ``[E_m λ F_n]``."""

    engine = engine or fock_engine()
    family = family or build(N, engine=engine)
    E, F = family.E, family.F
    return [
        _timed(
            f"skew_cross({m},{n})",
            engine,
            lambda m=m, n=n: engine.bracket(F[n], E[m]) - engine.skew(engine.bracket(E[m], F[n]), 0),
        )
        for m, n in product(range(N + 1), repeat=2)
    ]


def pi_images(d: int, n: int, family: WakimotoFamily) -> tuple[StateVector, StateVector, StateVector]:
    """``π_n(h) = H``, ``π_n(e) = E_n``, ``π_n(f) = ((-1)^d / (d+1)) F_{d-n}``."""

    if not 0 <= n <= d:
        raise ValueError("n must satisfy 0 <= n <= d")
    if family.bound < d:
        raise ValueError(f"the family must be built up to N >= {d}")
    scale = Fraction((-1) ** d, d + 1)
    return family.H, family.E[n], family.F[d - n].scale(scale)


def _image_poly(engine: Engine, p: LambdaPoly, images: Sequence[StateVector]) -> LambdaPoly:
    return p.map_states(lambda state: engine.image(state, images))


def check_pi_pairs(
    d: int,
    n: int,
    *,
    engine: Engine | None = None,
    family: WakimotoFamily | None = None,
) -> list[CheckResult]:
    engine = engine or fock_engine()
    family = family if family is not None and family.bound >= d else build(d, engine=engine)
    images = pi_images(d, n, family)
    source = Engine(r_minus_one(d, n + 1))
    names = source.spec.names
    results = []
    for i, j in product(range(3), repeat=2):
        label = f"pi(d={d},n={n}):[{names[i]} {names[j]}]"

        def residual(i: int = i, j: int = j) -> LambdaPoly:
            lhs = engine.bracket(images[i], images[j])
            rhs = _image_poly(engine, source.bracket(source.generator(names[i]), source.generator(names[j])), images)
            return lhs - rhs

        results.append(_timed(label, engine, residual))

    gens = engine.spec.generators
    expected = [g.weight for g in source.spec.generators]
    weights_ok = all(images[i].weights(gens) <= {expected[i]} for i in range(3))
    results.append(
        CheckResult(
            f"pi(d={d},n={n}):weights",
            "pass" if weights_ok else "fail",
            "" if weights_ok else "images do not preserve conformal weight",
        )
    )
    return results


def check_pi(
    d: int,
    n: int,
    *,
    engine: Engine | None = None,
    family: WakimotoFamily | None = None,
) -> CheckResult:
    """π_n is a homomorphism: brackets of images equal images of brackets."""

    start = time.perf_counter()
    pairs = check_pi_pairs(d, n, engine=engine, family=family)
    elapsed = time.perf_counter() - start
    for result in pairs:
        if not result.ok:
            return CheckResult(f"pi(d={d},n={n})", "fail", result.residual, elapsed, result.name)
    return CheckResult(f"pi(d={d},n={n})", "pass", elapsed=elapsed, detail=f"{len(pairs)} checks")


def kernel_witness(
    d: int,
    n: int,
    *,
    engine: Engine | None = None,
    family: WakimotoFamily | None = None,
) -> CheckResult:
    """``π_n(:(T-h)^{d+1} vac: - (d+1) :ef:)`` vanishes."""

    engine = engine or fock_engine()
    family = family if family is not None and family.bound >= d else build(d, engine=engine)
    images = pi_images(d, n, family)
    source = Engine(r_minus_one(d, n + 1))
    start = time.perf_counter()
    witness = source.shifted_power(-source.generator("h"), d + 1, StateVector.vacuum(), lam=0).coefficient(0)
    witness = witness - source.normalize(["e", "f"]).scale(d + 1)
    image = engine.image(witness, images)
    elapsed = time.perf_counter() - start
    name = f"kernel(d={d},n={n})"
    if image:
        return CheckResult(name, "fail", engine.render(image), elapsed)
    return CheckResult(name, "pass", elapsed=elapsed, detail=source.render(witness))


def run_all(d: int, n: int | None, N: int, *, workers: int | None = None) -> list[CheckResult]:
    """Lemma checks up to ``N`` plus π and kernel checks for ``n`` (or every ``0 <= n <= d``)."""

    engine = fock_engine()
    family = build(max(N, d), engine=engine)
    results = check_lemma(N, engine=engine, family=family, workers=workers)
    results.extend(check_skew_cross(N, engine=engine, family=family))
    ns = range(d + 1) if n is None else (n,)
    for m in ns:
        results.append(check_pi(d, m, engine=engine, family=family))
        results.append(kernel_witness(d, m, engine=engine, family=family))
    return list(sorted_checks(results))
