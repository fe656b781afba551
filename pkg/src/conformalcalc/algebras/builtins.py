from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from types import MappingProxyType

from conformalcalc.engine.types import AlgebraSpec, BracketTable, Mode, Relation
from conformalcalc.pfamily import LAMBDA, PPoly, build_P, h_power, to_lambda_poly, to_rational, x
from conformalcalc.terms import DerivedGenerator, Generator, LambdaPoly, StateVector

H, E, F = 0, 1, 2


class BadParameter(ValueError):
    """Raised when a builtin algebra is requested with out-of-range parameters."""


@dataclass(frozen=True, slots=True)
class BuiltinId:
    name: str
    params: tuple[tuple[str, str], ...] = ()

    @classmethod
    def of(cls, name: str, **params: object) -> BuiltinId:
        return cls(name, tuple(sorted((k, str(v)) for k, v in params.items())))

    def describe(self) -> str:
        if not self.params:
            return self.name
        return f"{self.name}(" + ", ".join(f"{k}={v}" for k, v in self.params) + ")"


def _vac(coeff: Fraction | int = 1) -> StateVector:
    return StateVector.vacuum(coeff)


def _gen(index: int, coeff: Fraction | int = 1) -> StateVector:
    return StateVector.monomial((DerivedGenerator(index),), coeff)


def from_polynomial(
    P: PPoly,
    *,
    alpha: Fraction | int,
    parity_e: int = 0,
    delta_e: Fraction | int | None = None,
    mode: Mode = "quantum",
    relations: Sequence[Relation] = (),
    parameters: Mapping[str, Fraction | int] | None = None,
    name: str = "hef",
) -> AlgebraSpec:
    """
    The three-generator algebra ``[h_λ h] = αλ``, ``[h_λ e] = e``, ``[h_λ f] = -f``,
    ``[e_λ f] = :P:`` with ``[e_λ e] = [f_λ f] = 0``.

    ``Δ(h) = 1`` and ``Δ(e) + Δ(f) = d + 1``; a non-homogeneous P yields a
    filtered (``graded=False``) algebra.
    """

    d = P.degree
    weight_e = Fraction(d + 1, 2) if delta_e is None else Fraction(delta_e)
    weight_f = Fraction(d + 1) - weight_e
    if weight_e < 0 or weight_f < 0:
        raise BadParameter(f"Δ(e)={weight_e} leaves a negative weight for f")
    parity = 1 if parity_e % 2 else 0
    generators = (
        Generator("h", 0, Fraction(1)),
        Generator("e", parity, weight_e),
        Generator("f", parity, weight_f),
    )
    a = Fraction(alpha)
    entries: dict[tuple[int, int], LambdaPoly] = {
        (H, H): LambdaPoly({1: _vac(a)}),
        (H, E): LambdaPoly.constant(_gen(E)),
        (H, F): LambdaPoly.constant(_gen(F, -1)),
        (E, E): LambdaPoly(),
        (F, F): LambdaPoly(),
        (E, F): to_lambda_poly(P, H),
    }
    params = {"alpha": a, "d": Fraction(d)} if parameters is None else dict(parameters)
    return AlgebraSpec(
        generators=generators,
        table=BracketTable(entries, mode),
        relations=tuple(relations),
        parameters=MappingProxyType({k: Fraction(v) for k, v in params.items()}),
        name=name,
        graded=P.is_homogeneous(),
    )


def current_sl2(k: Fraction | int) -> AlgebraSpec:
    """Current algebra: ``[h_λ h] = (k/2)λ``, ``[e_λ f] = 2h + kλ``."""

    level = Fraction(k)
    P = PPoly(2 * x(1) + to_rational(level) * LAMBDA, 1)
    return from_polynomial(
        P, alpha=level / 2, parameters={"k": level}, name=f"current_sl2(k={level})"
    )


def r_minus_one(d: int, delta_e: Fraction | int | None = None) -> AlgebraSpec:
    """``[e_λ f] = :(λ + T - h)^d 1:`` with ``α = -1``."""

    if d < 1:
        raise BadParameter("r_minus_one needs d >= 1")
    P = build_P("power_form", d, -1, 1)
    params: dict[str, Fraction | int] = {"alpha": -1, "d": d}
    if delta_e is not None:
        params["delta_e"] = Fraction(delta_e)
    return from_polynomial(P, alpha=-1, delta_e=delta_e, parameters=params, name=f"r_minus_one(d={d})")


def r_minus_one_generic(p: Sequence[Fraction | int]) -> AlgebraSpec:
    """``[e_λ f] = :p(λ + T - h) 1:`` for an arbitrary polynomial ``p`` (coefficients lowest first)."""

    try:
        P = build_P("generic_p", p=p)
    except ValueError as exc:
        raise BadParameter(str(exc)) from exc
    if P.degree < 1:
        raise BadParameter("p must have degree at least 1")
    label = ",".join(str(Fraction(c)) for c in p)
    return from_polynomial(
        P, alpha=-1, parameters={"alpha": -1, "d": P.degree}, name=f"r_minus_one_generic(p={label})"
    )


def lattice(beta: int) -> AlgebraSpec:
    """
    Rank-one lattice vertex algebra ``V_{Z√β}`` presented by ``h, e, f``.

    ``α = 1/β``, parities ``β mod 2``, ``Δ(e) = Δ(f) = β/2`` and the relations
    ``Te -> β :he:``, ``Tf -> -β :hf:``.
    """

    if isinstance(beta, bool) or Fraction(beta).denominator != 1 or beta < 1:
        raise BadParameter("lattice needs a positive integer beta")
    beta = int(beta)
    P = build_P("schur_form", beta - 1, beta, 1)
    relations = (
        Relation(
            StateVector.monomial((DerivedGenerator(E, 1),)),
            StateVector.monomial((DerivedGenerator(H), DerivedGenerator(E)), beta),
        ),
        Relation(
            StateVector.monomial((DerivedGenerator(F, 1),)),
            StateVector.monomial((DerivedGenerator(H), DerivedGenerator(F)), -beta),
        ),
    )
    return from_polynomial(
        P,
        alpha=Fraction(1, beta),
        parity_e=beta % 2,
        delta_e=Fraction(beta, 2),
        relations=relations,
        parameters={"alpha": Fraction(1, beta), "beta": beta},
        name=f"lattice(beta={beta})",
    )


def free_boson(alpha: Fraction | int) -> AlgebraSpec:
    a = Fraction(alpha)
    return AlgebraSpec(
        generators=(Generator("h", 0, Fraction(1)),),
        table=BracketTable({(0, 0): LambdaPoly({1: _vac(a)})}),
        parameters=MappingProxyType({"alpha": a}),
        name=f"free_boson(alpha={a})",
    )


def fock() -> AlgebraSpec:
    """Two even generators with ``[a_λ b] = 1``, ``Δ(a) = 1``, ``Δ(b) = 0``."""

    return AlgebraSpec(
        generators=(Generator("a", 0, Fraction(1)), Generator("b", 0, Fraction(0))),
        table=BracketTable(
            {
                (0, 0): LambdaPoly(),
                (0, 1): LambdaPoly.constant(_vac()),
                (1, 1): LambdaPoly(),
            }
        ),
        name="fock",
    )


def poisson_p_of_h(p: Sequence[Fraction | int]) -> AlgebraSpec:
    """Classical algebra with ``α = 0`` and ``{e_λ f} = p(h)``."""

    coeffs = [Fraction(c) for c in p]
    while coeffs and not coeffs[-1]:
        coeffs.pop()
    if len(coeffs) < 2:
        raise BadParameter("p must have degree at least 1")
    expr = sum(to_rational(c) * x(1) ** k for k, c in enumerate(coeffs))
    P = PPoly(expr, len(coeffs) - 1)
    label = ",".join(str(c) for c in coeffs)
    return from_polynomial(
        P,
        alpha=0,
        mode="classical",
        parameters={"alpha": 0, "d": P.degree},
        name=f"poisson_p_of_h(p={label})",
    )


def alpha_zero(d: int) -> AlgebraSpec:
    """``α = 0`` with ``[e_λ f] = :H^d:``, ``H^d = (T + h)^d 1``."""

    if d < 1:
        raise BadParameter("alpha_zero needs d >= 1")
    return from_polynomial(h_power(d), alpha=0, parameters={"alpha": 0, "d": d}, name=f"alpha_zero(d={d})")


def _int_param(raw: str, name: str, *, minimum: int) -> int:
    try:
        value = int(raw)
    except ValueError as exc:
        raise BadParameter(f"`{name}` must be an integer, got {raw!r}") from exc
    if value < minimum:
        raise BadParameter(f"`{name}` must be >= {minimum}")
    return value


def _rational_param(raw: str, name: str) -> Fraction:
    try:
        return Fraction(raw)
    except (ValueError, ZeroDivisionError) as exc:
        raise BadParameter(f"`{name}` must be a rational number, got {raw!r}") from exc


def _coefficients(raw: str, name: str) -> tuple[Fraction, ...]:
    return tuple(_rational_param(part.strip(), name) for part in raw.split(",") if part.strip())


def _build(builtin: BuiltinId) -> AlgebraSpec:
    params = dict(builtin.params)
    name = builtin.name

    def take(key: str, default: str | None = None) -> str:
        if key in params:
            return params.pop(key)
        if default is None:
            raise BadParameter(f"builtin {name!r} needs `{key}=...`")
        return default

    spec: AlgebraSpec
    if name == "current_sl2":
        spec = current_sl2(_rational_param(take("k"), "k"))
    elif name == "r_minus_one":
        d = _int_param(take("d"), "d", minimum=1)
        raw_delta = params.pop("delta_e", None)
        spec = r_minus_one(d, None if raw_delta is None else _rational_param(raw_delta, "delta_e"))
    elif name == "r_minus_one_generic":
        spec = r_minus_one_generic(_coefficients(take("p"), "p"))
    elif name == "lattice":
        spec = lattice(_int_param(take("beta"), "beta", minimum=1))
    elif name == "free_boson":
        spec = free_boson(_rational_param(take("alpha", "1"), "alpha"))
    elif name == "fock":
        spec = fock()
    elif name == "poisson_p_of_h":
        spec = poisson_p_of_h(_coefficients(take("p"), "p"))
    elif name == "alpha_zero":
        spec = alpha_zero(_int_param(take("d"), "d", minimum=1))
    else:
        raise BadParameter(f"unknown builtin algebra: {name!r}")
    if params:
        raise BadParameter(f"unexpected parameters for {name!r}: {', '.join(sorted(params))}")
    return spec


@lru_cache(maxsize=128)
def make(builtin: BuiltinId) -> AlgebraSpec:
    return _build(builtin)


BUILTIN_HELP: Mapping[str, str] = MappingProxyType(
    {
        "current_sl2": "k=Q  current algebra of sl2 at level k",
        "r_minus_one": "d=N [delta_e=Q]  [e_λ f] = :(λ+T-h)^d 1:, α=-1",
        "r_minus_one_generic": "p=c0,c1,...  [e_λ f] = :p(λ+T-h) 1:, α=-1",
        "lattice": "beta=N  lattice vertex algebra with Te=β:he:, Tf=-β:hf:",
        "free_boson": "[alpha=Q]  [h_λ h] = αλ",
        "fock": "[a_λ b] = 1, Δ(a)=1, Δ(b)=0",
        "poisson_p_of_h": "p=c0,c1,...  classical, α=0, {e_λ f} = p(h)",
        "alpha_zero": "d=N  α=0, [e_λ f] = :(T+h)^d 1:",
    }
)
