"""
The polynomial family P(λ; h, Th, ...) that fixes ``[e_λ f]``.

Polynomials live in ``sympy`` with ``λ`` and commuting variables ``x_k``
standing for ``T^{k-1} h``; the derivation ``T`` acts by ``T x_k = x_{k+1}``
and ``T λ = 0``.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial
from typing import TYPE_CHECKING, Literal

import sympy as sp
from sympy.utilities.iterables import partitions

from conformalcalc.terms import DerivedGenerator, LambdaPoly, StateVector, binom

if TYPE_CHECKING:
    from conformalcalc.engine import Engine

logger = logging.getLogger(__name__)

LAMBDA = sp.Symbol("lambda")
BETA = sp.Symbol("beta")
X_VAR = sp.Symbol("x")
Y_VAR = sp.Symbol("y")

PForm = Literal["schur_form", "power_form", "generic_p"]
SolutionKind = Literal["R_minus_one", "lattice", "current", "p_of_h", "other"]


class ZeroBeta(ValueError):
    """Raised when a P-form that divides by β is requested with β = 0."""


@lru_cache(maxsize=None)
def x(k: int) -> sp.Symbol:
    """The variable ``x_k`` (``T^{k-1} h``), ``k >= 1``."""

    if k < 1:
        raise ValueError("x variables are indexed from 1")
    return sp.Symbol(f"x{k}")


@lru_cache(maxsize=None)
def y(k: int) -> sp.Symbol:
    return sp.Symbol(f"y{k}")


def to_rational(value: Fraction | int) -> sp.Rational:
    value = Fraction(value)
    return sp.Rational(value.numerator, value.denominator)


def to_fraction(value: sp.Expr) -> Fraction:
    number = sp.nsimplify(value)
    if not number.is_Rational:
        raise ValueError(f"expected a rational coefficient, got {value}")
    return Fraction(int(number.p), int(number.q))


def x_index(symbol: sp.Symbol) -> int | None:
    name = symbol.name
    if name.startswith("x") and name[1:].isdigit():
        return int(name[1:])
    return None


def max_x_index(expr: sp.Expr) -> int:
    indices = [x_index(s) for s in expr.free_symbols if isinstance(s, sp.Symbol)]
    return max((i for i in indices if i is not None), default=0)


@dataclass(frozen=True, slots=True)
class PPoly:
    expr: sp.Expr
    degree: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "expr", sp.expand(self.expr))

    @property
    def lambda_degree(self) -> int:
        if self.expr == 0:
            return -1
        return int(sp.Poly(self.expr, LAMBDA).degree())

    @property
    def variables(self) -> int:
        return max_x_index(self.expr)

    def is_homogeneous(self) -> bool:
        return weighted_degrees(self.expr) <= {self.degree}

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PPoly):
            return NotImplemented
        return self.degree == other.degree and sp.expand(self.expr - other.expr) == 0

    def __hash__(self) -> int:
        return hash((self.degree, sp.srepr(self.expr)))

    def __str__(self) -> str:
        return str(self.expr)


def weighted_degrees(expr: sp.Expr) -> set[int]:
    """Degrees of the terms of ``expr`` under deg λ = 1, deg x_k = k."""

    expr = sp.expand(expr)
    if expr == 0:
        return set()
    count = max_x_index(expr)
    gens = [LAMBDA, *(x(k) for k in range(1, count + 1))]
    poly = sp.Poly(expr, *gens)
    return {monom[0] + sum(k * e for k, e in enumerate(monom[1:], start=1)) for monom in poly.monoms()}


def T_x(expr: sp.Expr) -> sp.Expr:
    """The derivation ``T x_k = x_{k+1}``, ``T λ = 0``."""

    count = max_x_index(expr)
    return sp.expand(sum((sp.diff(expr, x(k)) * x(k + 1) for k in range(1, count + 1)), sp.Integer(0)))


# Schur polynomials


def schur(n: int, ys: Sequence[sp.Expr] | None = None) -> sp.Expr:
    """Elementary Schur polynomial ``S_n``: the ``z^n`` coefficient of ``exp(Σ z^k y_k)``."""

    if n < 0:
        raise ValueError("Schur polynomials are defined for n >= 0")
    if ys is None:
        ys = [y(k) for k in range(1, n + 1)]
    if n == 0:
        return sp.Integer(1)
    total = sp.Integer(0)
    for part in partitions(n):
        if any(k > len(ys) for k in part):
            continue
        term = sp.Integer(1)
        for k, multiplicity in part.items():
            term *= ys[k - 1] ** multiplicity / sp.factorial(multiplicity)
        total += term
    return sp.expand(total)


def schur_recursive(n: int) -> sp.Expr:
    """``S_n`` from ``n S_n = (y_1 + T) S_{n-1}`` with ``T y_k = (k+1) y_{k+1}``."""

    current = sp.Integer(1)
    for m in range(1, n + 1):
        shifted = sum(
            (sp.diff(current, y(k)) * (k + 1) * y(k + 1) for k in range(1, m)),
            sp.Integer(0),
        )
        current = sp.expand((y(1) * current + shifted) / m)
    return current


def schur_generating_check(order: int) -> sp.Expr:
    """``Σ_{n<=N} z^n S_n - exp(Σ_{k<=N} z^k y_k)`` truncated at ``z^N``; zero when consistent."""

    z = sp.Symbol("z")
    exponent = sum((z**k * y(k) for k in range(1, order + 1)), sp.Integer(0))
    series = sp.series(sp.exp(exponent), z, 0, order + 1).removeO()
    partial_sum = sum((z**n * schur(n, [y(k) for k in range(1, order + 1)]) for n in range(order + 1)), sp.Integer(0))
    return sp.expand(series - partial_sum)


# P builders


def build_P(
    form: PForm,
    d: int | None = None,
    beta: Fraction | int | None = None,
    scale: Fraction | int = 1,
    p: Sequence[Fraction | int] | None = None,
) -> PPoly:
    """
    Build P in one of its equivalent forms.

    * ``schur_form``: ``scale · S_d(λ + β x_1/1!, β x_2/2!, ...)``
    * ``power_form``: ``scale · (λ + T + β h)^d 1``
    * ``generic_p``: ``p(λ + T - h) 1`` for ``p`` given by coefficients, lowest first
    """

    if form == "generic_p":
        if p is None:
            raise ValueError("generic_p requires the coefficients of p")
        coeffs = [Fraction(c) for c in p]
        while coeffs and not coeffs[-1]:
            coeffs.pop()
        if not coeffs:
            raise ValueError("p must be a nonzero polynomial")
        return PPoly(_operator_powers(coeffs, -1) * to_rational(scale), len(coeffs) - 1)

    if d is None or d < 0:
        raise ValueError("the degree d must be a non-negative integer")
    if beta is None or Fraction(beta) == 0:
        raise ZeroBeta(f"{form} needs a nonzero β")
    b = to_rational(beta)
    if form == "schur_form":
        ys = [LAMBDA + b * x(1)] + [b * x(k) / sp.factorial(k) for k in range(2, d + 1)]
        return PPoly(to_rational(scale) * schur(d, ys), d)
    if form == "power_form":
        return PPoly(to_rational(scale) * _operator_powers([0] * d + [1], beta), d)
    raise ValueError(f"unknown P form: {form!r}")


def _operator_powers(coeffs: Sequence[Fraction | int], beta: Fraction | int) -> sp.Expr:
    """``Σ coeffs[k] (λ + T + β x_1)^k 1``."""

    shift = LAMBDA + to_rational(beta) * x(1)
    current: sp.Expr = sp.Integer(1)
    total: sp.Expr = sp.Integer(0)
    for k, coeff in enumerate(coeffs):
        if k:
            current = sp.expand(shift * current + T_x(current))
        total += to_rational(coeff) * current
    return sp.expand(total)


def h_power(k: int) -> PPoly:
    """``H^k = (T + h)^k 1``."""

    return PPoly(_h_operator_power(k, 1), k)


def h_tilde_power(k: int) -> PPoly:
    """``H̃^k = (T - h)^k 1``."""

    return PPoly(_h_operator_power(k, -1), k)


def _h_operator_power(k: int, sign: int) -> sp.Expr:
    current: sp.Expr = sp.Integer(1)
    for _ in range(k):
        current = sp.expand(sign * x(1) * current + T_x(current))
    return current


def to_lambda_poly(P: PPoly, h_index: int = 0) -> LambdaPoly:
    """Read P as a λ-polynomial of normally ordered monomials in ``T^k h``."""

    expr = P.expr
    count = max_x_index(expr)
    gens = [LAMBDA, *(x(k) for k in range(1, count + 1))]
    raw: dict[int, dict[tuple[DerivedGenerator, ...], Fraction]] = {}
    if expr == 0:
        return LambdaPoly()
    for monom, coeff in sp.Poly(expr, *gens).terms():
        factors: list[DerivedGenerator] = []
        for k, exponent in enumerate(monom[1:], start=1):
            factors.extend([DerivedGenerator(h_index, k - 1)] * exponent)
        raw.setdefault(monom[0], {})[tuple(factors)] = to_fraction(coeff)
    return LambdaPoly({n: StateVector(terms) for n, terms in raw.items()})


# Identity checks


def check_hef_system(P: PPoly, alpha: Fraction | int) -> list[sp.Expr]:
    """Residuals of ``(1/k!) ∂_λ^k P - α ∂P/∂x_k`` for ``k = 1..K``; all zero iff the hef identity holds."""

    a = to_rational(alpha)
    top = max(P.lambda_degree, P.variables, 1)
    residuals = []
    for k in range(1, top + 1):
        lhs = sp.diff(P.expr, LAMBDA, k) / sp.factorial(k)
        residuals.append(sp.expand(lhs - a * sp.diff(P.expr, x(k))))
    return residuals


def hef_ok(residuals: Sequence[sp.Expr]) -> bool:
    return all(r == 0 for r in residuals)


def substitute_minus_lambda_minus_T(expr: sp.Expr) -> sp.Expr:
    """``P(-λ-T)`` with T acting on the x-coefficients."""

    expr = sp.expand(expr)
    if expr == 0:
        return expr
    total: sp.Expr = sp.Integer(0)
    for (n,), coeff in sp.Poly(expr, LAMBDA).terms():
        derivatives = [sp.expand(coeff)]
        for _ in range(n):
            derivatives.append(T_x(derivatives[-1]))
        for k in range(n + 1):
            total += comb(n, k) * (-LAMBDA) ** k * (-1) ** (n - k) * derivatives[n - k]
    return sp.expand(total)


def check_symmetry(P: PPoly, d: int | None = None, *, negate_h: bool = True) -> bool:
    """
    ``P(-λ-T; -h, -Th, ...) == (-1)^d P(λ; h, Th, ...)``.

    With ``negate_h=False`` the x-variables keep their sign, which is the raw
    substitution without the ``h -> -h`` change of generators.
    """

    degree = P.degree if d is None else d
    expr = P.expr
    if negate_h:
        count = max_x_index(expr)
        expr = expr.subs({x(k): -x(k) for k in range(1, count + 1)}, simultaneous=True)
    return sp.expand(substitute_minus_lambda_minus_T(expr) - (-1) ** degree * P.expr) == 0


# Hypergeometric series


def phi_series(beta: Fraction | int, order: int) -> sp.Expr:
    """``Φ_β(x) = Σ_{n<=order} binom(β, n) x^n / n!``."""

    return sp.expand(
        sum((to_rational(binom(beta, n)) * X_VAR**n / factorial(n) for n in range(order + 1)), sp.Integer(0))
    )


def psi_series(beta: Fraction | int, order: int) -> sp.Expr:
    """``Ψ_β(x, y) = ∂_y Φ_β(-xy)`` up to ``x^order``."""

    return sp.expand(
        sum(
            (
                to_rational(binom(beta, n)) * (-X_VAR) ** n * Y_VAR ** (n - 1) / factorial(n - 1)
                for n in range(1, order + 1)
            ),
            sp.Integer(0),
        )
    )


def phi_ode_residual(beta: Fraction | int, order: int) -> sp.Expr:
    """``(x∂² + (x+1)∂ - β) Φ_β`` keeping only powers below ``x^order``."""

    phi = phi_series(beta, order + 1)
    result = sp.expand(
        X_VAR * sp.diff(phi, X_VAR, 2) + (X_VAR + 1) * sp.diff(phi, X_VAR) - to_rational(beta) * phi
    )
    if result == 0:
        return result
    poly = sp.Poly(result, X_VAR)
    return sp.expand(sum((c * X_VAR**m for (m,), c in poly.terms() if m < order), sp.Integer(0)))


# Classification for α != 0


@dataclass(frozen=True, slots=True)
class ClassificationSolution:
    beta: Fraction | None
    parity_e: int
    kind: SolutionKind
    polynomial: PPoly | None = None

    def describe(self) -> str:
        parity = "odd" if self.parity_e else "even"
        if self.beta is None:
            suffix = f" P={self.polynomial}" if self.polynomial is not None else " (every β)"
            return f"{self.kind}: e {parity}{suffix}"
        return f"{self.kind}: beta={self.beta} e {parity}"


def _binom_poly(n: int) -> sp.Expr:
    result: sp.Expr = sp.Integer(1)
    for i in range(n):
        result *= BETA - i
    return sp.expand(result / sp.factorial(n))


def eef_equations(d: int, parity_e: int) -> list[sp.Expr]:
    """``binom(β,k+1)(-1)^{k+1} - (-1)^{p(e)} binom(β,d-k)(-1)^{d-k}`` for ``k = 0..d-1``."""

    sign = -1 if parity_e % 2 else 1
    return [
        sp.expand(_binom_poly(k + 1) * (-1) ** (k + 1) - sign * _binom_poly(d - k) * (-1) ** (d - k))
        for k in range(d)
    ]


def _cleared_gcd(equations: Sequence[sp.Expr]) -> sp.Poly:
    polys = []
    for eq in equations:
        if eq == 0:
            continue
        _, cleared = sp.Poly(eq, BETA).clear_denoms()
        polys.append(cleared)
    if not polys:
        return sp.Poly(0, BETA)
    result = polys[0]
    for poly in polys[1:]:
        result = sp.gcd(result, poly)
    return result


def rational_roots(poly: sp.Poly) -> list[Fraction]:
    """Nonzero rational roots of an integer polynomial via the rational root theorem."""

    coeffs = [int(c) for c in poly.all_coeffs()]
    while coeffs and coeffs[-1] == 0:
        coeffs.pop()
    if len(coeffs) <= 1:
        return []
    lead, trail = abs(coeffs[0]), abs(coeffs[-1])
    stripped = sp.Poly(coeffs, BETA)
    roots: set[Fraction] = set()
    for num in sp.divisors(trail):
        for den in sp.divisors(lead):
            for candidate in (Fraction(num, den), Fraction(-num, den)):
                if stripped.eval(to_rational(candidate)) == 0:
                    roots.add(candidate)
    return sorted(roots)


def _kind_for(beta: Fraction, d: int) -> SolutionKind:
    if beta == -1:
        return "R_minus_one"
    if beta == d + 1:
        return "lattice"
    return "other"


def classify_nonzero_alpha(d: int) -> list[ClassificationSolution]:
    if d < 1:
        raise ValueError("d must be at least 1")
    solutions: list[ClassificationSolution] = []
    for parity in (0, 1):
        g = _cleared_gcd(eef_equations(d, parity))
        logger.debug("d=%d parity=%d gcd=%s", d, parity, g.as_expr())
        if g.is_zero:
            solutions.append(ClassificationSolution(None, parity, "current"))
            continue
        for root in rational_roots(g):
            solutions.append(ClassificationSolution(root, parity, _kind_for(root, d)))
    return sorted(solutions, key=lambda s: (s.beta is not None, s.beta or 0, s.parity_e))


@dataclass(frozen=True, slots=True)
class EefLeadingCoefficients:
    """
    Leading coefficients of ``[e_λ [e_μ f]]`` for ``P = S_d(λ + β x_1, β x_2/2!, ...)``.

    ``mixed[k]`` multiplies ``e`` at ``λ^k μ^{d-1-k} / (k! (d-1-k)!)``; the
    ``lambda_*`` and ``mu_*`` pairs multiply ``:he:`` and ``Te`` at
    ``λ^{d-2}/(d-2)!`` and ``μ^{d-2}/(d-2)!``.
    """

    d: int
    beta: Fraction
    mixed: tuple[Fraction, ...]
    lambda_he: Fraction
    lambda_te: Fraction
    mu_he: Fraction
    mu_te: Fraction


def eef_leading_coefficients(d: int, beta: Fraction | int) -> EefLeadingCoefficients:
    if d < 2:
        raise ValueError("the leading-coefficient expansion needs d >= 2")
    b = Fraction(beta)
    if not b:
        raise ZeroBeta("β must be nonzero")
    mixed = tuple(binom(b, k + 1) * (-1) ** (k + 1) for k in range(d))
    return EefLeadingCoefficients(
        d=d,
        beta=b,
        mixed=mixed,
        lambda_he=binom(b, d - 1) * (-1) ** (d - 1) * b,
        lambda_te=binom(b, d) * (-1) ** d,
        mu_he=-(b**2),
        mu_te=binom(b, 2),
    )


# α = 0


@dataclass(frozen=True, slots=True)
class Alpha0Solution:
    d: int
    e_side: tuple[PPoly, ...]
    f_side: tuple[PPoly, ...]
    both_sides: tuple[PPoly, ...]


def differential_monomials(d: int) -> list[sp.Expr]:
    """Monomials ``Π x_k^{m_k}`` with ``Σ k m_k = d``, one per partition of ``d``."""

    basis = []
    for part in partitions(d):
        term = sp.Integer(1)
        for k, multiplicity in sorted(part.items()):
            term *= x(k) ** multiplicity
        basis.append(term)
    return sorted(basis, key=sp.default_sort_key)


def _lambda_free_kernel(engine: Engine, name: str, basis: Sequence[sp.Expr], d: int) -> sp.Matrix:
    """Columns spanning ``{P : ∂_λ [name_λ :P:] = 0}`` in the coordinates of ``basis``."""

    probe = engine.generator(name)
    rows: dict[tuple[int, tuple[DerivedGenerator, ...]], dict[int, Fraction]] = {}
    h_index = engine.spec.index("h")
    for col, mono in enumerate(basis):
        state = to_lambda_poly(PPoly(mono, d), h_index).coefficient(0)
        derivative = engine.bracket(probe, state).derivative()
        for n, coeff_state in derivative.items():
            for term, coeff in coeff_state.items():
                rows.setdefault((n, term), {})[col] = coeff
    matrix = sp.zeros(len(rows), len(basis))
    for r, key in enumerate(sorted(rows)):
        for col, coeff in rows[key].items():
            matrix[r, col] = to_rational(coeff)
    if not rows:
        return sp.eye(len(basis))
    kernel = matrix.nullspace()
    return sp.Matrix.hstack(*kernel) if kernel else sp.zeros(len(basis), 0)


def _normalized(vector: sp.Matrix, basis: Sequence[sp.Expr], d: int) -> PPoly:
    expr = sp.expand(sum((vector[i] * basis[i] for i in range(len(basis))), sp.Integer(0)))
    lead = expr.coeff(x(1), d)
    if lead == 0:
        lead = sp.Poly(expr, *sorted(expr.free_symbols, key=sp.default_sort_key)).coeffs()[0]
    return PPoly(expr / lead, d)


def alpha0_solve(d: int, *, weight_cap: int | None = None) -> Alpha0Solution:
    """Admissible P for α = 0: ``[e_λ :P:]`` and ``[f_λ :P:]`` free of λ."""

    if d < 1:
        raise ValueError("d must be at least 1")
    from conformalcalc.algebras.builtins import alpha_zero
    from conformalcalc.engine import Engine

    spec = alpha_zero(d)
    engine = Engine(spec) if weight_cap is None else Engine(spec, weight_cap=weight_cap)
    basis = differential_monomials(d)
    e_kernel = _lambda_free_kernel(engine, "e", basis, d)
    f_kernel = _lambda_free_kernel(engine, "f", basis, d)
    logger.debug("d=%d: e-side kernel %d, f-side kernel %d", d, e_kernel.cols, f_kernel.cols)

    e_side = tuple(_normalized(e_kernel[:, i], basis, d) for i in range(e_kernel.cols))
    f_side = tuple(_normalized(f_kernel[:, i], basis, d) for i in range(f_kernel.cols))

    both: list[PPoly] = []
    if e_kernel.cols and f_kernel.cols:
        joint = sp.Matrix.hstack(e_kernel, -f_kernel).nullspace()
        vectors = [e_kernel * z[: e_kernel.cols, :] for z in joint]
        if vectors:
            for column in sp.Matrix.hstack(*vectors).columnspace():
                both.append(_normalized(column, basis, d))
    return Alpha0Solution(d=d, e_side=e_side, f_side=f_side, both_sides=tuple(both))


# Poisson (classical) mode


def classical_classify(d: int, alpha: Fraction | int) -> list[ClassificationSolution]:
    """
    Classify classical brackets of degree ``d``.

    For α != 0 the Schur-form P is the only candidate; both parities of ``e``
    are tested by computing the Jacobi residuals in the Poisson engine. For
    α = 0 every ``P = p(h)`` works with ``e``, ``f`` even; the marker carries
    ``h^d``.
    """

    if d < 1:
        raise ValueError("d must be at least 1")
    a = Fraction(alpha)
    if not a:
        return [ClassificationSolution(None, 0, "p_of_h", PPoly(x(1) ** d, d))]

    from conformalcalc.algebras.builtins import from_polynomial
    from conformalcalc.verify import jacobi_residual

    beta = 1 / a
    P = build_P("schur_form", d, beta, 1)
    solutions: list[ClassificationSolution] = []
    for parity in (0, 1):
        spec = from_polynomial(P, alpha=a, parity_e=parity, mode="classical", name=f"classical(d={d})")
        residuals = [jacobi_residual(*triple, spec) for triple in (("h", "e", "f"), ("e", "e", "f"), ("f", "f", "e"))]
        if all(r.is_zero() for r in residuals):
            kind: SolutionKind = "current" if d == 1 else _kind_for(beta, d)
            solutions.append(ClassificationSolution(beta, parity, kind, P))
        else:
            logger.debug("classical d=%d parity=%d rejected", d, parity)
    return solutions
