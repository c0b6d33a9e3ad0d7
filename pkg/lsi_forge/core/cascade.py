"""Auxiliary chains h, h1..h8 for the two-coordinate obstruction on Z6 and Z4.

Each chain starts from a scalar function h of the ratio x = lam_j0'/lam_j0 and
builds h1 = (x - 1)^2 W(x)^2 h' followed by derivative-weighted transforms.
Positivity of the last member propagates back to h > 0 on x > 1.

The closed forms suffer 0/0 cancellation near x = 1; inside a band around 1
every member is evaluated from its Taylor polynomial (sympy series), outside
from the lambdified closed form. Relations compare a member with the symbolic
derivative of its predecessor; grid points where double precision cannot
decide a check are re-evaluated with mpmath.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Callable, Dict, List, Literal, Sequence, Tuple

import mpmath as mp
import numpy as np
import sympy as sp
from numpy.typing import ArrayLike
from scipy.optimize import brentq

from ..config import current_settings
from ..exceptions import DomainError, InvalidInputError
from ..models import CascadeReport, RelationCheck
from ..utils.logger import get_logger, kv
from ..utils.timing import timed

log = get_logger(__name__)

CaseId = Literal["Z6", "Z4"]

X = sp.Symbol("x", positive=True)
T = sp.Symbol("t")
L = sp.log(X)

CHAIN = ("h", "h1", "h2", "h3", "h4", "h5", "h6", "h7", "h8")

_SERIES_ORDER = 12
_EXTENSION_BAND = 1e-7
_COEFFICIENT_FLOOR = 1e-20
_PRECISE_DPS = 40

# Signs at x = 1 after continuous extension; derivative order is the number of primes.
Z6_SIGNS: Dict[str, str] = {
    "h": "zero",
    "h'": "zero",
    "h1'": "zero",
    "h2'": "zero",
    "h2''": "zero",
    "h3'": "zero",
    "h4'": "zero",
    "h4''": "zero",
    "h5'": "positive",
    "h6'": "positive",
    "h7'": "positive",
    "h7''": "positive",
    "h8'": "positive",
}

Z4_SIGNS: Dict[str, str] = {"h": "zero", "h'": "zero"}


# ==============================================================================
# Symbolic definitions
# ==============================================================================


def _z6_weight() -> sp.Expr:
    return X**2 + 6 * X * L - 1


def _z4_weight() -> sp.Expr:
    return 4 * X * L - sp.Rational(2, 5) * (X**2 - 1)


def _xlogx_ratio() -> sp.Expr:
    return X * L / (X - 1)


def _z6_h() -> Tuple[sp.Expr, sp.Expr]:
    """(display form, form regular at x = 1)."""
    P = _z6_weight()
    fraction = (-2 * X**2 + 4 * X * L + 2) / P
    tail = -_xlogx_ratio() + 1 - fraction
    display = sp.log(P) - sp.log(8 * (X - 1)) + tail
    regular = sp.log(P / (X - 1)) - sp.log(8) + tail
    return display, regular


def _z4_h() -> Tuple[sp.Expr, sp.Expr]:
    E = _z4_weight()
    fraction = (-4 * X**2 + 8 * X * L + 4) / (X**2 - 10 * X * L - 1)
    tail = fraction - _xlogx_ratio() + 1
    display = sp.log(E) + tail - sp.log(sp.Rational(16, 5) * (X - 1))
    regular = sp.log(E / (X - 1)) - sp.log(sp.Rational(16, 5)) + tail
    return display, regular


def _cleared_derivative_z6() -> sp.Expr:
    """(x - 1)^2 P^2 h'(x) written without denominators."""
    P = _z6_weight()
    N = -2 * X**2 + 4 * X * L + 2
    dP, dN = sp.diff(P, X), sp.diff(N, X)
    return sp.expand(
        (X - 1) ** 2 * P * dP
        - (X - 1) * P**2
        - P**2 * ((L + 1) * (X - 1) - X * L)
        - (X - 1) ** 2 * (dN * P - N * dP)
    )


def _cleared_derivative_z4() -> sp.Expr:
    """(x - 1)^2 E^2 h'(x); the fraction's denominator equals -(5/2) E."""
    E = _z4_weight()
    D = X**2 - 10 * X * L - 1
    N = -4 * X**2 + 8 * X * L + 4
    dE, dD, dN = sp.diff(E, X), sp.diff(D, X), sp.diff(N, X)
    return sp.expand(
        (X - 1) ** 2 * E * dE
        + sp.Rational(4, 25) * (X - 1) ** 2 * (dN * D - N * dD)
        - (X - 1) * E**2
        - E**2 * ((L + 1) * (X - 1) - X * L)
    )


def _z6_closed_forms() -> Dict[str, sp.Expr]:
    return {
        "h1": 36 * X**2 * L**3
        - 24 * X * (X**2 - 1) * L**2
        + (11 * X**2 + 14 * X + 11) * (X - 1) ** 2 * L
        - 12 * (X + 1) * (X - 1) ** 3,
        "h2": -(X - 1) ** 2 * (37 * X**2 + 10 * X - 11)
        + 72 * X**2 * L**3
        - 12 * X * (6 * X**2 - 9 * X - 2) * L**2
        + 4 * X * (11 * X**3 - 18 * X**2 - 3 * X + 10) * L,
        "h3": 8
        * (
            -17 * X**3
            - 15 * X**2
            + 6 * (11 * X**3 - 24 * X**2 + 22 * X + 1) * L
            + 21 * X
            + 18 * X * L**3
            - 54 * (X - 2) * X * L**2
            + 11
        ),
        "h4": 24
        * (
            5 * X**3
            - 58 * X**2
            + 2 * (33 * X**2 - 66 * X + 58) * X * L
            + 51 * X
            + 6 * X * L**3
            + 18 * (3 - 2 * X) * X * L**2
            + 2
        ),
        "h5": 48 * (4 * (45 * X**2 - 73 * X + 28) + 6 * (33 * X**2 - 40 * X + 12) * L + (9 - 36 * X) * L**2),
        "h6": 96 * (279 * X**2 + 3 * (66 * X**2 - 52 * X + 3) * L - 266 * X - 18 * X * L**2 + 36),
        "h7": 96 * (756 * X**2 - 422 * X - 18 * X * L**2 + 12 * (33 * X - 16) * X * L + 9),
        "h8": 1152 * (225 * X + (66 * X - 3) * L - 19),
    }


def _evaluate(fn: Callable, x: np.ndarray) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        return np.broadcast_to(np.asarray(fn(arr), dtype=float), arr.shape)


def _evaluate_precise(fn: Callable, x: np.ndarray) -> np.ndarray:
    """Pointwise evaluation of an mpmath-lambdified expression at raised precision."""
    arr = np.asarray(x, dtype=float)
    with mp.workdps(_PRECISE_DPS):
        values = [fn(mp.mpf(float(xi))) for xi in arr.ravel()]
        return np.array([float(mp.re(v)) for v in values], dtype=float).reshape(arr.shape)


class Relation:
    """target = factor(x) * d^order(source)/dx^order."""

    def __init__(self, target: str, source: str, factor: sp.Expr, order: int, label: str):
        self.target = target
        self.source = source
        self.factor = factor
        self.order = order
        self.label = label
        self._factor_fn = sp.lambdify(X, factor, "numpy")
        self._derived: Callable = lambda x: np.full_like(x, np.nan)
        self._derived_precise: Callable = lambda x: mp.nan

    def bind(self, source: sp.Expr) -> None:
        """Attach the symbolic right-hand side factor * source^(order)."""
        derived = self.factor * sp.diff(source, X, self.order)
        self._derived = sp.lambdify(X, derived, "numpy")
        self._derived_precise = sp.lambdify(X, derived, "mpmath")
        self._source_precise = sp.lambdify(X, source, "mpmath")
        self._factor_precise = sp.lambdify(X, self.factor, "mpmath")

    def difference_quotient(self, x: np.ndarray) -> np.ndarray:
        """factor * source^(order) by mpmath numerical differentiation, independent of sympy.diff."""
        with mp.workdps(_PRECISE_DPS):
            values = [
                self._factor_precise(mp.mpf(float(xi))) * mp.diff(self._source_precise, mp.mpf(float(xi)), self.order)
                for xi in np.ravel(x)
            ]
            return np.array([float(mp.re(v)) for v in values], dtype=float)

    def factor_at(self, x: np.ndarray) -> np.ndarray:
        return np.broadcast_to(np.asarray(self._factor_fn(x), dtype=float), x.shape)

    def derived_at(self, x: np.ndarray) -> np.ndarray:
        return _evaluate(self._derived, x)

    def derived_precise(self, x: np.ndarray) -> np.ndarray:
        return _evaluate_precise(self._derived_precise, x)


def _relations(case_id: CaseId) -> List[Relation]:
    weight = _z6_weight() if case_id == "Z6" else _z4_weight()
    seventh = (X, 1, "h7 = x h6'") if case_id == "Z6" else (X**2, 2, "h7 = x^2 h6''")
    return [
        Relation("h1", "h", (X - 1) ** 2 * weight**2, 1, "h1 = (x-1)^2 W^2 h'"),
        Relation("h2", "h1", X, 1, "h2 = x h1'"),
        Relation("h3", "h2", X, 2, "h3 = x h2''"),
        Relation("h4", "h3", X, 1, "h4 = x h3'"),
        Relation("h5", "h4", X, 2, "h5 = x h4''"),
        Relation("h6", "h5", X, 1, "h6 = x h5'"),
        Relation("h7", "h6", seventh[0], seventh[1], seventh[2]),
        Relation("h8", "h7", X, 2, "h8 = x h7''"),
    ]


# ==============================================================================
# Numerical evaluation
# ==============================================================================


class ChainMember:
    """One member of a chain: lambdified closed form plus Taylor data at 1."""

    def __init__(self, name: str, display: sp.Expr, regular: sp.Expr):
        self.name = name
        self.expr = display
        self._closed: Callable = sp.lambdify(X, display, "numpy")
        self._precise: Callable = sp.lambdify(X, display, "mpmath")
        series = sp.expand(sp.series(regular.subs(X, 1 + T), T, 0, _SERIES_ORDER).removeO())
        coefficients = np.array(
            [float(sp.N(series.coeff(T, k), 30)) for k in range(_SERIES_ORDER)], dtype=float
        )
        # unsimplified symbolic zeros evaluate to round-off
        coefficients[np.abs(coefficients) < _COEFFICIENT_FLOOR] = 0.0
        self.coefficients = coefficients

    def derivative_at_one(self, order: int) -> float:
        return math.factorial(order) * float(self.coefficients[order])

    def series_derivative(self, x: np.ndarray, order: int) -> np.ndarray:
        coeffs = np.polynomial.polynomial.polyder(self.coefficients, order)
        return np.polynomial.polynomial.polyval(np.asarray(x, dtype=float) - 1.0, coeffs)

    def closed(self, x: np.ndarray) -> np.ndarray:
        return _evaluate(self._closed, x)

    def precise(self, x: np.ndarray) -> np.ndarray:
        return _evaluate_precise(self._precise, x)

    def __call__(self, x: ArrayLike) -> np.ndarray:
        arr = np.atleast_1d(np.asarray(x, dtype=float))
        band = current_settings().tolerances.series_band
        t = arr - 1.0
        near = np.abs(t) < band
        out = np.empty_like(arr)
        if near.any():
            out[near] = np.polynomial.polynomial.polyval(t[near], self.coefficients)
        if (~near).any():
            out[~near] = self.closed(arr[~near])
        return out


class AuxiliaryChain:
    """All members and relations of one case, built once per process."""

    def __init__(self, case_id: CaseId):
        self.case_id = case_id
        self.relations = _relations(case_id)
        self.notes: List[str] = []
        self.closed_form_checks: Dict[str, float] = {}

        display, regular = _z6_h() if case_id == "Z6" else _z4_h()
        exprs: Dict[str, Tuple[sp.Expr, sp.Expr]] = {"h": (display, regular)}

        if case_id == "Z6":
            transcribed = _z6_closed_forms()
            for name, expr in transcribed.items():
                exprs[name] = (expr, expr)
            derived_h1 = _cleared_derivative_z6()
            self.closed_form_checks["h1 vs (x-1)^2 P^2 h'"] = _symbolic_gap(derived_h1, transcribed["h1"])
            for rel in self.relations[1:]:
                derived = rel.factor * sp.diff(transcribed[rel.source], X, rel.order)
                self.closed_form_checks[rel.label] = _symbolic_gap(derived, transcribed[rel.target])
            h8pp = sp.diff(transcribed["h8"], X, 2)
            self.closed_form_checks["h8'' = 3456 (22x+1)/x^2"] = _symbolic_gap(h8pp, 3456 * (22 * X + 1) / X**2)
        else:
            previous = _cleared_derivative_z4()
            exprs["h1"] = (previous, previous)
            for rel in self.relations[1:]:
                previous = sp.expand(rel.factor * sp.diff(previous, X, rel.order))
                exprs[rel.target] = (previous, previous)
            self.notes.append(
                "h3 is taken as x h2'' (the listing also shows h3 = x h2'); closed forms derived symbolically"
            )

        self.members = {name: ChainMember(name, *pair) for name, pair in exprs.items()}
        for rel in self.relations:
            rel.bind(exprs[rel.source][0])
        h8pp = sp.diff(exprs["h8"][0], X, 2)
        self.h8_second = sp.lambdify(X, h8pp, "numpy")

    def domain_end(self) -> float:
        """Right end of the domain of h: infinite for Z6, first zero of the log argument for Z4."""
        if self.case_id == "Z6":
            return math.inf
        return brentq(lambda x: 4 * x * math.log(x) - 0.4 * (x * x - 1), 2.0, 100.0, xtol=1e-12)


def _symbolic_gap(derived: sp.Expr, closed: sp.Expr) -> float:
    """Max |derived - closed| relative to |closed| at a few points; 0 when the difference expands to 0."""
    difference = sp.expand(derived - closed)
    if difference == 0:
        return 0.0
    points = np.array([1.5, 2.0, 3.0, 7.0, 20.0])
    diff_fn = sp.lambdify(X, difference, "numpy")
    closed_fn = sp.lambdify(X, closed, "numpy")
    gap = np.abs(np.asarray(diff_fn(points), dtype=float))
    scale = np.maximum(np.abs(np.asarray(closed_fn(points), dtype=float)), 1.0)
    return float(np.max(gap / scale))


@lru_cache(maxsize=2)
def auxiliary_chain(case_id: CaseId) -> AuxiliaryChain:
    if case_id not in ("Z6", "Z4"):
        raise InvalidInputError(f"unknown chain case {case_id!r}", field="case")
    log.debug("cascade.build_chain %s", kv(case=case_id))
    return AuxiliaryChain(case_id)


# ==============================================================================
# Scalar evaluators
# ==============================================================================


def _check_positive(value: float, subexpression: str) -> None:
    if not value > 0:
        raise DomainError(
            f"log argument {subexpression} is not positive ({value})",
            subexpression=subexpression,
        )


def h_z6(x: float) -> float:
    """h(x) = log(x^2 + 6x log x - 1) - log(8(x - 1)) - x log x/(x - 1) + 1 - (-2x^2 + 4x log x + 2)/(x^2 + 6x log x - 1)."""
    _check_positive(x, "x")
    if abs(x - 1.0) < _EXTENSION_BAND:
        return 0.0
    _check_positive(8.0 * (x - 1.0), "8*(x - 1)")
    lx = math.log(x)
    P = x * x + 6.0 * x * lx - 1.0
    _check_positive(P, "x^2 + 6*x*log(x) - 1")
    return (
        math.log(P)
        - math.log(8.0 * (x - 1.0))
        - x * lx / (x - 1.0)
        + 1.0
        - (-2.0 * x * x + 4.0 * x * lx + 2.0) / P
    )


def h_z4(x: float) -> float:
    """h(x) = log(4x log x - (2/5)(x^2 - 1)) + (-4x^2 + 8x log x + 4)/(x^2 - 10x log x - 1)
    - log(16(x - 1)/5) - x log x/(x - 1) + 1."""
    _check_positive(x, "x")
    if abs(x - 1.0) < _EXTENSION_BAND:
        return 0.0
    _check_positive(16.0 * (x - 1.0) / 5.0, "16*(x - 1)/5")
    lx = math.log(x)
    E = 4.0 * x * lx - 0.4 * (x * x - 1.0)
    _check_positive(E, "4*x*log(x) - (2/5)*(x^2 - 1)")
    return (
        math.log(E)
        + (-4.0 * x * x + 8.0 * x * lx + 4.0) / (x * x - 10.0 * x * lx - 1.0)
        - math.log(16.0 * (x - 1.0) / 5.0)
        - x * lx / (x - 1.0)
        + 1.0
    )


def pair_functions(x: float) -> Tuple[float, float]:
    """(F(x), Theta(x)) with F(x) = -(2/3) x log x + (2/3) x and Theta(x) = F(x) - F(2 - x)."""
    if not 0.0 < x < 2.0:
        raise DomainError(f"pair functions need 0 < x < 2, got {x}", subexpression="x")

    def F(u: float) -> float:
        return -(2.0 / 3.0) * u * math.log(u) + (2.0 / 3.0) * u

    return F(x), F(x) - F(2.0 - x)


def theta_derivative(x: float) -> float:
    """Theta'(x) = -(2/3) log(x (2 - x))."""
    if not 0.0 < x < 2.0:
        raise DomainError(f"pair functions need 0 < x < 2, got {x}", subexpression="x")
    return -(2.0 / 3.0) * math.log(x * (2.0 - x))


# ==============================================================================
# Chain verification
# ==============================================================================


def _grid(x_max: float, samples: int) -> np.ndarray:
    """x = 1 + t with t log-spaced on [1e-6, x_max - 1]."""
    return 1.0 + np.geomspace(1e-6, x_max - 1.0, samples)


def _outside_band(x: np.ndarray) -> np.ndarray:
    return np.abs(x - 1.0) >= current_settings().tolerances.series_band


def _derived(chain: AuxiliaryChain, rel: Relation, x: np.ndarray) -> np.ndarray:
    """factor * source^(order): Taylor polynomial inside the series band, symbolic derivative outside."""
    out = np.empty_like(x)
    far = _outside_band(x)
    near = ~far
    out[near] = rel.factor_at(x[near]) * chain.members[rel.source].series_derivative(x[near], rel.order)
    out[far] = rel.derived_at(x[far])
    return out


def _relative_gap(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    scale = np.maximum(np.abs(a), np.abs(b))
    with np.errstate(invalid="ignore", divide="ignore"):
        gap = np.where(scale > 0, np.abs(a - b) / scale, 0.0)
    return np.nan_to_num(gap, nan=np.inf)


def _relation_check(chain: AuxiliaryChain, rel: Relation, x: np.ndarray, tol: float) -> RelationCheck:
    target = chain.members[rel.target]
    rel_err = _relative_gap(target(x), _derived(chain, rel, x))
    # both sides vanish to high order at 1; just outside the band the float sums cancel
    redo = (rel_err > 0.1 * tol) & _outside_band(x)
    if redo.any():
        xs = x[redo]
        rel_err[redo] = _relative_gap(target.precise(xs), rel.derived_precise(xs))
    worst = int(np.argmax(rel_err))

    spots = _difference_spots(x)
    difference_error = float(np.max(_relative_gap(target.precise(spots), rel.difference_quotient(spots))))
    return RelationCheck(
        relation=rel.label,
        max_rel_error=float(rel_err[worst]),
        worst_x=float(x[worst]),
        difference_error=difference_error,
        holds=bool(rel_err[worst] <= tol and difference_error <= tol),
        precise_points=int(redo.sum()),
    )


def _difference_spots(x: np.ndarray, count: int = 12) -> np.ndarray:
    """A few log-spaced grid points outside the series band for the numerical-differentiation oracle."""
    band = current_settings().tolerances.series_band
    return 1.0 + np.geomspace(1.01 * band, x[-1] - 1.0, count)


def _positive_on(member: ChainMember, x: np.ndarray) -> bool:
    values = member(x)
    doubtful = ~(values > 0) & _outside_band(x)
    if doubtful.any():
        values[doubtful] = member.precise(x[doubtful])
    return bool(np.all(values > 0))


def _values_at_one(chain: AuxiliaryChain) -> Dict[str, float]:
    values: Dict[str, float] = {}
    for name in CHAIN:
        member = chain.members[name]
        for order in range(3):
            values[name + "'" * order] = member.derivative_at_one(order)
    return values


def _sign_ok(value: float, expected: str, zero_tol: float, positive_tol: float) -> bool:
    if expected == "zero":
        return abs(value) < zero_tol
    return value > positive_tol


def _cascade(case_id: CaseId, x_max: float, samples: int) -> CascadeReport:
    if x_max <= 1:
        raise InvalidInputError(f"x_max must exceed 1, got {x_max}", field="x_max")
    if samples < 100:
        raise InvalidInputError(f"samples must be >= 100, got {samples}", field="samples")

    tol = current_settings().tolerances
    chain = auxiliary_chain(case_id)
    notes = list(chain.notes)

    end = chain.domain_end()
    upper = x_max
    if x_max >= end:
        # h' blows up like 1/E^2 at the end point
        upper = 0.99 * end
        notes.append(f"x_max clipped from {x_max} to {upper:.6f}: log argument of h vanishes at x = {end:.6f}")
    x = _grid(upper, samples)

    values = _values_at_one(chain)
    expected = Z6_SIGNS if case_id == "Z6" else Z4_SIGNS
    sign_table_ok = all(
        _sign_ok(values[name], sign, tol.zero_at_one, tol.positive_at_one) for name, sign in expected.items()
    )

    sign_verdicts = {name: _positive_on(chain.members[name], x) for name in CHAIN}
    negative = [name for name, ok in sign_verdicts.items() if not ok]
    if negative:
        notes.append(f"not positive on the whole grid: {', '.join(negative)}")

    checks = [_relation_check(chain, rel, x, tol.relation) for rel in chain.relations]

    h8pp = np.asarray(chain.h8_second(x), dtype=float)
    if case_id == "Z6":
        reference = 3456.0 * (22.0 * x + 1.0) / x**2
        gap = float(np.max(np.abs(h8pp - reference) / np.abs(reference)))
        chain_checks = {**chain.closed_form_checks, "h8'' grid": gap}
    else:
        chain_checks = dict(chain.closed_form_checks)
    if case_id == "Z6":
        # h8'' > 0 with h8'(1), h8(1) > 0 starts the backward propagation
        monotone = bool(np.all(h8pp > 0) and values["h8'"] > 0 and values["h8"] > 0)
    else:
        monotone = bool(sign_verdicts["h8"] and values["h8"] > 0)

    report = CascadeReport(
        case_id=case_id,
        grid=(float(x[0]), float(x[-1]), samples),
        x_max_requested=x_max,
        values_at_one=values,
        expected_signs=expected,
        sign_table_ok=sign_table_ok,
        sign_verdicts=sign_verdicts,
        relation_checks=checks,
        closed_form_checks=chain_checks,
        monotone_chain_ok=monotone,
        notes=notes,
    )
    failed = [c.relation for c in checks if not c.holds]
    if failed:
        log.warning("cascade.relation_failed %s", kv(case=case_id, relations=failed))
    log.info("cascade.done %s", kv(case=case_id, verdict=report.verdict, x_max=float(x[-1])))
    return report


@timed("cascade.z6", level="info")
def cascade_chain_z6(x_max: float, samples: int) -> CascadeReport:
    return _cascade("Z6", x_max, samples)


@timed("cascade.z4", level="info")
def cascade_chain_z4(x_max: float, samples: int) -> CascadeReport:
    return _cascade("Z4", x_max, samples)


def cascade_table(case_id: CaseId, xs: Sequence[float]) -> List[Dict[str, float]]:
    """Rows (x, h, h1, ..., h8) for plotting."""
    chain = auxiliary_chain(case_id)
    x = np.asarray(xs, dtype=float)
    if np.any(x <= 1.0):
        raise DomainError("cascade table needs x > 1", subexpression="x - 1")
    end = chain.domain_end()
    if np.any(x >= end):
        raise DomainError(f"h is undefined for x >= {end:.6f}", subexpression="4*x*log(x) - (2/5)*(x^2 - 1)")
    columns = {name: chain.members[name](x) for name in CHAIN}
    return [{"x": float(xi), **{name: float(columns[name][i]) for name in CHAIN}} for i, xi in enumerate(x)]
