"""From an LSI on Z_n to one on Z_2n.

A weight pair (gamma_n, gamma_2n) lifts the inequality when it satisfies the
pair condition and a scalar quadratic inequality in x >= 0 with parameters
r_a, r_b in [0, 1]. The chain checked by the Monte-Carlo step is

    H_2n[lam] <= <a, G_n a> + <b, G_n b> + (||a|| - ||b||)^2 / 2n <= 2 <lam, G_2n lam>

with lam = interleave(a, b).
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import List, Optional, Tuple

import numpy as np
from numpy.typing import ArrayLike

from ..config import current_settings
from ..exceptions import InvalidInputError, PreconditionError
from ..models import (
    DirichletComparison,
    EntropySplitReport,
    InductionReport,
    PairReport,
    QuadraticScan,
    Weight,
    Witness,
)
from ..utils.logger import get_logger, kv
from ..utils.parallel import batches
from ..utils.timing import timed
from .dft import dft_forward, interleave, twiddle_diagonal
from .spectral import (
    VectorInput,
    as_point,
    build_form,
    dirichlet,
    dirichlet_batch,
    entropy_batch,
    sample_positive_sphere,
)
from .weights import check_pair_condition, gamma_even_tower, gamma_odd_base, phi4, tower_pairs

log = get_logger(__name__)

Pair = Tuple[Weight, Weight]


def _check_pair_sizes(pair: Pair) -> int:
    lower, upper = pair
    if upper.n != 2 * lower.n:
        raise InvalidInputError(
            f"upper weight must live on Z_{2 * lower.n}, got Z_{upper.n}",
            details={"lower_n": lower.n, "upper_n": upper.n},
        )
    return lower.n


# ==============================================================================
# Quadratic inequality
# ==============================================================================


def quadratic_coefficients(pair: Pair, r_a: ArrayLike, r_b: ArrayLike) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(A, B, C) with lhs(x) = A x^2 + B x + C; broadcasts over r_a, r_b."""
    n = _check_pair_sizes(pair)
    lower, upper = pair
    ra = np.asarray(r_a, dtype=float)
    rb = np.asarray(r_b, dtype=float)
    G = float(upper[n])
    if n % 2:
        ones = np.ones(np.broadcast(ra, rb).shape)
        return (G - 1.0) * ones, (2.0 - 2.0 * G) * ones, (G - 1.0) * ones
    c = 2.0 * float(upper[n // 2]) - 2.0 * float(lower[n // 2]) - 1.0
    s = np.sqrt((1.0 + ra) * (1.0 + rb))
    A = c * rb + G - 1.0
    B = -2.0 * G + 2.0 * s
    C = c * ra + G - 1.0
    return np.broadcast_arrays(A, B, C)


def _check_unit(value: float, name: str) -> None:
    if not 0.0 <= value <= 1.0:
        raise InvalidInputError(f"{name} must lie in [0, 1], got {value}", field=name)


def quadratic_lhs(pair: Pair, x: float, r_a: float, r_b: float) -> float:
    """Left side of the quadratic inequality, even or odd branch by the lower order."""
    if x < 0:
        raise InvalidInputError(f"x must be >= 0, got {x}", field="x")
    _check_unit(r_a, "r_a")
    _check_unit(r_b, "r_b")
    A, B, C = quadratic_coefficients(pair, r_a, r_b)
    return float(A * x * x + B * x + C)


def corner_function_h(r_a: float, r_b: float) -> float:
    """h(r_a, r_b) = r_a (24 r_b + 35) + 5 (-30 sqrt(1 + r_a) sqrt(1 + r_b) + 7 r_b + 30)."""
    _check_unit(r_a, "r_a")
    _check_unit(r_b, "r_b")
    s = math.sqrt(1.0 + r_a) * math.sqrt(1.0 + r_b)
    return r_a * (24.0 * r_b + 35.0) + 5.0 * (-30.0 * s + 7.0 * r_b + 30.0)


def _analytic_kind(pair: Pair) -> Optional[str]:
    lower, upper = pair
    n = lower.n
    if n % 2:
        return None
    if n >= 6 and lower.values == gamma_even_tower(n).values and upper.values == gamma_even_tower(2 * n).values:
        return "even_tower"
    if n >= 4 and lower.values == gamma_odd_base(n).values and upper.values == gamma_odd_base(2 * n).values:
        return "odd_base_tower"
    if n == 4 and lower.values == phi4().values and upper.values == gamma_even_tower(8).values:
        return "phi4_tower"
    return None


def analytic_minimum(pair: Pair, r_a: ArrayLike, r_b: ArrayLike) -> Optional[np.ndarray]:
    """Closed-form minimum over x >= 0 for the pair families that have one, else None."""
    kind = _analytic_kind(pair)
    if kind is None:
        return None
    n = pair[0].n
    ra = np.asarray(r_a, dtype=float)
    rb = np.asarray(r_b, dtype=float)
    s = np.sqrt((1.0 + ra) * (1.0 + rb))
    if kind == "even_tower":
        return (2.0 * (n - 1) * (s - 1.0) + (n - 3) * (ra + rb)) / (rb + n - 2)
    if kind == "odd_base_tower":
        return np.broadcast_to(ra * (n - 3), np.broadcast(ra, rb).shape).astype(float)
    h = ra * (24.0 * rb + 35.0) + 5.0 * (-30.0 * s + 7.0 * rb + 30.0)
    return h / (5.0 * (rb - 10.0))


@timed("induction.scan_quadratic")
def scan_quadratic(pair: Pair, resolution: int, x_max: Optional[float] = None) -> QuadraticScan:
    """Grid scan of the quadratic on x in {0} U logspace(.., x_max) and (r_a, r_b) in [0, 1]^2,
    plus the vertex -B/(2A) of every cell with A > 0."""
    n = _check_pair_sizes(pair)
    if resolution < 50:
        raise InvalidInputError(f"resolution must be >= 50, got {resolution}", field="resolution")
    cfg = current_settings()
    x_max = x_max or cfg.quadratic_x_max
    slack = cfg.tolerances.slack

    r = np.linspace(0.0, 1.0, resolution)
    xs = np.concatenate([[0.0], np.geomspace(1e-6, x_max, resolution)])
    kind = _analytic_kind(pair)

    best = (math.inf, 0.0, 0.0, 0.0)
    unbounded = False
    analytic_gap = 0.0 if kind else None
    analytic_floor = math.inf

    for ra in r:
        A, B, C = quadratic_coefficients(pair, ra, r)
        values = A[:, None] * xs[None, :] ** 2 + B[:, None] * xs[None, :] + C[:, None]
        idx = np.argmin(values, axis=1)
        cell_min = values[np.arange(r.size), idx]
        cell_x = xs[idx]

        with np.errstate(divide="ignore", invalid="ignore"):
            vertex = np.where(A > 0, -B / (2.0 * A), np.nan)
        inside = np.isfinite(vertex) & (vertex >= 0) & (vertex <= x_max)
        vertex_value = np.where(inside, C - B * B / np.where(A > 0, 4.0 * A, 1.0), np.inf)
        better = vertex_value < cell_min
        cell_min = np.where(better, vertex_value, cell_min)
        cell_x = np.where(better, vertex, cell_x)

        unbounded |= bool(np.any((A < 0) | ((A == 0) & (B < 0))))

        j = int(np.argmin(cell_min))
        if cell_min[j] < best[0]:
            best = (float(cell_min[j]), float(cell_x[j]), float(ra), float(r[j]))

        if kind:
            closed = analytic_minimum(pair, ra, r)
            analytic_gap = max(analytic_gap, float(np.max(np.abs(cell_min - closed))))
            analytic_floor = min(analytic_floor, float(np.min(closed)))

    min_value, x_at, ra_at, rb_at = best
    verdict = min_value >= -slack and not unbounded and (kind is None or analytic_floor >= -slack)
    witness = None
    if not verdict:
        witness = Witness(
            kind="quadratic",
            value=min_value,
            inputs={
                "pair": [pair[0].label, pair[1].label],
                "x": x_at,
                "r_a": ra_at,
                "r_b": rb_at,
                "unbounded": unbounded,
            },
        )
    scan = QuadraticScan(
        pair=pair,
        parity="odd" if n % 2 else "even",
        grid_x=(0.0, float(x_max), int(xs.size)),
        grid_r=(0.0, 1.0, resolution),
        min_value=min_value,
        min_location=(x_at, ra_at, rb_at),
        unbounded=unbounded,
        analytic_kind=kind,
        analytic_gap=analytic_gap,
        verdict=verdict,
        witness=witness,
    )
    log.debug(
        "induction.quadratic %s",
        kv(lower=pair[0].label, upper=pair[1].label, min_value=min_value, unbounded=unbounded, verdict=verdict),
    )
    return scan


def pair_check(pair: Pair, resolution: Optional[int] = None) -> PairReport:
    """Pair condition clauses with the quadratic scan attached."""
    report = check_pair_condition(*pair)
    scan = scan_quadratic(pair, resolution or current_settings().resolution)
    return report.model_copy(update={"quadratic": scan})


@timed("induction.tower_report", level="info")
def tower_report(limit: int = 128, resolution: Optional[int] = None) -> List[PairReport]:
    reports = [pair_check(pair, resolution) for pair in tower_pairs(limit)]
    failing = [f"{r.lower}:{r.upper}" for r in reports if not r.holds]
    log.info("induction.tower %s", kv(pairs=len(reports), failing=failing))
    return reports


@lru_cache(maxsize=64)
def _certify(lower: Weight, upper: Weight, resolution: int) -> PairReport:
    return pair_check((lower, upper), resolution)


def _require_preconditions(pair: Pair) -> int:
    n = _check_pair_sizes(pair)
    if n < 3:
        raise PreconditionError(
            f"Dirichlet comparison needs n >= 3, got n = {n}",
            clause="n>=3",
        )
    report = _certify(pair[0], pair[1], current_settings().resolution)
    if not report.condition_holds:
        clause = report.failing_clauses[0]
        raise PreconditionError(
            f"pair ({pair[0].label}, {pair[1].label}) fails clause {clause}",
            clause=clause,
            details={"clause_details": report.clause_details},
        )
    if not report.quadratic.verdict:
        raise PreconditionError(
            f"pair ({pair[0].label}, {pair[1].label}) fails the quadratic inequality",
            clause="quadratic",
            details={"witness": report.quadratic.witness.model_dump() if report.quadratic.witness else None},
        )
    return n


# ==============================================================================
# Dirichlet comparison
# ==============================================================================


def compare_dirichlet(pair: Pair, a: VectorInput, b: VectorInput) -> DirichletComparison:
    n = _require_preconditions(pair)
    a_arr = as_point(a, n, name="a")
    b_arr = as_point(b, n, name="b")
    lower_form = build_form(pair[0])
    upper_form = build_form(pair[1])

    gap = float(np.linalg.norm(a_arr) - np.linalg.norm(b_arr))
    lhs = dirichlet(lower_form, a_arr) + dirichlet(lower_form, b_arr) + gap * gap / (2 * n)
    rhs = 2.0 * dirichlet(upper_form, interleave(a_arr, b_arr))
    return DirichletComparison(lhs=lhs, rhs=rhs, holds=lhs <= rhs + current_settings().tolerances.slack)


def frequency_block_dirichlet(pair: Pair, a: VectorInput, b: VectorInput) -> float:
    """2<lam, G_2n lam> from the n-point transforms of the halves.

    sum_k [g(k) (|a_k|^2 + |b_k|^2) / n^2 + (g(n+k) - g(k)) |a_k - D_k b_k|^2 / 2n^2],
    g = gamma_2n, D the twiddle diagonal.
    """
    n = _check_pair_sizes(pair)
    a_hat = dft_forward(as_point(a, n, name="a"))
    b_hat = dft_forward(as_point(b, n, name="b"))
    g = pair[1].as_floats()
    low, high = g[:n], g[n:]
    mixed = np.abs(a_hat - twiddle_diagonal(n).entries * b_hat) ** 2
    total = np.sum(low * (np.abs(a_hat) ** 2 + np.abs(b_hat) ** 2)) / n**2
    total += np.sum((high - low) * mixed) / (2 * n**2)
    return float(total)


def two_point_lsi(x: float, y: float) -> Tuple[float, float]:
    """(1/4)(x^2 log(2x^2/(x^2+y^2)) + y^2 log(2y^2/(x^2+y^2))) against ((x - y)/2)^2."""
    if x < 0 or y < 0:
        raise InvalidInputError(f"two-point LSI needs x, y >= 0, got ({x}, {y})", field="x,y")
    if x == 0 and y == 0:
        raise InvalidInputError("two-point LSI is undefined at (0, 0)", field="x,y")
    return 0.25 * _two_point_sum(x, y), ((x - y) / 2.0) ** 2


def _two_point_sum(x: float, y: float) -> float:
    total = x * x + y * y
    out = 0.0
    for v in (x, y):
        if v > 0:
            out += v * v * math.log(2.0 * v * v / total)
    return out


# ==============================================================================
# Monte-Carlo chain
# ==============================================================================


@timed("induction.step", level="info")
def induction_step(
    pair: Pair,
    samples: int,
    seed: int = 0,
    batch_size: int = 50_000,
) -> InductionReport:
    """Sample lam in R_+^2n and check both links of the chain."""
    n = _require_preconditions(pair)
    if samples < 1:
        raise InvalidInputError(f"samples must be >= 1, got {samples}", field="samples")
    slack = current_settings().tolerances.slack
    lower_form = build_form(pair[0])
    upper_form = build_form(pair[1])
    rng = np.random.default_rng(seed)

    entropy_min = math.inf
    comparison_min = math.inf
    witnesses: List[Witness] = []

    for start, stop in batches(samples, batch_size):
        rows = sample_positive_sphere(2 * n, stop - start, rng)
        a, b = rows[:, 0::2], rows[:, 1::2]
        gap = np.linalg.norm(a, axis=1) - np.linalg.norm(b, axis=1)
        middle = dirichlet_batch(lower_form, a) + dirichlet_batch(lower_form, b) + gap * gap / (2 * n)
        entropy_slack = middle - entropy_batch(rows)
        comparison_slack = 2.0 * dirichlet_batch(upper_form, rows) - middle

        for name, values in (("entropy_split", entropy_slack), ("dirichlet_comparison", comparison_slack)):
            i = int(np.argmin(values))
            if values[i] < -slack and len(witnesses) < 10:
                witnesses.append(
                    Witness(kind=name, value=float(values[i]), inputs={"lambda": rows[i].tolist(), "seed": seed})
                )
        entropy_min = min(entropy_min, float(entropy_slack.min()))
        comparison_min = min(comparison_min, float(comparison_slack.min()))

    report = InductionReport(
        n=n,
        lower=pair[0].label,
        upper=pair[1].label,
        samples=samples,
        seed=seed,
        entropy_slack_min=entropy_min,
        comparison_slack_min=comparison_min,
        verdict=entropy_min >= -slack and comparison_min >= -slack,
        witnesses=witnesses,
    )
    log.info(
        "induction.step.done %s",
        kv(lower=report.lower, upper=report.upper, entropy_slack=entropy_min, comparison_slack=comparison_min),
    )
    return report


def _half_entropy(rows: np.ndarray) -> np.ndarray:
    """Row-wise H_n / 2, zero for zero rows."""
    out = np.zeros(rows.shape[0])
    nonzero = np.any(rows > 0, axis=1)
    out[nonzero] = entropy_batch(rows[nonzero]) / 2.0
    return out


@timed("induction.entropy_split")
def entropy_split_check(n: int, samples: int, seed: int = 0) -> EntropySplitReport:
    """Compare inner + outer entropy pieces with H_2n on sampled lam."""
    if n < 1:
        raise InvalidInputError(f"n must be >= 1, got {n}", field="n")
    tol = current_settings().tolerances.dft
    rng = np.random.default_rng(seed)
    max_abs = 0.0
    max_outer = 0.0
    for start, stop in batches(samples, 50_000):
        rows = sample_positive_sphere(2 * n, stop - start, rng)
        a, b = rows[:, 0::2], rows[:, 1::2]
        sa = np.sum(a * a, axis=1)
        sb = np.sum(b * b, axis=1)
        total = sa + sb
        with np.errstate(divide="ignore", invalid="ignore"):
            block = np.where(sa > 0, sa * np.log(2 * sa / total), 0.0) + np.where(sb > 0, sb * np.log(2 * sb / total), 0.0)
        outer = block / (2 * n)
        pieces = _half_entropy(a) + _half_entropy(b) + outer
        max_abs = max(max_abs, float(np.max(np.abs(pieces - entropy_batch(rows)))))

        norms = np.stack([np.sqrt(sa), np.sqrt(sb)], axis=1)
        max_outer = max(max_outer, float(np.max(np.abs(outer - entropy_batch(norms) / n))))

    verdict = max_abs <= 10 * tol and max_outer <= 10 * tol
    return EntropySplitReport(
        n=n,
        samples=samples,
        seed=seed,
        max_abs_error=max_abs,
        max_outer_error=max_outer,
        verdict=verdict,
    )

