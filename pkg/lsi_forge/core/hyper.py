"""Fourier-multiplier semigroups P_t = exp(-t A_gamma) and their L_p -> L_q norms.

Norms are taken for the normalized counting measure on Z_n. The optimal time
search lower-bounds ||P_t||_{p->q} by multi-start maximization, so a time
reported as contractive may still be a near-miss; those are flagged.
"""

from __future__ import annotations

import math
from functools import partial
from typing import List, Optional, Sequence, Tuple

import mpmath as mp
import numpy as np
from numpy.typing import ArrayLike
from pydantic import BaseModel, ConfigDict, Field
from scipy.optimize import minimize

from ..config import current_settings
from ..exceptions import InvalidInputError
from ..models import HypTimeEstimate, RatioAtTime, Weight
from ..utils.logger import get_logger, kv
from ..utils.parallel import ordered_map, spawn_generators
from ..utils.timing import timed
from .dft import fourier_matrix

log = get_logger(__name__)


class SemigroupOperator(BaseModel):
    """P_t for one weight: multiplier exp(-t gamma(k)) on the Fourier side."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    n: int = Field(..., ge=1)
    weight: Weight
    t: float = Field(..., ge=0)
    matrix: np.ndarray = Field(..., description="Real n x n matrix of P_t")

    @property
    def action(self) -> np.ndarray:
        return np.exp(-self.t * self.weight.as_floats())

    def compose(self, other: "SemigroupOperator") -> "SemigroupOperator":
        """P_t o P_s = P_{t+s}."""
        if other.weight != self.weight:
            raise InvalidInputError("cannot compose semigroups of different weights", field="weight")
        return semigroup(self.weight, self.t + other.t)


def _multiplier_matrix(n: int, multipliers: np.ndarray) -> np.ndarray:
    """F^{-1} diag(m) F, realified."""
    F = fourier_matrix(n).entries
    matrix = (np.conj(F) * multipliers) @ F / n
    imag = float(np.max(np.abs(matrix.imag)))
    if imag > 1e-9:
        log.warning("hyper.complex_kernel %s", kv(n=n, max_imaginary=imag))
    return np.ascontiguousarray(matrix.real)


def semigroup_matrix(weight: Weight, t: float) -> np.ndarray:
    if t < 0:
        raise InvalidInputError(f"time must be >= 0, got {t}", field="t")
    return _multiplier_matrix(weight.n, np.exp(-t * weight.as_floats()))


def semigroup(weight: Weight, t: float) -> SemigroupOperator:
    return SemigroupOperator(n=weight.n, weight=weight, t=t, matrix=semigroup_matrix(weight, t))


def _as_function(f: ArrayLike, n: int) -> np.ndarray:
    arr = np.asarray(f, dtype=float)
    if arr.shape != (n,):
        raise InvalidInputError(f"function must have length {n}, got shape {arr.shape}", field="f")
    return arr


def apply_semigroup(op: SemigroupOperator, f: ArrayLike) -> np.ndarray:
    return op.matrix @ _as_function(f, op.n)


def generator_apply(weight: Weight, f: ArrayLike) -> np.ndarray:
    """A_gamma f: Fourier multiplier by gamma."""
    return _multiplier_matrix(weight.n, weight.as_floats()) @ _as_function(f, weight.n)


def lp_norm(f: ArrayLike, p: float) -> float:
    """((1/n) sum |f_j|^p)^(1/p)."""
    if p < 1:
        raise InvalidInputError(f"p must be >= 1, got {p}", field="p")
    arr = np.abs(np.asarray(f, dtype=float))
    return float(np.mean(arr**p) ** (1.0 / p))


def lower_bound(p: float, q: float) -> float:
    """(1/2) log((q - 1)/(p - 1))."""
    _check_exponents(p, q)
    return 0.5 * math.log((q - 1.0) / (p - 1.0))


def gross_time_from_lsi(C: float, p: float, q: float) -> float:
    """Hypercontractive time (C/4) log((q - 1)/(p - 1)) implied by an LSI with constant C."""
    if C <= 0:
        raise InvalidInputError(f"LSI constant must be positive, got {C}", field="C")
    _check_exponents(p, q)
    return C / 4.0 * math.log((q - 1.0) / (p - 1.0))


def z3_time_formula(q: float) -> float:
    """Optimal t_{2,q} on Z_3 from the weighted two-point reduction."""
    if q <= 2:
        raise InvalidInputError(f"formula needs q > 2, got {q}", field="q")
    with mp.workdps(50):
        qq = mp.mpf(q)
        e = 2 / qq - 1
        third, two_thirds = mp.mpf(1) / 3, mp.mpf(2) / 3
        numerator = two_thirds * third**e - third * two_thirds**e
        denominator = two_thirds ** (2 / qq) - third ** (2 / qq)
        return float(mp.log(numerator / denominator) / 2)


def positivity_failures(weight: Weight, ts: Sequence[float], tol: float = 1e-12) -> List[float]:
    """Times at which P_t has a negative kernel entry (so maps some f >= 0 outside the cone)."""
    failures = [float(t) for t in ts if float(np.min(semigroup_matrix(weight, t))) < -tol]
    if failures:
        log.info("hyper.positivity %s", kv(weight=weight.label, failing_times=len(failures)))
    return failures


def _check_exponents(p: float, q: float) -> None:
    if not 1 < p <= q:
        raise InvalidInputError(f"need 1 < p <= q, got p={p} q={q}", field="p,q")


# ==============================================================================
# Norm ratio maximization
# ==============================================================================


def _neg_log_ratio(f: np.ndarray, M: np.ndarray, p: float, q: float) -> Tuple[float, np.ndarray]:
    """-(log ||M f||_q - log ||f||_p) + (log ||f||_p)^2 / 2 and its gradient.

    The ratio is scale invariant; the quadratic term only pins ||f||_p near 1.
    """
    n = f.size
    g = M @ f
    abs_f, abs_g = np.abs(f), np.abs(g)
    fp = np.mean(abs_f**p)
    gq = np.mean(abs_g**q)
    if fp <= 0 or gq <= 0:
        return 0.0, np.zeros_like(f)
    log_fp = math.log(fp) / p
    log_gq = math.log(gq) / q
    d_fp = np.sign(f) * abs_f ** (p - 1) / (n * fp)
    d_gq = M.T @ (np.sign(g) * abs_g ** (q - 1)) / (n * gq)
    value = -(log_gq - log_fp) + 0.5 * log_fp**2
    grad = -(d_gq - d_fp) + log_fp * d_fp
    return value, grad


def _start(n: int, rng: np.random.Generator, signed: bool) -> np.ndarray:
    kind = rng.integers(3)
    if kind == 0:
        f = 1.0 + rng.uniform(-0.9, 0.9) * rng.standard_normal(n) / math.sqrt(n)
    elif kind == 1:
        f = rng.exponential(size=n)
    else:
        f = np.where(rng.random(n) < 0.5, 1.0, rng.uniform(0.0, 1.0))
    f = f * np.where(rng.random(n) < 0.3, -1.0, 1.0) if signed else np.abs(f)
    if np.ptp(f) < 1e-6:
        f[0] += 0.5
    return f


def _maximize_once(M: np.ndarray, p: float, q: float, signed: bool, rng: np.random.Generator) -> Tuple[float, np.ndarray, bool]:
    n = M.shape[0]
    f0 = _start(n, rng, signed)
    bounds = None if signed else [(0.0, None)] * n
    result = minimize(
        _neg_log_ratio,
        f0,
        args=(M, p, q),
        jac=True,
        method="L-BFGS-B",
        bounds=bounds,
        options={"ftol": 1e-15, "gtol": 1e-12, "maxiter": 2000},
    )
    f = result.x
    ratio = lp_norm(M @ f, q) / lp_norm(f, p) if lp_norm(f, p) > 0 else 1.0
    return ratio, f, bool(result.success)


def _levels(f: np.ndarray) -> int:
    scale = max(float(np.max(np.abs(f))), 1e-300)
    return int(np.unique(np.round(f / scale, 6)).size)


def ratio_at_time(
    weight: Weight,
    t: float,
    p: float,
    q: float,
    starts: int,
    seed: int,
    signed: bool = False,
    threads: Optional[int] = None,
) -> RatioAtTime:
    """Best ||P_t f||_q / ||f||_p over ``starts`` local maximizations, constants included."""
    _check_exponents(p, q)
    if starts < 1:
        raise InvalidInputError(f"starts must be >= 1, got {starts}", field="starts")
    cfg = current_settings()
    M = semigroup_matrix(weight, t)
    outcomes = ordered_map(
        partial(_maximize_once, M, p, q, signed),
        spawn_generators(seed, starts),
        threads or cfg.threads,
    )
    best_ratio, best_f = 1.0, np.ones(weight.n)
    failed = 0
    for ratio, f, ok in outcomes:
        failed += not ok
        if ratio > best_ratio:
            best_ratio, best_f = ratio, f

    tol = cfg.tolerances.contractive
    excess = best_ratio - 1.0
    near_critical = tol / 10.0 < excess < 10.0 * tol
    return RatioAtTime(
        t=t,
        ratio=best_ratio,
        contractive=excess <= tol,
        uncertain=near_critical or failed > starts // 2,
        extremizer_levels=_levels(best_f),
    )


def max_ratio(
    weight: Weight,
    t: float,
    p: float,
    q: float,
    starts: int,
    seed: int = 0,
    signed: bool = False,
) -> float:
    """Lower bound on ||P_t||_{p->q} restricted to f >= 0 (all real f with ``signed``)."""
    if t < 0:
        raise InvalidInputError(f"time must be >= 0, got {t}", field="t")
    return ratio_at_time(weight, t, p, q, starts, seed, signed).ratio


@timed("hyper.estimate_optimal_time", level="info")
def estimate_optimal_time(
    weight: Weight,
    p: float,
    q: float,
    starts: Optional[int] = None,
    seed: int = 0,
    signed: bool = False,
) -> HypTimeEstimate:
    """Bisection on t for the contractivity threshold of ||P_t||_{p->q}."""
    _check_exponents(p, q)
    cfg = current_settings()
    starts = starts or cfg.hyper_starts
    width = cfg.tolerances.bisection_width
    bound = lower_bound(p, q)
    base = dict(n=weight.n, label=weight.label, p=p, q=q, lower_bound=bound, signed=signed)

    if p == q:
        return HypTimeEstimate(t_star=0.0, bracket=(0.0, 0.0), **base)

    visited: List[RatioAtTime] = []

    def evaluate(t: float) -> RatioAtTime:
        result = ratio_at_time(weight, t, p, q, starts, seed + len(visited), signed)
        visited.append(result)
        log.debug("hyper.ratio %s", kv(t=t, ratio=result.ratio, contractive=result.contractive))
        return result

    t_lo, t_hi = 0.0, max(bound, 0.05)
    doublings = 0
    while not evaluate(t_hi).contractive:
        t_lo, t_hi = t_hi, 2.0 * t_hi
        doublings += 1
        if doublings > 12:
            log.warning("hyper.no_contractive_time %s", kv(weight=weight.label, p=p, q=q, t_max=t_hi))
            return HypTimeEstimate(t_star=t_hi, bracket=(t_lo, t_hi), max_ratio_at_t=visited, uncertain=True, **base)

    while t_hi - t_lo > width:
        mid = 0.5 * (t_lo + t_hi)
        if evaluate(mid).contractive:
            t_hi = mid
        else:
            t_lo = mid

    estimate = HypTimeEstimate(
        t_star=0.5 * (t_lo + t_hi),
        bracket=(t_lo, t_hi),
        max_ratio_at_t=visited,
        uncertain=any(pr.uncertain for pr in visited),
        **base,
    )
    log.info(
        "hyper.optimal_time %s",
        kv(weight=weight.label, p=p, q=q, t_star=estimate.t_star, lower_bound=bound, evaluations=len(visited)),
    )
    return estimate
