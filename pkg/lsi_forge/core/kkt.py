"""Stationary systems of the LSI objective and their numerical search.

Absorbed system (multiplier of the sphere constraint rescaled away):

    4 Gamma lam - (4/n) (lam_j log lam_j)_j - nu = 0,
    lam >= 0, nu >= 0, lam_j nu_j = 0, 0 < ||lam||^2 < n.

If it has no solution the LSI with constant 2 holds for the weight. The search
below is numerical evidence for that, never a proof.
"""

from __future__ import annotations

import math
from functools import partial
from typing import List, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import ArrayLike
from scipy.optimize import brentq, least_squares

from ..config import current_settings
from ..exceptions import InvalidInputError
from ..models import KKTSearchReport, KKTState, SphereMinimum
from ..utils.logger import get_logger, kv
from ..utils.parallel import ordered_map, spawn_generators
from ..utils.timing import timed
from .spectral import (
    SpectralForm,
    VectorInput,
    as_point,
    dirichlet_batch,
    entropy_batch,
    lsi_objective,
    sample_positive_sphere,
)

log = get_logger(__name__)

_CLAMP = 1e-12


def _xlogx(x: np.ndarray) -> np.ndarray:
    out = np.zeros_like(x, dtype=float)
    mask = x > 0
    out[mask] = x[mask] * np.log(x[mask])
    return out


def _as_multipliers(nu: ArrayLike, n: int) -> np.ndarray:
    arr = np.asarray(nu, dtype=float)
    if arr.shape != (n,):
        raise InvalidInputError(f"nu must have length {n}, got shape {arr.shape}", field="nu")
    return arr


def kkt_residual(form: SpectralForm, lam: VectorInput, nu: ArrayLike) -> KKTState:
    n = form.n
    x = as_point(lam, n)
    v = _as_multipliers(nu, n)
    tol = current_settings().tolerances

    stationarity = 4.0 * (form.matrix @ x).real - (4.0 / n) * _xlogx(x) - v
    complementarity = x * v
    norm2 = float(x @ x)
    feasible = bool(
        np.all(v >= 0)
        and 0.0 < norm2 < n
        and np.all(np.abs(complementarity) < tol.complementarity)
    )
    return KKTState(
        lam=tuple(x.tolist()),
        nu=tuple(v.tolist()),
        residual_stationarity=tuple(stationarity.tolist()),
        residual_complementarity=tuple(complementarity.tolist()),
        norm_constraint_value=norm2,
        feasible=feasible,
    )


# ==============================================================================
# Multi-start search on the absorbed system
# ==============================================================================


def _window(n: int) -> Tuple[float, float]:
    tol = current_settings().tolerances
    return tol.window_floor * n, (1.0 - tol.window_margin) * n


def _search_one(form: SpectralForm, rng: np.random.Generator) -> Tuple[KKTState, bool, bool]:
    """One start: sample an active set and a point, then least-squares on the residual.

    Coordinates in the active set are pinned to 0 and their multipliers are
    read off the stationarity equation; the remaining ones carry nu = 0.
    The free block is lam = sqrt(s) u / ||u|| with s bounded to the norm
    window, so every iterate has lower <= ||lam||^2 <= upper.
    """
    n = form.n
    lower, upper = _window(n)
    Q4 = 4.0 * np.asarray(form.matrix.real)

    active = np.zeros(n, dtype=bool)
    if n > 1 and rng.random() < 0.5:
        zeros = int(rng.integers(1, n))
        active[rng.choice(n, size=zeros, replace=False)] = True
    free = ~active
    m = int(free.sum())

    u0 = rng.uniform(0.05, 1.5, size=m)
    z0 = np.concatenate([u0 / np.linalg.norm(u0), [rng.uniform(lower, upper)]])

    def expand(z: np.ndarray) -> np.ndarray:
        u, s = z[:m], z[m]
        lam = np.zeros(n)
        lam[free] = math.sqrt(s) * u / np.linalg.norm(u)
        return lam

    def residual(z: np.ndarray) -> np.ndarray:
        lam = expand(z)
        grad = Q4 @ lam - (4.0 / n) * _xlogx(lam)
        return np.concatenate([grad[free], np.minimum(grad[active], 0.0)])

    def jacobian(z: np.ndarray) -> np.ndarray:
        u, s = z[:m], z[m]
        norm_u = float(np.linalg.norm(u))
        lam = expand(z)
        y = lam[free]
        grad = Q4 @ lam - (4.0 / n) * _xlogx(lam)
        # d lam_free / d(u, s)
        direction = u / norm_u
        d_u = math.sqrt(s) / norm_u * (np.eye(m) - np.outer(direction, direction))
        d_s = direction / (2.0 * math.sqrt(s))
        d_lam = np.hstack([d_u, d_s[:, None]])
        j_free = (Q4[np.ix_(free, free)] - (4.0 / n) * np.diag(np.log(y) + 1.0)) @ d_lam
        j_active = (Q4[np.ix_(active, free)] * (grad[active] < 0)[:, None]) @ d_lam
        return np.vstack([j_free, j_active])

    result = least_squares(
        residual,
        z0,
        jac=jacobian,
        bounds=(
            np.concatenate([np.full(m, _CLAMP), [lower]]),
            np.concatenate([np.full(m, np.inf), [upper]]),
        ),
        method="trf",
        xtol=1e-15,
        ftol=1e-15,
        gtol=1e-15,
        max_nfev=400,
    )

    lam = expand(result.x)
    lam[lam <= 10 * _CLAMP * math.sqrt(result.x[m])] = 0.0
    nu = np.zeros(n)
    zero = lam == 0.0
    nu[zero] = (Q4 @ lam)[zero]
    state = kkt_residual(form, lam, nu)
    s = float(result.x[m])
    on_window = s >= upper * (1 - 1e-6) or s <= lower * (1 + 1e-6)
    return state, bool(result.success), on_window


def _inside_window(state: KKTState, n: int) -> bool:
    lower, upper = _window(n)
    norm2 = state.norm_constraint_value
    return lower * (1 - 1e-6) <= norm2 <= upper * (1 + 1e-6)


def _histogram(residuals: Sequence[float]) -> dict:
    """Counts per log10 decade of the terminal residual norm."""
    counts: dict = {}
    for r in residuals:
        decade = -16 if r <= 1e-16 else int(math.floor(math.log10(r)))
        key = f"1e{decade}"
        counts[key] = counts.get(key, 0) + 1
    return dict(sorted(counts.items(), key=lambda item: int(item[0][2:])))


@timed("kkt.search", level="info")
def kkt_search(
    form: SpectralForm,
    starts: int,
    seed: int,
    threads: Optional[int] = None,
) -> KKTSearchReport:
    """Multi-start least-squares search for solutions of the absorbed system."""
    if starts < 1:
        raise InvalidInputError(f"starts must be >= 1, got {starts}", field="starts")
    cfg = current_settings()
    tol = cfg.tolerances
    outcomes = ordered_map(
        partial(_search_one, form),
        spawn_generators(seed, starts),
        threads or cfg.threads,
    )

    solutions: List[KKTState] = []
    residuals = []
    converged = 0
    on_window = 0
    discarded = 0
    for state, success, boundary in outcomes:
        if not _inside_window(state, form.n):
            discarded += 1
            continue
        residuals.append(state.residual_norm)
        converged += success
        on_window += boundary
        if state.feasible and state.residual_norm < tol.kkt_residual:
            lam = np.asarray(state.lam)
            if all(np.linalg.norm(lam - np.asarray(s.lam)) >= tol.kkt_dedup for s in solutions):
                solutions.append(state)

    report = KKTSearchReport(
        label=form.label,
        n=form.n,
        starts=starts,
        seed=seed,
        solutions=solutions,
        converged_starts=converged,
        window_terminations=on_window,
        discarded_starts=discarded,
        min_residual=float(min(residuals, default=math.inf)),
        residual_histogram=_histogram(residuals),
    )
    log.info(
        "kkt.search.done %s",
        kv(weight=form.label, starts=starts, solutions=len(solutions), min_residual=report.min_residual),
    )
    return report


# ==============================================================================
# Minimization on the positive sphere
# ==============================================================================


def _objective_rows(form: SpectralForm, rows: np.ndarray) -> np.ndarray:
    return 2.0 * dirichlet_batch(form, rows) - entropy_batch(rows)


def _gradient_rows(form: SpectralForm, rows: np.ndarray) -> np.ndarray:
    n = form.n
    sq = rows * rows
    totals = sq.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_term = np.where(rows > 0, rows * np.log(n * sq / totals), 0.0)
    return 4.0 * rows @ np.asarray(form.matrix.real) - (2.0 / n) * log_term


@timed("kkt.minimize_on_sphere", level="info")
def minimize_on_sphere(
    form: SpectralForm,
    starts: int,
    seed: int,
    max_iterations: Optional[int] = None,
) -> SphereMinimum:
    """Projected gradient descent of f on S^{n-1}_+ from many starts at once.

    Starts are random sphere points plus the constant vector and the corners
    e_j. Each row keeps its own step, grown after a decrease and halved after
    a rejected move.
    """
    if starts < 1:
        raise InvalidInputError(f"starts must be >= 1, got {starts}", field="starts")
    n = form.n
    iterations = max_iterations or current_settings().max_iterations
    rng = np.random.default_rng(seed)
    rows = np.vstack([
        sample_positive_sphere(n, starts, rng),
        np.full((1, n), 1.0 / math.sqrt(n)),
        np.eye(n),
    ])
    values = _objective_rows(form, rows)
    step = np.full(rows.shape[0], 0.1)
    done = np.zeros(rows.shape[0], dtype=bool)

    for _ in range(iterations):
        grad = _gradient_rows(form, rows)
        tangent = grad - (grad * rows).sum(axis=1, keepdims=True) * rows
        # first-order optimality on the positive sphere: zero coordinates may keep a positive gradient
        measure = np.where(rows > 0, tangent, np.minimum(tangent, 0.0))
        done |= np.linalg.norm(measure, axis=1) < 1e-10
        done |= step < 1e-14
        if done.all():
            break

        trial = np.clip(rows - step[:, None] * tangent, 0.0, None)
        norms = np.linalg.norm(trial, axis=1, keepdims=True)
        usable = (norms[:, 0] > 0) & ~done
        trial[usable] /= norms[usable]
        trial_values = np.full_like(values, np.inf)
        trial_values[usable] = _objective_rows(form, trial[usable])

        accept = trial_values <= values
        rows[accept] = trial[accept]
        values[accept] = trial_values[accept]
        step = np.where(accept, step * 1.2, step * 0.5)

    best = int(np.argmin(values))
    lam = rows[best]
    distance = float(np.linalg.norm(lam - 1.0 / math.sqrt(n)))
    log.info(
        "kkt.sphere_minimum %s",
        kv(weight=form.label, value=float(values[best]), distance_to_constant=distance, converged=int(done.sum())),
    )
    return SphereMinimum(
        lam=tuple(lam.tolist()),
        value=float(values[best]),
        distance_to_constant=distance,
        starts=starts,
        converged_starts=int(done.sum()),
    )


# ==============================================================================
# Sphere system and multiplier absorption
# ==============================================================================


def sphere_residual(form: SpectralForm, lam: VectorInput, mu: float, nu: ArrayLike) -> np.ndarray:
    """Stationarity of f with the sphere multiplier mu still present."""
    n = form.n
    x = as_point(lam, n)
    v = _as_multipliers(nu, n)
    norm2 = float(x @ x)
    if norm2 == 0:
        raise InvalidInputError("sphere residual undefined at the zero vector", field="lambda")
    return (
        4.0 * (form.matrix @ x).real
        - (2.0 / n) * (2.0 * _xlogx(x) + x)
        + (2.0 / n) * (x * math.log(norm2 / n) + x)
        - 2.0 * mu * x
        - v
    )


def refine_sphere_stationary(
    form: SpectralForm,
    lam0: VectorInput,
    support_floor: float = 1e-8,
) -> Tuple[np.ndarray, float, np.ndarray]:
    """Newton-type polish of a near-stationary point of f on the unit sphere.

    Coordinates below ``support_floor`` are fixed at 0; returns (lam*, mu*, nu*).
    """
    n = form.n
    x0 = as_point(lam0, n)
    x0 = x0 / np.linalg.norm(x0)
    free = x0 > support_floor
    Q4 = 4.0 * np.asarray(form.matrix.real)
    log_n = math.log(n)

    def expand(y: np.ndarray) -> np.ndarray:
        lam = np.zeros(n)
        lam[free] = y
        return lam

    def residual(z: np.ndarray) -> np.ndarray:
        y, mu = z[:-1], z[-1]
        lam = expand(y)
        r = Q4 @ lam - (4.0 / n) * _xlogx(lam) - (2.0 / n) * log_n * lam - 2.0 * mu * lam
        return np.concatenate([r[free], [float(y @ y) - 1.0]])

    def jacobian(z: np.ndarray) -> np.ndarray:
        y, mu = z[:-1], z[-1]
        block = (
            Q4[np.ix_(free, free)]
            - (4.0 / n) * np.diag(np.log(y) + 1.0)
            - ((2.0 / n) * log_n + 2.0 * mu) * np.eye(y.size)
        )
        top = np.hstack([block, -2.0 * y[:, None]])
        bottom = np.concatenate([2.0 * y, [0.0]])[None, :]
        return np.vstack([top, bottom])

    z0 = np.concatenate([x0[free], [lsi_objective(form, x0)]])
    lower = np.concatenate([np.full(int(free.sum()), _CLAMP), [-np.inf]])
    result = least_squares(
        residual, z0, jac=jacobian, bounds=(lower, np.inf), method="trf",
        xtol=1e-15, ftol=1e-15, gtol=1e-15,
    )
    lam = expand(result.x[:-1])
    mu = float(result.x[-1])
    nu = np.zeros(n)
    nu[~free] = (Q4 @ lam)[~free]
    return lam, mu, nu


def mu_absorption_check(
    form: SpectralForm,
    lam_star: VectorInput,
    mu_star: float,
    nu_star: ArrayLike,
) -> float:
    """Residual norm of the absorbed system at (c* lam*, c* nu*), c* = exp((n mu* + log n)/2).

    The absorbed residual equals c* times the sphere residual, so it is small
    exactly when the input is (near-)stationary.
    """
    n = form.n
    x = as_point(lam_star, n)
    v = _as_multipliers(nu_star, n)
    tol = current_settings().tolerances.sphere_norm
    norm = float(np.linalg.norm(x))
    if abs(norm - 1.0) > tol:
        raise InvalidInputError(
            f"lambda* must lie on the unit sphere, ||lambda*|| = {norm}",
            field="lambda_star",
            details={"norm": norm, "tolerance": tol},
        )
    c = absorption_scale(n, mu_star)
    scaled = c * x
    absorbed = 4.0 * (form.matrix @ scaled).real - (4.0 / n) * _xlogx(scaled) - c * v
    return float(np.linalg.norm(absorbed))


def absorption_scale(n: int, mu: float) -> float:
    return math.exp((n * mu + math.log(n)) / 2.0)


# ==============================================================================
# Two-coordinate reduction
# ==============================================================================


def pair_solution(r: float) -> Tuple[float, float]:
    """(lam_j0, lam_j0') = (e r^{-r/(r-1)}, e r^{-1/(r-1)}) for a ratio r = lam_j0'/lam_j0 != 1."""
    if r <= 0 or r == 1:
        raise InvalidInputError(f"ratio must be positive and != 1, got {r}", field="r")
    return math.e * r ** (-r / (r - 1.0)), math.e * r ** (-1.0 / (r - 1.0))


def feasible_ratio_bound(n: int) -> float:
    """Largest r > 1 with e r^{-1/(r-1)} < sqrt(n); infinite when every r qualifies."""
    target = 1.0 - 0.5 * math.log(n)
    if target <= 0:
        return math.inf

    def gap(r: float) -> float:
        return math.log(r) / (r - 1.0) - target

    return brentq(gap, 1.0 + 1e-9, 1e12, xtol=1e-12)
