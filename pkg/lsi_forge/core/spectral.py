"""Spectral Dirichlet forms, the entropy functional and the LSI objective.

Gamma = (1/n) F_n diag(gamma) F_n^{-1} is real symmetric circulant whenever
gamma is symmetric; its eigenvalues are gamma(k)/n. The LSI with constant 2
for a weight is the statement f(lam) = 2<lam, Gamma lam> - H_n[lam] >= 0 on R_+^n.
"""

from __future__ import annotations

from typing import Optional, Tuple, Union

import numpy as np
import sympy as sp
from numpy.typing import ArrayLike
from pydantic import BaseModel, ConfigDict, Field

from ..config import current_settings
from ..exceptions import InvalidInputError, NumericalError
from ..models import PointVector, Weight
from ..utils.logger import get_logger, kv
from ..utils.parallel import batches
from ..utils.timing import timed
from .dft import fourier_matrix

log = get_logger(__name__)

VectorInput = Union[ArrayLike, PointVector]


class SpectralForm(BaseModel):
    """Gamma(n) for one weight, with its spectrum."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    n: int = Field(..., ge=1)
    gamma: Weight
    matrix: np.ndarray = Field(..., description="Real when gamma is symmetric, complex otherwise")
    eigenvalues: np.ndarray = Field(..., description="Sorted gamma(k)/n")
    symmetric: bool
    max_imaginary: float = Field(..., description="Largest imaginary residue before realification")

    @property
    def label(self) -> str:
        return self.gamma.label

    @property
    def asymmetry_warning(self) -> bool:
        return not self.symmetric


def build_form(gamma: Weight) -> SpectralForm:
    n = gamma.n
    F = fourier_matrix(n).entries
    g = gamma.as_floats()
    # (1/n) F diag(g) F^{-1} with F^{-1} = conj(F)/n
    matrix = (F * g) @ np.conj(F) / (n * n)
    max_imag = float(np.max(np.abs(matrix.imag)))
    symmetric = gamma.is_symmetric()
    tol = current_settings().tolerances.imaginary

    if symmetric:
        if max_imag >= tol:
            raise NumericalError(
                "imaginary residue in Gamma above tolerance",
                details={"weight": gamma.label, "max_imaginary": max_imag, "tolerance": tol},
            )
        matrix = np.ascontiguousarray(matrix.real)
    else:
        log.warning("spectral.asymmetric_weight %s", kv(weight=gamma.label, max_imaginary=max_imag))

    matrix.setflags(write=False)
    return SpectralForm(
        n=n,
        gamma=gamma,
        matrix=matrix,
        eigenvalues=np.sort(g / n),
        symmetric=symmetric,
        max_imaginary=max_imag,
    )


def exact_matrix(gamma: Weight) -> sp.Matrix:
    """Gamma(n) with exact entries (rationals, or algebraic numbers for n like 8)."""
    n = gamma.n
    values = [sp.Rational(v.numerator, v.denominator) for v in gamma.values]
    first_row = []
    for d in range(n):
        entry = sp.Rational(1, n * n) * sum(
            values[m] * sp.exp(2 * sp.pi * sp.I * m * d / n) for m in range(n)
        )
        first_row.append(sp.simplify(sp.expand_complex(entry)))
    return sp.Matrix(n, n, lambda j, k: first_row[(j - k) % n])


# ==============================================================================
# Point vectors
# ==============================================================================


def as_point(lam: VectorInput, n: Optional[int] = None, name: str = "lambda") -> np.ndarray:
    """Validate a nonnegative vector and return it as a float array."""
    arr = lam.array if isinstance(lam, PointVector) else np.asarray(lam, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidInputError(f"{name} must be a non-empty vector", field=name)
    if n is not None and arr.size != n:
        raise InvalidInputError(
            f"{name} has length {arr.size}, form acts on Z_{n}",
            field=name,
            details={"expected": n, "got": int(arr.size)},
        )
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise InvalidInputError(f"{name} must be finite and nonnegative", field=name)
    return arr


def dirichlet(form: SpectralForm, lam: VectorInput) -> float:
    """<lam, Gamma lam>."""
    x = as_point(lam, form.n)
    return float(np.real(x @ form.matrix @ x))


def _xlogx_terms(sq: np.ndarray, scale: float) -> np.ndarray:
    """sq * log(scale * sq) with the 0 log 0 = 0 extension, elementwise."""
    out = np.zeros_like(sq)
    mask = sq > 0
    out[mask] = sq[mask] * np.log(scale * sq[mask])
    return out


def entropy(lam: VectorInput) -> float:
    """H_n[lam] = (1/n) sum lam_k^2 log(n lam_k^2 / ||lam||^2)."""
    x = as_point(lam)
    sq = x * x
    total = sq.sum()
    if total == 0:
        raise InvalidInputError("entropy of the zero vector is undefined", field="lambda")
    n = x.size
    return float(_xlogx_terms(sq, n / total).sum() / n)


def lsi_objective(form: SpectralForm, lam: VectorInput) -> float:
    """f(lam) = 2<lam, Gamma lam> - H_n[lam]."""
    x = as_point(lam, form.n)
    return 2.0 * dirichlet(form, x) - entropy(x)


def lsi_gradient(form: SpectralForm, lam: VectorInput) -> np.ndarray:
    """grad f = 4 Gamma lam - (2/n) lam * log(n lam^2 / ||lam||^2)."""
    x = as_point(lam, form.n)
    sq = x * x
    total = sq.sum()
    if total == 0:
        raise InvalidInputError("gradient undefined at the zero vector", field="lambda")
    log_term = np.zeros_like(x)
    mask = x > 0
    log_term[mask] = x[mask] * np.log(form.n * sq[mask] / total)
    return 4.0 * np.real(form.matrix @ x) - (2.0 / form.n) * log_term


def two_point_entropy(x: float, y: float) -> float:
    """H_2 of the vector (x, y)."""
    return entropy(np.array([abs(x), abs(y)], dtype=float))


def entropy_split(a: VectorInput, b: VectorInput) -> Tuple[float, float, float]:
    """Split H_2n[interleave(a, b)] into the two half entropies and the block term.

    Returns (inner_a, inner_b, outer) with inner_* = (1/2n) sum c_i^2 log(n c_i^2 / ||c||^2)
    and outer = (1/2n)(||a||^2 log(2||a||^2 / S) + ||b||^2 log(2||b||^2 / S)).
    """
    a_arr = as_point(a, name="a")
    b_arr = as_point(b, a_arr.size, name="b")
    n = a_arr.size
    sa = float(a_arr @ a_arr)
    sb = float(b_arr @ b_arr)
    total = sa + sb
    if total == 0:
        raise InvalidInputError("entropy split needs nonzero total mass", field="a,b")

    inner_a = entropy(a_arr) / 2.0 if sa > 0 else 0.0
    inner_b = entropy(b_arr) / 2.0 if sb > 0 else 0.0
    block = np.array([sa, sb])
    outer = float(_xlogx_terms(block, 2.0 / total).sum() / (2 * n))
    return inner_a, inner_b, outer


# ==============================================================================
# Batched evaluation and sampling
# ==============================================================================


def dirichlet_batch(form: SpectralForm, rows: np.ndarray) -> np.ndarray:
    return np.real(np.einsum("ij,jk,ik->i", rows, form.matrix, rows))


def entropy_batch(rows: np.ndarray) -> np.ndarray:
    """Row-wise H_n; rows must be nonzero."""
    sq = rows * rows
    totals = sq.sum(axis=1, keepdims=True)
    n = rows.shape[1]
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(sq > 0, sq * np.log(n * sq / totals), 0.0)
    return terms.sum(axis=1) / n


def sample_positive_sphere(
    n: int,
    count: int,
    rng: np.random.Generator,
    corner_fraction: float = 0.25,
) -> np.ndarray:
    """Rows on S^{n-1}_+: |normal| draws normalized, a fraction with random zero patterns."""
    rows = np.abs(rng.standard_normal((count, n)))
    corners = int(round(corner_fraction * count)) if n > 1 else 0
    if corners:
        zeros = rng.integers(1, n, size=corners)
        order = np.argsort(rng.random((corners, n)), axis=1)
        mask = np.arange(n)[None, :] < zeros[:, None]
        kill = np.zeros((corners, n), dtype=bool)
        np.put_along_axis(kill, order, mask, axis=1)
        rows[:corners][kill] = 0.0
    return rows / np.linalg.norm(rows, axis=1, keepdims=True)


@timed("spectral.verify_lsi_sampling", level="info")
def verify_lsi_sampling(
    form: SpectralForm,
    samples: int,
    seed: int,
    batch_size: int = 100_000,
) -> Tuple[float, np.ndarray]:
    """Minimum of f over ``samples`` seeded points of S^{n-1}_+ and where it occurs."""
    rng = np.random.default_rng(seed)
    best_value = np.inf
    best_row = np.full(form.n, 1.0 / np.sqrt(form.n))
    for start, stop in batches(samples, batch_size):
        rows = sample_positive_sphere(form.n, stop - start, rng)
        values = 2.0 * dirichlet_batch(form, rows) - entropy_batch(rows)
        i = int(np.argmin(values))
        if values[i] < best_value:
            best_value = float(values[i])
            best_row = rows[i].copy()
    log.info("spectral.sampling %s", kv(weight=form.label, samples=samples, min_value=best_value))
    return best_value, best_row
