"""Discrete Fourier transform on Z_n by direct matrix application.

Convention: F_n[j, k] = w^(jk) with w = exp(2*pi*i/n), so x_hat = F_n x and
x = (1/n) conj(F_n) x_hat. Indexing is 0-based throughout. Sizes stay in the
hundreds, so the O(n^2) product is used instead of an FFT to keep results
bit-reproducible.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Tuple

import numpy as np
from numpy.typing import ArrayLike
from pydantic import BaseModel, ConfigDict, Field

from ..exceptions import InvalidInputError


class FourierMatrix(BaseModel):
    """The n x n DFT matrix F_n."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    n: int = Field(..., ge=1)
    entries: np.ndarray

    def unitary(self) -> np.ndarray:
        """(1/sqrt(n)) F_n."""
        return self.entries / np.sqrt(self.n)


class TwiddleDiagonal(BaseModel):
    """Diagonal D_k = exp(2*pi*i*k / 2n), k = 0..n-1, coupling two n-point DFTs.

    The sign matches the F_n convention above; with it the even/odd split
    reproduces the 2n-point transform exactly.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    n: int = Field(..., ge=1)
    entries: np.ndarray


@lru_cache(maxsize=256)
def _fourier_entries(n: int) -> np.ndarray:
    jk = np.outer(np.arange(n), np.arange(n)) % n
    entries = np.exp(2j * np.pi * jk / n)
    entries.setflags(write=False)
    return entries


def fourier_matrix(n: int) -> FourierMatrix:
    if n < 1:
        raise InvalidInputError(f"group order must be >= 1, got {n}", field="n")
    return FourierMatrix(n=n, entries=_fourier_entries(n))


def twiddle_diagonal(n: int) -> TwiddleDiagonal:
    if n < 1:
        raise InvalidInputError(f"group order must be >= 1, got {n}", field="n")
    return TwiddleDiagonal(n=n, entries=np.exp(1j * np.pi * np.arange(n) / n))


def reversal_permutation(n: int) -> np.ndarray:
    """Permutation matrix fixing 0 and swapping k <-> n-k; equals ((1/sqrt n) F_n)^2."""
    perm = np.zeros((n, n))
    for k in range(n):
        perm[k, (-k) % n] = 1.0
    return perm


def _as_vector(x: ArrayLike, name: str = "x") -> np.ndarray:
    arr = np.asarray(x)
    if arr.ndim != 1:
        raise InvalidInputError(f"{name} must be one-dimensional, got shape {arr.shape}", field=name)
    if arr.size == 0:
        raise InvalidInputError(f"{name} must be non-empty", field=name)
    return arr


def dft_forward(x: ArrayLike) -> np.ndarray:
    """x_hat_k = sum_j x_j w^(jk)."""
    arr = _as_vector(x)
    return _fourier_entries(arr.size) @ arr.astype(complex)


def dft_inverse(x_hat: ArrayLike) -> np.ndarray:
    arr = _as_vector(x_hat, "x_hat")
    n = arr.size
    return np.conj(_fourier_entries(n)) @ arr.astype(complex) / n


def interleave(a: ArrayLike, b: ArrayLike) -> np.ndarray:
    """(a_0, b_0, a_1, b_1, ..., a_{n-1}, b_{n-1})."""
    a_arr, b_arr = _check_halves(a, b)
    out = np.empty(2 * a_arr.size, dtype=np.result_type(a_arr, b_arr))
    out[0::2] = a_arr
    out[1::2] = b_arr
    return out


def deinterleave(lam: ArrayLike) -> Tuple[np.ndarray, np.ndarray]:
    arr = _as_vector(lam, "lambda")
    if arr.size % 2:
        raise InvalidInputError(f"cannot split odd length {arr.size}", field="lambda")
    return arr[0::2].copy(), arr[1::2].copy()


def _check_halves(a: ArrayLike, b: ArrayLike) -> Tuple[np.ndarray, np.ndarray]:
    a_arr = _as_vector(a, "a")
    b_arr = _as_vector(b, "b")
    if a_arr.size != b_arr.size:
        raise InvalidInputError(
            f"halves must have equal length, got {a_arr.size} and {b_arr.size}",
            details={"len_a": int(a_arr.size), "len_b": int(b_arr.size)},
        )
    return a_arr, b_arr


def cooley_tukey_split(a: ArrayLike, b: ArrayLike) -> np.ndarray:
    """2n-point DFT of interleave(a, b) from the two n-point DFTs.

    lam_hat[k] = a_hat[k] + D_k b_hat[k] and lam_hat[n + k] = a_hat[k] - D_k b_hat[k].
    """
    a_arr, b_arr = _check_halves(a, b)
    n = a_arr.size
    db = twiddle_diagonal(n).entries * dft_forward(b_arr)
    a_hat = dft_forward(a_arr)
    return np.concatenate([a_hat + db, a_hat - db])
