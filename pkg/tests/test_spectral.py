"""Dirichlet forms, entropy and the LSI objective."""

import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from lsi_forge.core.spectral import (
    build_form,
    dirichlet,
    entropy,
    entropy_split,
    exact_matrix,
    lsi_gradient,
    lsi_objective,
    sample_positive_sphere,
    two_point_entropy,
    verify_lsi_sampling,
)
from lsi_forge.core.dft import dft_forward, interleave
from lsi_forge.core.weights import phi4, phi6, weight_from_values, word_length
from lsi_forge.exceptions import InvalidInputError
from lsi_forge.models import PointVector

positive_vectors = st.lists(st.floats(min_value=1e-3, max_value=5.0), min_size=2, max_size=10)
halves_entry = st.floats(0.0, 3.0).map(lambda v: v if v >= 1e-6 else 0.0)


def test_form_is_real_symmetric_with_weight_spectrum():
    """Gamma is real symmetric with spectrum gamma(k)/n."""
    form = build_form(word_length(8))
    assert form.symmetric
    assert np.allclose(form.matrix, form.matrix.T)
    assert np.allclose(np.linalg.eigvalsh(form.matrix), np.sort(word_length(8).as_floats() / 8))


def test_asymmetric_weight_keeps_complex_matrix():
    """Asymmetric weights keep the complex matrix and raise the warning flag."""
    form = build_form(weight_from_values([0, 1, 2, 3]))
    assert not form.symmetric
    assert form.asymmetry_warning
    assert np.iscomplexobj(form.matrix)


def test_exact_matrix_matches_floats():
    """Exact and float matrices agree for phi4."""
    exact = exact_matrix(phi4())
    numeric = np.array(exact.evalf(), dtype=float)
    assert np.allclose(numeric, build_form(phi4()).matrix, atol=1e-14)
    assert exact[0, 0] == sp.Rational(9, 40)


def test_constant_vector_is_in_the_kernel():
    """Constants have zero energy, zero entropy and zero LSI deficit."""
    form = build_form(phi6())
    assert dirichlet(form, np.ones(6)) == pytest.approx(0.0, abs=1e-14)
    assert entropy(np.ones(6)) == pytest.approx(0.0, abs=1e-14)
    assert lsi_objective(form, np.full(6, 3.0)) == pytest.approx(0.0, abs=1e-12)


def test_entropy_of_a_corner():
    """Entropy of a coordinate vector is log(n)/n."""
    assert entropy([1.0, 0.0, 0.0, 0.0]) == pytest.approx(math.log(4) / 4)
    assert two_point_entropy(1.0, 0.0) == pytest.approx(math.log(2) / 2)


@given(positive_vectors, st.floats(min_value=0.1, max_value=10.0))
def test_entropy_is_nonnegative_and_two_homogeneous(values, scale):
    """Entropy is nonnegative and scales quadratically."""
    lam = np.asarray(values)
    h = entropy(lam)
    assert h >= -1e-12
    assert entropy(scale * lam) == pytest.approx(scale * scale * h, rel=1e-9, abs=1e-12)


@given(st.integers(min_value=1, max_value=6).flatmap(
    lambda n: st.tuples(st.lists(halves_entry, min_size=n, max_size=n),
                        st.lists(halves_entry, min_size=n, max_size=n))))
def test_entropy_split_recombines(halves):
    """Inner and outer terms of the split add up to the full entropy."""
    a, b = (np.asarray(h) for h in halves)
    if not (a.any() or b.any()):
        return
    inner_a, inner_b, outer = entropy_split(a, b)
    assert inner_a + inner_b + outer == pytest.approx(entropy(interleave(a, b)), abs=1e-9)


def test_gradient_matches_finite_differences(rng):
    """Analytic gradient of f against central differences."""
    form = build_form(phi4())
    lam = rng.uniform(0.2, 1.5, size=4)
    grad = lsi_gradient(form, lam)
    h = 1e-6
    numeric = np.array([
        (lsi_objective(form, lam + h * e) - lsi_objective(form, lam - h * e)) / (2 * h) for e in np.eye(4)
    ])
    assert np.allclose(grad, numeric, atol=1e-6)


def test_point_validation():
    """Wrong lengths, zero vectors and negative entries are refused."""
    form = build_form(word_length(4))
    with pytest.raises(InvalidInputError):
        dirichlet(form, [1.0, 1.0])
    with pytest.raises(InvalidInputError):
        entropy([0.0, 0.0])
    with pytest.raises(InvalidInputError):
        lsi_objective(form, [1.0, -1.0, 0.0, 0.0])
    assert dirichlet(form, PointVector(entries=(1.0, 0.0, 0.0, 0.0))) == pytest.approx(4 / 16)


def test_sphere_samples(rng):
    """Sphere samples are unit, nonnegative and include sparse rows."""
    rows = sample_positive_sphere(6, 500, rng)
    assert np.allclose(np.linalg.norm(rows, axis=1), 1.0)
    assert rows.min() >= 0.0
    assert np.any(rows == 0.0)


def test_sampled_lsi_holds_for_word_length():
    """Sampling finds no violation of the LSI for psi4."""
    value, argmin = verify_lsi_sampling(build_form(word_length(4)), 5_000, seed=3)
    assert value >= -1e-9
    assert argmin.shape == (4,)


def test_exact_matrix_for_phi6():
    """Gamma for phi6 is the circulant with first row (7, -2, -2, 1, -2, -2) / 36."""
    exact = exact_matrix(phi6())
    expected = sp.Matrix(6, 6, lambda j, k: sp.Rational((7, -2, -2, 1, -2, -2)[(j - k) % 6], 36))
    assert sp.simplify(exact - expected) == sp.zeros(6, 6)
    assert np.allclose(build_form(phi6()).matrix, np.array(expected, dtype=float), atol=1e-14)


def test_exact_off_diagonals_for_phi4():
    """Gamma for phi4 has -1/10 next to the diagonal and -1/40 across."""
    exact = exact_matrix(phi4())
    assert exact[0, 1] == sp.Rational(-1, 10)
    assert exact[0, 3] == sp.Rational(-1, 10)
    assert exact[0, 2] == sp.Rational(-1, 40)
    assert exact[1, 3] == sp.Rational(-1, 40)
    assert sum(exact.row(0)) == 0


real_vectors = st.integers(min_value=2, max_value=10).flatmap(
    lambda n: st.lists(st.floats(-5.0, 5.0), min_size=n, max_size=n)
)


@given(real_vectors)
def test_parseval(values):
    """||lam||^2 equals ||lam_hat||^2 / n."""
    lam = np.asarray(values)
    lam_hat = dft_forward(lam)
    assert np.sum(lam * lam) == pytest.approx(np.sum(np.abs(lam_hat) ** 2) / lam.size, rel=1e-12, abs=1e-12)


@given(st.lists(st.floats(0.0, 5.0), min_size=6, max_size=6))
def test_fourier_side_dirichlet_matches_the_direct_form(values):
    """<lam, Gamma lam> equals (1/n^2) sum gamma(k) |lam_hat(k)|^2."""
    lam = np.asarray(values)
    for weight in (phi6(), word_length(6)):
        spectral_side = float(np.sum(weight.as_floats() * np.abs(dft_forward(lam)) ** 2)) / 36.0
        assert dirichlet(build_form(weight), lam) == pytest.approx(spectral_side, rel=1e-10, abs=1e-12)


@given(
    st.integers(min_value=2, max_value=8).flatmap(
        lambda n: st.tuples(
            st.lists(st.floats(0.0, 3.0), min_size=n // 2, max_size=n // 2),
            st.lists(st.floats(0.0, 2.0), min_size=n // 2, max_size=n // 2),
            st.lists(st.floats(0.0, 5.0), min_size=n, max_size=n),
            st.just(n),
        )
    )
)
def test_dirichlet_is_monotone_in_the_weight(data):
    """gamma <= gamma' entrywise gives <lam, Gamma lam> <= <lam, Gamma' lam>."""
    base, bump, values, n = data

    def symmetric(half):
        full = [0.0] * n
        for k, v in enumerate(half, start=1):
            full[k] = full[n - k] = v
        return full

    low = np.asarray(symmetric(base))
    high = low + np.asarray(symmetric(bump))
    lam = np.asarray(values)
    lower = dirichlet(build_form(weight_from_values(low.tolist())), lam)
    upper = dirichlet(build_form(weight_from_values(high.tolist())), lam)
    assert lower <= upper + 1e-10 * (1.0 + abs(upper))


@given(st.lists(st.floats(0.0, 5.0), min_size=6, max_size=6))
def test_phi_weights_sit_below_word_length(values):
    """phi6 <= psi6 entrywise, so its energy never exceeds the word-length energy."""
    lam = np.asarray(values)
    assert dirichlet(build_form(phi6()), lam) <= dirichlet(build_form(word_length(6)), lam) + 1e-10
    assert dirichlet(build_form(phi4()), lam[:4]) <= dirichlet(build_form(word_length(4)), lam[:4]) + 1e-10


@given(positive_vectors)
def test_euler_identity_for_the_objective(values):
    """f is homogeneous of degree 2, so <grad f(lam), lam> = 2 f(lam)."""
    lam = np.asarray(values)
    form = build_form(word_length(lam.size))
    lhs = float(lsi_gradient(form, lam) @ lam)
    rhs = 2.0 * lsi_objective(form, lam)
    assert lhs == pytest.approx(rhs, rel=1e-8, abs=1e-10 * float(lam @ lam))
