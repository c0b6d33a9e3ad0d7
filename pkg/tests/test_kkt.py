"""Stationary systems, the multi-start search and sphere minimization."""

import math

import numpy as np
import pytest

from lsi_forge.core.kkt import (
    _search_one,
    absorption_scale,
    feasible_ratio_bound,
    kkt_residual,
    kkt_search,
    minimize_on_sphere,
    mu_absorption_check,
    pair_solution,
    refine_sphere_stationary,
    sphere_residual,
)
from lsi_forge.core.spectral import build_form
from lsi_forge.core.weights import phi4, phi6, word_length
from lsi_forge.exceptions import InvalidInputError


def test_constant_vector_solves_but_sits_on_the_norm_boundary():
    """The constant vector solves the system but only at ||lam||^2 = n."""
    form = build_form(word_length(4))
    state = kkt_residual(form, np.ones(4), np.zeros(4))
    assert state.residual_norm == pytest.approx(0.0, abs=1e-12)
    assert state.norm_constraint_value == pytest.approx(4.0)
    assert not state.feasible


def test_residual_serializes_lambda_alias():
    """States dump lam under the lambda alias."""
    form = build_form(word_length(4))
    state = kkt_residual(form, [0.5, 0.2, 0.0, 0.1], [0.0, 0.0, 0.3, 0.0])
    dumped = state.model_dump(by_alias=True)
    assert dumped["lambda"] == (0.5, 0.2, 0.0, 0.1)
    assert state.has_zero_coordinate


def test_multiplier_length_checked():
    """nu must match the order of the form."""
    with pytest.raises(InvalidInputError):
        kkt_residual(build_form(word_length(4)), np.ones(4), np.zeros(3))


def test_search_finds_no_solution_for_word_length():
    """No stationary point of the absorbed system for psi4."""
    report = kkt_search(build_form(word_length(4)), starts=30, seed=0)
    assert report.verdict
    assert report.solutions == []
    assert sum(report.residual_histogram.values()) == 30
    assert report.min_residual > 0


def test_search_is_thread_count_independent():
    """Per-start generators make the search independent of the pool size."""
    form = build_form(word_length(4))
    one = kkt_search(form, starts=8, seed=5, threads=1)
    four = kkt_search(form, starts=8, seed=5, threads=4)
    assert one.residual_histogram == four.residual_histogram
    assert one.min_residual == four.min_residual


def test_sphere_minimum_for_phi6_is_the_constant():
    """The sphere minimum for phi6 is 0, attained at the constant vector."""
    result = minimize_on_sphere(build_form(phi6()), starts=64, seed=0)
    assert -1e-9 <= result.value <= 1e-6
    assert result.distance_to_constant <= 5e-2


def test_multiplier_absorption_on_a_stationary_point():
    """A scaled weight has a sphere stationary point whose mu absorbs into the norm."""
    form = build_form(word_length(6).scaled("3/10"))
    minimum = minimize_on_sphere(form, starts=32, seed=1)
    assert minimum.value < 0
    lam, mu, nu = refine_sphere_stationary(form, minimum.lam)
    assert np.linalg.norm(lam) == pytest.approx(1.0, abs=1e-10)
    assert np.linalg.norm(sphere_residual(form, lam, mu, nu)) < 1e-9
    assert mu_absorption_check(form, lam, mu, nu) < 1e-8


def test_absorption_requires_unit_norm():
    """Absorption is only defined on the unit sphere."""
    form = build_form(word_length(4))
    with pytest.raises(InvalidInputError):
        mu_absorption_check(form, [1.0, 1.0, 0.0, 0.0], 0.0, np.zeros(4))


def test_absorption_scale():
    """The absorbing scale is sqrt(n) exp(n mu / 2)."""
    assert absorption_scale(4, 0.0) == pytest.approx(2.0)
    assert absorption_scale(6, -math.log(6) / 6) == pytest.approx(1.0)


def test_pair_solution_has_requested_ratio():
    """pair_solution returns a point with the requested ratio."""
    x, y = pair_solution(3.0)
    assert y / x == pytest.approx(3.0)
    with pytest.raises(InvalidInputError):
        pair_solution(1.0)


def test_feasible_ratio_bound():
    """The ratio bound is infinite for n = 8 and tight for n = 4."""
    assert feasible_ratio_bound(8) == math.inf
    r = feasible_ratio_bound(4)
    assert r > 1
    assert pair_solution(r)[1] == pytest.approx(2.0, rel=1e-8)


@pytest.mark.parametrize("weight", [phi4(), phi6()], ids=["phi4", "phi6"])
def test_search_stays_inside_the_norm_window(weight):
    """Every start ends inside the window and residuals stay bounded away from zero."""
    n = weight.n
    report = kkt_search(build_form(weight), starts=40, seed=3)
    assert report.discarded_starts == 0
    assert sum(report.residual_histogram.values()) == 40
    assert report.solutions == []
    assert report.verdict
    assert report.min_residual >= 1e-3
    assert all(int(bucket[2:]) >= -3 for bucket in report.residual_histogram)
    assert report.n == n


def test_window_is_a_hard_bound():
    """Terminal norms of single starts never leave [0.01 n, 0.99 n]."""
    form = build_form(phi4())
    for seed in range(12):
        state, _, _ = _search_one(form, np.random.default_rng(seed))
        assert 0.04 * (1 - 1e-6) <= state.norm_constraint_value <= 3.96 * (1 + 1e-6)
        assert np.linalg.norm(state.lam) > 0
