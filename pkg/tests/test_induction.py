"""Quadratic inequality, Dirichlet comparison and the n -> 2n Monte-Carlo step."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lsi_forge.core.dft import interleave
from lsi_forge.core.induction import (
    analytic_minimum,
    compare_dirichlet,
    corner_function_h,
    entropy_split_check,
    frequency_block_dirichlet,
    induction_step,
    pair_check,
    quadratic_coefficients,
    quadratic_lhs,
    scan_quadratic,
    tower_report,
    two_point_lsi,
)
from lsi_forge.core.spectral import build_form, dirichlet
from lsi_forge.core.weights import gamma_even_tower, gamma_odd_base, phi4, phi6, tower_pairs, word_length
from lsi_forge.exceptions import InvalidInputError, PreconditionError

PHI4_PAIR = (phi4(), gamma_even_tower(8))
WORD_PAIR = (word_length(4), word_length(8))


def test_word_length_quadratic_witness():
    """The word-length pair goes negative at x = 1, r_a = 1, r_b = 0."""
    assert quadratic_lhs(WORD_PAIR, 1.0, 1.0, 0.0) == pytest.approx(-3.0 + 2.0 * math.sqrt(2.0))


def test_word_length_pair_fails_the_scan():
    """The grid scan finds the word-length counterexample and records it."""
    scan = scan_quadratic(WORD_PAIR, resolution=60)
    assert not scan.verdict
    assert scan.min_value < -0.1
    assert scan.witness is not None
    assert scan.witness.kind == "quadratic"
    assert scan.witness.inputs["pair"] == ["psi4", "psi8"]


def test_odd_order_coefficients_do_not_depend_on_r():
    """Odd lower orders use A = C = G - 1 and B = 2 - 2G."""
    pair = (word_length(5), word_length(10))
    A, B, C = quadratic_coefficients(pair, np.array([0.0, 1.0]), np.array([1.0, 0.0]))
    G = 5.0
    assert np.allclose(A, G - 1) and np.allclose(C, G - 1) and np.allclose(B, 2 - 2 * G)


def test_phi4_pair_holds_with_closed_form_minimum():
    """phi4 -> gamma_tower8 holds and the scan matches its closed-form minimum."""
    report = pair_check(PHI4_PAIR, resolution=80)
    assert report.condition_holds
    assert report.holds
    assert report.quadratic.analytic_kind == "phi4_tower"
    assert report.quadratic.analytic_gap < 1e-4


def test_corner_function_matches_closed_form():
    """The phi4 minimum is the corner function over 5(r_b - 10)."""
    r_a, r_b = 0.3, 0.7
    expected = corner_function_h(r_a, r_b) / (5.0 * (r_b - 10.0))
    assert float(analytic_minimum(PHI4_PAIR, r_a, r_b)) == pytest.approx(expected)


def test_analytic_minimum_bounds_the_quadratic():
    """Closed-form minima never exceed sampled quadratic values."""
    for kind_pair in (PHI4_PAIR, (gamma_even_tower(6), gamma_even_tower(12)), (gamma_odd_base(6), gamma_odd_base(12))):
        for r_a, r_b in ((0.0, 0.0), (0.5, 0.2), (1.0, 1.0)):
            floor = float(analytic_minimum(kind_pair, r_a, r_b))
            values = [quadratic_lhs(kind_pair, x, r_a, r_b) for x in np.linspace(0.0, 20.0, 2001)]
            assert min(values) >= floor - 1e-9


def test_no_closed_form_for_word_length():
    """Pairs outside the known families have no closed form."""
    assert analytic_minimum(WORD_PAIR, 0.5, 0.5) is None


def test_quadratic_input_ranges():
    """x >= 0, r in [0, 1] and a minimum resolution are enforced."""
    with pytest.raises(InvalidInputError):
        quadratic_lhs(PHI4_PAIR, -1.0, 0.5, 0.5)
    with pytest.raises(InvalidInputError):
        quadratic_lhs(PHI4_PAIR, 1.0, 1.5, 0.5)
    with pytest.raises(InvalidInputError):
        scan_quadratic(PHI4_PAIR, resolution=10)


def test_small_tower_holds():
    """Every tower pair up to 16 holds, base links included."""
    reports = tower_report(limit=16, resolution=60)
    assert len(reports) == 9
    assert all(r.holds for r in reports), [(r.lower, r.upper) for r in reports if not r.holds]


def test_dirichlet_comparison_exact_values():
    """Comparison sides at a corner point match hand-computed values."""
    result = compare_dirichlet(PHI4_PAIR, [1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, 0.0])
    assert result.lhs == pytest.approx(7 / 20)
    assert result.rhs == pytest.approx(15 / 32)
    assert result.holds


def test_comparison_refuses_failing_pairs():
    """Pairs failing the quadratic or with n < 3 raise PreconditionError."""
    with pytest.raises(PreconditionError) as err:
        compare_dirichlet(WORD_PAIR, np.ones(4), np.ones(4))
    assert err.value.details["clause"] == "quadratic"

    with pytest.raises(PreconditionError) as err:
        compare_dirichlet((word_length(2), word_length(4)), np.ones(2), np.ones(2))
    assert err.value.details["clause"] == "n>=3"


@given(st.lists(st.floats(0.0, 2.0), min_size=8, max_size=8))
def test_frequency_blocks_reproduce_the_upper_form(values):
    """The frequency-block expression equals twice the upper form on the interleaved vector."""
    a, b = np.asarray(values[:4]), np.asarray(values[4:])
    direct = 2.0 * dirichlet(build_form(PHI4_PAIR[1]), interleave(a, b))
    assert frequency_block_dirichlet(PHI4_PAIR, a, b) == pytest.approx(direct, abs=1e-10)


@given(st.floats(0.0, 10.0), st.floats(0.0, 10.0))
def test_two_point_lsi(x, y):
    """The two-point LSI holds on the positive quadrant."""
    if x == 0 and y == 0:
        return
    entropy_side, dirichlet_side = two_point_lsi(x, y)
    assert entropy_side <= dirichlet_side + 1e-9 * (1 + x * x + y * y)


def test_two_point_lsi_rejects_origin():
    """The origin has no entropy to compare."""
    with pytest.raises(InvalidInputError):
        two_point_lsi(0.0, 0.0)


def test_induction_step_for_certified_pairs():
    """Certified pairs pass the sampled induction step without witnesses."""
    for pair in (PHI4_PAIR, (gamma_even_tower(6), gamma_even_tower(12))):
        report = induction_step(pair, samples=3_000, seed=2)
        assert report.verdict, (report.lower, report.entropy_slack_min, report.comparison_slack_min)
        assert report.witnesses == []


def test_induction_step_is_seeded():
    """Same seed, same induction report."""
    first = induction_step(PHI4_PAIR, samples=500, seed=9)
    second = induction_step(PHI4_PAIR, samples=500, seed=9)
    assert first.model_dump() == second.model_dump()


def test_entropy_split_check():
    """The entropy split recombines to machine precision."""
    report = entropy_split_check(4, samples=2_000, seed=1)
    assert report.verdict
    assert report.max_abs_error < 1e-12
    assert report.max_outer_error < 1e-12


PHI6_PAIR = (phi6(), gamma_even_tower(12))


def test_phi6_pair_holds():
    """phi6 -> gamma_tower12 meets every clause and the quadratic touches 0 only at r = 0, x = 1."""
    report = pair_check(PHI6_PAIR, resolution=80)
    assert report.condition_holds
    assert report.holds
    assert report.quadratic.min_value == pytest.approx(0.0, abs=1e-9)
    assert quadratic_lhs(PHI6_PAIR, 1.0, 0.0, 0.0) == pytest.approx(0.0, abs=1e-12)
    assert quadratic_lhs(PHI6_PAIR, 1.0, 0.5, 0.5) > 0


def test_induction_step_for_phi6():
    """The sampled n -> 2n step lifts the phi6 LSI to gamma_tower12."""
    report = induction_step(PHI6_PAIR, samples=3_000, seed=4)
    assert report.verdict, (report.entropy_slack_min, report.comparison_slack_min)
    assert report.witnesses == []


def test_tower_closure_up_to_128():
    """All dyadic tower pairs up to 128, both odd base links included, hold."""
    reports = tower_report(limit=128, resolution=60)
    links = {(r.lower, r.upper) for r in reports}
    assert {("psi3", "gamma_odd6"), ("psi5", "gamma_odd10")} <= links
    assert ("gamma_tower128", "gamma_tower256") in links
    assert len(reports) == len(tower_pairs(128))
    assert all(r.holds for r in reports), [(r.lower, r.upper) for r in reports if not r.holds]


@given(st.floats(0.0, 1e3), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_odd_base_link_quadratic_vanishes(x, r_a, r_b):
    """For (psi3, gamma_odd6) and (psi5, gamma_odd10) G = 1, so the quadratic is identically 0."""
    for pair in ((word_length(3), gamma_odd_base(6)), (word_length(5), gamma_odd_base(10))):
        A, B, C = quadratic_coefficients(pair, r_a, r_b)
        assert float(A) == float(B) == float(C) == 0.0
        assert quadratic_lhs(pair, x, r_a, r_b) == 0.0


def test_odd_base_link_scan_holds():
    """The odd branch scan of psi3 -> gamma_odd6 is flat at 0 and passes."""
    scan = scan_quadratic((word_length(3), gamma_odd_base(6)), resolution=50)
    assert scan.parity == "odd"
    assert scan.min_value == 0.0
    assert not scan.unbounded
    assert scan.verdict
