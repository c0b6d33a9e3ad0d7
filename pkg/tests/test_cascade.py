"""Auxiliary chains for the two-coordinate obstruction."""

import math

import numpy as np
import pytest

from lsi_forge.core.cascade import (
    CHAIN,
    auxiliary_chain,
    cascade_chain_z4,
    cascade_chain_z6,
    cascade_table,
    h_z4,
    h_z6,
    pair_functions,
    theta_derivative,
)
from lsi_forge.exceptions import DomainError, InvalidInputError


@pytest.fixture(scope="module")
def z6_report():
    """Z6 chain on a moderate grid, shared by the module."""
    return cascade_chain_z6(x_max=50.0, samples=2_000)


@pytest.fixture(scope="module")
def z4_report():
    """Z4 chain on a moderate grid, shared by the module."""
    return cascade_chain_z4(x_max=50.0, samples=2_000)


def test_z6_chain_verifies(z6_report):
    """Every member is positive, the sign table at 1 matches and h8 starts the propagation."""
    assert z6_report.verdict
    assert z6_report.sign_table_ok
    assert all(z6_report.sign_verdicts[name] for name in CHAIN)
    assert z6_report.monotone_chain_ok


def test_z6_transcribed_forms_agree_symbolically(z6_report):
    """The listed closed forms equal the derivative-weighted transforms of their predecessors."""
    for label, gap in z6_report.closed_form_checks.items():
        assert gap < 1e-9, label


def test_z6_relations_hold_numerically(z6_report):
    """All eight relations hold on the grid and against numerical differentiation."""
    assert len(z6_report.relation_checks) == 8
    for check in z6_report.relation_checks:
        assert check.holds, (check.relation, check.max_rel_error, check.worst_x)
        assert check.max_rel_error <= 1e-5
        assert check.difference_error <= 1e-5


def test_z6_values_at_one(z6_report):
    """h and h' vanish at 1 while h8(1) = 1152 * 206."""
    values = z6_report.values_at_one
    assert values["h"] == pytest.approx(0.0, abs=1e-12)
    assert values["h'"] == pytest.approx(0.0, abs=1e-10)
    assert values["h8"] == pytest.approx(1152 * 206)
    assert values["h8'"] > 0


def test_z4_chain_positivity_and_relations(z4_report):
    """Every Z4 member is positive on the grid and every relation holds."""
    assert set(z4_report.sign_verdicts) == set(CHAIN)
    assert all(z4_report.sign_verdicts.values()), z4_report.sign_verdicts
    assert z4_report.verdict
    assert all(check.holds for check in z4_report.relation_checks)
    assert abs(z4_report.values_at_one["h"]) < 1e-8
    assert abs(z4_report.values_at_one["h'"]) < 1e-8


def test_z4_grid_is_clipped_to_the_domain(z4_report):
    """The Z4 grid stops short of the zero of the log argument."""
    end = auxiliary_chain("Z4").domain_end()
    assert 30.0 < end < 40.0
    assert z4_report.grid[1] <= 0.99 * end + 1e-9
    assert any("clipped" in note for note in z4_report.notes)


def test_scalar_h_matches_chain_member():
    """Scalar h agrees with the chain member and vanishes at 1."""
    chain = auxiliary_chain("Z6")
    for x in (1.3, 2.0, 7.5):
        assert h_z6(x) == pytest.approx(float(chain.members["h"](x)[0]), rel=1e-10)
    assert h_z6(1.0) == 0.0
    assert h_z4(1.0) == 0.0
    assert h_z4(3.0) > 0


def test_scalar_h_domain_errors():
    """Points outside the domain name the offending subexpression."""
    with pytest.raises(DomainError) as err:
        h_z6(0.5)
    assert err.value.details["subexpression"] == "8*(x - 1)"
    with pytest.raises(DomainError):
        h_z4(40.0)
    with pytest.raises(DomainError):
        h_z6(-1.0)


def test_series_and_closed_form_agree_at_band_edge():
    """Taylor polynomial and closed form meet just outside the series band."""
    member = auxiliary_chain("Z6").members["h"]
    x = np.array([1.051, 1.06])
    series = np.polynomial.polynomial.polyval(x - 1.0, member.coefficients)
    assert np.allclose(series, member.closed(x), rtol=1e-8, atol=1e-14)


def test_table_rows():
    """Table rows carry every member and refuse points off the domain."""
    rows = cascade_table("Z6", [1.5, 2.0, 10.0])
    assert [row["x"] for row in rows] == [1.5, 2.0, 10.0]
    assert set(rows[0]) == {"x", *CHAIN}
    assert all(row["h"] > 0 for row in rows)
    with pytest.raises(DomainError):
        cascade_table("Z6", [1.0])
    with pytest.raises(DomainError):
        cascade_table("Z4", [50.0])


def test_pair_functions():
    """F and theta at 1, and theta' against a central difference."""
    F, theta = pair_functions(1.0)
    assert F == pytest.approx(2.0 / 3.0)
    assert theta == pytest.approx(0.0)
    assert theta_derivative(1.0) == pytest.approx(0.0)
    h = 1e-6
    numeric = (pair_functions(0.7 + h)[1] - pair_functions(0.7 - h)[1]) / (2 * h)
    assert theta_derivative(0.7) == pytest.approx(numeric, rel=1e-6)
    with pytest.raises(DomainError):
        pair_functions(2.0)


def test_bad_inputs():
    """Grid bounds, sample counts and case ids are validated."""
    with pytest.raises(InvalidInputError):
        cascade_chain_z6(x_max=1.0, samples=500)
    with pytest.raises(InvalidInputError):
        cascade_chain_z6(x_max=10.0, samples=10)
    with pytest.raises(InvalidInputError):
        auxiliary_chain("Z5")


def test_negative_member_fails_the_verdict(z4_report):
    """A member that dips below zero on the grid fails the chain even when h and h8 are positive."""
    broken = z4_report.model_copy(update={"sign_verdicts": {**z4_report.sign_verdicts, "h4": False}})
    assert broken.sign_verdicts["h"] and broken.sign_verdicts["h8"]
    assert not broken.verdict


@pytest.mark.parametrize("case", ["Z6", "Z4"])
def test_chains_verify_on_a_fine_grid(case):
    """Both chains verify at 1e5 samples, including the points just outside the series band."""
    run = cascade_chain_z6 if case == "Z6" else cascade_chain_z4
    report = run(x_max=50.0, samples=100_000)
    failing = [(c.relation, c.max_rel_error, c.worst_x) for c in report.relation_checks if not c.holds]
    assert failing == []
    assert all(report.sign_verdicts.values())
    assert report.verdict


def test_relation_checks_record_the_oracles(z6_report):
    """Spot checks by numerical differentiation run for every relation."""
    for check in z6_report.relation_checks:
        assert 0.0 <= check.difference_error <= 1e-5
        assert check.precise_points >= 0
