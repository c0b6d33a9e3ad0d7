"""Weight builders, the pair condition and name resolution."""

import json
from fractions import Fraction

import pytest
from pydantic import ValidationError

from lsi_forge.core.weights import (
    check_pair_condition,
    dump_weight_json,
    gamma_even_tower,
    gamma_odd_base,
    phi4,
    phi6,
    resolve_pair,
    resolve_weight,
    tower_pairs,
    weight_from_values,
    word_length,
)
from lsi_forge.exceptions import ConfigurationError, InvalidInputError, WeightNotFoundError
from lsi_forge.models import Weight


def test_builtin_values():
    """Builtin weights carry the documented values as exact rationals."""
    assert word_length(6).values == tuple(Fraction(v) for v in (0, 1, 2, 3, 2, 1))
    assert phi4().values[2] == Fraction(8, 5)
    assert phi6().values == tuple(Fraction(v) for v in (0, 1, 2, 1, 2, 1))
    assert gamma_even_tower(8)[4] == 3
    assert gamma_odd_base(10)[5] == 1


def test_builders_reject_bad_orders():
    """Builders refuse orders outside their families."""
    with pytest.raises(InvalidInputError):
        word_length(1)
    with pytest.raises(InvalidInputError):
        gamma_even_tower(7)
    with pytest.raises(InvalidInputError):
        gamma_odd_base(2)


def test_weight_validation():
    """Lengths, signs and rational literals are validated."""
    with pytest.raises(ValidationError):
        Weight(n=3, values=[0, 1], label="short")
    with pytest.raises(ValidationError):
        Weight(n=2, values=[0, -1])
    w = Weight(n=3, values=["0", "1/3", 0.5])
    assert w.values[1] == Fraction(1, 3)
    assert w.model_dump()["values"] == [0, "1/3", "1/2"]


def test_symmetry_and_scaling():
    """Symmetry, scaling and entrywise domination."""
    assert phi4().is_symmetric()
    assert not weight_from_values([0, 1, 2, 3]).is_symmetric()
    assert phi4().scaled("1/2")[2] == Fraction(4, 5)
    assert word_length(4).dominated_by(Weight(n=4, values=[0, 1, 2, 2]))


def test_word_length_pair_satisfies_condition():
    """psi4 and psi8 meet all five clauses."""
    report = check_pair_condition(word_length(4), word_length(8))
    assert report.condition_holds
    assert report.failing_clauses == []


def test_failing_clauses_are_named():
    """Failed clauses are listed with their first offending index."""
    lower = weight_from_values([0, 1, 2, 3], label="ramp")
    upper = weight_from_values([0, 0, 0, 0, 0, 0, 0, 0], label="flat")
    report = check_pair_condition(lower, upper)
    assert not report.condition_holds
    assert "lower_symmetric" in report.failing_clauses
    assert "gap_condition" in report.failing_clauses
    assert report.clause_details["lower_symmetric"] == "k=1"


def test_pair_condition_needs_double_order():
    """The upper weight must live on Z_2n."""
    with pytest.raises(InvalidInputError):
        check_pair_condition(word_length(4), word_length(6))


def test_tower_pairs_enumeration():
    """Even towers from 6 and 8, odd towers from psi3 and psi5, each linking n to 2n."""
    pairs = tower_pairs(32)
    labels = [(a.label, b.label) for a, b in pairs]
    assert ("gamma_tower6", "gamma_tower12") in labels
    assert ("gamma_tower32", "gamma_tower64") in labels
    assert ("gamma_odd10", "gamma_odd20") in labels
    assert ("psi3", "gamma_odd6") in labels
    assert ("psi5", "gamma_odd10") in labels
    assert labels.index(("psi3", "gamma_odd6")) < labels.index(("gamma_odd6", "gamma_odd12"))
    assert len(pairs) == 13
    assert all(b.n == 2 * a.n for a, b in pairs)


def test_resolve_names():
    """Builtin names, bare family names and pairs resolve."""
    assert resolve_weight("psi8").label == "psi8"
    assert resolve_weight("psi", 5).n == 5
    lower, upper = resolve_pair("phi4:gamma_tower")
    assert (lower.label, upper.label) == ("phi4", "gamma_tower8")
    with pytest.raises(WeightNotFoundError):
        resolve_weight("nope")
    with pytest.raises(ConfigurationError):
        resolve_weight("psi")
    with pytest.raises(ConfigurationError):
        resolve_pair("psi4")


def test_json_weight_files(tmp_path):
    """Weights round-trip through JSON files and bad files are configuration errors."""
    path = tmp_path / "phi4.json"
    dump_weight_json(phi4(), str(path))
    assert resolve_weight(str(path)) == phi4()

    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"n": 2, "values": [0, -1]}))
    with pytest.raises(ConfigurationError):
        resolve_weight(str(bad))
    with pytest.raises(ConfigurationError):
        resolve_weight(str(tmp_path / "missing.json"))


def test_odd_base_links_meet_the_pair_condition():
    """psi3 -> gamma_odd6 and psi5 -> gamma_odd10 satisfy every clause."""
    for lower, upper in ((word_length(3), gamma_odd_base(6)), (word_length(5), gamma_odd_base(10))):
        report = check_pair_condition(lower, upper)
        assert report.condition_holds, report.clause_details


def test_tower_skips_base_links_above_the_limit():
    """A limit below 5 keeps only the psi3 link."""
    labels = [(a.label, b.label) for a, b in tower_pairs(4)]
    assert labels == [("psi3", "gamma_odd6")]
    with pytest.raises(InvalidInputError):
        tower_pairs(16, odd_bases=(4,))
