from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracle
from conftest import make_t1
from strategies import attr_subsets, tables, tables_with_target
from rsabl.errors import AttributeAlreadyInBase, CapExceeded, UnknownAttribute, UnknownObject
from rsabl.rough import (
    decision_positive_region,
    exhaustive_cap,
    exhaustive_min_reduct,
    gamma,
    greedy_reduct,
    is_reduct,
    lower_approx,
    regions,
    rule_certainty,
    significance,
    upper_approx,
)
from rsabl.table import DecisionTable

C = ["flys", "swims"]


def consistent_t1():
    t = make_t1()
    return DecisionTable.from_rows(C, "d", t.rows[:5], t.decisions[:5])


def test_t1_approximations(t1):
    # ids are 0-based: objects three and four are 2 and 3
    assert lower_approx(t1, C, {2, 3}) == frozenset()
    assert lower_approx(t1, C, {0, 1}) == {0, 1}
    assert lower_approx(t1, C, t1.universe) == t1.universe
    assert upper_approx(t1, C, {2, 3}) == {2, 3, 5}
    assert upper_approx(t1, C, set()) == frozenset()
    assert upper_approx(t1, C, {4}) == {4}


def test_t1_regions(t1):
    r = regions(t1, C, {2, 3})
    assert (r.pos, r.neg, r.bnd) == (frozenset(), {0, 1, 4}, {2, 3, 5})
    r = regions(t1, C, t1.universe)
    assert (r.pos, r.neg, r.bnd) == (t1.universe, frozenset(), frozenset())
    r = regions(t1, C, set())
    assert (r.pos, r.neg, r.bnd) == (frozenset(), t1.universe, frozenset())


def test_positive_region_and_gamma(t1):
    assert decision_positive_region(t1, C) == {0, 1, 4}
    assert decision_positive_region(t1, ["swims"]) == frozenset()
    assert gamma(t1, C) == Fraction(1, 2)
    assert gamma(t1, ["flys"]) == Fraction(1, 3)
    ct = consistent_t1()
    assert decision_positive_region(ct, C) == ct.universe
    assert gamma(ct, C) == 1


def test_significance(t1, t2p):
    assert significance(t1, "swims", ["flys"]) == Fraction(1, 6)
    assert significance(t2p, "flys", []) == Fraction(2, 5)
    with pytest.raises(AttributeAlreadyInBase):
        significance(t1, "flys", ["flys"])
    with pytest.raises(UnknownAttribute):
        significance(t1, "wings", [])


def test_constant_attribute_adds_nothing():
    table = DecisionTable.from_rows(["a", "k"], "d", [["0", "1"], ["1", "1"]], ["x", "y"])
    assert significance(table, "k", ["a"]) == 0


def test_is_reduct_examples(t1, t2p):
    assert is_reduct(t2p, ["swims", "furry"])
    assert not is_reduct(t2p, ["flys", "swims", "furry"])
    assert is_reduct(t1, C)
    assert not is_reduct(t1, ["flys"])


def test_greedy_reduct_examples(t1, t2p):
    r = greedy_reduct(t2p)
    assert r.attrs == ("flys", "swims")
    assert r.method == "greedy"
    assert r.gamma_full == r.gamma_reduct == 1
    assert greedy_reduct(t1).attrs == ("flys", "swims")
    single = DecisionTable.from_rows(["a"], "d", [["0"], ["1"]], ["x", "y"])
    assert greedy_reduct(single).attrs == ("a",)


def test_exhaustive_reduct_examples(t1, t2p):
    assert exhaustive_min_reduct(t2p).attrs == ("flys", "swims")
    assert exhaustive_min_reduct(t1).attrs == ("flys", "swims")
    perfect = DecisionTable.from_rows(
        ["noise", "twin"], "d", [["0", "x"], ["0", "y"], ["1", "y"]], ["x", "y", "y"]
    )
    assert exhaustive_min_reduct(perfect).attrs == ("twin",)


def test_exhaustive_cap(monkeypatch):
    wide = DecisionTable.from_rows([f"a{i:02d}" for i in range(20)], "d", [["0"] * 20], ["x"])
    with pytest.raises(CapExceeded):
        exhaustive_min_reduct(wide)
    monkeypatch.setenv("RSABL_EXHAUSTIVE_CAP", "20")
    assert exhaustive_cap() == 20
    assert len(exhaustive_min_reduct(wide).attrs) == 1


def test_rule_certainty(t1):
    assert rule_certainty(t1, 2, C) == Fraction(2, 3)
    assert rule_certainty(t1, 0, C) == 1
    with pytest.raises(UnknownObject):
        rule_certainty(t1, 6, C)


def test_unknown_attribute(t1):
    with pytest.raises(UnknownAttribute):
        lower_approx(t1, ["wings"], {0})
    with pytest.raises(UnknownAttribute):
        gamma(t1, ["wings"])


def test_gamma_of_empty_set_is_zero(t1):
    assert gamma(t1, []) == 0


@given(tables_with_target(missing=True), st.data())
def test_approximations_match_oracle(pair, data):
    table, target = pair
    attrs = data.draw(attr_subsets(table))
    assert lower_approx(table, attrs, target) == oracle.lower(table, attrs, target)
    assert upper_approx(table, attrs, target) == oracle.upper(table, attrs, target)
    r = regions(table, attrs, target)
    assert (r.pos, r.neg, r.bnd) == oracle.regions(table, attrs, target)


@given(tables_with_target(), st.data())
def test_duality(pair, data):
    table, target = pair
    attrs = data.draw(attr_subsets(table))
    assert lower_approx(table, attrs, target) == table.universe - upper_approx(table, attrs, table.universe - target)


@given(tables(), st.data())
def test_gamma_monotone_and_significance_nonnegative(table, data):
    big = data.draw(attr_subsets(table))
    small = data.draw(st.lists(st.sampled_from(big), min_size=1, unique=True))
    assert gamma(table, small) <= gamma(table, big)
    rest = [a for a in table.condition_attrs if a not in small]
    for a in rest:
        assert significance(table, a, small) >= 0


@given(tables())
def test_gamma_one_iff_pure_blocks(table):
    pure = all(len({table.decisions[x] for x in b}) == 1 for b in oracle.classes(table, table.condition_attrs))
    assert (gamma(table, table.condition_attrs) == 1) == pure


@given(tables(max_rows=64, max_attrs=10))
def test_greedy_is_reduct(table):
    r = greedy_reduct(table)
    assert is_reduct(table, r.attrs)
    assert oracle.is_reduct(table, r.attrs)
    assert decision_positive_region(table, r.attrs) == decision_positive_region(table, table.condition_attrs)


@given(tables(max_attrs=6))
def test_exhaustive_is_minimal(table):
    ex = exhaustive_min_reduct(table)
    assert len(ex.attrs) == oracle.min_reduct_size(table)
    assert len(ex.attrs) <= len(greedy_reduct(table).attrs)
    assert ex.gamma_reduct == ex.gamma_full


@given(tables(), st.data())
def test_is_reduct_matches_oracle(table, data):
    attrs = data.draw(attr_subsets(table))
    assert is_reduct(table, attrs) == oracle.is_reduct(table, attrs)


@given(tables(missing=True), st.data())
def test_certainty_matches_oracle(table, data):
    attrs = data.draw(attr_subsets(table))
    x = data.draw(st.integers(0, len(table) - 1))
    assert rule_certainty(table, x, attrs) == oracle.certainty(table, x, attrs)
