from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from market_rounds.core import (
    AdditiveClause,
    Allocation,
    BinaryXOSValuation,
    ConfigurationError,
    DomainError,
    InfeasibleAllocationError,
    MatchingInstance,
    PriceVector,
    Transcript,
    XOSValuation,
    check_feasible,
    evaluate_xos,
    fraction_from_json,
    fraction_to_json,
    index_bits,
    length_prefix_bits,
    matching_instance_from_json,
    matching_instance_to_json,
    payload_bits,
    welfare,
    xos_instance_from_json,
    xos_instance_to_json,
)


def xos(clause_dicts, m):
    return XOSValuation(tuple(AdditiveClause(c) for c in clause_dicts), m)


# --- evaluate_xos -----------------------------------------------------------


def test_evaluate_single_containing_clause():
    v = xos([{0: 1, 1: 1}, {2: 1}], 3)
    assert evaluate_xos(v, {0, 1}) == 2


def test_evaluate_empty_set_is_zero():
    v = xos([{0: 5, 2: 3}, {1: 7}], 3)
    assert evaluate_xos(v, frozenset()) == 0


def test_evaluate_tie_reports_lowest_clause_index():
    # both clauses sum to 2 on {0, 1}; hand enumeration: 2 vs 1+1
    v = xos([{0: 2}, {0: 1, 1: 1, 2: 1}], 3)
    value, idx = v.maximizing_clause({0, 1})
    assert value == 2
    assert idx == 0


def test_evaluate_out_of_range_raises():
    v = xos([{0: 1}], 2)
    with pytest.raises(DomainError):
        evaluate_xos(v, {5})


# --- welfare / feasibility --------------------------------------------------


def test_welfare_empty_allocation():
    vs = [xos([{0: 1, 1: 1}], 2) for _ in range(2)]
    assert welfare(Allocation.empty(2), vs) == 0


def test_welfare_additive_split():
    vs = [xos([{0: 1, 1: 1}], 2) for _ in range(2)]
    alloc = Allocation((frozenset({0}), frozenset({1})))
    assert welfare(alloc, vs) == 2


def test_welfare_rejects_overlap():
    vs = [xos([{0: 1}], 1) for _ in range(2)]
    with pytest.raises(InfeasibleAllocationError):
        welfare(Allocation((frozenset({0}), frozenset({0}))), vs)


def test_check_feasible():
    assert check_feasible(Allocation((frozenset({0}), frozenset({1}))), 2)
    assert not check_feasible(Allocation((frozenset({0}), frozenset({0}))), 2)
    assert not check_feasible(Allocation((frozenset({5}), frozenset())), 3)


# --- XOS properties ---------------------------------------------------------


clause_strategy = st.dictionaries(
    st.integers(0, 7), st.integers(1, 9).map(Fraction), min_size=0, max_size=6
)
xos_strategy = st.lists(clause_strategy, min_size=1, max_size=4).map(
    lambda cs: xos(cs, 8)
)
bundle_strategy = st.frozensets(st.integers(0, 7), max_size=8)


@given(xos_strategy, bundle_strategy, bundle_strategy)
@settings(max_examples=200)
def test_xos_monotone(v, a, b):
    assert evaluate_xos(v, a) <= evaluate_xos(v, a | b)


@given(xos_strategy, bundle_strategy, bundle_strategy)
@settings(max_examples=200)
def test_xos_subadditive_on_disjoint_sets(v, a, b):
    s, t = a - b, b - a
    assert evaluate_xos(v, s) + evaluate_xos(v, t) >= evaluate_xos(v, s | t)


def test_binary_xos_matches_general_encoding():
    v = BinaryXOSValuation(Fraction(1, 2), (frozenset({0, 1}), frozenset({2})), 3)
    g = v.to_xos()
    for bundle in ({0}, {0, 1}, {0, 2}, {1, 2}, set(), {0, 1, 2}):
        assert v.value(bundle) == g.value(bundle)


# --- prices -----------------------------------------------------------------


def test_price_vector_exact_multiples():
    pv = PriceVector.zeros(3, Fraction(1, 4))
    assert pv.prices() == (0, 0, 0)
    pv2 = PriceVector(Fraction(1, 4), (1, 4, 0))
    assert pv2.price(0) == Fraction(1, 4)
    assert pv2.price(1) == 1


def test_price_vector_rejects_over_one():
    with pytest.raises(ConfigurationError):
        PriceVector(Fraction(1, 4), (5,))


# --- transcript bit accounting ----------------------------------------------


def test_index_bits():
    assert index_bits(1) == 0
    assert index_bits(2) == 1
    assert index_bits(10) == 4
    assert length_prefix_bits(4) == 3


def test_declared_encoding():
    assert payload_bits({"item": 3}, 10) == 4
    # bundle: size * ceil(log2 u) + prefix ceil(log2 (u+1))
    assert payload_bits({"bundle": [1, 2, 3]}, 10) == 3 * 4 + 4
    assert payload_bits({"bundles": [[1, 2], [3]]}, 10) == 4 + (2 * 4 + 4) + (1 * 4 + 4)


payload_strategy = st.one_of(
    st.fixed_dictionaries({"item": st.integers(0, 9)}),
    st.fixed_dictionaries({"bundle": st.lists(st.integers(0, 9), max_size=5)}),
    st.fixed_dictionaries(
        {"bundles": st.lists(st.lists(st.integers(0, 9), max_size=4), max_size=3)}
    ),
)


@given(st.lists(st.lists(st.tuples(st.integers(0, 9), payload_strategy), max_size=4), max_size=3))
@settings(max_examples=100)
def test_transcript_totals_recompute(rounds):
    tr = Transcript.from_rounds(10, rounds)
    assert tr.total_bits == tr.recomputed_bits()
    assert tr.total_bits == sum(tr.per_round_bits())
    assert tr.total_rounds == len(rounds)
    assert sum(tr.per_player_bits().values()) == tr.total_bits


# --- JSON schemas -----------------------------------------------------------


def test_fraction_json_roundtrip():
    assert fraction_to_json(Fraction(3)) == 3
    assert fraction_to_json(Fraction(3, 2)) == "3/2"
    assert fraction_from_json("3/2") == Fraction(3, 2)
    assert fraction_from_json(4) == 4


def test_matching_instance_json_roundtrip():
    inst = MatchingInstance(3, (frozenset({0, 2}), frozenset(), frozenset({1})))
    again = matching_instance_from_json(matching_instance_to_json(inst))
    assert again == inst


def test_xos_instance_json_roundtrip():
    players = (
        xos([{0: Fraction(3, 2), 1: 2}], 4),
        BinaryXOSValuation(Fraction(1), (frozenset({2, 3}),), 4),
    )
    again = xos_instance_from_json(xos_instance_to_json(players))
    assert again == players
