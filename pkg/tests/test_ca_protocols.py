import random
from fractions import Fraction
from itertools import product

import pytest

from oracles import proxy_opt_by_full_assignment, proxy_opt_by_submask_dp
from market_rounds.ca_protocols import (
    BundleReport,
    best_allocation_wrt_proxy,
    is_maximal_report,
    k_round_t_restricted,
    proxy_valuation,
    report_maximal_disjoint_bundles,
    simultaneous_t_restricted,
)
from market_rounds.core import (
    Allocation,
    BinaryXOSValuation,
    ConfigurationError,
    ProxyCapExceededError,
    check_feasible,
    welfare,
)
from market_rounds.instance_gen import gen_planted_t_restricted


def binary(clause_sets, m, mu=1):
    return BinaryXOSValuation(Fraction(mu), tuple(frozenset(t) for t in clause_sets), m)


# --- independent oracles ------------------------------------------------------


def test_oracles_agree_on_tiny_instances():
    rng = random.Random(404)
    for _ in range(25):
        m = rng.randint(1, 5)
        n = rng.randint(1, 3)
        proxies = [
            binary(
                [rng.sample(range(m), rng.randint(1, m)) for _ in range(rng.randint(0, 3))],
                m,
            )
            for _ in range(n)
        ]
        assert proxy_opt_by_submask_dp(proxies, m) == proxy_opt_by_full_assignment(proxies, m)


# --- bundle reports -----------------------------------------------------------


def test_report_greedy_single_clause():
    v = binary([{0, 1, 2, 3}], 8)
    report = report_maximal_disjoint_bundles(v, 2, frozenset(range(8)))
    assert report.bundles == (frozenset({0, 1}), frozenset({2, 3}))


def test_report_leftover_below_size():
    v = binary([{0, 1, 2}], 8)
    report = report_maximal_disjoint_bundles(v, 2, frozenset(range(8)))
    assert report.bundles == (frozenset({0, 1}),)
    assert is_maximal_report(v, 2, frozenset(range(8)), report)


def test_report_respects_universe():
    v = binary([{0, 1, 2, 3}], 8)
    report = report_maximal_disjoint_bundles(v, 2, frozenset({1, 2, 5}))
    assert report.bundles == (frozenset({1, 2}),)


def test_report_rejects_zero_size():
    v = binary([{0}], 2)
    with pytest.raises(ConfigurationError):
        report_maximal_disjoint_bundles(v, 0, frozenset({0, 1}))


def test_report_maximality_random_suite():
    rng = random.Random(71)
    universe = frozenset(range(8))
    for _ in range(120):
        clause_count = rng.randint(1, 3)
        v = binary(
            [rng.sample(range(8), rng.randint(1, 8)) for _ in range(clause_count)], 8
        )
        report = report_maximal_disjoint_bundles(v, 2, universe)
        for a, b in product(report.bundles, report.bundles):
            assert a is b or not (a & b)
        assert all(v.value(bundle) == len(bundle) * v.mu for bundle in report.bundles)
        assert is_maximal_report(v, 2, universe, report)


def test_proxy_dominated_by_truth():
    # 1000 sampled bundles per instance
    rng = random.Random(8)
    for _ in range(5):
        v = binary([rng.sample(range(10), rng.randint(1, 6)) for _ in range(3)], 10)
        report = report_maximal_disjoint_bundles(v, 2, frozenset(range(10)))
        proxy = proxy_valuation(report, v.mu, 10)
        for _ in range(1000):
            bundle = frozenset(rng.sample(range(10), rng.randint(0, 10)))
            assert proxy.value(bundle) <= v.value(bundle)


# --- referee-side proxy optimization -------------------------------------------


def test_disjoint_proxies_everyone_served():
    proxies = [binary([{0, 1}], 6), binary([{2, 3, 4}], 6)]
    alloc = best_allocation_wrt_proxy(proxies, mode="exact")
    assert welfare(alloc, proxies) == 5


def test_two_players_one_singleton():
    proxies = [binary([{0}], 1), binary([{0}], 1)]
    alloc = best_allocation_wrt_proxy(proxies, mode="exact")
    assert welfare(alloc, proxies) == 1
    holders = [i for i, b in enumerate(alloc.bundles) if b]
    assert len(holders) == 1


def test_exact_matches_enumeration_oracle():
    rng = random.Random(606)
    for _ in range(80):
        m = rng.randint(2, 8)
        n = rng.randint(1, 3)
        proxies = [
            binary(
                [rng.sample(range(m), rng.randint(1, max(1, m // 2))) for _ in range(rng.randint(0, 3))],
                m,
            )
            for _ in range(n)
        ]
        alloc = best_allocation_wrt_proxy(proxies, mode="exact")
        assert check_feasible(alloc, m)
        assert welfare(alloc, proxies) == proxy_opt_by_submask_dp(proxies, m)


def test_greedy_mode_feasible_and_cap_error():
    proxies = [binary([[j] for j in range(11)], 11), binary([[j] for j in range(11)], 11)]
    with pytest.raises(ProxyCapExceededError):
        best_allocation_wrt_proxy(proxies, mode="exact", exact_cap=20)
    alloc = best_allocation_wrt_proxy(proxies, mode="greedy")
    assert check_feasible(alloc, 11)


# --- one-round protocol ---------------------------------------------------------


def test_simul_single_player_single_clause():
    v = binary([{0, 1}], 4)
    alloc, tr = simultaneous_t_restricted([v], 2, alloc_mode="exact")
    assert alloc.bundles[0] == frozenset({0, 1})
    assert welfare(alloc, [v]) == 2
    assert tr.total_rounds == 1


def test_simul_two_players_disjoint_clauses():
    va = binary([{0, 1, 2, 3}], 8)
    vb = binary([{4, 5, 6, 7}], 8)
    alloc, _ = simultaneous_t_restricted([va, vb], 4, alloc_mode="exact")
    assert alloc.bundles == (frozenset({0, 1, 2, 3}), frozenset({4, 5, 6, 7}))
    assert welfare(alloc, [va, vb]) == 8


def test_simul_rejects_bad_t():
    v = binary([{0, 1}], 4)
    with pytest.raises(ConfigurationError):
        simultaneous_t_restricted([v], 3)
    with pytest.raises(ConfigurationError):
        simultaneous_t_restricted([v], 1)


def test_simul_planted_instances_meet_ratio_band():
    # welfare >= planted / (3 * m^(1/3) * log2 m) on every seed
    import math

    m, t = 12, 4
    bound = 12 / (3 * m ** (1 / 3) * math.log2(m))
    for seed in range(50):
        players, meta = gen_planted_t_restricted(3, t, m, 2, seed)
        alloc, _ = simultaneous_t_restricted(players, t, alloc_mode="greedy")
        assert float(welfare(alloc, players)) >= bound


def test_simul_scaled_mu_scales_welfare():
    v1 = binary([{0, 1}], 4, mu=1)
    v3 = binary([{0, 1}], 4, mu=3)
    a1, _ = simultaneous_t_restricted([v1], 2, alloc_mode="exact")
    a3, _ = simultaneous_t_restricted([v3], 2, alloc_mode="exact")
    assert a1.bundles == a3.bundles
    assert welfare(a3, [v3]) == 3 * welfare(a1, [v1])


# --- k-round protocol ------------------------------------------------------------


def test_k_round_single_player_full_clause():
    v = binary([{0, 1, 2, 3}], 16)
    alloc, _ = k_round_t_restricted([v], 4, 1)
    assert alloc.bundles[0] == frozenset({0, 1, 2, 3})


def test_k_round_identical_players_sweep():
    # hand-simulated: player 0 takes both of his bundles, player 1's remainders
    # are empty and fall below the 16^(-1/2) qualifying fraction
    v = binary([{0, 1, 2, 3}], 16)
    alloc, _ = k_round_t_restricted([v, v], 4, 1)
    assert alloc.bundles == (frozenset({0, 1, 2, 3}), frozenset())


def test_k_round_rejects_tiny_bundle_size():
    v = binary([{0, 1}], 16)
    with pytest.raises(ConfigurationError):
        k_round_t_restricted([v], 2, 2)  # t/(2k) < 1


def test_k_round_granted_remainders_large_enough():
    # every granted remainder has size >= t / (2k * m^(1/(k+1)))
    for seed in range(30):
        players, _ = gen_planted_t_restricted(3, 4, 20, 2, seed)
        t, k = 4, 2
        m = players[0].m
        alloc, tr = k_round_t_restricted(players, t, k, keep_trace=True)
        assert check_feasible(alloc, m)
        bound = (t / (2 * k)) / m ** (1 / (k + 1))
        for snap in tr.meta["trace"]:
            for bundle_remainders in snap["granted_remainders"].values():
                for remainder in bundle_remainders:
                    assert len(remainder) >= bound - 1e-9


def test_k_round_universes_shrink_and_players_leave():
    for seed in range(30):
        players, _ = gen_planted_t_restricted(3, 8, 30, 2, seed)
        alloc, tr = k_round_t_restricted(players, 8, 2, keep_trace=True)
        trace = tr.meta["trace"]
        for earlier, later in zip(trace, trace[1:]):
            assert set(later["active"]) <= set(earlier["active"])
            for i in later["active"]:
                assert set(later["universes"][i]) <= set(earlier["universes"][i])
        allocated_once = set()
        for snap in trace:
            for i in snap["granted"]:
                assert i not in allocated_once
                allocated_once.add(i)
