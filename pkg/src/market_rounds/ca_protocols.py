"""Combinatorial-auction protocols for same-level binary XOS bidders.

Both protocols have players report disjoint fully-valued bundles and let the
referee allocate from the reports alone:

* the one-round protocol reports bundles of size t/2 and optimizes the proxy
  valuations induced by the reports (exactly below a size cap, greedily
  otherwise);
* the k-round protocol reports bundles of size t/(2k) inside a per-player
  shrinking universe and sweeps players in ascending id, granting the
  remainders of every reported bundle that is still mostly unallocated.

All t-restricted bookkeeping normalizes the value level to 1 and scales by mu
only when welfare is evaluated.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, product
from typing import Sequence

from .core import (
    Allocation,
    BinaryXOSValuation,
    ConfigurationError,
    ProxyCapExceededError,
    Transcript,
)

# A proxy is just a binary XOS valuation whose clause sets are reported bundles.
ProxyValuation = BinaryXOSValuation

DEFAULT_EXACT_CAP = 20


def _check_power_of_two(t: int) -> None:
    if t < 1 or t & (t - 1):
        raise ConfigurationError(f"t={t} is not a power of two")


@dataclass(frozen=True)
class BundleReport:
    """Pairwise-disjoint fully-valued bundles of one required size, one player."""

    player: int
    bundles: tuple[frozenset[int], ...]

    def covered(self) -> frozenset[int]:
        out: set[int] = set()
        for b in self.bundles:
            out |= b
        return frozenset(out)


def report_maximal_disjoint_bundles(
    v: BinaryXOSValuation,
    size: int,
    universe: frozenset[int],
    player: int = 0,
) -> BundleReport:
    """Greedy maximal family: scan clauses in order, repeatedly carving the
    lowest-index `size` unused clause items inside the universe.

    Any fully-valued bundle of the required size lies inside a single clause,
    so after the scan no further bundle can be added (maximality).
    """
    if size < 1:
        raise ConfigurationError("bundle size must be at least 1")
    used: set[int] = set()
    bundles: list[frozenset[int]] = []
    for clause in v.clause_sets:
        available = sorted(j for j in clause & universe if j not in used)
        while len(available) >= size:
            chunk = available[:size]
            available = available[size:]
            bundles.append(frozenset(chunk))
            used.update(chunk)
    return BundleReport(player, tuple(bundles))


def proxy_valuation(report: BundleReport, mu: Fraction, m: int) -> ProxyValuation:
    return BinaryXOSValuation(mu, report.bundles, m)


def is_maximal_report(
    v: BinaryXOSValuation, size: int, universe: frozenset[int], report: BundleReport
) -> bool:
    """Exhaustive maximality check (desk scale): no addable bundle exists."""
    used = report.covered()
    for clause in v.clause_sets:
        free = sorted((clause & universe) - used)
        for combo in combinations(free, size):
            if v.value(combo) == size * v.mu:
                return False
    return True


# ---------------------------------------------------------------------------
# Referee-side proxy optimization


def _grant_own_leftovers(
    granted: list[set[int]], reports: Sequence[BundleReport]
) -> None:
    """Give every reported-but-unallocated item to its lowest-id reporter.

    Completing a proxy-optimal core this way leaves total proxy welfare at the
    optimum and only raises the true binary-XOS welfare.
    """
    taken: set[int] = set()
    for g in granted:
        taken |= g
    claim_order: dict[int, int] = {}
    for report in reports:
        for j in sorted(report.covered()):
            if j not in taken and j not in claim_order:
                claim_order[j] = report.player
    for j, player in claim_order.items():
        granted[player].add(j)


def best_allocation_wrt_proxy(
    proxies: Sequence[ProxyValuation],
    mode: str = "exact",
    exact_cap: int = DEFAULT_EXACT_CAP,
) -> Allocation:
    """Optimize welfare against the reported proxy valuations.

    exact: search per-player single-bundle choices (lossless for binary XOS
    proxies: items outside a player's best single bundle add nothing to his
    proxy value), maximizing the number of covered items, then hand every
    remaining reported item to its lowest-id reporter (which cannot change
    proxy welfare). Refuses with ProxyCapExceededError when the total bundle
    count exceeds `exact_cap`.

    greedy: players in order of largest reported bundle, each granted the
    remaining-items-maximizing fraction of exactly one of his bundles.
    """
    n = len(proxies)
    reports = tuple(
        BundleReport(i, proxies[i].clause_sets) for i in range(n)
    )
    granted: list[set[int]] = [set() for _ in range(n)]

    if mode == "exact":
        total = sum(len(r.bundles) for r in reports)
        if total > exact_cap:
            raise ProxyCapExceededError(
                f"{total} reported bundles exceed the exact-search cap {exact_cap}; "
                "use greedy mode"
            )
        choosers = [r for r in reports if r.bundles]
        best_cover: frozenset[int] = frozenset()
        best_choice: tuple[int, ...] = ()
        for choice in product(*(range(len(r.bundles)) for r in choosers)):
            cover: set[int] = set()
            for r, c in zip(choosers, choice):
                cover |= r.bundles[c]
            if len(cover) > len(best_cover):
                best_cover = frozenset(cover)
                best_choice = choice
        claimed: set[int] = set()
        for r, c in zip(choosers, best_choice):
            granted[r.player] = set(r.bundles[c]) - claimed
            claimed |= r.bundles[c]
        _grant_own_leftovers(granted, reports)
    elif mode == "greedy":
        order = sorted(
            (r for r in reports if r.bundles),
            key=lambda r: (-max(len(b) for b in r.bundles), r.player),
        )
        remaining: set[int] = set()
        for r in reports:
            remaining |= r.covered()
        for r in order:
            best = max(
                range(len(r.bundles)), key=lambda c: (len(r.bundles[c] & remaining), -c)
            )
            take = r.bundles[best] & remaining
            granted[r.player] = set(take)
            remaining -= take
    else:
        raise ConfigurationError(f"unknown allocation mode {mode!r}")

    return Allocation(tuple(frozenset(g) for g in granted))


# ---------------------------------------------------------------------------
# One-round protocol


def simultaneous_t_restricted(
    players: Sequence[BinaryXOSValuation],
    t: int,
    alloc_mode: str = "greedy",
    exact_cap: int = DEFAULT_EXACT_CAP,
) -> tuple[Allocation, Transcript]:
    """One round: report maximal disjoint size-t/2 fully-valued bundles,
    then allocate by optimizing the induced proxies."""
    _check_power_of_two(t)
    if t // 2 < 1:
        raise ConfigurationError("t must be at least 2 so that bundles have size t/2 >= 1")
    m = players[0].m
    full = frozenset(range(m))
    reports = [
        report_maximal_disjoint_bundles(v, t // 2, full, player=i)
        for i, v in enumerate(players)
    ]
    proxies = [proxy_valuation(r, players[i].mu, m) for i, r in enumerate(reports)]
    alloc = best_allocation_wrt_proxy(proxies, mode=alloc_mode, exact_cap=exact_cap)
    entries = [
        (i, {"bundles": [sorted(b) for b in r.bundles]}) for i, r in enumerate(reports)
    ]
    transcript = Transcript.from_rounds(m, [entries], {"t": t, "alloc_mode": alloc_mode})
    return alloc, transcript


# ---------------------------------------------------------------------------
# k-round protocol


def _qualifies(remainder: int, bundle_size: int, m: int, k: int) -> bool:
    # remainder / bundle_size >= m^(-1/(k+1)), compared exactly via powers
    return remainder ** (k + 1) * m >= bundle_size ** (k + 1)


def k_round_t_restricted(
    players: Sequence[BinaryXOSValuation],
    t: int,
    k: int,
    seed: int = 0,
    keep_trace: bool = False,
) -> tuple[Allocation, Transcript]:
    """k rounds of size-t/(2k) bundle reports inside shrinking universes.

    Sweeping players in ascending id, a player receives the unallocated
    remainder of each reported bundle that kept at least an m^(-1/(k+1))
    fraction of its items; allocated players drop out, and the next round's
    per-player universe is the reported union intersected with what is left.
    The protocol itself is deterministic; `seed` is accepted for interface
    uniformity with the randomized protocols.
    """
    del seed
    _check_power_of_two(t)
    if k < 1:
        raise ConfigurationError("k must be at least 1")
    m = players[0].m
    if m > 1 and k > math.floor(math.log2(m)):
        raise ConfigurationError(f"k={k} exceeds log2(m) for m={m}")
    size = t // (2 * k)
    if size < 1:
        raise ConfigurationError(f"t={t} too small for {k} rounds: t/(2k) < 1")

    n = len(players)
    unallocated = set(range(m))
    active = set(range(n))
    player_universe: dict[int, frozenset[int]] = {i: frozenset(range(m)) for i in active}
    granted: list[set[int]] = [set() for _ in range(n)]
    rounds: list[list[tuple[int, dict]]] = []
    trace: list[dict] = []

    for r in range(1, k + 1):
        reports = {
            i: report_maximal_disjoint_bundles(players[i], size, player_universe[i], player=i)
            for i in sorted(active)
        }
        entries = [
            (i, {"bundles": [sorted(b) for b in reports[i].bundles]})
            for i in sorted(active)
        ]
        newly_allocated: set[int] = set()
        remainders: dict[int, list[list[int]]] = {}
        for i in sorted(active):
            for bundle in reports[i].bundles:
                remainder = bundle & unallocated
                if _qualifies(len(remainder), len(bundle), m, k):
                    granted[i] |= remainder
                    unallocated -= remainder
                    remainders.setdefault(i, []).append(sorted(remainder))
            if granted[i]:
                newly_allocated.add(i)
        if keep_trace:
            trace.append(
                {
                    "round": r,
                    "active": sorted(active),
                    "unallocated": sorted(unallocated),
                    "universes": {i: sorted(player_universe[i]) for i in sorted(active)},
                    "reports": {i: [sorted(b) for b in reports[i].bundles] for i in sorted(active)},
                    "granted": {i: sorted(granted[i]) for i in sorted(newly_allocated)},
                    "granted_remainders": remainders,
                }
            )
        active -= newly_allocated
        player_universe = {
            i: reports[i].covered() & frozenset(unallocated) for i in active
        }
        rounds.append(entries)

    meta: dict = {"t": t, "k": k, "bundle_size": size}
    if keep_trace:
        meta["trace"] = trace
    transcript = Transcript.from_rounds(m, rounds, meta)
    return Allocation(tuple(frozenset(g) for g in granted)), transcript
