"""Exact maximum matching and optimality certificates.

Ground truth for every approximation-ratio measurement, and the augmenting
machinery behind the exact protocol's second phase. Layered (Hopcroft-Karp
style) augmenting-path search with fully deterministic tie-breaking:
players and items are always scanned in ascending index order.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .core import MatchingInstance

# matching[i] is the item assigned to player i, or None
Matching = tuple

UNMATCHED = -1


def _bfs_layers(adj: list[list[int]], match_l: list[int], match_r: list[int]) -> tuple[list[int], bool]:
    """Distance labels for left vertices; True iff some free item is reachable."""
    n = len(adj)
    inf = n + 1
    dist = [inf] * n
    queue: deque[int] = deque()
    for i in range(n):
        if match_l[i] == UNMATCHED:
            dist[i] = 0
            queue.append(i)
    found = inf
    while queue:
        i = queue.popleft()
        if dist[i] >= found:
            continue
        for j in adj[i]:
            owner = match_r[j]
            if owner == UNMATCHED:
                found = min(found, dist[i] + 1)
            elif dist[owner] == inf:
                dist[owner] = dist[i] + 1
                queue.append(owner)
    return dist, found != inf


def _dfs_augment(i: int, adj, match_l, match_r, dist) -> bool:
    for j in adj[i]:
        owner = match_r[j]
        if owner == UNMATCHED or (dist[owner] == dist[i] + 1 and _dfs_augment(owner, adj, match_l, match_r, dist)):
            match_l[i] = j
            match_r[j] = i
            return True
    dist[i] = len(adj) + 1
    return False


def max_matching(inst: MatchingInstance) -> Matching:
    """Maximum-cardinality matching, player i -> item or None."""
    n = inst.n
    adj = [sorted(s) for s in inst.neighbor_sets]
    match_l = [UNMATCHED] * n
    match_r = [UNMATCHED] * n
    while True:
        dist, reachable = _bfs_layers(adj, match_l, match_r)
        if not reachable:
            break
        for i in range(n):
            if match_l[i] == UNMATCHED:
                _dfs_augment(i, adj, match_l, match_r, dist)
    return tuple(j if j != UNMATCHED else None for j in match_l)


def matching_size(matching: Matching) -> int:
    return sum(1 for j in matching if j is not None)


def matching_feasible(inst: MatchingInstance, matching: Matching) -> bool:
    if len(matching) != inst.n:
        return False
    used: set[int] = set()
    for i, j in enumerate(matching):
        if j is None:
            continue
        if j in used or j not in inst.neighbor_sets[i]:
            return False
        used.add(j)
    return True


@dataclass(frozen=True)
class HallCertificate:
    """A set of "high-price" items witnessing that a matching is maximum."""

    high_price_items: frozenset[int]


def verify_certificate(inst: MatchingInstance, matching: Matching, cert: HallCertificate) -> bool:
    """Check the two certificate conditions; True implies the matching is maximum.

    (1) every high-price item is allocated;
    (2) every player not holding a low-price item only wants high-price items.
    """
    if not matching_feasible(inst, matching):
        return False
    high = cert.high_price_items
    allocated = {j for j in matching if j is not None}
    if not high <= allocated:
        return False
    for i in range(inst.n):
        j = matching[i]
        holds_low = j is not None and j not in high
        if not holds_low and not inst.neighbor_sets[i] <= high:
            return False
    return True


def emit_certificate(inst: MatchingInstance, matching: Matching) -> HallCertificate | None:
    """Certificate from the alternating-BFS reachable set; None if not maximum."""
    if not matching_feasible(inst, matching):
        return None
    owner: dict[int, int] = {j: i for i, j in enumerate(matching) if j is not None}
    seen_players = [i for i in range(inst.n) if matching[i] is None]
    reached_items: set[int] = set()
    queue = deque(seen_players)
    enqueued = set(seen_players)
    while queue:
        i = queue.popleft()
        for j in sorted(inst.neighbor_sets[i]):
            if j in reached_items:
                continue
            reached_items.add(j)
            holder = owner.get(j)
            if holder is None:
                return None  # augmenting path: matching is not maximum
            if holder not in enqueued:
                enqueued.add(holder)
                queue.append(holder)
    return HallCertificate(frozenset(reached_items))


def has_augmenting_path(inst: MatchingInstance, matching: Matching) -> bool:
    """Direct alternating-path search, used for soundness cross-checks."""
    owner: dict[int, int] = {j: i for i, j in enumerate(matching) if j is not None}
    queue = deque(i for i in range(inst.n) if matching[i] is None)
    enqueued = set(queue)
    seen_items: set[int] = set()
    while queue:
        i = queue.popleft()
        for j in sorted(inst.neighbor_sets[i]):
            if j in seen_items:
                continue
            seen_items.add(j)
            holder = owner.get(j)
            if holder is None:
                return True
            if holder not in enqueued:
                enqueued.add(holder)
                queue.append(holder)
    return False
