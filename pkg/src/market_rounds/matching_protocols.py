"""Round-limited matching protocols over a shared blackboard.

Four protocols, each returning (matching, Transcript):

* one-round deterministic reporting of truncated neighbor lists;
* the randomized ascending auction (players repeatedly bid a random
  minimum-price item they want, prices rise in exact delta steps);
* the k-round random-proposal protocol;
* the exact two-phase protocol: auction with delta ~ 1/sqrt(n), then
  augmenting paths found by blackboard BFS until none remain.

Randomness is drawn from per-(seed, player, round) streams so messages within
a round are order-independent and runs replay exactly.
"""
from __future__ import annotations

import math
import random
from collections import deque
from fractions import Fraction

from .core import (
    ConfigurationError,
    MatchingInstance,
    PriceVector,
    Rational,
    Transcript,
    index_bits,
)
from .matching_oracle import Matching, max_matching


def _player_rng(seed: int, player: int, rnd: int) -> random.Random:
    # string seeding hashes via sha512, deterministic across processes
    return random.Random(f"{seed}:{player}:{rnd}")


def demand_set(neighbor_set: frozenset[int], prices: PriceVector) -> frozenset[int]:
    """Minimum-price items below price 1 within the player's desired set."""
    best: Fraction | None = None
    out: list[int] = []
    for j in neighbor_set:
        p = prices.price(j)
        if p >= 1:
            continue
        if best is None or p < best:
            best = p
            out = [j]
        elif p == best:
            out.append(j)
    return frozenset(out)


# ---------------------------------------------------------------------------
# One-round deterministic protocol


def simultaneous_deterministic_matching(
    inst: MatchingInstance, l: int
) -> tuple[Matching, Transcript]:
    """Each player reports his lowest-index neighbors, as many as fit in l bits.

    The referee outputs a maximum matching of the reported subgraph.
    """
    n = inst.n
    bits_per_index = index_bits(n)
    if bits_per_index == 0:
        budget = n  # single-item universe: indices are free
    else:
        if l < bits_per_index:
            raise ConfigurationError(
                f"budget l={l} cannot encode one index ({bits_per_index} bits)"
            )
        budget = l // bits_per_index
    reported = tuple(
        frozenset(sorted(s)[: min(len(s), budget)]) for s in inst.neighbor_sets
    )
    rnd = [
        (i, {"item": j})
        for i in range(n)
        for j in sorted(reported[i])
    ]
    transcript = Transcript.from_rounds(n, [rnd], {"reported_per_player": budget})
    matching = max_matching(MatchingInstance(n, reported))
    return matching, transcript


# ---------------------------------------------------------------------------
# Randomized ascending auction


def default_auction_rounds(n: int, delta: Fraction, extended: bool = False) -> int:
    factor = 4 if extended else 2
    return max(1, math.ceil(factor * math.log2(n) / (delta * delta))) if n > 1 else 1


def _check_delta(delta: Rational) -> Fraction:
    d = Fraction(delta)
    if not 0 < d < 1:
        raise ConfigurationError("delta must lie in (0, 1)")
    if d.numerator != 1:
        raise ConfigurationError("delta must be a unit fraction 1/q so prices reach exactly 1")
    return d


def auction_matching(
    inst: MatchingInstance,
    delta: Rational,
    max_rounds: int | None = None,
    seed: int = 0,
    extended_budget: bool = False,
    keep_trace: bool = False,
) -> tuple[Matching, Transcript, int]:
    """Ascending auction: uncommitted players bid a random demanded item each round.

    The first reporter of an item unclaimed in the current round wins it, its
    price rises by delta, and any previous holder is displaced. Stops at the
    round budget or once every player is committed or has empty demand.
    Returns (matching, transcript, number of satisfied players).
    """
    d = _check_delta(delta)
    n = inst.n
    q = int(1 / d)
    budget = max_rounds if max_rounds is not None else default_auction_rounds(n, d, extended_budget)
    if budget < 1:
        raise ConfigurationError("round budget must be at least 1")

    increments = [0] * n
    item_of: list[int | None] = [None] * n  # player -> committed item
    owner: list[int | None] = [None] * n  # item -> committing player
    rounds: list[list[tuple[int, dict]]] = []
    trace: list[dict] = []
    stop = "round-budget"

    for r in range(1, budget + 1):
        active = [i for i in range(n) if item_of[i] is None]
        if not active:
            stop = "all-satisfied"
            break
        prices = PriceVector(d, tuple(increments))
        proposals: list[tuple[int, int]] = []
        entries: list[tuple[int, dict]] = []
        for i in active:
            demand = demand_set(inst.neighbor_sets[i], prices)
            if not demand:
                continue
            j = _player_rng(seed, i, r).choice(sorted(demand))
            proposals.append((i, j))
            entries.append((i, {"item": j}))
        if not proposals:
            stop = "all-satisfied"
            break
        claimed: set[int] = set()
        for i, j in proposals:  # ascending player id: active is sorted
            if j in claimed:
                continue
            claimed.add(j)
            previous = owner[j]
            if previous is not None:
                item_of[previous] = None
            owner[j] = i
            item_of[i] = j
            increments[j] += 1
            assert increments[j] <= q
        rounds.append(entries)
        if keep_trace:
            trace.append(
                {
                    "round": r,
                    "increments": tuple(increments),
                    "committed": tuple(sorted(j for j in item_of if j is not None)),
                }
            )

    final_prices = PriceVector(d, tuple(increments))
    satisfied = sum(
        1
        for i in range(n)
        if item_of[i] is not None or not demand_set(inst.neighbor_sets[i], final_prices)
    )
    meta = {
        "stop": stop,
        "delta": f"{d.numerator}/{d.denominator}",
        "round_budget": budget,
        "satisfied": satisfied,
        "final_increments": tuple(increments),
    }
    if keep_trace:
        meta["trace"] = trace
    transcript = Transcript.from_rounds(n, rounds, meta)
    return tuple(item_of), transcript, satisfied


# ---------------------------------------------------------------------------
# k-round random-proposal protocol


def k_round_matching(
    inst: MatchingInstance, k: int, seed: int = 0, keep_trace: bool = False
) -> tuple[Matching, Transcript]:
    """k rounds; unmatched players propose a random still-available neighbor."""
    n = inst.n
    if k < 1:
        raise ConfigurationError("k must be at least 1")
    if n > 1 and k > math.floor(math.log2(n)):
        raise ConfigurationError(f"k={k} exceeds log2(n) for n={n}")
    matched: list[int | None] = [None] * n
    available = set(range(n))
    rounds: list[list[tuple[int, dict]]] = []
    trace: list[dict] = []
    for r in range(1, k + 1):
        if keep_trace:
            trace.append(
                {
                    "round": r,
                    "unmatched_players": [i for i in range(n) if matched[i] is None],
                    "available_items": sorted(available),
                }
            )
        proposals: list[tuple[int, int]] = []
        entries: list[tuple[int, dict]] = []
        for i in range(n):
            if matched[i] is not None:
                continue
            candidates = sorted(inst.neighbor_sets[i] & available)
            if not candidates:
                continue
            j = _player_rng(seed, i, r).choice(candidates)
            proposals.append((i, j))
            entries.append((i, {"item": j}))
        taken: set[int] = set()
        for i, j in proposals:  # ascending player id
            if j in taken:
                continue
            taken.add(j)
            matched[i] = j
        available -= taken
        rounds.append(entries)
    meta: dict = {"k": k}
    if keep_trace:
        meta["trace"] = trace
    transcript = Transcript.from_rounds(n, rounds, meta)
    return tuple(matched), transcript


# ---------------------------------------------------------------------------
# Exact two-phase protocol


def exact_matching_protocol(
    inst: MatchingInstance, seed: int = 0
) -> tuple[Matching, Transcript]:
    """Auction phase with delta = 1/ceil(sqrt(n)), then BFS augmenting paths.

    Phase 2 treats the blackboard as the BFS queue: every item index is
    written at most once per search, so each augmentation costs O(n log n)
    bits. The output is a maximum matching.
    """
    n = inst.n
    q = max(2, math.isqrt(n) + (0 if math.isqrt(n) ** 2 == n else 1))
    matching, phase1, _ = auction_matching(inst, Fraction(1, q), seed=seed)

    matched: list[int | None] = list(matching)
    owner: dict[int, int] = {j: i for i, j in enumerate(matched) if j is not None}
    rounds: list[list[tuple[int, dict]]] = []
    augmentations = 0
    while True:
        entries, path_end = _augmenting_bfs(inst, matched, owner)
        if entries:
            rounds.append(entries)
        if path_end is None:
            break
        _apply_augmentation(matched, owner, path_end)
        augmentations += 1

    meta = {
        "phase1_rounds": phase1.total_rounds,
        "phase1_stop": phase1.meta.get("stop"),
        "augmentations": augmentations,
    }
    phase2 = Transcript.from_rounds(n, rounds)
    transcript = Transcript(n, phase1.rounds + phase2.rounds, meta)
    return tuple(matched), transcript


def _augmenting_bfs(inst, matched, owner):
    """One blackboard BFS from the free players; lowest ids expand first.

    Returns (message entries, (free item, writer chain)) where the chain is
    encoded via parent pointers stored in the entries' traversal order.
    """
    free = [i for i in range(inst.n) if matched[i] is None]
    queue = deque(free)
    enqueued = set(free)
    parent_item: dict[int, int] = {}  # item -> player who wrote it
    entries: list[tuple[int, dict]] = []
    while queue:
        i = queue.popleft()
        for j in sorted(inst.neighbor_sets[i]):
            if j in parent_item:
                continue
            parent_item[j] = i
            entries.append((i, {"item": j}))
            holder = owner.get(j)
            if holder is None:
                return entries, (j, parent_item)
            if holder not in enqueued:
                enqueued.add(holder)
                queue.append(holder)
    return entries, None


def _apply_augmentation(matched, owner, path_end) -> None:
    j, parent_item = path_end
    item: int | None = j
    while item is not None:
        player = parent_item[item]
        previous = matched[player]
        matched[player] = item
        owner[item] = player
        item = previous
