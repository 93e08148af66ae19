"""Wrappers that lift the t-restricted protocols to general XOS bidders.

Two loss-bounded collapses are composed:

* level projection: every clause is binarized at a level mu, keeping exactly
  the items valued in [mu, 2mu); each player contributes one projection per
  level on his per-player grid of halving powers of two;
* size binning: the bundle-size parameter t sweeps the powers of two, and the
  best allocation over all (mu, t) runs (measured by true XOS welfare) wins.

`best_t_bin` is the constructive side of the size-binning argument, used by
generators and tests.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Mapping, Sequence

from .ca_protocols import (
    DEFAULT_EXACT_CAP,
    k_round_t_restricted,
    simultaneous_t_restricted,
)
from .core import (
    Allocation,
    BinaryXOSValuation,
    ConfigurationError,
    Transcript,
    XOSValuation,
    welfare,
)


def floor_pow2(x: Fraction) -> Fraction:
    """Largest integer power of two (possibly negative exponent) at most x."""
    if x <= 0:
        raise ConfigurationError("floor_pow2 needs a positive value")
    p = Fraction(1)
    while p * 2 <= x:
        p *= 2
    while p > x:
        p /= 2
    return p


def mu_projection(v: XOSValuation, mu: Fraction) -> BinaryXOSValuation:
    """Binarize every clause at level mu, keeping items valued in [mu, 2mu).

    Clauses that project to the empty set are dropped (they are equivalent to
    a zero clause).
    """
    if mu <= 0:
        raise ConfigurationError("mu must be positive")
    sets = []
    for clause in v.clauses:
        projected = frozenset(j for j, val in clause.values.items() if mu <= val < 2 * mu)
        if projected:
            sets.append(projected)
    return BinaryXOSValuation(Fraction(mu), tuple(sets), v.m)


def projection_levels(v: XOSValuation) -> tuple[Fraction, ...]:
    """Per-player level grid: MAX down to the first power-of-two step
    at or below MAX/(2m), where MAX is v(M) rounded down to a power of two.

    Empty for the zero valuation.
    """
    total = v.value(range(v.m))
    if total <= 0:
        return ()
    top = floor_pow2(total)
    steps = (2 * v.m - 1).bit_length()  # ceil(log2(2m))
    return tuple(top / (1 << j) for j in range(steps + 1))


def _t_grid(m: int, inner: str, k: int) -> list[int]:
    # smallest t keeping the inner bundle size >= 1; powers of two up to m
    low = 2 if inner == "simul" else 2 * k
    grid = []
    t = 1
    while t <= m:
        if t >= low:
            grid.append(t)
        t *= 2
    return grid


def run_xos_pipeline(
    players: Sequence[XOSValuation],
    inner: str = "simul",
    k: int = 1,
    mode: str = "greedy",
    seed: int = 0,
    exact_cap: int = DEFAULT_EXACT_CAP,
) -> tuple[Allocation, Transcript, dict]:
    """Run the inner protocol once per (level, t) grid cell and keep the
    allocation with the best true XOS welfare (ties: smaller t, then smaller
    level).

    Players whose grid omits a level participate in that cell with the zero
    valuation; players with zero total value are skipped entirely. Messages
    of all cells are merged round by round into one transcript, each tagged
    with its grid coordinates.
    """
    if inner not in ("simul", "k-round"):
        raise ConfigurationError(f"unknown inner algorithm {inner!r}")
    if not players:
        raise ConfigurationError("empty instance")
    n = len(players)
    m = players[0].m
    levels = [projection_levels(v) for v in players]
    all_levels = sorted({mu for lv in levels for mu in lv})
    t_grid = _t_grid(m, inner, k)

    runs = []
    best: tuple[Allocation, Fraction, Fraction, int] | None = None
    merged_rounds: list[list[tuple[int, dict]]] = []
    for t in t_grid:
        for mu in all_levels:
            cell_players = [
                mu_projection(players[i], mu)
                if mu in levels[i]
                else BinaryXOSValuation(mu, (), m)
                for i in range(n)
            ]
            if inner == "simul":
                alloc, tr = simultaneous_t_restricted(
                    cell_players, t, alloc_mode=mode, exact_cap=exact_cap
                )
            else:
                alloc, tr = k_round_t_restricted(cell_players, t, k, seed=seed)
            value = welfare(alloc, players)
            runs.append({"mu": str(mu), "t": t, "welfare": str(value)})
            if best is None or value > best[1]:
                best = (alloc, value, mu, t)
            while len(merged_rounds) < len(tr.rounds):
                merged_rounds.append([])
            for r, rnd in enumerate(tr.rounds):
                for player, payload, _bits in rnd:
                    merged_rounds[r].append(
                        (player, {**payload, "mu": str(mu), "t": t})
                    )

    if best is None:
        alloc = Allocation.empty(n)
        transcript = Transcript.from_rounds(m, [[]], {"encoding": "canonical-v1"})
        diagnostics = {"runs": [], "chosen_mu": None, "chosen_t": None, "welfare": "0"}
        return alloc, transcript, diagnostics

    alloc, value, mu, t = best
    diagnostics = {
        "runs": runs,
        "chosen_mu": str(mu),
        "chosen_t": t,
        "welfare": str(value),
        "encoding": "canonical-v1",
    }
    transcript = Transcript.from_rounds(
        m, merged_rounds, {"inner": inner, "k": k, "encoding": "canonical-v1"}
    )
    return alloc, transcript, diagnostics


# ---------------------------------------------------------------------------
# Size binning


def _maximizing_clause_weights(v, bundle: frozenset[int]) -> Mapping[int, Fraction]:
    """Per-item values under a clause attaining v(bundle) (lowest clause index)."""
    if isinstance(v, BinaryXOSValuation):
        if not v.clause_sets:
            return {}
        best = max(v.clause_sets, key=lambda t: len(t & bundle))
        # max() keeps the first maximizer, i.e. the lowest clause index
        return {j: v.mu for j in best}
    _, idx = v.maximizing_clause(bundle)
    return v.clauses[idx].values


def best_t_bin(
    optimal: Allocation, valuations: Sequence
) -> tuple[int, Allocation]:
    """Pick the power-of-two size bin holding the most welfare and truncate
    its bundles to exactly that size.

    Player i lands in bin r when 2r > |O_i| >= r. Truncation keeps the t
    items with the highest value under the bundle's maximizing clause (ties:
    lowest index), so each truncated bundle keeps at least half its value.
    """
    n = len(optimal.bundles)
    bin_value: dict[int, Fraction] = {}
    for i in range(n):
        size = len(optimal.bundles[i])
        if size == 0:
            continue
        r = 1 << (size.bit_length() - 1)
        bin_value[r] = bin_value.get(r, Fraction(0)) + valuations[i].value(optimal.bundles[i])
    if not bin_value:
        return 1, Allocation.empty(n)
    t = min(
        (r for r in bin_value),
        key=lambda r: (-bin_value[r], r),
    )
    truncated = []
    for i in range(n):
        bundle = optimal.bundles[i]
        size = len(bundle)
        if size and t <= size < 2 * t:
            weights = _maximizing_clause_weights(valuations[i], bundle)
            keep = sorted(bundle, key=lambda j: (-weights.get(j, Fraction(0)), j))[:t]
            truncated.append(frozenset(keep))
        else:
            truncated.append(frozenset())
    return t, Allocation(tuple(truncated))
