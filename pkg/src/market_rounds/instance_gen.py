"""Seeded generators for hard-instance distributions and planted instances.

Every generator is a pure function of (parameters, seed): sampling without
replacement goes through `random.Random.sample` on sorted populations, and
string-derived seeds keep streams independent of process state, so
regeneration is bit-identical. Construction secrets (hidden sets, planted
allocations, planted welfare) travel in a PlantedMeta next to the instance;
protocols never see the meta.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction

from .core import (
    AdditiveClause,
    Allocation,
    BinaryXOSValuation,
    ConfigurationError,
    MatchingInstance,
    XOSValuation,
    fraction_from_json,
    fraction_to_json,
)


@dataclass(frozen=True)
class PlantedMeta:
    """Ground truth that travels with a generated instance."""

    allocation: Allocation | None = None
    welfare: Fraction | None = None
    hidden: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "allocation": [sorted(b) for b in self.allocation.bundles]
            if self.allocation is not None
            else None,
            "welfare": fraction_to_json(self.welfare) if self.welfare is not None else None,
            "hidden": self.hidden,
        }

    @staticmethod
    def from_json(obj: dict) -> "PlantedMeta":
        alloc = (
            Allocation(tuple(frozenset(b) for b in obj["allocation"]))
            if obj.get("allocation") is not None
            else None
        )
        w = obj.get("welfare")
        return PlantedMeta(
            alloc,
            fraction_from_json(w) if w is not None else None,
            dict(obj.get("hidden") or {}),
        )


def _rng(name: str, seed: int) -> random.Random:
    return random.Random(f"{name}:{seed}")


def _sample(rng: random.Random, population, count: int) -> list[int]:
    return rng.sample(sorted(population), count)


def matching_valuations(inst: MatchingInstance) -> tuple[XOSValuation, ...]:
    """Unit-demand XOS encoding of a matching instance: one {j: 1} clause per neighbor."""
    out = []
    for s in inst.neighbor_sets:
        clauses = tuple(AdditiveClause({j: 1}) for j in sorted(s)) or (AdditiveClause({}),)
        out.append(XOSValuation(clauses, inst.n))
    return tuple(out)


# ---------------------------------------------------------------------------
# Matching distributions


def gen_w_random(n: int, w: int, seed: int) -> tuple[MatchingInstance, PlantedMeta]:
    """All players share one random w-item neighbor set; optimum is exactly w."""
    if not 1 <= w <= n:
        raise ConfigurationError(f"w={w} outside [1, {n}]")
    rng = _rng("w-random", seed)
    shared = _sample(rng, range(n), w)
    inst = MatchingInstance(n, tuple(frozenset(shared) for _ in range(n)))
    bundles = [frozenset() for _ in range(n)]
    for idx, item in enumerate(sorted(shared)):
        bundles[idx] = frozenset({item})
    meta = PlantedMeta(Allocation(tuple(bundles)), Fraction(w), {"U": sorted(shared)})
    return inst, meta


def gen_matching_hard(n: int, seed: int) -> tuple[MatchingInstance, PlantedMeta]:
    """Correlated neighbor sets: k of a hidden 2k-set T plus one item outside T."""
    k = _exact_sqrt(n)
    if 2 * k >= n:
        # 2k = n leaves no item outside T to draw from
        raise ConfigurationError(f"n={n} too small: need 2*sqrt(n) < n")
    rng = _rng("match-hard", seed)
    t_set = _sample(rng, range(n), 2 * k)
    complement = sorted(set(range(n)) - set(t_set))
    neighbor_sets = []
    outside = []
    for _ in range(n):
        inside = _sample(rng, t_set, k)
        extra = rng.choice(complement)
        outside.append(extra)
        neighbor_sets.append(frozenset(inside) | {extra})
    inst = MatchingInstance(n, tuple(neighbor_sets))
    meta = PlantedMeta(hidden={"T": sorted(t_set), "outside": outside})
    return inst, meta


def _exact_sqrt(n: int) -> int:
    k = math.isqrt(n)
    if k * k != n:
        raise ConfigurationError(f"n={n} is not a perfect square")
    return k


def gen_hidden_item(
    n: int, k: int, seed: int
) -> tuple[frozenset[int], frozenset[int], PlantedMeta]:
    """Two-party inputs: |T| = 2k, |S| = k+1 with |S - T| = 1 (the hidden item)."""
    if 2 * k > n or k < 1:
        raise ConfigurationError(f"need 1 <= k and 2k <= n, got k={k}, n={n}")
    rng = _rng("hidden-item", seed)
    t_set = _sample(rng, range(n), 2 * k)
    inside = _sample(rng, t_set, k)
    hidden = rng.choice(sorted(set(range(n)) - set(t_set)))
    s_set = frozenset(inside) | {hidden}
    meta = PlantedMeta(hidden={"T": sorted(t_set), "S": sorted(s_set), "hidden_item": hidden})
    return frozenset(t_set), s_set, meta


def gen_uniform_matching(n: int, degree: int, seed: int) -> tuple[MatchingInstance, PlantedMeta]:
    """Independent uniform neighbor sets of a fixed size (harness plumbing)."""
    if not 0 <= degree <= n:
        raise ConfigurationError(f"degree={degree} outside [0, {n}]")
    rng = _rng("uniform-matching", seed)
    inst = MatchingInstance(
        n, tuple(frozenset(_sample(rng, range(n), degree)) for _ in range(n))
    )
    return inst, PlantedMeta()


# ---------------------------------------------------------------------------
# XOS distributions


def gen_xos_hard(
    k: int, t_sets: int, seed: int
) -> tuple[tuple[BinaryXOSValuation, ...], PlantedMeta]:
    """Center/petal family: k^3 players, k^3 + k^4 items.

    Each player's clause family holds one k-subset of his private petal and
    t_sets - 1 k-subsets of center-plus-petal; the clause order is shuffled so
    nothing in the representation marks the petal set. The planted allocation
    gives every player his petal set (first claimer wins contested items).
    """
    if k < 2:
        raise ConfigurationError("k must be at least 2")
    if t_sets < 2:
        raise ConfigurationError("t_sets must be at least 2")
    n = k**3
    m = k**3 + k**4
    rng = _rng("xos-hard", seed)
    center = _sample(rng, range(m), k**3)
    complement = sorted(set(range(m)) - set(center))
    petals: list[list[int]] = []
    specials: list[list[int]] = []
    players: list[BinaryXOSValuation] = []
    for _ in range(n):
        petal = _sample(rng, complement, k**2)
        special = _sample(rng, petal, k)
        pool = sorted(set(center) | set(petal))
        clauses = [frozenset(special)]
        for _ in range(t_sets - 1):
            clauses.append(frozenset(_sample(rng, pool, k)))
        rng.shuffle(clauses)
        petals.append(sorted(petal))
        specials.append(sorted(special))
        players.append(BinaryXOSValuation(Fraction(1), tuple(clauses), m))
    bundles = []
    claimed: set[int] = set()
    for special in specials:
        mine = frozenset(special) - claimed
        claimed |= mine
        bundles.append(mine)
    alloc = Allocation(tuple(bundles))
    meta = PlantedMeta(
        alloc,
        Fraction(len(claimed)),
        {"C": sorted(center), "P": petals, "T_i": specials},
    )
    return tuple(players), meta


def gen_set_seeking(
    k: int, t_sets: int, seed: int
) -> tuple[tuple[frozenset[int], ...], frozenset[int], PlantedMeta]:
    """Keeper family F and seeker set P over k^2 + k^3 items; one set of F
    hides inside P."""
    if k < 2 or t_sets < 2:
        raise ConfigurationError("need k >= 2 and t_sets >= 2")
    x = k**2 + k**3
    rng = _rng("set-seek", seed)
    p_set = _sample(rng, range(x), k**2)
    special = _sample(rng, p_set, k)
    family = [frozenset(special)]
    for _ in range(t_sets - 1):
        family.append(frozenset(_sample(rng, range(x), k)))
    rng.shuffle(family)
    meta = PlantedMeta(hidden={"P": sorted(p_set), "T_P": sorted(special), "x": x})
    return tuple(family), frozenset(p_set), meta


def gen_planted_t_restricted(
    n_active: int, t: int, m: int, extra_clauses: int, seed: int
) -> tuple[tuple[BinaryXOSValuation, ...], PlantedMeta]:
    """Disjoint size-t fully-valued bundles planted under decoy clauses."""
    if t < 1 or t & (t - 1):
        raise ConfigurationError(f"t={t} is not a power of two")
    if n_active * t > m:
        raise ConfigurationError(f"cannot plant {n_active} disjoint bundles of size {t} in {m} items")
    if extra_clauses < 0:
        raise ConfigurationError("extra_clauses must be nonnegative")
    rng = _rng("planted-t", seed)
    slots = _sample(rng, range(m), n_active * t)
    players = []
    bundles = []
    for i in range(n_active):
        planted = slots[i * t : (i + 1) * t]
        clauses = [frozenset(planted)]
        for _ in range(extra_clauses):
            clauses.append(frozenset(_sample(rng, range(m), t)))
        rng.shuffle(clauses)
        players.append(BinaryXOSValuation(Fraction(1), tuple(clauses), m))
        bundles.append(frozenset(planted))
    alloc = Allocation(tuple(bundles))
    meta = PlantedMeta(alloc, Fraction(n_active * t), {"planted_bundles": [sorted(b) for b in bundles]})
    return tuple(players), meta


def gen_random_xos(
    n: int, m: int, clauses: int, max_value: int, seed: int
) -> tuple[tuple[XOSValuation, ...], PlantedMeta]:
    """Small random general-XOS instances with integer values (harness plumbing)."""
    if n < 1 or m < 1 or clauses < 1 or max_value < 1:
        raise ConfigurationError("n, m, clauses, max_value must all be positive")
    rng = _rng("random-xos", seed)
    players = []
    for _ in range(n):
        player_clauses = []
        for _ in range(clauses):
            size = rng.randint(1, m)
            items = _sample(rng, range(m), size)
            player_clauses.append(
                AdditiveClause({j: Fraction(rng.randint(1, max_value)) for j in items})
            )
        players.append(XOSValuation(tuple(player_clauses), m))
    return tuple(players), PlantedMeta()
