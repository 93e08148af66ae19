"""Shared domain types: instances, valuations, allocations, prices, transcripts.

All value arithmetic is exact (`fractions.Fraction`); no floats enter welfare
or price computations, so ties and unit-increment bookkeeping are reproducible
bit for bit. Every type here is an immutable value after construction.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

Rational = Union[int, Fraction]


class ConfigurationError(ValueError):
    """Bad protocol or generator parameters."""


class DomainError(ValueError):
    """Item or player index outside the declared universe."""


class InfeasibleAllocationError(ValueError):
    """Bundles overlap or leave the item universe."""


class ProxyCapExceededError(RuntimeError):
    """Exact proxy optimization refused; caller should fall back to greedy."""


def _as_fraction(x: Rational) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    raise TypeError(f"expected int or Fraction, got {type(x).__name__}")


# ---------------------------------------------------------------------------
# Instances and valuations


@dataclass(frozen=True)
class MatchingInstance:
    """n unit-demand players over n items; player i wants any item in neighbor_sets[i]."""

    n: int
    neighbor_sets: tuple[frozenset[int], ...]

    def __post_init__(self) -> None:
        if self.n <= 0:
            raise ConfigurationError("n must be positive")
        sets = tuple(frozenset(s) for s in self.neighbor_sets)
        if len(sets) != self.n:
            raise ConfigurationError("need one neighbor set per player")
        for s in sets:
            for j in s:
                if not 0 <= j < self.n:
                    raise DomainError(f"item {j} outside [0, {self.n})")
        object.__setattr__(self, "neighbor_sets", sets)


@dataclass(frozen=True)
class AdditiveClause:
    """One additive component: item index -> strictly positive value (zeros not stored)."""

    values: Mapping[int, Fraction]

    def __post_init__(self) -> None:
        cleaned = {}
        for j, v in self.values.items():
            fv = _as_fraction(v)
            if fv < 0:
                raise DomainError(f"negative clause value for item {j}")
            if fv > 0:
                cleaned[int(j)] = fv
        object.__setattr__(self, "values", cleaned)

    def value(self, items: Iterable[int]) -> Fraction:
        return sum((self.values.get(j, Fraction(0)) for j in items), Fraction(0))

    def items(self) -> frozenset[int]:
        return frozenset(self.values)


@dataclass(frozen=True)
class XOSValuation:
    """Max over additive clauses; monotone and subadditive by construction."""

    clauses: tuple[AdditiveClause, ...]
    m: int

    def __post_init__(self) -> None:
        clauses = tuple(self.clauses)
        if not clauses:
            raise ConfigurationError("XOS valuation needs at least one clause")
        for c in clauses:
            for j in c.values:
                if not 0 <= j < self.m:
                    raise DomainError(f"clause item {j} outside [0, {self.m})")
        object.__setattr__(self, "clauses", clauses)

    def check_bundle(self, items: Iterable[int]) -> frozenset[int]:
        bundle = frozenset(items)
        for j in bundle:
            if not 0 <= j < self.m:
                raise DomainError(f"item {j} outside [0, {self.m})")
        return bundle

    def value(self, items: Iterable[int]) -> Fraction:
        bundle = self.check_bundle(items)
        return max(c.value(bundle) for c in self.clauses)

    def maximizing_clause(self, items: Iterable[int]) -> tuple[Fraction, int]:
        """(value, index of the first clause attaining it)."""
        bundle = self.check_bundle(items)
        best = Fraction(0)
        best_idx = 0
        for idx, c in enumerate(self.clauses):
            v = c.value(bundle)
            if v > best:
                best, best_idx = v, idx
        return best, best_idx


@dataclass(frozen=True)
class BinaryXOSValuation:
    """XOS valuation whose clause values are all one level mu: v(S) = mu * max |T cap S|.

    An empty clause list encodes the zero valuation.
    """

    mu: Fraction
    clause_sets: tuple[frozenset[int], ...]
    m: int

    def __post_init__(self) -> None:
        mu = _as_fraction(self.mu)
        if mu <= 0:
            raise ConfigurationError("mu must be positive")
        sets = tuple(frozenset(s) for s in self.clause_sets)
        for t in sets:
            for j in t:
                if not 0 <= j < self.m:
                    raise DomainError(f"clause item {j} outside [0, {self.m})")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "clause_sets", sets)

    def check_bundle(self, items: Iterable[int]) -> frozenset[int]:
        bundle = frozenset(items)
        for j in bundle:
            if not 0 <= j < self.m:
                raise DomainError(f"item {j} outside [0, {self.m})")
        return bundle

    def value(self, items: Iterable[int]) -> Fraction:
        bundle = self.check_bundle(items)
        if not self.clause_sets:
            return Fraction(0)
        return self.mu * max(len(t & bundle) for t in self.clause_sets)

    def to_xos(self) -> XOSValuation:
        clauses = tuple(
            AdditiveClause({j: self.mu for j in t}) for t in self.clause_sets if t
        )
        if not clauses:
            clauses = (AdditiveClause({}),)
        return XOSValuation(clauses, self.m)


Valuation = Union[XOSValuation, BinaryXOSValuation]


@dataclass(frozen=True)
class Allocation:
    """Pairwise-disjoint bundles, one per player (empty bundles allowed)."""

    bundles: tuple[frozenset[int], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "bundles", tuple(frozenset(b) for b in self.bundles))

    @staticmethod
    def empty(n: int) -> "Allocation":
        return Allocation(tuple(frozenset() for _ in range(n)))


def check_feasible(alloc: Allocation, m: int) -> bool:
    """True iff bundles are pairwise disjoint and every index lies in [0, m)."""
    seen: set[int] = set()
    for b in alloc.bundles:
        for j in b:
            if not 0 <= j < m or j in seen:
                return False
            seen.add(j)
    return True


def evaluate_xos(v: Valuation, items: Iterable[int]) -> Fraction:
    """v(S) = max over clauses of the clause's sum on S."""
    return v.value(items)


def welfare(alloc: Allocation, valuations: Sequence[Valuation]) -> Fraction:
    if len(alloc.bundles) != len(valuations):
        raise InfeasibleAllocationError("allocation / valuation count mismatch")
    m = valuations[0].m if valuations else 0
    if not check_feasible(alloc, m):
        raise InfeasibleAllocationError("bundles overlap or leave the universe")
    return sum(
        (v.value(b) for v, b in zip(valuations, alloc.bundles)), Fraction(0)
    )


# ---------------------------------------------------------------------------
# Prices


@dataclass(frozen=True)
class PriceVector:
    """Per-item prices stored as integer counts of the increment delta.

    Prices therefore stay exact multiples of delta and never exceed 1.
    """

    delta: Fraction
    increments: tuple[int, ...]

    def __post_init__(self) -> None:
        delta = _as_fraction(self.delta)
        if not 0 < delta <= 1:
            raise ConfigurationError("delta must lie in (0, 1]")
        cap = 1 / delta
        for c in self.increments:
            if c < 0 or c > cap:
                raise ConfigurationError("price outside [0, 1]")
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "increments", tuple(self.increments))

    @staticmethod
    def zeros(m: int, delta: Rational) -> "PriceVector":
        return PriceVector(_as_fraction(delta), tuple(0 for _ in range(m)))

    def price(self, j: int) -> Fraction:
        return self.increments[j] * self.delta

    def prices(self) -> tuple[Fraction, ...]:
        return tuple(c * self.delta for c in self.increments)


# ---------------------------------------------------------------------------
# Communication ledger
#
# The canonical bit accounting (the protocols' analyses count bits only
# abstractly, so one fixed encoding is declared here and used everywhere):
#   * an item index out of a universe of u items costs ceil(log2 u) bits;
#   * a bundle costs |B| * ceil(log2 u) plus a length prefix of
#     ceil(log2 (u+1)) bits;
#   * a list of bundles costs the sum of its bundle costs plus one more
#     length prefix;
#   * a grid header (the "mu"/"t" coordinates a pipeline message is tagged
#     with) costs one length prefix.


def index_bits(universe: int) -> int:
    """ceil(log2 universe): bits to name one of `universe` items (0 when universe is 1)."""
    if universe < 1:
        raise ConfigurationError("universe must have at least one element")
    return (universe - 1).bit_length()


def length_prefix_bits(universe: int) -> int:
    """ceil(log2 (universe+1)): bits for a count in [0, universe]."""
    if universe < 1:
        raise ConfigurationError("universe must have at least one element")
    return universe.bit_length()


def payload_bits(payload: Mapping[str, object], universe: int) -> int:
    """Recompute the canonical bit cost of a message payload."""
    if "item" in payload:
        return index_bits(universe)
    if "bundle" in payload:
        bundle = payload["bundle"]
        return len(bundle) * index_bits(universe) + length_prefix_bits(universe)
    if "bundles" in payload:
        bundles = payload["bundles"]
        bits = length_prefix_bits(universe)
        for b in bundles:
            bits += len(b) * index_bits(universe) + length_prefix_bits(universe)
        if "mu" in payload or "t" in payload:
            bits += length_prefix_bits(universe)
        return bits
    raise DomainError(f"unknown payload shape: {sorted(payload)}")


MessageEntry = tuple[int, dict, int]  # (player id, payload, bit count)


@dataclass(frozen=True)
class Transcript:
    """Per-round message log of a protocol run, with exact bit counts.

    `meta` carries protocol diagnostics (stop reason, phase boundaries,
    optional traces); it is not part of the communication cost.
    """

    universe_size: int
    rounds: tuple[tuple[MessageEntry, ...], ...]
    meta: dict = field(default_factory=dict)

    @staticmethod
    def from_rounds(
        universe_size: int,
        rounds: Iterable[Iterable[tuple[int, Mapping[str, object]]]],
        meta: dict | None = None,
    ) -> "Transcript":
        """Build a transcript, computing each entry's bits from its payload."""
        frozen = tuple(
            tuple(
                (player, dict(payload), payload_bits(payload, universe_size))
                for player, payload in rnd
            )
            for rnd in rounds
        )
        return Transcript(universe_size, frozen, meta or {})

    @property
    def total_rounds(self) -> int:
        return len(self.rounds)

    @property
    def total_bits(self) -> int:
        return sum(bits for rnd in self.rounds for _, _, bits in rnd)

    def recomputed_bits(self) -> int:
        """Re-derive the total from payloads; must equal total_bits."""
        return sum(
            payload_bits(payload, self.universe_size)
            for rnd in self.rounds
            for _, payload, _ in rnd
        )

    def per_round_bits(self) -> tuple[int, ...]:
        return tuple(sum(bits for _, _, bits in rnd) for rnd in self.rounds)

    def per_player_bits(self) -> dict[int, int]:
        totals: dict[int, int] = {}
        for rnd in self.rounds:
            for player, _, bits in rnd:
                totals[player] = totals.get(player, 0) + bits
        return totals

    def max_player_bits(self) -> int:
        per = self.per_player_bits()
        return max(per.values()) if per else 0

    def to_json(self) -> dict:
        return {
            "universe_size": self.universe_size,
            "rounds": [
                [[player, _payload_to_json(payload), bits] for player, payload, bits in rnd]
                for rnd in self.rounds
            ],
            "total_rounds": self.total_rounds,
            "total_bits": self.total_bits,
        }


def _payload_to_json(payload: Mapping[str, object]) -> dict:
    out: dict = {}
    for key, value in payload.items():
        if key == "bundle":
            out[key] = sorted(value)
        elif key == "bundles":
            out[key] = [sorted(b) for b in value]
        else:
            out[key] = value
    return out


# ---------------------------------------------------------------------------
# JSON instance schemas
#
#   matching:  {"kind": "matching", "n": 4, "neighbors": [[0, 1], ...]}
#   xos:       {"kind": "xos", "m": 6, "players": [
#                  {"clauses": [{"0": 1, "3": "3/2"}, ...]}         # general
#                  or {"mu": 1, "clause_sets": [[0, 1], [2, 3]]}    # binary
#              ]}
# Rational values are encoded as ints when integral, else "p/q" strings.


def fraction_to_json(x: Rational) -> int | str:
    f = _as_fraction(x)
    return int(f) if f.denominator == 1 else f"{f.numerator}/{f.denominator}"


def fraction_from_json(x: object) -> Fraction:
    if isinstance(x, bool):
        raise DomainError("boolean is not a rational value")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise DomainError(f"cannot parse rational from {x!r}")


def matching_instance_to_json(inst: MatchingInstance) -> dict:
    return {
        "kind": "matching",
        "n": inst.n,
        "neighbors": [sorted(s) for s in inst.neighbor_sets],
    }


def matching_instance_from_json(obj: Mapping) -> MatchingInstance:
    if obj.get("kind") != "matching":
        raise DomainError("not a matching instance")
    return MatchingInstance(
        int(obj["n"]), tuple(frozenset(map(int, s)) for s in obj["neighbors"])
    )


def _player_to_json(v: Valuation) -> dict:
    if isinstance(v, BinaryXOSValuation):
        return {
            "mu": fraction_to_json(v.mu),
            "clause_sets": [sorted(t) for t in v.clause_sets],
        }
    return {
        "clauses": [
            {str(j): fraction_to_json(val) for j, val in sorted(c.values.items())}
            for c in v.clauses
        ]
    }


def _player_from_json(obj: Mapping, m: int) -> Valuation:
    if "clause_sets" in obj:
        return BinaryXOSValuation(
            fraction_from_json(obj["mu"]),
            tuple(frozenset(map(int, t)) for t in obj["clause_sets"]),
            m,
        )
    clauses = tuple(
        AdditiveClause({int(j): fraction_from_json(val) for j, val in c.items()})
        for c in obj["clauses"]
    )
    return XOSValuation(clauses, m)


def xos_instance_to_json(players: Sequence[Valuation]) -> dict:
    if not players:
        raise ConfigurationError("empty instance")
    return {
        "kind": "xos",
        "m": players[0].m,
        "players": [_player_to_json(v) for v in players],
    }


def xos_instance_from_json(obj: Mapping) -> tuple[Valuation, ...]:
    if obj.get("kind") != "xos":
        raise DomainError("not an XOS instance")
    m = int(obj["m"])
    return tuple(_player_from_json(p, m) for p in obj["players"])


def load_instance(path: str) -> MatchingInstance | tuple[Valuation, ...]:
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    kind = obj.get("kind")
    if kind == "matching":
        return matching_instance_from_json(obj)
    if kind == "xos":
        return xos_instance_from_json(obj)
    raise DomainError(f"unsupported instance kind: {kind!r}")
