"""Green/red list watermark for pure game-playing strategies.

The partition recipe implemented here is a wire format: detectors replay it
from public data, so any change to the byte layout, hash, generator, shuffle,
rounding or tie-break breaks detection of previously generated games.
See ``docs/PARTITION-FORMAT.md``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

MASK64 = (1 << 64) - 1

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
KEY_SEPARATOR = b"\x1f"


class ContractError(ValueError):
    """Raised when a caller violates an input contract."""


@dataclass(frozen=True)
class WatermarkParams:
    gamma: float = 0.25
    delta: float = 0.5
    key: bytes = b""
    min_branching: int = 2

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ContractError(f"gamma must lie in (0, 1), got {self.gamma}")
        if not 0.0 <= self.delta < math.inf:
            raise ContractError(f"delta must be >= 0, got {self.delta}")
        if self.min_branching < 2:
            raise ContractError(f"min_branching must be >= 2, got {self.min_branching}")
        if isinstance(self.key, str):
            object.__setattr__(self, "key", self.key.encode("utf-8"))

    @property
    def red_penalty(self) -> float:
        """Amount subtracted from every red-list value."""
        return self.gamma * self.delta / (1.0 - self.gamma)

    @property
    def regret_cap(self) -> float:
        """Largest utility a single watermarked decision can give up."""
        return self.delta * (1.0 + self.gamma / (1.0 - self.gamma))


# -- hashing and pseudo-randomness -------------------------------------------


def fnv1a64(data: bytes) -> int:
    h = FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * FNV_PRIME) & MASK64
    return h


def seed_from_observation(obs: bytes, key: bytes = b"") -> int:
    """Seed for the partition generator: FNV-1a-64 of ``key || 0x1F || obs``."""
    if not obs:
        raise ContractError("observation must be non-empty")
    return fnv1a64(bytes(key) + KEY_SEPARATOR + bytes(obs))


class SplitMix64:
    """SplitMix64 generator (Steele, Lea, Flood 2014)."""

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def below(self, bound: int) -> int:
        """Uniform integer in ``[0, bound)`` by rejection (no modulo bias)."""
        if bound <= 0:
            raise ContractError("bound must be positive")
        limit = (1 << 64) - ((1 << 64) % bound)
        while True:
            r = self.next()
            if r < limit:
                return r % bound


def fisher_yates(items: Sequence, rng: SplitMix64) -> list:
    out = list(items)
    for i in range(len(out) - 1, 0, -1):
        j = rng.below(i + 1)
        out[i], out[j] = out[j], out[i]
    return out


# -- partitioning --------------------------------------------------------------


def canonical_key(action: str) -> bytes:
    return action.encode("utf-8")


def canonical_order(actions: Iterable[str]) -> list[str]:
    return sorted(actions, key=canonical_key)


def green_size(n_actions: int, gamma: float) -> int:
    """``clamp(round_half_up(gamma * n), 1, n - 1)``."""
    g = math.floor(gamma * n_actions + 0.5)
    return min(max(g, 1), n_actions - 1)


@dataclass(frozen=True)
class Partition:
    green: tuple[str, ...]
    red: tuple[str, ...]
    seed: int
    _green_set: frozenset = field(default=frozenset(), repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_green_set", frozenset(self.green))

    def is_green(self, action: str) -> bool:
        return action in self._green_set

    def __contains__(self, action: str) -> bool:
        return action in self._green_set or action in self.red


def check_canonical(actions: Sequence[str]) -> None:
    keys = [canonical_key(a) for a in actions]
    for prev, cur in zip(keys, keys[1:]):
        if not prev < cur:
            raise ContractError(
                "actions must be strictly sorted by canonical byte encoding "
                f"(offending pair {prev!r}, {cur!r})"
            )


def partition_actions(actions: Sequence[str], seed: int, gamma: float) -> Partition | None:
    """Split a canonically ordered action list into green and red lists.

    Returns None when there are fewer than two actions (nothing to partition).
    Both lists keep canonical order.
    """
    if len(actions) < 2:
        return None
    check_canonical(actions)
    shuffled = fisher_yates(actions, SplitMix64(seed))
    green = set(shuffled[: green_size(len(actions), gamma)])
    return Partition(
        green=tuple(a for a in actions if a in green),
        red=tuple(a for a in actions if a not in green),
        seed=seed,
    )


def partition_for(obs: bytes, actions: Sequence[str], params: WatermarkParams) -> Partition | None:
    """Partition used at a decision point, or None if it is passed through."""
    if len(actions) < params.min_branching:
        return None
    return partition_actions(actions, seed_from_observation(obs, params.key), params.gamma)


# -- value adjustment and action choice ---------------------------------------


def adjustment(is_green: bool, params: WatermarkParams) -> float:
    return params.delta if is_green else -params.red_penalty


def adjust_values(u: Sequence[float], actions: Sequence[str], part: Partition,
                  params: WatermarkParams) -> list[float]:
    if len(u) != len(actions):
        raise ContractError(f"{len(u)} values for {len(actions)} actions")
    return [x + adjustment(part.is_green(a), params) for x, a in zip(u, actions)]


def argmax_green_first(values: Sequence[float], actions: Sequence[str],
                       part: Partition | None) -> int:
    """Index of the best value; ties go to green actions, then canonical order."""
    best = None
    best_key = None
    for i, (v, a) in enumerate(zip(values, actions)):
        key = (v, part is not None and part.is_green(a))
        if best is None or key > best_key:
            best, best_key = i, key
    return best


@dataclass(frozen=True)
class Decision:
    action: str
    watermarked: bool
    partition: Partition | None
    green: bool | None
    values: tuple[float, ...]
    adjusted: tuple[float, ...]


def next_action(obs: bytes, actions: Sequence[str], values: Sequence[float],
                params: WatermarkParams) -> Decision:
    """Pick the action maximizing watermark-adjusted value.

    ``actions`` must be canonically ordered and ``values`` aligned with them.
    Decision points with fewer than ``params.min_branching`` actions return the
    plain argmax and are flagged unwatermarked.
    """
    if not actions:
        raise ContractError("no legal actions")
    if len(values) != len(actions):
        raise ContractError(f"{len(values)} values for {len(actions)} actions")
    part = partition_for(obs, actions, params)
    if part is None:
        i = argmax_green_first(values, actions, None)
        return Decision(actions[i], False, None, None, tuple(values), tuple(values))
    v = adjust_values(values, actions, part, params)
    i = argmax_green_first(v, actions, part)
    return Decision(actions[i], True, part, part.is_green(actions[i]), tuple(values), tuple(v))


def prefix_adjustment(steps: Iterable[tuple[bytes, Sequence[str], str]],
                      params: WatermarkParams) -> float:
    """Sum of watermark adjustments over ``(observation, legal actions, action)`` steps.

    Steps below ``min_branching`` contribute nothing.
    """
    total = 0.0
    for obs, actions, action in steps:
        part = partition_for(obs, actions, params)
        if part is None:
            continue
        if action not in part:
            raise ContractError(f"action {action!r} is not legal at this step")
        total += adjustment(part.is_green(action), params)
    return total


# -- watermarked expected utility ---------------------------------------------


def watermarked_expected_utility(game, trajectory: Sequence[tuple], h, oracle_value: float,
                                 params: WatermarkParams) -> float:
    """Expected utility at ``h`` with every prefix decision's adjustment applied.

    ``trajectory`` lists the ``(prefix history, action)`` steps leading from the
    initial history to ``h``; ``oracle_value`` is the underlying model's value
    at ``h``.  Every decision prefix with a partition is adjusted, whoever moved
    there; chance prefixes are not (no partition is ever drawn at them).
    """
    expected = game.initial()
    steps = []
    for prefix, action in trajectory:
        if prefix != expected:
            raise ContractError(f"broken prefix chain at {prefix!r}")
        actions = game.legal_actions(prefix)
        if action not in actions:
            raise ContractError(f"action {action!r} is not legal at {prefix!r}")
        if game.player_to_move(prefix) >= 0:
            steps.append((game.observation(prefix), actions, action))
        expected = game.apply(prefix, action)
    if expected != h:
        raise ContractError(f"trajectory ends at {expected!r}, not {h!r}")
    v = oracle_value
    for obs, actions, action in steps:
        part = partition_for(obs, actions, params)
        if part is not None:
            v += adjustment(part.is_green(action), params)
    return v


def trajectory_to(game, h) -> list[tuple]:
    """The ``(prefix, action)`` chain for an action-tuple history."""
    steps = []
    prefix = game.initial()
    for a in h:
        steps.append((prefix, a))
        prefix = game.apply(prefix, a)
    return steps
