"""Synthetic decision streams for detection, ablation and attacker experiments.

Each simulated player faces a run of independent decisions.  A decision has
``branching`` actions ``a00, a01, ...`` with iid Uniform(0, spread) values,
and an observation derived from the player index and decision index, so every
decision gets its own partition.  Partitions are computed in bulk with numpy;
:func:`green_masks` agrees bit for bit with :func:`stratmark.watermark.partition_for`.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from ..detect import MoveRecord, z_score
from ..watermark import (FNV_OFFSET, FNV_PRIME, KEY_SEPARATOR, MASK64, WatermarkParams,
                         green_size)

GOLDEN = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB

POLICIES = ("watermarked", "oblivious", "random", "topk", "intermittent")


def sim_observation(player: int, step: int, stream: int = 0) -> bytes:
    return b"sim" + struct.pack(">IQI", stream, player, step)


def action_labels(n: int) -> tuple[str, ...]:
    return tuple(f"a{i:02d}" for i in range(n))


# -- bulk partitioning ---------------------------------------------------------------


def _u64(x: int) -> np.uint64:
    return np.uint64(x & MASK64)


def fnv1a64_rows(prefix: bytes, rows: np.ndarray) -> np.ndarray:
    """FNV-1a-64 of ``prefix + row`` for every row of a uint8 matrix."""
    h = FNV_OFFSET
    for byte in prefix:
        h = ((h ^ byte) * FNV_PRIME) & MASK64
    out = np.full(rows.shape[0], _u64(h), dtype=np.uint64)
    prime = _u64(FNV_PRIME)
    with np.errstate(over="ignore"):
        for col in range(rows.shape[1]):
            out ^= rows[:, col].astype(np.uint64)
            out *= prime
    return out


def _mix(z: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _u64(MIX1)
        z = (z ^ (z >> np.uint64(27))) * _u64(MIX2)
    return z ^ (z >> np.uint64(31))


def _below(state: np.ndarray, bound: int) -> np.ndarray:
    """Vector of SplitMix64 ``below(bound)`` draws; advances ``state`` in place."""
    golden = _u64(GOLDEN)
    with np.errstate(over="ignore"):
        state += golden
    x = _mix(state)
    rem = (1 << 64) % bound
    if rem:
        limit = _u64((1 << 64) - rem)
        bad = x >= limit
        while bad.any():
            with np.errstate(over="ignore"):
                state[bad] += golden
            x[bad] = _mix(state[bad])
            bad = x >= limit
    return (x % np.uint64(bound)).astype(np.int64)


def green_masks(seeds: np.ndarray, n: int, gamma: float) -> np.ndarray:
    """Boolean (len(seeds), n) matrix: is action ``i`` green under each seed."""
    m = len(seeds)
    state = seeds.astype(np.uint64).copy()
    perm = np.tile(np.arange(n, dtype=np.int64), (m, 1))
    rows = np.arange(m)
    for i in range(n - 1, 0, -1):
        j = _below(state, i + 1)
        tmp = perm[rows, i].copy()
        perm[rows, i] = perm[rows, j]
        perm[rows, j] = tmp
    mask = np.zeros((m, n), dtype=bool)
    g = green_size(n, gamma)
    np.put_along_axis(mask, perm[:, :g], True, axis=1)
    return mask


def observation_matrix(players: np.ndarray, steps: int, stream: int = 0) -> np.ndarray:
    """uint8 rows of :func:`sim_observation` for every (player, step), row-major."""
    p = np.repeat(players.astype(">u8"), steps)
    s = np.tile(np.arange(steps, dtype=">u4"), len(players))
    rec = np.zeros(len(p), dtype=[("tag", "S3"), ("stream", ">u4"), ("player", ">u8"), ("step", ">u4")])
    rec["tag"] = b"sim"
    rec["stream"] = stream
    rec["player"] = p
    rec["step"] = s
    return rec.view(np.uint8).reshape(len(p), -1)


def batch_green(players: np.ndarray, steps: int, n: int, params: WatermarkParams,
                stream: int = 0) -> np.ndarray:
    """(players, steps, n) green masks for simulated decisions."""
    obs = observation_matrix(players, steps, stream)
    seeds = fnv1a64_rows(bytes(params.key) + KEY_SEPARATOR, obs)
    return green_masks(seeds, n, params.gamma).reshape(len(players), steps, n)


# -- policies ------------------------------------------------------------------------


def _first_true(mask: np.ndarray) -> np.ndarray:
    return mask.argmax(axis=-1)


def watermarked_choice(values: np.ndarray, green: np.ndarray, params: WatermarkParams) -> np.ndarray:
    """Index chosen by the watermarked argmax; ties go to green, then to the lower index."""
    w = watermarked_values(values, green, params)
    top = w == w.max(axis=-1, keepdims=True)
    top_green = top & green
    return np.where(top_green.any(axis=-1), _first_true(top_green), _first_true(top))


def watermarked_values(values: np.ndarray, green: np.ndarray, params: WatermarkParams) -> np.ndarray:
    return values + np.where(green, params.delta, -params.red_penalty)


@dataclass
class SimResult:
    """Outcome of a batch of simulated players."""

    params: WatermarkParams
    policy: str
    chosen: np.ndarray   # (players, steps) action index
    green: np.ndarray    # (players, steps) chosen action was green
    regret: np.ndarray   # (players, steps) best value minus chosen value

    @property
    def players(self) -> int:
        return self.chosen.shape[0]

    @property
    def steps(self) -> int:
        return self.chosen.shape[1]

    def z_final(self) -> np.ndarray:
        return _z(self.green.sum(axis=1), self.steps, self.params.gamma)

    def z_curves(self) -> np.ndarray:
        """Cumulative z after each decision, one row per player."""
        n = np.arange(1, self.steps + 1)
        return _z(np.cumsum(self.green, axis=1), n, self.params.gamma)

    def first_crossing(self, threshold: float = 4.0) -> np.ndarray:
        """1-based decision count at which z first reaches the threshold, 0 if never."""
        hit = self.z_curves() >= threshold
        return np.where(hit.any(axis=1), hit.argmax(axis=1) + 1, 0)

    def green_rate(self) -> float:
        return float(self.green.mean())

    def records(self, player: int, n: int, stream: int = 0) -> list[MoveRecord]:
        labels = action_labels(n)
        return [MoveRecord(sim_observation(player, s, stream), labels, labels[int(self.chosen[player, s])],
                           player=f"sim{player}", round=0, move=s)
                for s in range(self.steps)]


def _z(n_green, n, gamma):
    return (n_green - gamma * n) / np.sqrt(n * gamma * (1 - gamma))


def simulate(policy: str, players: int, steps: int, params: WatermarkParams,
             branching: int = 8, spread: float = 1.0, k: int = 1, q: float = 1.0,
             seed: int = 0, stream: int = 0, first_player: int = 0, chunk: int = 2000) -> SimResult:
    """Simulate ``players`` independent players making ``steps`` decisions each.

    Policies: ``watermarked`` (argmax of watermarked values), ``oblivious``
    (argmax of raw values, ignores the watermark), ``random`` (uniform),
    ``topk`` (uniform among the ``k`` best by watermarked value) and
    ``intermittent`` (watermarked with probability ``q``, uniform otherwise).
    """
    if policy not in POLICIES:
        raise ValueError(f"unknown policy {policy!r}; expected one of {POLICIES}")
    if branching < 2:
        raise ValueError("branching must be at least 2")
    if k < 1:
        raise ValueError("k must be at least 1")
    if not 0.0 <= q <= 1.0:
        raise ValueError("q must lie in [0, 1]")
    k = min(k, branching)
    rng = np.random.default_rng([seed, stream])
    chosen_parts, green_parts, regret_parts = [], [], []
    for lo in range(0, players, chunk):
        ids = np.arange(first_player + lo, first_player + min(players, lo + chunk))
        green = batch_green(ids, steps, branching, params, stream)
        values = rng.random((len(ids), steps, branching)) * spread
        if policy == "watermarked":
            idx = watermarked_choice(values, green, params)
        elif policy == "oblivious":
            idx = values.argmax(axis=-1)
        elif policy == "random":
            idx = rng.integers(0, branching, size=(len(ids), steps))
        elif policy == "topk":
            w = watermarked_values(values, green, params)
            # stable sort on (-w, not green) keeps the green-first tie rule
            order = np.lexsort((~green, -w), axis=-1)
            pick = rng.integers(0, k, size=(len(ids), steps))
            idx = np.take_along_axis(order, pick[..., None], axis=-1)[..., 0]
        else:
            wm = watermarked_choice(values, green, params)
            rnd = rng.integers(0, branching, size=(len(ids), steps))
            idx = np.where(rng.random((len(ids), steps)) < q, wm, rnd)
        chosen_parts.append(idx)
        green_parts.append(np.take_along_axis(green, idx[..., None], axis=-1)[..., 0])
        best = values.max(axis=-1)
        regret_parts.append(best - np.take_along_axis(values, idx[..., None], axis=-1)[..., 0])
    return SimResult(params, policy, np.concatenate(chosen_parts), np.concatenate(green_parts),
                     np.concatenate(regret_parts))


def expected_green_rate(p_watermarked: float, q: float, gamma_eff: float) -> float:
    """Green rate of an intermittent user: ``gamma + q (p_wm - gamma)``."""
    return gamma_eff + q * (p_watermarked - gamma_eff)


def decisions_to_detect(green_rate: float, gamma: float, threshold: float = 4.0) -> float:
    """Decisions after which the expected z reaches ``threshold`` (inf if never)."""
    excess = green_rate - gamma
    if excess <= 0:
        return math.inf
    return threshold ** 2 * gamma * (1 - gamma) / excess ** 2


def null_false_positive_rate(players: int, steps: int, params: WatermarkParams, branching: int = 4,
                             threshold: float = 4.0, seed: int = 0) -> float:
    """Fraction of watermark-oblivious players whose final z reaches ``threshold``."""
    res = simulate("oblivious", players, steps, params, branching=branching, seed=seed)
    return float((res.z_final() >= threshold).mean())


__all__ = [
    "POLICIES", "SimResult", "action_labels", "batch_green", "decisions_to_detect",
    "expected_green_rate", "fnv1a64_rows", "green_masks", "null_false_positive_rate",
    "observation_matrix", "sim_observation", "simulate", "watermarked_choice",
    "watermarked_values", "z_score",
]
