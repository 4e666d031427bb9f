"""Self-check suite on small games: utility-loss bound, its probabilistic form,
and agreement between action choice and watermarked expected utility."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .efg import (RandomTree, RandomTreeSpec, backward_induction, check_consistency,
                  simulate_theorem1, verify_loss_bound)
from .watermark import WatermarkParams

GAMMAS = tuple(round(0.1 * i, 1) for i in range(1, 10))
DELTAS = tuple(float(d) for d in range(0, 11))
THEOREM1_GRID = tuple(
    (p, n, frac * n)
    for p in (0.1, 0.5, 0.9)
    for n in (10, 50, 200)
    for frac in (0.1, 0.3, 0.5)
)


def random_specs(count: int, seed: int = 0, max_depth: int = 6, max_branching: int = 4,
                 min_depth: int = 2) -> list[RandomTreeSpec]:
    """Reproducible mix of random trees; every third one has a chance level."""
    rng = np.random.default_rng(seed)
    specs = []
    for i in range(count):
        depth = int(rng.integers(min_depth, max_depth + 1))
        branching = int(rng.integers(2, max_branching + 1))
        players = 1 if i % 7 == 6 else 2
        chance = (int(rng.integers(0, depth)),) if i % 3 == 2 else ()
        specs.append(RandomTreeSpec(depth=depth, branching=branching, players=players,
                                    payoff_seed=int(rng.integers(2**31)), chance_levels=chance))
    return specs


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail} ({self.seconds:.1f}s)"


@dataclass
class Prop2Summary:
    games: int = 0
    cells: int = 0
    trajectories: int = 0
    decisions: int = 0
    violations: int = 0
    cap_violations: int = 0
    max_telescoping_error: float = 0.0
    worst_ratio: float = 0.0   # largest L / (n * cap) seen


def check_loss_bound(specs, gammas=GAMMAS, deltas=DELTAS, tol: float = 1e-9) -> Prop2Summary:
    """Exact loss-bound check for every tree, every player and every (γ, δ)."""
    out = Prop2Summary()
    for spec in specs:
        game = RandomTree(spec)
        values = backward_induction(game)
        out.games += 1
        for g in gammas:
            for d in deltas:
                params = WatermarkParams(gamma=g, delta=d, key=b"verify")
                for player in range(spec.players):
                    rep = verify_loss_bound(game, params, player, values=values)
                    out.cells += 1
                    out.violations += rep.violations
                    out.max_telescoping_error = max(out.max_telescoping_error, rep.max_telescoping_error)
                    cap = params.regret_cap
                    for t in rep.trajectories:
                        out.trajectories += 1
                        out.decisions += t.n_watermarked
                        out.cap_violations += sum(r > cap + tol for r in t.regrets)
                        if t.n and cap > 0:
                            out.worst_ratio = max(out.worst_ratio, t.loss / (t.n * cap))
    return out


@dataclass
class Theorem1Summary:
    cells: list = field(default_factory=list)

    @property
    def failures(self) -> int:
        return sum(not c.holds for c in self.cells)


def check_theorem1(grid=THEOREM1_GRID, trials: int = 100_000, gamma: float = 0.25, delta: float = 0.5,
                   seed: int = 0) -> Theorem1Summary:
    out = Theorem1Summary()
    for i, (p, n, t) in enumerate(grid):
        out.cells.append(simulate_theorem1(p, n, t, gamma, delta, trials, seed=seed + i))
    return out


@dataclass
class ConsistencySummary:
    games: int = 0
    decisions: int = 0
    mismatches: int = 0
    max_inversion_error: float = 0.0


def check_consistency_suite(specs, params: WatermarkParams | None = None) -> ConsistencySummary:
    out = ConsistencySummary()
    params = params or WatermarkParams(gamma=0.25, delta=0.5, key=b"verify")
    for spec in specs:
        rep = check_consistency(RandomTree(spec), params)
        out.games += 1
        out.decisions += rep.decisions
        out.mismatches += rep.argmax_mismatches
        out.max_inversion_error = max(out.max_inversion_error, rep.max_inversion_error)
    return out


def run_suite(quick: bool = False, seed: int = 0) -> list[CheckResult]:
    """Default self-check suite; ``quick`` shrinks the grids for a fast smoke run."""
    results = []

    t0 = time.perf_counter()
    specs = random_specs(10 if quick else 100, seed=seed)
    gammas = (0.25, 0.5) if quick else GAMMAS
    deltas = (0.0, 0.5, 10.0) if quick else DELTAS
    s = check_loss_bound(specs, gammas, deltas)
    results.append(CheckResult(
        "loss bound",
        s.violations == 0 and s.cap_violations == 0 and s.max_telescoping_error < 1e-9,
        f"{s.games} trees, {s.cells} cells, {s.trajectories} trajectories, "
        f"{s.violations + s.cap_violations} violations, worst L/(n cap) = {s.worst_ratio:.3f}",
        time.perf_counter() - t0))

    t0 = time.perf_counter()
    th = check_theorem1(trials=10_000 if quick else 100_000, seed=seed)
    worst = min(th.cells, key=lambda c: c.empirical - c.bound)
    results.append(CheckResult(
        "loss tail bound (Monte Carlo)",
        th.failures == 0,
        f"{len(th.cells)} cells, {th.failures} below bound - 3se; tightest margin "
        f"{worst.empirical - worst.bound:+.4f} at p={worst.p:g} n={worst.n} t={worst.t:g}",
        time.perf_counter() - t0))

    t0 = time.perf_counter()
    cs = check_consistency_suite(random_specs(10 if quick else 50, seed=seed + 1, max_depth=4,
                                              max_branching=3))
    results.append(CheckResult(
        "choice / expected-utility consistency",
        cs.mismatches == 0 and cs.max_inversion_error <= 1e-12,
        f"{cs.games} games, {cs.decisions} decisions, {cs.mismatches} mismatches, "
        f"max inversion error {cs.max_inversion_error:.2e}",
        time.perf_counter() - t0))
    return results


def all_passed(results) -> bool:
    return all(r.passed for r in results) and not any(math.isnan(r.seconds) for r in results)
