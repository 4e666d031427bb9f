"""Exact and Monte-Carlo checks of the watermark's utility-loss guarantees."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..watermark import WatermarkParams, next_action
from .game import CHANCE, Game, History
from .solve import DEFAULT_NODE_CAP, NodeCapExceeded, ValueTable, backward_induction, expected_utilities

TOL = 1e-9


@dataclass
class TrajectoryLoss:
    trajectory_id: int
    history: History
    probability: float
    n: int
    n_watermarked: int
    loss: float
    regrets: list[float]
    realized: float
    telescoping_error: float


@dataclass
class LossReport:
    gamma: float
    delta: float
    player: int
    root_value: float
    regret_cap: float
    trajectories: list[TrajectoryLoss] = field(default_factory=list)
    violations: int = 0
    expected_loss: float = 0.0

    @property
    def max_telescoping_error(self) -> float:
        return max((abs(t.telescoping_error) for t in self.trajectories), default=0.0)

    def bound(self, t: TrajectoryLoss) -> float:
        return t.n * self.regret_cap


def verify_loss_bound(game: Game, params: WatermarkParams, watermarked_player: int,
                      node_cap: int = DEFAULT_NODE_CAP,
                      values: ValueTable | None = None) -> LossReport:
    """Enumerate every trajectory of the watermarked agent against oracle play.

    The watermarked player follows ``next_action`` on exact oracle values; the
    other players follow the backward-induction policy and chance branches over
    all outcomes.  Each trajectory's loss is the sum of its per-decision
    regrets, checked against the per-decision cap and ``n * cap``.
    """
    if values is None:
        values = backward_induction(game, node_cap=node_cap)
    i = watermarked_player
    root = game.initial()
    cap = params.regret_cap
    report = LossReport(params.gamma, params.delta, i, values[root][i], cap)
    visited = 0
    stack = [(root, 1.0, [], 0, 0, 0.0)]
    while stack:
        h, prob, regrets, n, n_wm, chance_drift = stack.pop()
        visited += 1
        if visited > node_cap:
            raise NodeCapExceeded(f"more than {node_cap} histories enumerated")
        actions = game.legal_actions(h)
        if not actions:
            realized = game.utilities(h)[i]
            loss = math.fsum(regrets)
            report.trajectories.append(TrajectoryLoss(
                trajectory_id=len(report.trajectories),
                history=h,
                probability=prob,
                n=n,
                n_watermarked=n_wm,
                loss=loss,
                regrets=regrets,
                realized=realized,
                telescoping_error=(report.root_value - realized - chance_drift) - loss,
            ))
            if any(r > cap + TOL for r in regrets) or loss > n * cap + TOL:
                report.violations += 1
            continue
        mover = game.player_to_move(h)
        if mover == CHANCE:
            v = values[h][i]
            for a, p in zip(actions, game.chance_distribution(h)):
                child = game.apply(h, a)
                stack.append((child, prob * p, regrets, n, n_wm,
                              chance_drift + v - values[child][i]))
        elif mover == i:
            u = expected_utilities(game, values, h)
            d = next_action(game.observation(h), actions, u, params)
            regret = max(u) - u[actions.index(d.action)]
            stack.append((game.apply(h, d.action), prob, regrets + [regret], n + 1,
                          n_wm + d.watermarked, chance_drift))
        else:
            stack.append((game.apply(h, values.best[h]), prob, regrets, n, n_wm, chance_drift))
    report.trajectories.sort(key=lambda t: t.trajectory_id)
    report.expected_loss = report.root_value - math.fsum(
        t.probability * t.realized for t in report.trajectories)
    return report


@dataclass
class Theorem1Report:
    p: float
    n: int
    t: float
    gamma: float
    delta: float
    trials: int
    empirical: float
    bound: float
    bound_hoeffding: float
    standard_error: float

    @property
    def holds(self) -> bool:
        return self.empirical >= self.bound - 3 * self.standard_error


def simulate_theorem1(p: float, n: int, t: float, gamma: float, delta: float,
                      trials: int, seed: int = 0) -> Theorem1Report:
    """Monte-Carlo estimate of ``Pr[L < cap * (p n + t)]`` under iid green choices.

    Every green choice is charged the worst-case loss ``cap``.  The event is
    evaluated on the green count, ``X < p n + t``, which is the same event for
    ``cap > 0`` and keeps the statement meaningful at ``delta = 0``.

    ``bound`` uses the exponent ``-2 t^2 / n^2``; ``bound_hoeffding`` the
    usual ``-2 t^2 / n``, which is tighter.  Both are reported.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    if n < 1 or trials < 1:
        raise ValueError("n and trials must be >= 1")
    if not t > 0:
        raise ValueError("t must be > 0")
    WatermarkParams(gamma=gamma, delta=delta)
    rng = np.random.default_rng(seed)
    greens = rng.binomial(n, p, size=trials)
    empirical = float(np.mean(greens < p * n + t))
    bound = 1.0 - math.exp(-2.0 * t * t / (n * n))
    hoeffding = 1.0 - math.exp(-2.0 * t * t / n)
    se = math.sqrt(max(bound * (1.0 - bound), empirical * (1.0 - empirical)) / trials)
    return Theorem1Report(p, n, t, gamma, delta, trials, empirical, bound, hoeffding, se)


@dataclass
class ConsistencyReport:
    decisions: int = 0
    argmax_mismatches: int = 0
    max_inversion_error: float = 0.0


def check_consistency(game: Game, params: WatermarkParams,
                      values: ValueTable | None = None) -> ConsistencyReport:
    """Compare action choice with watermarked expected utilities at every history.

    At each watermarked decision the argmax over children of the watermarked
    expected utility (mover's value, green-first tie-break) must be the action
    ``next_action`` picks.  At every history, removing the recomputed prefix
    adjustments from the watermarked value must give back the oracle value.
    """
    from ..watermark import (argmax_green_first, partition_for, prefix_adjustment,
                             trajectory_to, watermarked_expected_utility)

    if values is None:
        values = backward_induction(game)
    report = ConsistencyReport()
    for h in values.values:
        traj = trajectory_to(game, h)
        steps = [(game.observation(p), game.legal_actions(p), a)
                 for p, a in traj if game.player_to_move(p) != CHANCE]
        undo = prefix_adjustment(steps, params)
        for player in range(game.num_players):
            wv = watermarked_expected_utility(game, traj, h, values[h][player], params)
            err = abs((wv - undo) - values[h][player])
            report.max_inversion_error = max(report.max_inversion_error, err)
        actions = game.legal_actions(h)
        if not actions or game.player_to_move(h) == CHANCE:
            continue
        mover = game.player_to_move(h)
        obs = game.observation(h)
        d = next_action(obs, actions, expected_utilities(game, values, h), params)
        if not d.watermarked:
            continue
        report.decisions += 1
        child_values = [
            watermarked_expected_utility(game, traj + [(h, a)], game.apply(h, a),
                                         values[game.apply(h, a)][mover], params)
            for a in actions
        ]
        j = argmax_green_first(child_values, actions, partition_for(obs, actions, params))
        if actions[j] != d.action:
            report.argmax_mismatches += 1
    return report
