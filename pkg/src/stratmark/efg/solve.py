"""Exact backward induction for finite perfect-information games."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..watermark import ContractError
from .game import CHANCE, Game, History

DEFAULT_NODE_CAP = 10**6


class GameStructureError(ValueError):
    """The game graph is not a finite tree (e.g. a history revisits itself)."""


class NodeCapExceeded(RuntimeError):
    pass


@dataclass
class ValueTable:
    """Subgame-perfect continuation values and the induced policy."""

    values: dict[History, tuple[float, ...]] = field(default_factory=dict)
    best: dict[History, str] = field(default_factory=dict)

    def __getitem__(self, h: History) -> tuple[float, ...]:
        return self.values[h]

    def __contains__(self, h: History) -> bool:
        return h in self.values

    def __len__(self) -> int:
        return len(self.values)


def backward_induction(game: Game, node_cap: int = DEFAULT_NODE_CAP,
                       reverse: bool = False) -> ValueTable:
    """Solve ``game`` from its initial history.

    Decision nodes take the child maximizing the mover's value, first in
    canonical order on ties; chance nodes average their children.  ``reverse``
    visits children in reverse order, which must not change the result.
    """
    table = ValueTable()
    on_path: set = set()

    def visit(h: History) -> tuple[float, ...]:
        if h in table.values:
            return table.values[h]
        if h in on_path:
            raise GameStructureError(f"history {h!r} revisits itself")
        if len(table.values) >= node_cap:
            raise NodeCapExceeded(f"more than {node_cap} histories")
        actions = game.legal_actions(h)
        if not actions:
            value = tuple(game.utilities(h))
            table.values[h] = value
            return value
        on_path.add(h)
        order = list(reversed(actions)) if reverse else actions
        child_values = {a: visit(game.apply(h, a)) for a in order}
        on_path.discard(h)
        player = game.player_to_move(h)
        if player == CHANCE:
            probs = game.chance_distribution(h)
            n = len(child_values[actions[0]])
            value = tuple(
                sum(p * child_values[a][i] for p, a in zip(probs, actions)) for i in range(n)
            )
        else:
            best = actions[0]
            for a in actions[1:]:
                if child_values[a][player] > child_values[best][player]:
                    best = a
            table.best[h] = best
            value = child_values[best]
        table.values[h] = value
        return value

    visit(game.initial())
    return table


def expected_utilities(game: Game, values: ValueTable, h: History) -> list[float]:
    """Acting player's continuation value of each child, in canonical order."""
    actions = game.legal_actions(h)
    if not actions:
        raise ContractError(f"history {h!r} is terminal")
    player = game.player_to_move(h)
    if player == CHANCE:
        raise ContractError(f"history {h!r} is a chance node")
    return [values[game.apply(h, a)][player] for a in actions]
