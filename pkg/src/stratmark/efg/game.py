"""Perfect-information extensive-form games.

Histories are tuples of actions taken from the initial (empty) history, so
``apply`` is plain tuple extension in every game shipped here.  Actions are
strings; their canonical order is the order of their UTF-8 bytes.
"""

from __future__ import annotations

import configparser
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from ..watermark import canonical_order

CHANCE = -1

History = tuple


class Game(ABC):
    """Interface every solver and verifier in this package consumes."""

    num_players: int = 2

    def initial(self) -> History:
        return ()

    @abstractmethod
    def player_to_move(self, h: History) -> int:
        """Acting player at a non-terminal history, or ``CHANCE``."""

    @abstractmethod
    def legal_actions(self, h: History) -> list[str]:
        """Canonically ordered actions; empty exactly at terminal histories."""

    def apply(self, h: History, a: str) -> History:
        return h + (a,)

    def is_terminal(self, h: History) -> bool:
        return not self.legal_actions(h)

    @abstractmethod
    def utilities(self, h: History) -> tuple[float, ...]:
        """One utility per non-chance player at a terminal history."""

    def observation(self, h: History) -> bytes:
        return ("/" + "/".join(h)).encode("utf-8")

    def chance_distribution(self, h: History) -> list[float]:
        raise NotImplementedError(f"{type(self).__name__} has no chance nodes")


class TicTacToe(Game):
    """Noughts and crosses; utilities are +1/-1 for a win, 0 for a draw.

    Actions are cell indices ``"0"`` .. ``"8"`` in row-major order.
    """

    LINES = ((0, 1, 2), (3, 4, 5), (6, 7, 8), (0, 3, 6), (1, 4, 7), (2, 5, 8), (0, 4, 8), (2, 4, 6))

    def board(self, h: History) -> list[str]:
        cells = ["."] * 9
        for i, a in enumerate(h):
            cells[int(a)] = "XO"[i % 2]
        return cells

    def winner(self, cells: Sequence[str]) -> str | None:
        for a, b, c in self.LINES:
            if cells[a] != "." and cells[a] == cells[b] == cells[c]:
                return cells[a]
        return None

    def player_to_move(self, h):
        return len(h) % 2

    def legal_actions(self, h):
        cells = self.board(h)
        if self.winner(cells) or len(h) == 9:
            return []
        return [str(i) for i in range(9) if cells[i] == "."]

    def utilities(self, h):
        w = self.winner(self.board(h))
        if w is None:
            return (0.0, 0.0)
        return (1.0, -1.0) if w == "X" else (-1.0, 1.0)

    def observation(self, h):
        return "".join(self.board(h)).encode("ascii")


# -- explicit trees ------------------------------------------------------------


@dataclass
class Node:
    """Node of an explicitly stored game tree.

    ``player`` is ``None`` at leaves, ``CHANCE`` at chance nodes.  For chance
    nodes ``probs`` is aligned with the canonically ordered children.
    """

    player: int | None = None
    children: dict[str, "Node"] = field(default_factory=dict)
    payoff: tuple[float, ...] = ()
    probs: tuple[float, ...] = ()


def leaf(*payoff: float) -> Node:
    return Node(payoff=tuple(float(x) for x in payoff))


def decision(player: int, children: Mapping[str, Node]) -> Node:
    return Node(player=player, children=dict(children))


def chance(children: Mapping[str, tuple[float, Node]]) -> Node:
    order = canonical_order(children)
    return Node(
        player=CHANCE,
        children={a: children[a][1] for a in order},
        probs=tuple(float(children[a][0]) for a in order),
    )


class TreeGame(Game):
    """Game given as an explicit :class:`Node` tree."""

    def __init__(self, root: Node, num_players: int | None = None):
        self.root = root
        if num_players is None:
            num_players = len(self._any_leaf(root).payoff)
        self.num_players = num_players

    @staticmethod
    def _any_leaf(node: Node) -> Node:
        while node.children:
            node = next(iter(node.children.values()))
        return node

    def node(self, h: History) -> Node:
        node = self.root
        for a in h:
            try:
                node = node.children[a]
            except KeyError:
                raise KeyError(f"action {a!r} not available after {h}") from None
        return node

    def player_to_move(self, h):
        return self.node(h).player

    def legal_actions(self, h):
        return canonical_order(self.node(h).children)

    def utilities(self, h):
        return self.node(h).payoff

    def chance_distribution(self, h):
        node = self.node(h)
        if node.player != CHANCE:
            raise ValueError(f"history {h} is not a chance node")
        return list(node.probs)


# -- seeded random trees -----------------------------------------------------------


@dataclass(frozen=True)
class RandomTreeSpec:
    depth: int = 4
    branching: int = 3
    players: int = 2
    payoff_seed: int = 0
    value_spread: float = 1.0
    chance_levels: tuple[int, ...] = ()

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError("depth must be >= 1")
        if not 2 <= self.branching <= 100:
            raise ValueError("branching must be in [2, 100]")
        if self.players not in (1, 2):
            raise ValueError("players must be 1 or 2")
        if not 0 <= self.payoff_seed < 1 << 64:
            raise ValueError("payoff_seed must be a 64-bit unsigned integer")
        if any(not 0 <= lvl < self.depth for lvl in self.chance_levels):
            raise ValueError("chance levels must lie in [0, depth)")

    def dumps(self) -> str:
        """Serialize as an INI document with a single ``[tree]`` section."""
        levels = ",".join(str(x) for x in self.chance_levels)
        return (
            "[tree]\n"
            f"depth = {self.depth}\n"
            f"branching = {self.branching}\n"
            f"players = {self.players}\n"
            f"payoff_seed = {self.payoff_seed}\n"
            f"value_spread = {self.value_spread!r}\n"
            f"chance_levels = {levels}\n"
        )

    @classmethod
    def loads(cls, text: str) -> "RandomTreeSpec":
        cp = configparser.ConfigParser()
        cp.read_string(text)
        sec = cp["tree"]
        unknown = set(sec) - {"depth", "branching", "players", "payoff_seed", "value_spread",
                              "chance_levels"}
        if unknown:
            raise ValueError(f"unknown keys in [tree]: {sorted(unknown)}")
        levels = sec.get("chance_levels", "").strip()
        return cls(
            depth=sec.getint("depth", cls.depth),
            branching=sec.getint("branching", cls.branching),
            players=sec.getint("players", cls.players),
            payoff_seed=sec.getint("payoff_seed", cls.payoff_seed),
            value_spread=sec.getfloat("value_spread", cls.value_spread),
            chance_levels=tuple(int(x) for x in levels.split(",")) if levels else (),
        )


class RandomTree(Game):
    """Uniform-depth tree with iid ``Uniform(0, value_spread)`` leaf payoffs.

    Everything about the game (payoffs and chance probabilities) is a pure
    function of the spec and the history, so two instances built from equal
    specs are the same game.  Players alternate by depth, skipping chance levels.
    """

    def __init__(self, spec: RandomTreeSpec):
        self.spec = spec
        self.num_players = spec.players
        self.actions = [f"a{i:02d}" for i in range(spec.branching)]
        self._mover = []
        k = 0
        for d in range(spec.depth):
            if d in spec.chance_levels:
                self._mover.append(CHANCE)
            else:
                self._mover.append(k % spec.players)
                k += 1

    def _rng(self, h: History, salt: int) -> np.random.Generator:
        path = [int(a[1:]) for a in h]
        return np.random.default_rng([self.spec.payoff_seed, salt, len(path), *path])

    def player_to_move(self, h):
        return self._mover[len(h)]

    def legal_actions(self, h):
        return [] if len(h) >= self.spec.depth else list(self.actions)

    def utilities(self, h):
        u = self._rng(h, 1).random(self.spec.players) * self.spec.value_spread
        return tuple(float(x) for x in u)

    def chance_distribution(self, h):
        w = self._rng(h, 2).random(self.spec.branching) + 0.05
        return [float(x) for x in w / w.sum()]
