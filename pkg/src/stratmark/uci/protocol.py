"""Parsing helpers for the UCI text protocol."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..chessrules import FenError, IllegalMoveError, Position, apply_move, parse_fen

MATE_BASE = 1_000_000.0
MATE_STEP = 1_000.0


class ProtocolError(ValueError):
    pass


def map_score(kind: str, value: int | str) -> float:
    """Centipawn value for a UCI ``score cp N`` / ``score mate N`` pair.

    Mates map to ``±(1e6 - 1e3 * |N|)``: shorter wins rank higher, longer
    losses rank higher, and every mate is far from every centipawn score.
    """
    try:
        n = int(value)
    except (TypeError, ValueError):
        raise ProtocolError(f"score value {value!r} is not an integer") from None
    if kind == "cp":
        return float(n)
    if kind == "mate":
        if n > 0:
            return MATE_BASE - MATE_STEP * n
        if n < 0:
            return -MATE_BASE - MATE_STEP * n
        # "mate 0": side to move is already mated
        return -MATE_BASE
    raise ProtocolError(f"unknown score kind {kind!r}")


def parse_score_token(text: str) -> float:
    """``"cp 34"`` -> 34.0, ``"mate -1"`` -> -999000.0."""
    parts = text.split()
    if len(parts) != 2:
        raise ProtocolError(f"bad score token {text!r}")
    return map_score(parts[0], parts[1])


@dataclass
class InfoLine:
    depth: int | None = None
    multipv: int = 1
    score_kind: str | None = None
    score_value: int | None = None
    bound: str | None = None
    nodes: int | None = None
    pv: list[str] = field(default_factory=list)

    @property
    def score(self) -> float | None:
        if self.score_kind is None:
            return None
        return map_score(self.score_kind, self.score_value)


# info tokens followed by exactly one value
_ONE_VALUE = {"depth", "seldepth", "time", "nodes", "multipv", "currmove", "currmovenumber",
              "hashfull", "nps", "tbhits", "sbhits", "cpuload"}


def parse_info(line: str) -> InfoLine | None:
    """Parse an ``info`` line; returns None for lines without a score and pv."""
    tokens = line.split()
    if not tokens or tokens[0] != "info":
        return None
    info = InfoLine()
    i = 1
    while i < len(tokens):
        t = tokens[i]
        if t == "string":
            break
        if t == "pv":
            info.pv = tokens[i + 1:]
            break
        if t == "score":
            if i + 2 >= len(tokens):
                raise ProtocolError(f"truncated score in {line!r}")
            info.score_kind = tokens[i + 1]
            if info.score_kind not in ("cp", "mate"):
                raise ProtocolError(f"unknown score kind in {line!r}")
            info.score_value = int(tokens[i + 2])
            i += 3
            if i < len(tokens) and tokens[i] in ("lowerbound", "upperbound"):
                info.bound = tokens[i]
                i += 1
            continue
        if t in _ONE_VALUE and i + 1 < len(tokens):
            if t == "depth":
                info.depth = int(tokens[i + 1])
            elif t == "multipv":
                info.multipv = int(tokens[i + 1])
            elif t == "nodes":
                info.nodes = int(tokens[i + 1])
            i += 2
            continue
        if t in ("wdl",):
            i += 4
            continue
        if t in ("refutation", "currline"):
            break
        i += 1
    if info.score_kind is None or not info.pv:
        return None
    return info


@dataclass
class GoLimits:
    """Search limits of a ``go`` command, kept as the original arguments."""

    args: list[str] = field(default_factory=list)

    @classmethod
    def parse(cls, text: str) -> "GoLimits":
        tokens = text.split()
        if tokens and tokens[0] == "go":
            tokens = tokens[1:]
        # pondering is not supported; the ponder flag is dropped
        return cls([t for t in tokens if t != "ponder"])

    @classmethod
    def movetime(cls, ms: int) -> "GoLimits":
        return cls(["movetime", str(int(ms))])

    @classmethod
    def nodes(cls, n: int) -> "GoLimits":
        return cls(["nodes", str(int(n))])

    @classmethod
    def depth(cls, d: int) -> "GoLimits":
        return cls(["depth", str(int(d))])

    def get(self, name: str) -> int | None:
        if name in self.args:
            i = self.args.index(name)
            if i + 1 < len(self.args):
                try:
                    return int(self.args[i + 1])
                except ValueError:
                    return None
        return None

    @property
    def infinite(self) -> bool:
        return "infinite" in self.args

    def budget_seconds(self, white_to_move: bool = True) -> float | None:
        """Rough wall-clock budget for the search, None when unbounded in time."""
        mt = self.get("movetime")
        if mt is not None:
            return mt / 1000.0
        clock = self.get("wtime" if white_to_move else "btime")
        if clock is not None:
            return clock / 1000.0
        return None

    def command(self) -> str:
        return " ".join(["go"] + self.args)


def parse_position_command(line: str) -> tuple[Position, list[str]]:
    """Position reached by a ``position`` command, and the moves it lists."""
    tokens = line.split()
    if not tokens or tokens[0] != "position" or len(tokens) < 2:
        raise ProtocolError(f"not a position command: {line!r}")
    if tokens[1] == "startpos":
        pos = Position.start()
        rest = tokens[2:]
    elif tokens[1] == "fen":
        try:
            end = tokens.index("moves")
        except ValueError:
            end = len(tokens)
        try:
            pos = parse_fen(" ".join(tokens[2:end]))
        except FenError as exc:
            raise ProtocolError(str(exc)) from exc
        rest = tokens[end:]
    else:
        raise ProtocolError(f"position must be 'startpos' or 'fen': {line!r}")
    moves = []
    if rest:
        if rest[0] != "moves":
            raise ProtocolError(f"unexpected token {rest[0]!r} in position command")
        moves = rest[1:]
    for m in moves:
        try:
            pos = apply_move(pos, m)
        except (IllegalMoveError, ValueError) as exc:
            raise ProtocolError(f"illegal move {m!r} in position command: {exc}") from exc
    return pos, moves


def position_command(start: Position, moves: list[str]) -> str:
    if start.fen() == Position.start().fen():
        head = "position startpos"
    else:
        head = f"position fen {start.fen()}"
    return head + (" moves " + " ".join(moves) if moves else "")
