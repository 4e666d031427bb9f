"""A small deterministic UCI engine used for tests and offline demos.

Material plus piece-square evaluation, fixed-depth negamax with alpha-beta
below the root, and exact scores for every root move so MultiPV works for
any number of lines.  It is weak on purpose; its job is to speak the
protocol the way real engines do (iterative deepening, one ``info`` line per
MultiPV rank and depth, ``bestmove`` at the end).
"""

from __future__ import annotations

import sys
import time

from ..chessrules import Position, legal_moves
from ..chessrules.board import EMPTY, _make
from .protocol import GoLimits, ProtocolError, parse_position_command

VALUES = {"P": 100, "N": 320, "B": 330, "R": 500, "Q": 900, "K": 0}
MATE = 30000

# centre bonus by square for knights, bishops and pawns (white's view)
_CENTRE = [0, 1, 2, 3, 3, 2, 1, 0]
PST = [(_CENTRE[s & 7] + _CENTRE[s >> 3]) * 4 for s in range(64)]


def evaluate(pos: Position) -> int:
    """Static score in centipawns from the side to move's point of view."""
    score = 0
    for sq, p in enumerate(pos.board):
        if p == EMPTY:
            continue
        kind = p.upper()
        v = VALUES[kind]
        if kind in "NBP":
            v += PST[sq]
        if kind == "P":
            rank = sq >> 3 if p == "P" else 7 - (sq >> 3)
            v += 5 * rank
        score += v if p.isupper() else -v
    return score if pos.white_to_move else -score


class SearchAborted(Exception):
    pass


class ToyEngine:
    name = "stratmark toy engine"

    def __init__(self, out=sys.stdout):
        self.out = out
        self.multipv = 1
        self.position = Position.start()
        self.nodes = 0
        self.node_limit = None
        self.deadline = None

    def emit(self, line: str) -> None:
        self.out.write(line + "\n")
        self.out.flush()

    def _tick(self) -> None:
        self.nodes += 1
        if self.node_limit is not None and self.nodes > self.node_limit:
            raise SearchAborted
        if self.deadline is not None and (self.nodes & 63) == 0 and time.monotonic() > self.deadline:
            raise SearchAborted

    def negamax(self, pos: Position, depth: int, alpha: int, beta: int, ply: int) -> int:
        self._tick()
        moves = legal_moves(pos)
        if not moves:
            return -(MATE - ply) if pos.in_check() else 0
        if depth == 0:
            return evaluate(pos)
        best = -MATE - 1
        for m in moves:
            score = -self.negamax(_make(pos, m), depth - 1, -beta, -alpha, ply + 1)
            if score > best:
                best = score
            if best > alpha:
                alpha = best
            if alpha >= beta:
                break
        return best

    def root_scores(self, pos: Position, depth: int) -> list[tuple[int, str]]:
        scored = []
        for m in legal_moves(pos):
            child = _make(pos, m)
            scored.append((-self.negamax(child, depth - 1, -MATE - 1, MATE + 1, 1), m.uci()))
        # best first; equal scores in move order
        scored.sort(key=lambda t: -t[0])
        return scored

    @staticmethod
    def score_token(score: int) -> str:
        if abs(score) > MATE - 1000:
            plies = MATE - abs(score)
            moves = (plies + 1) // 2
            return f"mate {moves if score > 0 else -moves}"
        return f"cp {score}"

    def go(self, limits: GoLimits) -> str:
        pos = self.position
        moves = legal_moves(pos)
        if not moves:
            return "0000"
        max_depth = limits.get("depth") or (64 if limits.get("nodes") or limits.budget_seconds(pos.white_to_move) else 2)
        self.nodes = 0
        self.node_limit = limits.get("nodes")
        budget = limits.budget_seconds(pos.white_to_move)
        if budget is not None and limits.get("movetime") is None:
            budget = budget / 30.0
        self.deadline = time.monotonic() + budget if budget is not None else None
        best = moves[0].uci()
        for depth in range(1, max_depth + 1):
            try:
                scored = self.root_scores(pos, depth)
            except SearchAborted:
                break
            best = scored[0][1]
            for rank, (score, move) in enumerate(scored[: self.multipv], 1):
                self.emit(f"info depth {depth} multipv {rank} score {self.score_token(score)} "
                          f"nodes {self.nodes} pv {move}")
            if abs(scored[0][0]) > MATE - 1000:
                break
        return best

    def handle(self, line: str) -> bool:
        tokens = line.split()
        if not tokens:
            return True
        cmd = tokens[0]
        if cmd == "uci":
            self.emit(f"id name {self.name}")
            self.emit("id author stratmark")
            self.emit("option name MultiPV type spin default 1 min 1 max 256")
            self.emit("uciok")
        elif cmd == "isready":
            self.emit("readyok")
        elif cmd == "setoption":
            if "name" in tokens and "value" in tokens:
                name = " ".join(tokens[tokens.index("name") + 1: tokens.index("value")])
                if name.lower() == "multipv":
                    self.multipv = max(1, int(tokens[tokens.index("value") + 1]))
        elif cmd == "ucinewgame":
            self.position = Position.start()
        elif cmd == "position":
            try:
                self.position, _ = parse_position_command(line)
            except ProtocolError as exc:
                self.emit(f"info string {exc}")
        elif cmd == "go":
            self.emit(f"bestmove {self.go(GoLimits.parse(line))}")
        elif cmd == "quit":
            return False
        return True


def main(argv=None) -> int:
    engine = ToyEngine()
    for line in sys.stdin:
        if not engine.handle(line.strip()):
            break
    return 0


if __name__ == "__main__":
    sys.exit(main())
