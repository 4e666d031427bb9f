"""Per-move engine scores and watermarked move choice in centipawn space."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from ..chessrules import Position, legal_ucis
from ..detect import MoveRecord
from ..watermark import Partition, WatermarkParams, adjustment, argmax_green_first, partition_for
from .protocol import GoLimits, InfoLine, position_command
from .session import EngineError, EngineSession

log = logging.getLogger(__name__)


@dataclass
class ScoredMoveSet:
    fen: str
    legal: list[str]
    scores: dict[str, float] = field(default_factory=dict)
    depth: int | None = None
    engine_bestmove: str | None = None
    forced: bool = False

    @property
    def unscored(self) -> list[str]:
        return [m for m in self.legal if m not in self.scores]


def collect_scores(infos: list[InfoLine], legal: list[str], k: int) -> tuple[dict[str, float], int | None]:
    """Scores from the engine's last complete MultiPV report.

    Engines print one block of lines per iteration, ranks ``1..k`` in order.
    A block is usable when ranks ``1..k`` are all present for distinct
    moves.  The last usable block wins, even when it mixes depths: a search
    stopped mid-iteration reports the moves it has re-searched at the new
    depth and the rest at the previous one, and that block is the engine's
    own final ranking.  Without any usable block, the latest score of each
    move is used.  Moves outside ``legal`` are dropped.  The returned depth
    is the deepest line of the chosen block.
    """
    legal_set = set(legal)
    blocks: list[dict[int, tuple[int, str, float]]] = []
    latest: dict[str, float] = {}
    latest_depth = None
    for info in infos:
        if info.depth is None:
            continue
        move = info.pv[0]
        if move not in legal_set:
            log.warning("engine reported score for illegal move %s", move)
            continue
        if info.multipv == 1 or not blocks:
            blocks.append({})
        blocks[-1][info.multipv] = (info.depth, move, info.score)
        latest[move] = info.score
        latest_depth = info.depth if latest_depth is None else max(latest_depth, info.depth)
    for block in reversed(blocks):
        if not all(r in block for r in range(1, k + 1)):
            continue
        if len({block[r][1] for r in range(1, k + 1)}) != k:
            continue
        return ({block[r][1]: block[r][2] for r in range(1, k + 1)},
                max(block[r][0] for r in range(1, k + 1)))
    return latest, latest_depth


def score_all_moves(session: EngineSession, pos: Position, limits: GoLimits,
                    position_cmd: str | None = None, multipv_cap: int | None = None) -> ScoredMoveSet:
    """Ask the engine to score as many legal moves as its MultiPV allows."""
    legal = legal_ucis(pos)
    if not legal:
        raise EngineError(f"no legal moves in {pos.fen()}")
    if len(legal) == 1:
        return ScoredMoveSet(pos.fen(), legal, {legal[0]: 0.0}, forced=True,
                             engine_bestmove=legal[0])
    k = min(len(legal), session.max_multipv)
    if multipv_cap is not None:
        k = min(k, multipv_cap)
    session.ensure_multipv(k)
    if position_cmd is None:
        position_cmd = position_command(pos, [])
    result = session.search(position_cmd, limits, pos.white_to_move)
    scores, depth = collect_scores(result.infos, legal, k)
    if not scores and result.bestmove in legal:
        # engines that report no scored pv at all still give a usable move
        scores = {result.bestmove: 0.0}
    if not scores:
        raise EngineError(f"engine scored no legal move in {pos.fen()}", list(session.transcript))
    return ScoredMoveSet(pos.fen(), legal, scores, depth, result.bestmove)


@dataclass
class ChessDecision:
    move: str
    watermarked: bool
    green: bool | None
    partition: Partition | None
    record: MoveRecord


def choose_move(pos: Position, scored: ScoredMoveSet, params: WatermarkParams,
                player="watermarked", round_index: int = 0, move_index: int | None = None) -> ChessDecision:
    """Watermarked choice among the scored moves.

    The partition is drawn over the full legal move list, so a detector can
    rebuild it without knowing which moves the engine scored.  Only scored
    moves are adjusted and eligible.
    """
    if not scored.scores:
        raise ValueError("no scored moves to choose from")
    legal = scored.legal
    obs = pos.observation()
    part = partition_for(obs, legal, params)
    candidates = [m for m in legal if m in scored.scores]
    values = [scored.scores[m] for m in candidates]
    if part is not None:
        values = [v + adjustment(part.is_green(m), params) for v, m in zip(values, candidates)]
    move = candidates[argmax_green_first(values, candidates, part)]
    if move_index is None:
        move_index = 2 * (pos.fullmove - 1) + (0 if pos.white_to_move else 1)
    record = MoveRecord(obs, tuple(legal), move, player, round_index, move_index)
    return ChessDecision(move, part is not None, None if part is None else part.is_green(move),
                         part, record)
