"""SAN, PGN import/export and opening books."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

from ..detect import MoveRecord
from .board import (EMPTY, STARTING_FEN, FenError, IllegalMoveError, Move, Position, _make, apply_move, emit_fen,
                    legal_moves, parse_fen, square, square_name)


class PgnError(ValueError):
    def __init__(self, message: str, game: int | None = None, ply: int | None = None,
                 token: str | None = None):
        where = []
        if game is not None:
            where.append(f"game {game}")
        if ply is not None:
            where.append(f"ply {ply}")
        if token is not None:
            where.append(f"token {token!r}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.game, self.ply, self.token = game, ply, token


# -- SAN ------------------------------------------------------------------------------


def san(pos: Position, move: Move) -> str:
    """Standard algebraic notation for a legal move, with check/mate suffix."""
    piece = pos.board[move.from_sq].upper()
    if piece == "K" and abs(move.to_sq - move.from_sq) == 2:
        text = "O-O" if move.to_sq > move.from_sq else "O-O-O"
    else:
        capture = pos.board[move.to_sq] != EMPTY or (piece == "P" and move.to_sq == pos.ep_square)
        dest = square_name(move.to_sq)
        if piece == "P":
            text = (square_name(move.from_sq)[0] + "x" if capture else "") + dest
            if move.promotion:
                text += "=" + move.promotion.upper()
        else:
            rivals = [m for m in legal_moves(pos)
                      if m.to_sq == move.to_sq and m.from_sq != move.from_sq
                      and pos.board[m.from_sq] == pos.board[move.from_sq]]
            hint = ""
            if rivals:
                same_file = any(m.from_sq & 7 == move.from_sq & 7 for m in rivals)
                same_rank = any(m.from_sq >> 3 == move.from_sq >> 3 for m in rivals)
                name = square_name(move.from_sq)
                if not same_file:
                    hint = name[0]
                elif not same_rank:
                    hint = name[1]
                else:
                    hint = name
            text = piece + hint + ("x" if capture else "") + dest
    after = _make(pos, move)
    if after.in_check():
        text += "#" if not legal_moves(after) else "+"
    return text


SAN_RE = re.compile(r"^([NBRQK])?([a-h])?([1-8])?(x)?([a-h][1-8])(?:=?([NBRQnbrq]))?$")
ANNOTATION_RE = re.compile(r"[+#!?]+$")


def parse_san(pos: Position, text: str) -> Move:
    """Resolve a SAN token (annotations such as ``+``, ``#``, ``!?`` allowed)."""
    token = ANNOTATION_RE.sub("", text.strip())
    legal = legal_moves(pos)
    if token in ("O-O", "0-0", "O-O-O", "0-0-0"):
        king = pos.king_square(pos.white_to_move)
        target = king + (2 if token in ("O-O", "0-0") else -2)
        for m in legal:
            if m.from_sq == king and m.to_sq == target:
                return m
        raise IllegalMoveError(f"castling {text!r} is not legal")
    mt = SAN_RE.match(token)
    if not mt:
        raise ValueError(f"unparseable SAN {text!r}")
    piece, file_hint, rank_hint, _, dest, promo = mt.groups()
    piece = piece or "P"
    to = square(dest)
    cands = []
    for m in legal:
        p = pos.board[m.from_sq].upper()
        if p != piece or m.to_sq != to:
            continue
        name = square_name(m.from_sq)
        if file_hint and name[0] != file_hint:
            continue
        if rank_hint and name[1] != rank_hint:
            continue
        if (m.promotion or None) != (promo.lower() if promo else None):
            continue
        cands.append(m)
    if not cands:
        raise IllegalMoveError(f"SAN {text!r} matches no legal move")
    if len(cands) > 1:
        raise AmbiguousMoveError(
            f"SAN {text!r} is ambiguous: {', '.join(m.uci() for m in cands)}")
    return cands[0]


class AmbiguousMoveError(ValueError):
    pass


# -- PGN ------------------------------------------------------------------------------------


SEVEN_TAGS = ("Event", "Site", "Date", "Round", "White", "Black", "Result")
RESULTS = ("1-0", "0-1", "1/2-1/2", "*")


@dataclass
class PgnGame:
    tags: dict[str, str] = field(default_factory=dict)
    start: Position = field(default_factory=Position.start)
    moves: list[Move] = field(default_factory=list)

    @property
    def result(self) -> str:
        return self.tags.get("Result", "*")

    def positions(self) -> Iterator[tuple[Position, Move]]:
        pos = self.start
        for m in self.moves:
            yield pos, m
            pos = apply_move(pos, m, check_legal=False)

    def final_position(self) -> Position:
        pos = self.start
        for m in self.moves:
            pos = apply_move(pos, m, check_legal=False)
        return pos

    def player_names(self) -> tuple[str, str]:
        return self.tags.get("White", "white"), self.tags.get("Black", "black")

    def records(self, round_index: int | None = None) -> list[MoveRecord]:
        """One record per ply; ``player`` is the White/Black tag of the mover."""
        if round_index is None:
            try:
                round_index = int(self.tags.get("Round", "0").split(".")[0])
            except ValueError:
                round_index = 0
        white, black = self.player_names()
        out = []
        for ply, (pos, m) in enumerate(self.positions()):
            out.append(MoveRecord(
                observation=pos.observation(),
                legal=tuple(x.uci() for x in legal_moves(pos)),
                action=m.uci(),
                player=white if pos.white_to_move else black,
                round=round_index,
                move=ply,
            ))
        return out


TOKEN_RE = re.compile(
    r"""\[\s*(\w+)\s+"((?:[^"\\]|\\.)*)"\s*\]   # tag pair
      | \{[^}]*\}                              # brace comment
      | ;[^\n]*                                # rest-of-line comment
      | \$\d+                                  # NAG
      | \(|\)                                  # variation delimiters
      | (1-0|0-1|1/2-1/2|\*)                   # result
      | \d+\.(?:\.\.)?                         # move number
      | ([^\s{}();\[\]]+)                      # SAN token
    """,
    re.VERBOSE,
)


def parse_pgn(text: str) -> list[PgnGame]:
    """Parse every game in a PGN document; moves are validated as they are read."""
    games: list[PgnGame] = []
    game: PgnGame | None = None
    pos: Position | None = None
    depth = 0
    in_movetext = False

    def finish():
        nonlocal game, pos, in_movetext
        if game is not None:
            games.append(game)
        game, pos, in_movetext = None, None, False

    for mt in TOKEN_RE.finditer(text):
        tok = mt.group(0)
        if mt.group(1) is not None:
            if in_movetext:
                finish()
            if game is None:
                game = PgnGame()
            game.tags[mt.group(1)] = mt.group(2).replace('\\"', '"').replace("\\\\", "\\")
            continue
        if game is None:
            game = PgnGame()
        if not in_movetext:
            in_movetext = True
            fen = game.tags.get("FEN")
            if fen:
                try:
                    game.start = parse_fen(fen)
                except FenError as exc:
                    raise PgnError(str(exc), game=len(games) + 1) from exc
            pos = game.start
        if tok == "(":
            depth += 1
            continue
        if tok == ")":
            depth = max(depth - 1, 0)
            continue
        if depth or tok[0] in "{;$" or re.fullmatch(r"\d+\.(?:\.\.)?", tok):
            continue
        if mt.group(3) is not None:
            game.tags.setdefault("Result", tok)
            finish()
            continue
        try:
            move = parse_san(pos, tok)
        except (IllegalMoveError, AmbiguousMoveError, ValueError) as exc:
            raise PgnError(str(exc), game=len(games) + 1, ply=len(game.moves) + 1, token=tok) from exc
        game.moves.append(move)
        pos = apply_move(pos, move, check_legal=False)
    if game is not None and (game.moves or game.tags):
        finish()
    return games


def emit_pgn(game: PgnGame) -> str:
    tags = dict(game.tags)
    for t in SEVEN_TAGS:
        tags.setdefault(t, "?" if t != "Result" else "*")
    start_fen = emit_fen(game.start)
    if start_fen != STARTING_FEN:
        tags["SetUp"] = "1"
        tags["FEN"] = start_fen
    lines = []
    for t in SEVEN_TAGS:
        lines.append(f'[{t} "{_escape(tags[t])}"]')
    for t, v in tags.items():
        if t not in SEVEN_TAGS:
            lines.append(f'[{t} "{_escape(v)}"]')
    lines.append("")
    words = []
    pos = game.start
    for i, m in enumerate(game.moves):
        if pos.white_to_move:
            words.append(f"{pos.fullmove}.")
        elif i == 0:
            words.append(f"{pos.fullmove}...")
        words.append(san(pos, m))
        pos = apply_move(pos, m, check_legal=False)
    words.append(tags["Result"])
    line = ""
    for w in words:
        if line and len(line) + 1 + len(w) > 79:
            lines.append(line)
            line = w
        else:
            line = f"{line} {w}" if line else w
    lines.append(line)
    return "\n".join(lines) + "\n"


def _escape(v: str) -> str:
    return v.replace("\\", "\\\\").replace('"', '\\"')


# -- opening books --------------------------------------------------------------------------


def read_book(path: str | Path) -> list[Position]:
    """Positions from a FEN/EPD file: one per line, ``#`` starts a comment.

    EPD lines keep only their four position fields; operations are ignored.
    """
    out = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) >= 6 and fields[4].isdigit() and fields[5].isdigit():
            fen = " ".join(fields[:6])
        else:
            fen = " ".join(fields[:4])
        try:
            out.append(parse_fen(fen))
        except FenError as exc:
            raise FenError(exc.field, f"{path}:{lineno}: {exc}") from exc
    return out
