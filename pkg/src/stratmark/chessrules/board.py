"""Chess positions, FEN, legal move generation and game status.

Squares are indexed 0..63 with a1 = 0, b1 = 1, ..., h8 = 63.  Boards are
64-tuples of one-character strings: ``PNBRQK`` for White, ``pnbrqk`` for
Black, ``.`` for an empty square.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import NamedTuple

STARTING_FEN = "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1"

FILES = "abcdefgh"
EMPTY = "."
PROMOTIONS = "nbrq"


class FenError(ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(f"FEN {field}: {message}")
        self.field = field


class IllegalMoveError(ValueError):
    pass


def square(name: str) -> int:
    if len(name) != 2 or name[0] not in FILES or name[1] not in "12345678":
        raise ValueError(f"bad square {name!r}")
    return FILES.index(name[0]) + 8 * (int(name[1]) - 1)


def square_name(sq: int) -> str:
    return FILES[sq & 7] + str((sq >> 3) + 1)


def _targets(sq: int, deltas) -> tuple[int, ...]:
    f, r = sq & 7, sq >> 3
    out = []
    for df, dr in deltas:
        nf, nr = f + df, r + dr
        if 0 <= nf < 8 and 0 <= nr < 8:
            out.append(nf + 8 * nr)
    return tuple(out)


def _ray(sq: int, df: int, dr: int) -> tuple[int, ...]:
    f, r = sq & 7, sq >> 3
    out = []
    f, r = f + df, r + dr
    while 0 <= f < 8 and 0 <= r < 8:
        out.append(f + 8 * r)
        f, r = f + df, r + dr
    return tuple(out)


KNIGHT_DELTAS = ((1, 2), (2, 1), (2, -1), (1, -2), (-1, -2), (-2, -1), (-2, 1), (-1, 2))
KING_DELTAS = ((1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1))
ORTHOGONAL = ((1, 0), (-1, 0), (0, 1), (0, -1))
DIAGONAL = ((1, 1), (1, -1), (-1, 1), (-1, -1))

KNIGHT = tuple(_targets(s, KNIGHT_DELTAS) for s in range(64))
KING = tuple(_targets(s, KING_DELTAS) for s in range(64))
ROOK_RAYS = tuple(tuple(_ray(s, *d) for d in ORTHOGONAL) for s in range(64))
BISHOP_RAYS = tuple(tuple(_ray(s, *d) for d in DIAGONAL) for s in range(64))
QUEEN_RAYS = tuple(ROOK_RAYS[s] + BISHOP_RAYS[s] for s in range(64))
# squares from which a pawn of the given colour attacks ``s``
PAWN_ATTACKERS_W = tuple(_targets(s, ((-1, -1), (1, -1))) for s in range(64))
PAWN_ATTACKERS_B = tuple(_targets(s, ((-1, 1), (1, 1))) for s in range(64))

A1, E1, H1, A8, E8, H8 = 0, 4, 7, 56, 60, 63
# castling right lost when a piece moves from or to one of these squares
RIGHTS_TOUCHED = {A1: "Q", E1: "KQ", H1: "K", A8: "q", E8: "kq", H8: "k"}


class Move(NamedTuple):
    from_sq: int
    to_sq: int
    promotion: str | None = None

    def uci(self) -> str:
        return square_name(self.from_sq) + square_name(self.to_sq) + (self.promotion or "")

    __str__ = uci

    @classmethod
    def from_uci(cls, text: str) -> "Move":
        text = text.strip()
        if len(text) not in (4, 5):
            raise ValueError(f"bad UCI move {text!r}")
        promo = text[4] if len(text) == 5 else None
        if promo is not None and promo not in PROMOTIONS:
            raise ValueError(f"bad promotion piece in {text!r}")
        return cls(square(text[:2]), square(text[2:4]), promo)


def is_attacked(board, sq: int, by_white: bool) -> bool:
    """Whether side ``by_white`` attacks square ``sq``."""
    if by_white:
        pawn, knight, king, rook, bishop, queen = "PNKRBQ"
        pawn_from = PAWN_ATTACKERS_W[sq]
    else:
        pawn, knight, king, rook, bishop, queen = "pnkrbq"
        pawn_from = PAWN_ATTACKERS_B[sq]
    for s in pawn_from:
        if board[s] == pawn:
            return True
    for s in KNIGHT[sq]:
        if board[s] == knight:
            return True
    for s in KING[sq]:
        if board[s] == king:
            return True
    for ray in ROOK_RAYS[sq]:
        for s in ray:
            p = board[s]
            if p != EMPTY:
                if p == rook or p == queen:
                    return True
                break
    for ray in BISHOP_RAYS[sq]:
        for s in ray:
            p = board[s]
            if p != EMPTY:
                if p == bishop or p == queen:
                    return True
                break
    return False


@dataclass(frozen=True)
class Position:
    board: tuple[str, ...]
    white_to_move: bool = True
    castling: str = "KQkq"
    ep_square: int | None = None
    halfmove: int = 0
    fullmove: int = 1
    # observations of earlier positions since the last irreversible move
    history: tuple[bytes, ...] = ()

    # -- FEN ---------------------------------------------------------------------

    @classmethod
    def from_fen(cls, fen: str) -> "Position":
        return parse_fen(fen)

    @classmethod
    def start(cls) -> "Position":
        return parse_fen(STARTING_FEN)

    def fen(self) -> str:
        return emit_fen(self)

    def placement(self) -> str:
        rows = []
        for r in range(7, -1, -1):
            row, run = "", 0
            for f in range(8):
                p = self.board[8 * r + f]
                if p == EMPTY:
                    run += 1
                else:
                    if run:
                        row += str(run)
                        run = 0
                    row += p
            if run:
                row += str(run)
            rows.append(row)
        return "/".join(rows)

    def observation(self) -> bytes:
        """Canonical public encoding: FEN fields 1-4 joined by single spaces."""
        ep = square_name(self.ep_square) if self.ep_square is not None else "-"
        return f"{self.placement()} {'w' if self.white_to_move else 'b'} {self.castling or '-'} {ep}".encode("ascii")

    # -- queries -----------------------------------------------------------------

    def king_square(self, white: bool) -> int:
        return self.board.index("K" if white else "k")

    def in_check(self) -> bool:
        return is_attacked(self.board, self.king_square(self.white_to_move), not self.white_to_move)

    def piece_at(self, sq: int) -> str:
        return self.board[sq]

    def legal_moves(self) -> list[Move]:
        return legal_moves(self)

    def apply(self, move: Move | str) -> "Position":
        return apply_move(self, move)

    def __str__(self) -> str:
        rows = [" ".join(self.board[8 * r: 8 * r + 8]) for r in range(7, -1, -1)]
        return "\n".join(rows)


# -- FEN parsing -------------------------------------------------------------------


def parse_fen(fen: str) -> Position:
    fields = fen.split()
    if len(fields) == 4:
        fields += ["0", "1"]
    if len(fields) != 6:
        raise FenError("field count", f"expected 6 fields, got {len(fields)}")
    placement, side, castling, ep, halfmove, fullmove = fields

    ranks = placement.split("/")
    if len(ranks) != 8:
        raise FenError("placement", f"expected 8 ranks, got {len(ranks)}")
    board = [EMPTY] * 64
    for i, row in enumerate(ranks):
        r = 7 - i
        f = 0
        for ch in row:
            if ch in "12345678":
                f += int(ch)
            elif ch in "PNBRQKpnbrqk":
                if f >= 8:
                    raise FenError("placement", f"rank {r + 1} has more than 8 squares")
                board[8 * r + f] = ch
                f += 1
            else:
                raise FenError("placement", f"invalid character {ch!r} in rank {r + 1}")
        if f != 8:
            raise FenError("placement", f"rank {r + 1} describes {f} squares, not 8")
    if board.count("K") != 1 or board.count("k") != 1:
        raise FenError("placement", "each side needs exactly one king")
    if any(board[s] in "Pp" for s in list(range(8)) + list(range(56, 64))):
        raise FenError("placement", "pawn on the first or last rank")

    if side not in ("w", "b"):
        raise FenError("side to move", f"expected 'w' or 'b', got {side!r}")
    white = side == "w"

    if castling != "-":
        if not castling or any(c not in "KQkq" for c in castling) or len(set(castling)) != len(castling):
            raise FenError("castling", f"invalid castling field {castling!r}")
        needs = {"K": (E1, "K", H1, "R"), "Q": (E1, "K", A1, "R"),
                 "k": (E8, "k", H8, "r"), "q": (E8, "k", A8, "r")}
        for c in castling:
            ks, kp, rs, rp = needs[c]
            if board[ks] != kp or board[rs] != rp:
                raise FenError("castling", f"right {c!r} impossible without king and rook at home")
        castling = "".join(c for c in "KQkq" if c in castling)
    else:
        castling = ""

    ep_sq = None
    if ep != "-":
        try:
            ep_sq = square(ep)
        except ValueError:
            raise FenError("en passant", f"invalid square {ep!r}") from None
        rank = ep_sq >> 3
        if (white and rank != 5) or (not white and rank != 2):
            raise FenError("en passant", f"target {ep} on wrong rank for side to move")
        pusher = ep_sq - 8 if white else ep_sq + 8
        origin = ep_sq + 8 if white else ep_sq - 8
        if board[pusher] != ("p" if white else "P") or board[ep_sq] != EMPTY or board[origin] != EMPTY:
            raise FenError("en passant", f"target {ep} does not follow a double pawn push")

    try:
        hm, fm = int(halfmove), int(fullmove)
    except ValueError:
        raise FenError("move counters", "halfmove clock and fullmove number must be integers") from None
    if hm < 0:
        raise FenError("halfmove clock", "must be >= 0")
    if fm < 1:
        raise FenError("fullmove number", "must be >= 1")

    pos = Position(tuple(board), white, castling, ep_sq, hm, fm)
    if is_attacked(pos.board, pos.king_square(not white), white):
        raise FenError("placement", "side not to move is in check")
    return pos


def emit_fen(pos: Position) -> str:
    return f"{pos.observation().decode('ascii')} {pos.halfmove} {pos.fullmove}"


# -- move generation ---------------------------------------------------------------


def _pseudo_moves(pos: Position) -> list[Move]:
    board = pos.board
    white = pos.white_to_move
    own = str.isupper if white else str.islower
    moves = []
    append = moves.append
    for sq in range(64):
        p = board[sq]
        if p == EMPTY or not own(p):
            continue
        kind = p.upper()
        if kind == "P":
            step, start_rank, last_rank = (8, 1, 7) if white else (-8, 6, 0)
            to = sq + step
            if board[to] == EMPTY:
                if to >> 3 == last_rank:
                    for pr in PROMOTIONS:
                        append(Move(sq, to, pr))
                else:
                    append(Move(sq, to))
                    if sq >> 3 == start_rank and board[to + step] == EMPTY:
                        append(Move(sq, to + step))
            f = sq & 7
            for df in (-1, 1):
                if not 0 <= f + df < 8:
                    continue
                to = sq + step + df
                q = board[to]
                if (q != EMPTY and not own(q)) or to == pos.ep_square:
                    if to >> 3 == last_rank:
                        for pr in PROMOTIONS:
                            append(Move(sq, to, pr))
                    else:
                        append(Move(sq, to))
        elif kind == "N" or kind == "K":
            for to in (KNIGHT if kind == "N" else KING)[sq]:
                q = board[to]
                if q == EMPTY or not own(q):
                    append(Move(sq, to))
        else:
            rays = ROOK_RAYS if kind == "R" else BISHOP_RAYS if kind == "B" else QUEEN_RAYS
            for ray in rays[sq]:
                for to in ray:
                    q = board[to]
                    if q == EMPTY:
                        append(Move(sq, to))
                    else:
                        if not own(q):
                            append(Move(sq, to))
                        break
    # castling; legality of the squares crossed is checked here
    rights = pos.castling
    if white and ("K" in rights or "Q" in rights) and not is_attacked(board, E1, False):
        if "K" in rights and board[5] == EMPTY and board[6] == EMPTY and not is_attacked(board, 5, False):
            append(Move(E1, 6))
        if ("Q" in rights and board[3] == EMPTY and board[2] == EMPTY and board[1] == EMPTY
                and not is_attacked(board, 3, False)):
            append(Move(E1, 2))
    if not white and ("k" in rights or "q" in rights) and not is_attacked(board, E8, True):
        if "k" in rights and board[61] == EMPTY and board[62] == EMPTY and not is_attacked(board, 61, True):
            append(Move(E8, 62))
        if ("q" in rights and board[59] == EMPTY and board[58] == EMPTY and board[57] == EMPTY
                and not is_attacked(board, 59, True)):
            append(Move(E8, 58))
    return moves


def _pinned(board, king_sq: int, white: bool) -> set[int]:
    """Own pieces that stand alone between the king and an enemy slider."""
    own = str.isupper if white else str.islower
    enemy_straight = "rq" if white else "RQ"
    enemy_diag = "bq" if white else "BQ"
    pinned = set()
    for rays, sliders in ((ROOK_RAYS[king_sq], enemy_straight), (BISHOP_RAYS[king_sq], enemy_diag)):
        for ray in rays:
            candidate = None
            for s in ray:
                p = board[s]
                if p == EMPTY:
                    continue
                if own(p):
                    if candidate is None:
                        candidate = s
                        continue
                    break
                if candidate is not None and p in sliders:
                    pinned.add(candidate)
                break
    return pinned


def _leaves_king_safe(board, move: Move, white: bool, ep_square) -> bool:
    b = list(board)
    piece = b[move.from_sq]
    b[move.to_sq] = piece
    b[move.from_sq] = EMPTY
    if piece in "Pp" and move.to_sq == ep_square:
        b[move.to_sq - 8 if white else move.to_sq + 8] = EMPTY
    king_sq = move.to_sq if piece in "Kk" else b.index("K" if white else "k")
    return not is_attacked(b, king_sq, not white)


def legal_moves(pos: Position) -> list[Move]:
    """All legal moves, sorted by their UCI string."""
    board = pos.board
    white = pos.white_to_move
    king_sq = board.index("K" if white else "k")
    checked = is_attacked(board, king_sq, not white)
    pinned = _pinned(board, king_sq, white)
    out = []
    for m in _pseudo_moves(pos):
        piece = board[m.from_sq]
        if (piece in "Kk" or checked or m.from_sq in pinned
                or (m.to_sq == pos.ep_square and piece in "Pp")):
            if not _leaves_king_safe(board, m, white, pos.ep_square):
                continue
        out.append(m)
    out.sort(key=Move.uci)
    return out


def legal_ucis(pos: Position) -> list[str]:
    return [m.uci() for m in legal_moves(pos)]


def apply_move(pos: Position, move: Move | str, check_legal: bool = True) -> Position:
    """Play ``move`` and return the resulting position."""
    if isinstance(move, str):
        move = Move.from_uci(move)
    if check_legal and move not in legal_moves(pos):
        raise IllegalMoveError(f"{move.uci()} is not legal in {emit_fen(pos)}")
    return _make(pos, move, keep_history=True)


def _make(pos: Position, move: Move, keep_history: bool = False) -> Position:
    b = list(pos.board)
    white = pos.white_to_move
    frm, to = move.from_sq, move.to_sq
    piece = b[frm]
    captured = b[to]
    irreversible = piece in "Pp" or captured != EMPTY
    b[to] = piece
    b[frm] = EMPTY
    ep = None
    if piece in "Pp":
        if to == pos.ep_square:
            b[to - 8 if white else to + 8] = EMPTY
        elif abs(to - frm) == 16:
            ep = (frm + to) // 2
        if move.promotion:
            b[to] = move.promotion.upper() if white else move.promotion
    elif piece in "Kk" and abs(to - frm) == 2:
        if to > frm:
            b[frm + 1], b[frm + 3] = b[frm + 3], EMPTY
        else:
            b[frm - 1], b[frm - 4] = b[frm - 4], EMPTY
    castling = pos.castling
    if castling and (frm in RIGHTS_TOUCHED or to in RIGHTS_TOUCHED):
        lost = RIGHTS_TOUCHED.get(frm, "") + RIGHTS_TOUCHED.get(to, "")
        new_castling = "".join(c for c in castling if c not in lost)
        irreversible = irreversible or new_castling != castling
        castling = new_castling
    if keep_history:
        history = () if irreversible else pos.history + (pos.observation(),)
    else:
        history = ()
    return Position(
        board=tuple(b),
        white_to_move=not white,
        castling=castling,
        ep_square=ep,
        halfmove=0 if piece in "Pp" or captured != EMPTY else pos.halfmove + 1,
        fullmove=pos.fullmove + (0 if white else 1),
        history=history,
    )


# -- game status -----------------------------------------------------------------------


ONGOING = "ongoing"
CHECKMATE = "checkmate"
STALEMATE = "stalemate"
FIFTY_MOVE = "fifty-move"
THREEFOLD = "threefold"
INSUFFICIENT = "insufficient material"


class Status(NamedTuple):
    kind: str

    @property
    def is_over(self) -> bool:
        return self.kind != ONGOING

    @property
    def is_draw(self) -> bool:
        return self.kind not in (ONGOING, CHECKMATE)


def insufficient_material(pos: Position) -> bool:
    pieces = [(sq, p) for sq, p in enumerate(pos.board) if p != EMPTY and p not in "Kk"]
    if not pieces:
        return True
    if any(p in "PpRrQq" for _, p in pieces):
        return False
    if len(pieces) == 1:
        return True
    # only bishops left, all on squares of one colour
    if all(p in "Bb" for _, p in pieces):
        colours = {((sq & 7) + (sq >> 3)) & 1 for sq, _ in pieces}
        return len(colours) == 1
    return False


def repetition_count(pos: Position) -> int:
    obs = pos.observation()
    return 1 + sum(1 for o in pos.history if o == obs)


def game_status(pos: Position) -> Status:
    if not legal_moves(pos):
        return Status(CHECKMATE if pos.in_check() else STALEMATE)
    if insufficient_material(pos):
        return Status(INSUFFICIENT)
    if pos.halfmove >= 100:
        return Status(FIFTY_MOVE)
    if repetition_count(pos) >= 3:
        return Status(THREEFOLD)
    return Status(ONGOING)


def with_clocks(pos: Position, halfmove: int, fullmove: int) -> Position:
    return replace(pos, halfmove=halfmove, fullmove=fullmove)


# -- perft ---------------------------------------------------------------------------------


def perft(pos: Position, depth: int) -> int:
    if depth == 0:
        return 1
    moves = legal_moves(pos)
    if depth == 1:
        return len(moves)
    return sum(perft(_make(pos, m), depth - 1) for m in moves)


def divide(pos: Position, depth: int) -> dict[str, int]:
    return {m.uci(): perft(_make(pos, m), depth - 1) for m in legal_moves(pos)}
