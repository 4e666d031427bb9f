from .board import (CHECKMATE, FIFTY_MOVE, INSUFFICIENT, ONGOING, STALEMATE, STARTING_FEN, THREEFOLD,
                    FenError, IllegalMoveError, Move, Position, Status, apply_move, divide, emit_fen,
                    game_status, legal_moves, legal_ucis, parse_fen, perft, square, square_name)
from .pgn import AmbiguousMoveError, PgnError, PgnGame, emit_pgn, parse_pgn, parse_san, read_book, san
