import pytest

from stratmark.chessrules import (CHECKMATE, FIFTY_MOVE, INSUFFICIENT, ONGOING, STALEMATE, STARTING_FEN,
                                  THREEFOLD, AmbiguousMoveError, FenError, IllegalMoveError, Move,
                                  PgnError, PgnGame, Position, apply_move, divide, emit_pgn, game_status,
                                  legal_ucis, parse_fen, parse_pgn, parse_san, perft, san)

# Reference node counts from the standard perft suites.
KIWIPETE = "r3k2r/p1ppqpb1/bn2pnp1/3PN3/1p2P3/2N2Q1p/PPPBBPPP/R3K2R w KQkq - 0 1"
POS3 = "8/2p5/3p4/KP5r/1R3p1k/8/4P1P1/8 w - - 0 1"
POS4 = "r3k2r/Pppp1ppp/1b3nbN/nP6/BBP1P3/q4N2/Pp1P2PP/R2Q1RK1 w kq - 0 1"
POS5 = "rnbq1k1r/pp1Pbppp/2p5/8/2B5/8/PPP1NnPP/RNBQK2R w KQ - 1 8"
POS6 = "r4rk1/1pp1qppp/p1np1n2/2b1p1B1/2B1P1b1/P1NP1N2/1PP1QPPP/R4RK1 w - - 0 10"


@pytest.mark.parametrize("fen,counts", [
    (STARTING_FEN, [20, 400, 8902]),
    (KIWIPETE, [48, 2039, 97862]),
    (POS3, [14, 191, 2812, 43238]),
    (POS4, [6, 264, 9467]),
    (POS5, [44, 1486, 62379]),
    (POS6, [46, 2079, 89890]),
])
def test_perft_shallow(fen, counts):
    pos = parse_fen(fen)
    assert [perft(pos, d) for d in range(1, len(counts) + 1)] == counts


def test_divide_sums_to_perft():
    pos = parse_fen(KIWIPETE)
    d = divide(pos, 2)
    assert len(d) == 48 and sum(d.values()) == 2039
    assert d["e1g1"] == 43 and d["e1c1"] == 43


@pytest.mark.parametrize("fen", [STARTING_FEN, KIWIPETE, POS3, POS4, POS5, POS6,
                                 "4k3/8/8/3pP3/8/8/8/4K3 w - d6 0 3"])
def test_fen_round_trip(fen):
    assert parse_fen(fen).fen() == fen


@pytest.mark.parametrize("fen", [
    "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBN w KQkq - 0 1",      # short rank
    "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR x KQkq - 0 1",     # side
    "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkx - 0 1",     # castling
    "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq e4 0 1",    # ep rank
    "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQQBNR w KQkq - 0 1",     # no white king
    "4k3/8/8/8/8/8/8/4K2r b - - 0 1",                               # side not to move in check
    "P3k3/8/8/8/8/8/8/4K3 w - - 0 1",                               # pawn on last rank
    "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq",           # too few fields
])
def test_fen_errors(fen):
    with pytest.raises(FenError):
        parse_fen(fen)


def test_observation_records_ep_after_any_double_push():
    pos = Position.start().apply("e2e4")
    assert pos.observation() == b"rnbqkbnr/pppppppp/8/8/4P3/8/PPPP1PPP/RNBQKBNR b KQkq e3"
    # clocks do not enter the observation
    a = parse_fen("4k3/8/8/8/8/8/8/4K3 w - - 0 1")
    b = parse_fen("4k3/8/8/8/8/8/8/4K3 w - - 37 80")
    assert a.observation() == b.observation()


def test_en_passant_capture():
    pos = parse_fen("4k3/8/8/3pP3/8/8/8/4K3 w - d6 0 3")
    assert "e5d6" in legal_ucis(pos)
    after = pos.apply("e5d6")
    assert after.piece_at(3 * 8 + 3) == "."  # d4 untouched
    assert after.piece_at(4 * 8 + 3) == "."  # captured pawn on d5 removed
    assert after.piece_at(5 * 8 + 3) == "P"


def test_en_passant_pinned():
    # capturing would expose the king on the fifth rank
    pos = parse_fen("8/8/8/KPp4r/8/8/8/4k3 w - c6 0 1")
    assert "b5c6" not in legal_ucis(pos)


def test_castling_rules():
    pos = parse_fen("r3k2r/8/8/8/8/8/8/R3K2R w KQkq - 0 1")
    assert {"e1g1", "e1c1"} <= set(legal_ucis(pos))
    # a rook attacking f1 forbids king-side castling only
    pos = parse_fen("r3k2r/8/8/8/8/8/8/R3K2R w KQkq - 0 1").apply("a1a2").apply("h8f8")
    assert "e1g1" not in legal_ucis(pos)
    assert "e1c1" not in legal_ucis(pos)  # rook moved, right lost
    assert pos.castling == "Kq"
    # castling moves the rook
    after = parse_fen("r3k2r/8/8/8/8/8/8/R3K2R w KQkq - 0 1").apply("e1g1")
    assert after.placement() == "r3k2r/8/8/8/8/8/8/R4RK1"
    assert after.castling == "kq"


def test_castling_rights_lost_on_rook_capture():
    pos = parse_fen("r3k2r/8/8/8/8/8/8/R3K2R w KQkq - 0 1").apply("a1a8")
    assert pos.castling == "Kk"


def test_promotion():
    pos = parse_fen("8/P6k/8/8/8/8/8/K7 w - - 0 1")
    promos = sorted(u for u in legal_ucis(pos) if u.startswith("a7"))
    assert promos == ["a7a8b", "a7a8n", "a7a8q", "a7a8r"]
    assert pos.apply("a7a8n").piece_at(56) == "N"
    with pytest.raises(IllegalMoveError):
        pos.apply("a7a8")


def test_illegal_moves_rejected():
    with pytest.raises(IllegalMoveError):
        Position.start().apply("e2e5")
    with pytest.raises(ValueError):
        Move.from_uci("e2e9x")


def test_legal_ucis_are_canonical():
    for fen in (STARTING_FEN, KIWIPETE, POS4):
        ucis = legal_ucis(parse_fen(fen))
        assert ucis == sorted(ucis, key=str.encode)


@pytest.mark.parametrize("fen,kind", [
    ("7k/6Q1/6K1/8/8/8/8/8 b - - 0 1", CHECKMATE),
    ("7k/8/6Q1/8/8/8/8/6K1 b - - 0 1", STALEMATE),
    ("8/8/4k3/8/8/3BK3/8/8 w - - 0 1", INSUFFICIENT),
    ("8/8/4k3/8/8/3NK3/8/8 w - - 0 1", INSUFFICIENT),
    ("2b5/8/4k3/8/8/3BK3/8/8 w - - 0 1", INSUFFICIENT),   # bishops on one colour
    ("1b6/8/4k3/8/8/3BK3/8/8 w - - 0 1", ONGOING),        # opposite colours
    ("8/8/4k3/8/8/3RK3/8/8 w - - 100 80", FIFTY_MOVE),
    (STARTING_FEN, ONGOING),
])
def test_status(fen, kind):
    assert game_status(parse_fen(fen)).kind == kind


def test_threefold_repetition():
    pos = Position.start()
    for m in ["g1f3", "g8f6", "f3g1", "f6g8"] * 2:
        assert game_status(pos).kind == ONGOING
        pos = pos.apply(m)
    assert game_status(pos).kind == THREEFOLD
    assert game_status(pos).is_draw


# -- SAN and PGN --------------------------------------------------------------------------


def test_san_disambiguation_and_suffixes():
    pos = parse_fen("4k3/8/8/8/8/8/8/R3K2R w KQ - 0 1")
    assert san(pos, Move.from_uci("e1g1")) == "O-O"
    assert san(pos, Move.from_uci("e1c1")) == "O-O-O"
    assert san(pos, Move.from_uci("a1a8")) == "Ra8+"
    pos = parse_fen("4k3/8/8/8/8/8/4K3/R6R w - - 0 1")
    assert san(pos, Move.from_uci("a1d1")) == "Rad1"
    assert san(pos, Move.from_uci("h1h8")) == "Rh8+"
    pos = parse_fen("7k/8/6K1/8/8/8/8/1Q6 w - - 0 1")
    assert san(pos, Move.from_uci("b1b8")) == "Qb8#"
    pos = parse_fen("k7/2P5/8/8/8/8/8/K7 w - - 0 1")
    assert san(pos, Move.from_uci("c7c8q")) == "c8=Q+"


def test_parse_san():
    pos = Position.start()
    assert parse_san(pos, "Nf3").uci() == "g1f3"
    assert parse_san(pos, "e4!?").uci() == "e2e4"
    with pytest.raises(IllegalMoveError):
        parse_san(pos, "Qh5")
    amb = parse_fen("4k3/8/8/8/8/8/4K3/R6R w - - 0 1")
    with pytest.raises(AmbiguousMoveError):
        parse_san(amb, "Rd1")


def test_pgn_round_trip():
    text = """[Event "Test"]
[Site "?"]
[Date "2026.01.01"]
[Round "3"]
[White "alpha"]
[Black "beta"]
[Result "1-0"]

1. e4 {a comment} e5 2. Nf3 Nc6 (2... d6 3. d4) 3. Bb5 a6 4. Ba4 Nf6 5. O-O Be7
6. Re1 b5 7. Bb3 d6 8. c3 O-O $1 1-0
"""
    (game,) = parse_pgn(text)
    assert game.tags["White"] == "alpha"
    assert len(game.moves) == 16
    again = parse_pgn(emit_pgn(game))[0]
    assert again.moves == game.moves and again.tags == game.tags
    recs = game.records()
    assert [r.player for r in recs[:3]] == ["alpha", "beta", "alpha"]
    assert recs[0].round == 3 and recs[0].observation == Position.start().observation()
    assert recs[-1].action == "e8g8"


def test_pgn_from_fen_and_multiple_games():
    start = parse_fen(POS3)
    g = PgnGame(tags={"Result": "*"}, start=start, moves=[Move.from_uci("b4b1")])
    text = emit_pgn(g) + "\n" + emit_pgn(PgnGame(tags={"Result": "*"}, moves=[Move.from_uci("d2d4")]))
    games = parse_pgn(text)
    assert len(games) == 2
    assert games[0].start.fen() == POS3
    assert games[0].final_position().fen() == apply_move(start, "b4b1").fen()


def test_pgn_errors():
    with pytest.raises((PgnError, IllegalMoveError)):
        parse_pgn('[Event "x"]\n\n1. e4 e5 2. Ke3 *\n')
