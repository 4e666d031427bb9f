import json
import subprocess
import sys

import pytest

from stratmark.cli import EXIT_DETECTED, EXIT_ERROR, EXIT_INSUFFICIENT, EXIT_OK, EXIT_USAGE, main
from stratmark.detect import MoveRecord, write_trace

ACTS = ("a", "b", "c", "d")  # green at obs "x" with the empty key is c


def write(tmp_path, name, records):
    p = tmp_path / name
    with open(p, "w") as fp:
        write_trace(fp, records)
    return str(p)


@pytest.fixture(autouse=True)
def no_key(monkeypatch):
    monkeypatch.delenv("STRATMARK_KEY", raising=False)


def test_perft(capsys):
    assert main(["perft", "3"]) == EXIT_OK
    assert capsys.readouterr().out.strip().endswith("8902")


def test_perft_divide_from_moves(capsys):
    assert main(["perft", "2", "--moves", "e2e4", "--divide"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "e7e5" in out and "600" in out  # perft 2 after 1.e4


def test_perft_bad_input():
    assert main(["perft", "-1"]) == EXIT_USAGE
    assert main(["perft", "2", "--fen", "not a fen"]) in (EXIT_USAGE, EXIT_ERROR)


def test_detect_all_green(tmp_path, capsys):
    trace = write(tmp_path, "t.jsonl", [MoveRecord(b"x", ACTS, "c", round=i // 4 + 1, move=i) for i in range(16)])
    csv_path, svg_path = tmp_path / "z.csv", tmp_path / "z.svg"
    assert main(["detect", "--trace", trace, "--csv", str(csv_path), "--svg", str(svg_path)]) == EXIT_DETECTED
    out = capsys.readouterr().out
    assert "z = 6.93" in out and "watermark detected" in out
    assert csv_path.read_text().splitlines()[0] == "round,move,n,n_G,z,p"
    assert len(csv_path.read_text().splitlines()) == 17
    assert svg_path.read_text().startswith("<svg")


def test_detect_wrong_key_and_threshold(tmp_path, monkeypatch):
    trace = write(tmp_path, "t.jsonl", [MoveRecord(b"x", ACTS, "c", move=i) for i in range(16)])
    assert main(["detect", "--trace", trace, "--threshold", "8"]) == EXIT_OK
    monkeypatch.setenv("STRATMARK_KEY", "other")
    assert main(["detect", "--trace", trace]) == EXIT_OK  # c is red under this key


def test_detect_insufficient(tmp_path):
    forced = write(tmp_path, "f.jsonl", [MoveRecord(b"x", ("only",), "only")])
    assert main(["detect", "--trace", forced]) == EXIT_INSUFFICIENT
    empty = tmp_path / "e.jsonl"
    empty.write_text("")
    assert main(["detect", "--trace", str(empty)]) == EXIT_INSUFFICIENT


def test_detect_errors(tmp_path):
    bad = write(tmp_path, "b.jsonl", [MoveRecord(b"x", ACTS, "z")])
    assert main(["detect", "--trace", bad]) == EXIT_ERROR
    assert main(["detect", "--trace", str(tmp_path / "missing.jsonl")]) == EXIT_USAGE
    assert main(["detect"]) == EXIT_USAGE
    assert main(["detect", "--trace", bad, "--gamma", "1.5"]) in (EXIT_USAGE, EXIT_ERROR)


def test_detect_pgn_needs_player(tmp_path, capsys):
    pgn = tmp_path / "g.pgn"
    pgn.write_text('[White "alpha"]\n[Black "beta"]\n[Result "*"]\n\n1. e4 e5 2. Nf3 Nc6 *\n')
    assert main(["detect", "--pgn", str(pgn)]) == EXIT_USAGE
    assert main(["detect", "--pgn", str(pgn), "--player", "alpha"]) == EXIT_OK
    assert "counted decisions n = 2" in capsys.readouterr().out


def test_detect_config_gamma(tmp_path, capsys):
    cfg = tmp_path / "w.ini"
    cfg.write_text("[watermark]\ngamma = 0.5\n")
    trace = write(tmp_path, "t.jsonl", [MoveRecord(b"x", ACTS, "a")])
    main(["detect", "--trace", trace, "--config", str(cfg)])
    # at gamma 0.5 the green list for obs x is a, c
    assert "green decisions n_G = 1" in capsys.readouterr().out


def test_vectors_match_published_document(tmp_path):
    out = tmp_path / "v.json"
    assert main(["vectors", "--out", str(out)]) == EXIT_OK
    data = json.loads(out.read_text())
    assert data["fnv1a64"][0]["hash"] == "cbf29ce484222325"
    assert data["partition"][0]["green"] == ["c"]
    assert data["chess"][0]["green"] == ["a2a3", "b1c3", "b2b3", "f2f3", "f2f4"]


def test_ablate_synthetic(tmp_path, capsys):
    out = tmp_path / "a.csv"
    rc = main(["ablate", "--synthetic", "--gammas", "0.25", "--deltas", "0,10", "--decisions", "10",
               "--csv", str(out)])
    assert rc == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[0].startswith("gamma,delta,elo") and len(lines) == 3


def test_verify_quick(capsys):
    assert main(["verify", "--quick"]) == EXIT_OK
    assert capsys.readouterr().out.count("PASS") == 3


def test_usage_errors():
    assert main([]) == EXIT_USAGE
    assert main(["frobnicate"]) == EXIT_USAGE
    assert main(["match"]) == EXIT_USAGE
    assert main(["wrap"]) == EXIT_USAGE


def test_match_with_toy_engine(tmp_path, toy_engine, capsys):
    rc = main(["match", "--engine", " ".join(toy_engine), "--rounds", "2", "--tc", "depth=1",
               "--ply-cap", "12", "--out", str(tmp_path)])
    assert rc == EXIT_OK
    assert (tmp_path / "games.pgn").exists() and (tmp_path / "z_by_round.svg").exists()


def test_wrap_as_subprocess(toy_engine, tmp_path):
    trace = tmp_path / "w.jsonl"
    cmd = [sys.executable, "-m", "stratmark.cli", "wrap", "--engine", " ".join(toy_engine),
           "--trace", str(trace)]
    script = "uci\nisready\nposition startpos moves e2e4\ngo depth 1\nisready\nquit\n"
    proc = subprocess.run(cmd, input=script, capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0, proc.stderr
    lines = proc.stdout.splitlines()
    assert "uciok" in lines and any(l.startswith("bestmove ") for l in lines)
    rec = MoveRecord.from_json(trace.read_text().splitlines()[0])
    assert rec.observation.endswith(b" b KQkq e3") and rec.action in rec.legal
