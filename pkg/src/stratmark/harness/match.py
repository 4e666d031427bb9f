"""Engine-vs-engine matches from an opening book.

Each round is one game.  Openings are used in pairs: round ``2i`` plays
opening ``i`` with side A as White, round ``2i + 1`` replays it with colours
swapped.  Watermarked sides run in-process on top of an engine session (the
same scoring and choice code as the UCI proxy); plain sides play the engine's
own ``bestmove`` but search with the same MultiPV setting, so both sides pay
the same cost for multi-line search.
"""

from __future__ import annotations

import concurrent.futures
import configparser
import csv
import datetime as _dt
import io
import logging
import math
import os
import shlex
import threading
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from ..chessrules import (Move, PgnGame, Position, apply_move, emit_pgn, game_status,
                          legal_ucis, read_book)
from ..detect import DetectionReport, MoveRecord, RocCurve, analyze, roc
from ..uci.protocol import GoLimits, position_command
from ..uci.proxy import params_from_section
from ..uci.scoring import choose_move, score_all_moves
from ..uci.session import EngineError, EngineSession
from ..watermark import WatermarkParams, adjustment, partition_for
from .elo import EloResult, elo_and_loi

log = logging.getLogger(__name__)

DEFAULT_PLY_CAP = 300


def default_book() -> Path:
    return Path(str(resources.files("stratmark.data").joinpath("openings.fen")))


# -- configuration -------------------------------------------------------------------


@dataclass
class EngineSpec:
    """One side of a match.

    ``policy`` is ``plain`` (engine's bestmove), ``watermarked`` or ``topk``
    (uniform among the ``k`` best moves by watermarked score, an attacker
    that does not know the key).
    """

    name: str
    command: list[str]
    options: dict[str, str] = field(default_factory=dict)
    params: WatermarkParams | None = None
    policy: str = "plain"
    k: int = 1
    multipv_cap: int | None = None

    def __post_init__(self):
        if isinstance(self.command, str):
            self.command = shlex.split(self.command)
        if self.policy not in ("plain", "watermarked", "topk"):
            raise ValueError(f"unknown policy {self.policy!r}")
        if self.policy != "plain" and self.params is None:
            raise ValueError(f"side {self.name!r}: policy {self.policy} needs watermark parameters")
        if self.k < 1:
            raise ValueError("k must be at least 1")

    @property
    def watermarked(self) -> bool:
        return self.policy != "plain"


@dataclass
class TimeControl:
    """Per-move limit (movetime, nodes or depth) or ``moves`` in ``seconds`` clocks."""

    movetime: int | None = None
    nodes: int | None = None
    depth: int | None = None
    moves: int | None = None
    seconds: float | None = None

    def __post_init__(self):
        kinds = [self.movetime, self.nodes, self.depth, self.seconds]
        if sum(x is not None for x in kinds) != 1:
            raise ValueError("time control needs exactly one of movetime, nodes, depth or clock")
        for v in (self.movetime, self.nodes, self.depth, self.moves, self.seconds):
            if v is not None and v <= 0:
                raise ValueError("time control values must be positive")

    @classmethod
    def parse(cls, text: str) -> "TimeControl":
        """``movetime=100``, ``nodes=20000``, ``depth=8`` or ``40/60`` (moves/seconds)."""
        text = text.strip()
        if "/" in text:
            moves, secs = text.split("/", 1)
            return cls(moves=int(moves), seconds=float(secs))
        if "=" not in text:
            raise ValueError(f"bad time control {text!r}")
        kind, value = text.split("=", 1)
        kind = kind.strip()
        if kind not in ("movetime", "nodes", "depth"):
            raise ValueError(f"bad time control kind {kind!r}")
        return cls(**{kind: int(value)})

    def describe(self) -> str:
        if self.seconds is not None:
            return f"{self.moves or 0}/{self.seconds:g}"
        for kind in ("movetime", "nodes", "depth"):
            if getattr(self, kind) is not None:
                return f"{kind}={getattr(self, kind)}"
        return "?"

    @property
    def clocked(self) -> bool:
        return self.seconds is not None

    def limits(self, wtime_ms: float = 0, btime_ms: float = 0, moves_to_go: int | None = None) -> GoLimits:
        if self.movetime is not None:
            return GoLimits.movetime(self.movetime)
        if self.nodes is not None:
            return GoLimits.nodes(self.nodes)
        if self.depth is not None:
            return GoLimits.depth(self.depth)
        args = ["wtime", str(max(1, int(wtime_ms))), "btime", str(max(1, int(btime_ms)))]
        if moves_to_go:
            args += ["movestogo", str(moves_to_go)]
        return GoLimits(args)


@dataclass
class MatchConfig:
    side_a: EngineSpec
    side_b: EngineSpec
    rounds: int = 20
    book: str | Path | None = None
    time_control: TimeControl = field(default_factory=lambda: TimeControl(movetime=100))
    ply_cap: int = DEFAULT_PLY_CAP
    workers: int = 1
    out_dir: str | Path | None = None
    event: str = "stratmark match"
    seed: int = 0

    def __post_init__(self):
        if self.rounds < 1:
            raise ValueError("rounds must be at least 1")
        if self.ply_cap < 1:
            raise ValueError("ply cap must be at least 1")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        if self.side_a.name == self.side_b.name:
            raise ValueError("the two sides need distinct names")

    def openings(self) -> list[Position]:
        book = read_book(self.book or default_book())
        if not book:
            raise ValueError("opening book is empty")
        return book

    @property
    def detection_params(self) -> WatermarkParams:
        """Parameters the detector uses for both sides: those of the watermarked side."""
        for side in (self.side_a, self.side_b):
            if side.params is not None:
                return side.params
        return WatermarkParams()

    @classmethod
    def from_file(cls, path: str | Path, env=os.environ, **overrides) -> "MatchConfig":
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        if not cp.read(path):
            raise FileNotFoundError(path)
        return cls.from_parser(cp, env, base=Path(path).parent, **overrides)

    @classmethod
    def from_parser(cls, cp: configparser.ConfigParser, env=os.environ, base: Path | None = None,
                    **overrides) -> "MatchConfig":
        """Build from ``[match]``, ``[side.a]``, ``[side.b]`` and ``[watermark]`` sections."""
        if "match" not in cp:
            raise ValueError("config needs a [match] section")
        m = cp["match"]
        wm = cp["watermark"] if "watermark" in cp else None
        params = params_from_section(wm, env)
        sides = []
        for sec_name in ("side.a", "side.b"):
            if sec_name not in cp:
                raise ValueError(f"config needs a [{sec_name}] section")
            s = cp[sec_name]
            if "engine" not in s:
                raise ValueError(f"[{sec_name}] needs an 'engine' command")
            policy = s.get("policy", "plain")
            cap = s.get("multipv_cap")
            sides.append(EngineSpec(
                name=s.get("name", sec_name),
                command=shlex.split(s["engine"]),
                options={k[len("option."):]: v for k, v in s.items() if k.startswith("option.")},
                params=params if policy != "plain" else None,
                policy=policy,
                k=int(s.get("k", 1)),
                multipv_cap=int(cap) if cap else None,
            ))
        book = m.get("book") or None
        if book and base is not None and not Path(book).is_absolute():
            book = base / book
        out_dir = m.get("out_dir") or None
        if out_dir and base is not None and not Path(out_dir).is_absolute():
            out_dir = base / out_dir
        kw = dict(
            rounds=m.getint("rounds", 20),
            book=book,
            time_control=TimeControl.parse(m.get("time_control", "movetime=100")),
            ply_cap=m.getint("ply_cap", DEFAULT_PLY_CAP),
            workers=m.getint("workers", 1),
            out_dir=out_dir,
            event=m.get("event", "stratmark match"),
            seed=m.getint("seed", 0),
        )
        kw.update({k: v for k, v in overrides.items() if v is not None})
        return cls(sides[0], sides[1], **kw)


# -- players -------------------------------------------------------------------------


class Player:
    """An engine session plus the move-selection policy of one side."""

    def __init__(self, spec: EngineSpec, seed: int = 0):
        self.spec = spec
        self.session: EngineSession | None = None
        self.rng = np.random.default_rng(seed)

    def start(self) -> "Player":
        self.session = EngineSession(self.spec.command, self.spec.options, name=self.spec.name).start()
        return self

    def close(self) -> None:
        if self.session is not None:
            self.session.close()
            self.session = None

    def new_game(self) -> None:
        if self.session is None or not self.session.alive:
            self.close()
            self.start()
        self.session.new_game()

    def _multipv(self, n_legal: int) -> int:
        k = min(n_legal, self.session.max_multipv)
        if self.spec.multipv_cap is not None:
            k = min(k, self.spec.multipv_cap)
        return k

    def choose(self, pos: Position, pos_cmd: str, limits: GoLimits) -> str:
        legal = legal_ucis(pos)
        if self.spec.policy == "plain":
            self.session.ensure_multipv(self._multipv(len(legal)))
            return self.session.search(pos_cmd, limits, pos.white_to_move).bestmove
        scored = score_all_moves(self.session, pos, limits, pos_cmd, self.spec.multipv_cap)
        if self.spec.policy == "watermarked":
            return choose_move(pos, scored, self.spec.params).move
        # top-k attacker: rank scored moves by watermarked value, sample uniformly
        part = partition_for(pos.observation(), legal, self.spec.params)
        cands = [m for m in legal if m in scored.scores]
        def wval(m):
            v = scored.scores[m]
            return v if part is None else v + adjustment(part.is_green(m), self.spec.params)
        green = (lambda m: part is not None and part.is_green(m))
        ranked = sorted(cands, key=lambda m: (-wval(m), not green(m)))
        top = ranked[: min(self.spec.k, len(ranked))]
        return top[int(self.rng.integers(len(top)))]


# -- rounds --------------------------------------------------------------------------


@dataclass
class RoundResult:
    index: int
    opening: int
    a_is_white: bool
    score_a: float            # 1, 0.5 or 0 from side A's point of view
    termination: str
    game: PgnGame
    records: list[MoveRecord]

    @property
    def result(self) -> str:
        return self.game.result


def _result_string(white_score: float) -> str:
    return {1.0: "1-0", 0.0: "0-1", 0.5: "1/2-1/2"}[white_score]


def play_round(a: Player, b: Player, opening: Position, tc: TimeControl, index: int = 0,
               a_is_white: bool = True, ply_cap: int = DEFAULT_PLY_CAP, opening_index: int = 0,
               event: str = "stratmark match") -> RoundResult:
    """Play one game; engine failures and illegal moves forfeit the game."""
    white, black = (a, b) if a_is_white else (b, a)
    for p in (white, black):
        p.new_game()
    pos = opening
    moves: list[Move] = []
    ucis: list[str] = []
    clocks = {True: (tc.seconds or 0) * 1000.0, False: (tc.seconds or 0) * 1000.0}
    white_score = None
    termination = "normal"
    while True:
        status = game_status(pos)
        if status.is_over:
            if status.is_draw:
                white_score = 0.5
            else:
                white_score = 0.0 if pos.white_to_move else 1.0
            termination = status.kind
            break
        if len(moves) >= ply_cap:
            white_score, termination = 0.5, "ply cap"
            break
        mover = white if pos.white_to_move else black
        pos_cmd = position_command(opening, ucis)
        mtg = None
        if tc.clocked and tc.moves:
            played = (len(moves) + (0 if pos.white_to_move == opening.white_to_move else 1)) // 2
            mtg = tc.moves - played % tc.moves
        limits = tc.limits(clocks[True], clocks[False], mtg)
        t0 = time.monotonic()
        try:
            uci = mover.choose(pos, pos_cmd, limits)
        except EngineError as exc:
            log.error("round %d: %s failed: %s", index, mover.spec.name, exc)
            white_score = 0.0 if pos.white_to_move else 1.0
            termination = f"forfeit: {mover.spec.name} engine failure"
            mover.close()
            break
        elapsed = (time.monotonic() - t0) * 1000.0
        if uci not in legal_ucis(pos):
            log.error("round %d: %s played illegal move %r", index, mover.spec.name, uci)
            white_score = 0.0 if pos.white_to_move else 1.0
            termination = f"forfeit: {mover.spec.name} illegal move {uci}"
            break
        if tc.clocked:
            clocks[pos.white_to_move] -= elapsed
            if clocks[pos.white_to_move] < 0:
                white_score = 0.0 if pos.white_to_move else 1.0
                termination = f"time forfeit: {mover.spec.name}"
                break
            if tc.moves:
                played = (len(moves) + (0 if pos.white_to_move == opening.white_to_move else 1)) // 2 + 1
                if played % tc.moves == 0:
                    clocks[pos.white_to_move] += tc.seconds * 1000.0
        move = Move.from_uci(uci)
        moves.append(move)
        ucis.append(uci)
        pos = apply_move(pos, move, check_legal=False)
    game = PgnGame(tags={
        "Event": event,
        "Site": "local",
        "Date": _dt.date.today().strftime("%Y.%m.%d"),
        "Round": str(index + 1),
        "White": white.spec.name,
        "Black": black.spec.name,
        "Result": _result_string(white_score),
        "Opening": str(opening_index + 1),
        "TimeControl": tc.describe(),
        "Termination": termination,
    }, start=opening, moves=moves)
    score_a = white_score if a_is_white else 1.0 - white_score
    return RoundResult(index, opening_index, a_is_white, score_a, termination, game, game.records(index + 1))


# -- matches -------------------------------------------------------------------------


@dataclass
class MatchReport:
    config: MatchConfig
    rounds: list[RoundResult]
    complete: bool = True
    errors: list[str] = field(default_factory=list)
    stats: EloResult | None = None
    detection_a: DetectionReport | None = None
    detection_b: DetectionReport | None = None
    round_z_a: list[float] = field(default_factory=list)
    round_z_b: list[float] = field(default_factory=list)
    curve: RocCurve | None = None

    @property
    def wins(self) -> int:
        return sum(r.score_a == 1.0 for r in self.rounds)

    @property
    def draws(self) -> int:
        return sum(r.score_a == 0.5 for r in self.rounds)

    @property
    def losses(self) -> int:
        return sum(r.score_a == 0.0 for r in self.rounds)

    @property
    def watermarked_side(self) -> str:
        a, b = self.config.side_a, self.config.side_b
        return "b" if b.watermarked and not a.watermarked else "a"

    def side(self, which: str) -> tuple[EngineSpec, DetectionReport, list[float]]:
        if which == "a":
            return self.config.side_a, self.detection_a, self.round_z_a
        return self.config.side_b, self.detection_b, self.round_z_b

    @property
    def auc(self) -> float:
        return math.nan if self.curve is None else self.curve.auc

    def records(self) -> list[MoveRecord]:
        return [rec for r in self.rounds for rec in r.records]

    def pgn(self) -> str:
        return "\n".join(emit_pgn(r.game) for r in self.rounds)

    def z_csv(self) -> str:
        """Cumulative z of both sides after each round."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["round", "side", "player", "n", "n_G", "z", "p"])
        for which in ("a", "b"):
            spec, det, _ = self.side(which)
            for pt in det.by_round if det else []:
                w.writerow([pt.round, which, spec.name, pt.n, pt.n_green, f"{pt.z:.6f}", f"{pt.p:.6g}"])
        return buf.getvalue()

    def rounds_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["round", "opening", "white", "black", "result", "score_a", "plies", "termination",
                    "round_z_a", "round_z_b"])
        for r, za, zb in zip(self.rounds, self.round_z_a, self.round_z_b):
            w.writerow([r.index + 1, r.opening + 1, r.game.tags["White"], r.game.tags["Black"], r.result,
                        r.score_a, len(r.game.moves), r.termination, f"{za:.6f}", f"{zb:.6f}"])
        return buf.getvalue()

    def table_row(self) -> dict:
        """Summary row: Elo and LOI from the watermarked side's point of view."""
        wm = self.watermarked_side
        clean = "b" if wm == "a" else "a"
        st = self.stats if wm == "a" else elo_and_loi(self.losses, self.draws, self.wins)
        _, det_w, _ = self.side(wm)
        _, det_c, _ = self.side(clean)
        return {
            "engine": self.side(wm)[0].name,
            "elo": st.elo, "margin": st.margin, "loi": st.loi, "draws": self.draws,
            "z_nw": det_c.z if det_c else math.nan, "z_w": det_w.z if det_w else math.nan,
            "auc": self.auc, "rounds": len(self.rounds), "complete": self.complete,
        }

    def table_csv(self) -> str:
        row = self.table_row()
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(list(row))
        w.writerow([_fmt(v) for v in row.values()])
        return buf.getvalue()

    def summary(self) -> str:
        row = self.table_row()
        lines = [
            f"{self.config.side_a.name} vs {self.config.side_b.name}: {len(self.rounds)} rounds"
            + ("" if self.complete else " (INCOMPLETE)"),
            f"side A score: +{self.wins} ={self.draws} -{self.losses}",
            f"Elo (watermarked side): {self.stats_for_watermarked().format()}  LOI {row['loi']:.1%}",
        ]
        for which in ("a", "b"):
            spec, det, _ = self.side(which)
            if det is None:
                continue
            cross = det.first_crossing(by="round")
            lines.append(
                f"{spec.name} ({spec.policy}): z = {det.z:.2f} over n = {det.n}"
                + (f", crossed {det.threshold:g} after round {cross.round}" if cross else "")
            )
        if self.curve is not None:
            lines.append(f"per-round AUC = {self.curve.auc:.3f}")
        for e in self.errors:
            lines.append(f"error: {e}")
        return "\n".join(lines)

    def stats_for_watermarked(self) -> EloResult:
        if self.watermarked_side == "a":
            return self.stats
        return elo_and_loi(self.losses, self.draws, self.wins)

    def write(self, out_dir: str | Path) -> dict[str, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {
            "pgn": out / "games.pgn",
            "trace": out / "trace.jsonl",
            "z": out / "z_by_round.csv",
            "rounds": out / "rounds.csv",
            "table": out / "table.csv",
        }
        paths["pgn"].write_text(self.pgn())
        paths["trace"].write_text("".join(r.to_json() + "\n" for r in self.records()))
        paths["z"].write_text(self.z_csv())
        paths["rounds"].write_text(self.rounds_csv())
        paths["table"].write_text(self.table_csv())
        if self.curve is not None:
            paths["roc"] = out / "roc.csv"
            paths["roc"].write_text(self.curve.to_csv())
        return paths


def _fmt(v) -> str:
    if isinstance(v, float):
        return "inf" if math.isinf(v) and v > 0 else "-inf" if math.isinf(v) else f"{v:.6g}"
    return str(v)


def summarize(config: MatchConfig, rounds: list[RoundResult], complete: bool = True,
              errors: list[str] | None = None, threshold: float = 4.0) -> MatchReport:
    rounds = sorted(rounds, key=lambda r: r.index)
    report = MatchReport(config, rounds, complete, list(errors or []))
    if not rounds:
        return report
    report.stats = elo_and_loi(report.wins, report.draws, report.losses)
    params = config.detection_params
    records = report.records()
    report.detection_a = analyze(records, params, config.side_a.name, threshold)
    report.detection_b = analyze(records, params, config.side_b.name, threshold)
    for r in rounds:
        za = analyze(r.records, params, config.side_a.name, threshold)
        zb = analyze(r.records, params, config.side_b.name, threshold)
        report.round_z_a.append(0.0 if za.insufficient else za.z)
        report.round_z_b.append(0.0 if zb.insufficient else zb.z)
    wm, clean = (report.round_z_b, report.round_z_a) if report.watermarked_side == "b" \
        else (report.round_z_a, report.round_z_b)
    report.curve = roc(wm, clean)
    return report


def schedule(config: MatchConfig) -> list[tuple[int, int, bool]]:
    """(round index, opening index, side A is White) for every round."""
    n_open = len(config.openings())
    return [(i, (i // 2) % n_open, i % 2 == 0) for i in range(config.rounds)]


def play_match(config: MatchConfig, threshold: float = 4.0, progress=None) -> MatchReport:
    """Play every round and aggregate the report; outputs go to ``config.out_dir``.

    With several workers each worker thread owns its own pair of engine
    processes.  Aggregation is by round index, so the report does not
    depend on completion order.
    """
    openings = config.openings()
    plan = schedule(config)
    local = threading.local()
    all_players: list[Player] = []
    lock = threading.Lock()

    def players():
        if not hasattr(local, "pair"):
            wid = len(all_players)
            pa = Player(config.side_a, seed=config.seed * 7919 + 2 * wid)
            pb = Player(config.side_b, seed=config.seed * 7919 + 2 * wid + 1)
            with lock:
                all_players.extend([pa, pb])
            local.pair = (pa.start(), pb.start())
        return local.pair

    def run(item):
        idx, op, a_white = item
        pa, pb = players()
        res = play_round(pa, pb, openings[op], config.time_control, idx, a_white, config.ply_cap, op,
                         config.event)
        if progress:
            progress(res)
        return res

    results, errors = [], []
    complete = True
    try:
        if config.workers == 1:
            for item in plan:
                results.append(run(item))
        else:
            with concurrent.futures.ThreadPoolExecutor(config.workers) as pool:
                futures = [pool.submit(run, item) for item in plan]
                for fut in futures:
                    try:
                        results.append(fut.result())
                    except EngineError as exc:
                        complete = False
                        errors.append(str(exc))
    except (EngineError, KeyboardInterrupt) as exc:
        complete = False
        errors.append(str(exc) or type(exc).__name__)
        log.error("match aborted: %s", exc)
    finally:
        for p in all_players:
            p.close()
    report = summarize(config, results, complete, errors, threshold)
    if config.out_dir is not None and results:
        report.write(config.out_dir)
    return report
