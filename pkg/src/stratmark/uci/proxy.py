"""A UCI front end that watermarks the moves of a wrapped engine.

The proxy passes the usual commands through to the engine, but answers
``go`` itself: it has the engine score every legal move with MultiPV,
applies the watermark to those scores and replies with the watermarked
``bestmove``.  Each decision can be appended to a trace file readable by
``stratmark detect``.
"""

from __future__ import annotations

import configparser
import logging
import os
import shlex
import sys
import threading
from dataclasses import dataclass, field
from typing import TextIO

from ..chessrules import Position, legal_ucis
from ..watermark import WatermarkParams
from .protocol import GoLimits, ProtocolError, parse_position_command
from .scoring import choose_move, score_all_moves
from .session import EngineError, EngineSession

log = logging.getLogger(__name__)

KEY_ENV = "STRATMARK_KEY"
NULL_MOVE = "0000"


@dataclass
class ProxyConfig:
    engine: list[str]
    params: WatermarkParams = field(default_factory=WatermarkParams)
    options: dict[str, str] = field(default_factory=dict)
    multipv_cap: int | None = None
    trace_path: str | None = None
    player: str = "watermarked"

    @classmethod
    def from_file(cls, path: str, env=os.environ) -> "ProxyConfig":
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        if not cp.read(path):
            raise FileNotFoundError(path)
        return cls.from_parser(cp, env)

    @classmethod
    def from_parser(cls, cp: configparser.ConfigParser, env=os.environ) -> "ProxyConfig":
        if "proxy" not in cp:
            raise ValueError("config needs a [proxy] section")
        sec = cp["proxy"]
        if "engine" not in sec:
            raise ValueError("[proxy] needs an 'engine' command")
        options = {k[len("option."):]: v for k, v in sec.items() if k.startswith("option.")}
        cap = sec.get("multipv_cap")
        return cls(
            engine=shlex.split(sec["engine"]),
            params=params_from_section(cp["watermark"] if "watermark" in cp else {}, env),
            options=options,
            multipv_cap=int(cap) if cap else None,
            trace_path=sec.get("trace") or None,
            player=sec.get("player", "watermarked"),
        )


def params_from_section(sec, env=os.environ) -> WatermarkParams:
    """Watermark parameters from a ``[watermark]`` section; the key comes from the environment."""
    key_env = sec.get("key_env", KEY_ENV) if sec else KEY_ENV
    return WatermarkParams(
        gamma=float(sec.get("gamma", 0.25)) if sec else 0.25,
        delta=float(sec.get("delta", 0.5)) if sec else 0.5,
        key=env.get(key_env, "").encode("utf-8"),
        min_branching=int(sec.get("min_branching", 2)) if sec else 2,
    )


class UciProxy:
    def __init__(self, config: ProxyConfig, out: TextIO = sys.stdout,
                 session: EngineSession | None = None):
        self.config = config
        self.out = out
        self.session = session
        self._out_lock = threading.Lock()
        self.position = Position.start()
        self.position_cmd = "position startpos"
        self.round = 0
        self._worker: threading.Thread | None = None
        self._trace = open(config.trace_path, "a") if config.trace_path else None
        self.dead = False
        self.decisions = []

    def emit(self, line: str) -> None:
        with self._out_lock:
            self.out.write(line + "\n")
            self.out.flush()

    def _engine(self) -> EngineSession:
        if self.session is None:
            self.session = EngineSession(self.config.engine, self.config.options).start()
        return self.session

    @property
    def searching(self) -> bool:
        return self._worker is not None and self._worker.is_alive()

    def _join(self) -> None:
        if self._worker is not None:
            self._worker.join()
            self._worker = None

    # -- command handlers --------------------------------------------------------------

    def handle(self, line: str) -> bool:
        """Process one GUI command; returns False once the proxy should exit."""
        line = line.strip()
        if not line:
            return True
        cmd = line.split()[0]
        try:
            if cmd == "quit":
                self.quit()
                return False
            if cmd == "uci":
                self.cmd_uci()
            elif cmd == "isready":
                if self.searching or self.dead:
                    self.emit("readyok")
                else:
                    self._engine().is_ready()
                    self.emit("readyok")
            elif cmd == "stop":
                if self.searching:
                    self.session.stop()
                self._join()
            elif cmd == "ponderhit":
                pass
            elif cmd == "debug" or cmd == "register":
                pass
            else:
                self._join()
                if cmd == "setoption":
                    self.cmd_setoption(line)
                elif cmd == "ucinewgame":
                    self.round += 1
                    if not self.dead:
                        self._engine().send("ucinewgame")
                elif cmd == "position":
                    self.cmd_position(line)
                elif cmd == "go":
                    self.cmd_go(line)
                else:
                    log.warning("ignoring unknown command %r", line)
        except EngineError as exc:
            self._engine_failed(exc, in_search=False)
        return True

    def cmd_uci(self) -> None:
        session = self._engine()
        for line in session.id_lines + session.option_lines:
            self.emit(line)
        self.emit("uciok")

    def cmd_setoption(self, line: str) -> None:
        tokens = line.split()
        if "name" not in tokens:
            log.warning("ignoring malformed setoption %r", line)
            return
        i = tokens.index("name")
        j = tokens.index("value") if "value" in tokens else len(tokens)
        name = " ".join(tokens[i + 1:j])
        if name.lower() == "multipv":
            log.info("MultiPV is managed by the proxy; ignoring %r", line)
            return
        self._engine().send(line)

    def cmd_position(self, line: str) -> None:
        try:
            self.position, _ = parse_position_command(line)
            self.position_cmd = line
        except ProtocolError as exc:
            log.warning("ignoring bad position command: %s", exc)

    def cmd_go(self, line: str) -> None:
        limits = GoLimits.parse(line)
        pos, pos_cmd = self.position, self.position_cmd
        if self.dead:
            self.emit(f"bestmove {NULL_MOVE}")
            return
        self._worker = threading.Thread(target=self._search, args=(pos, pos_cmd, limits),
                                        daemon=True)
        self._worker.start()

    def _search(self, pos: Position, pos_cmd: str, limits: GoLimits) -> None:
        try:
            legal = legal_ucis(pos)
            if not legal:
                self.emit(f"bestmove {NULL_MOVE}")
                return
            scored = score_all_moves(self._engine(), pos, limits, pos_cmd, self.config.multipv_cap)
            decision = choose_move(pos, scored, self.config.params, self.config.player, self.round)
            if decision.move not in legal:
                raise EngineError(f"internal error: chose illegal move {decision.move}")
            self.decisions.append(decision)
            if self._trace is not None:
                self._trace.write(decision.record.to_json() + "\n")
                self._trace.flush()
            if scored.depth is not None:
                self.emit(f"info depth {scored.depth} string watermark "
                          f"{'green' if decision.green else 'red' if decision.watermarked else 'pass'}")
            self.emit(f"bestmove {decision.move}")
        except EngineError as exc:
            self._engine_failed(exc)

    def _engine_failed(self, exc: EngineError, in_search: bool = True) -> None:
        log.error("engine failure: %s", exc)
        for line in exc.transcript[-20:]:
            log.error("  %s", line)
        self.dead = True
        self.emit(f"info string engine failure: {exc}")
        if in_search:
            # a null move tells the caller the game is forfeited
            self.emit(f"bestmove {NULL_MOVE}")

    def quit(self) -> None:
        if self.searching and self.session is not None:
            try:
                self.session.stop()
            except EngineError:
                pass
        self._join()
        if self.session is not None:
            self.session.close()
            self.session = None
        if self._trace is not None:
            self._trace.close()
            self._trace = None


def run_proxy(config: ProxyConfig, inp: TextIO = sys.stdin, out: TextIO = sys.stdout) -> int:
    """Serve UCI on ``inp``/``out`` until ``quit`` or end of input."""
    proxy = UciProxy(config, out)
    try:
        for line in inp:
            if not proxy.handle(line):
                break
    finally:
        proxy.quit()
    return 0
