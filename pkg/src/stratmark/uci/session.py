"""Driving a UCI engine subprocess."""

from __future__ import annotations

import collections
import logging
import queue
import shlex
import subprocess
import threading
import time
from dataclasses import dataclass, field

from .protocol import GoLimits, InfoLine, ProtocolError, parse_info

log = logging.getLogger(__name__)

DEFAULT_TIMEOUT = 30.0
# extra seconds allowed on top of a time-limited search
SEARCH_SLACK = 10.0
# wait for searches limited by nodes or depth
UNTIMED_SEARCH_TIMEOUT = 300.0


class EngineError(RuntimeError):
    """The engine died, timed out or broke the protocol."""

    def __init__(self, message: str, transcript: list[str] | None = None):
        super().__init__(message)
        self.transcript = transcript or []


@dataclass
class EngineOption:
    name: str
    type: str
    default: str | None = None
    min: int | None = None
    max: int | None = None

    @classmethod
    def parse(cls, line: str) -> "EngineOption | None":
        tokens = line.split()
        if len(tokens) < 5 or tokens[0] != "option" or tokens[1] != "name":
            return None
        try:
            t = tokens.index("type")
        except ValueError:
            return None
        name = " ".join(tokens[2:t])
        opt = cls(name=name, type=tokens[t + 1] if t + 1 < len(tokens) else "")
        rest = tokens[t + 2:]
        for key in ("default", "min", "max"):
            if key in rest:
                i = rest.index(key)
                if i + 1 < len(rest):
                    val = rest[i + 1]
                    if key == "default":
                        opt.default = val
                    else:
                        try:
                            setattr(opt, key, int(val))
                        except ValueError:
                            pass
        return opt


@dataclass
class SearchResult:
    bestmove: str
    infos: list[InfoLine] = field(default_factory=list)
    lines: list[str] = field(default_factory=list)


class EngineSession:
    """One engine process with a background reader and serialized writes."""

    def __init__(self, command: list[str] | str, options: dict[str, str] | None = None,
                 timeout: float = DEFAULT_TIMEOUT, name: str | None = None):
        if isinstance(command, str):
            command = shlex.split(command)
        self.command = list(command)
        self.options = dict(options or {})
        self.timeout = timeout
        self.name = name or self.command[0]
        self.id_lines: list[str] = []
        self.option_lines: list[str] = []
        self.declared: dict[str, EngineOption] = {}
        self.transcript: collections.deque[str] = collections.deque(maxlen=400)
        self._lines: queue.Queue = queue.Queue()
        self._write_lock = threading.Lock()
        self._search_lock = threading.Lock()
        self._multipv: int | None = None
        self.proc = None
        self._reader = None

    # -- lifecycle ----------------------------------------------------------------

    def start(self) -> "EngineSession":
        try:
            self.proc = subprocess.Popen(
                self.command, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL, text=True, bufsize=1,
            )
        except OSError as exc:
            raise EngineError(f"cannot start engine {self.command}: {exc}") from exc
        self._reader = threading.Thread(target=self._pump, name=f"uci-reader-{self.name}",
                                        daemon=True)
        self._reader.start()
        self.handshake()
        return self

    def _pump(self) -> None:
        assert self.proc is not None and self.proc.stdout is not None
        for line in self.proc.stdout:
            self._lines.put(line.rstrip("\r\n"))
        self._lines.put(None)

    def __enter__(self):
        return self.start() if self.proc is None else self

    def __exit__(self, *exc):
        self.close()

    def close(self) -> None:
        if self.proc is None:
            return
        if self.proc.poll() is None:
            try:
                self.send("quit")
            except EngineError:
                pass
            try:
                self.proc.wait(timeout=3)
            except subprocess.TimeoutExpired:
                self.proc.kill()
                self.proc.wait()
        self.proc = None

    @property
    def alive(self) -> bool:
        return self.proc is not None and self.proc.poll() is None

    # -- raw I/O ------------------------------------------------------------------------

    def send(self, line: str) -> None:
        if self.proc is None or self.proc.stdin is None:
            raise EngineError("engine not started")
        with self._write_lock:
            self.transcript.append(f"> {line}")
            try:
                self.proc.stdin.write(line + "\n")
                self.proc.stdin.flush()
            except (BrokenPipeError, OSError) as exc:
                raise EngineError(f"engine pipe closed: {exc}", list(self.transcript)) from exc

    def read_line(self, timeout: float | None = None) -> str:
        try:
            line = self._lines.get(timeout=self.timeout if timeout is None else timeout)
        except queue.Empty:
            raise EngineError(f"engine {self.name} timed out", list(self.transcript)) from None
        if line is None:
            self._lines.put(None)
            raise EngineError(f"engine {self.name} exited", list(self.transcript))
        self.transcript.append(f"< {line}")
        return line

    def wait_for(self, token: str, timeout: float | None = None) -> list[str]:
        """Read until a line whose first word is ``token``; returns all lines read."""
        deadline = time.monotonic() + (self.timeout if timeout is None else timeout)
        lines = []
        while True:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise EngineError(f"engine {self.name} did not send {token!r}",
                                  list(self.transcript))
            line = self.read_line(remaining)
            lines.append(line)
            if line.split(" ", 1)[0] == token:
                return lines

    # -- protocol -----------------------------------------------------------------------

    def handshake(self) -> None:
        self.send("uci")
        for line in self.wait_for("uciok"):
            if line.startswith("id "):
                self.id_lines.append(line)
            elif line.startswith("option "):
                self.option_lines.append(line)
                opt = EngineOption.parse(line)
                if opt:
                    self.declared[opt.name.lower()] = opt
        for name, value in self.options.items():
            self.set_option(name, value)
        self.is_ready()

    def set_option(self, name: str, value) -> None:
        if name.lower() == "multipv":
            self._multipv = int(value)
        if value is None or value == "":
            self.send(f"setoption name {name}")
        else:
            self.send(f"setoption name {name} value {value}")

    def is_ready(self, timeout: float | None = None) -> None:
        self.send("isready")
        self.wait_for("readyok", timeout)

    def new_game(self) -> None:
        self.send("ucinewgame")
        self.is_ready()

    @property
    def max_multipv(self) -> int:
        opt = self.declared.get("multipv")
        if opt is None:
            return 1
        return opt.max or 1

    def ensure_multipv(self, k: int) -> None:
        if "multipv" not in self.declared:
            return
        if self._multipv != k:
            self.set_option("MultiPV", k)

    def search(self, position_cmd: str, limits: GoLimits, white_to_move: bool = True) -> SearchResult:
        """Run one ``go`` and collect its output up to ``bestmove``."""
        with self._search_lock:
            self.send(position_cmd)
            self.send(limits.command())
            budget = limits.budget_seconds(white_to_move)
            if limits.infinite:
                timeout = None
            elif budget is not None:
                timeout = budget + SEARCH_SLACK
            else:
                timeout = UNTIMED_SEARCH_TIMEOUT
            lines = self.wait_for("bestmove", timeout=timeout if timeout is not None else 1e9)
            infos = []
            for line in lines:
                try:
                    info = parse_info(line)
                except (ProtocolError, ValueError) as exc:
                    log.warning("ignoring malformed info line %r: %s", line, exc)
                    continue
                if info is not None:
                    infos.append(info)
            tokens = lines[-1].split()
            if len(tokens) < 2:
                raise EngineError("bestmove without a move", list(self.transcript))
            return SearchResult(tokens[1], infos, lines)

    def stop(self) -> None:
        self.send("stop")
