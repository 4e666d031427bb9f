"""Detecting the watermark from recorded play.

Detection replays the public partition recipe at every recorded decision of
the suspected player and runs a one-sided z-test on the green count.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence, TextIO

from .watermark import (ContractError, WatermarkParams, check_canonical, green_size,
                        partition_for)

DEFAULT_THRESHOLD = 4.0


class TraceError(ValueError):
    """A recorded move is inconsistent with its own legal-action list."""


class Membership(enum.Enum):
    GREEN = "green"
    RED = "red"
    SKIPPED = "skipped"


@dataclass(frozen=True)
class MoveRecord:
    observation: bytes
    legal: tuple[str, ...]
    action: str
    player: int | str = 0
    round: int = 0
    move: int = 0

    def to_json(self) -> str:
        return json.dumps({
            "obs": self.observation.hex(),
            "legal": list(self.legal),
            "action": self.action,
            "player": self.player,
            "round": self.round,
            "move": self.move,
        }, separators=(",", ":"))

    @classmethod
    def from_json(cls, line: str) -> "MoveRecord":
        d = json.loads(line)
        try:
            return cls(
                observation=bytes.fromhex(d["obs"]),
                legal=tuple(d["legal"]),
                action=d["action"],
                player=d.get("player", 0),
                round=int(d.get("round", 0)),
                move=int(d.get("move", 0)),
            )
        except (KeyError, ValueError, TypeError, AttributeError) as exc:
            raise TraceError(f"malformed trace record: {exc!r}") from exc


def read_trace(fp: TextIO) -> Iterator[MoveRecord]:
    for lineno, line in enumerate(fp, 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            yield MoveRecord.from_json(line)
        except (json.JSONDecodeError, TraceError) as exc:
            raise TraceError(f"line {lineno}: {exc}") from exc


def write_trace(fp: TextIO, records: Iterable[MoveRecord]) -> None:
    for rec in records:
        fp.write(rec.to_json() + "\n")


# -- statistics ------------------------------------------------------------------


def z_score(n_green: int, n: int, gamma: float) -> float:
    if n < 1:
        raise ValueError("insufficient data: no counted decisions")
    if not 0 <= n_green <= n:
        raise ValueError(f"green count {n_green} outside [0, {n}]")
    return (n_green - gamma * n) / math.sqrt(n * gamma * (1.0 - gamma))


def p_value(z: float) -> float:
    """Upper tail of the standard normal, ``erfc(z / sqrt 2) / 2``."""
    return 0.5 * math.erfc(z / math.sqrt(2.0))


# -- per-move classification ------------------------------------------------------


def classify_move(rec: MoveRecord, params: WatermarkParams) -> Membership:
    if rec.action not in rec.legal:
        raise TraceError(
            f"round {rec.round} move {rec.move}: played {rec.action!r} is not among "
            f"{len(rec.legal)} legal actions"
        )
    try:
        check_canonical(rec.legal)
    except ContractError as exc:
        raise TraceError(f"round {rec.round} move {rec.move}: {exc}") from exc
    part = partition_for(rec.observation, rec.legal, params)
    if part is None:
        return Membership.SKIPPED
    return Membership.GREEN if part.is_green(rec.action) else Membership.RED


@dataclass
class TracePoint:
    round: int
    move: int
    n: int
    n_green: int
    z: float
    p: float


@dataclass
class DetectionReport:
    gamma: float
    threshold: float = DEFAULT_THRESHOLD
    n: int = 0
    n_green: int = 0
    skipped: int = 0
    # sum of g/|A| over counted decisions: the exact null expectation of n_G
    expected_green: float = 0.0
    null_variance: float = 0.0
    by_move: list[TracePoint] = field(default_factory=list)
    by_round: list[TracePoint] = field(default_factory=list)

    @property
    def insufficient(self) -> bool:
        return self.n == 0

    @property
    def n_red(self) -> int:
        return self.n - self.n_green

    @property
    def z(self) -> float:
        return math.nan if self.insufficient else z_score(self.n_green, self.n, self.gamma)

    @property
    def p_value(self) -> float:
        return math.nan if self.insufficient else p_value(self.z)

    @property
    def null_rate(self) -> float:
        """Green rate expected from a watermark-oblivious player.

        It differs from gamma when rounding ``gamma * |A|`` is not exact.
        """
        return math.nan if self.insufficient else self.expected_green / self.n

    @property
    def z_exact(self) -> float:
        """z against the exact per-decision null rates ``g/|A|``."""
        if self.insufficient or self.null_variance == 0:
            return math.nan
        return (self.n_green - self.expected_green) / math.sqrt(self.null_variance)

    @property
    def detected(self) -> bool:
        return not self.insufficient and self.z >= self.threshold

    @property
    def green_rate(self) -> float:
        return math.nan if self.insufficient else self.n_green / self.n

    def first_crossing(self, by: str = "move") -> TracePoint | None:
        """First trace point at which z reaches the threshold."""
        points = self.by_move if by == "move" else self.by_round
        return next((pt for pt in points if pt.z >= self.threshold), None)

    def verdict(self) -> str:
        if self.insufficient:
            return "insufficient data"
        return "watermark detected" if self.detected else "no watermark detected"

    def summary(self) -> str:
        lines = [
            f"counted decisions n = {self.n}",
            f"green decisions n_G = {self.n_green}",
            f"skipped (forced) = {self.skipped}",
        ]
        if self.insufficient:
            lines.append("z = n/a (insufficient data)")
        else:
            lines.append(f"z = {self.z:.2f}")
            lines.append(f"p = {self.p_value:.3g}")
            lines.append(f"green rate = {self.green_rate:.4f} (oblivious play expects "
                         f"{self.null_rate:.4f}; z against that = {self.z_exact:.2f})")
        lines.append(f"verdict at z >= {self.threshold:g}: {self.verdict()}")
        return "\n".join(lines)

    def to_csv(self, by: str = "move") -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["round", "move", "n", "n_G", "z", "p"])
        for pt in self.by_move if by == "move" else self.by_round:
            w.writerow([pt.round, pt.move, pt.n, pt.n_green, f"{pt.z:.6f}", f"{pt.p:.6g}"])
        return buf.getvalue()


def analyze(records: Iterable[MoveRecord], params: WatermarkParams, player=None,
            threshold: float = DEFAULT_THRESHOLD) -> DetectionReport:
    """Pooled, cumulative detection over a chronological record stream.

    Only records of ``player`` are counted (all records if None).  The
    by-round trace holds the cumulative statistic after each round's last
    counted decision.
    """
    report = DetectionReport(gamma=params.gamma, threshold=threshold)
    for rec in records:
        if player is not None and rec.player != player:
            continue
        m = classify_move(rec, params)
        if m is Membership.SKIPPED:
            report.skipped += 1
            continue
        report.n += 1
        report.n_green += m is Membership.GREEN
        r = green_size(len(rec.legal), params.gamma) / len(rec.legal)
        report.expected_green += r
        report.null_variance += r * (1 - r)
        z = z_score(report.n_green, report.n, params.gamma)
        pt = TracePoint(rec.round, rec.move, report.n, report.n_green, z, p_value(z))
        report.by_move.append(pt)
        if report.by_round and report.by_round[-1].round == rec.round:
            report.by_round[-1] = pt
        else:
            report.by_round.append(pt)
    return report


# -- ROC --------------------------------------------------------------------------


@dataclass
class RocCurve:
    thresholds: list[float]
    fpr: list[float]
    tpr: list[float]
    auc: float

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["threshold", "fpr", "tpr"])
        for t, f, p in zip(self.thresholds, self.fpr, self.tpr):
            w.writerow([t if math.isinf(t) else f"{t:.6f}", f"{f:.6f}", f"{p:.6f}"])
        return buf.getvalue()


def roc(z_watermarked: Sequence[float], z_clean: Sequence[float]) -> RocCurve:
    """ROC of the rule ``z >= threshold`` swept over every observed z.

    The trapezoidal area counts ties between a watermarked and a clean score
    as half a win.
    """
    if not z_watermarked or not z_clean:
        raise ContractError("both score lists must be non-empty")
    pos = sorted(z_watermarked)
    neg = sorted(z_clean)
    thresholds = [math.inf] + sorted(set(pos) | set(neg), reverse=True)
    fpr, tpr = [], []
    for t in thresholds:
        tpr.append(sum(1 for z in pos if z >= t) / len(pos))
        fpr.append(sum(1 for z in neg if z >= t) / len(neg))
    auc = 0.0
    for i in range(1, len(thresholds)):
        auc += (fpr[i] - fpr[i - 1]) * (tpr[i] + tpr[i - 1]) / 2.0
    return RocCurve(thresholds, fpr, tpr, auc)
