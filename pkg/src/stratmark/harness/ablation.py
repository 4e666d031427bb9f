"""γ/δ ablation grids over synthetic decision streams or engine matches."""

from __future__ import annotations

import csv
import dataclasses
import io
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from ..detect import roc
from ..watermark import WatermarkParams
from .elo import elo_and_loi
from .match import MatchConfig, play_match
from .synthetic import simulate

log = logging.getLogger(__name__)

COLUMNS = ["gamma", "delta", "elo", "margin", "loi", "draws", "z_nw", "z_w", "auc", "rounds", "error"]


@dataclass
class CellResult:
    gamma: float
    delta: float
    elo: float = math.nan
    margin: float = math.nan
    loi: float = math.nan
    draws: int = 0
    z_nw: float = math.nan
    z_w: float = math.nan
    auc: float = math.nan
    rounds: int = 0
    error: str = ""

    def row(self) -> list[str]:
        out = []
        for name in COLUMNS:
            v = getattr(self, name)
            out.append(f"{v:.6g}" if isinstance(v, float) else str(v))
        return out


@dataclass
class SyntheticMatch:
    """Toy match model on synthetic decisions.

    Each round both sides face ``decisions`` fresh decisions with iid
    Uniform(0, spread) values: the watermarked side picks by watermarked
    value, the clean side by raw value.  A side's game total is minus its
    summed regret plus Gaussian noise of scale ``noise``; the higher total
    wins, totals within ``draw_band`` of each other are a draw.  The default
    branching of 20 makes the green fraction exactly γ for every γ on a
    0.05 grid, so the clean side's z is centred on 0.
    """

    rounds: int = 100
    decisions: int = 40
    branching: int = 20
    spread: float = 10.0
    noise: float = 20.0
    draw_band: float = 5.0
    seed: int = 0

    def play(self, params: WatermarkParams) -> CellResult:
        cell = CellResult(params.gamma, params.delta, rounds=self.rounds)
        # the watermarked and clean sides use disjoint observation streams
        wm = simulate("watermarked", self.rounds, self.decisions, params, self.branching,
                      spread=self.spread, seed=self.seed, stream=1)
        cl = simulate("oblivious", self.rounds, self.decisions, params, self.branching,
                      spread=self.spread, seed=self.seed, stream=2)
        rng = np.random.default_rng([self.seed, 3])
        diff = (cl.regret.sum(axis=1) - wm.regret.sum(axis=1)
                + rng.normal(0, self.noise, self.rounds) - rng.normal(0, self.noise, self.rounds))
        wins = int((diff > self.draw_band).sum())
        losses = int((diff < -self.draw_band).sum())
        draws = self.rounds - wins - losses
        st = elo_and_loi(wins, draws, losses)
        cell.elo, cell.margin, cell.loi, cell.draws = st.elo, st.margin, st.loi, draws
        n = self.rounds * self.decisions
        cell.z_w = float(_z(wm.green.sum(), n, params.gamma))
        cell.z_nw = float(_z(cl.green.sum(), n, params.gamma))
        cell.auc = roc(list(wm.z_final()), list(cl.z_final())).auc
        return cell


def _z(n_green, n, gamma):
    return (n_green - gamma * n) / math.sqrt(n * gamma * (1 - gamma))


def _engine_cell(base: MatchConfig, params: WatermarkParams, out_dir=None) -> CellResult:
    cell = CellResult(params.gamma, params.delta)
    a, b = base.side_a, base.side_b
    if b.watermarked and not a.watermarked:
        b = dataclasses.replace(b, params=params)
    else:
        a = dataclasses.replace(a, params=params, policy="watermarked" if not a.watermarked else a.policy)
    cfg = dataclasses.replace(base, side_a=a, side_b=b, out_dir=out_dir)
    rep = play_match(cfg)
    row = rep.table_row()
    for k in ("elo", "margin", "loi", "draws", "z_nw", "z_w", "auc", "rounds"):
        setattr(cell, k, row[k])
    if not rep.complete:
        cell.error = "; ".join(rep.errors) or "incomplete"
    return cell


@dataclass
class AblationResult:
    cells: list[CellResult] = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        for c in self.cells:
            w.writerow(c.row())
        return buf.getvalue()

    def cell(self, gamma: float, delta: float) -> CellResult:
        for c in self.cells:
            if math.isclose(c.gamma, gamma) and math.isclose(c.delta, delta):
                return c
        raise KeyError((gamma, delta))


def ablate(gammas, deltas, backend, key: bytes = b"", out_dir=None) -> AblationResult:
    """Run one match per (γ, δ) cell.

    ``backend`` is a :class:`SyntheticMatch` or a :class:`MatchConfig` whose
    watermarked side gets each cell's parameters.  A failing cell is recorded
    with its error and the remaining cells still run.
    """
    result = AblationResult()
    for g in gammas:
        for d in deltas:
            try:
                params = WatermarkParams(gamma=g, delta=d, key=key)
                if isinstance(backend, SyntheticMatch):
                    cell = backend.play(params)
                else:
                    sub = None if out_dir is None else f"{out_dir}/g{g:g}_d{d:g}"
                    cell = _engine_cell(backend, params, sub)
            except Exception as exc:  # isolate the cell, keep the grid going
                log.error("cell gamma=%g delta=%g failed: %s", g, d, exc)
                cell = CellResult(g, d, error=str(exc) or type(exc).__name__)
            result.cells.append(cell)
    return result
