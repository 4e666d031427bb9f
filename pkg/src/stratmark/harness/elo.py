"""Match statistics: Elo difference with a 95% margin, and likelihood of inferiority."""

from __future__ import annotations

import math
from dataclasses import dataclass

Z95 = 1.959963984540054


@dataclass(frozen=True)
class EloResult:
    wins: int
    draws: int
    losses: int
    elo: float
    margin: float
    loi: float

    @property
    def games(self) -> int:
        return self.wins + self.draws + self.losses

    @property
    def score(self) -> float:
        return (self.wins + self.draws / 2) / self.games

    @property
    def los(self) -> float:
        return 1.0 - self.loi

    def interval(self) -> tuple[float, float]:
        return self.elo - self.margin, self.elo + self.margin

    def contains(self, value: float = 0.0) -> bool:
        lo, hi = self.interval()
        return lo <= value <= hi

    def format(self) -> str:
        if math.isinf(self.elo):
            return f"{'+' if self.elo > 0 else '-'}inf (score {self.score:.3f})"
        return f"{self.elo:+.1f} ± {self.margin:.1f}"


def elo_from_score(s: float) -> float:
    """Elo difference implied by an expected score; ±inf at 0 and 1."""
    if s <= 0.0:
        return -math.inf
    if s >= 1.0:
        return math.inf
    return -400.0 * math.log10(1.0 / s - 1.0)


def likelihood_of_superiority(wins: int, losses: int) -> float:
    if wins + losses == 0:
        return 0.5
    return 0.5 * (1.0 + math.erf((wins - losses) / math.sqrt(2.0 * (wins + losses))))


def elo_and_loi(wins: int, draws: int, losses: int) -> EloResult:
    """Elo difference, 95% margin and LOI from one side's w/d/l.

    The margin is the half-width of the Elo interval obtained by pushing
    ``s ± 1.96·se`` through the Elo curve, with the draw-aware per-game
    variance of the score.  It is infinite when that interval leaves (0, 1).
    LOI is the probability, under a normal approximation to the decisive
    games, that this side is the weaker one.
    """
    if min(wins, draws, losses) < 0:
        raise ValueError("counts must be non-negative")
    n = wins + draws + losses
    if n < 1:
        raise ValueError("need at least one game")
    s = (wins + draws / 2) / n
    elo = elo_from_score(s)
    var = (wins * (1 - s) ** 2 + draws * (0.5 - s) ** 2 + losses * s ** 2) / n
    se = math.sqrt(var / n)
    if se == 0.0:
        margin = 0.0 if not math.isinf(elo) else math.inf
    else:
        lo, hi = s - Z95 * se, s + Z95 * se
        if lo <= 0.0 or hi >= 1.0:
            margin = math.inf
        else:
            margin = (elo_from_score(hi) - elo_from_score(lo)) / 2.0
    loi = 1.0 - likelihood_of_superiority(wins, losses)
    return EloResult(wins, draws, losses, elo, margin, loi)
