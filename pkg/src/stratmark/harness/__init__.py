"""Matches, ablations and attacker simulations."""

from .ablation import AblationResult, CellResult, SyntheticMatch, ablate
from .elo import EloResult, elo_and_loi, elo_from_score, likelihood_of_superiority
from .match import (DEFAULT_PLY_CAP, EngineSpec, MatchConfig, MatchReport, Player, RoundResult,
                    TimeControl, default_book, play_match, play_round, schedule, summarize)
from .synthetic import (POLICIES, SimResult, batch_green, decisions_to_detect, expected_green_rate,
                        null_false_positive_rate, sim_observation, simulate)
