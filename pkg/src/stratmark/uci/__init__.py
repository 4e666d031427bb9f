from .protocol import GoLimits, InfoLine, ProtocolError, map_score, parse_info, parse_position_command, parse_score_token
from .scoring import ChessDecision, ScoredMoveSet, choose_move, collect_scores, score_all_moves
from .session import EngineError, EngineSession
from .proxy import ProxyConfig, UciProxy, run_proxy
