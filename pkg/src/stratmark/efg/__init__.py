from .game import CHANCE, Game, Node, RandomTree, RandomTreeSpec, TicTacToe, TreeGame, chance, decision, leaf
from .solve import (DEFAULT_NODE_CAP, GameStructureError, NodeCapExceeded, ValueTable,
                    backward_induction, expected_utilities)
from .theory import (ConsistencyReport, LossReport, Theorem1Report, check_consistency,
                     simulate_theorem1, verify_loss_bound)
