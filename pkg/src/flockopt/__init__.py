"""Multi-objective tuning of a decentralized flocking controller."""
from .config import POINT_A, POINT_B, EvolutionConfig, FlockParams, RunConfig, SimConfig, TransferParams
from .metrics import fitness_vector, order_params, reduce_objectives, score_log
from .sim import run_simulation

__all__ = [
    "POINT_A",
    "POINT_B",
    "EvolutionConfig",
    "FlockParams",
    "RunConfig",
    "SimConfig",
    "TransferParams",
    "fitness_vector",
    "order_params",
    "reduce_objectives",
    "run_simulation",
    "score_log",
]
