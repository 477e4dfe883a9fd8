"""Continual knowledge-graph-embedding engine with human-validated acquisition."""

from .kb import KnowledgeBase, Provenance, Source, Triple, Vocabulary
from .model import AnalogyParams, grow, init_params, load_params, save_params, score
from .evaluation import EvalMatrix, RankQuery, SplitMetrics, evaluate_split, hits_at_k, mrr, rank_of
from .training import ReplayPool, SessionDataset, TrainConfig, TrainReport, run_curriculum, train_session
from .world import World, WorldSpec, generate_world, make_sessions

__version__ = "0.1.0"

__all__ = [
    "AnalogyParams",
    "EvalMatrix",
    "KnowledgeBase",
    "Provenance",
    "RankQuery",
    "ReplayPool",
    "SessionDataset",
    "Source",
    "SplitMetrics",
    "TrainConfig",
    "TrainReport",
    "Triple",
    "Vocabulary",
    "World",
    "WorldSpec",
    "evaluate_split",
    "generate_world",
    "grow",
    "hits_at_k",
    "init_params",
    "load_params",
    "make_sessions",
    "mrr",
    "rank_of",
    "run_curriculum",
    "save_params",
    "score",
    "train_session",
    "__version__",
]
