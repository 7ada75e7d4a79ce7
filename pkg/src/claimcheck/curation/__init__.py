"""Dataset-construction algorithms: quotas, transport selection, stats."""
from .annotate import (DatasetStats, FlagAssignment, FlagMatch, MissingTopic,
                       RULE_TABLE, dataset_stats, format_stats,
                       ingest_flagging, topic_quota)
from .kernels import (ENV_DISABLE_NUMBA, HAS_NUMBA, IMPLEMENTATIONS,
                      active_implementation)
from .ot import (CurationError, DEFAULT_EPS, InsufficientCandidates,
                 MarginMismatch, NonFiniteScaling, SelectionResult,
                 TransportPlan, cost_matrix, embeddings_by_topic,
                 greedy_assignment, ot_select, sinkhorn)

__all__ = [
    "DatasetStats", "FlagAssignment", "FlagMatch", "MissingTopic",
    "RULE_TABLE", "dataset_stats", "format_stats", "ingest_flagging",
    "topic_quota",
    "ENV_DISABLE_NUMBA", "HAS_NUMBA", "IMPLEMENTATIONS",
    "active_implementation",
    "CurationError", "DEFAULT_EPS", "InsufficientCandidates",
    "MarginMismatch", "NonFiniteScaling", "SelectionResult", "TransportPlan",
    "cost_matrix", "embeddings_by_topic", "greedy_assignment", "ot_select",
    "sinkhorn",
]
