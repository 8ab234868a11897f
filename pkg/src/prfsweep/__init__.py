"""Retrieval engine with blind-feedback query expansion by local association
clustering, plus a (D, T) grid evaluation harness and report generator."""

from .analysis import AnalyzerConfig, fold_arabic, tokenize
from .evaluation import (IMPROVED, NO_DECISION, NOT_IMPROVED, QueryMetrics,
                         average_precision, classify, evaluate_ranking,
                         interpolated_11pt, parse_qrels, precision_at_k)
from .index import InvertedIndex, build_index, load_index, save_index
from .prf import (AssociationMatrix, association_matrix, cluster_terms,
                  expand_query, sample_top)
from .retrieval import Query, idf, load_queries, score, search
from .sweep import SweepConfig, run_combination, run_sweep

__version__ = "0.1.0"

__all__ = [
    "AnalyzerConfig", "tokenize", "fold_arabic",
    "InvertedIndex", "build_index", "save_index", "load_index",
    "Query", "idf", "score", "search", "load_queries",
    "AssociationMatrix", "sample_top", "association_matrix",
    "cluster_terms", "expand_query",
    "parse_qrels", "precision_at_k", "average_precision",
    "interpolated_11pt", "classify", "evaluate_ranking", "QueryMetrics",
    "IMPROVED", "NOT_IMPROVED", "NO_DECISION",
    "SweepConfig", "run_combination", "run_sweep",
    "__version__",
]
