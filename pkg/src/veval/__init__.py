"""Embedding-space validation and entailment classification toolkit.

Loads binary embedding stores with JSONL manifests, computes exact cosine
similarity statistics and ranked-retrieval curves over them, and trains and
evaluates a fused-feature MLP entailment classifier, including transfer to
datasets with a reduced label set.
"""

from .store import (
    DataError,
    DEFAULT_LABELS,
    EmbeddingStore,
    Manifest,
    ManifestEntry,
    PairExample,
    load_manifest,
    load_pairs,
    load_store,
    write_store,
)
from .similarity import RankedList, SimilarityStats, cosine, pairwise_stats, top_k, top_k_many
from .retrieval import (
    MetricCurve,
    curve,
    curve_to_csv,
    hits_at_k,
    precision_at_k,
    recall_at_k,
    relevance,
    sampled_curves,
)
from .fusion import (
    MlpModel,
    TrainConfig,
    TrainHistory,
    forward,
    fuse,
    fuse_batch,
    gradient_check,
    history_to_csv,
    init_model,
    load_model,
    predict,
    predict_batch,
    save_model,
    train,
)
from .metrics import EvalReport, confusion_to_csv, evaluate, majority_baseline
from .transfer import TransferPolicy, TransferReport, evaluate_transfer

__version__ = "0.1.0"

__all__ = [
    "DataError",
    "DEFAULT_LABELS",
    "EmbeddingStore",
    "Manifest",
    "ManifestEntry",
    "PairExample",
    "load_manifest",
    "load_pairs",
    "load_store",
    "write_store",
    "RankedList",
    "SimilarityStats",
    "cosine",
    "pairwise_stats",
    "top_k",
    "top_k_many",
    "MetricCurve",
    "curve",
    "curve_to_csv",
    "hits_at_k",
    "precision_at_k",
    "recall_at_k",
    "relevance",
    "sampled_curves",
    "MlpModel",
    "TrainConfig",
    "TrainHistory",
    "forward",
    "fuse",
    "fuse_batch",
    "gradient_check",
    "history_to_csv",
    "init_model",
    "load_model",
    "predict",
    "predict_batch",
    "save_model",
    "train",
    "EvalReport",
    "confusion_to_csv",
    "evaluate",
    "majority_baseline",
    "TransferPolicy",
    "TransferReport",
    "evaluate_transfer",
]
