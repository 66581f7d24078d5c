"""Recall@k / precision@k curves for parent-to-children retrieval.

A query is an original image; a candidate is relevant iff it is a generated
image whose parent is the query.  Curves are dense over k = 1..k_max and
averaged over queries; the sampled protocol repeats the computation over
seeded without-replacement samples of the originals and reports mean and
std bands across samples.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .similarity import RankedList, top_k_many
from .store import (
    DataError,
    EmbeddingStore,
    Manifest,
    ROLE_GENERATED,
    ROLE_ORIGINAL,
)

DEFAULT_K_MAX = 100
DEFAULT_N_SAMPLES = 30


@dataclass(frozen=True)
class MetricCurve:
    """Per-k recall and precision, averaged over n_queries (or samples)."""

    ks: tuple[int, ...]
    recall: tuple[float, ...]
    precision: tuple[float, ...]
    n_queries: int
    std_recall: Optional[tuple[float, ...]] = None
    std_precision: Optional[tuple[float, ...]] = None
    skipped_queries: int = 0

    def as_dict(self) -> dict:
        out = {
            "ks": list(self.ks),
            "recall": list(self.recall),
            "precision": list(self.precision),
            "n_queries": self.n_queries,
        }
        if self.std_recall is not None:
            out["std_recall"] = list(self.std_recall)
        if self.std_precision is not None:
            out["std_precision"] = list(self.std_precision)
        if self.skipped_queries:
            out["skipped_queries"] = self.skipped_queries
        return out


def curve_to_csv(curve: MetricCurve) -> str:
    """CSV with columns k, recall_mean, recall_std, precision_mean, precision_std."""
    lines = ["k,recall_mean,recall_std,precision_mean,precision_std"]
    for i, k in enumerate(curve.ks):
        rs = f"{curve.std_recall[i]:.12g}" if curve.std_recall is not None else ""
        ps = f"{curve.std_precision[i]:.12g}" if curve.std_precision is not None else ""
        lines.append(
            f"{k},{curve.recall[i]:.12g},{rs},{curve.precision[i]:.12g},{ps}"
        )
    return "\n".join(lines) + "\n"


def relevance(manifest: Manifest, query_id: str, candidate_id: str) -> int:
    """1 iff the candidate was generated from the query image, else 0."""
    query = manifest.entry(query_id)
    if query.role != ROLE_ORIGINAL:
        raise DataError(f"query {query_id!r} has role {query.role}, expected {ROLE_ORIGINAL}")
    cand = manifest.entry(candidate_id)
    if cand.role != ROLE_GENERATED:
        raise DataError(
            f"candidate {candidate_id!r} has role {cand.role}, expected {ROLE_GENERATED}"
        )
    return 1 if cand.parent_id == query_id else 0


def hits_at_k(ranked: RankedList, relevant, k: int) -> int:
    """Number of relevant candidates in the top k of a ranked list."""
    if k < 1:
        raise DataError("k must be positive")
    if k > ranked.k:
        raise DataError(f"k={k} exceeds ranked list length {ranked.k}")
    relevant = set(relevant)
    return sum(1 for cid, _ in ranked.entries[:k] if cid in relevant)


def recall_at_k(ranked: RankedList, relevant, k: int) -> float:
    """Fraction of the relevant set found in the top k."""
    relevant = set(relevant)
    if not relevant:
        raise DataError("empty relevant set")
    return hits_at_k(ranked, relevant, k) / len(relevant)


def precision_at_k(ranked: RankedList, relevant, k: int) -> float:
    """Fraction of the top k that is relevant."""
    return hits_at_k(ranked, set(relevant), k) / k


def _hit_prefix(ranked: RankedList, relevant: set, k_max: int) -> np.ndarray:
    """Cumulative hit counts at k = 1..k_max (constant past the list end)."""
    flags = np.fromiter(
        (cid in relevant for cid, _ in ranked.entries),
        dtype=np.int64,
        count=ranked.k,
    )
    cum = np.cumsum(flags)
    if ranked.k >= k_max:
        return cum[:k_max]
    out = np.empty(k_max, dtype=np.int64)
    out[: ranked.k] = cum
    out[ranked.k :] = cum[-1] if ranked.k else 0
    return out


def curve(
    store: EmbeddingStore,
    manifest: Manifest,
    query_ids: Sequence[str],
    candidate_ids: Sequence[str],
    k_max: int = DEFAULT_K_MAX,
    skip_childless: bool = False,
    with_std: bool = True,
    threads: Optional[int] = None,
) -> MetricCurve:
    """Average recall@k / precision@k over queries against one candidate pool.

    Relevance is parent-child linkage from the manifest; each query reads its
    own relevant-set size.  Queries with no children in the pool are an error
    unless skip_childless is set, in which case they are counted and excluded.
    """
    query_ids = list(query_ids)
    if not query_ids:
        raise DataError("no queries")
    cand_set = set(candidate_ids)
    relevant_sets = []
    kept = []
    skipped = 0
    for qid in query_ids:
        rel = {c for c in manifest.children(qid) if c in cand_set}
        if not rel:
            if not skip_childless:
                raise DataError(f"query {qid!r} has no children in the corpus")
            skipped += 1
            continue
        kept.append(qid)
        relevant_sets.append(rel)
    if not kept:
        raise DataError("no queries with children in the corpus")

    ranked = top_k_many(store, kept, list(candidate_ids), k_max, threads=threads)
    ks = np.arange(1, k_max + 1)
    hits = np.vstack(
        [_hit_prefix(r, rel, k_max) for r, rel in zip(ranked, relevant_sets)]
    )
    n_rel = np.array([len(rel) for rel in relevant_sets], dtype=np.int64)
    recall = hits / n_rel[:, None]
    precision = hits / ks[None, :]
    return MetricCurve(
        ks=tuple(int(k) for k in ks),
        recall=tuple(map(float, recall.mean(axis=0))),
        precision=tuple(map(float, precision.mean(axis=0))),
        n_queries=len(kept),
        std_recall=tuple(map(float, recall.std(axis=0))) if with_std else None,
        std_precision=tuple(map(float, precision.std(axis=0))) if with_std else None,
        skipped_queries=skipped,
    )


def sampled_curves(
    store: EmbeddingStore,
    manifest: Manifest,
    split: str,
    sample_size: int = 1000,
    n_samples: int = DEFAULT_N_SAMPLES,
    seed: int = 0,
    k_max: int = DEFAULT_K_MAX,
    threads: Optional[int] = None,
) -> tuple[list[MetricCurve], MetricCurve]:
    """Sampled retrieval protocol: repeated 1000-original samples of a split.

    Each sample draws sample_size originals without replacement; its candidate
    corpus is exactly the sampled parents' children.  Returns the per-sample
    curves plus an aggregate whose std bands run across samples.  When the
    split has exactly sample_size originals there is nothing to resample, so
    a single sample covering the whole split is returned.
    """
    originals = manifest.ids(role=ROLE_ORIGINAL, split=split)
    if sample_size < 1:
        raise DataError("sample_size must be positive")
    if n_samples < 1:
        raise DataError("n_samples must be positive")
    if sample_size > len(originals):
        raise DataError(
            f"sample_size {sample_size} exceeds {len(originals)} originals in {split!r}"
        )
    if sample_size == len(originals):
        n_samples = 1
    rng = np.random.default_rng(seed)
    samples = [
        rng.choice(len(originals), size=sample_size, replace=False)
        for _ in range(n_samples)
    ]
    curves = []
    for picked in samples:
        queries = [originals[i] for i in picked]
        corpus = [c for q in queries for c in manifest.children(q)]
        curves.append(
            curve(store, manifest, queries, corpus, k_max=k_max, threads=threads)
        )
    recall = np.array([c.recall for c in curves])
    precision = np.array([c.precision for c in curves])
    aggregate = MetricCurve(
        ks=curves[0].ks,
        recall=tuple(map(float, recall.mean(axis=0))),
        precision=tuple(map(float, precision.mean(axis=0))),
        n_queries=sample_size,
        std_recall=tuple(map(float, recall.std(axis=0))),
        std_precision=tuple(map(float, precision.std(axis=0))),
    )
    return curves, aggregate
