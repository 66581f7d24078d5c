"""Exact cosine similarity: single pairs, blocked top-k, distribution stats.

Search is exact brute force.  Scores are accumulated in float64 even though
storage is float32, and candidates tie-break by ascending id, so rankings
are deterministic regardless of blocking or worker count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .store import DataError, EmbeddingStore

# Corpus rows are processed in panels of this many vectors so that no
# |queries| x |corpus| score matrix is ever materialized.
PANEL = 8192
QUERY_BLOCK = 256


@dataclass(frozen=True)
class RankedList:
    """Top-k candidates for one query, scores descending, ties by ascending id."""

    query_id: str
    entries: tuple[tuple[str, float], ...]

    @property
    def k(self) -> int:
        return len(self.entries)

    def ids(self) -> tuple[str, ...]:
        return tuple(cid for cid, _ in self.entries)


@dataclass(frozen=True)
class SimilarityStats:
    """Mean/std and fixed-width histogram over [-1, 1] of pairwise cosines."""

    mean: float
    std: float
    histogram: tuple[tuple[float, int], ...]
    n: int


def cosine(u, v) -> float:
    """Cosine of two vectors, computed in float64 and clamped to [-1, 1]."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1:
        raise DataError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise DataError("zero-norm input")
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


def _unit_rows(store: EmbeddingStore, ids: Sequence[str]) -> np.ndarray:
    rows = store.rows(ids)
    norms = store.norms[rows]
    if np.any(norms == 0.0):
        bad = ids[int(np.argmax(norms == 0.0))]
        raise DataError(f"zero-norm vector {bad!r}")
    return store.matrix[rows].astype(np.float64) / norms[:, None]


def _merge_top(
    scores: np.ndarray, ids: np.ndarray, k: int
) -> tuple[np.ndarray, np.ndarray]:
    """Keep the k best (score desc, id asc) of a candidate pool."""
    if len(scores) > k:
        keep = np.argpartition(-scores, k - 1)[:k]
        scores, ids = scores[keep], ids[keep]
    order = np.lexsort((ids, -scores))
    return scores[order], ids[order]


def top_k(
    store: EmbeddingStore,
    query_id: str,
    candidate_ids: Sequence[str],
    k: int,
    threads: Optional[int] = None,
) -> RankedList:
    """The k most cosine-similar candidates to one query vector.

    The query is excluded from the candidates if present.  With fewer than
    k candidates the full sorted corpus is returned.
    """
    return top_k_many(store, [query_id], candidate_ids, k, threads=threads)[0]


def top_k_many(
    store: EmbeddingStore,
    query_ids: Sequence[str],
    candidate_ids: Sequence[str],
    k: int,
    threads: Optional[int] = None,
) -> list[RankedList]:
    """Blocked brute-force top-k for many queries over one candidate set.

    Queries are processed in independent blocks (optionally across a thread
    pool); within a block the corpus is scanned panel by panel with a bounded
    running top-k per query.  Results are identical for any thread count.
    """
    if k < 1:
        raise DataError("k must be positive")
    query_ids = list(query_ids)
    query_set = set(query_ids)
    cand = [c for c in candidate_ids if c not in query_set]
    if not cand:
        raise DataError("empty corpus")
    cand_ids = np.array(cand)
    cand_unit = _unit_rows(store, cand)
    q_unit = _unit_rows(store, query_ids)

    def block(start: int) -> list[RankedList]:
        stop = min(start + QUERY_BLOCK, len(query_ids))
        qs = q_unit[start:stop]
        best_scores = [np.empty(0)] * (stop - start)
        best_ids = [np.empty(0, dtype=cand_ids.dtype)] * (stop - start)
        for p in range(0, len(cand), PANEL):
            panel_scores = cand_unit[p : p + PANEL] @ qs.T  # (panel, nq)
            np.clip(panel_scores, -1.0, 1.0, out=panel_scores)
            panel_ids = cand_ids[p : p + PANEL]
            for i in range(stop - start):
                pool_s = np.concatenate([best_scores[i], panel_scores[:, i]])
                pool_i = np.concatenate([best_ids[i], panel_ids])
                best_scores[i], best_ids[i] = _merge_top(pool_s, pool_i, k)
        return [
            RankedList(
                query_ids[start + i],
                tuple(zip((str(c) for c in best_ids[i]), map(float, best_scores[i]))),
            )
            for i in range(stop - start)
        ]

    starts = range(0, len(query_ids), QUERY_BLOCK)
    if threads is not None and threads > 1 and len(query_ids) > QUERY_BLOCK:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(block, starts))
    else:
        chunks = [block(s) for s in starts]
    return [r for chunk in chunks for r in chunk]


def pairwise_stats(
    store: EmbeddingStore,
    query_ids: Sequence[str],
    candidate_ids: Sequence[str],
    bins: int = 100,
    threads: Optional[int] = None,
) -> SimilarityStats:
    """Mean, std, and histogram of all |queries| x |corpus| cosine values.

    Streaming: scores are reduced panel by panel, never materializing the
    full score matrix.  Std is the population standard deviation.
    """
    query_ids = list(query_ids)
    candidate_ids = list(candidate_ids)
    if not query_ids or not candidate_ids:
        raise DataError("empty input sets")
    if bins < 1:
        raise DataError("bins must be positive")
    q_unit = _unit_rows(store, query_ids)
    c_unit = _unit_rows(store, candidate_ids)
    edges = np.linspace(-1.0, 1.0, bins + 1)

    def block(start: int) -> tuple[float, float, np.ndarray]:
        qs = q_unit[start : start + QUERY_BLOCK]
        total = 0.0
        total_sq = 0.0
        counts = np.zeros(bins, dtype=np.int64)
        for p in range(0, len(c_unit), PANEL):
            scores = qs @ c_unit[p : p + PANEL].T
            np.clip(scores, -1.0, 1.0, out=scores)
            total += float(scores.sum())
            total_sq += float((scores * scores).sum())
            counts += np.histogram(scores, bins=edges)[0]
        return total, total_sq, counts

    starts = range(0, len(query_ids), QUERY_BLOCK)
    if threads is not None and threads > 1 and len(query_ids) > QUERY_BLOCK:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            partials = list(pool.map(block, starts))
    else:
        partials = [block(s) for s in starts]

    n = len(query_ids) * len(candidate_ids)
    total = sum(p[0] for p in partials)
    total_sq = sum(p[1] for p in partials)
    counts = np.sum([p[2] for p in partials], axis=0)
    mean = total / n
    var = max(total_sq / n - mean * mean, 0.0)
    return SimilarityStats(
        mean=float(mean),
        std=float(np.sqrt(var)),
        histogram=tuple(zip(map(float, edges[:-1]), map(int, counts))),
        n=n,
    )
