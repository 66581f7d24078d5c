import numpy as np
import pytest

from veval.retrieval import (
    MetricCurve,
    curve,
    curve_to_csv,
    hits_at_k,
    precision_at_k,
    recall_at_k,
    relevance,
    sampled_curves,
)
from veval.similarity import RankedList
from veval.store import DataError, EmbeddingStore, ManifestEntry, Manifest

from conftest import manifest_from


def ranked(query, ids):
    return RankedList(query, tuple((cid, 1.0 - 0.001 * i) for i, cid in enumerate(ids)))


def planted_corpus(n_parents, children_per_parent, d, sigma, seed, random_children=False):
    """Parents plus children that are either near-copies or fresh random vectors."""
    rng = np.random.default_rng(seed)
    ids, rows, entries = [], [], []
    for p in range(n_parents):
        pid = f"p{p:04d}"
        base = rng.normal(size=d)
        ids.append(pid)
        rows.append(base)
        entries.append((pid, "original_image", "train"))
        for c in range(children_per_parent):
            cid = f"g{p:04d}_{c}"
            ids.append(cid)
            if random_children:
                rows.append(rng.normal(size=d))
            else:
                rows.append(base + rng.normal(scale=sigma, size=d))
            entries.append((cid, "generated_image", "train", pid))
    store = EmbeddingStore(ids, np.array(rows, dtype=np.float32))
    manifest = manifest_from(entries)
    parents = [e[0] for e in entries if e[1] == "original_image"]
    children = [e[0] for e in entries if e[1] == "generated_image"]
    return store, manifest, parents, children


def test_relevance():
    manifest = manifest_from(
        [
            ("p1", "original_image", "dev"),
            ("p2", "original_image", "dev"),
            ("c1", "generated_image", "dev", "p1"),
            ("h", "hypothesis_text", "dev"),
        ]
    )
    assert relevance(manifest, "p1", "c1") == 1
    assert relevance(manifest, "p2", "c1") == 0
    with pytest.raises(DataError, match="expected original_image"):
        relevance(manifest, "c1", "c1")
    with pytest.raises(DataError, match="expected generated_image"):
        relevance(manifest, "p1", "h")


def test_recall_precision_definitions():
    r = ranked("q", [f"c{i}" for i in range(100)])
    relevant = {"c3", "c50", "x1", "x2", "x3"}  # 2 of 5 present in the list
    assert recall_at_k(r, relevant, 100) == 2 / 5
    assert precision_at_k(r, relevant, 100) == 2 / 100
    top5 = ranked("q", ["a", "b", "c", "d", "e"])
    assert recall_at_k(top5, {"a", "b", "c", "d", "e"}, 5) == 1.0
    assert precision_at_k(top5, {"a", "b", "c", "d", "e"}, 5) == 1.0


def test_identity_through_shared_hit_count():
    rng = np.random.default_rng(41)
    for _ in range(200):
        n = int(rng.integers(1, 60))
        r = ranked("q", [f"c{i}" for i in range(n)])
        n_rel = int(rng.integers(1, 20))
        relevant = set(
            rng.choice([f"c{i}" for i in range(80)], size=n_rel, replace=False)
        )
        k = int(rng.integers(1, n + 1))
        h = hits_at_k(r, relevant, k)
        # recall and precision are the correctly rounded images of the same
        # integer hit count, so the identity p@k * k = r@k * |rel| holds as
        # an exact statement about h
        assert precision_at_k(r, relevant, k) == h / k
        assert recall_at_k(r, relevant, k) == h / len(relevant)
        # recall monotone in k
        prev = 0.0
        for kk in range(1, n + 1):
            cur = recall_at_k(r, relevant, kk)
            assert cur >= prev
            prev = cur


def test_recall_precision_errors():
    r = ranked("q", ["a", "b"])
    with pytest.raises(DataError, match="empty relevant"):
        recall_at_k(r, set(), 1)
    with pytest.raises(DataError, match="exceeds"):
        precision_at_k(r, {"a"}, 3)
    with pytest.raises(DataError, match="positive"):
        precision_at_k(r, {"a"}, 0)


def test_single_query_children_at_top():
    # children are tiny perturbations of the parent; distractors belong to a
    # second parent and sit far away, so the five children occupy ranks 1-5
    store, manifest, parents, children = planted_corpus(1, 5, 32, 1e-4, seed=3)
    rng = np.random.default_rng(9)
    extra_ids = [f"d{i}" for i in range(50)]
    merged = EmbeddingStore.concat(
        [
            store,
            EmbeddingStore(["p_other"], rng.normal(size=(1, 32)).astype(np.float32)),
            EmbeddingStore(extra_ids, rng.normal(size=(50, 32)).astype(np.float32)),
        ]
    )
    entries = (
        list(manifest)
        + [ManifestEntry("p_other", "original_image", "train")]
        + [
            ManifestEntry(i, "generated_image", "train", parent_id="p_other")
            for i in extra_ids
        ]
    )
    mc = curve(merged, Manifest(entries), parents, children + extra_ids, k_max=20)
    for i, k in enumerate(mc.ks):
        assert mc.recall[i] == min(k, 5) / 5
        assert mc.precision[i] == min(k, 5) / k


def test_curve_matches_per_query_oracle():
    store, manifest, parents, children = planted_corpus(8, 3, 10, 0.3, seed=13)
    k_max = 12
    mc = curve(store, manifest, parents, children, k_max=k_max)
    # independent per-query ranking and averaging
    m = store.matrix.astype(np.float64)
    unit = m / np.linalg.norm(m, axis=1, keepdims=True)
    idx = {sid: i for i, sid in enumerate(store.ids)}
    recalls = np.zeros((len(parents), k_max))
    precisions = np.zeros((len(parents), k_max))
    for qi, pid in enumerate(parents):
        scores = [(cid, float(unit[idx[pid]] @ unit[idx[cid]])) for cid in children]
        scores.sort(key=lambda t: (-t[1], t[0]))
        rel = set(manifest.children(pid))
        hits = 0
        for rank, (cid, _) in enumerate(scores[:k_max], start=1):
            hits += cid in rel
            recalls[qi, rank - 1] = hits / len(rel)
            precisions[qi, rank - 1] = hits / rank
    assert np.allclose(mc.recall, recalls.mean(axis=0), atol=1e-12)
    assert np.allclose(mc.precision, precisions.mean(axis=0), atol=1e-12)
    assert np.allclose(mc.std_recall, recalls.std(axis=0), atol=1e-12)


def test_curve_planted_children_high_recall():
    store, manifest, parents, children = planted_corpus(100, 5, 32, 0.01, seed=19)
    mc = curve(store, manifest, parents, children, k_max=100)
    assert mc.recall[99] >= 0.99
    assert mc.n_queries == 100


def test_curve_random_children_hypergeometric():
    store, manifest, parents, children = planted_corpus(
        100, 5, 32, 0.01, seed=23, random_children=True
    )
    k = 50
    mc = curve(store, manifest, parents, children, k_max=k)
    n_corpus = len(children)
    expected = k / n_corpus
    var_hits = k * (5 / n_corpus) * (1 - 5 / n_corpus) * ((n_corpus - k) / (n_corpus - 1))
    se = np.sqrt(var_hits / 25 / len(parents))
    assert abs(mc.recall[k - 1] - expected) <= 3 * se


def test_curve_childless_query_policy():
    store, manifest, parents, children = planted_corpus(3, 2, 8, 0.1, seed=29)
    lonely = EmbeddingStore(["p_lone"], np.ones((1, 8), dtype=np.float32))
    merged = EmbeddingStore.concat([store, lonely])
    entries = list(manifest) + [ManifestEntry("p_lone", "original_image", "train")]
    manifest2 = Manifest(entries)
    with pytest.raises(DataError, match="no children"):
        curve(merged, manifest2, parents + ["p_lone"], children, k_max=5)
    mc = curve(
        merged, manifest2, parents + ["p_lone"], children, k_max=5, skip_childless=True
    )
    assert mc.skipped_queries == 1
    assert mc.n_queries == 3


def test_sampled_curves_whole_split_single_sample():
    store, manifest, parents, children = planted_corpus(6, 2, 8, 0.05, seed=31)
    samples, aggregate = sampled_curves(
        store, manifest, "train", sample_size=6, n_samples=10, seed=0, k_max=5
    )
    assert len(samples) == 1  # nothing to resample
    assert aggregate.n_queries == 6


def test_sampled_curves_deterministic_and_restricted():
    # children sit on the *next* parent's location; with the corpus restricted
    # to the sampled parents' children, every child is still ranked within
    # k_max = |corpus|, so recall@k_max is exactly 1
    rng = np.random.default_rng(37)
    n_parents, d = 12, 16
    ids, rows, entries = [], [], []
    bases = rng.normal(size=(n_parents, d))
    for p in range(n_parents):
        pid = f"p{p:02d}"
        ids.append(pid)
        rows.append(bases[p])
        entries.append((pid, "original_image", "train"))
        for c in range(3):
            cid = f"g{p:02d}_{c}"
            ids.append(cid)
            rows.append(bases[(p + 1) % n_parents] + 0.01 * rng.normal(size=d))
            entries.append((cid, "generated_image", "train", pid))
    store = EmbeddingStore(ids, np.array(rows, dtype=np.float32))
    manifest = manifest_from(entries)
    sample_size = 4
    k_max = sample_size * 3
    run1 = sampled_curves(
        store, manifest, "train", sample_size=sample_size, n_samples=5, seed=11, k_max=k_max
    )
    run2 = sampled_curves(
        store, manifest, "train", sample_size=sample_size, n_samples=5, seed=11, k_max=k_max
    )
    assert run1 == run2  # seed determinism
    samples, aggregate = run1
    assert len(samples) == 5
    assert aggregate.recall[k_max - 1] == 1.0
    assert aggregate.std_recall is not None
    with pytest.raises(DataError, match="exceeds"):
        sampled_curves(store, manifest, "train", sample_size=100, n_samples=2, seed=0)


def test_curve_csv_format():
    mc = MetricCurve(
        ks=(1, 2),
        recall=(0.5, 1.0),
        precision=(0.5, 0.5),
        n_queries=2,
        std_recall=(0.1, 0.0),
        std_precision=(0.1, 0.05),
    )
    text = curve_to_csv(mc)
    lines = text.strip().split("\n")
    assert lines[0] == "k,recall_mean,recall_std,precision_mean,precision_std"
    assert lines[1] == "1,0.5,0.1,0.5,0.1"
    assert len(lines) == 3
