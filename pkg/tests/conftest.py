import json

import numpy as np
import pytest

from veval.store import EmbeddingStore, Manifest, ManifestEntry, PairExample, write_store


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record) + "\n")
    return path


def store_from(vectors):
    """EmbeddingStore from an {id: vector} mapping (insertion order kept)."""
    ids = list(vectors)
    matrix = np.array([vectors[i] for i in ids], dtype=np.float32)
    return EmbeddingStore(ids, matrix)


def manifest_from(entries):
    """Manifest from (id, role, split[, parent_id]) tuples."""
    built = []
    for spec in entries:
        sid, role, split = spec[:3]
        parent = spec[3] if len(spec) > 3 else None
        built.append(ManifestEntry(id=sid, role=role, split=split, parent_id=parent))
    return Manifest(built)


@pytest.fixture
def toy_corpus(tmp_path):
    """A small on-disk corpus: 3 parents x 2 children, 3 hypotheses, 4 pairs.

    Children are near-copies of their parents so that retrieval on this
    corpus is easy; hypothesis vectors are arbitrary.
    """
    rng = np.random.default_rng(7)
    vectors = {}
    manifest = []
    pair_records = []
    for p in range(3):
        pid = f"orig{p}"
        base = rng.normal(size=8)
        vectors[pid] = base
        manifest.append({"id": pid, "role": "original_image", "split": "dev"})
        for c in range(2):
            cid = f"gen{p}_{c}"
            vectors[cid] = base + rng.normal(scale=0.01, size=8)
            manifest.append(
                {
                    "id": cid,
                    "role": "generated_image",
                    "split": "dev",
                    "parent_id": pid,
                }
            )
    for h in range(3):
        hid = f"hyp{h}"
        vectors[hid] = rng.normal(size=8)
        manifest.append({"id": hid, "role": "hypothesis_text", "split": "dev"})
    pair_records = [
        {"premise_id": "orig0", "hypothesis_id": "hyp0", "label": "entailment"},
        {"premise_id": "gen0_0", "hypothesis_id": "hyp1", "label": "neutral"},
        {"premise_id": "orig1", "hypothesis_id": "hyp2", "label": "contradiction"},
        {"premise_id": "orig2", "hypothesis_id": "hyp0", "label": "entailment"},
    ]
    store = store_from(vectors)
    store_path = tmp_path / "store.bin"
    write_store(store, store_path)
    manifest_path = write_jsonl(tmp_path / "manifest.jsonl", manifest)
    pairs_path = write_jsonl(tmp_path / "pairs.jsonl", pair_records)
    return {
        "store": store,
        "store_path": store_path,
        "manifest_records": manifest,
        "manifest_path": manifest_path,
        "pairs_path": pairs_path,
        "pair_records": pair_records,
    }


def paired_dataset_files(tmp_path, d=8, n_train=90, n_dev=45, n_test=45, seed=17):
    """On-disk corpus with an original and a generated premise per example.

    Generated premises are near-copies of their parents, so the original and
    generated datasets are equally separable and retrieval is easy.  Returns
    the store/manifest paths plus per-dataset pair-file paths.
    """
    labels = ("entailment", "neutral", "contradiction")
    rng = np.random.default_rng(seed)
    centers_p = rng.normal(size=(3, d))
    centers_h = rng.normal(size=(3, d))
    vectors = {}
    manifest = []
    pair_files = {"original": {}, "generated": {}}
    for split, n in (("train", n_train), ("dev", n_dev), ("test", n_test)):
        originals, generated = [], []
        for i in range(n):
            lab = i % 3
            po, pg, h = f"{split}_o{i}", f"{split}_g{i}", f"{split}_h{i}"
            vectors[po] = centers_p[lab] + 0.1 * rng.normal(size=d)
            vectors[pg] = vectors[po] + 0.01 * rng.normal(size=d)
            vectors[h] = centers_h[lab] + 0.1 * rng.normal(size=d)
            manifest.append({"id": po, "role": "original_image", "split": split})
            manifest.append(
                {"id": pg, "role": "generated_image", "split": split, "parent_id": po}
            )
            manifest.append({"id": h, "role": "hypothesis_text", "split": split})
            originals.append(
                {"premise_id": po, "hypothesis_id": h, "label": labels[lab]}
            )
            generated.append(
                {"premise_id": pg, "hypothesis_id": h, "label": labels[lab]}
            )
        pair_files["original"][split] = write_jsonl(
            tmp_path / f"pairs_original_{split}.jsonl", originals
        )
        pair_files["generated"][split] = write_jsonl(
            tmp_path / f"pairs_generated_{split}.jsonl", generated
        )
    store = store_from(vectors)
    store_path = tmp_path / "store.bin"
    write_store(store, store_path)
    manifest_path = write_jsonl(tmp_path / "manifest.jsonl", manifest)
    return {
        "store": store,
        "store_path": store_path,
        "manifest_path": manifest_path,
        "pairs": pair_files,
    }


def separable_task(d=16, n_train=3000, n_dev=600, n_test=600, seed=11, spread=0.1):
    """Seeded 3-class task whose fused vectors form separable clusters.

    Premise and hypothesis vectors for each label are drawn around
    label-specific centers, so the classes are linearly separable in fused
    space.  Returns (store, train_pairs, dev_pairs, test_pairs).
    """
    labels = ("entailment", "neutral", "contradiction")
    rng = np.random.default_rng(seed)
    centers_p = rng.normal(size=(3, d))
    centers_h = rng.normal(size=(3, d))
    ids = []
    rows = []
    splits = [("tr", n_train), ("dv", n_dev), ("te", n_test)]
    pairs = {name: [] for name, _ in splits}
    for name, n in splits:
        for i in range(n):
            lab = i % 3
            pid = f"{name}_p{i}"
            hid = f"{name}_h{i}"
            ids.extend([pid, hid])
            rows.append(centers_p[lab] + spread * rng.normal(size=d))
            rows.append(centers_h[lab] + spread * rng.normal(size=d))
            pairs[name].append(PairExample(pid, hid, labels[lab]))
    store = EmbeddingStore(ids, np.array(rows, dtype=np.float32))
    return store, pairs["tr"], pairs["dv"], pairs["te"]
