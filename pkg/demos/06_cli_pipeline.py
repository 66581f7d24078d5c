"""
Driving the full pipeline through the command line
==================================================

The veval CLI chains everything: validate -> stats -> curves -> train ->
eval.  This demo fabricates a small corpus with an original and a generated
variant of every premise, writes the input files, and runs the run-all
subcommand on them.
"""

import json
import tempfile
from pathlib import Path

import numpy as np

from veval import EmbeddingStore, write_store
from veval.cli import main

LABELS = ("entailment", "neutral", "contradiction")
workdir = Path(tempfile.mkdtemp(prefix="veval_demo_"))
rng = np.random.default_rng(8)
d = 8
centers_p = rng.normal(size=(3, d))
centers_h = rng.normal(size=(3, d))

vectors, manifest = {}, []
pair_files = {"original": {}, "generated": {}}
for split, n in (("train", 120), ("dev", 45), ("test", 45)):
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
        originals.append({"premise_id": po, "hypothesis_id": h, "label": LABELS[lab]})
        generated.append({"premise_id": pg, "hypothesis_id": h, "label": LABELS[lab]})
    for name, records in (("original", originals), ("generated", generated)):
        path = workdir / f"pairs_{name}_{split}.jsonl"
        path.write_text("".join(json.dumps(r) + "\n" for r in records))
        pair_files[name][split] = str(path)

store = EmbeddingStore(list(vectors), np.array(list(vectors.values()), dtype=np.float32))
write_store(store, workdir / "store.bin")
(workdir / "manifest.jsonl").write_text(
    "".join(json.dumps(r) + "\n" for r in manifest)
)

config = {
    "datasets": pair_files,
    "epochs": 25,
    "batch_size": 32,
    "lr": 0.01,
    "hidden": 16,
    "sample_size": 20,
    "n_samples": 3,
    "k_max": 10,
    "curves_split": "dev",
}
(workdir / "config.json").write_text(json.dumps(config, indent=2))

code = main([
    "run-all",
    "--store", str(workdir / "store.bin"),
    "--manifest", str(workdir / "manifest.jsonl"),
    "--config", str(workdir / "config.json"),
    "--seed", "0",
    "--out", str(workdir / "out"),
])
print(f"\nexit code: {code}")
print(f"outputs under {workdir / 'out'}:")
for path in sorted((workdir / "out").rglob("*")):
    if path.is_file():
        print(f"  {path.relative_to(workdir / 'out')}")
