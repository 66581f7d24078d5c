"""
Building, writing, and validating an embedding store
====================================================

The store is a flat binary file of float32 vectors keyed by string ids;
roles, splits, and parent links live in a JSONL manifest next to it.
"""

import json
import tempfile
from pathlib import Path

import numpy as np

from veval import EmbeddingStore, load_manifest, load_store, write_store

workdir = Path(tempfile.mkdtemp(prefix="veval_demo_"))

# three original images, two generated children each, two hypothesis texts
rng = np.random.default_rng(0)
ids, rows, manifest = [], [], []
for p in range(3):
    pid = f"orig{p}"
    base = rng.normal(size=16)
    ids.append(pid)
    rows.append(base)
    manifest.append({"id": pid, "role": "original_image", "split": "dev"})
    for c in range(2):
        cid = f"gen{p}_{c}"
        ids.append(cid)
        rows.append(base + 0.05 * rng.normal(size=16))
        manifest.append(
            {"id": cid, "role": "generated_image", "split": "dev", "parent_id": pid}
        )
for h in range(2):
    hid = f"hyp{h}"
    ids.append(hid)
    rows.append(rng.normal(size=16))
    manifest.append({"id": hid, "role": "hypothesis_text", "split": "dev"})

store = EmbeddingStore(ids, np.array(rows, dtype=np.float32))
store_path = workdir / "store.bin"
write_store(store, store_path)
print(f"wrote {store.count} vectors of dim {store.dim} "
      f"({store_path.stat().st_size} bytes) to {store_path}")

# round trip is bit exact
again = load_store(store_path)
assert again.matrix.tobytes() == store.matrix.tobytes()
print("round trip: byte-identical payload")

manifest_path = workdir / "manifest.jsonl"
manifest_path.write_text("\n".join(json.dumps(r) for r in manifest) + "\n")
loaded = load_manifest(manifest_path, store)
print("counts:", loaded.counts())
print("children of orig0:", loaded.children("orig0"))
