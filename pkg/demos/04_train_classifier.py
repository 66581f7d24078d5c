"""
Training the fused-feature entailment classifier
================================================

Premise and hypothesis vectors are fused into a single 5d representation
[v1 | v2 | v1+v2 | v1-v2 | v1*v2] and classified by a two-layer MLP.
This demo trains on a synthetic separable task and shows dev-epoch
selection and checkpointing.
"""

import tempfile
from pathlib import Path

import numpy as np

from veval import (
    EmbeddingStore,
    PairExample,
    TrainConfig,
    evaluate,
    fuse,
    load_model,
    predict_batch,
    save_model,
    train,
)

LABELS = ("entailment", "neutral", "contradiction")

# fabricate a store in which each label occupies its own region
rng = np.random.default_rng(4)
d = 16
centers_p = rng.normal(size=(3, d))
centers_h = rng.normal(size=(3, d))
ids, rows = [], []
pairs = {"train": [], "dev": [], "test": []}
for split, n in (("train", 1500), ("dev", 300), ("test", 300)):
    for i in range(n):
        lab = i % 3
        pid, hid = f"{split}_p{i}", f"{split}_h{i}"
        ids += [pid, hid]
        rows.append(centers_p[lab] + 0.1 * rng.normal(size=d))
        rows.append(centers_h[lab] + 0.1 * rng.normal(size=d))
        pairs[split].append(PairExample(pid, hid, LABELS[lab]))
store = EmbeddingStore(ids, np.array(rows, dtype=np.float32))

v1 = store.vector(pairs["train"][0].premise_id)
v2 = store.vector(pairs["train"][0].hypothesis_id)
print(f"fused vector length: {len(fuse(v1, v2))} (= 5 x {d})")

config = TrainConfig(epochs=30, batch_size=128, learning_rate=1e-3, seed=0)
model, history = train(pairs["train"], pairs["dev"], store, config, d_hidden=64)
print(f"best epoch: {history.best_epoch + 1} "
      f"(dev acc {history.dev_acc[history.best_epoch]:.3f})")
for epoch in (0, 9, 19, 29):
    print(f"  epoch {epoch + 1:>2}: loss={history.train_loss[epoch]:.4f} "
          f"train_acc={history.train_acc[epoch]:.3f} dev_acc={history.dev_acc[epoch]:.3f}")

gold = [p.label for p in pairs["test"]]
report = evaluate(gold, predict_batch(model, pairs["test"], store), LABELS)
print(f"test accuracy {report.accuracy:.3f}, macro F1 {report.macro_f1:.3f}")

# the checkpoint preserves weights bit for bit
ckpt = Path(tempfile.mkdtemp(prefix="veval_demo_")) / "model.bin"
save_model(model, ckpt)
assert predict_batch(load_model(ckpt), pairs["test"], store) == predict_batch(
    model, pairs["test"], store
)
print(f"checkpoint round trip OK ({ckpt.stat().st_size} bytes)")
