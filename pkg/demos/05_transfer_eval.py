"""
Scoring a three-label model on a two-label dataset
==================================================

A classifier trained with entailment/neutral/contradiction can be tested
on a dataset that only contains entailment and contradiction.  Neutral
predictions have no counterpart there; the transfer policy decides whether
they count as errors (default) or are excluded from the denominator, and
their number is always reported.
"""

import numpy as np

from veval import (
    EmbeddingStore,
    PairExample,
    TrainConfig,
    TransferPolicy,
    evaluate_transfer,
    majority_baseline,
    train,
)

LABELS = ("entailment", "neutral", "contradiction")
rng = np.random.default_rng(6)
d = 12

# source task: all three labels, separable
centers_p = rng.normal(size=(3, d))
centers_h = rng.normal(size=(3, d))
ids, rows, src_train, src_dev = [], [], [], []
for split, n, bucket in (("train", 900, src_train), ("dev", 300, src_dev)):
    for i in range(n):
        lab = i % 3
        pid, hid = f"s_{split}_p{i}", f"s_{split}_h{i}"
        ids += [pid, hid]
        rows.append(centers_p[lab] + 0.1 * rng.normal(size=d))
        rows.append(centers_h[lab] + 0.1 * rng.normal(size=d))
        bucket.append(PairExample(pid, hid, LABELS[lab]))

# target task: two labels only, drawn from *shifted* regions so the model
# is genuinely out of domain and sometimes predicts neutral
target = []
for i in range(400):
    lab = 0 if i % 3 else 2  # two entailment for every contradiction
    pid, hid = f"t_p{i}", f"t_h{i}"
    ids += [pid, hid]
    rows.append(centers_p[lab] + 0.9 * rng.normal(size=d))
    rows.append(centers_h[lab] + 0.9 * rng.normal(size=d))
    target.append(PairExample(pid, hid, LABELS[lab]))

store = EmbeddingStore(ids, np.array(rows, dtype=np.float32))
model, _ = train(src_train, src_dev, store,
                 TrainConfig(epochs=20, batch_size=128, seed=0), d_hidden=32)

gold = [p.label for p in target]
print(f"target set: {len(target)} pairs, "
      f"majority baseline {majority_baseline(gold):.4f}")

for handling in ("count_as_error", "exclude_and_report"):
    policy = TransferPolicy.for_target(
        LABELS, ("entailment", "contradiction"), handling
    )
    result = evaluate_transfer(model, target, store, policy)
    print(f"{handling}: accuracy={result.report.accuracy:.3f} "
          f"macro_f1={result.report.macro_f1:.3f} "
          f"neutral_predictions={result.neutral_predictions} "
          f"(scored over n={result.report.n})")
