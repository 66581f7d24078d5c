"""
Cosine similarity distributions between two vector sets
=======================================================

Compares every original vector to every generated vector and summarizes
the score distribution (mean, std, histogram) without materializing the
full score matrix.
"""

import numpy as np

from veval import EmbeddingStore, cosine, pairwise_stats, top_k

rng = np.random.default_rng(1)
d = 64

# originals plus generated vectors that are noisy copies: similar but not equal
originals = [f"o{i}" for i in range(200)]
generated = [f"g{i}" for i in range(1000)]
base = rng.normal(size=(200, d))
gen_rows = base[rng.integers(0, 200, size=1000)] + 0.8 * rng.normal(size=(1000, d))
store = EmbeddingStore(
    originals + generated,
    np.vstack([base, gen_rows]).astype(np.float32),
)

print("single pair:", round(cosine(store.vector("o0"), store.vector("g0")), 4))

stats = pairwise_stats(store, originals, generated, bins=20)
print(f"{stats.n} pairwise scores: mean={stats.mean:.3f} std={stats.std:.3f}")

# a crude text histogram; real plots are external to this library
peak = max(c for _, c in stats.histogram)
for lower, count in stats.histogram:
    if count:
        bar = "#" * max(1, int(40 * count / peak))
        print(f"  {lower:+.2f} {bar} {count}")

ranked = top_k(store, "o0", generated, k=5)
print("5 nearest generated vectors to o0:")
for cid, score in ranked.entries:
    print(f"  {cid}  {score:.4f}")
