"""Pseudo-label a corpus from sparse judge comparisons.

A reference pool of 50 images is rated exhaustively (1,225 comparisons),
frozen, and every remaining image is placed on the pool's scale from just
10 comparisons via posterior MAP, then mapped to 1-5 through the
stretched sigmoid. The whole corpus costs a fraction of exhaustive
comparison and the output tracks the planted ground truth.
"""

import numpy as np

from prefscale.bridge import (
    BridgeConfig,
    exhaustive_cost,
    inference_cost,
    majority_vote_cost,
    pseudo_label_corpus,
)
from prefscale.core import DEFAULT_DIMENSIONS
from prefscale.diagnostics import srcc
from prefscale.judge import SyntheticJudge, SyntheticJudgeConfig

N_IMAGES, POOL, REFS = 300, 50, 10

rng = np.random.default_rng(123)
latents = {
    f"img{i:03d}": {d: float(rng.uniform(1.3, 4.7)) for d in DEFAULT_DIMENSIONS}
    for i in range(N_IMAGES)
}
judge = SyntheticJudge(
    SyntheticJudgeConfig(latent_table=latents, noise_std=0.3, tie_band=0.1, seed=7)
)

print("judge-call budget for", N_IMAGES, "images:")
print(f"  pool bridge      {inference_cost(POOL, REFS, N_IMAGES):>9,}")
print(f"  32-vote majority {majority_vote_cost(N_IMAGES):>9,}")
print(f"  exhaustive pairs {exhaustive_cost(N_IMAGES):>9,}")

run = pseudo_label_corpus(
    sorted(latents), judge, BridgeConfig(pool_size=POOL, refs_per_image=REFS)
)
print(f"\nactual judge calls: {run.judge_calls:,} "
      f"(pool {POOL} -> {POOL*(POOL-1)//2:,} pairs, then {REFS} refs per image)")

corpus = sorted(latents)
print("\npseudo-score fidelity against planted latents:")
for d in DEFAULT_DIMENSIONS:
    rho = srcc([latents[i][d] for i in corpus], [run.scores[i][d] for i in corpus])
    lo = min(run.scores[i][d] for i in corpus)
    hi = max(run.scores[i][d] for i in corpus)
    print(f"  {d:>12}: SRCC={rho:.3f}, score range [{lo:.2f}, {hi:.2f}]")
