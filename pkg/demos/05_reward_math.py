"""The ranking-fidelity reward, step by step, on a toy minibatch.

Two images with pseudo-scores 4.2 and 2.1; three candidate score vectors
each. Shows the Thurstone win probability, the hard ordering target, the
Bhattacharyya fidelity, the gap weight, the aggregated reward, and the
group-normalized advantages feeding the clipped surrogate.
"""

import numpy as np

from prefscale.reward import (
    GroupSample,
    RewardConfig,
    fidelity,
    grpo_advantages,
    grpo_surrogate,
    pair_weight,
    rank_reward,
    target_prob,
    thurstone_prob,
)

pseudo = {"strong": {"overall": 4.2}, "weak": {"overall": 2.1}}
samples = [
    GroupSample("strong", np.array([[4.4], [3.9], [2.0]]), np.array([True, True, True])),
    GroupSample("weak", np.array([[2.0], [2.3], [4.8]]), np.array([True, True, True])),
]
config = RewardConfig()

print("pair weight for gap |4.2-2.1| at threshold 0.5:",
      pair_weight(4.2, 2.1, config.gap_threshold))
print("ordering target for (strong, weak):", target_prob(4.2, 2.1))

p = thurstone_prob(4.4, np.mean([2.0, 2.3, 4.8]), 0.043, 1.6, config.variance_floor)
print(f"one Thurstone win probability: {p:.3f} -> fidelity vs target 1: {fidelity(p, 1.0):.3f}")

rewards = rank_reward(samples, pseudo, config, dimensions=("overall",))
print("\nper-candidate rewards:")
for image, values in rewards.items():
    print(f"  {image}: {[round(float(v), 3) for v in values]}")

print("\ngroup-normalized advantages:")
for image, values in rewards.items():
    print(f"  {image}: {[round(float(v), 3) for v in grpo_advantages(values)]}")

ratios = np.array([1.0, 1.4, 0.7])
advantages = grpo_advantages(rewards["strong"])
value = grpo_surrogate(ratios, advantages, kl=0.02, config=RewardConfig(kl_coeff=0.1))
print(f"\nclipped surrogate value for the 'strong' group at ratios {ratios.tolist()}: {value:.4f}")
