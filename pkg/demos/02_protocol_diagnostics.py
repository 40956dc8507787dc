"""Why pairwise preferences out-rank pointwise scores for consensus.

Simulates a panel whose members use the 1-5 scale differently (offset and
compressed personal scales) and compares the two protocols with the full
diagnostics battery: Kendall's W, split-half stability, leave-one-out
stability, to-consensus PRA, and per-judgment agreement in a shared
three-way label space.
"""

import numpy as np

from prefscale.core import induce_pairwise_from_ratings
from prefscale.diagnostics import (
    fleiss_kappa,
    kendalls_w,
    krippendorff_alpha_nominal,
    leave_one_out_stability,
    make_elo_aggregator,
    mean_rating_aggregator,
    split_half_spearman,
    to_consensus_pra,
    transitivity_violation_rate,
    unanimity_rates,
)
from prefscale.elo import EloConfig
from prefscale.simulate import CampaignSpec, heterogeneous_profiles, simulate_campaign

spec = CampaignSpec(
    n_items=30, n_raters=5, dimensions=("overall",),
    rating_noise_std=0.35, judgment_noise_std=0.35, taste_std=0.25, tie_band=0.1,
    rater_profiles=heterogeneous_profiles(5, seed=0), seed=0,
)
campaign = simulate_campaign(spec)
print("per-rater scale profiles (center, gain):")
for rater, profile in zip(campaign.raters, spec.rater_profiles):
    print(f"  {rater}: center={profile.center:.2f} gain={profile.gain:.2f}")

images = campaign.images
point = campaign.ratings_by_rater("overall")
pair = campaign.judgments_by_rater("overall")
elo_agg = make_elo_aggregator(EloConfig(passes=30))
pair_rankings = {r: elo_agg([pair[r]]) for r in campaign.raters}

w_point = kendalls_w(np.array([[point[r][i] for i in images] for r in campaign.raters]))
w_pair = kendalls_w(np.array([[pair_rankings[r][i] for i in images] for r in campaign.raters]))
print(f"\nKendall's W     preferences={w_pair:.3f}   ratings={w_point:.3f}")

sh_point = split_half_spearman(point, mean_rating_aggregator)
sh_pair = split_half_spearman(pair, elo_agg)
print(f"split-half rho  preferences={sh_pair:.3f}   ratings={sh_point:.3f}")

loo_point = leave_one_out_stability(point, mean_rating_aggregator)
loo_pair = leave_one_out_stability(pair, elo_agg)
print(f"leave-one-out   preferences={loo_pair[0]:.3f}   ratings={loo_point[0]:.3f}")

pra_point = to_consensus_pra(point, mean_rating_aggregator(list(point.values())))
pra_pair = to_consensus_pra(pair_rankings, elo_agg(list(pair.values())))
print(f"to-consensus    preferences={pra_pair:.3f}   ratings={pra_point:.3f}")

# per-judgment agreement in the shared A/TIE/B label space
pairs_judged = sorted({j.pair for js in pair.values() for j in js})
pref_labels, induced_labels = [], []
outcome_by = {r: {j.pair: j.canonical().outcome.value for j in pair[r]} for r in campaign.raters}
induced_by = {}
for r in campaign.raters:
    rater_ratings = [rec for rec in campaign.ratings if rec.rater == r]
    induced_by[r] = {
        j.pair: j.outcome.value
        for j in induce_pairwise_from_ratings(rater_ratings, pairs_judged)
    }
for p in pairs_judged:
    pref_labels.append([outcome_by[r][p] for r in campaign.raters])
    induced_labels.append([induced_by[r][p] for r in campaign.raters])

print("\nper-judgment agreement on the same pairs, shared 3-way labels:")
print(f"  Fleiss kappa    preferences={fleiss_kappa(pref_labels):.3f}   "
      f"ratings(induced)={fleiss_kappa(induced_labels):.3f}")
print(f"  Krippendorff a  preferences={krippendorff_alpha_nominal(pref_labels):.3f}   "
      f"ratings(induced)={krippendorff_alpha_nominal(induced_labels):.3f}")
full_p, four_p = unanimity_rates(pref_labels)
full_r, four_r = unanimity_rates(induced_labels)
print(f"  unanimous 5/5   preferences={full_p:.1%}   ratings(induced)={full_r:.1%}")
print(f"  >=4/5           preferences={four_p:.1%}   ratings(induced)={four_r:.1%}")

print("\ntransitivity violations per rater (should be small):")
for r in campaign.raters:
    print(f"  {r}: {transitivity_violation_rate(pair[r]):.3%}")
