"""Fuse a simulated expert panel's judgments into calibrated 1-5 scores.

Walks the whole fusion pipeline on one synthetic category: simulate five
experts with personal tastes and scales, pick low-disagreement anchors
from their ratings, aggregate their pairwise judgments with anchored Elo
and anchored Davidson Bradley-Terry, calibrate both through the
anchor-fitted sigmoid, and compare the two constructions.
"""

from prefscale.core import GroupKey, select_anchors
from prefscale.crossmethod import cross_method_report, fuse_group
from prefscale.diagnostics import srcc
from prefscale.simulate import expert_panel_spec, simulate_campaign

campaign = simulate_campaign(expert_panel_spec(seed=4))
print(f"simulated {len(campaign.images)} paintings, {len(campaign.raters)} experts, "
      f"{len(campaign.pairs)} annotated pairs, {len(campaign.judgments)} judgments")

anchors = select_anchors(campaign.ratings, campaign.manifest).for_group(
    GroupKey("synthetic", "overall")
)
print("anchors (image, mean rating, level):")
for a in anchors:
    print(f"  {a.image}  s̄={a.mean_rating:.2f}  level {a.level}")

fused = fuse_group(campaign.judgments_for("overall"), anchors)
print(f"\nfitted sigmoid slopes: elo a={fused.elo_fit.a:.5f}, dbt a={fused.dbt_fit.a:.3f}; "
      f"fitted tie propensity nu={fused.dbt_nu:.3f}")

report = cross_method_report(fused.elo_scores, fused.dbt_scores, tie_epsilon=0.1)
print("\ncross-method agreement (anchored Elo vs anchored Davidson BT):")
for key in ("srcc", "plcc", "mae", "decision_agreement", "ks_p"):
    print(f"  {key:>19}: {report[key]:.4f}")

truth = campaign.latent_vector("overall")
images = sorted(truth)
rho = srcc([truth[i] for i in images], [fused.elo_scores[i] for i in images])
print(f"\nSRCC of fused scores against the planted latent quality: {rho:.4f}")
print("\nten best paintings by fused score:")
for img in sorted(images, key=lambda i: -fused.elo_scores[i])[:10]:
    print(f"  {img}: fused={fused.elo_scores[img]:.2f}  planted={truth[img]:.2f}")
