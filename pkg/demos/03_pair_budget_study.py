"""How many pairwise comparisons does a reliable Elo ranking need?

Uses a single simulated judge over the complete 1,225-pair graph of a
50-image category, subsamples pair budgets from 10% to 80%, and measures
ranking fidelity against the full-graph reference. Also characterizes the
connectivity of the half-coverage (612-pair) design.
"""

from prefscale.core import ComparisonGraph, graph_stats, sample_pair_budget
from prefscale.diagnostics import budget_subsample_study
from prefscale.elo import EloConfig
from prefscale.simulate import expert_panel_spec, simulate_campaign

campaign = simulate_campaign(expert_panel_spec(seed=4, pair_budget=None))
judgments = [j for j in campaign.judgments if j.rater == "rater0"]
print(f"reference: {len(judgments)} judgments over the complete graph")

curve = budget_subsample_study(
    judgments,
    fractions=[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8],
    seeds=[0, 1, 2, 3, 4],
    config=EloConfig(passes=40),
)
print("\nfraction  mean SRCC  mean PLCC")
for point in curve:
    marker = "  <- half-coverage design" if point.fraction == 0.5 else ""
    print(f"  {point.fraction:.1f}     {point.mean_srcc:.4f}    {point.mean_plcc:.4f}{marker}")

images = campaign.images
pairs = sample_pair_budget(images, 612, seed=0)
diameter, avg_path = graph_stats(ComparisonGraph.from_pairs(pairs, nodes=images))
print(f"\n612-pair sample on 50 images: diameter={diameter}, "
      f"average shortest path={avg_path:.2f}")
