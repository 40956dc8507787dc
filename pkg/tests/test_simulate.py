import numpy as np
import pytest

from prefscale.core import Outcome, ValidationError
from prefscale.diagnostics import kendalls_w, srcc
from prefscale.simulate import (
    CampaignSpec,
    RaterProfile,
    heterogeneous_profiles,
    noiseless_bt_judgments,
    simulate_campaign,
)


class TestSimulateCampaign:
    def test_zero_noise_recovers_planted_ranking_both_protocols(self):
        spec = CampaignSpec(
            n_items=12, n_raters=3, rating_noise_std=0.0,
            judgment_noise_std=0.0, tie_band=0.0, seed=4,
        )
        campaign = simulate_campaign(spec)
        latents = campaign.latent_vector("overall")
        images = sorted(latents)

        mean_scores = {}
        for img in images:
            vals = [r.score for r in campaign.ratings if r.image == img]
            mean_scores[img] = float(np.mean(vals))
        # integer rounding ties are possible, so require high, not perfect, SRCC
        assert srcc([latents[i] for i in images], [mean_scores[i] for i in images]) > 0.9

        from prefscale.elo import EloConfig, run_elo

        table = run_elo(campaign.judgments_for("overall"), EloConfig(passes=40))
        assert srcc([latents[i] for i in images], [table[i] for i in images]) == pytest.approx(1.0)

    def test_fixed_seed_reproducible(self):
        spec = CampaignSpec(n_items=8, n_raters=2, seed=9)
        c1 = simulate_campaign(spec)
        c2 = simulate_campaign(spec)
        assert c1.ratings == c2.ratings
        assert c1.judgments == c2.judgments
        assert c1.latents == c2.latents

    def test_pair_budget_respected(self):
        spec = CampaignSpec(n_items=20, n_raters=2, pair_budget=60, seed=1)
        campaign = simulate_campaign(spec)
        assert len(campaign.pairs) == 60
        assert len(campaign.judgments) == 60 * 2  # one dimension

    def test_heterogeneous_profiles_differ(self):
        profiles = heterogeneous_profiles(5, seed=3)
        centers = {p.center for p in profiles}
        gains = {p.gain for p in profiles}
        assert len(centers) == 5 and len(gains) == 5

    def test_profile_count_mismatch_rejected(self):
        with pytest.raises(ValidationError):
            CampaignSpec(n_items=5, n_raters=3, rater_profiles=(RaterProfile(),))

    def test_scale_compression_creates_rating_ties(self):
        compressed = tuple(RaterProfile(center=3.0, gain=0.2) for _ in range(3))
        spec = CampaignSpec(
            n_items=20, n_raters=3, rating_noise_std=0.0, rater_profiles=compressed, seed=2
        )
        campaign = simulate_campaign(spec)
        scores = {r.score for r in campaign.ratings}
        assert scores <= {2, 3, 4}  # gain 0.2 squeezes everything to mid-scale


class TestProtocolDirection:
    def _kendall_pair(self, seed):
        from prefscale.elo import EloConfig

        from prefscale.diagnostics import make_elo_aggregator

        spec = CampaignSpec(
            n_items=25,
            n_raters=5,
            rating_noise_std=0.35,
            judgment_noise_std=0.35,
            tie_band=0.1,
            rater_profiles=heterogeneous_profiles(5, seed=seed),
            seed=seed,
        )
        campaign = simulate_campaign(spec)
        images = campaign.images
        point = campaign.ratings_by_rater("overall")
        point_mat = np.array([[point[r][i] for i in images] for r in sorted(point)])
        w_point = kendalls_w(point_mat)

        agg = make_elo_aggregator(EloConfig(passes=30))
        pair = campaign.judgments_by_rater("overall")
        pair_mat = np.array(
            [[agg([pair[r]])[i] for i in images] for r in sorted(pair)]
        )
        w_pair = kendalls_w(pair_mat)
        return w_pair, w_point

    def test_pairwise_beats_pointwise_under_scale_heterogeneity(self):
        wins = 0
        for seed in range(5):
            w_pair, w_point = self._kendall_pair(seed)
            wins += int(w_pair > w_point)
        assert wins >= 4


class TestNoiselessJudgments:
    def test_outcomes_follow_latent_sign(self):
        js = noiseless_bt_judgments({"a": 3.0, "b": 1.0, "c": 3.0})
        by_pair = {(j.a, j.b): j.outcome for j in js}
        assert by_pair[("a", "b")] is Outcome.A_WINS
        assert by_pair[("a", "c")] is Outcome.TIE
        assert by_pair[("b", "c")] is Outcome.B_WINS
