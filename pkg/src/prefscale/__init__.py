"""prefscale: fuse pairwise preferences and pointwise ratings into
calibrated per-dimension quality scores, generate judge-derived
pseudo-labels through an Elo reference pool, and verify the
ranking-fidelity reward math offline."""

__version__ = "0.1.0"

from .core import (  # noqa: F401
    AnchorEntry,
    AnchorSet,
    ComparisonGraph,
    GroupKey,
    Outcome,
    PairJudgment,
    PrefscaleError,
    RatingRecord,
    ValidationError,
    graph_stats,
    induce_pairwise_from_ratings,
    validate_dataset,
)
from .elo import EloConfig, expected_score, run_anchored_elo, run_elo  # noqa: F401
from .davidson import DavidsonParams, DbtConfig, davidson_probs, fit_anchored_dbt  # noqa: F401
from .calibration import (  # noqa: F401
    BridgeCalibration,
    SigmoidFit,
    apply_sigmoid,
    bridge_calibrate,
    fit_global_sigmoid,
)
from .bridge import BridgeConfig, inference_cost, pseudo_label_corpus  # noqa: F401
from .reward import (  # noqa: F401
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
from .judge import JudgeVerdict, SyntheticJudge, SyntheticJudgeConfig, parse_response, render_prompt  # noqa: F401
from .simulate import CampaignSpec, simulate_campaign  # noqa: F401
