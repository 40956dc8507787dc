"""Cross-method fusion studies: anchored Elo vs anchored Davidson BT.

Builds both constructions on the same judgments and anchors, calibrates
each through its own anchor-fitted global sigmoid, and reports agreement
(SRCC/PLCC/MAE/decision agreement/KS). The anchor-ablation study removes
the anchor regularization from estimation while keeping each method's
production calibration, so the scores reveal how far the unregularized
latent scales drift; refitting the sigmoid per variant would hide exactly
the drift being measured.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from . import diagnostics
from .calibration import SigmoidFit, apply_sigmoid, fit_global_sigmoid
from .core import AnchorEntry, PairJudgment, all_pairs
from .davidson import DbtConfig, fit_anchored_dbt
from .elo import EloConfig, run_anchored_elo, run_elo

Scores = dict[str, float]


@dataclass
class FusedGroup:
    """Both constructions' latents and calibrated scores for one group."""

    elo_latents: Scores
    dbt_latents: Scores
    elo_scores: Scores
    dbt_scores: Scores
    elo_fit: SigmoidFit
    dbt_fit: SigmoidFit
    dbt_nu: float


def fuse_group(
    judgments: Sequence[PairJudgment],
    anchors: Sequence[AnchorEntry],
    elo_config: EloConfig = EloConfig(),
    dbt_config: DbtConfig = DbtConfig(),
) -> FusedGroup:
    """Anchored Elo and anchored Davidson BT, each sigmoid-calibrated."""
    q_elo = run_anchored_elo(judgments, anchors, elo_config)
    dbt = fit_anchored_dbt(judgments, anchors, dbt_config)
    fit_elo = fit_global_sigmoid([(q_elo[a.image], a.mean_rating) for a in anchors])
    fit_dbt = fit_global_sigmoid([(dbt.qualities[a.image], a.mean_rating) for a in anchors])
    return FusedGroup(
        elo_latents=q_elo,
        dbt_latents=dbt.qualities,
        elo_scores={i: apply_sigmoid(q, fit_elo) for i, q in q_elo.items()},
        dbt_scores={i: apply_sigmoid(q, fit_dbt) for i, q in dbt.qualities.items()},
        elo_fit=fit_elo,
        dbt_fit=fit_dbt,
        dbt_nu=dbt.tie_propensity,
    )


def cross_method_report(scores_a: Scores, scores_b: Scores, tie_epsilon: float = 0.1) -> dict:
    """Agreement metrics between two calibrated score tables."""
    images = sorted(set(scores_a) & set(scores_b))
    xs = [scores_a[i] for i in images]
    ys = [scores_b[i] for i in images]
    d_stat, p_value = diagnostics.ks_two_sample(xs, ys)
    return {
        "srcc": diagnostics.srcc(xs, ys),
        "plcc": diagnostics.plcc(xs, ys),
        "mae": diagnostics.mae(xs, ys),
        "rmse": diagnostics.rmse(xs, ys),
        "decision_agreement": diagnostics.decision_agreement(
            scores_a, scores_b, all_pairs(images), tie_epsilon
        ),
        "ks_d": d_stat,
        "ks_p": p_value,
        "ks_pass": p_value > 0.05,
    }


@dataclass
class AblationResult:
    anchored: dict
    unanchored: dict

    @property
    def mae_increase(self) -> float:
        return self.unanchored["mae"] - self.anchored["mae"]


def anchor_ablation(
    judgments: Sequence[PairJudgment],
    anchors: Sequence[AnchorEntry],
    elo_config: EloConfig = EloConfig(),
    dbt_config: DbtConfig = DbtConfig(),
    tie_epsilon: float = 0.1,
) -> AblationResult:
    """Cross-method agreement with and without anchor regularization.

    The unanchored variants drop the Elo pull-back (and anchor step) and
    the Davidson penalty, but are mapped through the same production
    calibration as the anchored constructions.
    """
    fused = fuse_group(judgments, anchors, elo_config, dbt_config)
    q_elo_un = run_elo(judgments, elo_config)
    dbt_un = fit_anchored_dbt(
        judgments, [], DbtConfig(
            anchor_penalty=0.0,
            max_iterations=dbt_config.max_iterations,
            gradient_tolerance=dbt_config.gradient_tolerance,
            nu_init=dbt_config.nu_init,
        )
    )
    elo_scores_un = {i: apply_sigmoid(q, fused.elo_fit) for i, q in q_elo_un.items()}
    dbt_scores_un = {i: apply_sigmoid(q, fused.dbt_fit) for i, q in dbt_un.qualities.items()}
    return AblationResult(
        anchored=cross_method_report(fused.elo_scores, fused.dbt_scores, tie_epsilon),
        unanchored=cross_method_report(elo_scores_un, dbt_scores_un, tie_epsilon),
    )


def elo_gap_ablation(
    judgments: Sequence[PairJudgment],
    anchors: Sequence[AnchorEntry],
    gaps: Sequence[float] = (350.0, 400.0, 450.0, 500.0, 700.0, 900.0, 1200.0),
    dbt_config: DbtConfig = DbtConfig(),
    tie_epsilon: float = 0.1,
) -> list[dict]:
    """Cross-method agreement as the anchor grid spacing varies."""
    rows = []
    for gap in gaps:
        fused = fuse_group(judgments, anchors, EloConfig(anchor_gap=gap), dbt_config)
        report = cross_method_report(fused.elo_scores, fused.dbt_scores, tie_epsilon)
        report["gap"] = gap
        rows.append(report)
    return rows
