"""Ranking-fidelity reward and group-relative advantage math.

Everything here is a pure function over sampled candidate scores, the
pseudo-score table, and a config; no policy or gradient state is touched.
The reward for candidate k of image i aggregates, over partners z and
dimensions, the Bhattacharyya overlap between the Thurstone win
probability of the candidate's score and the hard target implied by the
pseudo-score ordering, each pair weighted by its pseudo-score gap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.special import ndtr

from .core import DEFAULT_DIMENSIONS, ValidationError


@dataclass(frozen=True)
class RewardConfig:
    gap_threshold: float = 0.5
    variance_floor: float = 1e-8
    clip_epsilon: float = 0.2
    kl_coeff: float = 0.0
    format_weight: float = 0.0
    range_weight: float = 0.0
    span: tuple[float, float] = (1.0, 5.0)

    def __post_init__(self):
        if self.gap_threshold <= 0:
            raise ValidationError("gap_threshold must be positive")
        if self.variance_floor <= 0:
            raise ValidationError("variance_floor must be positive")
        for name in ("clip_epsilon", "kl_coeff", "format_weight", "range_weight"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be >= 0")


@dataclass
class GroupSample:
    """G candidate score vectors for one image, plus parse validity flags."""

    image: str
    scores: np.ndarray  # shape (G, D)
    parse_flags: np.ndarray  # shape (G,), bool

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=float)
        self.parse_flags = np.asarray(self.parse_flags, dtype=bool)
        if self.scores.ndim != 2:
            raise ValidationError("scores must be a (G, D) matrix")
        if len(self.parse_flags) != self.scores.shape[0]:
            raise ValidationError("one parse flag per candidate required")


def thurstone_prob(
    score_ik: float,
    mean_z: float,
    var_i: float,
    var_z: float,
    variance_floor: float = 1e-8,
) -> float:
    """P(candidate outranks partner) under independent Gaussian score noise."""
    if var_i < 0 or var_z < 0:
        raise ValidationError("variances must be >= 0")
    if variance_floor <= 0:
        raise ValidationError("variance floor must be positive")
    denom = math.sqrt(var_i + var_z + variance_floor)
    return float(ndtr((score_ik - mean_z) / denom))


def target_prob(pseudo_i: float, pseudo_z: float) -> float:
    """Hard ordering target from the pseudo-scores: 1, 0, or 0.5."""
    if pseudo_i > pseudo_z:
        return 1.0
    if pseudo_i < pseudo_z:
        return 0.0
    return 0.5


def fidelity(p_pred: float, p_gt: float) -> float:
    """Bhattacharyya overlap of two Bernoulli distributions; 1 iff equal."""
    for name, p in (("p_pred", p_pred), ("p_gt", p_gt)):
        if not 0.0 <= p <= 1.0:
            raise ValidationError(f"{name}={p} outside [0, 1]")
    return math.sqrt(p_pred * p_gt) + math.sqrt((1.0 - p_pred) * (1.0 - p_gt))


def pair_weight(pseudo_i: float, pseudo_z: float, gap_threshold: float) -> float:
    """Confidence weight: pseudo-score gap, saturating at gap_threshold."""
    if gap_threshold <= 0:
        raise ValidationError("gap_threshold must be positive")
    return min(abs(pseudo_i - pseudo_z) / gap_threshold, 1.0)


@dataclass
class BatchStats:
    """Per-(image, dimension) mean and population variance over valid candidates."""

    means: dict[str, np.ndarray]
    variances: dict[str, np.ndarray]
    usable: dict[str, bool]


def batch_stats(samples: Sequence[GroupSample]) -> BatchStats:
    """Candidate-score statistics; invalid-parse candidates are excluded."""
    means: dict[str, np.ndarray] = {}
    variances: dict[str, np.ndarray] = {}
    usable: dict[str, bool] = {}
    for sample in samples:
        valid = sample.scores[sample.parse_flags]
        if len(valid) == 0:
            usable[sample.image] = False
            d = sample.scores.shape[1]
            means[sample.image] = np.zeros(d)
            variances[sample.image] = np.zeros(d)
            continue
        usable[sample.image] = True
        means[sample.image] = valid.mean(axis=0)
        variances[sample.image] = valid.var(axis=0)
    return BatchStats(means=means, variances=variances, usable=usable)


def rank_reward(
    samples: Sequence[GroupSample],
    pseudo: Mapping[str, Mapping[str, float]],
    config: RewardConfig = RewardConfig(),
    dimensions: Sequence[str] = DEFAULT_DIMENSIONS,
) -> dict[str, np.ndarray]:
    """Per-(image, candidate) ranking-fidelity reward.

    For each dimension the weighted mean fidelity over partners is computed;
    when every partner weight vanishes (all pseudo-scores equal) that
    dimension falls back to the unweighted mean. Candidates that failed to
    parse receive 0. Requires >= 2 images and pseudo-scores for all of them.
    """
    if len(samples) < 2:
        raise ValidationError("rank reward needs at least 2 images in the batch")
    for sample in samples:
        if sample.image not in pseudo:
            raise ValidationError(f"no pseudo-score for image {sample.image!r}")
        for d in dimensions:
            if d not in pseudo[sample.image]:
                raise ValidationError(
                    f"pseudo-score table lacks dimension {d!r} for {sample.image!r}"
                )
    stats = batch_stats(samples)
    rewards: dict[str, np.ndarray] = {}
    for sample in samples:
        i = sample.image
        g = sample.scores.shape[0]
        out = np.zeros(g)
        partners = [s.image for s in samples if s.image != i and stats.usable[s.image]]
        for k in range(g):
            if not sample.parse_flags[k]:
                continue
            if not partners:
                continue
            dim_values = []
            for di, dim in enumerate(dimensions):
                weights = []
                fidelities = []
                for z in partners:
                    w = pair_weight(pseudo[i][dim], pseudo[z][dim], config.gap_threshold)
                    p_pred = thurstone_prob(
                        sample.scores[k, di],
                        stats.means[z][di],
                        stats.variances[i][di],
                        stats.variances[z][di],
                        config.variance_floor,
                    )
                    p_gt = target_prob(pseudo[i][dim], pseudo[z][dim])
                    weights.append(w)
                    fidelities.append(fidelity(p_pred, p_gt))
                total_w = sum(weights)
                if total_w > 0:
                    dim_values.append(
                        sum(w * f for w, f in zip(weights, fidelities)) / total_w
                    )
                else:
                    dim_values.append(sum(fidelities) / len(fidelities))
            out[k] = sum(dim_values) / len(dimensions)
        rewards[i] = out
    return rewards


def aux_rewards(
    parse_flags: Sequence[bool],
    scores: np.ndarray,
    config: RewardConfig = RewardConfig(),
) -> np.ndarray:
    """Format and range terms per candidate, combined with the config weights.

    An unparseable response scores 0 on both terms; a parsed one earns the
    format term and, if every dimension lies within the span, the range term.
    """
    scores = np.asarray(scores, dtype=float)
    low, high = config.span
    out = np.zeros(len(parse_flags))
    for k, ok in enumerate(parse_flags):
        if not ok:
            continue
        fmt = 1.0
        in_range = 1.0 if np.all((scores[k] >= low) & (scores[k] <= high)) else 0.0
        out[k] = config.format_weight * fmt + config.range_weight * in_range
    return out


def total_rewards(
    samples: Sequence[GroupSample],
    pseudo: Mapping[str, Mapping[str, float]],
    config: RewardConfig = RewardConfig(),
    dimensions: Sequence[str] = DEFAULT_DIMENSIONS,
) -> dict[str, np.ndarray]:
    """Rank reward plus the auxiliary terms, per (image, candidate)."""
    ranks = rank_reward(samples, pseudo, config, dimensions)
    return {
        s.image: ranks[s.image] + aux_rewards(s.parse_flags, s.scores, config)
        for s in samples
    }


def grpo_advantages(rewards: Sequence[float]) -> np.ndarray:
    """Within-group normalization: (r - mean) / population std.

    A (near-)constant group yields all-zero advantages rather than a blow-up.
    """
    r = np.asarray(rewards, dtype=float)
    if len(r) < 2:
        raise ValidationError("advantage normalization needs >= 2 rewards")
    std = float(r.std())
    if std < 1e-12:
        return np.zeros_like(r)
    return (r - r.mean()) / std


def grpo_surrogate(
    ratios: np.ndarray,
    advantages: np.ndarray,
    kl: float = 0.0,
    config: RewardConfig = RewardConfig(),
) -> float:
    """Clipped-surrogate objective value minus the KL penalty.

    The per-entry contribution is min(ratio * a, clip(ratio) * a); this is a
    value function only, no update is applied.
    """
    rho = np.asarray(ratios, dtype=float)
    adv = np.asarray(advantages, dtype=float)
    if rho.shape != adv.shape:
        raise ValidationError("ratios and advantages must have matching shapes")
    if np.any(rho <= 0):
        raise ValidationError("importance ratios must be positive")
    clipped = np.clip(rho, 1.0 - config.clip_epsilon, 1.0 + config.clip_epsilon)
    per_entry = np.minimum(rho * adv, clipped * adv)
    return float(per_entry.mean()) - config.kl_coeff * kl
