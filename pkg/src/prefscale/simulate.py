"""Synthetic annotation campaigns with planted ground truth.

The generator plants a latent quality per (item, dimension) and derives
both protocols from it: pointwise raters see the latent through a personal
affine scale (modeling annotators who calibrate the 1-5 range differently)
plus noise, rounded to integers; pairwise raters emit Thurstone draws on
latent differences with a symmetric tie band. Fixed seeds give byte-stable
output, which makes these campaigns usable as oracles.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import (
    Outcome,
    PairJudgment,
    RatingRecord,
    ValidationError,
    all_pairs,
    sample_pair_budget,
)


@dataclass(frozen=True)
class RaterProfile:
    """Personal usage of the 1-5 scale: score = center + gain*(latent - 3)."""

    center: float = 3.0
    gain: float = 1.0


@dataclass(frozen=True)
class CampaignSpec:
    n_items: int
    n_raters: int
    dimensions: tuple[str, ...] = ("overall",)
    category: str = "synthetic"
    rating_noise_std: float = 0.3
    judgment_noise_std: float = 0.3
    taste_std: float = 0.0  # persistent per-(rater, item) opinion offsets
    tie_band: float = 0.15
    pair_budget: int | None = None  # None = complete graph
    rater_profiles: tuple[RaterProfile, ...] | None = None
    latent_range: tuple[float, float] = (1.3, 4.7)
    seed: int = 0

    def __post_init__(self):
        if self.n_items < 3 or self.n_raters < 1:
            raise ValidationError("need >= 3 items and >= 1 rater")
        if self.rating_noise_std < 0 or self.judgment_noise_std < 0 or self.tie_band < 0:
            raise ValidationError("noise and tie band must be >= 0")
        if self.taste_std < 0:
            raise ValidationError("taste_std must be >= 0")
        if self.rater_profiles is not None and len(self.rater_profiles) != self.n_raters:
            raise ValidationError("one profile per rater required")


@dataclass
class SyntheticCampaign:
    spec: CampaignSpec
    images: list[str]
    raters: list[str]
    latents: dict[str, dict[str, float]]  # image -> dimension -> latent
    ratings: list[RatingRecord]
    judgments: list[PairJudgment]
    pairs: list[tuple[str, str]]

    @property
    def manifest(self) -> dict[str, dict]:
        return {img: {"category": self.spec.category, "path": f"{img}.png"} for img in self.images}

    def latent_vector(self, dimension: str) -> dict[str, float]:
        return {img: self.latents[img][dimension] for img in self.images}

    def ratings_by_rater(self, dimension: str) -> dict[str, dict[str, float]]:
        out: dict[str, dict[str, float]] = {r: {} for r in self.raters}
        for rec in self.ratings:
            if rec.dimension == dimension and not rec.is_repeat:
                out[rec.rater][rec.image] = float(rec.score)
        return out

    def judgments_by_rater(self, dimension: str) -> dict[str, list[PairJudgment]]:
        out: dict[str, list[PairJudgment]] = {r: [] for r in self.raters}
        for j in self.judgments:
            if j.dimension == dimension and not j.is_repeat:
                out[j.rater].append(j)
        return out

    def judgments_for(self, dimension: str) -> list[PairJudgment]:
        return [j for j in self.judgments if j.dimension == dimension]


def heterogeneous_profiles(
    n_raters: int,
    seed: int = 0,
    center_range: tuple[float, float] = (2.2, 3.8),
    gain_range: tuple[float, float] = (0.35, 1.1),
) -> tuple[RaterProfile, ...]:
    """Raters with visibly different centers and compressions of the scale."""
    rng = np.random.default_rng([seed, 7])
    centers = rng.uniform(*center_range, size=n_raters)
    gains = rng.uniform(*gain_range, size=n_raters)
    return tuple(RaterProfile(center=float(c), gain=float(g)) for c, g in zip(centers, gains))


def expert_panel_spec(seed: int = 0, n_items: int = 50, pair_budget: int | None = 612) -> CampaignSpec:
    """A 5-expert panel with realistic disagreement structure.

    Experts carry persistent per-item opinion offsets plus mild personal
    rating scales, judgment noise sits near the level where the panel's
    pooled Elo spread matches the default anchor grid, and ties are rare.
    Used as the standard instance for cross-method verification studies.
    """
    return CampaignSpec(
        n_items=n_items,
        n_raters=5,
        dimensions=("overall",),
        rating_noise_std=0.15,
        judgment_noise_std=0.28,
        taste_std=0.40,
        tie_band=0.05,
        pair_budget=pair_budget,
        rater_profiles=heterogeneous_profiles(
            5, seed=seed, center_range=(2.8, 3.2), gain_range=(0.8, 1.1)
        ),
        seed=seed,
    )


def simulate_campaign(spec: CampaignSpec) -> SyntheticCampaign:
    """Generate ratings, judgments, and planted latents for one category."""
    rng = np.random.default_rng([spec.seed, 1])
    width = len(str(max(spec.n_items - 1, 1)))
    images = [f"img{i:0{width}d}" for i in range(spec.n_items)]
    raters = [f"rater{r}" for r in range(spec.n_raters)]
    profiles = spec.rater_profiles or tuple(RaterProfile() for _ in raters)

    lo, hi = spec.latent_range
    latents = {
        img: {d: float(rng.uniform(lo, hi)) for d in spec.dimensions} for img in images
    }
    # each rater's private view of the corpus: planted latent plus a stable
    # personal opinion offset, shared between their ratings and judgments
    tastes = {
        rater: {
            img: {d: float(rng.normal(0.0, spec.taste_std)) for d in spec.dimensions}
            for img in images
        }
        for rater in raters
    }

    def seen(rater: str, img: str, d: str) -> float:
        return latents[img][d] + tastes[rater][img][d]

    ratings: list[RatingRecord] = []
    ts = 0
    for rater, profile in zip(raters, profiles):
        for img in images:
            for d in spec.dimensions:
                raw = (
                    profile.center
                    + profile.gain * (seen(rater, img, d) - 3.0)
                    + rng.normal(0.0, spec.rating_noise_std)
                )
                score = int(min(max(round(raw), 1), 5))
                ts += 1
                ratings.append(
                    RatingRecord(rater=rater, image=img, dimension=d, score=score, timestamp_ms=ts)
                )

    if spec.pair_budget is None:
        pairs = all_pairs(images)
    else:
        # half-coverage designs stay diameter-2; sparser budgets only connect
        dense = spec.pair_budget >= 0.4 * len(all_pairs(images))
        pairs = sample_pair_budget(
            images, spec.pair_budget, seed=spec.seed, max_diameter=2 if dense else None
        )

    judgments: list[PairJudgment] = []
    for rater in raters:
        for a, b in pairs:
            for d in spec.dimensions:
                u = (
                    seen(rater, a, d)
                    - seen(rater, b, d)
                    + rng.normal(0.0, np.sqrt(2.0) * spec.judgment_noise_std)
                )
                if u > spec.tie_band:
                    outcome = Outcome.A_WINS
                elif u < -spec.tie_band:
                    outcome = Outcome.B_WINS
                else:
                    outcome = Outcome.TIE
                ts += 1
                judgments.append(
                    PairJudgment(
                        rater=rater, a=a, b=b, dimension=d, outcome=outcome, timestamp_ms=ts
                    )
                )

    return SyntheticCampaign(
        spec=spec,
        images=images,
        raters=raters,
        latents=latents,
        ratings=ratings,
        judgments=judgments,
        pairs=pairs,
    )


def noiseless_bt_judgments(
    latents: dict[str, float],
    pairs: Sequence[tuple[str, str]] | None = None,
    rater: str = "oracle",
    dimension: str = "overall",
) -> list[PairJudgment]:
    """Deterministic judgments that order exactly like the planted latents."""
    images = sorted(latents)
    if pairs is None:
        pairs = all_pairs(images)
    out = []
    for a, b in pairs:
        if latents[a] > latents[b]:
            outcome = Outcome.A_WINS
        elif latents[a] < latents[b]:
            outcome = Outcome.B_WINS
        else:
            outcome = Outcome.TIE
        out.append(PairJudgment(rater=rater, a=a, b=b, dimension=dimension, outcome=outcome))
    return out
