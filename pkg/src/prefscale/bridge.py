"""Preference-to-score bridge: Elo reference pool plus sparse posterior rating.

Stage 1 rates a small pool of images exhaustively with a judge and freezes
the ratings. Stage 2 places every remaining image on the pool's scale from
only K comparisons, by maximizing a Gaussian-prior x Elo-logistic-likelihood
posterior. Stage 3 maps all ratings through the fixed-steepness sigmoid
stretched over the per-dimension extrema.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .calibration import BridgeCalibration, bridge_calibrate
from .core import Outcome, PairJudgment, ValidationError, all_pairs
from .elo import EloConfig, run_elo
from .judge import Judge, JudgeVerdict


@dataclass(frozen=True)
class BridgeConfig:
    pool_size: int = 50
    refs_per_image: int = 10
    prior_scale: float = 1.0
    pool_seed: int = 42
    elo_config: EloConfig = field(default_factory=EloConfig)
    calibration_steepness: float = 6.0
    span: tuple[float, float] = (1.0, 5.0)

    def __post_init__(self):
        if self.pool_size < 2:
            raise ValidationError("pool_size must be >= 2")
        if not 1 <= self.refs_per_image <= self.pool_size:
            raise ValidationError("refs_per_image must lie in [1, pool_size]")
        if self.prior_scale <= 0:
            raise ValidationError("prior_scale must be positive")


@dataclass
class ReferencePool:
    """Sampled pool members with frozen per-dimension ratings."""

    members: tuple[str, ...]
    frozen_ratings: Mapping[str, Mapping[str, float]]  # image -> dimension -> q
    pool_seed: int
    elo_config: EloConfig

    def ratings_for(self, dimension: str) -> dict[str, float]:
        return {img: self.frozen_ratings[img][dimension] for img in self.members}

    def prior(self, dimension: str, prior_scale: float = 1.0) -> tuple[float, float]:
        values = np.array([self.frozen_ratings[img][dimension] for img in self.members])
        std = float(values.std())
        return float(values.mean()), max(std * prior_scale, 1e-6)


@dataclass
class BridgeRun:
    """Pseudo-score table plus the provenance needed to audit it."""

    scores: dict[str, dict[str, float]]
    qualities: dict[str, dict[str, float]]
    pool: ReferencePool
    judge_calls: int


def _hash_seed(*parts: object) -> int:
    import hashlib

    digest = hashlib.blake2b("\x1f".join(str(p) for p in parts).encode(), digest_size=8)
    return int.from_bytes(digest.digest(), "big")


def build_pool(corpus: Sequence[str], judge: Judge, config: BridgeConfig) -> ReferencePool:
    """Stage 1: sample pool_size images, judge all pairs, run Elo, freeze."""
    if len(corpus) < config.pool_size:
        raise ValidationError(
            f"corpus has {len(corpus)} images, fewer than pool_size {config.pool_size}"
        )
    rng = np.random.default_rng(config.pool_seed)
    drawn = rng.choice(sorted(corpus), size=config.pool_size, replace=False)
    members = tuple(sorted(str(img) for img in drawn))

    verdicts: dict[tuple[str, str], JudgeVerdict] = {}
    for a, b in all_pairs(members):
        verdicts[(a, b)] = judge.compare(a, b)

    dimensions = next(iter(verdicts.values())).outcomes.keys()
    frozen: dict[str, dict[str, float]] = {img: {} for img in members}
    for dimension in dimensions:
        judgments = [
            PairJudgment(rater="pool-judge", a=a, b=b, dimension=dimension,
                         outcome=v.outcomes[dimension])
            for (a, b), v in verdicts.items()
        ]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", category=Warning)
            table = run_elo(judgments, config.elo_config)
        for img in members:
            frozen[img][dimension] = table[img]
    return ReferencePool(
        members=members,
        frozen_ratings=frozen,
        pool_seed=config.pool_seed,
        elo_config=config.elo_config,
    )


def estimate_posterior_rating(
    outcomes: Sequence[tuple[str, Outcome]],
    pool: ReferencePool,
    dimension: str,
    prior_scale: float = 1.0,
) -> float:
    """MAP rating from K pool comparisons under a pool-centered Gaussian prior.

    The likelihood treats each comparison as an Elo-logistic trial at the
    pool reference's frozen rating (ties count half). The posterior is
    strictly concave, so a guarded Newton iteration with bisection fallback
    on [mean - 6 std, mean + 6 std] finds the unique maximizer.
    """
    prior_mean, prior_std = pool.prior(dimension, prior_scale)
    if not outcomes:
        warnings.warn("no comparison outcomes; returning the prior mean", stacklevel=2)
        return prior_mean
    refs = []
    obs = []
    for ref_image, outcome in outcomes:
        if ref_image not in pool.frozen_ratings:
            raise ValidationError(f"reference {ref_image!r} is not a pool member")
        refs.append(pool.frozen_ratings[ref_image][dimension])
        obs.append(outcome.score)
    refs_arr = np.array(refs)
    obs_arr = np.array(obs)
    tau = pool.elo_config.temperature
    var = prior_std * prior_std
    lo = prior_mean - 6.0 * prior_std
    hi = prior_mean + 6.0 * prior_std

    def _sig(q: float) -> np.ndarray:
        with np.errstate(over="ignore"):
            return 1.0 / (1.0 + np.exp(-(q - refs_arr) / tau))

    def grad(q: float) -> float:
        return -(q - prior_mean) / var + float(np.sum(obs_arr - _sig(q))) / tau

    def hess(q: float) -> float:
        s = _sig(q)
        return -1.0 / var - float(np.sum(s * (1.0 - s))) / (tau * tau)

    g_lo, g_hi = grad(lo), grad(hi)
    if g_lo <= 0:
        return lo
    if g_hi >= 0:
        return hi
    q = min(max(prior_mean, lo), hi)
    for _ in range(100):
        g = grad(q)
        if abs(g) < 1e-10:
            return q
        if g > 0:
            lo = q
        else:
            hi = q
        step = g / hess(q)
        candidate = q - step
        if not lo < candidate < hi:
            candidate = 0.5 * (lo + hi)
        q = candidate
    return q


def pseudo_label_corpus(
    corpus: Sequence[str],
    judge: Judge,
    config: BridgeConfig = BridgeConfig(),
) -> BridgeRun:
    """Run all three bridge stages over a corpus.

    Pool members keep their frozen ratings; every other image is compared
    (as the first item) against K pool references sampled without
    replacement by a per-image seeded draw, then rated by posterior MAP.
    All ratings pass through the stretched sigmoid with per-dimension
    extrema taken over the whole corpus.
    """
    corpus = sorted(set(corpus))
    calls_before = judge.calls
    pool = build_pool(corpus, judge, config)
    pool_hash = _pool_fingerprint(pool)
    dimensions = sorted(next(iter(pool.frozen_ratings.values())).keys())

    qualities: dict[str, dict[str, float]] = {
        img: dict(pool.frozen_ratings[img]) for img in pool.members
    }
    pool_members = set(pool.members)
    for image in corpus:
        if image in pool_members:
            continue
        rng = np.random.default_rng(_hash_seed(config.pool_seed, image))
        refs = [
            pool.members[i]
            for i in sorted(rng.choice(len(pool.members), size=config.refs_per_image, replace=False))
        ]
        verdicts = {ref: judge.compare(image, ref) for ref in refs}
        qualities[image] = {}
        for dimension in dimensions:
            outcomes = [(ref, verdicts[ref].outcomes[dimension]) for ref in refs]
            qualities[image][dimension] = estimate_posterior_rating(
                outcomes, pool, dimension, config.prior_scale
            )

    if _pool_fingerprint(pool) != pool_hash:
        raise ValidationError("pool ratings mutated during stage 2")

    low, high = config.span
    scores: dict[str, dict[str, float]] = {img: {} for img in corpus}
    for dimension in dimensions:
        cal = BridgeCalibration.from_qualities(
            (qualities[img][dimension] for img in corpus),
            steepness=config.calibration_steepness,
            low=low,
            high=high,
        )
        for img in corpus:
            scores[img][dimension] = bridge_calibrate(qualities[img][dimension], cal)

    return BridgeRun(
        scores=scores,
        qualities=qualities,
        pool=pool,
        judge_calls=judge.calls - calls_before,
    )


def _pool_fingerprint(pool: ReferencePool) -> int:
    return hash(
        tuple(
            (img, tuple(sorted(pool.frozen_ratings[img].items())))
            for img in pool.members
        )
    )


def inference_cost(pool_size: int, refs_per_image: int, corpus_size: int) -> int:
    """Exact judge-call count for a full bridge run."""
    if corpus_size < pool_size:
        raise ValidationError(
            f"corpus size {corpus_size} is smaller than pool size {pool_size}"
        )
    return math.comb(pool_size, 2) + (corpus_size - pool_size) * refs_per_image


def majority_vote_cost(corpus_size: int, trials_per_image: int = 32) -> int:
    """Reference cost of per-image repeated pairwise voting."""
    return trials_per_image * corpus_size


def exhaustive_cost(corpus_size: int) -> int:
    """Reference cost of comparing every pair in the corpus."""
    return math.comb(corpus_size, 2)
