"""Iterative Elo aggregation and its anchored variant.

A run is always over one (category, dimension) group: ratings start at a
common value, every pass replays all judgments in a deterministically
shuffled order with a geometrically decaying step, and (in the anchored
variant) anchor images are pulled back toward level-mapped targets after
each pass.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import AnchorEntry, ComparisonGraph, PairJudgment, ValidationError

LN10 = math.log(10.0)


class DisconnectedGraphWarning(RuntimeWarning):
    """Comparison graph had multiple components; they were rated independently."""


@dataclass(frozen=True)
class EloConfig:
    initial_rating: float = 1500.0
    step_k: float = 32.0
    step_k_anchor: float = 6.0
    step_decay: float = 0.995
    anchor_strength: float = 0.15
    anchor_gap: float = 400.0
    passes: int = 150
    shuffle_seed: int = 42
    temperature: float = 400.0 / LN10

    def __post_init__(self):
        if self.temperature <= 0:
            raise ValidationError("temperature must be positive")
        if self.step_k <= 0 or self.step_k_anchor <= 0 or self.step_decay <= 0:
            raise ValidationError("step sizes and decay must be positive")
        if not 0 < self.anchor_strength <= 1:
            raise ValidationError("anchor_strength must lie in (0, 1]")
        if self.anchor_gap <= 0:
            raise ValidationError("anchor_gap must be positive")
        if self.passes < 1:
            raise ValidationError("passes must be >= 1")


@dataclass
class EloState:
    """Mutable ratings during a run; exposed for stepwise use in tests/demos."""

    ratings: dict[str, float]
    pass_index: int = 0


def expected_score(q_i: float, q_j: float, temperature: float) -> float:
    """Win expectation sigma((q_i - q_j) / temperature), in (0, 1)."""
    if temperature <= 0:
        raise ValidationError("temperature must be positive")
    x = (q_i - q_j) / temperature
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def update_pair(
    state: EloState,
    pair: tuple[str, str],
    outcome_score: float,
    step: float,
    temperature: float,
) -> EloState:
    """Apply one zero-sum update: each side moves by step * (observed - expected)."""
    a, b = pair
    if a not in state.ratings or b not in state.ratings:
        missing = a if a not in state.ratings else b
        raise ValidationError(f"image {missing!r} has no rating in the current state")
    e_ab = expected_score(state.ratings[a], state.ratings[b], temperature)
    state.ratings[a] += step * (outcome_score - e_ab)
    state.ratings[b] += step * ((1.0 - outcome_score) - (1.0 - e_ab))
    return state


def level_to_elo_target(mean_rating: float, config: EloConfig) -> float:
    """Map a 1-5 mean rating onto the Elo scale, linearly, with score 3 at r0."""
    if not 1.0 <= mean_rating <= 5.0:
        raise ValidationError(f"mean rating {mean_rating} outside [1, 5]")
    return config.initial_rating + (mean_rating - 3.0) * config.anchor_gap


def _check_connectivity(judgments: Sequence[PairJudgment]) -> None:
    graph = ComparisonGraph.from_judgments(judgments)
    comps = graph.components()
    if len(comps) > 1:
        warnings.warn(
            f"comparison graph has {len(comps)} components; rating each independently",
            DisconnectedGraphWarning,
            stacklevel=3,
        )


def _run(
    judgments: Sequence[PairJudgment],
    config: EloConfig,
    anchors: Sequence[AnchorEntry] | None,
) -> dict[str, float]:
    if not judgments:
        raise ValidationError("cannot run Elo on an empty judgment list")
    _check_connectivity(judgments)

    images = sorted({img for j in judgments for img in (j.a, j.b)})
    index = {img: i for i, img in enumerate(images)}
    ratings = [config.initial_rating] * len(images)

    anchor_targets: list[tuple[int, float]] = []
    anchor_idx: set[int] = set()
    if anchors is not None:
        for entry in anchors:
            if entry.image not in index:
                raise ValidationError(
                    f"anchor image {entry.image!r} does not appear in the judgments"
                )
            i = index[entry.image]
            anchor_idx.add(i)
            anchor_targets.append((i, level_to_elo_target(entry.mean_rating, config)))

    ia = [index[j.a] for j in judgments]
    ib = [index[j.b] for j in judgments]
    outcomes = [j.outcome.score for j in judgments]
    touches_anchor = [ia[k] in anchor_idx or ib[k] in anchor_idx for k in range(len(judgments))]

    tau = config.temperature
    alpha = config.anchor_strength
    exp = math.exp
    for pass_index in range(config.passes):
        decay = config.step_decay ** pass_index
        step_plain = config.step_k * decay
        step_anchor = config.step_k_anchor * decay
        rng = np.random.default_rng([config.shuffle_seed, pass_index])
        order = rng.permutation(len(judgments))
        for k in order:
            i, j = ia[k], ib[k]
            qi, qj = ratings[i], ratings[j]
            x = (qi - qj) / tau
            if x >= 0:
                e_ij = 1.0 / (1.0 + exp(-x))
            else:
                ex = exp(x)
                e_ij = ex / (1.0 + ex)
            step = step_anchor if touches_anchor[k] else step_plain
            delta = step * (outcomes[k] - e_ij)
            ratings[i] = qi + delta
            ratings[j] = qj - delta
        for i, target in anchor_targets:
            ratings[i] += alpha * (target - ratings[i])
    return {img: ratings[index[img]] for img in images}


def run_elo(judgments: Sequence[PairJudgment], config: EloConfig = EloConfig()) -> dict[str, float]:
    """Aggregate one group's judgments into per-image ratings.

    Deterministic given (judgments, config): pass ``p`` shuffles with a
    generator seeded by (shuffle_seed, p) and uses step ``step_k * decay**p``.
    """
    return _run(judgments, config, anchors=None)


def run_anchored_elo(
    judgments: Sequence[PairJudgment],
    anchors: Sequence[AnchorEntry],
    config: EloConfig = EloConfig(),
) -> dict[str, float]:
    """run_elo plus scale anchoring.

    Pairs touching an anchor image use the smaller ``step_k_anchor`` step, and
    after every full pass each anchor rating moves a fraction
    ``anchor_strength`` of the way toward its level-mapped target.
    """
    if not anchors:
        raise ValidationError("anchored run requires at least one anchor")
    return _run(judgments, config, anchors=anchors)
