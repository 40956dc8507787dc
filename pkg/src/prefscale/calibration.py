"""Latent-quality to score-scale mappings.

Two calibrations share the logistic shape but differ in how the curve is
placed: the global sigmoid is least-squares fitted to anchor images pooled
across groups, while the bridge calibration stretches a fixed-steepness
sigmoid between the per-dimension rating extrema.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import ValidationError


def _sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


@dataclass(frozen=True)
class SigmoidFit:
    """score = low + (high - low) * sigmoid(a*q + b), with a > 0."""

    a: float
    b: float
    low: float = 1.0
    high: float = 5.0

    def __post_init__(self):
        if self.a <= 0:
            raise ValidationError(f"sigmoid slope must be positive, got {self.a}")
        if self.high <= self.low:
            raise ValidationError("score span must have high > low")


@dataclass(frozen=True)
class BridgeCalibration:
    """Fixed-steepness sigmoid stretched over the observed quality range."""

    q_min: float
    q_max: float
    steepness: float = 6.0
    low: float = 1.0
    high: float = 5.0

    def __post_init__(self):
        if self.q_max <= self.q_min:
            raise ValidationError(
                f"q_max ({self.q_max}) must exceed q_min ({self.q_min})"
            )
        if self.steepness <= 0:
            raise ValidationError("steepness must be positive")
        if self.high <= self.low:
            raise ValidationError("score span must have high > low")

    @classmethod
    def from_qualities(
        cls,
        qualities: Iterable[float],
        steepness: float = 6.0,
        low: float = 1.0,
        high: float = 5.0,
    ) -> "BridgeCalibration":
        qs = list(qualities)
        if not qs:
            raise ValidationError("no qualities to calibrate against")
        return cls(q_min=min(qs), q_max=max(qs), steepness=steepness, low=low, high=high)

    @property
    def score_floor(self) -> float:
        return self.low + (self.high - self.low) * _sigmoid(-self.steepness / 2.0)

    @property
    def score_ceiling(self) -> float:
        return self.low + (self.high - self.low) * _sigmoid(self.steepness / 2.0)


def fit_global_sigmoid(
    anchor_points: Sequence[tuple[float, float]],
    low: float = 1.0,
    high: float = 5.0,
) -> SigmoidFit:
    """Least-squares fit of logit((s - low)/(high - low)) against a*q + b.

    Anchor points are (latent quality, mean rating) pairs pooled across all
    groups. Ratings at exactly the span boundary have no finite logit and are
    rejected; at least two points with distinct qualities are required, and
    the fitted slope must come out positive (order-preserving).
    """
    if len(anchor_points) < 2:
        raise ValidationError("need at least 2 anchor points to fit the sigmoid")
    span = high - low
    qs = []
    ys = []
    for q, s in anchor_points:
        if not low < s < high:
            raise ValidationError(
                f"anchor rating {s} must lie strictly inside ({low}, {high})"
            )
        frac = (s - low) / span
        qs.append(q)
        ys.append(math.log(frac / (1.0 - frac)))
    if len(set(qs)) < 2:
        raise ValidationError("anchor points must span at least 2 distinct qualities")
    a, b = np.polyfit(np.asarray(qs), np.asarray(ys), deg=1)
    if a <= 0:
        raise ValidationError(
            f"fitted slope {a:.6g} is not positive; anchors disagree with quality order"
        )
    return SigmoidFit(a=float(a), b=float(b), low=low, high=high)


def apply_sigmoid(q: float, fit: SigmoidFit) -> float:
    """Strictly increasing map of a latent quality into the open score span."""
    return fit.low + (fit.high - fit.low) * _sigmoid(fit.a * q + fit.b)


def bridge_calibrate(q: float, cal: BridgeCalibration) -> float:
    """Map a quality through the stretched sigmoid; out-of-range q clamps.

    q_min and q_max land at the sigmoid evaluated at -steepness/2 and
    +steepness/2, so outputs never touch the span boundaries.
    """
    q = min(max(q, cal.q_min), cal.q_max)
    x = cal.steepness * (q - cal.q_min) / (cal.q_max - cal.q_min) - cal.steepness / 2.0
    return cal.low + (cal.high - cal.low) * _sigmoid(x)


def calibrate_table(
    qualities: dict[str, float],
    fit: SigmoidFit | None = None,
    bridge: BridgeCalibration | None = None,
) -> dict[str, float]:
    """Apply exactly one of the two calibrations to a whole quality table."""
    if (fit is None) == (bridge is None):
        raise ValidationError("provide exactly one of fit or bridge")
    if fit is not None:
        return {img: apply_sigmoid(q, fit) for img, q in qualities.items()}
    return {img: bridge_calibrate(q, bridge) for img, q in qualities.items()}
