"""Davidson-extended Bradley-Terry MAP estimation with scale anchors.

Win/tie/loss probabilities follow the Davidson model: a tie propensity `nu`
adds a geometric-mean term to the Bradley-Terry denominator. Latent
log-strengths are fit by maximizing the pairwise log-likelihood minus a
quadratic anchor penalty; `nu` is estimated jointly in log space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.special import logsumexp

from .core import AnchorEntry, PairJudgment, ValidationError

LOG_NU_BOUNDS = (-20.0, 20.0)


@dataclass(frozen=True)
class DbtConfig:
    anchor_penalty: float = 0.1
    max_iterations: int = 2000
    gradient_tolerance: float = 1e-6
    nu_init: float = 1.0
    anchor_target: str = "mean"  # or "median"

    def __post_init__(self):
        if self.anchor_penalty < 0:
            raise ValidationError("anchor_penalty must be >= 0")
        if self.max_iterations < 1:
            raise ValidationError("max_iterations must be >= 1")
        if self.nu_init <= 0:
            raise ValidationError("nu_init must be positive")
        if self.anchor_target not in ("mean", "median"):
            raise ValidationError("anchor_target must be 'mean' or 'median'")


@dataclass
class DavidsonParams:
    """Fitted log-strengths plus the shared tie propensity for one group."""

    qualities: dict[str, float]
    tie_propensity: float
    converged: bool = True

    def quality_vector(self, images: Sequence[str]) -> np.ndarray:
        return np.array([self.qualities[i] for i in images])


def davidson_probs(q_i: float, q_j: float, nu: float) -> tuple[float, float, float]:
    """(win, tie, loss) probabilities for the first item; rows sum to 1.

    Computed through shifted exponentials so large |q| cannot overflow.
    """
    if nu < 0:
        raise ValidationError("tie propensity must be >= 0")
    t_win = q_i
    t_loss = q_j
    t_tie = math.log(nu) + 0.5 * (q_i + q_j) if nu > 0 else -math.inf
    m = max(t_win, t_loss, t_tie)
    e_win = math.exp(t_win - m)
    e_loss = math.exp(t_loss - m)
    e_tie = math.exp(t_tie - m) if nu > 0 else 0.0
    z = e_win + e_loss + e_tie
    return e_win / z, e_tie / z, e_loss / z


def _anchor_target(entry: AnchorEntry, config: DbtConfig) -> float:
    # Latent targets re-center the 1-5 rating scale at zero. The median
    # variant falls back to the mean when no median was recorded.
    if config.anchor_target == "median" and entry.median_rating is not None:
        return entry.median_rating - 3.0
    return entry.mean_rating - 3.0


def _prepare(
    images: Sequence[str],
    judgments: Sequence[PairJudgment],
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    index = {img: k for k, img in enumerate(images)}
    ia = np.empty(len(judgments), dtype=np.intp)
    ib = np.empty(len(judgments), dtype=np.intp)
    outcome = np.empty(len(judgments))
    for k, j in enumerate(judgments):
        if j.a not in index or j.b not in index:
            missing = j.a if j.a not in index else j.b
            raise ValidationError(f"judgment references unknown image {missing!r}")
        ia[k] = index[j.a]
        ib[k] = index[j.b]
        outcome[k] = j.outcome.score
    return ia, ib, outcome


def neg_log_posterior(
    images: Sequence[str],
    q: np.ndarray,
    log_nu: float,
    judgments: Sequence[PairJudgment],
    anchors: Sequence[AnchorEntry],
    anchor_penalty: float,
    config: DbtConfig = DbtConfig(),
) -> tuple[float, np.ndarray]:
    """Negative anchored log-likelihood and its gradient in (q, log nu).

    Returns (value, gradient) where the gradient has one entry per image
    followed by the log-nu component.
    """
    q = np.asarray(q, dtype=float)
    grad_q = np.zeros_like(q)
    grad_log_nu = 0.0
    value = 0.0

    if judgments:
        ia, ib, outcome = _prepare(images, judgments)
        qi = q[ia]
        qj = q[ib]
        t = np.stack([qi, qj, log_nu + 0.5 * (qi + qj)])
        log_z = logsumexp(t, axis=0)
        p_win = np.exp(qi - log_z)
        p_loss = np.exp(qj - log_z)
        p_tie = np.exp(log_nu + 0.5 * (qi + qj) - log_z)
        is_tie = outcome == 0.5
        log_p = np.where(
            outcome == 1.0,
            qi - log_z,
            np.where(is_tie, log_nu + 0.5 * (qi + qj) - log_z, qj - log_z),
        )
        value -= float(log_p.sum())
        # d log P / d q_i = o - (p_win + p_tie/2); symmetric for q_j.
        e_i = p_win + 0.5 * p_tie
        e_j = p_loss + 0.5 * p_tie
        np.add.at(grad_q, ia, -(outcome - e_i))
        np.add.at(grad_q, ib, -((1.0 - outcome) - e_j))
        grad_log_nu -= float((is_tie.astype(float) - p_tie).sum())

    if anchors:
        index = {img: k for k, img in enumerate(images)}
        for entry in anchors:
            if entry.image not in index:
                raise ValidationError(
                    f"anchor image {entry.image!r} does not appear in the fit"
                )
            k = index[entry.image]
            target = _anchor_target(entry, config)
            diff = q[k] - target
            value += anchor_penalty * diff * diff
            grad_q[k] += 2.0 * anchor_penalty * diff

    return value, np.append(grad_q, grad_log_nu)


def fit_anchored_dbt(
    judgments: Sequence[PairJudgment],
    anchors: Sequence[AnchorEntry],
    config: DbtConfig = DbtConfig(),
    initial_q: dict[str, float] | None = None,
    initial_nu: float | None = None,
) -> DavidsonParams:
    """MAP fit of (q, nu) by L-BFGS-B with the analytic gradient.

    Starts from all-zero strengths and nu = nu_init unless overridden;
    log nu is clamped to [-20, 20] so an all-decisive dataset cannot drive
    the tie term to an unbounded optimum. Non-convergence within
    max_iterations returns the best iterate with converged=False.
    """
    if not judgments:
        raise ValidationError("cannot fit on an empty judgment list")
    images = sorted({img for j in judgments for img in (j.a, j.b)})
    n = len(images)

    x0 = np.zeros(n + 1)
    if initial_q is not None:
        for k, img in enumerate(images):
            x0[k] = initial_q.get(img, 0.0)
    x0[-1] = math.log(initial_nu if initial_nu is not None else config.nu_init)

    def objective(x: np.ndarray) -> tuple[float, np.ndarray]:
        return neg_log_posterior(
            images, x[:n], float(x[-1]), judgments, anchors,
            config.anchor_penalty, config,
        )

    bounds = [(None, None)] * n + [LOG_NU_BOUNDS]
    result = minimize(
        objective,
        x0,
        jac=True,
        method="L-BFGS-B",
        bounds=bounds,
        options={"maxiter": config.max_iterations, "gtol": config.gradient_tolerance},
    )
    qualities = {img: float(result.x[k]) for k, img in enumerate(images)}
    return DavidsonParams(
        qualities=qualities,
        tie_propensity=float(math.exp(result.x[-1])),
        converged=bool(result.success),
    )
