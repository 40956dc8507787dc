"""Agreement, stability, cross-method, and pair-budget diagnostics.

Panel data is passed as ``{rater: {image: value}}`` mappings and label
matrices as subjects x raters arrays. Every statistic here is checked
against an exhaustive small-instance oracle in the test suite.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.special import kolmogorov
from scipy.stats import pearsonr, rankdata, spearmanr

from .core import Outcome, PairJudgment, ValidationError
from .elo import EloConfig, run_elo

Scores = Mapping[str, float]

EXACT_KS_MAX_N = 35


def _as_arrays(x: Sequence[float], y: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    if xa.shape != ya.shape or xa.ndim != 1:
        raise ValidationError("inputs must be equal-length 1-D vectors")
    if len(xa) < 2:
        raise ValidationError("need at least 2 observations")
    return xa, ya


def srcc(x: Sequence[float], y: Sequence[float]) -> float:
    """Spearman rank correlation with average-rank tie handling."""
    xa, ya = _as_arrays(x, y)
    if np.all(xa == xa[0]) or np.all(ya == ya[0]):
        raise ValidationError("correlation undefined for a constant vector")
    rho = spearmanr(xa, ya).statistic
    return float(rho)


def plcc(x: Sequence[float], y: Sequence[float]) -> float:
    """Pearson linear correlation."""
    xa, ya = _as_arrays(x, y)
    if np.all(xa == xa[0]) or np.all(ya == ya[0]):
        raise ValidationError("correlation undefined for a constant vector")
    return float(pearsonr(xa, ya).statistic)


def mae(x: Sequence[float], y: Sequence[float]) -> float:
    xa, ya = _as_arrays(x, y)
    return float(np.mean(np.abs(xa - ya)))


def rmse(x: Sequence[float], y: Sequence[float]) -> float:
    xa, ya = _as_arrays(x, y)
    return float(np.sqrt(np.mean((xa - ya) ** 2)))


def kendalls_w(rankings: np.ndarray) -> float:
    """Tie-corrected coefficient of concordance over an m x n ranking matrix.

    Rows are raters; each row is re-ranked with average ranks, so raw scores
    are accepted as well.
    """
    mat = np.asarray(rankings, dtype=float)
    if mat.ndim != 2:
        raise ValidationError("rankings must be a 2-D matrix (raters x items)")
    m, n = mat.shape
    if m < 2 or n < 2:
        raise ValidationError(f"need >= 2 raters and >= 2 items, got {m} x {n}")
    ranks = np.vstack([rankdata(row, method="average") for row in mat])
    rank_sums = ranks.sum(axis=0)
    s = float(np.sum((rank_sums - rank_sums.mean()) ** 2))
    tie_term = 0.0
    for row in ranks:
        _, counts = np.unique(row, return_counts=True)
        tie_term += float(np.sum(counts**3 - counts))
    denom = m * m * (n**3 - n) - m * tie_term
    if denom <= 0:
        raise ValidationError("degenerate ranking matrix: all raters tie everything")
    return 12.0 * s / denom


def rank_scores(scores: Scores) -> dict[str, float]:
    """Average ranks of a score table (higher score -> higher rank)."""
    images = sorted(scores)
    ranks = rankdata([scores[i] for i in images], method="average")
    return dict(zip(images, ranks))


def _paired_vectors(a: Scores, b: Scores) -> tuple[list[float], list[float]]:
    common = sorted(set(a) & set(b))
    if len(common) < 2:
        raise ValidationError("score tables share fewer than 2 images")
    return [a[i] for i in common], [b[i] for i in common]


def srcc_tables(a: Scores, b: Scores) -> float:
    xs, ys = _paired_vectors(a, b)
    return srcc(xs, ys)


def split_half_spearman(
    per_rater_data: Mapping[str, object],
    aggregator: Callable[[Sequence[object]], Scores],
    splits: Sequence[tuple[tuple[str, ...], tuple[str, ...]]] | None = None,
) -> float:
    """Mean Spearman correlation between half-panel aggregates.

    All combinations of size floor(m/2) form one half, the remaining raters
    the other (10 exhaustive 2-vs-3 splits at m=5). The aggregator maps a
    list of per-rater datasets to one score table.
    """
    raters = sorted(per_rater_data)
    m = len(raters)
    if m < 4:
        raise ValidationError(f"split-half needs >= 4 raters, got {m}")
    if splits is None:
        half = m // 2
        splits = []
        for combo in itertools.combinations(raters, half):
            rest = tuple(r for r in raters if r not in combo)
            splits.append((combo, rest))
    values = []
    for half_a, half_b in splits:
        agg_a = aggregator([per_rater_data[r] for r in half_a])
        agg_b = aggregator([per_rater_data[r] for r in half_b])
        values.append(srcc_tables(agg_a, agg_b))
    return float(np.mean(values))


def triplet_separation(scores: Scores, tiers: Mapping[str, str]) -> float:
    """Fraction of (high, medium, low) triplets strictly ordered by score."""
    by_tier: dict[str, list[str]] = {"high": [], "medium": [], "low": []}
    for image, tier in tiers.items():
        if tier not in by_tier:
            raise ValidationError(f"unknown tier {tier!r} for image {image!r}")
        if image in scores:
            by_tier[tier].append(image)
    for tier, members in by_tier.items():
        if not members:
            raise ValidationError(f"tier {tier!r} has no scored images")
    hits = 0
    total = 0
    for h, m_, l in itertools.product(by_tier["high"], by_tier["medium"], by_tier["low"]):
        total += 1
        if scores[h] > scores[m_] > scores[l]:
            hits += 1
    return hits / total


def pairwise_ranking_accuracy(candidate: Scores, consensus: Scores) -> float:
    """Fraction of consensus-ordered item pairs the candidate orders the same way.

    Consensus ties are excluded; candidate ties on a decided pair count as
    disagreement.
    """
    if set(candidate) != set(consensus):
        raise ValidationError("candidate and consensus cover different item sets")
    items = sorted(consensus)
    agree = 0
    total = 0
    for a, b in itertools.combinations(items, 2):
        diff_c = consensus[a] - consensus[b]
        if diff_c == 0:
            continue
        total += 1
        diff_r = candidate[a] - candidate[b]
        if diff_r != 0 and (diff_r > 0) == (diff_c > 0):
            agree += 1
    if total == 0:
        raise ValidationError("consensus ties every pair; accuracy undefined")
    return agree / total


def to_consensus_pra(
    per_rater_rankings: Mapping[str, Scores],
    consensus_ranking: Scores,
) -> float:
    """Mean pairwise ranking accuracy of each rater against the consensus."""
    if not per_rater_rankings:
        raise ValidationError("no raters supplied")
    values = [
        pairwise_ranking_accuracy(ranking, consensus_ranking)
        for _, ranking in sorted(per_rater_rankings.items())
    ]
    return float(np.mean(values))


def _label_counts(labels: Sequence[Sequence[object]]) -> tuple[np.ndarray, list[object]]:
    categories = sorted({lab for row in labels for lab in row if lab is not None}, key=repr)
    cat_index = {c: k for k, c in enumerate(categories)}
    counts = np.zeros((len(labels), len(categories)), dtype=float)
    for i, row in enumerate(labels):
        for lab in row:
            if lab is not None:
                counts[i, cat_index[lab]] += 1
    return counts, categories


def fleiss_kappa(labels: Sequence[Sequence[object]]) -> float:
    """Fleiss' kappa over a complete subjects x raters label matrix."""
    if not labels:
        raise ValidationError("empty label matrix")
    m = len(labels[0])
    if m < 2:
        raise ValidationError("need >= 2 raters")
    for i, row in enumerate(labels):
        if len(row) != m or any(lab is None for lab in row):
            raise ValidationError(f"subject {i} is missing labels; kappa needs a complete matrix")
    counts, _ = _label_counts(labels)
    n_subjects = counts.shape[0]
    p_i = (np.sum(counts**2, axis=1) - m) / (m * (m - 1))
    p_bar = float(np.mean(p_i))
    p_j = counts.sum(axis=0) / (n_subjects * m)
    p_e = float(np.sum(p_j**2))
    if p_e >= 1.0:
        raise ValidationError("expected agreement is 1 (single category); kappa undefined")
    return (p_bar - p_e) / (1.0 - p_e)


def krippendorff_alpha_nominal(labels: Sequence[Sequence[object]]) -> float:
    """Nominal-metric Krippendorff's alpha; tolerates missing (None) cells."""
    counts, categories = _label_counts(labels)
    n_cats = len(categories)
    if n_cats == 0:
        raise ValidationError("no labels at all")
    coincidence = np.zeros((n_cats, n_cats))
    for row in counts:
        m_u = row.sum()
        if m_u < 2:
            continue
        outer = np.outer(row, row) - np.diag(row)
        coincidence += outer / (m_u - 1)
    n_total = coincidence.sum()
    if n_total <= 0:
        raise ValidationError("need at least one unit with >= 2 labels")
    n_c = coincidence.sum(axis=1)
    d_o = n_total - float(np.trace(coincidence))
    d_e = (n_total**2 - float(np.sum(n_c**2))) / (n_total - 1)
    if d_e == 0:
        raise ValidationError("expected disagreement is 0 (single category); alpha undefined")
    return 1.0 - d_o / d_e


def unanimity_rates(labels: Sequence[Sequence[object]]) -> tuple[float, float]:
    """(all-5-agree fraction, >=4-of-5 fraction) over a 5-rater label matrix."""
    if not labels or len(labels[0]) != 5:
        raise ValidationError("unanimity rates are defined for exactly 5 raters")
    full, four = agreement_rates(labels, thresholds=(5, 4))
    return full, four


def agreement_rates(
    labels: Sequence[Sequence[object]],
    thresholds: Sequence[int],
) -> tuple[float, ...]:
    """Fraction of subjects whose modal label reaches each threshold count."""
    if not labels:
        raise ValidationError("empty label matrix")
    m = len(labels[0])
    maxima = []
    for i, row in enumerate(labels):
        if len(row) != m or any(lab is None for lab in row):
            raise ValidationError(f"subject {i} is missing labels")
        best = max(sum(1 for lab in row if lab == c) for c in set(row))
        maxima.append(best)
    n = len(maxima)
    return tuple(sum(1 for b in maxima if b >= t) / n for t in thresholds)


def _ks_statistic_int(a: np.ndarray, b: np.ndarray) -> tuple[int, int]:
    """Max |i*m - j*n| over the merged sample walk, plus the n*m scale."""
    n, m = len(a), len(b)
    data_all = np.concatenate([a, b])
    cdf_a = np.searchsorted(np.sort(a), data_all, side="right")
    cdf_b = np.searchsorted(np.sort(b), data_all, side="right")
    gaps = np.abs(cdf_a * m - cdf_b * n)
    return int(gaps.max()), n * m


def _ks_exact_pvalue(h: int, n: int, m: int) -> float:
    """P(max |i*m - j*n| >= h) for tie-free samples, by lattice-path counting."""
    if h == 0:
        return 1.0
    # u[j] = number of admissible paths reaching (i, j); admissible means
    # |i*m - j*n| < h at every vertex. The row sweep reuses u in place:
    # before the update u[j] counts paths to (i-1, j), after it (i, j).
    u = [0] * (m + 1)
    u[0] = 1
    binom_total = math.comb(n + m, n)
    for i in range(n + 1):
        for j in range(m + 1):
            if abs(i * m - j * n) >= h:
                u[j] = 0
            elif j > 0:
                u[j] += u[j - 1]
    return max(0.0, min(1.0, 1.0 - u[m] / binom_total))


def ks_two_sample(a: Sequence[float], b: Sequence[float]) -> tuple[float, float]:
    """Two-sample Kolmogorov-Smirnov statistic and p-value.

    The p-value is exact (lattice-path enumeration) for tie-free samples with
    min(n, m) <= 35, and otherwise uses the asymptotic Kolmogorov distribution
    with the effective-sample-size correction.
    """
    aa = np.asarray(a, dtype=float)
    bb = np.asarray(b, dtype=float)
    if len(aa) == 0 or len(bb) == 0:
        raise ValidationError("both samples must be non-empty")
    h, scale = _ks_statistic_int(aa, bb)
    d = h / scale
    n, m = len(aa), len(bb)
    no_ties = len(np.unique(np.concatenate([aa, bb]))) == n + m
    if no_ties and min(n, m) <= EXACT_KS_MAX_N:
        p = _ks_exact_pvalue(h, n, m)
    else:
        ne = n * m / (n + m)
        p = float(kolmogorov(math.sqrt(ne) * d))
    return d, p


def induce_outcome(score_a: float, score_b: float, tie_epsilon: float) -> Outcome:
    diff = score_a - score_b
    if abs(diff) < tie_epsilon:
        return Outcome.TIE
    return Outcome.A_WINS if diff > 0 else Outcome.B_WINS


def decision_agreement(
    scores_a: Scores,
    scores_b: Scores,
    pairs: Sequence[tuple[str, str]],
    tie_epsilon: float,
) -> float:
    """Fraction of pairs on which two score tables induce the same 3-way call."""
    if tie_epsilon < 0:
        raise ValidationError("tie_epsilon must be >= 0")
    if not pairs:
        raise ValidationError("no pairs to compare")
    agree = 0
    for x, y in pairs:
        for table_name, table in (("a", scores_a), ("b", scores_b)):
            if x not in table or y not in table:
                missing = x if x not in table else y
                raise ValidationError(f"score table {table_name} is missing image {missing!r}")
        oa = induce_outcome(scores_a[x], scores_a[y], tie_epsilon)
        ob = induce_outcome(scores_b[x], scores_b[y], tie_epsilon)
        if oa is ob:
            agree += 1
    return agree / len(pairs)


@dataclass
class BudgetPoint:
    fraction: float
    mean_srcc: float
    mean_plcc: float
    flagged_draws: int = 0


def subsample_pairs(
    pairs: Sequence[tuple[str, str]],
    fraction: float,
    rng: np.random.Generator,
) -> list[tuple[str, str]]:
    n_keep = max(1, round(fraction * len(pairs)))
    idx = rng.choice(len(pairs), size=min(n_keep, len(pairs)), replace=False)
    return [pairs[i] for i in sorted(idx)]


def budget_subsample_study(
    full_judgments: Sequence[PairJudgment],
    fractions: Sequence[float],
    seeds: Sequence[int],
    config: EloConfig = EloConfig(),
    max_retries: int = 20,
) -> list[BudgetPoint]:
    """Elo ranking fidelity as the pair budget shrinks.

    The reference ranking aggregates every judgment. For each (fraction,
    seed) a uniform subsample of *pairs* is drawn (keeping all raters'
    judgments on kept pairs); draws that disconnect the comparison graph are
    redrawn up to ``max_retries`` and flagged if still disconnected.
    """
    from .core import ComparisonGraph

    if not full_judgments:
        raise ValidationError("no judgments supplied")
    reference = run_elo(full_judgments, config)
    by_pair: dict[tuple[str, str], list[PairJudgment]] = {}
    for j in full_judgments:
        by_pair.setdefault(j.pair, []).append(j)
    pairs = sorted(by_pair)
    n_nodes = len({img for p in pairs for img in p})

    curve = []
    for fraction in fractions:
        if not 0 < fraction <= 1:
            raise ValidationError(f"fraction {fraction} outside (0, 1]")
        srccs, plccs, flagged = [], [], 0
        for seed in seeds:
            rng = np.random.default_rng([seed, int(round(fraction * 10_000))])
            subset = subsample_pairs(pairs, fraction, rng)
            retries = 0
            while retries < max_retries:
                graph = ComparisonGraph.from_pairs(subset)
                if len(graph.nodes) == n_nodes and graph.is_connected():
                    break
                retries += 1
                subset = subsample_pairs(pairs, fraction, rng)
            else:
                flagged += 1
            sub_judgments = [j for p in subset for j in by_pair[p]]
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                table = run_elo(sub_judgments, config)
            common = sorted(set(table) & set(reference))
            xs = [table[i] for i in common]
            ys = [reference[i] for i in common]
            srccs.append(srcc(xs, ys))
            plccs.append(plcc(xs, ys))
        curve.append(
            BudgetPoint(
                fraction=float(fraction),
                mean_srcc=float(np.mean(srccs)),
                mean_plcc=float(np.mean(plccs)),
                flagged_draws=flagged,
            )
        )
    return curve


def leave_one_out_stability(
    per_rater_data: Mapping[str, object],
    aggregator: Callable[[Sequence[object]], Scores],
    top_k: int = 10,
) -> tuple[float, float]:
    """(mean SRCC, mean top-k overlap) between leave-one-out and full panels."""
    raters = sorted(per_rater_data)
    if len(raters) < 3:
        raise ValidationError(f"leave-one-out needs >= 3 raters, got {len(raters)}")
    full = aggregator([per_rater_data[r] for r in raters])
    k = min(top_k, len(full))
    full_top = set(sorted(full, key=lambda i: (-full[i], i))[:k])
    srccs, overlaps = [], []
    for leave_out in raters:
        rest = [per_rater_data[r] for r in raters if r != leave_out]
        reduced = aggregator(rest)
        srccs.append(srcc_tables(reduced, full))
        reduced_top = set(sorted(reduced, key=lambda i: (-reduced[i], i))[:k])
        overlaps.append(len(reduced_top & full_top) / k)
    return float(np.mean(srccs)), float(np.mean(overlaps))


def transitivity_violation_rate(judgments: Sequence[PairJudgment]) -> float:
    """Fraction of fully-judged triples forming a strict preference cycle.

    Ties break a potential cycle, so triples containing one are never
    violations. Returns 0 (with a warning) when no triple has all three
    pairs judged.
    """
    outcome_by_pair: dict[tuple[str, str], Outcome] = {}
    for j in judgments:
        c = j.canonical()
        outcome_by_pair[(c.a, c.b)] = c.outcome
    items = sorted({img for pair in outcome_by_pair for img in pair})

    def judged(x: str, y: str) -> bool:
        return ((x, y) if x <= y else (y, x)) in outcome_by_pair

    def beats(x: str, y: str) -> bool:
        key = (x, y) if x <= y else (y, x)
        out = outcome_by_pair[key]
        if out is Outcome.TIE:
            return False
        return (out is Outcome.A_WINS) == (key == (x, y))

    total = 0
    violations = 0
    for a, b, c in itertools.combinations(items, 3):
        if not (judged(a, b) and judged(b, c) and judged(a, c)):
            continue
        total += 1
        forward = beats(a, b) and beats(b, c) and beats(c, a)
        backward = beats(b, a) and beats(c, b) and beats(a, c)
        if forward or backward:
            violations += 1
    if total == 0:
        warnings.warn("no fully-judged triples; transitivity rate defaults to 0", stacklevel=2)
        return 0.0
    return violations / total


# ---------------------------------------------------------------------------
# Panel aggregators shared by split-half and leave-one-out studies
# ---------------------------------------------------------------------------

def mean_rating_aggregator(datasets: Sequence[Mapping[str, float]]) -> dict[str, float]:
    """Pointwise panel aggregate: mean score per image."""
    sums: dict[str, float] = {}
    counts: dict[str, int] = {}
    for data in datasets:
        for image, score in data.items():
            sums[image] = sums.get(image, 0.0) + score
            counts[image] = counts.get(image, 0) + 1
    return {image: sums[image] / counts[image] for image in sums}


def make_elo_aggregator(config: EloConfig = EloConfig()) -> Callable[[Sequence[Sequence[PairJudgment]]], dict[str, float]]:
    """Pairwise panel aggregate: plain Elo over the pooled judgments."""

    def aggregate(datasets: Sequence[Sequence[PairJudgment]]) -> dict[str, float]:
        pooled = [j for data in datasets for j in data]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", category=Warning)
            return run_elo(pooled, config)

    return aggregate
