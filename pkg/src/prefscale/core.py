"""Domain records, dataset validation, and graph utilities.

Everything downstream (Elo, Davidson Bradley-Terry, diagnostics) consumes
the record types defined here. Records are immutable; all operations are
pure functions over them.
"""

from __future__ import annotations

import enum
import itertools
import json
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

DEFAULT_DIMENSIONS = ("technique", "coloration", "composition", "mood", "overall")

# 3-dimension / 1-10 profile for rubrics scored on a wider span.
THREE_DIM_DIMENSIONS = ("composition", "texture", "overall")


class PrefscaleError(Exception):
    """Base class for all library errors."""


class ValidationError(PrefscaleError):
    """Raised when inputs violate a documented precondition."""


class Outcome(enum.Enum):
    """Three-way result of a pairwise comparison, from the first item's view."""

    A_WINS = "A"
    TIE = "TIE"
    B_WINS = "B"

    @property
    def score(self) -> float:
        """Numeric encoding: 1 for a win, 0.5 for a tie, 0 for a loss."""
        return {Outcome.A_WINS: 1.0, Outcome.TIE: 0.5, Outcome.B_WINS: 0.0}[self]

    def mirrored(self) -> "Outcome":
        """The same judgment seen from the second item's side."""
        if self is Outcome.A_WINS:
            return Outcome.B_WINS
        if self is Outcome.B_WINS:
            return Outcome.A_WINS
        return Outcome.TIE

    @classmethod
    def from_score(cls, score: float) -> "Outcome":
        if score == 1.0:
            return cls.A_WINS
        if score == 0.5:
            return cls.TIE
        if score == 0.0:
            return cls.B_WINS
        raise ValidationError(f"outcome score must be 1, 0.5 or 0, got {score}")


@dataclass(frozen=True)
class PairJudgment:
    """One rater's A-wins/Tie/B-wins call for an (image pair, dimension)."""

    rater: str
    a: str
    b: str
    dimension: str
    outcome: Outcome
    timestamp_ms: int = 0
    is_repeat: bool = False

    def __post_init__(self):
        if self.a == self.b:
            raise ValidationError(f"self-pair judgment for image {self.a!r}")

    def canonical(self) -> "PairJudgment":
        """Reorder so a < b lexicographically, mirroring the outcome."""
        if self.a <= self.b:
            return self
        return PairJudgment(
            rater=self.rater,
            a=self.b,
            b=self.a,
            dimension=self.dimension,
            outcome=self.outcome.mirrored(),
            timestamp_ms=self.timestamp_ms,
            is_repeat=self.is_repeat,
        )

    @property
    def pair(self) -> tuple[str, str]:
        return (self.a, self.b) if self.a <= self.b else (self.b, self.a)


@dataclass(frozen=True)
class RatingRecord:
    """One rater's integer score for an (image, dimension)."""

    rater: str
    image: str
    dimension: str
    score: int
    timestamp_ms: int = 0
    is_repeat: bool = False

    def __post_init__(self):
        if not isinstance(self.score, int) or isinstance(self.score, bool):
            raise ValidationError(f"rating score must be an integer, got {self.score!r}")


@dataclass(frozen=True)
class GroupKey:
    """A (category, dimension) cell; all fusion math runs per group."""

    category: str
    dimension: str


@dataclass(frozen=True)
class AnchorEntry:
    image: str
    mean_rating: float
    level: int
    median_rating: float | None = None


@dataclass(frozen=True)
class AnchorSet:
    """Low-variance rated images that pin the latent scale per group.

    ``entries`` maps each GroupKey to its anchors; every group should span
    at least two distinct levels (levels 2/3/4 by default, boundary levels
    1 and 5 are avoided).
    """

    entries: Mapping[GroupKey, tuple[AnchorEntry, ...]]

    def for_group(self, group: GroupKey) -> tuple[AnchorEntry, ...]:
        return self.entries.get(group, ())

    def validate(self) -> None:
        for group, anchors in self.entries.items():
            levels = {a.level for a in anchors}
            if len(anchors) < 2 or len(levels) < 2:
                raise ValidationError(
                    f"group {group} needs >= 2 anchors spanning >= 2 levels, "
                    f"got {len(anchors)} anchors at levels {sorted(levels)}"
                )
            for a in anchors:
                if not 1.0 <= a.mean_rating <= 5.0:
                    raise ValidationError(
                        f"anchor {a.image!r} mean rating {a.mean_rating} outside [1, 5]"
                    )


@dataclass(frozen=True)
class ComparisonGraph:
    """Undirected comparison graph over images (no self-loops)."""

    nodes: frozenset[str]
    edges: frozenset[tuple[str, str]]

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, str]], nodes: Iterable[str] = ()) -> "ComparisonGraph":
        node_set = set(nodes)
        edge_set = set()
        for a, b in pairs:
            if a == b:
                raise ValidationError(f"self-loop on {a!r}")
            edge_set.add((a, b) if a <= b else (b, a))
            node_set.add(a)
            node_set.add(b)
        return cls(nodes=frozenset(node_set), edges=frozenset(edge_set))

    @classmethod
    def from_judgments(cls, judgments: Iterable[PairJudgment]) -> "ComparisonGraph":
        return cls.from_pairs((j.a, j.b) for j in judgments)

    def adjacency(self) -> dict[str, set[str]]:
        adj: dict[str, set[str]] = {n: set() for n in self.nodes}
        for a, b in self.edges:
            adj[a].add(b)
            adj[b].add(a)
        return adj

    def components(self) -> list[set[str]]:
        adj = self.adjacency()
        seen: set[str] = set()
        comps = []
        for start in sorted(self.nodes):
            if start in seen:
                continue
            comp = {start}
            queue = deque([start])
            while queue:
                u = queue.popleft()
                for v in adj[u]:
                    if v not in comp:
                        comp.add(v)
                        queue.append(v)
            seen |= comp
            comps.append(comp)
        return comps

    def is_connected(self) -> bool:
        return len(self.nodes) <= 1 or len(self.components()) == 1


def graph_stats(graph: ComparisonGraph) -> tuple[int, float]:
    """Exact diameter and mean shortest-path length over unordered node pairs.

    Raises ValidationError (reporting the component count) if the graph is
    disconnected or has fewer than two nodes.
    """
    comps = graph.components()
    if len(comps) != 1:
        raise ValidationError(f"graph is disconnected: {len(comps)} components")
    nodes = sorted(graph.nodes)
    if len(nodes) < 2:
        raise ValidationError("graph needs >= 2 nodes for path statistics")
    adj = graph.adjacency()
    diameter = 0
    total = 0
    count = 0
    for i, start in enumerate(nodes):
        dist = {start: 0}
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if v not in dist:
                    dist[v] = dist[u] + 1
                    queue.append(v)
        for other in nodes[i + 1:]:
            d = dist[other]
            total += d
            count += 1
            if d > diameter:
                diameter = d
    return diameter, total / count


@dataclass
class ValidationReport:
    """Report-only result of validate_dataset; never raises."""

    range_violations: list[RatingRecord] = field(default_factory=list)
    self_pairs: list[dict] = field(default_factory=list)
    duplicate_judgments: list[tuple[str, tuple[str, str], str]] = field(default_factory=list)
    disconnected_groups: list[tuple[str, int]] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not (
            self.range_violations
            or self.self_pairs
            or self.duplicate_judgments
            or self.disconnected_groups
        )


def validate_dataset(
    ratings: Sequence[RatingRecord],
    judgments: Sequence[PairJudgment],
    score_range: tuple[int, int] = (1, 5),
) -> ValidationReport:
    """Scan a dataset for out-of-range scores, self-pairs, duplicate
    (rater, pair, dimension) judgments, and disconnected per-dimension graphs."""
    report = ValidationReport()
    lo, hi = score_range
    for r in ratings:
        if not lo <= r.score <= hi:
            report.range_violations.append(r)
    seen: set[tuple[str, tuple[str, str], str]] = set()
    by_dimension: dict[str, list[PairJudgment]] = {}
    for j in judgments:
        # PairJudgment construction already rejects self-pairs, so raw dicts
        # are checked by callers at ingestion; duplicates are detected here.
        key = (j.rater, j.pair, j.dimension)
        if key in seen:
            report.duplicate_judgments.append(key)
        seen.add(key)
        by_dimension.setdefault(j.dimension, []).append(j)
    for dimension, js in sorted(by_dimension.items()):
        graph = ComparisonGraph.from_judgments(js)
        n_comp = len(graph.components())
        if n_comp > 1:
            report.disconnected_groups.append((dimension, n_comp))
    return report


def induce_pairwise_from_ratings(
    ratings: Sequence[RatingRecord],
    pairs: Sequence[tuple[str, str]],
) -> list[PairJudgment]:
    """Project one rater's pointwise scores onto pairwise outcomes.

    All ratings must come from a single rater and dimension; the outcome for
    (a, b) is A-wins/Tie/B-wins by comparing score(a) to score(b).
    """
    raters = {r.rater for r in ratings}
    dimensions = {r.dimension for r in ratings}
    if len(raters) > 1 or len(dimensions) > 1:
        raise ValidationError(
            f"expected one rater and one dimension, got raters={sorted(raters)} "
            f"dimensions={sorted(dimensions)}"
        )
    scores = {r.image: r.score for r in ratings}
    rater = next(iter(raters)) if raters else ""
    dimension = next(iter(dimensions)) if dimensions else ""
    out = []
    for a, b in pairs:
        for img in (a, b):
            if img not in scores:
                raise ValidationError(f"rater {rater!r} has no score for image {img!r}")
        if scores[a] > scores[b]:
            outcome = Outcome.A_WINS
        elif scores[a] < scores[b]:
            outcome = Outcome.B_WINS
        else:
            outcome = Outcome.TIE
        out.append(PairJudgment(rater=rater, a=a, b=b, dimension=dimension, outcome=outcome))
    return out


def all_pairs(images: Sequence[str]) -> list[tuple[str, str]]:
    """All unordered pairs in lexicographic order."""
    return list(itertools.combinations(sorted(images), 2))


def sample_pair_budget(
    images: Sequence[str],
    budget: int,
    seed: int,
    max_diameter: int | None = 2,
    max_retries: int = 50,
) -> list[tuple[str, str]]:
    """Uniformly sample ``budget`` pairs whose graph stays tightly connected.

    Rejection-samples until the graph covers every image, is connected, and
    (when max_diameter is set) has diameter <= max_diameter. At half coverage
    on 50 images a diameter-2 draw almost always passes on the first try;
    pass max_diameter=None for sparse budgets where only connectivity is
    achievable.
    """
    import numpy as np

    candidates = all_pairs(images)
    n = len(images)
    if budget > len(candidates):
        raise ValidationError(
            f"budget {budget} exceeds the {len(candidates)} available pairs"
        )
    if budget < n - 1:
        raise ValidationError(f"budget {budget} cannot connect {n} images")
    rng = np.random.default_rng(seed)
    for _ in range(max_retries):
        idx = rng.choice(len(candidates), size=budget, replace=False)
        pairs = [candidates[i] for i in sorted(idx)]
        graph = ComparisonGraph.from_pairs(pairs, nodes=images)
        if not graph.is_connected():
            continue
        if max_diameter is not None:
            diameter, _ = graph_stats(graph)
            if diameter > max_diameter:
                continue
        return pairs
    raise ValidationError(
        f"could not sample a connected"
        f"{'' if max_diameter is None else f' diameter-{max_diameter}'} "
        f"graph in {max_retries} tries"
    )


# ---------------------------------------------------------------------------
# JSONL record formats and the corpus manifest
# ---------------------------------------------------------------------------

def judgment_to_json(j: PairJudgment) -> dict:
    return {
        "rater": j.rater,
        "a": j.a,
        "b": j.b,
        "dimension": j.dimension,
        "outcome": j.outcome.value,
        "ts": j.timestamp_ms,
        "repeat": j.is_repeat,
    }


def judgment_from_json(obj: Mapping) -> PairJudgment:
    try:
        outcome = Outcome(obj["outcome"])
    except ValueError as exc:
        raise ValidationError(f"unknown outcome {obj.get('outcome')!r}") from exc
    return PairJudgment(
        rater=str(obj["rater"]),
        a=str(obj["a"]),
        b=str(obj["b"]),
        dimension=str(obj["dimension"]),
        outcome=outcome,
        timestamp_ms=int(obj.get("ts", 0)),
        is_repeat=bool(obj.get("repeat", False)),
    ).canonical()


def rating_to_json(r: RatingRecord) -> dict:
    return {
        "rater": r.rater,
        "image": r.image,
        "dimension": r.dimension,
        "score": r.score,
        "ts": r.timestamp_ms,
        "repeat": r.is_repeat,
    }


def rating_from_json(obj: Mapping) -> RatingRecord:
    return RatingRecord(
        rater=str(obj["rater"]),
        image=str(obj["image"]),
        dimension=str(obj["dimension"]),
        score=int(obj["score"]),
        timestamp_ms=int(obj.get("ts", 0)),
        is_repeat=bool(obj.get("repeat", False)),
    )


def write_jsonl(path: str | Path, rows: Iterable[Mapping]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")


def read_jsonl(path: str | Path) -> list[dict]:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    return rows


def load_judgments(path: str | Path) -> list[PairJudgment]:
    return [judgment_from_json(obj) for obj in read_jsonl(path)]


def load_ratings(path: str | Path) -> list[RatingRecord]:
    return [rating_from_json(obj) for obj in read_jsonl(path)]


def save_judgments(path: str | Path, judgments: Iterable[PairJudgment]) -> None:
    write_jsonl(path, (judgment_to_json(j) for j in judgments))


def save_ratings(path: str | Path, ratings: Iterable[RatingRecord]) -> None:
    write_jsonl(path, (rating_to_json(r) for r in ratings))


def load_manifest(path: str | Path) -> dict[str, dict]:
    """Corpus manifest: JSON object mapping image id -> {category, path}."""
    with open(path, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    if not isinstance(manifest, dict):
        raise ValidationError("manifest must be a JSON object keyed by image id")
    return manifest


def group_of(image: str, manifest: Mapping[str, Mapping] | None, dimension: str) -> GroupKey:
    category = "default"
    if manifest and image in manifest:
        category = str(manifest[image].get("category", "default"))
    return GroupKey(category=category, dimension=dimension)


def group_judgments(
    judgments: Iterable[PairJudgment],
    manifest: Mapping[str, Mapping] | None = None,
) -> dict[GroupKey, list[PairJudgment]]:
    """Bucket judgments into (category, dimension) groups via the manifest."""
    groups: dict[GroupKey, list[PairJudgment]] = {}
    for j in judgments:
        key = group_of(j.a, manifest, j.dimension)
        groups.setdefault(key, []).append(j)
    return groups


def group_ratings(
    ratings: Iterable[RatingRecord],
    manifest: Mapping[str, Mapping] | None = None,
) -> dict[GroupKey, list[RatingRecord]]:
    groups: dict[GroupKey, list[RatingRecord]] = {}
    for r in ratings:
        key = group_of(r.image, manifest, r.dimension)
        groups.setdefault(key, []).append(r)
    return groups


def select_anchors(
    ratings: Sequence[RatingRecord],
    manifest: Mapping[str, Mapping] | None = None,
    levels: Sequence[int] = (2, 3, 4),
    per_level: int = 2,
) -> AnchorSet:
    """Pick low-disagreement rated images as scale anchors per group.

    For each group and each target level, candidates whose mean rating rounds
    to the level are ranked by inter-rater standard deviation and the
    ``per_level`` most agreed-upon are kept. Boundary levels 1 and 5 are
    excluded by default.
    """
    import statistics

    entries: dict[GroupKey, tuple[AnchorEntry, ...]] = {}
    for group, rs in group_ratings(ratings, manifest).items():
        per_image: dict[str, list[int]] = {}
        for r in rs:
            if not r.is_repeat:
                per_image.setdefault(r.image, []).append(r.score)
        stats = []
        for image, scores in per_image.items():
            mean = sum(scores) / len(scores)
            std = statistics.pstdev(scores) if len(scores) > 1 else 0.0
            median = float(statistics.median(scores))
            stats.append((image, mean, std, median))
        anchors: list[AnchorEntry] = []
        for level in levels:
            candidates = [s for s in stats if round(s[1]) == level]
            candidates.sort(key=lambda s: (s[2], abs(s[1] - level), s[0]))
            for image, mean, _, median in candidates[:per_level]:
                anchors.append(
                    AnchorEntry(image=image, mean_rating=mean, level=level, median_rating=median)
                )
        if anchors:
            entries[group] = tuple(anchors)
    anchor_set = AnchorSet(entries=entries)
    anchor_set.validate()
    return anchor_set


def anchors_to_json(anchors: AnchorSet) -> list[dict]:
    rows = []
    for group, entries in sorted(anchors.entries.items(), key=lambda kv: (kv[0].category, kv[0].dimension)):
        for e in entries:
            row = {
                "category": group.category,
                "dimension": group.dimension,
                "image": e.image,
                "mean_rating": e.mean_rating,
                "level": e.level,
            }
            if e.median_rating is not None:
                row["median_rating"] = e.median_rating
            rows.append(row)
    return rows


def anchors_from_json(rows: Iterable[Mapping]) -> AnchorSet:
    entries: dict[GroupKey, list[AnchorEntry]] = {}
    for obj in rows:
        key = GroupKey(category=str(obj.get("category", "default")), dimension=str(obj["dimension"]))
        median = obj.get("median_rating")
        entries.setdefault(key, []).append(
            AnchorEntry(
                image=str(obj["image"]),
                mean_rating=float(obj["mean_rating"]),
                level=int(obj["level"]),
                median_rating=float(median) if median is not None else None,
            )
        )
    return AnchorSet(entries={k: tuple(v) for k, v in entries.items()})


def load_anchors(path: str | Path) -> AnchorSet:
    return anchors_from_json(read_jsonl(path))


def save_anchors(path: str | Path, anchors: AnchorSet) -> None:
    write_jsonl(path, anchors_to_json(anchors))
