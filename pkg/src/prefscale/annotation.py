"""Annotation campaign domain: task queues, timing gates, storage, QC.

The HTTP layer in service.py is a thin shell over this module. All gate
decisions use the server clock injected into Campaign; client-side timers
are advisory only. Accepted submissions append to a JSONL log that fully
reconstructs campaign state on restart.
"""

from __future__ import annotations

import json
import statistics
import time
import uuid
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from . import diagnostics
from .core import (
    Outcome,
    PairJudgment,
    RatingRecord,
    ValidationError,
    sample_pair_budget,
)
from .core import DEFAULT_DIMENSIONS

POINTWISE = "pointwise"
PAIRWISE = "pairwise"


class AuthError(ValidationError):
    pass


class GateError(ValidationError):
    """Request arrived before a timing gate elapsed."""

    def __init__(self, message: str, retry_after_ms: int):
        super().__init__(message)
        self.retry_after_ms = retry_after_ms


class ConflictError(ValidationError):
    pass


@dataclass(frozen=True)
class CampaignConfig:
    campaign_id: str
    category: str
    images: tuple[str, ...]
    annotators: tuple[str, ...]
    dimensions: tuple[str, ...] = DEFAULT_DIMENSIONS
    pair_budget: int = 612
    pair_seed: int = 42
    repeats_pointwise: int = 10
    repeat_gap_pointwise: int = 5
    repeats_pairwise: int = 30
    repeat_gap_pairwise: int = 10
    guidelines_min_ms: int = 10_000
    min_view_pointwise_ms: int = 5_000
    min_view_pairwise_ms: int = 10_000
    pairwise_unlock_ms: int | None = None  # None: unlock when pointwise completes
    queue_seed: int = 7

    def __post_init__(self):
        if len(self.images) < 2:
            raise ValidationError("campaign needs >= 2 images")
        if not self.annotators:
            raise ValidationError("campaign needs >= 1 annotator")
        if self.repeats_pointwise > len(self.images):
            raise ValidationError("more pointwise repeats than images")
        if self.repeat_gap_pointwise < 1 or self.repeat_gap_pairwise < 1:
            raise ValidationError("repeat gaps must be >= 1")

    @classmethod
    def from_json(cls, obj: Mapping) -> "CampaignConfig":
        return cls(
            campaign_id=str(obj["id"]),
            category=str(obj.get("category", "default")),
            images=tuple(obj["images"]),
            annotators=tuple(obj["annotators"]),
            dimensions=tuple(obj.get("dimensions", DEFAULT_DIMENSIONS)),
            pair_budget=int(obj.get("pair_budget", 612)),
            pair_seed=int(obj.get("pair_seed", 42)),
            repeats_pointwise=int(obj.get("repeats_pointwise", 10)),
            repeat_gap_pointwise=int(obj.get("repeat_gap_pointwise", 5)),
            repeats_pairwise=int(obj.get("repeats_pairwise", 30)),
            repeat_gap_pairwise=int(obj.get("repeat_gap_pairwise", 10)),
            guidelines_min_ms=int(obj.get("guidelines_min_ms", 10_000)),
            min_view_pointwise_ms=int(obj.get("min_view_pointwise_ms", 5_000)),
            min_view_pairwise_ms=int(obj.get("min_view_pairwise_ms", 10_000)),
            pairwise_unlock_ms=obj.get("pairwise_unlock_ms"),
            queue_seed=int(obj.get("queue_seed", 7)),
        )


@dataclass
class Task:
    task_id: str
    kind: str  # POINTWISE | PAIRWISE
    payload: dict  # {"image": id} or {"a": id, "b": id}
    is_repeat: bool
    min_view_ms: int
    issued_at_ms: int | None = None
    answered: bool = False

    def client_view(self) -> dict:
        # is_repeat stays server-side by design.
        return {
            "task_id": self.task_id,
            "kind": self.kind,
            "payload": self.payload,
            "min_view_ms": self.min_view_ms,
        }


def weave_repeats(
    base_payloads: Sequence[dict],
    n_repeats: int,
    min_gap: int,
    rng: np.random.Generator,
) -> list[tuple[dict, bool]]:
    """Insert n_repeats duplicated payloads, each >= min_gap items after its original.

    Returns (payload, is_repeat) in final queue order. Originals are drawn from
    early queue positions so a legal slot always exists; insertions never
    shrink an already-placed gap (indices only shift left of or between a
    pair, both of which preserve or grow the separation).
    """
    n = len(base_payloads)
    if n_repeats > n:
        raise ValidationError("cannot repeat more items than the queue holds")
    eligible = n - min_gap - 1
    if n_repeats > 0 and eligible < n_repeats:
        raise ValidationError(
            f"queue of {n} cannot host {n_repeats} repeats with gap {min_gap}"
        )
    queue: list[tuple[dict, bool]] = [(p, False) for p in base_payloads]
    if n_repeats == 0:
        return queue
    original_positions = sorted(rng.choice(eligible, size=n_repeats, replace=False))
    originals = [base_payloads[p] for p in original_positions]
    for payload in originals:
        pos = next(i for i, (p, rep) in enumerate(queue) if p == payload and not rep)
        insert_at = int(rng.integers(pos + min_gap + 1, len(queue) + 1))
        queue.insert(insert_at, (payload, True))
    return queue


def repeat_gaps(queue: Sequence[tuple[dict, bool]]) -> list[int]:
    """Intervening-item count between each repeat and its original."""
    gaps = []
    for idx, (payload, is_repeat) in enumerate(queue):
        if not is_repeat:
            continue
        orig = next(
            i for i, (p, rep) in enumerate(queue) if p == payload and not rep
        )
        gaps.append(idx - orig - 1)
    return gaps


@dataclass
class Session:
    session_id: str
    annotator: str
    campaign_id: str
    phase: str
    guidelines_entered_at_ms: int
    cursor: int = 0  # next queue index to issue

    def submitted_count(self, queue: Sequence[Task]) -> int:
        return sum(1 for t in queue[: self.cursor] if t.answered)


@dataclass
class SubmissionRecord:
    annotator: str
    task_id: str
    kind: str
    payload: dict
    response: dict  # dimension -> score int | "A"/"TIE"/"B"
    is_repeat: bool
    issued_at_ms: int
    received_at_ms: int


class CampaignLog:
    """Append-only JSONL event log; replaying it rebuilds campaign state."""

    def __init__(self, path: str | Path | None):
        self.path = Path(path) if path else None
        if self.path:
            self.path.parent.mkdir(parents=True, exist_ok=True)

    def append(self, event: dict) -> None:
        if self.path:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(event, sort_keys=True) + "\n")

    def replay(self) -> list[dict]:
        if not self.path or not self.path.exists():
            return []
        events = []
        with open(self.path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    events.append(json.loads(line))
        return events


class Campaign:
    """One category's annotation campaign with per-annotator task queues."""

    def __init__(
        self,
        config: CampaignConfig,
        clock_ms: Callable[[], int] | None = None,
        log_path: str | Path | None = None,
    ):
        from .core import all_pairs

        self.config = config
        self.clock_ms = clock_ms or (lambda: int(time.time() * 1000))
        self.log = CampaignLog(log_path)
        n_complete = len(config.images) * (len(config.images) - 1) // 2
        if config.pair_budget >= n_complete:
            self.pairs = all_pairs(config.images)
        else:
            self.pairs = sample_pair_budget(
                config.images, config.pair_budget, seed=config.pair_seed
            )
        self.queues: dict[tuple[str, str], list[Task]] = {}
        self.sessions: dict[str, Session] = {}
        self.session_by_key: dict[tuple[str, str], str] = {}
        self.submissions: list[SubmissionRecord] = []
        self._replay()

    # -- queue construction -------------------------------------------------

    def _build_queue(self, annotator: str, phase: str) -> list[Task]:
        import hashlib

        cfg = self.config
        stable = int.from_bytes(
            hashlib.blake2b(annotator.encode(), digest_size=4).digest(), "big"
        )
        rng = np.random.default_rng(
            [cfg.queue_seed, stable, 0 if phase == POINTWISE else 1]
        )
        if phase == POINTWISE:
            payloads = [{"image": img} for img in cfg.images]
            rng.shuffle(payloads)
            woven = weave_repeats(payloads, cfg.repeats_pointwise, cfg.repeat_gap_pointwise, rng)
            min_view = cfg.min_view_pointwise_ms
        else:
            payloads = [{"a": a, "b": b} for a, b in self.pairs]
            rng.shuffle(payloads)
            woven = weave_repeats(payloads, cfg.repeats_pairwise, cfg.repeat_gap_pairwise, rng)
            min_view = cfg.min_view_pairwise_ms
        return [
            Task(
                task_id=f"{phase}-{annotator}-{i:05d}",
                kind=phase,
                payload=payload,
                is_repeat=is_repeat,
                min_view_ms=min_view,
            )
            for i, (payload, is_repeat) in enumerate(woven)
        ]

    def queue_for(self, annotator: str, phase: str) -> list[Task]:
        key = (annotator, phase)
        if key not in self.queues:
            self.queues[key] = self._build_queue(annotator, phase)
        return self.queues[key]

    # -- phases --------------------------------------------------------------

    def pointwise_complete(self, annotator: str | None = None) -> bool:
        annotators = [annotator] if annotator else list(self.config.annotators)
        for ann in annotators:
            queue = self.queue_for(ann, POINTWISE)
            if not all(t.answered for t in queue):
                return False
        return True

    def current_phase(self, annotator: str) -> str:
        if not self.pointwise_complete(annotator):
            return POINTWISE
        unlock = self.config.pairwise_unlock_ms
        if unlock is not None and self.clock_ms() < unlock:
            return POINTWISE  # rest period: pairwise still locked
        if unlock is None and not self.pointwise_complete():
            return POINTWISE  # campaign-wide pointwise phase still open
        return PAIRWISE

    # -- session lifecycle ----------------------------------------------------

    def start_session(self, annotator: str) -> Session:
        if annotator not in self.config.annotators:
            raise AuthError(f"annotator {annotator!r} is not registered to this campaign")
        phase = self.current_phase(annotator)
        key = (annotator, phase)
        if key in self.session_by_key:
            return self.sessions[self.session_by_key[key]]
        session = Session(
            session_id=uuid.uuid4().hex,
            annotator=annotator,
            campaign_id=self.config.campaign_id,
            phase=phase,
            guidelines_entered_at_ms=self.clock_ms(),
        )
        self.sessions[session.session_id] = session
        self.session_by_key[key] = session.session_id
        self.log.append(
            {
                "event": "session",
                "session_id": session.session_id,
                "annotator": annotator,
                "phase": phase,
                "at_ms": session.guidelines_entered_at_ms,
            }
        )
        return session

    def get_session(self, session_id: str) -> Session:
        if session_id not in self.sessions:
            raise AuthError(f"unknown session {session_id!r}")
        return self.sessions[session_id]

    def next_task(self, session_id: str) -> Task | None:
        """Issue the next unanswered task; None when the queue is exhausted."""
        session = self.get_session(session_id)
        now = self.clock_ms()
        elapsed = now - session.guidelines_entered_at_ms
        if elapsed < self.config.guidelines_min_ms:
            raise GateError(
                "guidelines reading period has not elapsed",
                retry_after_ms=self.config.guidelines_min_ms - elapsed,
            )
        queue = self.queue_for(session.annotator, session.phase)
        while session.cursor < len(queue) and queue[session.cursor].answered:
            session.cursor += 1
        if session.cursor >= len(queue):
            return None
        task = queue[session.cursor]
        if task.issued_at_ms is None:
            task.issued_at_ms = now
            self.log.append(
                {
                    "event": "issue",
                    "session_id": session_id,
                    "task_id": task.task_id,
                    "at_ms": now,
                }
            )
        return task

    # -- submission -----------------------------------------------------------

    def _validate_response(self, kind: str, response: Mapping) -> dict:
        dims = self.config.dimensions
        if set(response) != set(dims):
            raise ValidationError(
                f"response must cover exactly the dimensions {list(dims)}"
            )
        clean = {}
        if kind == POINTWISE:
            for d in dims:
                value = response[d]
                if not isinstance(value, int) or isinstance(value, bool) or not 1 <= value <= 5:
                    raise ValidationError(f"score for {d!r} must be an integer in [1, 5]")
                clean[d] = value
        else:
            for d in dims:
                label = str(response[d]).upper()
                if label not in ("A", "TIE", "B"):
                    raise ValidationError(f"choice for {d!r} must be A, TIE, or B")
                clean[d] = label
        return clean

    def submit(self, session_id: str, task_id: str, response: Mapping) -> SubmissionRecord:
        session = self.get_session(session_id)
        queue = self.queue_for(session.annotator, session.phase)
        task = next((t for t in queue if t.task_id == task_id), None)
        if task is None:
            raise ValidationError(f"task {task_id!r} does not belong to this session")
        if task.answered:
            raise ConflictError(f"task {task_id!r} was already submitted")
        if task.issued_at_ms is None:
            raise ValidationError(f"task {task_id!r} was never issued")
        now = self.clock_ms()
        viewed = now - task.issued_at_ms
        if viewed < task.min_view_ms:
            raise GateError(
                f"submission after {viewed} ms, below the {task.min_view_ms} ms minimum",
                retry_after_ms=task.min_view_ms - viewed,
            )
        clean = self._validate_response(task.kind, response)
        task.answered = True
        record = SubmissionRecord(
            annotator=session.annotator,
            task_id=task.task_id,
            kind=task.kind,
            payload=task.payload,
            response=clean,
            is_repeat=task.is_repeat,
            issued_at_ms=task.issued_at_ms,
            received_at_ms=now,
        )
        self.submissions.append(record)
        self.log.append(
            {
                "event": "submit",
                "session_id": session_id,
                "task_id": task.task_id,
                "annotator": session.annotator,
                "kind": task.kind,
                "payload": task.payload,
                "response": clean,
                "is_repeat": task.is_repeat,
                "issued_at_ms": task.issued_at_ms,
                "received_at_ms": now,
            }
        )
        return record

    # -- restart --------------------------------------------------------------

    def _replay(self) -> None:
        for event in self.log.replay():
            if event["event"] == "session":
                session = Session(
                    session_id=event["session_id"],
                    annotator=event["annotator"],
                    campaign_id=self.config.campaign_id,
                    phase=event["phase"],
                    guidelines_entered_at_ms=event["at_ms"],
                )
                self.sessions[session.session_id] = session
                self.session_by_key[(session.annotator, session.phase)] = session.session_id
            elif event["event"] == "issue":
                session = self.sessions[event["session_id"]]
                queue = self.queue_for(session.annotator, session.phase)
                task = next(t for t in queue if t.task_id == event["task_id"])
                task.issued_at_ms = event["at_ms"]
            elif event["event"] == "submit":
                session = self.sessions[event["session_id"]]
                queue = self.queue_for(session.annotator, session.phase)
                task = next(t for t in queue if t.task_id == event["task_id"])
                task.answered = True
                self.submissions.append(
                    SubmissionRecord(
                        annotator=event["annotator"],
                        task_id=event["task_id"],
                        kind=event["kind"],
                        payload=event["payload"],
                        response=event["response"],
                        is_repeat=event["is_repeat"],
                        issued_at_ms=event["issued_at_ms"],
                        received_at_ms=event["received_at_ms"],
                    )
                )

    # -- export and QC ----------------------------------------------------------

    def export_records(self) -> tuple[list[RatingRecord], list[PairJudgment]]:
        ratings: list[RatingRecord] = []
        judgments: list[PairJudgment] = []
        for rec in self.submissions:
            if rec.kind == POINTWISE:
                for d, score in rec.response.items():
                    ratings.append(
                        RatingRecord(
                            rater=rec.annotator,
                            image=rec.payload["image"],
                            dimension=d,
                            score=int(score),
                            timestamp_ms=rec.received_at_ms,
                            is_repeat=rec.is_repeat,
                        )
                    )
            else:
                for d, label in rec.response.items():
                    judgments.append(
                        PairJudgment(
                            rater=rec.annotator,
                            a=rec.payload["a"],
                            b=rec.payload["b"],
                            dimension=d,
                            outcome=Outcome(label if label != "T" else "TIE"),
                            timestamp_ms=rec.received_at_ms,
                            is_repeat=rec.is_repeat,
                        )
                    )
        return ratings, judgments

    def qc_report(self) -> dict:
        """Per-annotator repeat agreement, transitivity, timing, and consensus flag."""
        report: dict[str, dict] = {}
        ratings, judgments = self.export_records()
        by_annotator = {ann: [] for ann in self.config.annotators}
        for rec in self.submissions:
            by_annotator[rec.annotator].append(rec)

        consensus_scores = _consensus_for_flagging(self, ratings, judgments)
        per_annotator_rank: dict[str, float] = {}

        for ann, recs in by_annotator.items():
            entry: dict = {}
            entry["repeat_agreement"] = _repeat_agreement(recs)
            ann_judgments = [j for j in judgments if j.rater == ann and not j.is_repeat]
            rates = []
            for d in self.config.dimensions:
                js = [j for j in ann_judgments if j.dimension == d]
                if js:
                    with warnings.catch_warnings():
                        warnings.simplefilter("ignore")
                        rates.append(diagnostics.transitivity_violation_rate(js))
            entry["transitivity_violation_rate"] = float(np.mean(rates)) if rates else None
            seconds = {}
            for kind in (POINTWISE, PAIRWISE):
                durations = [
                    (r.received_at_ms - r.issued_at_ms) / 1000.0
                    for r in recs
                    if r.kind == kind
                ]
                seconds[kind] = statistics.median(durations) if durations else None
            entry["median_seconds"] = seconds
            if ann in consensus_scores:
                per_annotator_rank[ann] = consensus_scores[ann]
                entry["consensus_srcc"] = consensus_scores[ann]
            report[ann] = entry

        if per_annotator_rank:
            worst = min(per_annotator_rank, key=per_annotator_rank.get)
            for ann in report:
                report[ann]["flagged_for_review"] = ann == worst and len(per_annotator_rank) > 1
        return report


def _repeat_agreement(recs: Sequence[SubmissionRecord]) -> dict:
    """Exact-match agreement between repeats and their originals.

    Reported both per task (all dimensions must match) and per dimension.
    """
    first_by_payload: dict[str, SubmissionRecord] = {}
    for rec in recs:
        key = json.dumps(rec.payload, sort_keys=True)
        if not rec.is_repeat and key not in first_by_payload:
            first_by_payload[key] = rec
    task_matches = []
    dim_matches = []
    for rec in recs:
        if not rec.is_repeat:
            continue
        key = json.dumps(rec.payload, sort_keys=True)
        original = first_by_payload.get(key)
        if original is None:
            continue
        task_matches.append(rec.response == original.response)
        for d, v in rec.response.items():
            dim_matches.append(v == original.response.get(d))
    return {
        "per_task": float(np.mean(task_matches)) if task_matches else None,
        "per_dimension": float(np.mean(dim_matches)) if dim_matches else None,
        "n_repeats": len(task_matches),
    }


def _consensus_for_flagging(
    campaign: Campaign,
    ratings: Sequence[RatingRecord],
    judgments: Sequence[PairJudgment],
) -> dict[str, float]:
    """Mean SRCC of each annotator's ranking against the panel consensus.

    Uses pairwise data (per-annotator Elo vs pooled-panel Elo) when present,
    otherwise mean-score rankings from the pointwise phase.
    """
    from .elo import EloConfig, run_elo

    scores: dict[str, list[float]] = {}
    use_pairwise = any(not j.is_repeat for j in judgments)
    for d in campaign.config.dimensions:
        if use_pairwise:
            js = [j for j in judgments if j.dimension == d and not j.is_repeat]
            if not js:
                continue
            config = EloConfig(passes=30)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                consensus = run_elo(js, config)
                per_ann = {}
                for ann in campaign.config.annotators:
                    own = [j for j in js if j.rater == ann]
                    if own:
                        per_ann[ann] = run_elo(own, config)
        else:
            rs = [r for r in ratings if r.dimension == d and not r.is_repeat]
            if not rs:
                continue
            consensus = {}
            sums: dict[str, list[float]] = {}
            for r in rs:
                sums.setdefault(r.image, []).append(float(r.score))
            consensus = {img: float(np.mean(v)) for img, v in sums.items()}
            per_ann = {}
            for ann in campaign.config.annotators:
                own = {r.image: float(r.score) for r in rs if r.rater == ann}
                if own:
                    per_ann[ann] = own
        for ann, table in per_ann.items():
            try:
                value = diagnostics.srcc_tables(table, consensus)
            except ValidationError:
                continue
            scores.setdefault(ann, []).append(value)
    return {ann: float(np.mean(vals)) for ann, vals in scores.items() if vals}
