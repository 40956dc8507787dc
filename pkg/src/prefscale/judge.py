"""Judges: anything that can compare two images or score one.

Three implementations share one interface: a synthetic latent-quality
simulator (the verification oracle for desk-scale runs), a replay judge
that serves recorded verdicts, and a remote judge speaking a minimal
chat-completions wire format. Every judge counts its calls so pipelines
can verify their query budgets exactly.
"""

from __future__ import annotations

import base64
import hashlib
import json
import math
import os
import re
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .core import DEFAULT_DIMENSIONS, Outcome, PrefscaleError, ValidationError


class ResponseFormatError(PrefscaleError):
    """A judge response that cannot be turned into a verdict."""

    def __init__(self, message: str, raw: str = ""):
        super().__init__(message)
        self.raw = raw


class MissingAnswerTagError(ResponseFormatError):
    pass


class AnswerJsonError(ResponseFormatError):
    pass


class MissingDimensionError(ResponseFormatError):
    pass


class InvalidLabelError(ResponseFormatError):
    pass


class ScoreRangeError(ResponseFormatError):
    pass


class JudgeTransportError(PrefscaleError):
    """Remote judge could not be reached after retries."""


@dataclass(frozen=True)
class JudgeVerdict:
    """Per-dimension outcomes (pairwise) or scores (pointwise) for one call."""

    mode: str  # "pairwise" | "pointwise"
    outcomes: Mapping[str, Outcome] | None = None
    scores: Mapping[str, float] | None = None
    raw_response: str | None = None

    def __post_init__(self):
        if self.mode == "pairwise" and not self.outcomes:
            raise ValidationError("pairwise verdict needs outcomes")
        if self.mode == "pointwise" and not self.scores:
            raise ValidationError("pointwise verdict needs scores")


LABELS = {"A": Outcome.A_WINS, "TIE": Outcome.TIE, "B": Outcome.B_WINS}

POINTWISE_TEMPLATE = """You are an expert in traditional Chinese painting criticism and aesthetics.
Evaluate this Chinese painting on {count} criteria. Each must be a float from {low:.2f} to {high:.2f}, rounded to two decimal places ({low:.2f} = poor, {mid:.2f} = moderate, {high:.2f} = excellent).
{criteria}
First output the thinking process in <think> </think> tags and then output the final answer as valid JSON in <answer> </answer> tags:
{schema}"""

PAIRWISE_TEMPLATE = """You are an expert in traditional Chinese painting criticism and aesthetics.
Compare two Chinese paintings (A is the first image, B is the second image) on {count} criteria. For each criterion, output "A" if the first painting is stronger, "B" if the second is stronger, or "TIE" if genuinely equal.
{criteria}
First output the thinking process in <think> </think> tags and then output the final answer as valid JSON in <answer> </answer> tags:
{schema}"""

_NUMBER_WORDS = {3: "three", 5: "five"}


def render_prompt(
    mode: str,
    dimensions: Sequence[str] = DEFAULT_DIMENSIONS,
    span: tuple[float, float] = (1.0, 5.0),
) -> str:
    """The instruction text sent with every judge query."""
    low, high = span
    count = _NUMBER_WORDS.get(len(dimensions), str(len(dimensions)))
    criteria = "  ".join(f"{k}) {d}" for k, d in enumerate(dimensions, start=1))
    if mode == "pointwise":
        schema = (
            "{"
            + ", ".join(f'"{d}": <{low:.2f}-{high:.2f}>' for d in dimensions)
            + "}"
        )
        return POINTWISE_TEMPLATE.format(
            count=count, low=low, high=high, mid=(low + high) / 2,
            criteria=criteria, schema=schema,
        )
    if mode == "pairwise":
        schema = "{" + ", ".join(f'"{d}": "A"/"B"/"TIE"' for d in dimensions) + "}"
        return PAIRWISE_TEMPLATE.format(count=count, criteria=criteria, schema=schema)
    raise ValidationError(f"unknown prompt mode {mode!r}")


_ANSWER_RE = re.compile(r"<answer>(.*?)</answer>", re.DOTALL)


def parse_response(
    raw: str,
    mode: str,
    dimensions: Sequence[str] = DEFAULT_DIMENSIONS,
    span: tuple[float, float] = (1.0, 5.0),
) -> JudgeVerdict:
    """Extract and validate the last <answer> JSON block of a response."""
    matches = _ANSWER_RE.findall(raw)
    if not matches:
        raise MissingAnswerTagError("no complete <answer>...</answer> block", raw=raw)
    try:
        payload = json.loads(matches[-1])
    except json.JSONDecodeError as exc:
        raise AnswerJsonError(f"answer block is not valid JSON: {exc}", raw=raw) from exc
    if not isinstance(payload, dict):
        raise AnswerJsonError("answer JSON must be an object", raw=raw)

    if mode == "pairwise":
        outcomes = {}
        for d in dimensions:
            if d not in payload:
                raise MissingDimensionError(f"missing key {d!r} in answer", raw=raw)
            label = str(payload[d]).strip().upper()
            if label not in LABELS:
                raise InvalidLabelError(f"label {payload[d]!r} for {d!r} not in A/B/TIE", raw=raw)
            outcomes[d] = LABELS[label]
        return JudgeVerdict(mode="pairwise", outcomes=outcomes, raw_response=raw)

    if mode == "pointwise":
        low, high = span
        scores = {}
        for d in dimensions:
            if d not in payload:
                raise MissingDimensionError(f"missing key {d!r} in answer", raw=raw)
            try:
                value = float(payload[d])
            except (TypeError, ValueError) as exc:
                raise ScoreRangeError(f"score {payload[d]!r} for {d!r} is not numeric", raw=raw) from exc
            if not low <= value <= high or math.isnan(value):
                raise ScoreRangeError(
                    f"score {value} for {d!r} outside [{low}, {high}]", raw=raw
                )
            scores[d] = value
        return JudgeVerdict(mode="pointwise", scores=scores, raw_response=raw)

    raise ValidationError(f"unknown parse mode {mode!r}")


class Judge:
    """Base interface; subclasses implement _compare and _score."""

    max_in_flight: int | None = None  # None = unbounded

    def __init__(self):
        self.calls = 0

    def compare(self, a: str, b: str) -> JudgeVerdict:
        self.calls += 1
        return self._compare(a, b)

    def score(self, image: str) -> JudgeVerdict:
        self.calls += 1
        return self._score(image)

    def _compare(self, a: str, b: str) -> JudgeVerdict:
        raise NotImplementedError

    def _score(self, image: str) -> JudgeVerdict:
        raise NotImplementedError


def _hash_seed(*parts: object) -> int:
    digest = hashlib.blake2b("\x1f".join(str(p) for p in parts).encode(), digest_size=8)
    return int.from_bytes(digest.digest(), "big")


@dataclass(frozen=True)
class SyntheticJudgeConfig:
    """Planted per-(image, dimension) latents plus a Thurstone noise model."""

    latent_table: Mapping[str, Mapping[str, float]]
    noise_std: float = 0.0
    tie_band: float = 0.0
    seed: int = 0
    span: tuple[float, float] = (1.0, 5.0)

    def __post_init__(self):
        if self.noise_std < 0 or self.tie_band < 0:
            raise ValidationError("noise_std and tie_band must be >= 0")
        if not self.latent_table:
            raise ValidationError("latent table is empty")

    @property
    def dimensions(self) -> tuple[str, ...]:
        first = next(iter(self.latent_table.values()))
        return tuple(first)


class SyntheticJudge(Judge):
    """Compares and scores from planted latents with Gaussian judgment noise.

    Pairwise calls draw the latent-difference perturbation from a generator
    keyed by (seed, canonical pair, dimension), so a rerun, or the mirrored
    query order, reproduces/mirrors the verdict exactly.
    """

    def __init__(self, config: SyntheticJudgeConfig):
        super().__init__()
        self.config = config

    def _latent(self, image: str, dimension: str) -> float:
        try:
            return self.config.latent_table[image][dimension]
        except KeyError as exc:
            raise ValidationError(f"no latent for image {image!r}, dimension {dimension!r}") from exc

    def _compare(self, a: str, b: str) -> JudgeVerdict:
        cfg = self.config
        outcomes = {}
        first, second = (a, b) if a <= b else (b, a)
        for dimension in cfg.dimensions:
            diff = self._latent(first, dimension) - self._latent(second, dimension)
            if cfg.noise_std > 0:
                rng = np.random.default_rng(_hash_seed(cfg.seed, "pair", first, second, dimension))
                u = diff + rng.normal(0.0, math.sqrt(2.0) * cfg.noise_std)
            else:
                u = diff
            if a != first:
                u = -u
            if u > cfg.tie_band:
                outcomes[dimension] = Outcome.A_WINS
            elif u < -cfg.tie_band:
                outcomes[dimension] = Outcome.B_WINS
            else:
                outcomes[dimension] = Outcome.TIE
        return JudgeVerdict(mode="pairwise", outcomes=outcomes)

    def _score(self, image: str) -> JudgeVerdict:
        cfg = self.config
        low, high = cfg.span
        scores = {}
        for dimension in cfg.dimensions:
            value = self._latent(image, dimension)
            if cfg.noise_std > 0:
                rng = np.random.default_rng(_hash_seed(cfg.seed, "point", image, dimension))
                value += rng.normal(0.0, cfg.noise_std)
            scores[dimension] = round(min(max(value, low), high), 2)
        return JudgeVerdict(mode="pointwise", scores=scores)


def verdict_to_json(verdict: JudgeVerdict, a: str | None = None, b: str | None = None, image: str | None = None) -> dict:
    row: dict = {"mode": verdict.mode}
    if a is not None:
        row["a"] = a
    if b is not None:
        row["b"] = b
    if image is not None:
        row["image"] = image
    if verdict.mode == "pairwise":
        row["verdict"] = {d: o.value for d, o in verdict.outcomes.items()}
    else:
        row["verdict"] = dict(verdict.scores)
    row["raw"] = verdict.raw_response
    return row


def verdict_from_json(row: Mapping) -> JudgeVerdict:
    if row["mode"] == "pairwise":
        outcomes = {d: Outcome(v) for d, v in row["verdict"].items()}
        return JudgeVerdict(mode="pairwise", outcomes=outcomes, raw_response=row.get("raw"))
    return JudgeVerdict(
        mode="pointwise",
        scores={d: float(v) for d, v in row["verdict"].items()},
        raw_response=row.get("raw"),
    )


class ReplayJudge(Judge):
    """Serves verdicts recorded by a previous run, byte-identically."""

    def __init__(self, transcript_path: str | Path):
        super().__init__()
        self._pairwise: dict[tuple[str, str], JudgeVerdict] = {}
        self._pointwise: dict[str, JudgeVerdict] = {}
        with open(transcript_path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                row = json.loads(line)
                verdict = verdict_from_json(row)
                if row["mode"] == "pairwise":
                    self._pairwise[(row["a"], row["b"])] = verdict
                else:
                    self._pointwise[row["image"]] = verdict

    def _compare(self, a: str, b: str) -> JudgeVerdict:
        if (a, b) in self._pairwise:
            return self._pairwise[(a, b)]
        if (b, a) in self._pairwise:
            mirrored = self._pairwise[(b, a)]
            return JudgeVerdict(
                mode="pairwise",
                outcomes={d: o.mirrored() for d, o in mirrored.outcomes.items()},
                raw_response=mirrored.raw_response,
            )
        raise ValidationError(f"no recorded verdict for pair ({a!r}, {b!r})")

    def _score(self, image: str) -> JudgeVerdict:
        if image not in self._pointwise:
            raise ValidationError(f"no recorded verdict for image {image!r}")
        return self._pointwise[image]


class RecordingJudge(Judge):
    """Wraps another judge and appends every verdict to a transcript file."""

    def __init__(self, inner: Judge, transcript_path: str | Path):
        super().__init__()
        self.inner = inner
        self.path = Path(transcript_path)

    def _append(self, row: dict) -> None:
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(row, sort_keys=True) + "\n")

    def _compare(self, a: str, b: str) -> JudgeVerdict:
        verdict = self.inner.compare(a, b)
        self._append(verdict_to_json(verdict, a=a, b=b))
        return verdict

    def _score(self, image: str) -> JudgeVerdict:
        verdict = self.inner.score(image)
        self._append(verdict_to_json(verdict, image=image))
        return verdict


class PresentationSwapJudge(Judge):
    """Randomizes which image is shown first, mirroring the verdict back.

    Counters position bias in judges that favor the first/second slot; the
    swap decision is a deterministic hash of (seed, pair) so reruns and
    replays stay aligned.
    """

    def __init__(self, inner: Judge, seed: int = 0):
        super().__init__()
        self.inner = inner
        self.seed = seed

    def _compare(self, a: str, b: str) -> JudgeVerdict:
        first, second = (a, b) if a <= b else (b, a)
        swap = _hash_seed(self.seed, "swap", first, second) % 2 == 1
        query = (b, a) if swap else (a, b)
        verdict = self.inner.compare(*query)
        if not swap:
            return verdict
        return JudgeVerdict(
            mode="pairwise",
            outcomes={d: o.mirrored() for d, o in verdict.outcomes.items()},
            raw_response=verdict.raw_response,
        )

    def _score(self, image: str) -> JudgeVerdict:
        return self.inner.score(image)


@dataclass
class RemoteJudgeConfig:
    endpoint: str
    model: str
    auth_env_var: str = "JUDGE_API_TOKEN"
    dimensions: Sequence[str] = DEFAULT_DIMENSIONS
    span: tuple[float, float] = (1.0, 5.0)
    image_payload: str = "url"  # "url" | "base64"
    max_retries: int = 3
    backoff_s: float = 1.0
    cache_dir: str | Path | None = None
    timeout_s: float = 120.0


class RemoteJudge(Judge):
    """Model endpoint speaking a minimal chat-completions JSON contract.

    Requests carry the rendered prompt plus one content part per image;
    responses must contain choices[0].message.content with an <answer>
    block. Transient transport failures retry with exponential backoff;
    verdicts are cached on disk keyed by (prompt hash, image ids).
    """

    max_in_flight = 4

    def __init__(self, config: RemoteJudgeConfig, image_paths: Mapping[str, str] | None = None, client=None):
        super().__init__()
        self.config = config
        self.image_paths = image_paths or {}
        if client is None:
            import httpx

            client = httpx.Client(timeout=config.timeout_s)
        self.client = client
        if config.cache_dir:
            Path(config.cache_dir).mkdir(parents=True, exist_ok=True)

    def _image_part(self, image: str) -> dict:
        location = self.image_paths.get(image, image)
        if self.config.image_payload == "base64":
            data = Path(location).read_bytes()
            url = "data:image/png;base64," + base64.b64encode(data).decode()
        else:
            url = location
        return {"type": "image_url", "image_url": {"url": url}}

    def _cache_path(self, prompt: str, images: Sequence[str]) -> Path | None:
        if not self.config.cache_dir:
            return None
        key = hashlib.sha256(("\x1f".join([prompt, *images])).encode()).hexdigest()
        return Path(self.config.cache_dir) / f"{key}.json"

    def _post(self, prompt: str, images: Sequence[str]) -> str:
        headers = {}
        token = os.environ.get(self.config.auth_env_var, "")
        if token:
            headers["Authorization"] = f"Bearer {token}"
        body = {
            "model": self.config.model,
            "messages": [
                {
                    "role": "user",
                    "content": [{"type": "text", "text": prompt}]
                    + [self._image_part(img) for img in images],
                }
            ],
        }
        last_error: Exception | None = None
        for attempt in range(self.config.max_retries):
            try:
                response = self.client.post(self.config.endpoint, json=body, headers=headers)
                response.raise_for_status()
                payload = response.json()
                return payload["choices"][0]["message"]["content"]
            except Exception as exc:  # transport or schema failure
                last_error = exc
                if attempt + 1 < self.config.max_retries:
                    time.sleep(self.config.backoff_s * 2**attempt)
        raise JudgeTransportError(
            f"remote judge failed after {self.config.max_retries} attempts: {last_error}"
        )

    def _query(self, mode: str, images: Sequence[str]) -> JudgeVerdict:
        prompt = render_prompt(mode, self.config.dimensions, self.config.span)
        cache = self._cache_path(prompt, images)
        if cache is not None and cache.exists():
            row = json.loads(cache.read_text())
            return verdict_from_json(row)
        raw = self._post(prompt, images)
        verdict = parse_response(raw, mode, self.config.dimensions, self.config.span)
        if cache is not None:
            cache.write_text(json.dumps(verdict_to_json(verdict), sort_keys=True))
        return verdict

    def _compare(self, a: str, b: str) -> JudgeVerdict:
        return self._query("pairwise", [a, b])

    def _score(self, image: str) -> JudgeVerdict:
        return self._query("pointwise", [image])
