import json

import httpx
import pytest

from prefscale.core import Outcome, ValidationError, all_pairs
from prefscale.judge import (
    AnswerJsonError,
    InvalidLabelError,
    MissingAnswerTagError,
    MissingDimensionError,
    RecordingJudge,
    RemoteJudge,
    RemoteJudgeConfig,
    ReplayJudge,
    ScoreRangeError,
    SyntheticJudge,
    SyntheticJudgeConfig,
    parse_response,
    render_prompt,
)

DIMS = ("technique", "coloration", "composition", "mood", "overall")


def latent_table(values):
    return {img: {d: v for d in DIMS} for img, v in values.items()}


class TestRenderPrompt:
    def test_pointwise_has_keys_in_order(self):
        prompt = render_prompt("pointwise")
        positions = [prompt.index(f'"{d}"') for d in DIMS]
        assert positions == sorted(positions)
        assert "1.00 to 5.00" in prompt
        assert "<think>" in prompt and "<answer>" in prompt

    def test_pairwise_labels(self):
        prompt = render_prompt("pairwise")
        assert '"A"/"B"/"TIE"' in prompt
        assert "A is the first image, B is the second image" in prompt

    def test_three_dimension_ten_scale(self):
        dims = ("composition", "texture", "overall")
        prompt = render_prompt("pointwise", dims, span=(1.0, 10.0))
        assert "1.00 to 10.00" in prompt
        assert "three criteria" in prompt
        for d in dims:
            assert f'"{d}"' in prompt
        assert '"mood"' not in prompt


class TestParseResponse:
    def wrap(self, payload):
        return f"<think>let me look</think><answer>{json.dumps(payload)}</answer>"

    def test_valid_pairwise(self):
        verdict = parse_response(self.wrap({d: "A" for d in DIMS}), "pairwise")
        assert all(o is Outcome.A_WINS for o in verdict.outcomes.values())
        assert len(verdict.outcomes) == 5

    def test_valid_pointwise(self):
        verdict = parse_response(self.wrap({d: 3.25 for d in DIMS}), "pointwise")
        assert verdict.scores["mood"] == 3.25

    def test_last_answer_block_wins(self):
        raw = (
            f"<answer>{json.dumps({d: 'B' for d in DIMS})}</answer>"
            f"<answer>{json.dumps({d: 'TIE' for d in DIMS})}</answer>"
        )
        verdict = parse_response(raw, "pairwise")
        assert all(o is Outcome.TIE for o in verdict.outcomes.values())

    def test_missing_closing_tag(self):
        with pytest.raises(MissingAnswerTagError):
            parse_response("<answer>{}", "pairwise")

    def test_bad_json(self):
        with pytest.raises(AnswerJsonError):
            parse_response("<answer>not json</answer>", "pairwise")

    def test_missing_dimension(self):
        payload = {d: "A" for d in DIMS[:-1]}
        with pytest.raises(MissingDimensionError):
            parse_response(self.wrap(payload), "pairwise")

    def test_bad_label(self):
        payload = {d: "A" for d in DIMS}
        payload["mood"] = "maybe"
        with pytest.raises(InvalidLabelError):
            parse_response(self.wrap(payload), "pairwise")

    def test_out_of_range_score(self):
        payload = {d: 3.0 for d in DIMS}
        payload["overall"] = 5.5
        with pytest.raises(ScoreRangeError):
            parse_response(self.wrap(payload), "pointwise")

    def test_ten_scale_accepts_high_scores(self):
        dims = ("composition", "texture", "overall")
        payload = {d: 8.75 for d in dims}
        verdict = parse_response(self.wrap(payload), "pointwise", dims, span=(1.0, 10.0))
        assert verdict.scores["texture"] == 8.75


class TestSyntheticJudge:
    def test_noiseless_follows_latents(self):
        judge = SyntheticJudge(
            SyntheticJudgeConfig(latent_table=latent_table({"x": 4.0, "y": 2.0}))
        )
        verdict = judge.compare("x", "y")
        assert all(o is Outcome.A_WINS for o in verdict.outcomes.values())

    def test_tie_band(self):
        judge = SyntheticJudge(
            SyntheticJudgeConfig(latent_table=latent_table({"x": 3.0, "y": 3.0}), tie_band=0.2)
        )
        verdict = judge.compare("x", "y")
        assert all(o is Outcome.TIE for o in verdict.outcomes.values())

    def test_mirrored_queries(self):
        config = SyntheticJudgeConfig(
            latent_table=latent_table({"x": 3.2, "y": 3.1, "z": 2.0}),
            noise_std=0.5,
            tie_band=0.1,
            seed=13,
        )
        judge = SyntheticJudge(config)
        for a, b in all_pairs(["x", "y", "z"]):
            fwd = judge.compare(a, b)
            rev = judge.compare(b, a)
            for d in DIMS:
                assert rev.outcomes[d] is fwd.outcomes[d].mirrored()

    def test_deterministic_given_seed(self):
        config = SyntheticJudgeConfig(
            latent_table=latent_table({"x": 3.0, "y": 2.5}), noise_std=0.4, seed=7
        )
        v1 = SyntheticJudge(config).compare("x", "y")
        v2 = SyntheticJudge(config).compare("x", "y")
        assert v1.outcomes == v2.outcomes

    def test_score_clamps_and_rounds(self):
        judge = SyntheticJudge(
            SyntheticJudgeConfig(latent_table=latent_table({"x": 3.2, "y": 6.0}))
        )
        assert judge.score("x").scores["overall"] == 3.2
        assert judge.score("y").scores["overall"] == 5.0

    def test_call_counter(self):
        judge = SyntheticJudge(
            SyntheticJudgeConfig(latent_table=latent_table({"x": 1.0, "y": 2.0}))
        )
        judge.compare("x", "y")
        judge.score("x")
        assert judge.calls == 2


class TestReplayJudge:
    def test_round_trip(self, tmp_path):
        inner = SyntheticJudge(
            SyntheticJudgeConfig(
                latent_table=latent_table({"x": 4.0, "y": 2.0, "z": 3.0}),
                noise_std=0.3,
                seed=5,
            )
        )
        transcript = tmp_path / "transcript.jsonl"
        recorder = RecordingJudge(inner, transcript)
        recorded = {}
        for a, b in all_pairs(["x", "y", "z"]):
            recorded[(a, b)] = recorder.compare(a, b)
        recorded_scores = {img: recorder.score(img) for img in ("x", "y")}

        replay = ReplayJudge(transcript)
        for (a, b), verdict in recorded.items():
            assert replay.compare(a, b).outcomes == verdict.outcomes
            mirrored = replay.compare(b, a)
            for d in DIMS:
                assert mirrored.outcomes[d] is verdict.outcomes[d].mirrored()
        for img, verdict in recorded_scores.items():
            assert replay.score(img).scores == verdict.scores

    def test_missing_verdict(self, tmp_path):
        transcript = tmp_path / "empty.jsonl"
        transcript.write_text("")
        with pytest.raises(ValidationError):
            ReplayJudge(transcript).compare("a", "b")


class TestPresentationSwap:
    def test_swapped_queries_mirror_back(self):
        from prefscale.judge import PresentationSwapJudge

        inner = SyntheticJudge(
            SyntheticJudgeConfig(
                latent_table=latent_table({f"i{k}": 1.0 + k for k in range(6)})
            )
        )
        plain = SyntheticJudge(inner.config)
        swapper = PresentationSwapJudge(inner, seed=3)
        for a, b in all_pairs([f"i{k}" for k in range(6)]):
            assert swapper.compare(a, b).outcomes == plain.compare(a, b).outcomes

    def test_some_queries_actually_swap(self):
        from prefscale.judge import PresentationSwapJudge

        calls = []

        class SpyJudge(SyntheticJudge):
            def _compare(self, a, b):
                calls.append((a, b))
                return super()._compare(a, b)

        inner = SpyJudge(
            SyntheticJudgeConfig(
                latent_table=latent_table({f"i{k}": 1.0 + k for k in range(8)})
            )
        )
        swapper = PresentationSwapJudge(inner, seed=1)
        pairs = all_pairs([f"i{k}" for k in range(8)])
        for a, b in pairs:
            swapper.compare(a, b)
        assert any(q != p for q, p in zip(calls, pairs))


class TestRemoteJudge:
    def _client(self, handler):
        return httpx.Client(transport=httpx.MockTransport(handler))

    def test_parses_chat_completion(self):
        answer = json.dumps({d: "TIE" for d in DIMS})

        def handler(request):
            body = json.loads(request.content)
            assert body["model"] == "judge-1"
            assert body["messages"][0]["content"][0]["type"] == "text"
            return httpx.Response(
                200,
                json={"choices": [{"message": {"content": f"<answer>{answer}</answer>"}}]},
            )

        judge = RemoteJudge(
            RemoteJudgeConfig(endpoint="http://judge/v1/chat/completions", model="judge-1"),
            client=self._client(handler),
        )
        verdict = judge.compare("a", "b")
        assert all(o is Outcome.TIE for o in verdict.outcomes.values())

    def test_retries_then_fails(self):
        from prefscale.judge import JudgeTransportError

        calls = {"n": 0}

        def handler(request):
            calls["n"] += 1
            return httpx.Response(500, json={"error": "boom"})

        judge = RemoteJudge(
            RemoteJudgeConfig(
                endpoint="http://judge/v1", model="m", max_retries=3, backoff_s=0.0
            ),
            client=self._client(handler),
        )
        with pytest.raises(JudgeTransportError):
            judge.compare("a", "b")
        assert calls["n"] == 3

    def test_disk_cache_avoids_second_request(self, tmp_path):
        calls = {"n": 0}
        answer = json.dumps({d: 3.0 for d in DIMS})

        def handler(request):
            calls["n"] += 1
            return httpx.Response(
                200,
                json={"choices": [{"message": {"content": f"<answer>{answer}</answer>"}}]},
            )

        config = RemoteJudgeConfig(
            endpoint="http://judge/v1", model="m", cache_dir=tmp_path / "cache"
        )
        judge = RemoteJudge(config, client=self._client(handler))
        first = judge.score("img1")
        again = judge.score("img1")
        assert calls["n"] == 1
        assert first.scores == again.scores
