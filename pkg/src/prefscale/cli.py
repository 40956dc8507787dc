"""Command-line entry point: fuse, calibrate, diagnose, bridge, reward,
simulate, serve.

Every command that writes an output file also writes a run manifest
(<out>.manifest.json) hashing the command, configs, and inputs, so a rerun
with the same manifest reproduces the output byte for byte.

Exit codes: 0 success, 2 validation error, 3 flagged result (e.g. a fit
that did not converge), 4 I/O error, 5 remote-judge failure.
"""

from __future__ import annotations

import hashlib
import json
import sys
import time
import warnings
from pathlib import Path

import click
import numpy as np

from . import __version__
from . import calibration as cal
from . import core, diagnostics
from .bridge import BridgeConfig, inference_cost, pseudo_label_corpus
from .core import GroupKey, PrefscaleError, ValidationError
from .davidson import DbtConfig, fit_anchored_dbt
from .elo import EloConfig, run_anchored_elo, run_elo
from .judge import (
    JudgeTransportError,
    RecordingJudge,
    RemoteJudge,
    RemoteJudgeConfig,
    ReplayJudge,
    SyntheticJudge,
    SyntheticJudgeConfig,
)
from .reward import GroupSample, RewardConfig, grpo_advantages, rank_reward, total_rewards
from .simulate import CampaignSpec, heterogeneous_profiles, simulate_campaign

EXIT_VALIDATION = 2
EXIT_FLAGGED = 3
EXIT_IO = 4
EXIT_REMOTE = 5


def _file_hash(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(out_path: str | Path, command: str, inputs: dict, config: dict, seeds: dict):
    manifest = {
        "command": command,
        "tool_version": __version__,
        "config": config,
        "config_hash": hashlib.sha256(
            json.dumps(config, sort_keys=True).encode()
        ).hexdigest(),
        "input_hashes": {name: _file_hash(p) for name, p in inputs.items() if p},
        "seeds": seeds,
        "started_at": _RUN_STARTED,
        "finished_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    with open(str(out_path) + ".manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)


_RUN_STARTED = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())


@click.group()
@click.option("--json", "json_output", is_flag=True, help="emit machine-readable reports on stdout")
@click.pass_context
def main(ctx, json_output):
    """Preference and rating fusion toolkit."""
    ctx.ensure_object(dict)
    ctx.obj["json"] = json_output


def _echo_report(ctx, report: dict, human: str | None = None):
    if ctx.obj.get("json") or human is None:
        click.echo(json.dumps(report, indent=2, sort_keys=True))
    else:
        click.echo(human)


def _load_elo_config(path: str | None) -> EloConfig:
    if not path:
        return EloConfig()
    with open(path) as fh:
        return EloConfig(**json.load(fh))


def _load_dbt_config(path: str | None) -> DbtConfig:
    if not path:
        return DbtConfig()
    with open(path) as fh:
        return DbtConfig(**json.load(fh))


# ---------------------------------------------------------------------------
# fuse
# ---------------------------------------------------------------------------

@main.group()
def fuse():
    """Aggregate pairwise judgments into latent quality tables."""


def _grouped_inputs(judgments_path, anchors_path, manifest_path):
    judgments = core.load_judgments(judgments_path)
    manifest = core.load_manifest(manifest_path) if manifest_path else None
    anchors = core.load_anchors(anchors_path) if anchors_path else None
    return core.group_judgments(judgments, manifest), anchors


@fuse.command("elo")
@click.option("--judgments", "judgments_path", required=True, type=click.Path(exists=True))
@click.option("--anchors", "anchors_path", type=click.Path(exists=True))
@click.option("--manifest", "manifest_path", type=click.Path(exists=True))
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.pass_context
def fuse_elo(ctx, judgments_path, anchors_path, manifest_path, config_path, out_path):
    """Anchored (or plain) Elo per (category, dimension) group."""
    config = _load_elo_config(config_path)
    groups, anchors = _grouped_inputs(judgments_path, anchors_path, manifest_path)
    rows = []
    flagged = False
    for group, js in sorted(groups.items(), key=lambda kv: (kv[0].category, kv[0].dimension)):
        group_anchors = anchors.for_group(group) if anchors else ()
        if group_anchors:
            table = run_anchored_elo(js, group_anchors, config)
        else:
            if anchors is not None:
                warnings.warn(f"no anchors for group {group}; running plain Elo")
                flagged = True
            table = run_elo(js, config)
        for image, q in sorted(table.items()):
            rows.append(
                {"image": image, "dimension": group.dimension, "category": group.category, "q": q}
            )
    core.write_jsonl(out_path, rows)
    _write_manifest(
        out_path, "fuse elo",
        {"judgments": judgments_path, "anchors": anchors_path, "manifest": manifest_path},
        config.__dict__, {"shuffle_seed": config.shuffle_seed},
    )
    _echo_report(ctx, {"groups": len(groups), "rows": len(rows)},
                 f"fused {len(groups)} group(s) -> {out_path}")
    if flagged:
        sys.exit(EXIT_FLAGGED)


@fuse.command("dbt")
@click.option("--judgments", "judgments_path", required=True, type=click.Path(exists=True))
@click.option("--anchors", "anchors_path", type=click.Path(exists=True))
@click.option("--manifest", "manifest_path", type=click.Path(exists=True))
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.pass_context
def fuse_dbt(ctx, judgments_path, anchors_path, manifest_path, config_path, out_path):
    """Anchored Davidson Bradley-Terry MAP fit per group (plus fitted nu)."""
    config = _load_dbt_config(config_path)
    groups, anchors = _grouped_inputs(judgments_path, anchors_path, manifest_path)
    rows = []
    flagged = False
    for group, js in sorted(groups.items(), key=lambda kv: (kv[0].category, kv[0].dimension)):
        group_anchors = anchors.for_group(group) if anchors else ()
        params = fit_anchored_dbt(js, group_anchors, config)
        if not params.converged:
            flagged = True
        for image, q in sorted(params.qualities.items()):
            rows.append(
                {"image": image, "dimension": group.dimension, "category": group.category, "q": q}
            )
        rows.append(
            {
                "category": group.category,
                "dimension": group.dimension,
                "nu": params.tie_propensity,
                "converged": params.converged,
            }
        )
    core.write_jsonl(out_path, rows)
    _write_manifest(
        out_path, "fuse dbt",
        {"judgments": judgments_path, "anchors": anchors_path, "manifest": manifest_path},
        config.__dict__, {},
    )
    _echo_report(ctx, {"groups": len(groups), "rows": len(rows)},
                 f"fitted {len(groups)} group(s) -> {out_path}")
    if flagged:
        sys.exit(EXIT_FLAGGED)


# ---------------------------------------------------------------------------
# calibrate
# ---------------------------------------------------------------------------

@main.command("calibrate")
@click.option("--latent", "latent_path", required=True, type=click.Path(exists=True))
@click.option("--anchors", "anchors_path", type=click.Path(exists=True))
@click.option("--mode", type=click.Choice(["global-sigmoid", "bridge"]), required=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--steepness", default=6.0, show_default=True)
@click.option("--span-low", default=1.0, show_default=True)
@click.option("--span-high", default=5.0, show_default=True)
@click.option("--per-group", is_flag=True, help="fit one sigmoid per group instead of pooling")
@click.pass_context
def calibrate_cmd(ctx, latent_path, anchors_path, mode, out_path, steepness,
                  span_low, span_high, per_group):
    """Map latent qualities onto the interpretable score scale."""
    rows = [r for r in core.read_jsonl(latent_path) if "image" in r]
    by_group: dict[GroupKey, list[dict]] = {}
    for r in rows:
        key = GroupKey(category=str(r.get("category", "default")), dimension=str(r["dimension"]))
        by_group.setdefault(key, []).append(r)

    out_rows = []
    if mode == "global-sigmoid":
        if not anchors_path:
            raise ValidationError("--anchors is required for global-sigmoid mode")
        anchors = core.load_anchors(anchors_path)

        def fit_for(groups: list[GroupKey]) -> cal.SigmoidFit:
            points = []
            for g in groups:
                q_table = {r["image"]: float(r["q"]) for r in by_group[g]}
                for entry in anchors.for_group(g):
                    if entry.image not in q_table:
                        raise ValidationError(
                            f"anchor {entry.image!r} missing from latent table for {g}"
                        )
                    points.append((q_table[entry.image], entry.mean_rating))
            return cal.fit_global_sigmoid(points, low=span_low, high=span_high)

        if per_group:
            fits = {g: fit_for([g]) for g in by_group}
        else:
            pooled = fit_for(list(by_group))
            fits = {g: pooled for g in by_group}
        for g, rs in sorted(by_group.items(), key=lambda kv: (kv[0].category, kv[0].dimension)):
            for r in sorted(rs, key=lambda r: r["image"]):
                out_rows.append(
                    {
                        "image": r["image"],
                        "dimension": g.dimension,
                        "category": g.category,
                        "score": cal.apply_sigmoid(float(r["q"]), fits[g]),
                    }
                )
    else:
        by_dimension: dict[str, list[dict]] = {}
        for r in rows:
            by_dimension.setdefault(str(r["dimension"]), []).append(r)
        for dimension, rs in sorted(by_dimension.items()):
            bridge_cal = cal.BridgeCalibration.from_qualities(
                (float(r["q"]) for r in rs),
                steepness=steepness, low=span_low, high=span_high,
            )
            for r in sorted(rs, key=lambda r: (str(r.get("category", "")), r["image"])):
                out_rows.append(
                    {
                        "image": r["image"],
                        "dimension": dimension,
                        "category": r.get("category", "default"),
                        "score": cal.bridge_calibrate(float(r["q"]), bridge_cal),
                    }
                )
    core.write_jsonl(out_path, out_rows)
    _write_manifest(
        out_path, f"calibrate {mode}",
        {"latent": latent_path, "anchors": anchors_path},
        {"steepness": steepness, "span": [span_low, span_high], "per_group": per_group},
        {},
    )
    _echo_report(ctx, {"rows": len(out_rows)}, f"calibrated {len(out_rows)} scores -> {out_path}")


# ---------------------------------------------------------------------------
# diagnose
# ---------------------------------------------------------------------------

@main.group()
def diagnose():
    """Protocol, cross-method, budget, and stability diagnostics."""


def _scores_by_rater(ratings, dimension):
    out: dict[str, dict[str, float]] = {}
    for r in ratings:
        if r.dimension == dimension and not r.is_repeat:
            out.setdefault(r.rater, {})[r.image] = float(r.score)
    return out


def _judgments_by_rater(judgments, dimension):
    out: dict[str, list] = {}
    for j in judgments:
        if j.dimension == dimension and not j.is_repeat:
            out.setdefault(j.rater, []).append(j)
    return out


@diagnose.command("protocol")
@click.option("--ratings", "ratings_path", required=True, type=click.Path(exists=True))
@click.option("--judgments", "judgments_path", required=True, type=click.Path(exists=True))
@click.option("--tiers", "tiers_path", type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.pass_context
def diagnose_protocol(ctx, ratings_path, judgments_path, tiers_path, out_path):
    """Agreement and stability comparison of the two protocols."""
    ratings = core.load_ratings(ratings_path)
    judgments = core.load_judgments(judgments_path)
    tiers = None
    if tiers_path:
        with open(tiers_path) as fh:
            tiers = json.load(fh)
    dimensions = sorted({r.dimension for r in ratings} | {j.dimension for j in judgments})
    elo_agg = diagnostics.make_elo_aggregator(EloConfig(passes=30))
    report: dict = {"per_dimension": {}, "averages": {}}
    collected: dict[str, list[float]] = {}

    for dimension in dimensions:
        block: dict = {}
        point = _scores_by_rater(ratings, dimension)
        pair = _judgments_by_rater(judgments, dimension)
        raters = sorted(set(point) & set(pair)) or sorted(set(point) | set(pair))

        point_rankings = {r: point[r] for r in raters if r in point}
        pair_rankings = {
            r: elo_agg([pair[r]]) for r in raters if r in pair and pair[r]
        }
        if len(point_rankings) >= 2:
            items = sorted(next(iter(point_rankings.values())))
            mat = np.array([[point_rankings[r][i] for i in items] for r in point_rankings])
            block["kendalls_w_ratings"] = diagnostics.kendalls_w(mat)
        if len(pair_rankings) >= 2:
            items = sorted(next(iter(pair_rankings.values())))
            mat = np.array([[pair_rankings[r][i] for i in items] for r in pair_rankings])
            block["kendalls_w_preferences"] = diagnostics.kendalls_w(mat)
        if len(point_rankings) >= 4:
            block["split_half_ratings"] = diagnostics.split_half_spearman(
                point_rankings, diagnostics.mean_rating_aggregator
            )
        if len(pair_rankings) >= 4:
            block["split_half_preferences"] = diagnostics.split_half_spearman(
                {r: pair[r] for r in pair_rankings}, elo_agg
            )
        if len(point_rankings) >= 3:
            loo = diagnostics.leave_one_out_stability(
                point_rankings, diagnostics.mean_rating_aggregator
            )
            block["leave_one_out_ratings"] = {"srcc": loo[0], "top10_overlap": loo[1]}
        if len(pair_rankings) >= 3:
            loo = diagnostics.leave_one_out_stability(
                {r: pair[r] for r in pair_rankings}, elo_agg
            )
            block["leave_one_out_preferences"] = {"srcc": loo[0], "top10_overlap": loo[1]}

        if point_rankings:
            consensus_point = diagnostics.mean_rating_aggregator(list(point_rankings.values()))
            block["to_consensus_pra_ratings"] = diagnostics.to_consensus_pra(
                point_rankings, consensus_point
            )
            if tiers:
                block["triplet_separation_ratings"] = diagnostics.triplet_separation(
                    consensus_point, tiers
                )
        if pair_rankings:
            consensus_pair = elo_agg([js for js in pair.values()])
            block["to_consensus_pra_preferences"] = diagnostics.to_consensus_pra(
                pair_rankings, consensus_pair
            )
            if tiers:
                block["triplet_separation_preferences"] = diagnostics.triplet_separation(
                    consensus_pair, tiers
                )

        # per-judgment agreement in a shared 3-way label space
        pairs_judged = sorted({j.pair for js in pair.values() for j in js})
        if pairs_judged and len(raters) >= 2 and point:
            pref_labels = []
            induced_labels = []
            usable_raters = [r for r in raters if r in point and r in pair]
            outcome_by = {
                r: {j.pair: j.canonical().outcome.value for j in pair[r]} for r in usable_raters
            }
            induced_by = {}
            for r in usable_raters:
                rater_ratings = [
                    rec for rec in ratings
                    if rec.rater == r and rec.dimension == dimension and not rec.is_repeat
                ]
                induced = core.induce_pairwise_from_ratings(rater_ratings, pairs_judged)
                induced_by[r] = {j.pair: j.outcome.value for j in induced}
            for p in pairs_judged:
                if all(p in outcome_by[r] for r in usable_raters):
                    pref_labels.append([outcome_by[r][p] for r in usable_raters])
                    induced_labels.append([induced_by[r][p] for r in usable_raters])
            if pref_labels:
                block["fleiss_kappa_preferences"] = diagnostics.fleiss_kappa(pref_labels)
                block["fleiss_kappa_ratings_induced"] = diagnostics.fleiss_kappa(induced_labels)
                block["krippendorff_alpha_preferences"] = diagnostics.krippendorff_alpha_nominal(pref_labels)
                block["krippendorff_alpha_ratings_induced"] = diagnostics.krippendorff_alpha_nominal(induced_labels)
                if len(usable_raters) == 5:
                    block["unanimity_preferences"] = diagnostics.unanimity_rates(pref_labels)
                    block["unanimity_ratings_induced"] = diagnostics.unanimity_rates(induced_labels)

        block["transitivity_violation_rate"] = {
            r: diagnostics.transitivity_violation_rate(js) for r, js in sorted(pair.items())
        }
        report["per_dimension"][dimension] = block
        for key, value in block.items():
            if isinstance(value, (int, float)):
                collected.setdefault(key, []).append(float(value))

    report["averages"] = {k: float(np.mean(v)) for k, v in sorted(collected.items())}
    with open(out_path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
    _write_manifest(out_path, "diagnose protocol",
                    {"ratings": ratings_path, "judgments": judgments_path}, {}, {})
    _echo_report(ctx, report["averages"], f"protocol report -> {out_path}")


@diagnose.command("crossmethod")
@click.option("--scores-a", "scores_a_path", required=True, type=click.Path(exists=True))
@click.option("--scores-b", "scores_b_path", required=True, type=click.Path(exists=True))
@click.option("--tie-eps", required=True, type=float)
@click.option("--out", "out_path", type=click.Path())
@click.pass_context
def diagnose_crossmethod(ctx, scores_a_path, scores_b_path, tie_eps, out_path):
    """Agreement between two calibrated score tables."""
    def load(path):
        table: dict[GroupKey, dict[str, float]] = {}
        for r in core.read_jsonl(path):
            if "image" not in r:
                continue
            key = GroupKey(category=str(r.get("category", "default")),
                           dimension=str(r["dimension"]))
            table.setdefault(key, {})[r["image"]] = float(r["score"])
        return table

    a, b = load(scores_a_path), load(scores_b_path)
    shared = sorted(set(a) & set(b), key=lambda g: (g.category, g.dimension))
    if not shared:
        raise ValidationError("score tables share no (category, dimension) group")
    per_group = {}
    for g in shared:
        xs, ys = [], []
        images = sorted(set(a[g]) & set(b[g]))
        xs = [a[g][i] for i in images]
        ys = [b[g][i] for i in images]
        pairs = core.all_pairs(images)
        d_stat, p_value = diagnostics.ks_two_sample(xs, ys)
        per_group[f"{g.category}/{g.dimension}"] = {
            "srcc": diagnostics.srcc(xs, ys),
            "plcc": diagnostics.plcc(xs, ys),
            "mae": diagnostics.mae(xs, ys),
            "rmse": diagnostics.rmse(xs, ys),
            "decision_agreement": diagnostics.decision_agreement(a[g], b[g], pairs, tie_eps),
            "ks_d": d_stat,
            "ks_p": p_value,
            "ks_pass": p_value > 0.05,
        }
    metrics = ["srcc", "plcc", "mae", "rmse", "decision_agreement"]
    report = {
        "per_group": per_group,
        "averages": {m: float(np.mean([v[m] for v in per_group.values()])) for m in metrics},
        "ks_pass": f"{sum(1 for v in per_group.values() if v['ks_pass'])}/{len(per_group)}",
        "tie_epsilon": tie_eps,
    }
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
        _write_manifest(out_path, "diagnose crossmethod",
                        {"scores_a": scores_a_path, "scores_b": scores_b_path},
                        {"tie_eps": tie_eps}, {})
    _echo_report(ctx, report)


def _parse_fractions(spec: str) -> list[float]:
    if ".." in spec:
        lo, hi = spec.split("..")
        lo, hi = float(lo), float(hi)
        return [round(f, 4) for f in np.arange(lo, hi + 1e-9, 0.1)]
    return [float(f) for f in spec.split(",")]


@diagnose.command("budget")
@click.option("--judgments", "judgments_path", required=True, type=click.Path(exists=True))
@click.option("--fractions", default="0.1..0.8", show_default=True)
@click.option("--seeds", default=5, show_default=True, type=int)
@click.option("--passes", default=50, show_default=True, type=int)
@click.option("--out", "out_path", type=click.Path())
@click.pass_context
def diagnose_budget(ctx, judgments_path, fractions, seeds, passes, out_path):
    """Elo ranking fidelity versus pair-budget fraction (CSV curve)."""
    judgments = core.load_judgments(judgments_path)
    curve = diagnostics.budget_subsample_study(
        judgments,
        fractions=_parse_fractions(fractions),
        seeds=list(range(seeds)),
        config=EloConfig(passes=passes),
    )
    lines = ["fraction,mean_srcc,mean_plcc,flagged_draws"]
    lines += [
        f"{p.fraction},{p.mean_srcc},{p.mean_plcc},{p.flagged_draws}" for p in curve
    ]
    csv_text = "\n".join(lines) + "\n"
    if out_path:
        Path(out_path).write_text(csv_text)
        _write_manifest(out_path, "diagnose budget", {"judgments": judgments_path},
                        {"fractions": fractions, "passes": passes}, {"seeds": seeds})
    report = {
        "curve": [
            {"fraction": p.fraction, "mean_srcc": p.mean_srcc, "mean_plcc": p.mean_plcc}
            for p in curve
        ]
    }
    _echo_report(ctx, report, csv_text.strip())
    if any(p.flagged_draws for p in curve):
        sys.exit(EXIT_FLAGGED)


@diagnose.command("stability")
@click.option("--ratings", "ratings_path", type=click.Path(exists=True))
@click.option("--judgments", "judgments_path", type=click.Path(exists=True))
@click.option("--out", "out_path", type=click.Path())
@click.pass_context
def diagnose_stability(ctx, ratings_path, judgments_path, out_path):
    """Leave-one-annotator-out ranking stability."""
    if not ratings_path and not judgments_path:
        raise ValidationError("provide --ratings and/or --judgments")
    report: dict = {}
    if ratings_path:
        ratings = core.load_ratings(ratings_path)
        for dimension in sorted({r.dimension for r in ratings}):
            data = _scores_by_rater(ratings, dimension)
            srcc_v, overlap = diagnostics.leave_one_out_stability(
                data, diagnostics.mean_rating_aggregator
            )
            report.setdefault("ratings", {})[dimension] = {
                "leave_one_out_srcc": srcc_v, "top10_overlap": overlap
            }
    if judgments_path:
        judgments = core.load_judgments(judgments_path)
        agg = diagnostics.make_elo_aggregator(EloConfig(passes=30))
        for dimension in sorted({j.dimension for j in judgments}):
            data = _judgments_by_rater(judgments, dimension)
            srcc_v, overlap = diagnostics.leave_one_out_stability(data, agg)
            report.setdefault("preferences", {})[dimension] = {
                "leave_one_out_srcc": srcc_v, "top10_overlap": overlap
            }
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
    _echo_report(ctx, report)


# ---------------------------------------------------------------------------
# bridge
# ---------------------------------------------------------------------------

@main.group("bridge")
def bridge_group():
    """Preference-to-score bridge over a judge."""


@bridge_group.command("run")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True),
              help="corpus manifest JSON (image -> {category, path})")
@click.option("--judge", "judge_kind", type=click.Choice(["synthetic", "replay", "remote"]),
              required=True)
@click.option("--pool-size", default=50, show_default=True, type=int)
@click.option("--refs", default=10, show_default=True, type=int)
@click.option("--pool-seed", default=42, show_default=True, type=int)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--latents", "latents_path", type=click.Path(exists=True),
              help="synthetic judge: planted latents JSONL {image, dimension, q}")
@click.option("--noise", default=0.0, show_default=True, type=float)
@click.option("--tie-band", default=0.0, show_default=True, type=float)
@click.option("--judge-seed", default=0, show_default=True, type=int)
@click.option("--transcript", "transcript_path", type=click.Path(exists=True),
              help="replay judge: recorded transcript")
@click.option("--record", "record_path", type=click.Path(),
              help="record every judge call to this transcript")
@click.option("--endpoint", help="remote judge: chat-completions URL")
@click.option("--model", help="remote judge: model name")
@click.option("--cache-dir", type=click.Path(), help="remote judge: verdict cache")
@click.option("--swap-ab", is_flag=True, default=False, show_default=True,
              help="randomize left/right presentation to counter position bias")
@click.pass_context
def bridge_run(ctx, corpus_path, judge_kind, pool_size, refs, pool_seed, out_path,
               latents_path, noise, tie_band, judge_seed, transcript_path, record_path,
               endpoint, model, cache_dir, swap_ab):
    """Pool construction, sparse posterior rating, sigmoid calibration."""
    manifest = core.load_manifest(corpus_path)
    corpus = sorted(manifest)
    if judge_kind == "synthetic":
        if not latents_path:
            raise ValidationError("synthetic judge requires --latents")
        table: dict[str, dict[str, float]] = {}
        for r in core.read_jsonl(latents_path):
            table.setdefault(str(r["image"]), {})[str(r["dimension"])] = float(
                r.get("q", r.get("latent", r.get("score")))
            )
        judge = SyntheticJudge(SyntheticJudgeConfig(
            latent_table=table, noise_std=noise, tie_band=tie_band, seed=judge_seed
        ))
    elif judge_kind == "replay":
        if not transcript_path:
            raise ValidationError("replay judge requires --transcript")
        judge = ReplayJudge(transcript_path)
    else:
        if not endpoint or not model:
            raise ValidationError("remote judge requires --endpoint and --model")
        paths = {img: meta.get("path", img) for img, meta in manifest.items()}
        judge = RemoteJudge(
            RemoteJudgeConfig(endpoint=endpoint, model=model, cache_dir=cache_dir),
            image_paths=paths,
        )
    if swap_ab:
        from .judge import PresentationSwapJudge

        judge = PresentationSwapJudge(judge, seed=pool_seed)
    if record_path:
        judge = RecordingJudge(judge, record_path)

    config = BridgeConfig(pool_size=pool_size, refs_per_image=refs, pool_seed=pool_seed)
    run = pseudo_label_corpus(corpus, judge, config)
    rows = [
        {"image": img, "dimension": d, "score": s}
        for img in sorted(run.scores)
        for d, s in sorted(run.scores[img].items())
    ]
    core.write_jsonl(out_path, rows)
    expected = inference_cost(pool_size, refs, len(corpus))
    _write_manifest(out_path, "bridge run",
                    {"corpus": corpus_path, "latents": latents_path,
                     "transcript": transcript_path},
                    {"pool_size": pool_size, "refs": refs, "judge": judge_kind},
                    {"pool_seed": pool_seed, "judge_seed": judge_seed})
    _echo_report(
        ctx,
        {"images": len(corpus), "judge_calls": run.judge_calls, "expected_calls": expected},
        f"pseudo-labeled {len(corpus)} images with {run.judge_calls} judge calls -> {out_path}",
    )


# ---------------------------------------------------------------------------
# reward
# ---------------------------------------------------------------------------

def _load_samples(path) -> list[GroupSample]:
    samples = []
    for r in core.read_jsonl(path):
        samples.append(
            GroupSample(
                image=str(r["image"]),
                scores=np.asarray(r["scores"], dtype=float),
                parse_flags=np.asarray(r["parse_flags"], dtype=bool),
            )
        )
    return samples


def _load_pseudo(path) -> dict[str, dict[str, float]]:
    pseudo: dict[str, dict[str, float]] = {}
    for r in core.read_jsonl(path):
        pseudo.setdefault(str(r["image"]), {})[str(r["dimension"])] = float(r["score"])
    return pseudo


@main.group("reward")
def reward_group():
    """Offline verification of the ranking-fidelity reward math."""


@reward_group.command("eval")
@click.option("--samples", "samples_path", required=True, type=click.Path(exists=True))
@click.option("--pseudo", "pseudo_path", required=True, type=click.Path(exists=True))
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.pass_context
def reward_eval(ctx, samples_path, pseudo_path, config_path, out_path):
    """Rewards and advantages for a recorded sampling transcript."""
    config = RewardConfig(**json.load(open(config_path))) if config_path else RewardConfig()
    samples = _load_samples(samples_path)
    pseudo = _load_pseudo(pseudo_path)
    dimensions = sorted(next(iter(pseudo.values())).keys())
    rewards = total_rewards(samples, pseudo, config, dimensions)
    rows = []
    for s in samples:
        r = rewards[s.image]
        rows.append(
            {
                "image": s.image,
                "rewards": [float(v) for v in r],
                "advantages": [float(v) for v in grpo_advantages(r)],
            }
        )
    core.write_jsonl(out_path, rows)
    _write_manifest(out_path, "reward eval",
                    {"samples": samples_path, "pseudo": pseudo_path}, config.__dict__, {})
    _echo_report(ctx, {"images": len(rows)}, f"rewarded {len(rows)} images -> {out_path}")


@reward_group.command("sweep")
@click.option("--samples", "samples_path", required=True, type=click.Path(exists=True))
@click.option("--pseudo", "pseudo_path", required=True, type=click.Path(exists=True))
@click.option("--tau-w", "tau_spec", default="0.1..1.0", show_default=True)
@click.option("--steps", default=10, show_default=True, type=int)
@click.option("--out", "out_path", type=click.Path())
@click.pass_context
def reward_sweep(ctx, samples_path, pseudo_path, tau_spec, steps, out_path):
    """Mean reward as the pair-weight threshold sweeps a range (CSV)."""
    lo, hi = (float(x) for x in tau_spec.split(".."))
    samples = _load_samples(samples_path)
    pseudo = _load_pseudo(pseudo_path)
    dimensions = sorted(next(iter(pseudo.values())).keys())
    lines = ["tau_w,mean_reward"]
    for tau in np.linspace(lo, hi, steps):
        config = RewardConfig(gap_threshold=float(tau))
        rewards = rank_reward(samples, pseudo, config, dimensions)
        mean_reward = float(np.mean([v for r in rewards.values() for v in r]))
        lines.append(f"{tau:.4f},{mean_reward}")
    csv_text = "\n".join(lines) + "\n"
    if out_path:
        Path(out_path).write_text(csv_text)
    _echo_report(ctx, {"csv": lines[1:]}, csv_text.strip())


# ---------------------------------------------------------------------------
# simulate, serve
# ---------------------------------------------------------------------------

@main.command("simulate")
@click.option("--items", default=50, show_default=True, type=int)
@click.option("--raters", default=5, show_default=True, type=int)
@click.option("--dimensions", default="overall", show_default=True,
              help="comma-separated dimension names")
@click.option("--rating-noise", default=0.3, show_default=True, type=float)
@click.option("--judgment-noise", default=0.3, show_default=True, type=float)
@click.option("--tie-band", default=0.15, show_default=True, type=float)
@click.option("--budget", type=int, help="pair budget (default: complete graph)")
@click.option("--heterogeneous/--homogeneous", default=False, show_default=True,
              help="give raters different personal score scales")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out-dir", "out_dir", required=True, type=click.Path())
@click.pass_context
def simulate_cmd(ctx, items, raters, dimensions, rating_noise, judgment_noise,
                 tie_band, budget, heterogeneous, seed, out_dir):
    """Generate a synthetic dual-protocol campaign with planted latents."""
    dims = tuple(d.strip() for d in dimensions.split(",") if d.strip())
    profiles = heterogeneous_profiles(raters, seed) if heterogeneous else None
    spec = CampaignSpec(
        n_items=items, n_raters=raters, dimensions=dims,
        rating_noise_std=rating_noise, judgment_noise_std=judgment_noise,
        tie_band=tie_band, pair_budget=budget, rater_profiles=profiles, seed=seed,
    )
    campaign = simulate_campaign(spec)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    core.save_ratings(out / "ratings.jsonl", campaign.ratings)
    core.save_judgments(out / "judgments.jsonl", campaign.judgments)
    core.write_jsonl(
        out / "latents.jsonl",
        (
            {"image": img, "dimension": d, "q": q}
            for img in campaign.images
            for d, q in sorted(campaign.latents[img].items())
        ),
    )
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(campaign.manifest, fh, indent=2, sort_keys=True)
    try:
        anchors = core.select_anchors(campaign.ratings, campaign.manifest)
        core.save_anchors(out / "anchors.jsonl", anchors)
    except ValidationError as exc:
        warnings.warn(f"anchor selection failed: {exc}")
    _write_manifest(out / "ratings.jsonl", "simulate", {},
                    {"items": items, "raters": raters, "dimensions": dims,
                     "heterogeneous": heterogeneous}, {"seed": seed})
    _echo_report(
        ctx,
        {"images": len(campaign.images), "ratings": len(campaign.ratings),
         "judgments": len(campaign.judgments), "pairs": len(campaign.pairs)},
        f"wrote synthetic campaign to {out_dir}",
    )


@main.command("serve")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
@click.option("--log-dir", type=click.Path())
@click.option("--image-root", type=click.Path(exists=True))
@click.option("--ui-root", type=click.Path(exists=True))
def serve_cmd(config_path, host, port, log_dir, image_root, ui_root):
    """Run the annotation service."""
    from .service import serve

    serve(config_path, host=host, port=port, log_dir=log_dir,
          image_root=image_root, ui_root=ui_root)


def entrypoint() -> None:
    try:
        main(standalone_mode=False)
    except click.exceptions.ClickException as exc:
        exc.show()
        sys.exit(EXIT_VALIDATION)
    except click.exceptions.Abort:
        sys.exit(130)
    except JudgeTransportError as exc:
        click.echo(f"remote judge failure: {exc}", err=True)
        sys.exit(EXIT_REMOTE)
    except ValidationError as exc:
        click.echo(f"validation error: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    except PrefscaleError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    except OSError as exc:
        click.echo(f"i/o error: {exc}", err=True)
        sys.exit(EXIT_IO)


if __name__ == "__main__":
    entrypoint()
