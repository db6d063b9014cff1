"""Stage functions behind the CLI: ingest, filter, score, fit, train, refine,
evaluate, report. Each reads and writes plain JSON/JSONL files."""

from __future__ import annotations

import json
import logging
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

from . import plotting
from .corpus import (
    CommentRecord,
    FilterLexicons,
    VideoRecord,
    corpus_stats,
    filter_comments,
    filter_videos,
    format_stats_table,
    orphan_comments,
    parse_corpus,
    write_corpus,
)
from .evalharness import evaluate
from .metrics import BREAKDOWN_FIELDS, MetricParams, ScoreBreakdown, VideoContext, score_comment
from .providers import KnowledgeBase, ProviderConfig, Providers, TermLexicon
from .reward import (
    AUX_NAMES,
    RewardTrainConfig,
    auxiliary_weights,
    basic_reward,
    compose_reward,
    pairwise_accuracy,
    sequences_from_scores,
    train_reward_scorer,
)
from .tot import ToTError, TotOptimizerConfig, run_tot
from .weights import FitConfig, WeightSet, filter_low_agreement, fit_weight_set, rating_tables

logger = logging.getLogger(__name__)

REWARD_FEATURES = ("I", "R", "C", "U")


class ConfigError(Exception):
    """Bad or missing configuration; maps to exit code 2."""


@dataclass
class RunConfig:
    corpus: str | None = None
    weights: str | None = None
    params: str | None = None
    lexicons: str | None = None
    rhetoric: str | None = None
    trending: str | None = None
    kb: str | None = None
    endpoint_url: str | None = None
    timeout_ms: int = 10_000
    retry_count: int = 2
    vote_rounds: int = 5
    seed: int = 42
    parallelism: int = 1
    fit_top_level: bool = False
    tot_direction: str = "descent"
    tot_learning_rate: float = 0.1
    tot_max_iters: int = 100

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config key(s): {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return asdict(self)

    def check_paths(self) -> None:
        for key in ("corpus", "weights", "params", "lexicons", "rhetoric", "trending", "kb"):
            p = getattr(self, key)
            if p is not None and not Path(p).exists():
                raise ConfigError(f"{key} path does not exist: {p}")
        if self.parallelism < 1:
            raise ConfigError("parallelism must be >= 1")

    def provider_config(self) -> ProviderConfig:
        try:
            return ProviderConfig(self.endpoint_url, self.timeout_ms, self.retry_count, self.vote_rounds)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def providers(self) -> Providers:
        kw = {"config": self.provider_config()}
        if self.rhetoric:
            kw["rhetoric"] = TermLexicon.from_file(self.rhetoric)
        if self.trending:
            kw["trending"] = TermLexicon.from_file(self.trending)
        if self.kb:
            kw["kb"] = KnowledgeBase.from_file(self.kb)
        return Providers(**kw)

    def metric_params(self) -> MetricParams:
        try:
            return MetricParams.load(self.params)
        except (OSError, ValueError, TypeError) as exc:
            raise ConfigError(f"bad params file {self.params}: {exc}") from exc

    def weight_set(self) -> WeightSet:
        from .weights import load_weights

        try:
            return load_weights(self.weights)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"bad weights file {self.weights}: {exc}") from exc

    def filter_lexicons(self) -> FilterLexicons:
        return FilterLexicons.from_dir(self.lexicons) if self.lexicons else FilterLexicons()


# ---------------------------------------------------------------------------
# io helpers


def write_json(path, obj) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, ensure_ascii=False, indent=2)
        fh.write("\n")


def write_jsonl(path, rows) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for r in rows:
            fh.write(json.dumps(r, ensure_ascii=False) + "\n")


def read_jsonl(path) -> list[dict]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append(json.loads(line))
            except ValueError as exc:
                raise ValueError(f"{path}:{n}: invalid JSON ({exc})") from exc
    return rows


# ---------------------------------------------------------------------------
# stages


def ingest_summary(videos, comments) -> dict:
    return {
        "videos": len(videos),
        "comments": len(comments),
        "orphan_comments": len(orphan_comments(videos, comments)),
        "labelled_comments": sum(1 for c in comments if c.human_labels),
        "rated_comments": sum(1 for c in comments if c.human_rating),
    }


def run_filter(videos, comments, lexicons: FilterLexicons):
    kept_c, c_report = filter_comments(comments, lexicons)
    kept_v, v_report = filter_videos(videos, kept_c)
    live = {v.video_id for v in kept_v}
    final_c = [c for c in kept_c if c.video_id in live]
    report = {
        "comments": c_report.to_dict(),
        "videos": v_report.to_dict(),
        "comments_dropped_with_video": len(kept_c) - len(final_c),
    }
    return kept_v, final_c, report


def score_corpus(videos: Sequence[VideoRecord], comments: Sequence[CommentRecord], providers: Providers,
                 params: MetricParams, weights: WeightSet, parallelism: int = 1) -> list[tuple[CommentRecord, ScoreBreakdown]]:
    """Score every comment whose video is present, in input order."""
    by_id = {v.video_id: v for v in videos}
    contexts = {v.video_id: VideoContext(v, providers) for v in videos}
    todo = [c for c in comments if c.video_id in by_id]

    def one(c):
        return score_comment(c, by_id[c.video_id], providers, params, weights, contexts[c.video_id])

    if parallelism > 1:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            scores = list(pool.map(one, todo))
    else:
        scores = [one(c) for c in todo]
    return list(zip(todo, scores))


def score_rows(scored) -> list[dict]:
    return [{"comment_id": c.comment_id, "video_id": c.video_id, **b.to_dict()} for c, b in scored]


def label_rows(scored) -> list[tuple[dict, dict]]:
    rows = []
    for c, b in scored:
        if not c.human_labels:
            continue
        feats = {k: getattr(b, k) for k in BREAKDOWN_FIELDS}
        feats.update(N_l=float(c.likes), N_r=float(c.replies))
        rows.append((feats, dict(c.human_labels)))
    return rows


def fit_from_corpus(videos, comments, providers, params, seed: int = 42, fit_top_level: bool = False,
                    base: WeightSet | None = None) -> WeightSet:
    base = base or WeightSet()
    scored = score_corpus(videos, comments, providers, params, base)
    return fit_weight_set(label_rows(scored), FitConfig(seed=seed), fit_top_level, base)


def agreement_report(comments, threshold: float = 0.7) -> dict:
    tables = rating_tables(comments)
    kept, alphas = filter_low_agreement(tables, threshold)
    return {"threshold": threshold, "alphas": alphas, "kept_videos": sorted(kept)}


def reward_sequences(scored):
    groups = defaultdict(list)
    for c, b in scored:
        groups[c.video_id].append((c.comment_id, b.F, [getattr(b, k) for k in REWARD_FEATURES]))
    return sequences_from_scores(dict(groups))


def reward_report(scored, source: str = "engagement") -> dict:
    per_video = defaultdict(list)
    for c, b in scored:
        per_video[c.video_id].append([b.I, b.R, b.C, b.U])
    per_video = {k: v for k, v in per_video.items() if len(v) >= 2}
    ws = auxiliary_weights(per_video)
    rewards = []
    for c, b in scored:
        if source == "human" and not c.human_rating:
            continue
        br = basic_reward(b.U, c.human_rating, source)
        rewards.append({
            "comment_id": c.comment_id,
            "reward": compose_reward(br, [b.I, b.R, b.C], ws),
        })
    return {"basic_source": source, "auxiliary_weights": dict(zip(AUX_NAMES, ws)), "rewards": rewards}


def ranking_tasks(scored) -> list[dict]:
    """Per-video retrieval tasks: rank comments by F, relevant = most engaged comment."""
    groups = defaultdict(list)
    for c, b in scored:
        groups[c.video_id].append((c, b))
    tasks = []
    for vid, items in groups.items():
        if len(items) < 2:
            continue
        engaged = max(range(len(items)), key=lambda i: (items[i][0].likes + items[i][0].replies, -i))
        tasks.append({
            "video_id": vid,
            "candidates": [c.text for c, _ in items],
            "scores": [b.F for _, b in items],
            "relevant": [engaged],
        })
    return tasks


def report_payload(videos, comments, scored=None, extra: dict | None = None) -> tuple[dict, str]:
    if not videos and not comments:
        return {"counts": {"videos": 0, "comments": 0}, "stats": {}, "scores": {}}, ""
    table = corpus_stats(videos, comments)
    payload = {
        "counts": {"videos": len(videos), "comments": len(comments)},
        "stats": {k: v.to_dict() for k, v in table.items()},
        "scores": {},
    }
    if scored:
        for name in BREAKDOWN_FIELDS:
            vals = [getattr(b, name) for _, b in scored]
            payload["scores"][name] = {"mean": sum(vals) / len(vals), "min": min(vals), "max": max(vals)}
    if extra:
        payload.update(extra)
    return payload, format_stats_table(table)


def write_report(out_dir, videos, comments, scored=None, extra=None) -> list[Path]:
    out_dir = Path(out_dir)
    payload, table_txt = report_payload(videos, comments, scored, extra)
    write_json(out_dir / "report.json", payload)
    (out_dir / "table1.txt").write_text(table_txt, encoding="utf-8")
    written = [out_dir / "report.json", out_dir / "table1.txt"]
    if not payload["stats"]:
        return written
    figs = out_dir / "figures"
    table = corpus_stats(videos, comments)
    written.append(plotting.stats_bars(table, figs / "feature_means"))
    if comments:
        written.append(plotting.histogram([len(c.text.strip()) for c in comments], figs / "comment_lengths",
                                          "Comment lengths", "characters"))
    if scored:
        cols = {k: [getattr(b, k) for _, b in scored] for k in ("I", "R", "C", "U", "F")}
        written.append(plotting.component_boxplot(cols, figs / "score_components"))
        written.append(plotting.histogram(cols["F"], figs / "comprehensive_scores", "Comprehensive score", "F"))
    return written


def run_pipeline(cfg: RunConfig, out_dir) -> dict:
    """Run every stage over ``cfg.corpus`` into ``out_dir``.

    ``manifest.json`` lists each stage with its status and artifacts; it is
    rewritten after every stage, so a failure leaves the partial run labelled.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {"seed": cfg.seed, "stages": []}

    def stage(name, artifacts, status="ok", **info):
        manifest["stages"].append({"name": name, "status": status,
                                   "artifacts": [str(Path(a).relative_to(out)) for a in artifacts], **info})
        write_json(out / "manifest.json", manifest)

    current = "ingest"
    try:
        videos, comments = parse_corpus(cfg.corpus)
        write_json(out / "ingest.json", ingest_summary(videos, comments))
        stage("ingest", [out / "ingest.json"])

        current = "filter"
        videos, comments, frep = run_filter(videos, comments, cfg.filter_lexicons())
        write_corpus(out / "filtered.jsonl", videos, comments)
        write_json(out / "filter_report.json", frep)
        stage("filter", [out / "filtered.jsonl", out / "filter_report.json"])

        current = "score"
        providers = cfg.providers()
        params = cfg.metric_params()
        base = cfg.weight_set()
        scored = score_corpus(videos, comments, providers, params, base, cfg.parallelism)

        current = "fit-weights"
        labelled = label_rows(scored)
        if labelled:
            weights = fit_weight_set(labelled, FitConfig(seed=cfg.seed), cfg.fit_top_level, base)
            scored = score_corpus(videos, comments, providers, params, weights, cfg.parallelism)
        else:
            weights = base
        weights.save(out / "weights.json")
        write_json(out / "fit_log.json", weights.fit_log or {})
        write_json(out / "agreement.json", agreement_report(comments))
        stage("fit-weights", [out / "weights.json", out / "fit_log.json", out / "agreement.json"],
              labelled=len(labelled))

        current = "score"
        write_jsonl(out / "scores.jsonl", score_rows(scored))
        stage("score", [out / "scores.jsonl"])

        current = "train-reward"
        seqs = reward_sequences(scored)
        write_jsonl(out / "sequences.jsonl", [s.to_dict() for s in seqs])
        arts = [out / "sequences.jsonl"]
        if seqs:
            res = train_reward_scorer(seqs, RewardTrainConfig(seed=cfg.seed))
            res.scorer.save(out / "scorer.json")
            write_json(out / "reward.json", {**reward_report(scored),
                                             "train_pairwise_accuracy": pairwise_accuracy(res.scorer, seqs),
                                             "final_loss": res.losses[-1], "iterations": res.iterations})
            arts += [out / "scorer.json", out / "reward.json"]
        stage("train-reward", arts, sequences=len(seqs))

        current = "tot-refine"
        tot_rows = []
        best = {}
        for c, b in scored:
            if c.video_id not in best or b.F > best[c.video_id][1].F:
                best[c.video_id] = (c, b)
        tcfg = TotOptimizerConfig(cfg.tot_learning_rate, cfg.tot_max_iters, cfg.tot_direction)
        by_id = {v.video_id: v for v in videos}
        for vid in sorted(best):
            c, _ = best[vid]
            try:
                res = run_tot(by_id[vid], c.text, providers.kb, providers.generator, tcfg, providers.embed)
            except ToTError as exc:
                logger.warning("skipping refinement for %s: %s", vid, exc)
                continue
            tot_rows.append({"video_id": vid, "comment_id": c.comment_id, **res})
        write_jsonl(out / "tot.jsonl", tot_rows)
        stage("tot-refine", [out / "tot.jsonl"])

        current = "evaluate"
        tasks = ranking_tasks(scored)
        gen_rows = []
        for row in tot_rows:
            refs = [c.text for c, _ in scored if c.video_id == row["video_id"] and c.comment_id != row["comment_id"]]
            if refs:
                gen_rows.append({"video_id": row["video_id"], "hypothesis": row["refined_comment"], "references": refs})
        write_jsonl(out / "tasks.jsonl", tasks + gen_rows)
        metrics = evaluate(tasks + gen_rows)
        write_json(out / "eval.json", metrics)
        stage("evaluate", [out / "tasks.jsonl", out / "eval.json"])

        current = "report"
        written = write_report(out / "report", videos, comments, scored,
                               {"filter": frep, "evaluation": metrics})
        stage("report", written)
    except Exception as exc:
        stage(current, [], status="failed", error=f"{type(exc).__name__}: {exc}")
        raise
    return manifest
