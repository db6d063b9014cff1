"""``hotscore`` command line.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 provider error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import pipeline as pl
from .corpus import CorpusError, parse_corpus, write_corpus
from .evalharness import METRICS, evaluate
from .providers import ProviderError
from .reward import RankedSequence, RewardTrainConfig, pairwise_accuracy, train_reward_scorer
from .tot import ToTError, TotOptimizerConfig, run_tot
from .training_math import FusionParams, explain_losses

logger = logging.getLogger("hotscore")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_PROVIDER = 0, 2, 3, 4

PATH_FLAGS = ("corpus", "weights", "params", "lexicons", "rhetoric", "trending", "kb")


def _resolve(args) -> pl.RunConfig:
    cfg = pl.RunConfig.from_file(args.config) if args.config else pl.RunConfig()
    for key in PATH_FLAGS:
        val = getattr(args, key, None)
        if val is not None:
            setattr(cfg, key, val)
    if args.seed is not None:
        cfg.seed = args.seed
    for key in ("endpoint_url", "parallelism", "fit_top_level"):
        val = getattr(args, key, None)
        if val not in (None, False):
            setattr(cfg, key, val)
    return cfg


def _dump(obj, out: str | None) -> None:
    if out:
        pl.write_json(out, obj)
    else:
        json.dump(obj, sys.stdout, ensure_ascii=False, indent=2)
        sys.stdout.write("\n")


def _require(cfg: pl.RunConfig, *keys: str) -> None:
    missing = [k for k in keys if getattr(cfg, k) is None]
    if missing:
        raise pl.ConfigError(f"missing required setting(s): {', '.join('--' + k for k in missing)}")


# ---------------------------------------------------------------------------
# subcommands


def cmd_ingest(args, cfg):
    _require(cfg, "corpus")
    videos, comments = parse_corpus(cfg.corpus)
    summary = pl.ingest_summary(videos, comments)
    if args.normalized:
        write_corpus(args.normalized, videos, comments)
    _dump(summary, args.out)


def cmd_filter(args, cfg):
    _require(cfg, "corpus")
    videos, comments = parse_corpus(cfg.corpus)
    videos, comments, report = pl.run_filter(videos, comments, cfg.filter_lexicons())
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_corpus(out / "filtered.jsonl", videos, comments)
    pl.write_json(out / "filter_report.json", report)


def cmd_score(args, cfg):
    _require(cfg, "corpus")
    videos, comments = parse_corpus(cfg.corpus)
    scored = pl.score_corpus(videos, comments, cfg.providers(), cfg.metric_params(), cfg.weight_set(),
                             cfg.parallelism)
    pl.write_jsonl(args.out, pl.score_rows(scored))


def cmd_fit_weights(args, cfg):
    videos, comments = parse_corpus(args.labels)
    ws = pl.fit_from_corpus(videos, comments, cfg.providers(), cfg.metric_params(), cfg.seed,
                            cfg.fit_top_level, cfg.weight_set())
    ws.save(args.out)
    if args.log:
        pl.write_json(args.log, ws.fit_log or {})


def cmd_train_reward(args, cfg):
    try:
        seqs = [RankedSequence.from_dict(r) for r in pl.read_jsonl(args.sequences)]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed sequence row: {exc}") from exc
    res = train_reward_scorer(seqs, RewardTrainConfig(seed=cfg.seed, max_iters=args.max_iters))
    res.scorer.save(args.out)
    logger.info("trained on %d sequences: loss %.6g after %d iterations, pairwise accuracy %.4f",
                len(seqs), res.losses[-1], res.iterations, pairwise_accuracy(res.scorer, seqs))


def cmd_tot_refine(args, cfg):
    _require(cfg, "corpus")
    videos, _ = parse_corpus(cfg.corpus)
    video = next((v for v in videos if v.video_id == args.video), None)
    if video is None:
        raise ValueError(f"video {args.video!r} not in corpus")
    providers = cfg.providers()
    tcfg = TotOptimizerConfig(args.learning_rate or cfg.tot_learning_rate, args.max_iters or cfg.tot_max_iters,
                              args.direction or cfg.tot_direction)
    res = run_tot(video, args.comment, providers.kb, providers.generator, tcfg, providers.embed)
    out = {"tree": res["tree"], "refined_comment": res["refined_comment"]}
    if args.verbose_trace:
        out.update({k: v for k, v in res.items() if k not in out})
    _dump(out, args.out)


def cmd_evaluate(args, cfg):
    metrics = [m.strip().lower() for m in args.metrics.split(",") if m.strip()]
    rows = pl.read_jsonl(args.tasks)
    _dump(evaluate(rows, metrics), args.out)


def cmd_explain_losses(args, cfg):
    params = FusionParams.load(args.fusion_params)
    _dump(explain_losses(args.ce, args.pred_score, args.true_score, args.reward,
                         args.logp_rl, args.logp_sft, params), args.out)


def cmd_report(args, cfg):
    _require(cfg, "corpus")
    videos, comments = parse_corpus(cfg.corpus)
    scored = None
    if args.score:
        scored = pl.score_corpus(videos, comments, cfg.providers(), cfg.metric_params(), cfg.weight_set(),
                                 cfg.parallelism)
    pl.write_report(args.out_dir, videos, comments, scored)


def cmd_pipeline(args, cfg):
    _require(cfg, "corpus")
    pl.run_pipeline(cfg, args.out_dir)


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hotscore", description="Hot-comment scoring toolkit.")
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--seed", type=int, default=None, help="random seed (default 42)")
    p.add_argument("--quiet", action="store_true", help="only log errors")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--dry-run", action="store_true", help="print the resolved config and exit")
        sp.set_defaults(func=fn)
        return sp

    def providers_flags(sp):
        sp.add_argument("--rhetoric", help="rhetorical-marker lexicon file")
        sp.add_argument("--trending", help="trending-term lexicon file")
        sp.add_argument("--endpoint-url", dest="endpoint_url", help="remote provider endpoint")
        sp.add_argument("--parallelism", type=int)

    sp = add("ingest", cmd_ingest, "parse and validate a corpus")
    sp.add_argument("--corpus")
    sp.add_argument("--out", help="summary JSON (stdout if omitted)")
    sp.add_argument("--normalized", help="write the parsed corpus back as JSONL")

    sp = add("filter", cmd_filter, "apply comment and video filtering rules")
    sp.add_argument("--corpus")
    sp.add_argument("--lexicons", help="directory of profanity/political/negative/promotional .txt lists")
    sp.add_argument("--out-dir", required=True)

    sp = add("score", cmd_score, "score every comment")
    sp.add_argument("--corpus")
    sp.add_argument("--weights")
    sp.add_argument("--params")
    sp.add_argument("--out", required=True)
    providers_flags(sp)

    sp = add("fit-weights", cmd_fit_weights, "fit metric weights against human labels")
    sp.add_argument("--labels", required=True, help="corpus JSONL whose comments carry human_labels")
    sp.add_argument("--weights", help="starting weights (defaults otherwise)")
    sp.add_argument("--params")
    sp.add_argument("--fit-top-level", dest="fit_top_level", action="store_true",
                    help="also fit w_I/w_R/w_C/w_U against the 'hot' label")
    sp.add_argument("--out", required=True)
    sp.add_argument("--log", help="write the fit log JSON here")
    providers_flags(sp)

    sp = add("train-reward", cmd_train_reward, "train the linear reward scorer")
    sp.add_argument("--sequences", required=True)
    sp.add_argument("--max-iters", type=int, default=10_000)
    sp.add_argument("--out", required=True)

    sp = add("tot-refine", cmd_tot_refine, "Tree-of-Thought refinement of one comment")
    sp.add_argument("--corpus")
    sp.add_argument("--video", required=True)
    sp.add_argument("--comment", required=True)
    sp.add_argument("--kb")
    sp.add_argument("--direction", choices=("descent", "ascent"))
    sp.add_argument("--learning-rate", type=float)
    sp.add_argument("--max-iters", type=int)
    sp.add_argument("--verbose-trace", action="store_true", help="include utilities and optimizer trace")
    sp.add_argument("--out")
    providers_flags(sp)

    sp = add("evaluate", cmd_evaluate, "ranking and n-gram metrics over task rows")
    sp.add_argument("--tasks", required=True)
    sp.add_argument("--metrics", default=",".join(METRICS))
    sp.add_argument("--out")

    sp = add("explain-losses", cmd_explain_losses, "trace the SFT and RL loss composition")
    sp.add_argument("--ce", type=float, default=1.0)
    sp.add_argument("--pred-score", type=float, default=0.5)
    sp.add_argument("--true-score", type=float, default=0.5)
    sp.add_argument("--reward", type=float, default=0.0)
    sp.add_argument("--logp-rl", type=float, default=0.0)
    sp.add_argument("--logp-sft", type=float, default=0.0)
    sp.add_argument("--fusion-params", help="JSON with alpha/beta/w1_S/w2_S/w1_RL/w2_RL")
    sp.add_argument("--out")

    sp = add("report", cmd_report, "corpus statistics table, JSON summary and figures")
    sp.add_argument("--corpus")
    sp.add_argument("--score", action="store_true", help="also score comments and summarize components")
    sp.add_argument("--weights")
    sp.add_argument("--params")
    sp.add_argument("--out-dir", required=True)
    providers_flags(sp)

    sp = add("pipeline", cmd_pipeline, "ingest -> filter -> score -> fit -> train -> refine -> evaluate -> report")
    sp.add_argument("--corpus")
    sp.add_argument("--lexicons")
    sp.add_argument("--kb")
    sp.add_argument("--weights")
    sp.add_argument("--params")
    sp.add_argument("--fit-top-level", dest="fit_top_level", action="store_true")
    sp.add_argument("--out-dir", required=True)
    providers_flags(sp)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _resolve(args)
        if args.dry_run:
            resolved = {"command": args.command, "config": cfg.to_dict(),
                        "args": {k: v for k, v in vars(args).items() if k != "func"}}
            json.dump(resolved, sys.stdout, ensure_ascii=False, indent=2, default=str)
            sys.stdout.write("\n")
            return EXIT_OK
        cfg.check_paths()
        args.func(args, cfg)
    except pl.ConfigError as exc:
        logger.error("%s", exc)
        return EXIT_CONFIG
    except ProviderError as exc:
        logger.error("provider failure: %s", exc)
        return EXIT_PROVIDER
    except (CorpusError, ToTError, ValueError, OSError) as exc:
        logger.error("%s", exc)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
