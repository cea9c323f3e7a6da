"""Command line: plan | compress | segment | pipeline | ensemble | eval.

Exit codes: 0 ok, 2 validation/usage error, 3 backend failure, 4 file I/O failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from . import mask_io
from .core import Strategy
from .ensemble import ensemble_run
from .errors import BackendError, MaskIOError, PipelineError, ValidationError
from .kfc import compress_plan
from .metrics import evaluate
from .pipeline import BACKEND_ENV, FrameCache, PipelineConfig, plan_sequence, run_pipeline, segment_manifest

log = logging.getLogger("rvos_tta")

EXIT_OK, EXIT_VALIDATION, EXIT_BACKEND, EXIT_IO = 0, 2, 3, 4


def _strategies(text: str) -> List[Strategy]:
    if text == "all":
        return list(Strategy)
    return [Strategy.parse(s) for s in text.split(",") if s]


def _config(args, strategy=Strategy.UNIFORM) -> PipelineConfig:
    return PipelineConfig(strategy=strategy, n_clips=args.n_clips, clip_len=args.clip_len,
                          backend=getattr(args, "backend", "") or "", seed=args.seed,
                          jobs=args.jobs, model_label=getattr(args, "model_label", "") or "")


def _scores(args, parser, strategies):
    if Strategy.QFRAME in strategies and not args.scores:
        parser.error("--strategy qframe requires --scores")
    return mask_io.load_scores(args.scores) if args.scores else None


def cmd_plan(args, parser) -> int:
    manifest = mask_io.load_manifest(args.manifest)
    strategy = Strategy.parse(args.strategy)
    scores = _scores(args, parser, [strategy])
    cfg = _config(args, strategy)
    for v in manifest.videos:
        for e in v.expressions:
            plan = plan_sequence(v, e, cfg, scores)
            mask_io.save_plan(mask_io.plan_path(args.out, v.meta.video_id, e.exp_id), plan,
                              v.meta.video_id, e.exp_id)
    print(f"wrote plans for {sum(len(v.expressions) for v in manifest.videos)} sequences "
          f"(strategy={strategy.value}, T={cfg.T}) to {args.out}")
    return EXIT_OK


def _load_plans(manifest, plans_dir):
    return {(v.meta.video_id, e.exp_id):
            mask_io.load_plan(mask_io.plan_path(plans_dir, v.meta.video_id, e.exp_id))
            for v in manifest.videos for e in v.expressions}


def cmd_compress(args, parser) -> int:
    manifest = mask_io.load_manifest(args.manifest)
    plans = _load_plans(manifest, args.plans)
    frames = FrameCache(manifest)
    for (vid, eid), plan in plans.items():
        for i, cc in enumerate(compress_plan(plan, frames(vid))):
            d = Path(args.out) / vid / eid
            mask_io.write_frame(d / f"clip{i:03d}_key.png", cc.key_frame.pixels)
            mask_io.write_frame(d / f"clip{i:03d}_grid.png", cc.compressed.pixels)
    print(f"wrote {2 * sum(p.N for p in plans.values())} segmenter images to {args.out}")
    return EXIT_OK


def cmd_segment(args, parser) -> int:
    manifest = mask_io.load_manifest(args.manifest)
    plans = _load_plans(manifest, args.plans)
    out = segment_manifest(manifest, plans, _config(args), args.out)
    print(f"wrote predictions to {out}")
    return EXIT_OK


def cmd_pipeline(args, parser) -> int:
    manifest = mask_io.load_manifest(args.manifest)
    strategies = _strategies(args.strategy)
    scores = _scores(args, parser, strategies)
    frames = FrameCache(manifest)
    for s in strategies:
        out = run_pipeline(manifest, _config(args, s), args.out, scores, frames)
        print(f"wrote {out}")
    return EXIT_OK


def _parse_pred(item: str):
    if "=" not in item:
        return Path(item).name, Path(item)
    sid, path = item.split("=", 1)
    return sid, Path(path)


def cmd_ensemble(args, parser) -> int:
    config = mask_io.load_weight_config(args.weights, args.column)
    sources = {}
    if args.pred_root:
        for sid in config.active:
            sources[sid] = mask_io.read_prediction_source(Path(args.pred_root) / sid, sid)
    for item in args.pred or []:
        sid, path = _parse_pred(item)
        sources[sid] = mask_io.read_prediction_source(path, sid)
    if not sources:
        parser.error("give --pred-root or at least one --pred")
    fused = ensemble_run(sources, config)
    out = Path(args.out)
    for vid, exps in fused.masks.items():
        for eid, seq in exps.items():
            mask_io.write_sequence(out / vid / eid, seq)
    print(f"fused {len(config.active)} sources ({config.name or 'config'}) into {out}")
    return EXIT_OK


def cmd_eval(args, parser) -> int:
    pred = mask_io.read_prediction_source(args.pred, "pred")
    gt = mask_io.read_prediction_source(args.gt, "gt")
    result = evaluate(pred, gt, args.tol)
    text = result.to_text()
    if args.report:
        report = Path(args.report)
        report.parent.mkdir(parents=True, exist_ok=True)
        with open(report, "w") as fh:
            json.dump(result.to_dict(), fh, indent=1)
            fh.write("\n")
        report.with_suffix(".txt").write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rvos-tta", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, backend=False):
        p.add_argument("--n-clips", type=int, default=10, help="N, number of clips (default 10)")
        p.add_argument("--clip-len", type=int, default=10, help="c = g^2+1 frames per clip (default 10)")
        p.add_argument("--seed", type=int, default=0, help="stub backend seed")
        p.add_argument("--jobs", type=int, default=1)
        if backend:
            p.add_argument("--backend", default="",
                           help=f"'stub' or a worker command line (default: ${BACKEND_ENV} or stub)")

    p = sub.add_parser("plan", help="write one sampling plan per (video, expression)")
    p.add_argument("--manifest", required=True)
    p.add_argument("--strategy", required=True)
    p.add_argument("--scores", help="relevance scores (required for qframe)")
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(func=cmd_plan, subparser=p)

    p = sub.add_parser("compress", help="write key frames and compressed grids for each plan")
    p.add_argument("--manifest", required=True)
    p.add_argument("--plans", required=True)
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(func=cmd_compress, subparser=p)

    p = sub.add_parser("segment", help="decode masks for existing plans")
    p.add_argument("--manifest", required=True)
    p.add_argument("--plans", required=True)
    p.add_argument("--out", required=True, help="prediction source directory")
    common(p, backend=True)
    p.set_defaults(func=cmd_segment, subparser=p)

    p = sub.add_parser("pipeline", help="plan + compress + segment in one go")
    p.add_argument("--manifest", required=True)
    p.add_argument("--strategy", default="uniform", help="name, comma list, or 'all'")
    p.add_argument("--scores")
    p.add_argument("--model-label", default="", help="prefix of the source id, e.g. 26B")
    p.add_argument("--out", required=True, help="predictions root")
    common(p, backend=True)
    p.set_defaults(func=cmd_pipeline, subparser=p)

    p = sub.add_parser("ensemble", help="selective averaging over prediction sources")
    p.add_argument("--weights", required=True)
    p.add_argument("--column", help="column of a multi-column weight document")
    p.add_argument("--pred-root", help="root holding <source_id>/ directories")
    p.add_argument("--pred", action="append", help="SOURCE_ID=DIR (repeatable)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ensemble, subparser=p)

    p = sub.add_parser("eval", help="J, F and J&F against ground truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--report", help="JSON report path (a .txt table is written next to it)")
    p.add_argument("--tol", type=int, default=None, help="boundary tolerance in pixels")
    p.set_defaults(func=cmd_eval, subparser=p)
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args, args.subparser)
    except ValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except BackendError as e:
        print(f"backend error: {e}", file=sys.stderr)
        return EXIT_BACKEND
    except (MaskIOError, OSError) as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return EXIT_IO
    except PipelineError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
