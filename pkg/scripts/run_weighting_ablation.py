"""Stub-backend rerun of the weighting ablation.

Runs every strategy for three model labels over the synthetic fixture, scores each
single source, then fuses with every column of the shipped weight table. The stub
numbers only show the plumbing works; they are not comparable with the published
ones, which are printed alongside for reference.
"""
import argparse
import json
import tempfile
import time
from pathlib import Path

from rvos_tta import cli, mask_io
from rvos_tta.ensemble import ensemble_run
from rvos_tta.fixtures import make_fixture
from rvos_tta.metrics import evaluate

MODELS = (("14B", 14), ("26B", 26), ("26B-noris", 27))


def run(work: Path, jobs: int):
    manifest = make_fixture(work / "fixture")
    scores = work / "fixture" / "scores.json"
    preds = work / "pred"
    for label, seed in MODELS:
        code = cli.main(["pipeline", "--manifest", str(manifest), "--strategy", "all",
                         "--scores", str(scores), "--backend", "stub", "--seed", str(seed),
                         "--model-label", label, "--jobs", str(jobs), "--out", str(preds)])
        if code:
            raise SystemExit(code)

    gt = mask_io.read_prediction_source(work / "fixture" / "gt", "gt")
    sources = {}
    for label, _ in MODELS:
        for d in sorted((preds / label).iterdir()):
            sid = f"{label}/{d.name}"
            sources[sid] = mask_io.read_prediction_source(d, sid)

    print(f"{'source':<28} {'J&F':>7} {'J':>7} {'F':>7}")
    for sid, src in sources.items():
        r = evaluate(src, gt)
        print(f"{sid:<28} {100 * r.JF:7.2f} {100 * r.J:7.2f} {100 * r.F:7.2f}")

    doc = json.loads(mask_io.TABLE2_WEIGHTS.read_text())
    print(f"\n{'column':<18} {'J&F':>7} {'J':>7} {'F':>7}   published J&F")
    for column, spec in doc["columns"].items():
        config = mask_io.load_weight_config(mask_io.TABLE2_WEIGHTS, column)
        r = evaluate(ensemble_run(sources, config), gt)
        print(f"{column:<18} {100 * r.JF:7.2f} {100 * r.J:7.2f} {100 * r.F:7.2f}   "
              f"{spec['reported']['JF']:.2f}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--work", help="working directory (default: a temporary one)")
    ap.add_argument("--jobs", type=int, default=4)
    args = ap.parse_args()
    start = time.perf_counter()
    if args.work:
        run(Path(args.work), args.jobs)
    else:
        with tempfile.TemporaryDirectory() as tmp:
            run(Path(tmp), args.jobs)
    print(f"\ndone in {time.perf_counter() - start:.1f}s")


if __name__ == "__main__":
    main()
