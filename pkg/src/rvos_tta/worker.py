"""Reference backend server speaking the line-delimited protocol, wrapping StubBackend.

    python -m rvos_tta.worker --seed 0 [--out-dir DIR]

Useful as a template for real model servers and for exercising SubprocessBackend.
"""
from __future__ import annotations

import argparse
import base64
import binascii
import json
import sys
import tempfile
from pathlib import Path

from . import mask_io
from .core import Frame
from .segmenter import Context, SegPrompt, StubBackend

REQUIRED = {
    "prompt": ("video_id", "exp_id", "expression", "clip_index", "image_paths"),
    "decode": ("video_id", "exp_id", "expression", "clip_index", "image_paths",
               "prompt_b64", "frame_indices"),
}


class ProtocolViolation(Exception):
    pass


def handle(backend: StubBackend, req, out_dir: Path) -> dict:
    if not isinstance(req, dict) or req.get("kind") not in REQUIRED:
        raise ProtocolViolation("request must be an object with kind 'prompt' or 'decode'")
    missing = [k for k in REQUIRED[req["kind"]] if k not in req]
    if missing:
        raise ProtocolViolation(f"missing fields {missing}")
    ctx = Context(req["video_id"], req["exp_id"], req["expression"])
    if req["kind"] == "prompt":
        payload = backend.prompt(ctx, [], int(req["clip_index"]))
        return {"prompt_b64": base64.b64encode(payload).decode()}

    try:
        payload = base64.b64decode(req["prompt_b64"], validate=True)
    except (binascii.Error, TypeError):
        raise ProtocolViolation("prompt_b64 is not base64") from None
    if len(req["frame_indices"]) != len(req["image_paths"]):
        raise ProtocolViolation("frame_indices and image_paths differ in length")
    frames = [Frame(int(i), mask_io.read_frame(p))
              for i, p in zip(req["frame_indices"], req["image_paths"])]
    masks = backend.decode(ctx, frames, SegPrompt(int(req["clip_index"]), payload),
                           tail=bool(req.get("tail", False)))
    d = out_dir / ctx.video_id / ctx.exp_id / f"clip{int(req['clip_index']):03d}"
    paths = []
    for f, m in zip(frames, masks):
        p = d / mask_io.frame_name(f.index)
        mask_io.write_soft_mask(p, m)
        paths.append(str(p))
    return {"mask_paths": paths}


def serve(stdin, stdout, backend: StubBackend, out_dir: Path) -> int:
    for line in stdin:
        if not line.strip():
            continue
        try:
            resp = handle(backend, json.loads(line), out_dir)
        except (json.JSONDecodeError, ProtocolViolation) as e:
            stdout.write(json.dumps({"error": f"protocol: {e}"}) + "\n")
            stdout.flush()
            return 1
        except Exception as e:  # report and keep serving
            resp = {"error": f"{type(e).__name__}: {e}"}
        stdout.write(json.dumps(resp) + "\n")
        stdout.flush()
    return 0


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out-dir", type=Path, default=None)
    args = ap.parse_args(argv)
    out_dir = args.out_dir or Path(tempfile.mkdtemp(prefix="rvos_tta_worker_"))
    return serve(sys.stdin, sys.stdout, StubBackend(args.seed), out_dir)


if __name__ == "__main__":
    sys.exit(main())
