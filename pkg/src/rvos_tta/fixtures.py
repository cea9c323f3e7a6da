"""Synthetic demo dataset: frames, manifest, Q-frame scores and stub ground truth."""
from __future__ import annotations

from pathlib import Path
from typing import Sequence, Tuple

import numpy as np

from . import mask_io
from .core import Expression, PredictionSource, VideoMeta
from .segmenter import object_track, soft_disk, stub_ground_truth

DEFAULT_LENGTHS = (7, 100, 150)
DEFAULT_SHAPE = (48, 64)


def render_frame(meta: VideoMeta, expression: str, t: int) -> np.ndarray:
    H, W = meta.shape
    yy, xx = np.mgrid[0:H, 0:W]
    bg = np.stack([40 + 120 * xx / W, 60 + 100 * yy / H, np.full((H, W), 90.0 + t % 40)], -1)
    cy, cx, r = object_track(meta.video_id, expression, meta.shape, t)
    alpha = soft_disk(meta.shape, cy, cx, r)[..., None]
    img = bg * (1 - alpha) + np.array([230.0, 60.0, 50.0]) * alpha
    return np.floor(img + 0.5).clip(0, 255).astype(np.uint8)


def relevance_scores(meta: VideoMeta, expression: str, seed: int = 0) -> list:
    """Higher when the synthetic object is near the image centre, plus a little noise."""
    rng = np.random.default_rng(seed + meta.T_ori)
    H, W = meta.shape
    out = []
    for t in range(meta.T_ori):
        cy, cx, _ = object_track(meta.video_id, expression, meta.shape, t)
        d = np.hypot((cy - H / 2) / H, (cx - W / 2) / W)
        out.append(round(float(1.0 - d + 0.05 * rng.random()), 6))
    return out


def make_fixture(root, lengths: Sequence[int] = DEFAULT_LENGTHS,
                 shape: Tuple[int, int] = DEFAULT_SHAPE, seed: int = 0) -> Path:
    """Write ``frames/``, ``manifest.json``, ``scores.json`` and ``gt/`` under ``root``.

    Returns the manifest path.
    """
    root = Path(root)
    H, W = shape
    videos, scores = [], {}
    gt = PredictionSource("gt")
    for n, T_ori in enumerate(lengths):
        vid = f"vid{n:02d}_t{T_ori}"
        exps = [Expression("0", f"the red ball drifting across clip {n}")]
        if n == 1:
            exps.append(Expression("1", "the object that keeps moving"))
        uris = tuple(f"frames/{vid}/{mask_io.frame_name(t)}" for t in range(T_ori))
        meta = VideoMeta(vid, T_ori, W, H, uris)
        for t in range(T_ori):
            mask_io.write_frame(root / uris[t], render_frame(meta, exps[0].text, t))
        videos.append(mask_io.VideoEntry(meta, exps))
        scores[vid] = {e.exp_id: relevance_scores(meta, e.text, seed) for e in exps}
        gt.masks[vid] = {e.exp_id: stub_ground_truth(meta, e.text) for e in exps}
    manifest_path = root / "manifest.json"
    mask_io.save_manifest(manifest_path, mask_io.Manifest(videos, root))
    mask_io.save_scores(root / "scores.json", scores)
    for vid, exps in gt.masks.items():
        for eid, seq in exps.items():
            mask_io.write_sequence(root / "gt" / vid / eid, seq)
    return manifest_path
