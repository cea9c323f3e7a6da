"""Batch orchestration: plan -> compress -> prompt -> decode -> binary masks on disk."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Mapping, Optional, Tuple

import numpy as np

from . import mask_io
from .core import Expression, Frame, SamplingPlan, Strategy, binarize, validate_plan
from .errors import ValidationError
from .kfc import compress_plan
from .mask_io import Manifest, VideoEntry
from .sampling import make_plan
from .segmenter import SegmenterBackend, decode_video, generate_prompts, make_backend

BACKEND_ENV = "RVOS_TTA_BACKEND"


@dataclass
class PipelineConfig:
    strategy: Strategy = Strategy.UNIFORM
    n_clips: int = 10
    clip_len: int = 10
    backend: str = ""
    seed: int = 0
    jobs: int = 1
    model_label: str = ""

    def __post_init__(self):
        self.strategy = Strategy.parse(self.strategy)
        if not self.backend:
            self.backend = os.environ.get(BACKEND_ENV, "stub")
        if self.jobs < 1:
            raise ValidationError(f"--jobs must be >= 1, got {self.jobs}")

    @property
    def T(self) -> int:
        return self.n_clips * self.clip_len

    @property
    def source_id(self) -> str:
        return f"{self.model_label}/{self.strategy.value}" if self.model_label else self.strategy.value

    def new_backend(self) -> SegmenterBackend:
        return make_backend(self.backend, self.seed)


def plan_sequence(entry: VideoEntry, exp: Expression, cfg: PipelineConfig,
                  scores: Optional[Mapping] = None) -> SamplingPlan:
    meta = entry.meta
    sc = None
    if cfg.strategy == Strategy.QFRAME:
        sc = mask_io.scores_for(scores or {}, meta.video_id, exp.exp_id)
        if sc is None:
            raise ValidationError(f"no relevance scores for {meta.video_id}/{exp.exp_id}")
    plan = make_plan(cfg.strategy, meta, cfg.n_clips, cfg.clip_len, sc)
    problems = validate_plan(plan, meta)
    if problems:
        raise ValidationError(f"{meta.video_id}/{exp.exp_id}: invalid plan: " + "; ".join(problems))
    return plan


def segment_sequence(backend: SegmenterBackend, manifest: Manifest, entry: VideoEntry,
                     exp: Expression, plan: SamplingPlan, frames: List[Frame]) -> List[np.ndarray]:
    meta = entry.meta
    problems = validate_plan(plan, meta)
    if problems:
        raise ValidationError(f"{meta.video_id}/{exp.exp_id}: invalid plan: " + "; ".join(problems))
    uris = [str(manifest.resolve(u)) for u in meta.frame_uris]
    compressed = compress_plan(plan, frames)
    prompts = generate_prompts(backend, compressed, exp.text, video_id=meta.video_id,
                               exp_id=exp.exp_id, frame_uris=uris)
    soft = decode_video(backend, plan, meta, prompts, frames, expression=exp.text,
                        exp_id=exp.exp_id, frame_uris=uris)
    return [binarize(m) for m in soft]


WorkItem = Tuple[VideoEntry, Expression]


def _run_items(items: List[WorkItem], fn: Callable[[VideoEntry, Expression], None], jobs: int):
    if jobs == 1:
        for entry, exp in items:
            fn(entry, exp)
        return
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        for fut in [pool.submit(fn, entry, exp) for entry, exp in items]:
            fut.result()


class FrameCache:
    def __init__(self, manifest: Manifest):
        self.manifest = manifest
        self._frames: Dict[str, List[Frame]] = {}

    def __call__(self, video_id: str) -> List[Frame]:
        if video_id not in self._frames:
            self._frames[video_id] = self.manifest.load_frames(video_id)
        return self._frames[video_id]


def segment_manifest(manifest: Manifest, plans: Mapping[Tuple[str, str], SamplingPlan],
                     cfg: PipelineConfig, out_dir, frames: Optional[FrameCache] = None) -> Path:
    """Decode every (video, expression) with its plan into ``out_dir/<video>/<exp>/``."""
    out_dir = Path(out_dir)
    frames = frames or FrameCache(manifest)
    items = [(v, e) for v in manifest.videos for e in v.expressions]
    for v in manifest.videos:  # load up front so worker threads only read
        frames(v.meta.video_id)

    def work(entry, exp):
        key = (entry.meta.video_id, exp.exp_id)
        if key not in plans:
            raise ValidationError(f"no plan for {key[0]}/{key[1]}")
        with cfg.new_backend() as backend:
            masks = segment_sequence(backend, manifest, entry, exp, plans[key], frames(key[0]))
        mask_io.write_sequence(out_dir / key[0] / key[1], masks)

    _run_items(items, work, cfg.jobs)
    return out_dir


def run_pipeline(manifest: Manifest, cfg: PipelineConfig, out_root,
                 scores: Optional[Mapping] = None, frames: Optional[FrameCache] = None) -> Path:
    """Plan and segment the whole manifest; returns ``out_root/<source_id>``."""
    plans = {(v.meta.video_id, e.exp_id): plan_sequence(v, e, cfg, scores)
             for v in manifest.videos for e in v.expressions}
    return segment_manifest(manifest, plans, cfg, Path(out_root) / cfg.source_id, frames)
