"""Pluggable segmenter boundary.

A backend turns the 2N compressed images of a video into one opaque prompt per clip, and
decodes per-frame soft masks from a clip's frames and its prompt. :class:`StubBackend` is a
deterministic synthetic model used by tests and demos; :class:`SubprocessBackend` talks to
an external model server over newline-delimited JSON on stdin/stdout.
"""
from __future__ import annotations

import base64
import binascii
import functools
import hashlib
import json
import shlex
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import List, Mapping, Optional, Sequence

import numpy as np

from . import mask_io
from .core import Frame, SamplingPlan, VideoMeta, as_soft_mask
from .errors import BackendError, ProtocolError, ValidationError
from .kfc import CompressedClip


@dataclass(frozen=True)
class SegPrompt:
    clip_index: int
    payload: bytes


@dataclass(frozen=True)
class Context:
    """Identifies the (video, expression) a request belongs to."""

    video_id: str
    exp_id: str
    expression: str
    frame_uris: Sequence[str] = ()


class SegmenterBackend:
    identity = "abstract"
    supports_tail_propagation = False

    def prompts(self, ctx: Context, compressed: Sequence[CompressedClip]) -> List[bytes]:
        return [self.prompt(ctx, compressed, i) for i in range(len(compressed))]

    def prompt(self, ctx: Context, compressed: Sequence[CompressedClip], clip_index: int) -> bytes:
        raise NotImplementedError

    def decode(self, ctx: Context, frames: Sequence[Frame], prompt: SegPrompt,
               tail: bool = False) -> List[np.ndarray]:
        raise NotImplementedError

    def close(self) -> None:
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


# -- stub ------------------------------------------------------------------------------------------

def _rng(*parts) -> np.random.Generator:
    h = hashlib.sha256("\x00".join(str(p) for p in parts).encode()).digest()
    return np.random.default_rng(int.from_bytes(h[:8], "little"))


@functools.lru_cache(maxsize=4096)
def _track_params(video_id: str, expression: str):
    r = _rng("track", video_id, expression)
    phase_x, phase_y = r.uniform(0, 2 * np.pi, 2)
    return phase_x, phase_y, r.uniform(20, 60), r.uniform(0.15, 0.25)


def object_track(video_id: str, expression: str, shape, t: int):
    """Centre (y, x) and radius of the synthetic object in frame t."""
    H, W = shape
    phase_x, phase_y, period, rel_radius = _track_params(video_id, expression)
    cx = W * (0.5 + 0.25 * np.sin(2 * np.pi * t / period + phase_x))
    cy = H * (0.5 + 0.2 * np.sin(2 * np.pi * t / (1.7 * period) + phase_y))
    return cy, cx, rel_radius * min(H, W)


def soft_disk(shape, cy: float, cx: float, radius: float) -> np.ndarray:
    """Disk with a one-pixel linear ramp at its rim."""
    yy, xx = np.mgrid[0:shape[0], 0:shape[1]]
    d = np.hypot(yy + 0.5 - cy, xx + 0.5 - cx)
    return np.clip(radius - d + 0.5, 0.0, 1.0).astype(np.float32)


def stub_ground_truth(meta: VideoMeta, expression: str) -> List[np.ndarray]:
    """Binary masks of the un-jittered synthetic track, used as ground truth in demos."""
    out = []
    for t in range(meta.T_ori):
        cy, cx, radius = object_track(meta.video_id, expression, meta.shape, t)
        out.append((soft_disk(meta.shape, cy, cx, radius) >= 0.5).astype(np.uint8))
    return out


class StubBackend(SegmenterBackend):
    """Deterministic stand-in for the language model + mask decoder.

    The prompt payload is a hash of (expression, clip index). Decoding draws the synthetic
    object's track for the video and perturbs it by an offset seeded from
    (video_id, payload, seed), so different clips (and seeds) disagree slightly.
    """

    supports_tail_propagation = True

    def __init__(self, seed: int = 0, jitter: float = 0.08):
        self.seed = seed
        self.jitter = jitter
        self.identity = f"stub:{seed}"

    def prompt(self, ctx, compressed, clip_index):
        return hashlib.sha256(f"{ctx.expression}\x00{clip_index}".encode()).digest()

    def decode(self, ctx, frames, prompt, tail=False):
        r = _rng("clip", ctx.video_id, prompt.payload.hex(), self.seed)
        oy, ox = r.uniform(-self.jitter, self.jitter, 2)
        scale = r.uniform(0.85, 1.15)
        out = []
        for fr in frames:
            H, W = fr.shape
            dy, dx = oy * min(H, W), ox * min(H, W)
            cy, cx, radius = object_track(ctx.video_id, ctx.expression, (H, W), fr.index)
            out.append(soft_disk((H, W), cy + dy, cx + dx, radius * scale))
        return out


# -- external process -----------------------------------------------------------------------------

class SubprocessBackend(SegmenterBackend):
    """Newline-delimited JSON over a child process's stdin/stdout.

    Requests::

        {"kind": "prompt", "video_id", "exp_id", "expression", "clip_index", "image_paths"}
        {"kind": "decode", "video_id", "exp_id", "expression", "clip_index", "image_paths",
         "prompt_b64", "frame_indices", "tail"}

    Responses are ``{"prompt_b64": ...}`` or ``{"mask_paths": [...]}`` (8-bit grayscale
    PNGs, value/255 is the foreground probability), or ``{"error": message}``. A malformed
    response kills the child and raises :class:`ProtocolError`.
    """

    def __init__(self, command, supports_tail_propagation: bool = False):
        self.argv = shlex.split(command) if isinstance(command, str) else list(command)
        self.identity = "cmd:" + " ".join(self.argv)
        self.supports_tail_propagation = supports_tail_propagation
        self._proc: Optional[subprocess.Popen] = None
        self._tmp = tempfile.TemporaryDirectory(prefix="rvos_tta_")
        self._stderr_path = Path(self._tmp.name) / "stderr.log"

    def _start(self):
        if self._proc is None:
            try:
                # stderr goes to a file so a chatty child cannot fill a pipe and stall
                with open(self._stderr_path, "a") as err:
                    self._proc = subprocess.Popen(
                        self.argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                        stderr=err, text=True, bufsize=1)
            except OSError as e:
                raise BackendError(f"cannot start backend {self.argv!r}: {e}") from None
        return self._proc

    def _stderr_tail(self, n: int = 2000) -> str:
        try:
            return self._stderr_path.read_text()[-n:].strip()
        except OSError:
            return ""

    def _abort(self, msg: str):
        if self._proc is not None:
            self._proc.kill()
            self._proc.wait()
            self._proc = None
        raise ProtocolError(msg)

    def request(self, record: Mapping) -> dict:
        proc = self._start()
        try:
            proc.stdin.write(json.dumps(record) + "\n")
            proc.stdin.flush()
        except BrokenPipeError:
            proc.wait()
            self._proc = None
            raise BackendError(f"backend exited early: {self._stderr_tail()}") from None
        line = proc.stdout.readline()
        if not line:
            proc.wait()
            self._proc = None
            raise BackendError(f"backend closed its output (exit {proc.returncode}): "
                               f"{self._stderr_tail()}")
        try:
            resp = json.loads(line)
        except json.JSONDecodeError:
            self._abort(f"malformed response line: {line[:200]!r}")
        if not isinstance(resp, dict):
            self._abort(f"response is not an object: {line[:200]!r}")
        if "error" in resp:
            raise BackendError(f"backend error for {record.get('kind')} "
                               f"{record.get('video_id')}/{record.get('exp_id')} "
                               f"clip {record.get('clip_index')}: {resp['error']}")
        return resp

    def _base(self, ctx: Context, kind: str, clip_index: int) -> dict:
        return {"kind": kind, "video_id": ctx.video_id, "exp_id": ctx.exp_id,
                "expression": ctx.expression, "clip_index": clip_index}

    def prompts(self, ctx, compressed):
        d = Path(self._tmp.name) / "prompt" / ctx.video_id / ctx.exp_id
        paths = []
        for i, cc in enumerate(compressed):
            for tag, img in (("key", cc.key_frame.pixels), ("grid", cc.compressed.pixels)):
                p = d / f"clip{i:03d}_{tag}.png"
                mask_io.write_frame(p, img)
                paths.append(str(p))
        out = []
        for i in range(len(compressed)):
            resp = self.request({**self._base(ctx, "prompt", i), "image_paths": paths})
            b64 = resp.get("prompt_b64")
            if not isinstance(b64, str):
                self._abort(f"prompt response for clip {i} lacks 'prompt_b64'")
            try:
                out.append(base64.b64decode(b64, validate=True))
            except binascii.Error:
                self._abort(f"prompt response for clip {i} is not base64")
        return out

    def decode(self, ctx, frames, prompt, tail=False):
        if ctx.frame_uris:
            paths = [str(ctx.frame_uris[f.index]) for f in frames]
        else:
            d = Path(self._tmp.name) / "frames" / ctx.video_id
            paths = []
            for f in frames:
                p = d / mask_io.frame_name(f.index)
                if not p.exists():
                    mask_io.write_frame(p, f.pixels)
                paths.append(str(p))
        resp = self.request({
            **self._base(ctx, "decode", prompt.clip_index),
            "image_paths": paths,
            "prompt_b64": base64.b64encode(prompt.payload).decode(),
            "frame_indices": [f.index for f in frames],
            "tail": tail,
        })
        mpaths = resp.get("mask_paths")
        if not isinstance(mpaths, list) or len(mpaths) != len(frames):
            self._abort(f"decode response for clip {prompt.clip_index} needs "
                        f"{len(frames)} mask_paths")
        return [mask_io.read_soft_mask(p) for p in mpaths]

    def close(self):
        if self._proc is not None:
            try:
                self._proc.stdin.close()
                self._proc.wait(timeout=10)
            except (OSError, subprocess.TimeoutExpired):
                self._proc.kill()
            self._proc = None
        self._tmp.cleanup()


def make_backend(spec: str, seed: int = 0) -> SegmenterBackend:
    """``"stub"`` or a shell-style command line for an external worker."""
    if spec.strip() == "stub":
        return StubBackend(seed)
    return SubprocessBackend(spec)


# -- pipeline steps ------------------------------------------------------------------------------

def generate_prompts(backend: SegmenterBackend, compressed: Sequence[CompressedClip],
                     expression: str, *, video_id: str = "", exp_id: str = "",
                     frame_uris: Sequence[str] = ()) -> List[SegPrompt]:
    if not expression or not expression.strip():
        raise ValidationError(f"{video_id}/{exp_id}: empty referring expression")
    if not compressed:
        raise ValidationError(f"{video_id}/{exp_id}: no clips to prompt")
    ctx = Context(video_id, exp_id, expression, tuple(frame_uris))
    try:
        payloads = backend.prompts(ctx, compressed)
    except (BackendError, ValidationError):
        raise
    except Exception as e:
        raise BackendError(f"{backend.identity}: prompt generation failed for "
                           f"{video_id}/{exp_id}: {e}") from e
    if len(payloads) != len(compressed):
        raise BackendError(f"{backend.identity}: {len(payloads)} prompts for "
                           f"{len(compressed)} clips")
    return [SegPrompt(i, bytes(p)) for i, p in enumerate(payloads)]


def decode_clip(backend: SegmenterBackend, frames: Sequence[Frame], prompt: SegPrompt, *,
                video_id: str = "", exp_id: str = "", expression: str = "",
                frame_uris: Sequence[str] = (), tail: bool = False) -> List[np.ndarray]:
    if not frames:
        return []
    shape = frames[0].shape
    for f in frames:
        if f.shape != shape:
            raise ValidationError(f"frame {f.index} is {f.shape}, expected {shape}")
    ctx = Context(video_id, exp_id, expression, tuple(frame_uris))
    try:
        masks = backend.decode(ctx, frames, prompt, tail=tail)
    except (BackendError, ValidationError):
        raise
    except Exception as e:
        raise BackendError(f"{backend.identity}: decode failed for {video_id}/{exp_id} clip "
                           f"{prompt.clip_index} frames {frames[0].index}..{frames[-1].index}: "
                           f"{e}") from e
    if len(masks) != len(frames):
        raise BackendError(f"{backend.identity}: {len(masks)} masks for {len(frames)} frames")
    out = []
    for f, m in zip(frames, masks):
        try:
            out.append(as_soft_mask(m, shape))
        except ValidationError as e:
            raise ValidationError(f"clip {prompt.clip_index} frame {f.index}: {e}") from None
    return out


def decode_video(backend: SegmenterBackend, plan: SamplingPlan, meta: VideoMeta,
                 prompts: Sequence[SegPrompt], frames: "Sequence[Frame] | Mapping[int, Frame]",
                 *, expression: str, exp_id: str = "",
                 frame_uris: Sequence[str] = ()) -> List[np.ndarray]:
    """Soft mask for every original frame.

    Clips are decoded in order. A frame mapped to two clip tokens gets the pixelwise
    mean of both decodes. Tail frames (index >= T) of a wrap-around plan are sent as a
    separate request flagged ``tail`` with the last clip's prompt.
    """
    by_clip = {p.clip_index: p for p in prompts}
    acc: List[List[np.ndarray]] = [[] for _ in range(meta.T_ori)]
    for ci in range(plan.N):
        idx = plan.frames_for_clip(ci)
        if not idx:
            continue
        if ci not in by_clip:
            raise ValidationError(f"{meta.video_id}/{exp_id}: no prompt for clip {ci}")
        groups = [(idx, False)]
        if plan.tail_propagation:
            groups = [([i for i in idx if i < plan.T], False), ([i for i in idx if i >= plan.T], True)]
        for group, tail in groups:
            if not group:
                continue
            masks = decode_clip(backend, [frames[i] for i in group], by_clip[ci],
                                video_id=meta.video_id, exp_id=exp_id, expression=expression,
                                frame_uris=frame_uris, tail=tail)
            for i, m in zip(group, masks):
                acc[i].append(m)
    out = []
    for i, ms in enumerate(acc):
        if not ms:
            raise ValidationError(f"{meta.video_id}/{exp_id}: frame {i} was not decoded")
        out.append(ms[0] if len(ms) == 1 else (ms[0] + ms[1]) / np.float32(2))
    return out
