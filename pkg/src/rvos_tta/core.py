"""Shared domain types: video metadata, sampling plans, frames, masks and prediction sources.

Frame indices are 0-based everywhere. Masks are plain numpy arrays: a binary mask is an
``(H, W)`` uint8 array with values in {0, 1}, a soft mask an ``(H, W)`` float array in [0, 1].
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Sequence, Tuple

import numpy as np

from .errors import ValidationError

BinaryMask = np.ndarray
SoftMask = np.ndarray


class Strategy(str, enum.Enum):
    UNIFORM = "uniform"
    UNIFORM_PLUS = "uniform_plus"
    QFRAME = "qframe"
    WRAP_AROUND = "wrap_around"
    WRAP_AROUND_PLUS = "wrap_around_plus"

    @classmethod
    def parse(cls, name: "str | Strategy") -> "Strategy":
        if isinstance(name, Strategy):
            return name
        key = name.strip().lower().replace("-", "_").replace("+", "_plus")
        key = {"q_frame": "qframe", "wraparound": "wrap_around",
               "wraparound_plus": "wrap_around_plus"}.get(key, key)
        try:
            return cls(key)
        except ValueError:
            choices = ", ".join(s.value for s in cls)
            raise ValidationError(f"unknown strategy {name!r} (choose from {choices})") from None


def grid_size(c: int) -> int:
    """Return g with c = g*g + 1, g >= 1; raise if c has no such g."""
    if c < 2:
        raise ValidationError(f"clip length c={c} must be g^2+1 with g >= 1")
    g = math.isqrt(c - 1)
    if g * g + 1 != c:
        raise ValidationError(f"clip length c={c} is not of the form g^2+1")
    return g


@dataclass(frozen=True)
class VideoMeta:
    video_id: str
    T_ori: int
    width: int
    height: int
    frame_uris: Tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "frame_uris", tuple(self.frame_uris))
        if self.T_ori < 1:
            raise ValidationError(f"{self.video_id}: T_ori must be positive, got {self.T_ori}")
        if self.width < 1 or self.height < 1:
            raise ValidationError(f"{self.video_id}: bad frame size {self.width}x{self.height}")
        if self.frame_uris and len(self.frame_uris) != self.T_ori:
            raise ValidationError(
                f"{self.video_id}: {len(self.frame_uris)} frame uris for T_ori={self.T_ori}")

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.height, self.width)


@dataclass(frozen=True)
class Expression:
    exp_id: str
    text: str


@dataclass(frozen=True)
class ClipSpec:
    clip_index: int
    member_indices: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "member_indices", tuple(int(i) for i in self.member_indices))

    @property
    def key_index(self) -> int:
        return self.member_indices[0]


@dataclass(frozen=True)
class SamplingPlan:
    """Which frames form each clip, and which clip tokens decode each original frame.

    ``frame_token_map`` maps an original frame index to the (one or two, adjacent) clip
    indices whose prompts decode it. The dataclass itself does not enforce the plan
    invariants so that plans read from disk can be reported on; use :func:`validate_plan`.
    Planners in :mod:`rvos_tta.sampling` only ever return valid plans.
    """

    strategy: Strategy
    N: int
    c: int
    g: int
    T: int
    clips: Tuple[ClipSpec, ...]
    frame_token_map: Mapping[int, Tuple[int, ...]]
    tail_propagation: bool = False

    def __post_init__(self):
        object.__setattr__(self, "strategy", Strategy.parse(self.strategy))
        object.__setattr__(self, "clips", tuple(self.clips))
        object.__setattr__(self, "frame_token_map",
                           {int(k): v if type(v) is tuple else tuple(int(x) for x in v)
                            for k, v in sorted(self.frame_token_map.items())})

    def frames_for_clip(self, clip_index: int) -> List[int]:
        """Original frames decoded with this clip's prompt, in temporal order."""
        return [f for f, toks in self.frame_token_map.items() if clip_index in toks]


def validate_plan(plan: SamplingPlan, meta: VideoMeta) -> List[str]:
    """Return human-readable invariant violations; an empty list means the plan is valid."""
    out = []
    if plan.g < 1 or plan.c != plan.g * plan.g + 1:
        out.append(f"c != g^2+1 (c={plan.c}, g={plan.g})")
    if plan.T != plan.N * plan.c:
        out.append(f"T != N*c (T={plan.T}, N={plan.N}, c={plan.c})")
    if len(plan.clips) != plan.N:
        out.append(f"expected {plan.N} clips, got {len(plan.clips)}")

    for pos, clip in enumerate(plan.clips):
        m = clip.member_indices
        if clip.clip_index != pos:
            out.append(f"clip at position {pos} has clip_index {clip.clip_index}")
        if len(m) != plan.c:
            out.append(f"clip {pos}: {len(m)} members, expected c={plan.c}")
        if list(m) != sorted(m):
            out.append(f"clip {pos}: members not non-decreasing")
        if m and (min(m) < 0 or max(m) >= meta.T_ori):
            out.append(f"clip {pos}: member index outside [0, {meta.T_ori})")

    fmap = plan.frame_token_map
    missing = sorted(set(range(meta.T_ori)).difference(fmap))
    if missing:
        out.append(f"frames missing from frame_token_map: {_abbrev(missing)}")
    extra = [f for f in fmap if f < 0 or f >= meta.T_ori]
    if extra:
        out.append(f"frame_token_map has frames outside [0, {meta.T_ori}): {_abbrev(extra)}")

    dual_ok = plan.strategy in (Strategy.UNIFORM_PLUS, Strategy.QFRAME) and meta.T_ori < plan.T
    for f, toks in fmap.items():
        if len(toks) == 1:
            if not 0 <= toks[0] < plan.N:
                out.append(f"frame {f}: clip token outside [0, {plan.N})")
            continue
        if not toks:
            out.append(f"frame {f}: no clip token")
        elif len(toks) > 2:
            out.append(f"frame {f}: {len(toks)} clip tokens (max 2)")
        elif not dual_ok:
            out.append(f"frame {f}: 2 clip tokens not allowed for {plan.strategy.value} "
                       f"with T_ori={meta.T_ori}, T={plan.T}")
        if len(toks) == 2 and abs(toks[1] - toks[0]) != 1:
            out.append(f"frame {f}: clip tokens {toks} are not adjacent")
        if any(t < 0 or t >= plan.N for t in toks):
            out.append(f"frame {f}: clip token outside [0, {plan.N})")

    if plan.tail_propagation and not (
            plan.strategy == Strategy.WRAP_AROUND and meta.T_ori > plan.T):
        out.append("tail_propagation set but plan is not a wrap-around plan with T_ori > T")
    return out


def _abbrev(xs: Sequence[int], k: int = 8) -> str:
    s = ", ".join(str(x) for x in xs[:k])
    return s + (", ..." if len(xs) > k else "")


@dataclass(frozen=True)
class Frame:
    index: int
    pixels: np.ndarray

    def __post_init__(self):
        p = self.pixels
        if p.ndim != 3 or p.shape[2] != 3 or p.dtype != np.uint8:
            raise ValidationError(
                f"frame {self.index}: expected HxWx3 uint8 raster, got {p.shape} {p.dtype}")

    @property
    def shape(self) -> Tuple[int, int]:
        return self.pixels.shape[:2]


def as_binary_mask(m, shape: "Tuple[int, int] | None" = None) -> BinaryMask:
    m = np.asarray(m)
    if m.ndim != 2:
        raise ValidationError(f"mask must be 2-D, got shape {m.shape}")
    if shape is not None and m.shape != tuple(shape):
        raise ValidationError(f"mask shape {m.shape} does not match {tuple(shape)}")
    if m.dtype != bool and not np.isin(m, (0, 1)).all():
        raise ValidationError("binary mask has values outside {0, 1}")
    return m.astype(np.uint8, copy=False)


def as_soft_mask(m, shape: "Tuple[int, int] | None" = None) -> SoftMask:
    m = np.asarray(m, dtype=np.float32)
    if m.ndim != 2:
        raise ValidationError(f"mask must be 2-D, got shape {m.shape}")
    if shape is not None and m.shape != tuple(shape):
        raise ValidationError(f"mask shape {m.shape} does not match {tuple(shape)}")
    if not np.isfinite(m).all() or m.min(initial=0) < 0 or m.max(initial=0) > 1:
        raise ValidationError("soft mask values must lie in [0, 1]")
    return m


def binarize(soft: SoftMask) -> BinaryMask:
    """Decoded soft masks are foreground at >= 0.5."""
    return (np.asarray(soft) >= 0.5).astype(np.uint8)


# video_id -> exp_id -> per-frame masks
MaskTable = Dict[str, Dict[str, List[BinaryMask]]]


@dataclass
class PredictionSource:
    source_id: str
    masks: MaskTable = field(default_factory=dict)
    weight: float = 1.0

    def __post_init__(self):
        if not (self.weight >= 0):
            raise ValidationError(f"{self.source_id}: weight must be >= 0, got {self.weight}")

    def keys(self) -> List[Tuple[str, str]]:
        return [(v, e) for v, exps in sorted(self.masks.items()) for e in sorted(exps)]

    def frame_keys(self) -> set:
        return {(v, e, i) for v, exps in self.masks.items()
                for e, seq in exps.items() for i in range(len(seq))}

    def check_lengths(self, metas: Mapping[str, VideoMeta]) -> None:
        for v, exps in self.masks.items():
            if v not in metas:
                continue
            for e, seq in exps.items():
                if len(seq) != metas[v].T_ori:
                    raise ValidationError(
                        f"{self.source_id}: {v}/{e} has {len(seq)} masks, "
                        f"expected T_ori={metas[v].T_ori}")


DEFAULT_THRESHOLD = 0.5


@dataclass(frozen=True)
class WeightConfig:
    entries: Mapping[str, float]
    threshold: float = DEFAULT_THRESHOLD
    name: str = ""

    def __post_init__(self):
        bad = {k: w for k, w in self.entries.items()
               if not isinstance(w, (int, float)) or not math.isfinite(w) or w < 0}
        if bad:
            raise ValidationError(f"weights must be finite and >= 0: {bad}")
        if not any(w > 0 for w in self.entries.values()):
            raise ValidationError("weight config needs at least one positive weight")
        if not 0 <= self.threshold < 1:
            raise ValidationError(f"threshold must lie in [0, 1), got {self.threshold}")

    @property
    def active(self) -> Dict[str, float]:
        return {k: w for k, w in self.entries.items() if w > 0}
