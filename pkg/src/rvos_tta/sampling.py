"""Test-time frame sampling strategies.

Each planner turns a video of ``T_ori`` frames into ``N`` clips of ``c = g^2 + 1`` frames
(``T = N * c`` sampled frames in total) plus a map telling which clip prompt decodes each
original frame.

Uniform ori-clip ranges. For ``T_ori >= T`` the video is split into disjoint ranges with
boundaries ``ceil(i * T_ori / N)``. For shorter videos every ori-clip covers all frames it
touches on the continuous time axis, ``[floor(i*T_ori/N), ceil((i+1)*T_ori/N) - 1]``, so a
frame straddling a boundary is an endpoint member of both neighbouring clips. Inside a
range, members are picked by endpoint-inclusive linear spacing with round-half-up.
"""
from __future__ import annotations

import math
from typing import Dict, List, Sequence, Tuple

from .core import ClipSpec, SamplingPlan, Strategy, VideoMeta, grid_size
from .errors import ValidationError


def linspace_indices(start: int, length: int, count: int) -> List[int]:
    """``count`` indices spread over ``[start, start+length)``, both ends included.

    index_k = floor(start + k*(length-1)/(count-1) + 1/2), computed in integers.
    """
    if count == 1:
        return [start]
    den = 2 * (count - 1)
    return [start + (2 * k * (length - 1) + count - 1) // den for k in range(count)]


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def _check(meta: VideoMeta, N: int, c: int) -> int:
    if N < 1:
        raise ValidationError(f"N must be >= 1, got {N}")
    if meta.T_ori < 1:
        raise ValidationError(f"{meta.video_id}: empty video")
    return grid_size(c)


def ori_clip_ranges(T_ori: int, N: int, T: int) -> List[Tuple[int, int]]:
    """Inclusive ``(lo, hi)`` frame range of each ori-clip."""
    if T_ori >= T:
        return [(_ceil_div(i * T_ori, N), _ceil_div((i + 1) * T_ori, N) - 1) for i in range(N)]
    return [((i * T_ori) // N, _ceil_div((i + 1) * T_ori, N) - 1) for i in range(N)]


def ori_clip_owner(f: int, T_ori: int, N: int) -> int:
    # inverse of the ceil(i*T_ori/N) partition
    return (f * N) // T_ori


def _uniform_parts(T_ori: int, N: int, c: int, plus: bool):
    T = N * c
    ranges = ori_clip_ranges(T_ori, N, T)
    clips = tuple(ClipSpec(i, linspace_indices(lo, hi - lo + 1, c))
                  for i, (lo, hi) in enumerate(ranges))
    fmap: Dict[int, Tuple[int, ...]] = {}
    for f in range(T_ori):
        owner = ori_clip_owner(f, T_ori, N)
        toks: Tuple[int, ...] = (owner,)
        if plus and T_ori < T:
            inside = [i for i in (owner - 1, owner + 1)
                      if 0 <= i < N and ranges[i][0] <= f <= ranges[i][1]]
            # a frame can touch more than two ranges when T_ori < N; keep the later neighbour
            if owner + 1 in inside:
                toks = (owner, owner + 1)
            elif owner - 1 in inside:
                toks = (owner - 1, owner)
        fmap[f] = toks
    return clips, fmap


def plan_uniform(meta: VideoMeta, N: int, c: int) -> SamplingPlan:
    g = _check(meta, N, c)
    clips, fmap = _uniform_parts(meta.T_ori, N, c, plus=False)
    return SamplingPlan(Strategy.UNIFORM, N, c, g, N * c, clips, fmap)


def plan_uniform_plus(meta: VideoMeta, N: int, c: int) -> SamplingPlan:
    """Uniform, but for short videos boundary frames shared by two clips keep both tokens."""
    g = _check(meta, N, c)
    clips, fmap = _uniform_parts(meta.T_ori, N, c, plus=True)
    return SamplingPlan(Strategy.UNIFORM_PLUS, N, c, g, N * c, clips, fmap)


def select_top_frames(scores: Sequence[float], k: int) -> List[int]:
    """Indices of the ``k`` highest scores (ties to the lower index), in temporal order."""
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    return sorted(order[:k])


def plan_qframe(meta: VideoMeta, N: int, c: int, scores: Sequence[float]) -> SamplingPlan:
    """Keep the ``T`` most relevant frames, then plan Uniform+ over that subsequence.

    Unselected frames are decoded with the token of the nearest selected frame (the
    earlier one on a tie).
    """
    g = _check(meta, N, c)
    scores = [float(s) for s in scores]
    if len(scores) != meta.T_ori:
        raise ValidationError(
            f"{meta.video_id}: {len(scores)} relevance scores for T_ori={meta.T_ori}")
    if not all(math.isfinite(s) for s in scores):
        raise ValidationError(f"{meta.video_id}: relevance scores must be finite")
    T = N * c
    selected = select_top_frames(scores, min(T, meta.T_ori))
    sub_clips, sub_map = _uniform_parts(len(selected), N, c, plus=True)

    clips = tuple(ClipSpec(cl.clip_index, [selected[j] for j in cl.member_indices])
                  for cl in sub_clips)
    fmap = {selected[j]: toks for j, toks in sub_map.items()}
    # sweep once: p is the last selected position at or before f
    p = 0
    for f in range(meta.T_ori):
        if f in fmap:
            continue
        while p + 1 < len(selected) and selected[p + 1] <= f:
            p += 1
        nearest = p
        if selected[p] < f and p + 1 < len(selected) and selected[p + 1] - f < f - selected[p]:
            nearest = p + 1
        fmap[f] = sub_map[nearest]
    return SamplingPlan(Strategy.QFRAME, N, c, g, T, clips, fmap)


def wrap_indices(T_ori: int, T: int) -> List[int]:
    return [i % T_ori for i in range(T)]


def plan_wrap_around(meta: VideoMeta, N: int, c: int) -> SamplingPlan:
    """Cyclic sampling ``i mod T_ori``; frames beyond ``T`` ride on the last clip.

    When a short video repeats a frame across clips, the frame is decoded by the clip
    holding most of its copies (the earlier clip on a tie).
    """
    g = _check(meta, N, c)
    T_ori, T = meta.T_ori, N * c
    members = sorted(wrap_indices(T_ori, T))
    clips = tuple(ClipSpec(i, members[i * c:(i + 1) * c]) for i in range(N))
    fmap: Dict[int, Tuple[int, ...]] = {}
    if T_ori >= T:
        for f in range(T_ori):
            fmap[f] = (min(f // c, N - 1),)
    else:
        counts: Dict[int, Dict[int, int]] = {}
        for pos, f in enumerate(members):
            per = counts.setdefault(f, {})
            per[pos // c] = per.get(pos // c, 0) + 1
        for f, per in counts.items():
            fmap[f] = (min(per, key=lambda i: (-per[i], i)),)
    return SamplingPlan(Strategy.WRAP_AROUND, N, c, g, T, clips, fmap,
                        tail_propagation=T_ori > T)


def plan_wrap_around_plus(meta: VideoMeta, N: int, c: int) -> SamplingPlan:
    """Wrap-around for videos shorter than ``T``, Uniform otherwise."""
    base = plan_wrap_around(meta, N, c) if meta.T_ori < N * c else plan_uniform(meta, N, c)
    return SamplingPlan(Strategy.WRAP_AROUND_PLUS, base.N, base.c, base.g, base.T,
                        base.clips, base.frame_token_map, base.tail_propagation)


def make_plan(strategy, meta: VideoMeta, N: int, c: int, scores=None) -> SamplingPlan:
    strategy = Strategy.parse(strategy)
    if strategy == Strategy.QFRAME:
        if scores is None:
            raise ValidationError("qframe sampling needs relevance scores")
        return plan_qframe(meta, N, c, scores)
    planner = {
        Strategy.UNIFORM: plan_uniform,
        Strategy.UNIFORM_PLUS: plan_uniform_plus,
        Strategy.WRAP_AROUND: plan_wrap_around,
        Strategy.WRAP_AROUND_PLUS: plan_wrap_around_plus,
    }[strategy]
    return planner(meta, N, c)
