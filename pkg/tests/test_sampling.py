import random

import pytest
from hypothesis import given, settings, strategies as st

from oracles import linspace_oracle, top_k_oracle, wrap_loop_oracle
from rvos_tta.core import Strategy, VideoMeta, validate_plan
from rvos_tta.errors import ValidationError
from rvos_tta.mask_io import plan_to_dict
from rvos_tta.sampling import (linspace_indices, make_plan, plan_qframe, plan_uniform,
                               plan_uniform_plus, plan_wrap_around, plan_wrap_around_plus,
                               select_top_frames, wrap_indices)


def meta(T_ori):
    return VideoMeta("v", T_ori, 4, 4)


def members(plan):
    return [list(c.member_indices) for c in plan.clips]


def same_layout(a, b):
    return (members(a) == members(b) and a.frame_token_map == b.frame_token_map
            and a.tail_propagation == b.tail_propagation)


# -- uniform ---------------------------------------------------------------------------

def test_uniform_paper_setting():
    plan = plan_uniform(meta(100), 10, 10)
    assert members(plan) == [list(range(10 * i, 10 * i + 10)) for i in range(10)]
    assert all(len(t) == 1 for t in plan.frame_token_map.values())
    assert (plan.T, plan.g) == (100, 3)


def test_uniform_identity_partition():
    plan = plan_uniform(meta(5), 1, 5)
    assert members(plan) == [[0, 1, 2, 3, 4]]
    assert plan.clips[0].key_index == 0


def test_uniform_23_frames_two_clips():
    # ori-clips [0..11] and [12..22]; members from the linspace oracle
    plan = plan_uniform(meta(23), 2, 5)
    assert members(plan) == [linspace_oracle(0, 12, 5), linspace_oracle(12, 11, 5)]
    assert members(plan) == [[0, 3, 6, 8, 11], [12, 15, 17, 20, 22]]
    assert {f for f, t in plan.frame_token_map.items() if t == (0,)} == set(range(12))


@given(st.integers(0, 200), st.integers(1, 300), st.integers(1, 12))
def test_linspace_matches_oracle(start, length, count):
    assert linspace_indices(start, length, count) == linspace_oracle(start, length, count)


@pytest.mark.parametrize("T_ori,N,c", [(100, 10, 10), (237, 7, 5), (41, 4, 10), (300, 12, 2)])
def test_uniform_ranges_partition_video(T_ori, N, c):
    plan = plan_uniform(meta(T_ori), N, c)
    owners = [plan.frame_token_map[f][0] for f in range(T_ori)]
    assert owners == sorted(owners)
    assert set(owners) == set(range(N))
    for clip in plan.clips:
        assert list(clip.member_indices) == sorted(clip.member_indices)
        own = [f for f in range(T_ori) if owners[f] == clip.clip_index]
        assert clip.member_indices[0] == own[0] and clip.member_indices[-1] == own[-1]


def test_uniform_rejects_bad_input():
    with pytest.raises(ValidationError):
        plan_uniform(meta(10), 2, 4)
    with pytest.raises(ValidationError):
        plan_uniform(meta(10), 0, 5)


# -- uniform+ ---------------------------------------------------------------------------

def test_uniform_plus_equals_uniform_for_long_video():
    assert same_layout(plan_uniform_plus(meta(100), 10, 10), plan_uniform(meta(100), 10, 10))


def test_uniform_plus_short_video_boundary_frames_get_two_tokens():
    plan = plan_uniform_plus(meta(12), 10, 10)
    # brute force: which clips list each frame among their members
    holders = {f: [c.clip_index for c in plan.clips if f in c.member_indices] for f in range(12)}
    dual = {f for f, h in holders.items() if len(h) == 2}
    assert len(dual) >= 6
    for f in range(12):
        assert list(plan.frame_token_map[f]) == holders[f]
    assert members(plan) == members(plan_uniform(meta(12), 10, 10))


def test_uniform_plus_single_frame_video():
    plan = plan_uniform_plus(meta(1), 2, 5)
    assert plan.frame_token_map == {0: (0, 1)}
    assert members(plan) == [[0] * 5, [0] * 5]


def test_uniform_plus_caps_tokens_when_video_shorter_than_n():
    plan = plan_uniform_plus(meta(2), 7, 5)
    assert validate_plan(plan, meta(2)) == []
    assert all(len(t) <= 2 for t in plan.frame_token_map.values())


# -- q-frame ----------------------------------------------------------------------------

def test_top_frames_example():
    scores = [0.1, 0.9, 0.2, 0.8, 0.3]
    assert select_top_frames(scores, 3) == top_k_oracle(scores, 3) == [1, 3, 4]


def test_top_frames_ties_prefer_earlier():
    assert select_top_frames([0.5] * 9, 4) == [0, 1, 2, 3]


@given(st.lists(st.integers(0, 5), min_size=1, max_size=40), st.integers(1, 40))
def test_top_frames_matches_oracle(scores, k):
    k = min(k, len(scores))
    assert select_top_frames(scores, k) == top_k_oracle(scores, k)


def test_qframe_increasing_and_decreasing_scores():
    T_ori = 37
    up = plan_qframe(meta(T_ori), 2, 5, list(range(T_ori)))
    down = plan_qframe(meta(T_ori), 2, 5, list(range(T_ori, 0, -1)))
    assert sorted({i for c in up.clips for i in c.member_indices}) == list(range(27, 37))
    assert sorted({i for c in down.clips for i in c.member_indices}) == list(range(10))


def test_qframe_short_video_reduces_to_uniform_plus():
    scores = [random.Random(3).random() for _ in range(30)]
    assert same_layout(plan_qframe(meta(30), 10, 10, scores), plan_uniform_plus(meta(30), 10, 10))


def test_qframe_unselected_frames_follow_nearest_selected():
    # a single clip decodes every frame
    scores = [0, 0, 9, 0, 0, 0, 0, 9, 0, 0]
    plan = plan_qframe(meta(10), 1, 2, scores)
    assert members(plan) == [[2, 7]]
    assert all(plan.frame_token_map[f] == (0,) for f in range(10))
    scores = [0, 0, 9, 0, 0, 0, 9, 0, 0, 0, 0, 0, 0, 0, 0, 0, 9, 0, 0, 9]
    plan = plan_qframe(meta(20), 2, 2, scores)
    assert members(plan) == [[2, 6], [16, 19]]
    tokens = [plan.frame_token_map[f][0] for f in range(20)]
    # frame 11 is 5 away from both 6 and 16 -> the earlier one (clip 0)
    assert tokens[:12] == [0] * 12 and tokens[12:] == [1] * 8


def test_qframe_rejects_bad_scores():
    with pytest.raises(ValidationError):
        plan_qframe(meta(5), 1, 2, [1, 2, 3])
    with pytest.raises(ValidationError):
        plan_qframe(meta(3), 1, 2, [1, float("nan"), 3])
    with pytest.raises(ValidationError):
        make_plan("qframe", meta(3), 1, 2)


# -- wrap-around ------------------------------------------------------------------------

def test_wrap_around_short_video():
    assert wrap_indices(7, 10) == [0, 1, 2, 3, 4, 5, 6, 0, 1, 2]
    plan = plan_wrap_around(meta(7), 2, 5)
    assert sum(members(plan), []) == [0, 0, 1, 1, 2, 2, 3, 4, 5, 6]
    assert not plan.tail_propagation


def test_wrap_around_exact_length():
    plan = plan_wrap_around(meta(100), 10, 10)
    assert sum(members(plan), []) == list(range(100))
    assert not plan.tail_propagation


def test_wrap_around_long_video_tail():
    plan = plan_wrap_around(meta(150), 10, 10)
    assert sum(members(plan), []) == list(range(100))
    assert plan.tail_propagation
    assert all(plan.frame_token_map[f] == (9,) for f in range(100, 150))
    assert validate_plan(plan, meta(150)) == []


def test_wrap_around_repeated_frame_goes_to_majority_clip():
    plan = plan_wrap_around(meta(3), 2, 5)   # sorted [0,0,0,0,1 | 1,1,2,2,2]
    assert plan.frame_token_map == {0: (0,), 1: (1,), 2: (1,)}


@given(st.integers(1, 300), st.integers(1, 150))
def test_wrap_indices_match_loop(T_ori, T):
    assert wrap_indices(T_ori, T) == wrap_loop_oracle(T_ori, T)


def test_wrap_around_plus_dispatch():
    assert same_layout(plan_wrap_around_plus(meta(50), 10, 10), plan_wrap_around(meta(50), 10, 10))
    assert same_layout(plan_wrap_around_plus(meta(100), 10, 10), plan_uniform(meta(100), 10, 10))
    assert same_layout(plan_wrap_around_plus(meta(160), 10, 10), plan_uniform(meta(160), 10, 10))
    plan = plan_wrap_around_plus(meta(7), 2, 5)
    assert members(plan) == [[0, 0, 1, 1, 2], [2, 3, 4, 5, 6]]
    assert plan.strategy == Strategy.WRAP_AROUND_PLUS


# -- properties -------------------------------------------------------------------------

@settings(max_examples=200, deadline=None)
@given(st.integers(1, 300), st.integers(1, 12), st.integers(1, 3), st.sampled_from(list(Strategy)),
       st.integers(0, 2 ** 16))
def test_every_plan_is_valid_and_deterministic(T_ori, N, g, strategy, seed):
    rng = random.Random(seed)
    scores = [rng.random() for _ in range(T_ori)]
    a = make_plan(strategy, meta(T_ori), N, g * g + 1, scores)
    b = make_plan(strategy, meta(T_ori), N, g * g + 1, list(scores))
    assert validate_plan(a, meta(T_ori)) == []
    assert set(a.frame_token_map) == set(range(T_ori))
    assert plan_to_dict(a) == plan_to_dict(b)
