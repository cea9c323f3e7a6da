import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from PIL import Image

from oracles import column_major_runs_oracle
from rvos_tta.core import Expression, PredictionSource, VideoMeta
from rvos_tta.errors import MaskIOError, ValidationError
from rvos_tta.mask_io import (TABLE2_WEIGHTS, Manifest, RleMask, VideoEntry, load_manifest,
                              load_plan, load_scores, load_weight_config, manifest_from_dict,
                              manifest_to_dict, plan_to_dict, read_frame, read_mask,
                              read_prediction_source, rle_decode, rle_encode, save_manifest,
                              save_plan, save_scores, scores_for, write_frame, write_mask,
                              write_prediction_source)
from rvos_tta.sampling import plan_uniform


@pytest.mark.parametrize("mask,counts", [
    (np.zeros((2, 2)), [4]),
    (np.ones((2, 2)), [0, 4]),
    (np.pad([[1]], 1), [4, 1, 4]),
])
def test_rle_examples(mask, counts):
    rle = rle_encode(mask)
    assert list(rle.counts) == counts
    assert np.array_equal(rle_decode(rle), mask)


def test_rle_column_major():
    m = np.array([[1, 0, 0], [1, 0, 0]])
    assert list(rle_encode(m).counts) == [0, 2, 4]


def test_rle_decode_rejects_bad_sum():
    with pytest.raises(ValidationError):
        rle_decode(RleMask(2, 2, (3,)))


@given(st.integers(1, 12), st.integers(1, 12), st.integers(0, 2 ** 32 - 1))
def test_rle_matches_oracle(h, w, seed):
    m = np.random.default_rng(seed).integers(0, 2, (h, w), dtype=np.uint8)
    rle = rle_encode(m)
    assert list(rle.counts) == column_major_runs_oracle(m.tolist())
    back = rle_decode(RleMask.from_dict(json.loads(json.dumps(rle.to_dict()))))
    assert np.array_equal(back, m)


def minimal_manifest():
    meta = VideoMeta("v0", 1, 3, 2, ("frames/v0/00000.png",))
    return Manifest([VideoEntry(meta, [Expression("0", "the dog")])])


def test_minimal_manifest_roundtrip(tmp_path):
    path = tmp_path / "manifest.json"
    save_manifest(path, minimal_manifest())
    loaded = load_manifest(path)
    assert manifest_to_dict(loaded) == manifest_to_dict(minimal_manifest())
    assert loaded.root == tmp_path


def test_manifest_schema_errors_name_path_and_field(tmp_path):
    doc = manifest_to_dict(minimal_manifest())
    del doc["videos"][0]["frames"]
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(ValidationError, match=r"bad\.json.*videos\[0\]\.frames"):
        load_manifest(path)
    with pytest.raises(ValidationError, match="schema_version"):
        manifest_from_dict({"videos": []})
    doc = manifest_to_dict(minimal_manifest())
    doc["videos"][0]["width"] = "3"
    with pytest.raises(ValidationError, match="width"):
        manifest_from_dict(doc)


def test_missing_manifest_is_io_error(tmp_path):
    with pytest.raises(MaskIOError):
        load_manifest(tmp_path / "nope.json")


def test_manifest_preserves_frame_order():
    frames = tuple(f"f/{n}.png" for n in (3, 1, 2))
    doc = manifest_to_dict(Manifest([VideoEntry(VideoMeta("v", 3, 2, 2, frames), [])]))
    assert manifest_from_dict(doc).videos[0].meta.frame_uris == frames


def test_plan_23_2_5_roundtrip(tmp_path):
    plan = plan_uniform(VideoMeta("v", 23, 4, 4), 2, 5)
    save_plan(tmp_path / "p.json", plan)
    assert load_plan(tmp_path / "p.json") == plan


def test_plan_schema_error(tmp_path):
    doc = plan_to_dict(plan_uniform(VideoMeta("v", 23, 4, 4), 2, 5))
    del doc["clips"][1]["member_indices"]
    (tmp_path / "p.json").write_text(json.dumps(doc))
    with pytest.raises(ValidationError, match=r"clips\[1\]\.member_indices"):
        load_plan(tmp_path / "p.json")


def test_mask_png_roundtrip(tmp_path):
    m = np.array([[0, 1], [1, 1]], np.uint8)
    write_mask(tmp_path / "m.png", m)
    assert np.asarray(Image.open(tmp_path / "m.png")).tolist() == [[0, 255], [255, 255]]
    assert np.array_equal(read_mask(tmp_path / "m.png"), m)


def test_soft_values_in_mask_slot_rejected(tmp_path):
    Image.fromarray(np.array([[0, 128]], np.uint8), mode="L").save(tmp_path / "m.png")
    with pytest.raises(ValidationError):
        read_mask(tmp_path / "m.png")


def test_frame_roundtrip(tmp_path):
    px = np.random.default_rng(0).integers(0, 256, (5, 7, 3), dtype=np.uint8)
    write_frame(tmp_path / "f.png", px)
    assert np.array_equal(read_frame(tmp_path / "f.png"), px)


def test_prediction_tree_roundtrip(tmp_path):
    rng = np.random.default_rng(1)
    masks = {"v": {"0": [rng.integers(0, 2, (4, 5), dtype=np.uint8) for _ in range(3)]}}
    root = write_prediction_source(tmp_path, PredictionSource("m/uniform", masks))
    assert root == tmp_path / "m" / "uniform"
    assert (root / "v" / "0" / "00002.png").is_file()
    back = read_prediction_source(root, "m/uniform")
    assert all(np.array_equal(a, b) for a, b in zip(back.masks["v"]["0"], masks["v"]["0"]))


def test_scores_roundtrip(tmp_path):
    save_scores(tmp_path / "s.json", {"a": {"0": [0.5, 1.0]}, "b": [2.0]})
    scores = load_scores(tmp_path / "s.json")
    assert scores_for(scores, "a", "0") == [0.5, 1.0]
    assert scores_for(scores, "b", "7") == [2.0]
    assert scores_for(scores, "c", "0") is None


def test_table2_weights_ship_every_column():
    doc = json.loads(TABLE2_WEIGHTS.read_text())
    assert len(doc["columns"]) == 7
    best = load_weight_config(TABLE2_WEIGHTS)
    assert best.name == "sa_2"
    assert best.entries == {
        "14B/uniform": 2, "14B/uniform_plus": 2.5,
        "26B/uniform": 1, "26B/uniform_plus": 1, "26B/qframe": 1, "26B/wrap_around": 1,
        "26B/wrap_around_plus": 1, "26B-noris/uniform_plus": 2, "26B-noris/wrap_around": 2,
    }
    assert best.threshold == 0.5
    with pytest.raises(ValidationError):
        load_weight_config(TABLE2_WEIGHTS, "no_such_column")
