"""On-disk formats: RLE masks, PNG frames and masks, manifests, plans, prediction trees.

Prediction layout::

    <root>/<source_id>/<video_id>/<exp_id>/<frame_index:05d>.png

Manifest, plan, score and weight documents are JSON with a ``schema_version`` field.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence

import numpy as np
from PIL import Image

from .core import (ClipSpec, Expression, Frame, PredictionSource, SamplingPlan, Strategy,
                   VideoMeta, WeightConfig, as_binary_mask)
from .errors import MaskIOError, ValidationError

SCHEMA_VERSION = 1
TABLE2_WEIGHTS = Path(__file__).parent / "data" / "table2_weights.json"
MASK_FG = 255


# -- run-length encoding -------------------------------------------------------------------

@dataclass(frozen=True)
class RleMask:
    """Column-major run lengths, alternating background/foreground, background first."""

    width: int
    height: int
    counts: tuple

    def to_dict(self) -> dict:
        return {"size": [self.height, self.width], "counts": list(self.counts)}

    @classmethod
    def from_dict(cls, d: Mapping) -> "RleMask":
        h, w = d["size"]
        return cls(int(w), int(h), tuple(int(x) for x in d["counts"]))


def rle_encode(mask) -> RleMask:
    mask = as_binary_mask(mask)
    h, w = mask.shape
    pixels = mask.T.ravel()
    change = np.flatnonzero(pixels[1:] != pixels[:-1]) + 1
    bounds = np.concatenate([[0], change, [pixels.size]])
    counts = np.diff(bounds).tolist()
    if pixels.size and pixels[0] == 1:
        counts = [0] + counts
    return RleMask(w, h, tuple(counts))


def rle_decode(rle: RleMask) -> np.ndarray:
    total = rle.width * rle.height
    if any(n < 0 for n in rle.counts):
        raise ValidationError("RLE counts must be non-negative")
    if sum(rle.counts) != total:
        raise ValidationError(f"RLE counts sum to {sum(rle.counts)}, expected {total}")
    values = np.arange(len(rle.counts)) % 2
    flat = np.repeat(values.astype(np.uint8), rle.counts)
    return flat.reshape(rle.width, rle.height).T.copy()


# -- rasters ---------------------------------------------------------------------------------

def _open(path) -> Image.Image:
    try:
        img = Image.open(path)
        img.load()
        return img
    except FileNotFoundError:
        raise MaskIOError(f"{path}: no such file") from None
    except OSError as e:
        raise MaskIOError(f"{path}: cannot read image ({e})") from None


def read_frame(path) -> np.ndarray:
    return np.asarray(_open(path).convert("RGB"), dtype=np.uint8)


def write_frame(path, pixels: np.ndarray) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.asarray(pixels, dtype=np.uint8), mode="RGB").save(path)


def read_mask(path) -> np.ndarray:
    """Single-channel 0/255 PNG to a {0, 1} mask; any other value is rejected."""
    img = _open(path)
    if img.mode not in ("L", "1", "P"):
        raise ValidationError(f"{path}: mask must be single-channel, got mode {img.mode}")
    a = np.asarray(img.convert("L"))
    if not np.isin(a, (0, MASK_FG)).all():
        raise ValidationError(f"{path}: mask values must be 0 or 255")
    return (a == MASK_FG).astype(np.uint8)


def write_mask(path, mask) -> None:
    mask = as_binary_mask(mask)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(mask * np.uint8(MASK_FG), mode="L").save(path)


def read_soft_mask(path) -> np.ndarray:
    a = np.asarray(_open(path).convert("L"), dtype=np.float32)
    return a / 255.0


def write_soft_mask(path, soft) -> None:
    q = np.floor(np.clip(np.asarray(soft, dtype=np.float64), 0, 1) * 255 + 0.5)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(q.astype(np.uint8), mode="L").save(path)


# -- json documents --------------------------------------------------------------------------

def _dump(path, doc) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def _load(path) -> Any:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise MaskIOError(f"{path}: no such file") from None
    except json.JSONDecodeError as e:
        raise ValidationError(f"{path}: not valid JSON ({e})") from None


def _field(doc: Mapping, key: str, kind, path, where: str):
    if not isinstance(doc, Mapping) or key not in doc:
        raise ValidationError(f"{path}: missing field '{where}{key}'")
    val = doc[key]
    if kind is int and isinstance(val, bool) or not isinstance(val, kind):
        raise ValidationError(f"{path}: field '{where}{key}' has wrong type {type(val).__name__}")
    return val


def _check_schema(doc, path) -> None:
    v = _field(doc, "schema_version", int, path, "")
    if v != SCHEMA_VERSION:
        raise ValidationError(f"{path}: unsupported schema_version {v}")


# -- manifest ---------------------------------------------------------------------------------

@dataclass
class VideoEntry:
    meta: VideoMeta
    expressions: List[Expression]


@dataclass
class Manifest:
    videos: List[VideoEntry]
    root: Path = field(default_factory=Path)

    def resolve(self, uri: str) -> Path:
        p = Path(uri)
        return p if p.is_absolute() else self.root / p

    def video(self, video_id: str) -> VideoEntry:
        for v in self.videos:
            if v.meta.video_id == video_id:
                return v
        raise ValidationError(f"video {video_id!r} not in manifest")

    @property
    def metas(self) -> Dict[str, VideoMeta]:
        return {v.meta.video_id: v.meta for v in self.videos}

    def load_frames(self, video_id: str) -> List[Frame]:
        meta = self.video(video_id).meta
        frames = []
        for i, uri in enumerate(meta.frame_uris):
            px = read_frame(self.resolve(uri))
            if px.shape[:2] != meta.shape:
                raise ValidationError(f"{uri}: frame is {px.shape[:2]}, manifest says {meta.shape}")
            frames.append(Frame(i, px))
        return frames


def manifest_to_dict(manifest: Manifest) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "videos": [{
            "video_id": v.meta.video_id,
            "width": v.meta.width,
            "height": v.meta.height,
            "frames": list(v.meta.frame_uris),
            "expressions": [{"exp_id": e.exp_id, "expression": e.text} for e in v.expressions],
        } for v in manifest.videos],
    }


def manifest_from_dict(doc: Mapping, path="<manifest>", root: Optional[Path] = None) -> Manifest:
    _check_schema(doc, path)
    videos = []
    seen = set()
    for n, v in enumerate(_field(doc, "videos", list, path, "")):
        where = f"videos[{n}]."
        vid = _field(v, "video_id", str, path, where)
        if vid in seen:
            raise ValidationError(f"{path}: duplicate video_id {vid!r}")
        seen.add(vid)
        frames = _field(v, "frames", list, path, where)
        if not frames or not all(isinstance(f, str) for f in frames):
            raise ValidationError(f"{path}: field '{where}frames' must be a non-empty list of paths")
        exps = []
        for k, e in enumerate(_field(v, "expressions", list, path, where)):
            ew = f"{where}expressions[{k}]."
            exps.append(Expression(_field(e, "exp_id", str, path, ew),
                                   _field(e, "expression", str, path, ew)))
        try:
            meta = VideoMeta(vid, len(frames), _field(v, "width", int, path, where),
                             _field(v, "height", int, path, where), tuple(frames))
        except ValidationError as e:
            raise ValidationError(f"{path}: {where[:-1]}: {e}") from None
        videos.append(VideoEntry(meta, exps))
    return Manifest(videos, Path(root) if root is not None else Path("."))


def load_manifest(path) -> Manifest:
    path = Path(path)
    return manifest_from_dict(_load(path), path, root=path.parent)


def save_manifest(path, manifest: Manifest) -> None:
    _dump(path, manifest_to_dict(manifest))


# -- plans -------------------------------------------------------------------------------------

def plan_to_dict(plan: SamplingPlan, video_id: Optional[str] = None,
                 exp_id: Optional[str] = None) -> dict:
    doc = {"schema_version": SCHEMA_VERSION}
    if video_id is not None:
        doc["video_id"] = video_id
    if exp_id is not None:
        doc["exp_id"] = exp_id
    doc.update({
        "strategy": plan.strategy.value,
        "N": plan.N, "c": plan.c, "g": plan.g, "T": plan.T,
        "tail_propagation": plan.tail_propagation,
        "clips": [{"clip_index": cl.clip_index, "key_index": cl.key_index,
                   "member_indices": list(cl.member_indices)} for cl in plan.clips],
        "frame_token_map": {str(f): list(t) for f, t in plan.frame_token_map.items()},
    })
    return doc


def plan_from_dict(doc: Mapping, path="<plan>") -> SamplingPlan:
    _check_schema(doc, path)
    clips = []
    for n, cl in enumerate(_field(doc, "clips", list, path, "")):
        where = f"clips[{n}]."
        members = _field(cl, "member_indices", list, path, where)
        if not members:
            raise ValidationError(f"{path}: field '{where}member_indices' is empty")
        spec = ClipSpec(_field(cl, "clip_index", int, path, where), members)
        if "key_index" in cl and cl["key_index"] != spec.key_index:
            raise ValidationError(f"{path}: field '{where}key_index' is not the first member")
        clips.append(spec)
    raw_map = _field(doc, "frame_token_map", dict, path, "")
    try:
        fmap = {int(k): tuple(int(x) for x in v) for k, v in raw_map.items()}
    except (TypeError, ValueError):
        raise ValidationError(f"{path}: field 'frame_token_map' must map frame -> [clip, ...]") from None
    return SamplingPlan(
        strategy=Strategy.parse(_field(doc, "strategy", str, path, "")),
        N=_field(doc, "N", int, path, ""), c=_field(doc, "c", int, path, ""),
        g=_field(doc, "g", int, path, ""), T=_field(doc, "T", int, path, ""),
        clips=tuple(clips), frame_token_map=fmap,
        tail_propagation=_field(doc, "tail_propagation", bool, path, ""),
    )


def save_plan(path, plan: SamplingPlan, video_id=None, exp_id=None) -> None:
    _dump(path, plan_to_dict(plan, video_id, exp_id))


def load_plan(path) -> SamplingPlan:
    return plan_from_dict(_load(path), path)


def plan_path(root, video_id: str, exp_id: str) -> Path:
    return Path(root) / video_id / f"{exp_id}.json"


# -- relevance scores and weights ---------------------------------------------------------------

def load_scores(path) -> Dict[str, Dict[str, List[float]]]:
    """``{video_id: {exp_id: [score per frame]}}``; a bare list applies to every expression."""
    doc = _load(path)
    _check_schema(doc, path)
    out = {}
    for vid, val in _field(doc, "scores", dict, path, "").items():
        if isinstance(val, list):
            out[vid] = {"*": [float(x) for x in val]}
        elif isinstance(val, dict):
            out[vid] = {e: [float(x) for x in s] for e, s in val.items()}
        else:
            raise ValidationError(f"{path}: field 'scores.{vid}' must be a list or mapping")
    return out


def scores_for(scores: Mapping, video_id: str, exp_id: str) -> Optional[List[float]]:
    per = scores.get(video_id)
    if per is None:
        return None
    return per.get(exp_id, per.get("*"))


def save_scores(path, scores: Mapping) -> None:
    _dump(path, {"schema_version": SCHEMA_VERSION, "scores": scores})


def weight_config_from_dict(doc: Mapping, path="<weights>") -> WeightConfig:
    weights = _field(doc, "weights", dict, path, "")
    threshold = doc.get("threshold", 0.5)
    try:
        return WeightConfig(dict(weights), float(threshold), str(doc.get("name", "")))
    except ValidationError as e:
        raise ValidationError(f"{path}: {e}") from None


def load_weight_config(path, column: Optional[str] = None) -> WeightConfig:
    """Read a weight document; multi-column documents need ``column`` (or a ``default``)."""
    doc = _load(path)
    _check_schema(doc, path)
    if "columns" in doc:
        cols = _field(doc, "columns", dict, path, "")
        column = column or doc.get("default")
        if column not in cols:
            raise ValidationError(f"{path}: unknown column {column!r} (have {sorted(cols)})")
        sub = dict(cols[column])
        sub.setdefault("name", column)
        return weight_config_from_dict(sub, f"{path}#{column}")
    return weight_config_from_dict(doc, path)


def save_weight_config(path, config: WeightConfig) -> None:
    _dump(path, {"schema_version": SCHEMA_VERSION, "name": config.name,
                 "threshold": config.threshold, "weights": dict(config.entries)})


# -- prediction trees ---------------------------------------------------------------------------

def frame_name(index: int) -> str:
    return f"{index:05d}.png"


def sequence_dir(root, source_id: str, video_id: str, exp_id: str) -> Path:
    return Path(root) / source_id / video_id / exp_id


def write_sequence(directory, masks: Sequence[np.ndarray]) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for i, m in enumerate(masks):
        write_mask(directory / frame_name(i), m)


def read_sequence(directory) -> List[np.ndarray]:
    directory = Path(directory)
    names = sorted(p.name for p in directory.glob("*.png"))
    expected = [frame_name(i) for i in range(len(names))]
    if names != expected:
        raise ValidationError(f"{directory}: frames are not numbered 0..{len(names) - 1}")
    return [read_mask(directory / n) for n in names]


def write_prediction_source(root, source: PredictionSource) -> Path:
    for vid, exps in source.masks.items():
        for eid, seq in exps.items():
            write_sequence(sequence_dir(root, source.source_id, vid, eid), seq)
    return Path(root) / source.source_id


def read_prediction_source(directory, source_id: Optional[str] = None,
                           weight: float = 1.0) -> PredictionSource:
    """Read ``<directory>/<video_id>/<exp_id>/*.png`` into a PredictionSource."""
    directory = Path(directory)
    if not directory.is_dir():
        raise MaskIOError(f"{directory}: prediction directory not found")
    masks: Dict[str, Dict[str, List[np.ndarray]]] = {}
    for vdir in sorted(p for p in directory.iterdir() if p.is_dir()):
        for edir in sorted(p for p in vdir.iterdir() if p.is_dir()):
            if any(edir.glob("*.png")):
                masks.setdefault(vdir.name, {})[edir.name] = read_sequence(edir)
    return PredictionSource(source_id or directory.name, masks, weight)


def iter_files(root) -> Iterable[Path]:
    for dirpath, _, files in sorted(os.walk(root)):
        for name in sorted(files):
            yield Path(dirpath) / name
