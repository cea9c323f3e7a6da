"""Selective averaging: weighted per-pixel vote over binary masks, strict threshold.

A pixel is foreground iff sum(w_i * m_i) / sum(w_i) > threshold. The comparison is done
in integers: weights are read as exact decimals, scaled by the lcm of their denominators,
and the test becomes ``den * sum(W_i m_i) > num * sum(W_i)`` for ``threshold = num/den``.
Ties (e.g. two equally weighted sources that disagree) therefore go to background.
"""
from __future__ import annotations

from fractions import Fraction
from math import lcm
from typing import Dict, List, Mapping, Sequence, Tuple, Union

import numpy as np

from .core import DEFAULT_THRESHOLD, PredictionSource, WeightConfig, as_binary_mask
from .errors import ValidationError

_INT64_LIMIT = 2 ** 62


def exact_weight(w) -> Fraction:
    """The decimal a weight was written as: 1.2 -> 6/5, not the nearest binary double."""
    if isinstance(w, Fraction):
        return w
    if isinstance(w, (int, np.integer)):
        return Fraction(int(w))
    return Fraction(repr(float(w)))


class _Voter:
    def __init__(self, weights: Sequence, threshold=DEFAULT_THRESHOLD):
        fr = [exact_weight(w) for w in weights]
        if any(w < 0 for w in fr):
            raise ValidationError("weights must be >= 0")
        if sum(fr) <= 0:
            raise ValidationError("at least one weight must be positive")
        t = exact_weight(threshold)
        scale = lcm(*(w.denominator for w in fr))
        self.iw = [int(w * scale) for w in fr]
        self.num, self.den = t.numerator, t.denominator
        self.total = sum(self.iw)
        self.use_int = max(self.total * self.den, self.num * self.total) < _INT64_LIMIT
        self.fw = np.asarray([float(w) for w in fr])
        self.ft = float(t)

    def __call__(self, stack: np.ndarray) -> np.ndarray:
        # stack: (k, H, W) of {0, 1}
        if self.use_int:
            votes = np.tensordot(np.asarray(self.iw, dtype=np.int64),
                                 stack.astype(np.int64), axes=1)
            return (votes * self.den > self.num * self.total).astype(np.uint8)
        votes = np.tensordot(self.fw, stack.astype(np.float64), axes=1)
        return (votes > self.ft * self.fw.sum()).astype(np.uint8)


def selective_average(masks_with_weights: Sequence[Tuple[np.ndarray, float]],
                      threshold: float = DEFAULT_THRESHOLD) -> np.ndarray:
    if not masks_with_weights:
        raise ValidationError("selective_average needs at least one mask")
    masks = [as_binary_mask(m) for m, _ in masks_with_weights]
    shape = masks[0].shape
    for m in masks[1:]:
        if m.shape != shape:
            raise ValidationError(f"mask shapes differ: {m.shape} vs {shape}")
    voter = _Voter([w for _, w in masks_with_weights], threshold)
    return voter(np.stack(masks))


def ensemble_run(sources: Union[Sequence[PredictionSource], Mapping[str, PredictionSource]],
                 config: WeightConfig, source_id: str = "") -> PredictionSource:
    """Fuse the sources named (with positive weight) in ``config``; others are ignored."""
    if isinstance(sources, Mapping):
        by_id = dict(sources)
    else:
        by_id = {s.source_id: s for s in sources}
    active = config.active
    unknown = sorted(set(active) - set(by_id))
    if unknown:
        raise ValidationError(f"weight config names unknown sources: {unknown}")
    ids = sorted(active)
    chosen = [by_id[i] for i in ids]

    keys = set().union(*(s.frame_keys() for s in chosen))
    for s in chosen:
        missing = sorted(keys - s.frame_keys())
        if missing:
            shown = ", ".join(f"{v}/{e}/{f}" for v, e, f in missing[:10])
            raise ValidationError(f"source {s.source_id} is missing {len(missing)} "
                                  f"frames: {shown}{', ...' if len(missing) > 10 else ''}")

    voter = _Voter([active[i] for i in ids], config.threshold)
    out: Dict[str, Dict[str, List[np.ndarray]]] = {}
    for vid, eid in chosen[0].keys():
        seqs = [s.masks[vid][eid] for s in chosen]
        fused = []
        for f in range(len(seqs[0])):
            frame = [as_binary_mask(seq[f]) for seq in seqs]
            if any(m.shape != frame[0].shape for m in frame):
                raise ValidationError(f"{vid}/{eid}/{f}: mask shapes differ across sources")
            fused.append(voter(np.stack(frame)))
        out.setdefault(vid, {})[eid] = fused
    return PredictionSource(source_id or config.name or "ensemble", out, 1.0)
