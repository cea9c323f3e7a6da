"""Region similarity J, boundary F-measure F, and J&F."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import ndimage

from .core import PredictionSource, as_binary_mask
from .errors import ValidationError


def _pair(pred, gt):
    pred, gt = as_binary_mask(pred), as_binary_mask(gt)
    if pred.shape != gt.shape:
        raise ValidationError(f"prediction {pred.shape} and ground truth {gt.shape} differ")
    return pred.astype(bool), gt.astype(bool)


def frame_iou(pred, gt) -> float:
    p, g = _pair(pred, gt)
    union = np.count_nonzero(p | g)
    if union == 0:
        return 1.0
    return np.count_nonzero(p & g) / union


def jaccard(pred: Sequence, gt: Sequence) -> float:
    """Mean per-frame IoU; a frame where both masks are empty scores 1."""
    if len(pred) != len(gt):
        raise ValidationError(f"{len(pred)} predicted frames vs {len(gt)} ground-truth frames")
    if not gt:
        raise ValidationError("empty sequence")
    return float(np.mean([frame_iou(p, g) for p, g in zip(pred, gt)]))


def boundary(mask) -> np.ndarray:
    """Foreground pixels with a 4-neighbour that is background or off the image."""
    m = as_binary_mask(mask).astype(bool)
    padded = np.pad(m, 1, constant_values=False)
    interior = (padded[:-2, 1:-1] & padded[2:, 1:-1] & padded[1:-1, :-2] & padded[1:-1, 2:])
    return m & ~interior


def _near(b: np.ndarray, tol: int) -> np.ndarray:
    # pixels within Chebyshev distance tol of any pixel in b
    if tol == 0:
        return b
    return ndimage.binary_dilation(b, structure=np.ones((2 * tol + 1, 2 * tol + 1), bool))


def boundary_f(pred, gt, tol: int) -> float:
    if tol < 0:
        raise ValidationError(f"tolerance must be >= 0, got {tol}")
    p, g = _pair(pred, gt)
    pb, gb = boundary(p), boundary(g)
    n_p, n_g = np.count_nonzero(pb), np.count_nonzero(gb)
    if n_p == 0 and n_g == 0:
        return 1.0
    if n_p == 0 or n_g == 0:
        return 0.0
    precision = np.count_nonzero(pb & _near(gb, tol)) / n_p
    recall = np.count_nonzero(gb & _near(pb, tol)) / n_g
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def default_tolerance(height: int, width: int) -> int:
    """max(1, round(0.008 * diagonal)), rounding half up."""
    return max(1, math.floor(0.008 * math.hypot(height, width) + 0.5))


def jf_score(j: float, f: float) -> float:
    return (j + f) / 2


@dataclass(frozen=True)
class SequenceScore:
    J: float
    F: float

    @property
    def JF(self) -> float:
        return jf_score(self.J, self.F)


@dataclass
class EvalResult:
    per_sequence: Dict[Tuple[str, str], SequenceScore] = field(default_factory=dict)
    J: float = 0.0
    F: float = 0.0

    @property
    def JF(self) -> float:
        return jf_score(self.J, self.F)

    def to_dict(self) -> dict:
        return {
            "J": self.J, "F": self.F, "JF": self.JF,
            "num_sequences": len(self.per_sequence),
            "sequences": [{"video_id": v, "exp_id": e, "J": s.J, "F": s.F, "JF": s.JF}
                          for (v, e), s in sorted(self.per_sequence.items())],
        }

    def to_text(self) -> str:
        rows = [f"{'video/exp':<32} {'J&F':>7} {'J':>7} {'F':>7}"]
        for (v, e), s in sorted(self.per_sequence.items()):
            rows.append(f"{v + '/' + e:<32} {100 * s.JF:7.2f} {100 * s.J:7.2f} {100 * s.F:7.2f}")
        rows.append(f"{'MEAN':<32} {100 * self.JF:7.2f} {100 * self.J:7.2f} {100 * self.F:7.2f}")
        return "\n".join(rows) + "\n"


TolRule = Union[int, Callable[[int, int], int], None]


def evaluate(pred_source: PredictionSource, gt_source: PredictionSource,
             tol_rule: TolRule = None) -> EvalResult:
    """Score every (video, expression) of the ground truth; unweighted global means."""
    pred_keys = set(pred_source.keys())
    missing = [k for k in gt_source.keys() if k not in pred_keys]
    if missing:
        names = ", ".join(f"{v}/{e}" for v, e in missing)
        raise ValidationError(f"{pred_source.source_id}: missing predictions for {names}")
    if not gt_source.keys():
        raise ValidationError(f"{gt_source.source_id}: ground truth is empty")
    rule = tol_rule if tol_rule is not None else default_tolerance

    result = EvalResult()
    for v, e in gt_source.keys():
        pred, gt = pred_source.masks[v][e], gt_source.masks[v][e]
        if len(pred) != len(gt):
            raise ValidationError(f"{v}/{e}: {len(pred)} predicted frames, {len(gt)} expected")
        h, w = np.asarray(gt[0]).shape
        tol = rule if isinstance(rule, int) else rule(h, w)
        j = jaccard(pred, gt)
        f = float(np.mean([boundary_f(p, g, tol) for p, g in zip(pred, gt)]))
        result.per_sequence[(v, e)] = SequenceScore(j, f)
    result.J = float(np.mean([s.J for s in result.per_sequence.values()]))
    result.F = float(np.mean([s.F for s in result.per_sequence.values()]))
    return result
