"""Key frame compression: a clip becomes its key frame plus one g x g mosaic of the rest."""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Mapping, Sequence, Tuple

import numpy as np

from .core import Frame, SamplingPlan
from .errors import ValidationError


@dataclass(frozen=True)
class CompressedClip:
    key_frame: Frame
    compressed: Frame
    source_indices: Tuple[int, ...]

    def images(self) -> List[np.ndarray]:
        return [self.key_frame.pixels, self.compressed.pixels]


def tile_grid(frames: Sequence[Frame], g: int) -> np.ndarray:
    """Tile g*g frames row-major into a (g*H, g*W, 3) raster."""
    if g < 1 or len(frames) != g * g:
        raise ValidationError(f"tile_grid needs exactly g^2={g * g} frames, got {len(frames)}")
    H, W = frames[0].shape
    for f in frames:
        if f.shape != (H, W):
            raise ValidationError(f"frame {f.index} is {f.shape}, expected {(H, W)}")
    rows = [np.concatenate([f.pixels for f in frames[r * g:(r + 1) * g]], axis=1)
            for r in range(g)]
    return np.concatenate(rows, axis=0)


def grid_cell(grid: np.ndarray, g: int, r: int, k: int) -> np.ndarray:
    H, W = grid.shape[0] // g, grid.shape[1] // g
    return grid[r * H:(r + 1) * H, k * W:(k + 1) * W]


def _area_weights(n_in: int, n_out: int) -> np.ndarray:
    # fraction of input cell j covered by output cell i, normalised per output row
    scale = n_in / n_out
    edges_out = np.arange(n_out + 1) * scale
    lo = np.maximum(edges_out[:-1, None], np.arange(n_in)[None, :])
    hi = np.minimum(edges_out[1:, None], np.arange(1, n_in + 1)[None, :])
    w = np.clip(hi - lo, 0, None)
    return w / w.sum(axis=1, keepdims=True)


def resize_to(raster: np.ndarray, H: int, W: int) -> np.ndarray:
    """Area (box filter) resize to H x W with round-half-up.

    Integer downscale factors take an exact integer path: every output pixel is the
    rounded mean of its source block. Other ratios use fractional-overlap area weights.
    """
    if H < 1 or W < 1:
        raise ValidationError(f"resize target must be positive, got {H}x{W}")
    raster = np.asarray(raster)
    h, w = raster.shape[:2]
    if (h, w) == (H, W):
        return raster.copy()
    if h % H == 0 and w % W == 0:
        fy, fx = h // H, w // W
        n = fy * fx
        sums = raster.reshape(H, fy, W, fx, -1).astype(np.int64).sum(axis=(1, 3))
        out = (2 * sums + n) // (2 * n)
        return out.reshape((H, W) + raster.shape[2:]).astype(raster.dtype)
    wy, wx = _area_weights(h, H), _area_weights(w, W)
    flat = raster.reshape(h, w, -1).astype(np.float64)
    out = np.einsum("ih,hwc,jw->ijc", wy, flat, wx)
    out = np.floor(out + 0.5).clip(0, 255)
    return out.reshape((H, W) + raster.shape[2:]).astype(raster.dtype)


def compress_clip(clip_frames: Sequence[Frame], g: int) -> CompressedClip:
    if len(clip_frames) != g * g + 1:
        raise ValidationError(f"compress_clip needs c=g^2+1={g * g + 1} frames, "
                              f"got {len(clip_frames)}")
    key, rest = clip_frames[0], list(clip_frames[1:])
    H, W = key.shape
    grid = tile_grid(rest, g)
    compressed = Frame(rest[0].index, resize_to(grid, H, W))
    return CompressedClip(key, compressed, tuple(f.index for f in rest))


def compress_plan(plan: SamplingPlan, frames: "Sequence[Frame] | Mapping[int, Frame]"
                  ) -> List[CompressedClip]:
    """Compress every clip of a plan; ``frames`` is indexable by original frame index."""
    return [compress_clip([frames[i] for i in clip.member_indices], plan.g)
            for clip in plan.clips]


def segmenter_images(compressed: Sequence[CompressedClip]) -> List[np.ndarray]:
    """Flatten to the 2N-image sequence key_1, com_1, key_2, com_2, ..."""
    return [img for cc in compressed for img in cc.images()]
