"""Slow, obviously-correct reference implementations used to check the fast paths.

Nothing here imports the code under test.
"""
from fractions import Fraction
from math import floor


def linspace_oracle(start, length, count):
    if count == 1:
        return [start]
    return [floor(start + Fraction(k * (length - 1), count - 1) + Fraction(1, 2))
            for k in range(count)]


def wrap_loop_oracle(T_ori, T):
    out = []
    i = 0
    while len(out) < T:
        out.append(i - (i // T_ori) * T_ori)
        i += 1
    return out


def top_k_oracle(scores, k):
    """Repeatedly take the best remaining frame, lowest index on ties."""
    remaining = list(range(len(scores)))
    picked = []
    for _ in range(k):
        best = remaining[0]
        for i in remaining:
            if scores[i] > scores[best]:
                best = i
        picked.append(best)
        remaining.remove(best)
    return sorted(picked)


def box_filter_oracle(raster, H, W):
    """Round-half-up mean of each integer block, pixel by pixel."""
    h, w, ch = len(raster), len(raster[0]), len(raster[0][0])
    fy, fx = h // H, w // W
    out = [[[0] * ch for _ in range(W)] for _ in range(H)]
    for i in range(H):
        for j in range(W):
            for c in range(ch):
                s = 0
                for y in range(i * fy, (i + 1) * fy):
                    for x in range(j * fx, (j + 1) * fx):
                        s += int(raster[y][x][c])
                out[i][j][c] = floor(Fraction(s, fy * fx) + Fraction(1, 2))
    return out


def weighted_vote_oracle(masks, weights, threshold=Fraction(1, 2)):
    ws = [Fraction(repr(float(w))) if not isinstance(w, int) else Fraction(w) for w in weights]
    total = sum(ws)
    h, w = len(masks[0]), len(masks[0][0])
    out = [[0] * w for _ in range(h)]
    for y in range(h):
        for x in range(w):
            s = sum(wi * int(m[y][x]) for wi, m in zip(ws, masks))
            out[y][x] = 1 if s / total > threshold else 0
    return out


def iou_oracle(pred, gt):
    inter = union = 0
    for row_p, row_g in zip(pred, gt):
        for p, g in zip(row_p, row_g):
            inter += bool(p) and bool(g)
            union += bool(p) or bool(g)
    return 1.0 if union == 0 else inter / union


def boundary_pixels_oracle(mask):
    h, w = len(mask), len(mask[0])
    pts = []
    for y in range(h):
        for x in range(w):
            if not mask[y][x]:
                continue
            for dy, dx in ((-1, 0), (1, 0), (0, -1), (0, 1)):
                yy, xx = y + dy, x + dx
                if not (0 <= yy < h and 0 <= xx < w) or not mask[yy][xx]:
                    pts.append((y, x))
                    break
    return pts


def boundary_f_oracle(pred, gt, tol):
    pb, gb = boundary_pixels_oracle(pred), boundary_pixels_oracle(gt)
    if not pb and not gb:
        return 1.0
    if not pb or not gb:
        return 0.0

    def matched(src, dst):
        n = 0
        for (y, x) in src:
            if any(max(abs(y - v), abs(x - u)) <= tol for (v, u) in dst):
                n += 1
        return n

    p = matched(pb, gb) / len(pb)
    r = matched(gb, pb) / len(gb)
    return 0.0 if p + r == 0 else 2 * p * r / (p + r)


def column_major_runs_oracle(mask):
    h, w = len(mask), len(mask[0])
    seq = [int(mask[y][x]) for x in range(w) for y in range(h)]
    counts, current, run = [], 0, 0
    for v in seq:
        if v == current:
            run += 1
        else:
            counts.append(run)
            current, run = v, 1
    counts.append(run)
    return counts
