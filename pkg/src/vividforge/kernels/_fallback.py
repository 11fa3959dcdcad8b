"""Pure-numpy kernel implementations.

Bit-identical to the compiled versions in ``_native.pyx``; the test suite
asserts parity. Selected at import time when the extension is unavailable
or ``VIVIDFORGE_PURE_PYTHON`` is set.
"""

from __future__ import annotations

import math

import numpy as np

_SENTINEL = np.int64(1) << 62


def dilate_disk(mask: np.ndarray, radius: int) -> np.ndarray:
    """Binary dilation by the discrete disk {(dx, dy): dx*dx + dy*dy <= r*r}.

    Decomposed into incremental horizontal dilations OR-ed together with row
    shifts: O(H*W*r) instead of O(H*W*r^2).
    """
    h, w = mask.shape
    src = mask > 0
    if radius == 0:
        return np.where(src, 255, 0).astype(np.uint8)
    out = np.zeros((h, w), dtype=bool)
    widths = [math.isqrt(radius * radius - dy * dy) for dy in range(radius + 1)]
    by_width: dict[int, list[int]] = {}
    for dy, width in enumerate(widths):
        by_width.setdefault(width, []).append(dy)
    run = src.copy()
    for width in range(radius + 1):
        if width > 0:
            run[:, width:] |= src[:, :-width]
            run[:, :-width] |= src[:, width:]
        for dy in by_width.get(width, ()):
            if dy >= h:
                continue
            out[dy:, :] |= run[: h - dy, :]
            if dy > 0:
                out[: h - dy, :] |= run[dy:, :]
    return np.where(out, 255, 0).astype(np.uint8)


def _sad_block_sums(
    prev: np.ndarray,
    nxt: np.ndarray,
    ty: int,
    tx: int,
    block: int,
    nby: int,
    nbx: int,
) -> np.ndarray:
    """SAD of every block against its (ty, tx)-displaced window, sentinel where
    the displaced window leaves the frame."""
    h, w = prev.shape
    costs = np.full(nby * nbx, _SENTINEL, dtype=np.int64)
    ry0, ry1 = max(0, -ty), h - max(0, ty)
    rx0, rx1 = max(0, -tx), w - max(0, tx)
    if ry0 >= ry1 or rx0 >= rx1:
        return costs
    diff = np.zeros((h, w), dtype=np.int64)
    diff[ry0:ry1, rx0:rx1] = np.abs(
        prev[ry0:ry1, rx0:rx1].astype(np.int64)
        - nxt[ry0 + ty : ry1 + ty, rx0 + tx : rx1 + tx].astype(np.int64)
    )
    integral = np.zeros((h + 1, w + 1), dtype=np.int64)
    np.cumsum(np.cumsum(diff, axis=0), axis=1, out=integral[1:, 1:])
    y0 = np.arange(nby) * block
    y1 = np.minimum(y0 + block, h)
    x0 = np.arange(nbx) * block
    x1 = np.minimum(x0 + block, w)
    sums = (
        integral[np.ix_(y1, x1)]
        - integral[np.ix_(y0, x1)]
        - integral[np.ix_(y1, x0)]
        + integral[np.ix_(y0, x0)]
    )
    valid = ((y0 + ty >= 0) & (y1 + ty <= h))[:, None] & (
        (x0 + tx >= 0) & (x1 + tx <= w)
    )[None, :]
    return np.where(valid, sums, _SENTINEL).reshape(-1)


def block_match(
    prev: np.ndarray,
    nxt: np.ndarray,
    init: np.ndarray,
    block: int,
    radius: int,
) -> np.ndarray:
    """Integer block displacement search.

    For each block, scans displacements init + (dx, dy) with dy, dx in
    [-radius, radius] (dy outer, dx inner) and keeps the first strict SAD
    minimum; blocks with no in-frame candidate keep their init. ``init`` and
    the result hold (dx, dy) total displacements per block.
    """
    h, w = prev.shape
    nby, nbx = init.shape[0], init.shape[1]
    init_flat = init.reshape(-1, 2).astype(np.int64)
    candidates = [
        (dy, dx)
        for dy in range(-radius, radius + 1)
        for dx in range(-radius, radius + 1)
    ]
    cost = np.full((len(candidates), nby * nbx), _SENTINEL, dtype=np.int64)
    cache: dict[tuple[int, int], np.ndarray] = {}
    uniq, inverse = np.unique(init_flat, axis=0, return_inverse=True)
    for gi in range(uniq.shape[0]):
        ix, iy = int(uniq[gi, 0]), int(uniq[gi, 1])
        members = np.nonzero(inverse == gi)[0]
        for k, (dy, dx) in enumerate(candidates):
            key = (iy + dy, ix + dx)
            if key not in cache:
                cache[key] = _sad_block_sums(prev, nxt, key[0], key[1], block, nby, nbx)
            cost[k, members] = cache[key][members]
    best_k = np.argmin(cost, axis=0)
    best_cost = cost[best_k, np.arange(nby * nbx)]
    offsets = np.array([(dx, dy) for (dy, dx) in candidates], dtype=np.int64)
    result = init_flat.copy()
    valid = best_cost < _SENTINEL
    result[valid] += offsets[best_k[valid]]
    return result.reshape(nby, nbx, 2).astype(np.int32)


def warp_forward(mask: np.ndarray, flow: np.ndarray) -> np.ndarray:
    """Advect each set pixel by its rounded flow vector; out-of-frame targets drop.

    Rounding is floor(v + 0.5) so halves round up, matching the compiled kernel.
    """
    h, w = mask.shape
    out = np.zeros((h, w), dtype=np.uint8)
    ys, xs = np.nonzero(mask)
    if ys.size == 0:
        return out
    tx = xs + np.floor(flow[ys, xs, 0].astype(np.float64) + 0.5).astype(np.int64)
    ty = ys + np.floor(flow[ys, xs, 1].astype(np.float64) + 0.5).astype(np.int64)
    keep = (tx >= 0) & (tx < w) & (ty >= 0) & (ty < h)
    out[ty[keep], tx[keep]] = 255
    return out
