"""Mask augmentation operators, size filtering, entity cropping, and mask pasting.

All operators preserve binarity and resolution and are pure given their seed.
The monotonicity chain mask <= hull(mask) <= box(mask) holds pixelwise, and
expand always returns a superset of its input.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np
from PIL import Image

from vividforge import kernels
from vividforge.core import (
    AugmentationKind,
    FrameSequence,
    MaskSequence,
    ensure_paired,
)
from vividforge.errors import EmptyMaskError, NoFeasiblePlacementError

CROP_PADDING = 8

# Pasted masks may overhang irregular background regions by at most this much.
PASTE_INSIDE_FRACTION = 0.95
PASTE_SCALE_STEP = 0.8
PASTE_MAX_ATTEMPTS = 20


@dataclass(frozen=True)
class AreaFilterConfig:
    """Accept masks whose per-frame coverage stays inside [min, max] of the frame."""

    min_fraction: float = 0.005
    max_fraction: float = 0.60

    def __post_init__(self):
        if not (0 < self.min_fraction < self.max_fraction < 1):
            raise ValueError(
                f"need 0 < min < max < 1, got ({self.min_fraction}, {self.max_fraction})"
            )


def derive_seed(base: int, *parts) -> int:
    """Stable 63-bit sub-seed from a base seed and arbitrary string/int parts."""
    digest = hashlib.sha256(
        ("|".join([str(base)] + [str(p) for p in parts])).encode("utf-8")
    ).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def _require_nonempty(mask: np.ndarray) -> None:
    if not mask.any():
        raise EmptyMaskError("operation requires at least one set pixel")


def mask_area(mask: np.ndarray) -> int:
    return int(np.count_nonzero(mask))


def expand_radius(mask: np.ndarray, seed: int) -> int:
    """Dilation radius: max(2, round(u * 0.2 * sqrt(area))), u ~ U[0.5, 1.5]."""
    _require_nonempty(mask)
    u = np.random.default_rng(seed).uniform(0.5, 1.5)
    return max(2, int(round(u * 0.2 * math.sqrt(mask_area(mask)))))


def expand(mask: np.ndarray, seed: int, radius: int | None = None) -> np.ndarray:
    """Randomly enlarge the mask while preserving its shape (disk dilation).

    ``radius`` overrides the seeded draw so a sequence can share one radius.
    """
    _require_nonempty(mask)
    if radius is None:
        radius = expand_radius(mask, seed)
    return kernels.dilate_disk(mask, radius)


def hull(mask: np.ndarray) -> np.ndarray:
    """Rasterized convex hull of all set pixel centers. Idempotent."""
    _require_nonempty(mask)
    ys, xs = np.nonzero(mask)
    points = np.stack([xs, ys], axis=1).astype(np.int64)
    vertices = _convex_hull(points)
    out = np.zeros_like(mask)
    x0, y0 = vertices.min(axis=0)
    x1, y1 = vertices.max(axis=0)
    gx, gy = np.meshgrid(np.arange(x0, x1 + 1), np.arange(y0, y1 + 1))
    inside = np.ones(gx.shape, dtype=bool)
    n = len(vertices)
    for i in range(n):
        ax, ay = vertices[i]
        bx, by = vertices[(i + 1) % n]
        # counter-clockwise polygon: inside means cross >= 0 for every edge
        cross = (bx - ax) * (gy - ay) - (by - ay) * (gx - ax)
        inside &= cross >= 0
    out[y0 : y1 + 1, x0 : x1 + 1] = np.where(inside, 255, 0).astype(np.uint8)
    return out


def _convex_hull(points: np.ndarray) -> np.ndarray:
    """Monotone-chain hull, counter-clockwise in (x, y) with y growing down."""
    pts = np.unique(points, axis=0)
    if len(pts) == 1:
        return pts
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    pts = pts[order]

    def half(iterable):
        chain: list[np.ndarray] = []
        for p in iterable:
            while len(chain) >= 2:
                o, a = chain[-2], chain[-1]
                if (a[0] - o[0]) * (p[1] - o[1]) - (a[1] - o[1]) * (p[0] - o[0]) <= 0:
                    chain.pop()
                else:
                    break
            chain.append(p)
        return chain

    lower = half(pts)
    upper = half(pts[::-1])
    return np.array(lower[:-1] + upper[:-1], dtype=np.int64)


def box(mask: np.ndarray) -> np.ndarray:
    """Filled axis-aligned bounding rectangle of the set pixels. Idempotent."""
    _require_nonempty(mask)
    ys, xs = np.nonzero(mask)
    out = np.zeros_like(mask)
    out[ys.min() : ys.max() + 1, xs.min() : xs.max() + 1] = 255
    return out


def bounding_box(mask: np.ndarray) -> tuple[int, int, int, int]:
    """(x0, y0, x1, y1) half-open bounding box of the set pixels."""
    _require_nonempty(mask)
    ys, xs = np.nonzero(mask)
    return int(xs.min()), int(ys.min()), int(xs.max()) + 1, int(ys.max()) + 1


def augment(mask_seq: MaskSequence, kind: AugmentationKind, seed: int) -> MaskSequence:
    """Apply one augmentation kind per frame.

    Compositions run hull/box first, then expand. The expand radius is drawn
    once from the first frame (post hull/box) and shared across the sequence
    so the dilation is temporally consistent.
    """
    if kind == AugmentationKind.NONE:
        for frame in mask_seq.masks:
            _require_nonempty(frame)
        return mask_seq

    base_op = {
        AugmentationKind.EXPAND: None,
        AugmentationKind.HULL: hull,
        AugmentationKind.BOX: box,
        AugmentationKind.HULL_EXPAND: hull,
        AugmentationKind.BOX_EXPAND: box,
    }[kind]
    with_expand = kind in (
        AugmentationKind.EXPAND,
        AugmentationKind.HULL_EXPAND,
        AugmentationKind.BOX_EXPAND,
    )

    shaped = []
    for frame in mask_seq.masks:
        _require_nonempty(frame)
        shaped.append(base_op(frame) if base_op else frame.copy())

    if with_expand:
        radius = expand_radius(shaped[0], seed)
        shaped = [expand(frame, seed, radius=radius) for frame in shaped]
    return MaskSequence(np.stack(shaped))


def area_filter(mask_seq: MaskSequence, cfg: AreaFilterConfig) -> bool:
    """Accept iff every frame's coverage is within [min_fraction, max_fraction]."""
    total = mask_seq.width * mask_seq.height
    for frame in mask_seq.masks:
        fraction = mask_area(frame) / total
        if not (cfg.min_fraction <= fraction <= cfg.max_fraction):
            return False
    return True


def crop_entity(frames: FrameSequence, masks: MaskSequence) -> FrameSequence:
    """Erase everything outside the mask, then crop to one shared window.

    The window is the union bounding box of the whole mask sequence padded by
    8 pixels and clamped to the frame, so the captioner sees a temporally
    stable crop.
    """
    ensure_paired(frames, masks)
    union = masks.masks.max(axis=0)
    _require_nonempty(union)
    for frame in masks.masks:
        _require_nonempty(frame)
    x0, y0, x1, y1 = bounding_box(union)
    x0 = max(0, x0 - CROP_PADDING)
    y0 = max(0, y0 - CROP_PADDING)
    x1 = min(frames.width, x1 + CROP_PADDING)
    y1 = min(frames.height, y1 + CROP_PADDING)
    kept = np.where(
        (masks.masks[..., None] > 0), frames.frames, np.uint8(0)
    )
    cropped = kept[:, y0:y1, x0:x1, :]
    return FrameSequence(np.ascontiguousarray(cropped), frames.fps, frames.source_id)


@dataclass(frozen=True)
class PasteResult:
    """Placed donor mask in target-frame coordinates plus the chosen transform."""

    mask: np.ndarray
    offset: tuple[int, int]  # (y, x) of the placed donor bounding box
    scale: float


def scale_mask(mask: np.ndarray, scale: float) -> np.ndarray:
    """Nearest-neighbour rescale of a full-frame binary raster."""
    if scale == 1.0:
        return mask.copy()
    h, w = mask.shape
    nw = max(1, int(round(w * scale)))
    nh = max(1, int(round(h * scale)))
    img = Image.fromarray(mask, mode="L").resize((nw, nh), Image.NEAREST)
    return np.asarray(img, dtype=np.uint8)


def _feasible_offsets(
    region: np.ndarray, shape: np.ndarray, min_inside: float
) -> np.ndarray:
    """All (y, x) placements keeping >= min_inside of the shape on the region.

    Counts hits with an FFT cross-correlation over the valid placement window;
    counts are integers so rounding the float result is exact.
    """
    rh, rw = region.shape
    sh, sw = shape.shape
    if sh > rh or sw > rw:
        return np.empty((0, 2), dtype=np.int64)
    total = int(np.count_nonzero(shape))
    fh, fw = rh + sh - 1, rw + sw - 1
    fa = np.fft.rfft2((region > 0).astype(np.float64), s=(fh, fw))
    fb = np.fft.rfft2(shape[::-1, ::-1].astype(np.float64) / 255.0, s=(fh, fw))
    corr = np.fft.irfft2(fa * fb, s=(fh, fw))
    hits = np.rint(corr[sh - 1 : rh, sw - 1 : rw]).astype(np.int64)
    feasible = hits >= min_inside * total - 1e-9
    ys, xs = np.nonzero(feasible)
    return np.stack([ys, xs], axis=1)


def paste_mask(
    background_region: np.ndarray, donor_mask: np.ndarray, seed: int
) -> PasteResult:
    """Place the donor shape inside the background region.

    Tries scale 1.0 first, then repeated 0.8x downscales; at each scale the
    placement is drawn uniformly among all offsets that keep at least 95% of
    the shape's set pixels on the region. Deterministic given inputs and seed.
    """
    _require_nonempty(background_region)
    _require_nonempty(donor_mask)
    rng = np.random.default_rng(seed)
    for attempt in range(PASTE_MAX_ATTEMPTS):
        scale = PASTE_SCALE_STEP**attempt
        scaled = scale_mask(donor_mask, scale)
        if not scaled.any():
            break
        x0, y0, x1, y1 = bounding_box(scaled)
        shape = scaled[y0:y1, x0:x1]
        offsets = _feasible_offsets(background_region, shape, PASTE_INSIDE_FRACTION)
        if len(offsets) == 0:
            continue
        oy, ox = offsets[int(rng.integers(len(offsets)))]
        placed = np.zeros_like(background_region)
        placed[oy : oy + shape.shape[0], ox : ox + shape.shape[1]] = shape
        return PasteResult(mask=placed, offset=(int(oy), int(ox)), scale=scale)
    raise NoFeasiblePlacementError(
        f"no placement after {PASTE_MAX_ATTEMPTS} scale attempts"
    )
