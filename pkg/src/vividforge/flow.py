"""Optical flow estimation, flow-based mask warping, and deletion-mask propagation.

The built-in estimator is deliberately simple: 3-level coarse-to-fine integer
block matching (8x8 blocks, +/-4 px search per level, SAD cost, bilinear flow
upsampling between levels, 3x3 block-median outlier suppression per level).
It acts as the test oracle and fallback; a higher-accuracy flow backend plugs
in through the perception gateway.
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Callable, Union

import numpy as np

from vividforge import kernels
from vividforge.core import FrameSequence, MaskSequence
from vividforge.errors import (
    DonorTooShortError,
    EmptyMaskError,
    ResolutionMismatchError,
    ShapeMismatchError,
)
from vividforge.geometry import bounding_box, scale_mask

PYRAMID_LEVELS = 3
BLOCK_SIZE = 8
SEARCH_RADIUS = 4

FLOW_MAGIC = b"VFLO"
FLOW_VERSION = 1
FLOW_FIXED_POINT = 64  # sidecar stores flow * 64 as int16 (1/64 px resolution)

FlowFunction = Callable[[np.ndarray, np.ndarray], np.ndarray]


def validate_flow(flow: np.ndarray, width: int, height: int) -> np.ndarray:
    """Check a flow field: shape (H, W, 2), finite, magnitude <= max(W, H)."""
    flow = np.asarray(flow, dtype=np.float32)
    if flow.shape != (height, width, 2):
        raise ShapeMismatchError(f"flow must be {(height, width, 2)}, got {flow.shape}")
    if not np.isfinite(flow).all():
        raise ShapeMismatchError("flow contains non-finite values")
    limit = max(width, height)
    if np.abs(flow).max(initial=0.0) > limit:
        raise ShapeMismatchError(f"flow magnitude exceeds {limit}")
    return flow


# -- sidecar format ----------------------------------------------------------

def write_flow_sidecar(path: Union[str, Path], flow: np.ndarray) -> None:
    """Write a flow field as 16-bit fixed point (1/64 px), little-endian."""
    h, w = flow.shape[0], flow.shape[1]
    quantized = np.clip(
        np.rint(np.asarray(flow, dtype=np.float64) * FLOW_FIXED_POINT),
        -32768,
        32767,
    ).astype("<i2")
    with open(path, "wb") as fh:
        fh.write(FLOW_MAGIC)
        fh.write(struct.pack("<BII", FLOW_VERSION, h, w))
        fh.write(quantized.tobytes())


def read_flow_sidecar(path: Union[str, Path]) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != FLOW_MAGIC:
            raise ValueError(f"{path}: not a flow sidecar file")
        version, h, w = struct.unpack("<BII", fh.read(9))
        if version != FLOW_VERSION:
            raise ValueError(f"{path}: unsupported flow sidecar version {version}")
        data = np.frombuffer(fh.read(h * w * 2 * 2), dtype="<i2")
    if data.size != h * w * 2:
        raise ValueError(f"{path}: truncated flow sidecar")
    return (data.astype(np.float32) / FLOW_FIXED_POINT).reshape(h, w, 2)


# -- built-in estimator --------------------------------------------------------

def to_grayscale(frame: np.ndarray) -> np.ndarray:
    """Integer ITU-R 601 luma, identical across kernel backends."""
    r = frame[..., 0].astype(np.uint32)
    g = frame[..., 1].astype(np.uint32)
    b = frame[..., 2].astype(np.uint32)
    return ((299 * r + 587 * g + 114 * b) // 1000).astype(np.uint8)


def _halve(img: np.ndarray) -> np.ndarray:
    """2x downsample by averaging 2x2 cells (odd edges keep partial cells)."""
    h, w = img.shape
    nh, nw = (h + 1) // 2, (w + 1) // 2
    acc = np.zeros((nh, nw), dtype=np.uint32)
    cnt = np.zeros((nh, nw), dtype=np.uint32)
    for dy in (0, 1):
        for dx in (0, 1):
            part = img[dy::2, dx::2]
            acc[: part.shape[0], : part.shape[1]] += part
            cnt[: part.shape[0], : part.shape[1]] += 1
    return (acc // cnt).astype(np.uint8)


def _resize_bilinear(field: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resize of a (h, w, c) float field with half-pixel alignment."""
    h, w = field.shape[0], field.shape[1]
    ys = np.clip((np.arange(out_h) + 0.5) * (h / out_h) - 0.5, 0, h - 1)
    xs = np.clip((np.arange(out_w) + 0.5) * (w / out_w) - 0.5, 0, w - 1)
    y0 = np.floor(ys).astype(np.int64)
    x0 = np.floor(xs).astype(np.int64)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    fy = (ys - y0)[:, None, None]
    fx = (xs - x0)[None, :, None]
    top = field[y0][:, x0] * (1 - fx) + field[y0][:, x1] * fx
    bottom = field[y1][:, x0] * (1 - fx) + field[y1][:, x1] * fx
    return top * (1 - fy) + bottom * fy


def _blocks_to_pixels(block_flow: np.ndarray, h: int, w: int, block: int) -> np.ndarray:
    """Broadcast per-block (dx, dy) values to per-pixel resolution."""
    per_pixel = np.repeat(np.repeat(block_flow, block, axis=0), block, axis=1)
    return per_pixel[:h, :w].astype(np.float64)


def _median3x3(block_flow: np.ndarray) -> np.ndarray:
    """Per-component 3x3 median over the block grid, edges replicated.

    Suppresses isolated false locks from aliased coarse levels, which would
    otherwise put the next level's init outside its +/-4 recovery range.
    Windows always hold 9 values, so the median is an element: exact integers.
    """
    nby, nbx = block_flow.shape[0], block_flow.shape[1]
    padded = np.pad(block_flow, ((1, 1), (1, 1), (0, 0)), mode="edge")
    stacked = np.stack(
        [padded[dy : dy + nby, dx : dx + nbx] for dy in range(3) for dx in range(3)]
    )
    return np.median(stacked, axis=0).astype(np.int32)


def block_match_flow(frame_a: np.ndarray, frame_b: np.ndarray) -> np.ndarray:
    """Dense flow from frame_a to frame_b via coarse-to-fine block matching.

    Returns (H, W, 2) float32 with (dx, dy) per pixel. Deterministic:
    pure integer search with a fixed tie-break, plus shared float upsampling.
    """
    if frame_a.shape != frame_b.shape:
        raise ResolutionMismatchError(
            f"frame shapes differ: {frame_a.shape} vs {frame_b.shape}"
        )
    gray_a = to_grayscale(frame_a) if frame_a.ndim == 3 else frame_a.astype(np.uint8)
    gray_b = to_grayscale(frame_b) if frame_b.ndim == 3 else frame_b.astype(np.uint8)

    pyramid = [(gray_a, gray_b)]
    for _ in range(PYRAMID_LEVELS - 1):
        a, b = pyramid[-1]
        pyramid.append((_halve(a), _halve(b)))

    pixel_flow: np.ndarray | None = None
    for a, b in reversed(pyramid):
        h, w = a.shape
        nby = -(-h // BLOCK_SIZE)
        nbx = -(-w // BLOCK_SIZE)
        if pixel_flow is None:
            init = np.zeros((nby, nbx, 2), dtype=np.int32)
        else:
            upsampled = _resize_bilinear(pixel_flow * 2.0, h, w)
            centers_y = np.minimum(np.arange(nby) * BLOCK_SIZE + BLOCK_SIZE // 2, h - 1)
            centers_x = np.minimum(np.arange(nbx) * BLOCK_SIZE + BLOCK_SIZE // 2, w - 1)
            init = np.floor(upsampled[centers_y][:, centers_x] + 0.5).astype(np.int32)
        block_flow = kernels.block_match(a, b, init, BLOCK_SIZE, SEARCH_RADIUS)
        block_flow = _median3x3(block_flow)
        pixel_flow = _blocks_to_pixels(block_flow, h, w, BLOCK_SIZE)

    return pixel_flow.astype(np.float32)


# -- warping and propagation ---------------------------------------------------

def warp_mask(mask: np.ndarray, flow: np.ndarray) -> np.ndarray:
    """Forward-advect set pixels along the flow; close radius 1 to fill holes."""
    if flow.shape[:2] != mask.shape:
        raise ShapeMismatchError(
            f"mask {mask.shape} vs flow {flow.shape[:2]} resolution mismatch"
        )
    advected = kernels.warp_forward(mask, np.asarray(flow, dtype=np.float32))
    if not advected.any():
        return advected
    return kernels.closing_disk(advected, 1)


def propagate_by_flow(
    frames: FrameSequence,
    keyframe_mask: np.ndarray,
    flow_function: FlowFunction = block_match_flow,
) -> MaskSequence:
    """Chain frame-to-frame warps starting from the keyframe mask.

    Raises EmptyMaskError if the mask vanishes (all pixels advected off-frame);
    callers discard the sample in that case.
    """
    if keyframe_mask.shape != (frames.height, frames.width):
        raise ShapeMismatchError(
            f"keyframe mask {keyframe_mask.shape} does not match frames "
            f"{(frames.height, frames.width)}"
        )
    if not keyframe_mask.any():
        raise EmptyMaskError("keyframe mask is empty")
    masks = [np.ascontiguousarray(keyframe_mask, dtype=np.uint8)]
    for i in range(1, len(frames)):
        flow = flow_function(frames.frames[i - 1], frames.frames[i])
        flow = validate_flow(flow, frames.width, frames.height)
        warped = warp_mask(masks[-1], flow)
        if not warped.any():
            raise EmptyMaskError(f"mask vanished at frame {i}")
        masks.append(warped)
    return MaskSequence(np.stack(masks))


def propagate_by_copy(
    donor_masks: MaskSequence,
    offset: tuple[int, int],
    scale: float,
    target_len: int,
    target_resolution: tuple[int, int],
) -> MaskSequence:
    """Replay the donor's own trajectory under the paste-time transform.

    Each donor mask is scaled like the pasted keyframe mask and translated so
    the donor's first-frame bounding box lands at ``offset`` in the target
    frame. Pixels leaving the target frame are dropped (callers treat a large
    loss as an escape and discard the record).
    """
    if len(donor_masks) < target_len:
        raise DonorTooShortError(
            f"donor has {len(donor_masks)} masks, target needs {target_len}"
        )
    tw, th = target_resolution
    scaled_first = scale_mask(donor_masks.masks[0], scale)
    if not scaled_first.any():
        raise EmptyMaskError("donor mask vanished under scaling")
    sx0, sy0 = bounding_box(scaled_first)[:2]
    ty, tx = offset[0] - sy0, offset[1] - sx0
    out = []
    for i in range(target_len):
        scaled = scale_mask(donor_masks.masks[i], scale)
        placed = np.zeros((th, tw), dtype=np.uint8)
        ys, xs = np.nonzero(scaled)
        ny, nx = ys + ty, xs + tx
        keep = (ny >= 0) & (ny < th) & (nx >= 0) & (nx < tw)
        placed[ny[keep], nx[keep]] = 255
        out.append(placed)
    return MaskSequence(np.stack(out))


def copy_escape_fraction(
    donor_masks: MaskSequence, offset: tuple[int, int], scale: float, target_len: int,
    target_resolution: tuple[int, int],
) -> float:
    """Fraction of donor set pixels (worst frame) that fall outside the target."""
    tw, th = target_resolution
    scaled_first = scale_mask(donor_masks.masks[0], scale)
    sx0, sy0 = bounding_box(scaled_first)[:2]
    ty, tx = offset[0] - sy0, offset[1] - sx0
    worst = 0.0
    for i in range(target_len):
        scaled = scale_mask(donor_masks.masks[i], scale)
        ys, xs = np.nonzero(scaled)
        if ys.size == 0:
            return 1.0
        ny, nx = ys + ty, xs + tx
        keep = (ny >= 0) & (ny < th) & (nx >= 0) & (nx < tw)
        worst = max(worst, 1.0 - keep.sum() / ys.size)
    return worst
