"""Keyframe-guided editing support: conditional-input assembly, long-video
clip chaining, and the iterative-edit cost model.

This module never calls an editor. It prepares and validates the conditional
inputs any external editing model (or a test stub) consumes: the first frame
stays an unmasked keyframe with an all-zero mask, every later frame is masked.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from vividforge.core import FrameSequence, MaskSequence, apply_mask, ensure_paired
from vividforge.errors import (
    LengthMismatchError,
    NonPositiveAttemptsError,
    ResolutionMismatchError,
)

DEFAULT_CLIP_LENGTH = 49


@dataclass(frozen=True)
class KiveConditional:
    """Masked clip whose first frame is a full keyframe with a zero mask."""

    frames: FrameSequence
    masks: MaskSequence
    caption: str

    def __post_init__(self):
        ensure_paired(self.frames, self.masks)
        if self.masks.masks[0].any():
            raise ValueError("first mask must be all-zero")


def assemble_kive_conditional(
    source: FrameSequence,
    masks: MaskSequence,
    keyframe: np.ndarray,
    caption: str,
) -> KiveConditional:
    """Build the conditional input: keyframe in slot 0, masked frames after.

    In training mode the keyframe is the source's own first frame; at
    inference it is an edited keyframe. Idempotent in slot 0: reassembling
    with the same keyframe changes nothing.
    """
    ensure_paired(source, masks)
    if keyframe.shape != source.frames.shape[1:]:
        raise ResolutionMismatchError(
            f"keyframe shape {keyframe.shape} != frame shape {source.frames.shape[1:]}"
        )
    masked = apply_mask(source, masks)
    frames = masked.frames.copy()
    frames[0] = keyframe
    out_masks = masks.masks.copy()
    out_masks[0] = 0
    return KiveConditional(
        frames=FrameSequence(frames, source.fps, source.source_id),
        masks=MaskSequence(out_masks),
        caption=caption,
    )


@dataclass(frozen=True)
class ClipChain:
    """Inclusive clip boundaries; consecutive clips share exactly one frame."""

    clip_length: int
    boundaries: tuple[tuple[int, int], ...]

    def __post_init__(self):
        for (s0, e0), (s1, _) in zip(self.boundaries, self.boundaries[1:]):
            if s1 != e0:
                raise ValueError("consecutive clips must share exactly one frame")

    def covers(self, total_frames: int) -> bool:
        if not self.boundaries:
            return total_frames == 0
        return self.boundaries[0][0] == 0 and self.boundaries[-1][1] == total_frames - 1


def chain_long_video(total_frames: int, clip_length: int = DEFAULT_CLIP_LENGTH) -> ClipChain:
    """Split a long video into overlapping clips for keyframe propagation.

    Each clip after the first starts at the previous clip's last frame, so the
    edited last frame can serve as the next clip's keyframe.
    """
    if total_frames < 1:
        raise LengthMismatchError("need at least one frame")
    if clip_length < 2:
        raise ValueError(f"clip_length must be >= 2, got {clip_length}")
    step = clip_length - 1
    boundaries = []
    start = 0
    while True:
        end = min(start + step, total_frames - 1)
        boundaries.append((start, end))
        if end >= total_frames - 1:
            break
        start = end
    return ClipChain(clip_length=clip_length, boundaries=tuple(boundaries))


@dataclass(frozen=True)
class CostModel:
    """Inference cost per keyframe edit and per clip edit, in PFLOPs."""

    c_im: float = 1.5
    c_vid: float = 17.1

    def __post_init__(self):
        if self.c_im <= 0 or self.c_vid <= 0:
            raise ValueError("costs must be positive")


def editing_cost(n_attempts: int, mode: str, cm: CostModel = CostModel()) -> float:
    """Total cost of reaching a satisfying edit in ``n_attempts`` tries.

    direct: every attempt re-edits the whole clip -> N * c_vid.
    kive:   attempts edit only the keyframe, then one propagation pass
            -> N * c_im + c_vid.
    """
    if n_attempts < 1:
        raise NonPositiveAttemptsError(f"n_attempts must be >= 1, got {n_attempts}")
    if mode == "direct":
        return n_attempts * cm.c_vid
    if mode == "kive":
        return n_attempts * cm.c_im + cm.c_vid
    raise ValueError(f"unknown mode {mode!r}")
