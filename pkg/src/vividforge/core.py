"""Core sample data model: frame/mask sequences, records, and the masked-video identity.

An image is represented as a one-frame sequence; all multiplicities and
invariants below hold uniformly for images and videos.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from enum import Enum
from fractions import Fraction
from typing import Optional

import numpy as np

from vividforge.errors import (
    LengthMismatchError,
    ResolutionMismatchError,
    SchemaViolationError,
)

SCHEMA_VERSION = "vivid-forge/1"

# Every deletion record carries exactly this caption.
DELETION_CAPTION = "Remove objects and generate areas that blend with the background."


class Task(str, Enum):
    ADDITION_MODIFICATION = "addition_modification"
    DELETION = "deletion"


class AugmentationKind(str, Enum):
    NONE = "none"
    EXPAND = "expand"
    HULL = "hull"
    BOX = "box"
    HULL_EXPAND = "hull_expand"
    BOX_EXPAND = "box_expand"


#: The five derived mask shapes, excluding the untouched original.
DERIVED_AUGMENTATIONS = (
    AugmentationKind.EXPAND,
    AugmentationKind.HULL,
    AugmentationKind.BOX,
    AugmentationKind.HULL_EXPAND,
    AugmentationKind.BOX_EXPAND,
)

#: All six kinds applied by default: original plus the five derived shapes.
ALL_AUGMENTATIONS = (AugmentationKind.NONE,) + DERIVED_AUGMENTATIONS


class Propagation(str, Enum):
    TRACKED = "tracked"
    COPIED = "copied"
    FLOWED = "flowed"


class CaptionLength(str, Enum):
    SHORT = "short"
    MEDIUM = "medium"
    LONG = "long"


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class FrameSequence:
    """Ordered 8-bit RGB frames sharing one resolution.

    ``frames`` has shape (T, H, W, 3) with dtype uint8 and T >= 1.
    """

    frames: np.ndarray
    fps: Fraction
    source_id: str = ""

    def __post_init__(self):
        f = self.frames
        if f.ndim != 4 or f.shape[3] != 3:
            raise ResolutionMismatchError(f"frames must be (T, H, W, 3), got {f.shape}")
        if f.dtype != np.uint8:
            raise ResolutionMismatchError(f"frames must be uint8, got {f.dtype}")
        if f.shape[0] < 1:
            raise LengthMismatchError("a sequence needs at least one frame")
        if self.fps <= 0:
            raise ValueError(f"fps must be positive, got {self.fps}")
        object.__setattr__(self, "frames", _freeze(f))
        object.__setattr__(self, "fps", Fraction(self.fps))

    def __len__(self) -> int:
        return self.frames.shape[0]

    @property
    def height(self) -> int:
        return self.frames.shape[1]

    @property
    def width(self) -> int:
        return self.frames.shape[2]

    @property
    def resolution(self) -> tuple[int, int]:
        """(W, H) of every frame."""
        return (self.width, self.height)

    @property
    def is_image(self) -> bool:
        return len(self) == 1


@dataclass(frozen=True)
class MaskSequence:
    """Ordered single-channel binary masks, values restricted to {0, 255}.

    ``masks`` has shape (T, H, W) with dtype uint8.
    """

    masks: np.ndarray

    def __post_init__(self):
        m = self.masks
        if m.ndim != 3:
            raise ResolutionMismatchError(f"masks must be (T, H, W), got {m.shape}")
        if m.dtype != np.uint8:
            raise ResolutionMismatchError(f"masks must be uint8, got {m.dtype}")
        if m.shape[0] < 1:
            raise LengthMismatchError("a mask sequence needs at least one frame")
        bad = (m != 0) & (m != 255)
        if bad.any():
            raise SchemaViolationError("mask values must be 0 or 255")
        object.__setattr__(self, "masks", _freeze(m))

    def __len__(self) -> int:
        return self.masks.shape[0]

    @property
    def height(self) -> int:
        return self.masks.shape[1]

    @property
    def width(self) -> int:
        return self.masks.shape[2]

    @property
    def resolution(self) -> tuple[int, int]:
        return (self.width, self.height)


def ensure_paired(frames: FrameSequence, masks: MaskSequence) -> None:
    """Raise unless ``masks`` can annotate ``frames`` frame-for-frame."""
    if len(frames) != len(masks):
        raise LengthMismatchError(
            f"{len(frames)} frames vs {len(masks)} masks"
        )
    if frames.resolution != masks.resolution:
        raise ResolutionMismatchError(
            f"frames {frames.resolution} vs masks {masks.resolution}"
        )


def apply_mask(frames: FrameSequence, masks: MaskSequence) -> FrameSequence:
    """Erase the editing regions: output = input where mask is 0, black elsewhere."""
    ensure_paired(frames, masks)
    keep = (masks.masks == 0)[..., None]
    out = np.where(keep, frames.frames, np.uint8(0))
    return FrameSequence(out.astype(np.uint8), frames.fps, frames.source_id)


_TASKS = {t.value for t in Task}
_AUGS = {a.value for a in AugmentationKind}
_PROPS = {p.value for p in Propagation}
_LENGTH_CLASSES = {c.value for c in CaptionLength}


@dataclass(frozen=True)
class SampleRecord:
    """One training record: media references plus caption and provenance."""

    id: str
    task: Task
    frames_ref: str
    masks_ref: str
    caption: str
    caption_length_class: CaptionLength
    augmentation: AugmentationKind
    propagation: Propagation
    fps: Fraction
    resolution: tuple[int, int]
    masked_ref: Optional[str] = None
    entity_label: Optional[str] = None
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.id:
            raise SchemaViolationError("record id must be non-empty")
        if not self.caption:
            raise SchemaViolationError(f"record {self.id}: caption must be non-empty")
        if self.task == Task.DELETION and self.caption != DELETION_CAPTION:
            raise SchemaViolationError(
                f"record {self.id}: deletion caption must be the fixed prompt"
            )
        w, h = self.resolution
        if w < 1 or h < 1:
            raise SchemaViolationError(f"record {self.id}: bad resolution {self.resolution}")
        if self.fps <= 0:
            raise SchemaViolationError(f"record {self.id}: fps must be positive")
        object.__setattr__(self, "resolution", (int(w), int(h)))
        object.__setattr__(self, "fps", Fraction(self.fps))

    def to_json(self) -> dict:
        d = {
            "id": self.id,
            "task": self.task.value,
            "frames_ref": self.frames_ref,
            "masks_ref": self.masks_ref,
            "masked_ref": self.masked_ref,
            "caption": self.caption,
            "caption_length_class": self.caption_length_class.value,
            "augmentation": self.augmentation.value,
            "propagation": self.propagation.value,
            "entity_label": self.entity_label,
            "fps": str(self.fps),
            "resolution": list(self.resolution),
            "provenance": dict(self.provenance),
        }
        return d

    @classmethod
    def from_json(cls, d: dict) -> "SampleRecord":
        try:
            return cls(**cls._parse_common(d))
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaViolationError(f"bad record: {exc}") from exc

    @classmethod
    def _parse_common(cls, d: dict) -> dict:
        required = [
            "id", "task", "frames_ref", "masks_ref", "caption",
            "caption_length_class", "augmentation", "propagation",
            "fps", "resolution",
        ]
        missing = [k for k in required if d.get(k) is None]
        if missing:
            raise SchemaViolationError(f"record missing fields: {missing}")
        for name, value, allowed in [
            ("task", d["task"], _TASKS),
            ("caption_length_class", d["caption_length_class"], _LENGTH_CLASSES),
            ("augmentation", d["augmentation"], _AUGS),
            ("propagation", d["propagation"], _PROPS),
        ]:
            if value not in allowed:
                raise SchemaViolationError(f"record {d['id']}: bad {name} {value!r}")
        return dict(
            id=d["id"],
            task=Task(d["task"]),
            frames_ref=d["frames_ref"],
            masks_ref=d["masks_ref"],
            masked_ref=d.get("masked_ref"),
            caption=d["caption"],
            caption_length_class=CaptionLength(d["caption_length_class"]),
            augmentation=AugmentationKind(d["augmentation"]),
            propagation=Propagation(d["propagation"]),
            entity_label=d.get("entity_label"),
            fps=Fraction(d["fps"]),
            resolution=tuple(d["resolution"]),
            provenance=dict(d.get("provenance") or {}),
        )


@dataclass(frozen=True)
class EvalRecord(SampleRecord):
    """A sample plus an optional edited video under evaluation."""

    edited_ref: Optional[str] = None

    def to_json(self) -> dict:
        d = super().to_json()
        d["edited_ref"] = self.edited_ref
        return d

    @classmethod
    def from_json(cls, d: dict) -> "EvalRecord":
        try:
            common = cls._parse_common(d)
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaViolationError(f"bad record: {exc}") from exc
        return cls(edited_ref=d.get("edited_ref"), **common)


def record_field_names() -> tuple[str, ...]:
    return tuple(f.name for f in fields(SampleRecord))
