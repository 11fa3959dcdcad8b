"""On-disk layout: frame/mask PNG directories, sample folders, and manifests.

Layout per sample::

    <root>/sources/<source_id>/frames/frame_00000.png   shared source frames
    <root>/samples/<record_id>/masks/mask_00000.png     per-record masks
    <root>/samples/<record_id>/masked/frame_00000.png   per-record masked video

Manifests are newline-delimited: a header line carrying the schema version,
then one record per line. Refs inside records are paths relative to the
manifest's directory, so a dataset directory can be moved wholesale.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence, Type, Union

import numpy as np
from PIL import Image

from vividforge.core import (
    SCHEMA_VERSION,
    EvalRecord,
    FrameSequence,
    MaskSequence,
    SampleRecord,
    Task,
)
from vividforge.errors import DuplicateIdError, SchemaViolationError

FRAME_PATTERN = "frame_%05d.png"
MASK_PATTERN = "mask_%05d.png"


# -- raster io -------------------------------------------------------------

def write_frames(directory: Union[str, Path], frames: np.ndarray) -> None:
    """Write (T, H, W, 3) uint8 frames as frame_%05d.png files."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for i, frame in enumerate(frames):
        Image.fromarray(frame, mode="RGB").save(directory / (FRAME_PATTERN % i))


def read_frames(directory: Union[str, Path]) -> np.ndarray:
    directory = Path(directory)
    paths = sorted(directory.glob("frame_*.png"))
    if not paths:
        raise FileNotFoundError(f"no frame_*.png files in {directory}")
    return np.stack([np.asarray(Image.open(p).convert("RGB")) for p in paths])


def write_masks(directory: Union[str, Path], masks: np.ndarray) -> None:
    """Write (T, H, W) uint8 binary masks as mask_%05d.png grayscale files."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for i, mask in enumerate(masks):
        Image.fromarray(mask, mode="L").save(directory / (MASK_PATTERN % i))


def read_masks(directory: Union[str, Path]) -> np.ndarray:
    directory = Path(directory)
    paths = sorted(directory.glob("mask_*.png"))
    if not paths:
        raise FileNotFoundError(f"no mask_*.png files in {directory}")
    stacked = np.stack([np.asarray(Image.open(p).convert("L")) for p in paths])
    bad = (stacked != 0) & (stacked != 255)
    if bad.any():
        raise SchemaViolationError(f"non-binary mask pixels in {directory}")
    return stacked


def load_frame_sequence(
    root: Union[str, Path], ref: str, fps: Fraction, source_id: str = ""
) -> FrameSequence:
    return FrameSequence(read_frames(Path(root) / ref), fps, source_id)


def load_mask_sequence(root: Union[str, Path], ref: str) -> MaskSequence:
    return MaskSequence(read_masks(Path(root) / ref))


# -- manifests ---------------------------------------------------------------

@dataclass(frozen=True)
class Manifest:
    """Append-ordered records plus derived per-task counts."""

    records: tuple
    schema_version: str = SCHEMA_VERSION

    def __post_init__(self):
        seen = set()
        for r in self.records:
            if r.id in seen:
                raise DuplicateIdError(f"duplicate record id {r.id!r}")
            seen.add(r.id)

    @property
    def counts(self) -> dict[str, int]:
        out = {t.value: 0 for t in Task}
        for r in self.records:
            out[r.task.value] += 1
        return out

    def __len__(self) -> int:
        return len(self.records)


def _header_line(kind: str) -> str:
    return json.dumps(
        {"schema_version": SCHEMA_VERSION, "kind": kind},
        sort_keys=True,
        separators=(",", ":"),
    )


def _record_line(record: SampleRecord) -> str:
    return json.dumps(record.to_json(), sort_keys=True, separators=(",", ":"))


def write_manifest(
    records: Sequence[SampleRecord],
    path: Union[str, Path],
    kind: str = "train",
) -> Path:
    """Write a manifest atomically; returns the path. Ids must be unique."""
    Manifest(tuple(records))  # validates uniqueness before touching disk
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(_header_line(kind) + "\n")
        for record in records:
            fh.write(_record_line(record) + "\n")
    os.replace(tmp, path)
    return path


def read_manifest(
    path: Union[str, Path],
    record_type: Type[SampleRecord] = SampleRecord,
) -> Manifest:
    path = Path(path)
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        header_raw = fh.readline()
        if not header_raw.strip():
            raise SchemaViolationError(f"{path}: empty manifest file")
        try:
            header = json.loads(header_raw)
        except json.JSONDecodeError as exc:
            raise SchemaViolationError(f"{path}: bad header: {exc}") from exc
        version = header.get("schema_version")
        if version != SCHEMA_VERSION:
            raise SchemaViolationError(
                f"{path}: schema_version {version!r} != {SCHEMA_VERSION!r}"
            )
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            try:
                payload = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaViolationError(f"{path}:{lineno}: bad json: {exc}") from exc
            records.append(record_type.from_json(payload))
    return Manifest(tuple(records))


def read_eval_manifest(path: Union[str, Path]) -> Manifest:
    return read_manifest(path, record_type=EvalRecord)


class ManifestWriter:
    """Append-only manifest writer; a single writer owns the file.

    Appends are serialized through an internal lock so one writer instance
    can be shared by pipeline workers.
    """

    def __init__(self, path: Union[str, Path], kind: str = "train"):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._seen: set[str] = set()
        self._fh = open(self.path, "w", encoding="utf-8")
        self._fh.write(_header_line(kind) + "\n")

    def append(self, record: SampleRecord) -> None:
        with self._lock:
            if record.id in self._seen:
                raise DuplicateIdError(f"duplicate record id {record.id!r}")
            self._seen.add(record.id)
            self._fh.write(_record_line(record) + "\n")

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> "ManifestWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


# -- sample directories ------------------------------------------------------

def write_source(root: Union[str, Path], source: FrameSequence) -> str:
    """Write shared source frames once; returns the frames ref."""
    ref = f"sources/{source.source_id}/frames"
    target = Path(root) / ref
    if not target.exists():
        write_frames(target, source.frames)
    return ref


def write_sample_masks(root: Union[str, Path], record_id: str, masks: MaskSequence) -> str:
    ref = f"samples/{record_id}/masks"
    write_masks(Path(root) / ref, masks.masks)
    return ref


def write_sample_masked(root: Union[str, Path], record_id: str, masked: FrameSequence) -> str:
    ref = f"samples/{record_id}/masked"
    write_frames(Path(root) / ref, masked.frames)
    return ref
