"""Editing-quality metrics: background preservation, temporal consistency,
text alignment, frame-rate downsampling, and report generation.

BP is the raw mean absolute difference per pixel-channel in 0-255 scale over
non-edit regions (the report states this normalization). TC and TA are scaled
by 100. TA is skipped for deletion records since their caption is fixed.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

import numpy as np

from vividforge.core import (
    DELETION_CAPTION,
    EvalRecord,
    FrameSequence,
    MaskSequence,
    Task,
    ensure_paired,
)
from vividforge.errors import (
    EmptyMaskError,
    NoBackgroundPixelsError,
    ShapeMismatchError,
    TooFewFramesError,
)
from vividforge.flow import _resize_bilinear, to_grayscale
from vividforge.geometry import bounding_box
from vividforge.store import load_frame_sequence, load_mask_sequence

logger = logging.getLogger(__name__)

Embedder = Callable[[np.ndarray], np.ndarray]
Scorer = Callable[[np.ndarray, str], float]

EMBED_GRID = 16


def builtin_embed(frame: np.ndarray) -> np.ndarray:
    """Test embedder: flattened 16x16 grayscale downsample, L2-normalized.

    All-black frames map to the normalized uniform vector so the output is
    never zero.
    """
    gray = to_grayscale(frame).astype(np.float64)
    small = _resize_bilinear(gray[..., None], EMBED_GRID, EMBED_GRID)[..., 0]
    vec = small.reshape(-1)
    norm = np.linalg.norm(vec)
    if norm == 0:
        vec = np.ones_like(vec)
        norm = np.linalg.norm(vec)
    return vec / norm


def background_preservation(
    original: FrameSequence, edited: FrameSequence, masks: MaskSequence
) -> float:
    """Mean absolute difference over all non-edit pixel-channels, 0-255 scale."""
    ensure_paired(original, masks)
    if len(edited) != len(original) or edited.resolution != original.resolution:
        raise ShapeMismatchError("original and edited sequences must match")
    keep = masks.masks == 0
    if not keep.any():
        raise NoBackgroundPixelsError("all pixels are inside the editing region")
    diff = np.abs(
        original.frames.astype(np.int64) - edited.frames.astype(np.int64)
    )
    return float(diff[keep].mean())


def temporal_consistency(video: FrameSequence, embedder: Embedder = builtin_embed) -> float:
    """100 x mean cosine similarity between consecutive frame embeddings."""
    if len(video) < 2:
        raise TooFewFramesError("temporal consistency needs at least two frames")
    embeddings = [np.asarray(embedder(frame), dtype=np.float64) for frame in video.frames]
    sims = []
    for a, b in zip(embeddings, embeddings[1:]):
        sims.append(float(np.dot(a, b) / (np.linalg.norm(a) * np.linalg.norm(b))))
    return 100.0 * float(np.mean(sims))


def text_alignment(
    edited: FrameSequence,
    masks: MaskSequence,
    caption: str,
    scorer: Scorer,
) -> Optional[float]:
    """100 x mean per-frame score of the edited region against the caption.

    Returns None for the fixed deletion caption: scoring a constant prompt
    against arbitrary backgrounds is meaningless.
    """
    if caption == DELETION_CAPTION:
        return None
    ensure_paired(edited, masks)
    scores = []
    for frame, mask in zip(edited.frames, masks.masks):
        if not mask.any():
            raise EmptyMaskError("text alignment needs a non-empty mask per frame")
        x0, y0, x1, y1 = bounding_box(mask)
        crop = np.where(mask[y0:y1, x0:x1, None] > 0, frame[y0:y1, x0:x1], np.uint8(0))
        scores.append(float(scorer(crop, caption)))
    return 100.0 * float(np.mean(scores))


def downsample_fps(video: FrameSequence, factor: int = 4) -> FrameSequence:
    """Keep frames 0, factor, 2*factor, ...; divide fps by the factor."""
    if factor < 1:
        raise ValueError(f"factor must be >= 1, got {factor}")
    if factor == 1:
        return video
    return FrameSequence(
        np.ascontiguousarray(video.frames[::factor]),
        video.fps / factor,
        video.source_id,
    )


def downsample_masks(masks: MaskSequence, factor: int = 4) -> MaskSequence:
    if factor < 1:
        raise ValueError(f"factor must be >= 1, got {factor}")
    if factor == 1:
        return masks
    return MaskSequence(np.ascontiguousarray(masks.masks[::factor]))


@dataclass
class ReportRow:
    task: str
    rate: str
    n: int = 0
    tc: Optional[float] = None
    ta: Optional[float] = None
    bp: Optional[float] = None


@dataclass
class EvalReport:
    rows: list[ReportRow] = field(default_factory=list)
    failures: list[dict] = field(default_factory=list)
    fps_factor: int = 4
    normalization: str = "BP = mean |original - edited| per pixel-channel, 0-255 scale"

    def to_json(self) -> dict:
        return {
            "normalization": self.normalization,
            "fps_factor": self.fps_factor,
            "rows": [vars(r) for r in self.rows],
            "failures": self.failures,
        }

    def to_text(self) -> str:
        def fmt(v: Optional[float]) -> str:
            return f"{v:8.2f}" if v is not None else f"{'-':>8}"

        lines = [
            f"{'task':<24} {'rate':<8} {'n':>4} {'TC':>8} {'TA':>8} {'BP':>8}",
        ]
        for r in self.rows:
            lines.append(
                f"{r.task:<24} {r.rate:<8} {r.n:>4} {fmt(r.tc)} {fmt(r.ta)} {fmt(r.bp)}"
            )
        lines.append(self.normalization)
        if self.failures:
            lines.append(f"{len(self.failures)} record(s) failed; see sidecar for details")
        return "\n".join(lines)


def _mean_or_none(values: list[float]) -> Optional[float]:
    return float(np.mean(values)) if values else None


def eval_report(
    records: Sequence[EvalRecord],
    root: Union[str, Path],
    embedder: Embedder = builtin_embed,
    scorer: Optional[Scorer] = None,
    fps_factor: int = 4,
) -> EvalReport:
    """Per-task metric means at native and downsampled frame rates.

    Records that fail to evaluate are reported and skipped; the run continues.
    """
    report = EvalReport(fps_factor=fps_factor)
    buckets: dict[tuple[str, str], dict[str, list[float]]] = {}

    def bucket(task: str, rate: str) -> dict[str, list[float]]:
        return buckets.setdefault((task, rate), {"tc": [], "ta": [], "bp": [], "n": []})

    for record in records:
        try:
            if record.edited_ref is None:
                raise ValueError("record has no edited_ref")
            original = load_frame_sequence(root, record.frames_ref, record.fps, record.id)
            edited = load_frame_sequence(root, record.edited_ref, record.fps, record.id)
            masks = load_mask_sequence(root, record.masks_ref)
            variants = [("native", original, edited, masks)]
            if fps_factor > 1:
                variants.append(
                    (
                        f"fps/{fps_factor}",
                        downsample_fps(original, fps_factor),
                        downsample_fps(edited, fps_factor),
                        downsample_masks(masks, fps_factor),
                    )
                )
            for rate, orig_v, edit_v, masks_v in variants:
                entry = bucket(record.task.value, rate)
                entry["n"].append(1.0)
                entry["bp"].append(background_preservation(orig_v, edit_v, masks_v))
                if len(edit_v) >= 2:
                    entry["tc"].append(temporal_consistency(edit_v, embedder))
                if scorer is not None:
                    ta = text_alignment(edit_v, masks_v, record.caption, scorer)
                    if ta is not None:
                        entry["ta"].append(ta)
        except Exception as exc:
            logger.warning("eval failed for %s: %s", record.id, exc)
            report.failures.append({"id": record.id, "error": str(exc)})

    for task in (Task.ADDITION_MODIFICATION.value, Task.DELETION.value):
        for rate in ["native"] + ([f"fps/{fps_factor}"] if fps_factor > 1 else []):
            if (task, rate) not in buckets:
                continue
            entry = buckets[(task, rate)]
            report.rows.append(
                ReportRow(
                    task=task,
                    rate=rate,
                    n=len(entry["n"]),
                    tc=_mean_or_none(entry["tc"]),
                    ta=_mean_or_none(entry["ta"]),
                    bp=_mean_or_none(entry["bp"]),
                )
            )
    return report


def write_report(report: EvalReport, path: Union[str, Path]) -> None:
    """Aligned text table plus a machine-readable JSON sidecar."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(report.to_text() + "\n", encoding="utf-8")
    path.with_suffix(path.suffix + ".json").write_text(
        json.dumps(report.to_json(), indent=2) + "\n", encoding="utf-8"
    )
