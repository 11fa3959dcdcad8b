"""Editing-quality metrics and report generation."""

from fractions import Fraction

import numpy as np
import pytest

from vividforge.core import (
    DELETION_CAPTION,
    AugmentationKind,
    CaptionLength,
    EvalRecord,
    FrameSequence,
    MaskSequence,
    Propagation,
    Task,
)
from vividforge.errors import (
    EmptyMaskError,
    NoBackgroundPixelsError,
    TooFewFramesError,
)
from vividforge.metrics import (
    background_preservation,
    downsample_fps,
    eval_report,
    temporal_consistency,
    text_alignment,
    write_report,
)
from vividforge.store import write_frames, write_masks


def video(frames: np.ndarray) -> FrameSequence:
    return FrameSequence(frames, Fraction(30), "v")


class TestBackgroundPreservation:
    def test_identical_is_zero(self, rng):
        frames = rng.integers(0, 256, (3, 8, 8, 3)).astype(np.uint8)
        masks = MaskSequence(np.zeros((3, 8, 8), np.uint8))
        assert background_preservation(video(frames), video(frames.copy()), masks) == 0.0

    def test_single_channel_delta(self, rng):
        frames = rng.integers(0, 200, (1, 4, 4, 3)).astype(np.uint8)
        edited = frames.copy()
        edited[0, 1, 1, 0] += 30
        masks = MaskSequence(np.zeros((1, 4, 4), np.uint8))
        p = 4 * 4 * 3
        got = background_preservation(video(frames), video(edited), masks)
        assert got == pytest.approx(30 / p, abs=1e-9)

    def test_symmetric(self, rng):
        a = rng.integers(0, 256, (2, 6, 6, 3)).astype(np.uint8)
        b = rng.integers(0, 256, (2, 6, 6, 3)).astype(np.uint8)
        masks = MaskSequence((rng.random((2, 6, 6)) < 0.3).astype(np.uint8) * 255)
        assert background_preservation(video(a), video(b), masks) == pytest.approx(
            background_preservation(video(b), video(a), masks)
        )

    def test_edits_inside_mask_ignored(self, rng):
        frames = rng.integers(0, 256, (1, 6, 6, 3)).astype(np.uint8)
        masks = np.zeros((1, 6, 6), np.uint8)
        masks[0, 2:4, 2:4] = 255
        edited = frames.copy()
        edited[0, 2:4, 2:4] = 0
        assert background_preservation(video(frames), video(edited), MaskSequence(masks)) == 0.0

    def test_all_masked_rejected(self, rng):
        frames = rng.integers(0, 256, (1, 4, 4, 3)).astype(np.uint8)
        masks = MaskSequence(np.full((1, 4, 4), 255, np.uint8))
        with pytest.raises(NoBackgroundPixelsError):
            background_preservation(video(frames), video(frames), masks)


class TestTemporalConsistency:
    def test_constant_video_is_100(self, rng):
        frame = rng.integers(0, 256, (8, 8, 3)).astype(np.uint8)
        v = video(np.stack([frame] * 4))
        assert temporal_consistency(v) == pytest.approx(100.0, abs=1e-9)

    def test_orthogonal_embeddings_zero(self):
        # 16x16 frames map 1:1 onto embedding cells; disjoint support
        a = np.zeros((16, 16, 3), np.uint8)
        a[:8] = 255
        b = np.zeros((16, 16, 3), np.uint8)
        b[8:] = 255
        v = video(np.stack([a, b]))
        assert temporal_consistency(v) == pytest.approx(0.0, abs=1e-9)

    def test_single_frame_rejected(self, rng):
        v = video(rng.integers(0, 256, (1, 8, 8, 3)).astype(np.uint8))
        with pytest.raises(TooFewFramesError):
            temporal_consistency(v)

    def test_bounded(self, rng):
        v = video(rng.integers(0, 256, (6, 12, 12, 3)).astype(np.uint8))
        tc = temporal_consistency(v)
        assert -100.0 <= tc <= 100.0

    def test_black_frames_do_not_crash(self):
        v = video(np.zeros((3, 8, 8, 3), np.uint8))
        assert temporal_consistency(v) == pytest.approx(100.0)


class TestTextAlignment:
    def test_deletion_absent(self, rng):
        frames = video(rng.integers(0, 256, (2, 8, 8, 3)).astype(np.uint8))
        masks = MaskSequence(np.full((2, 8, 8), 255, np.uint8))
        got = text_alignment(frames, masks, DELETION_CAPTION, scorer=lambda f, t: 0.5)
        assert got is None

    def test_constant_scorer(self, rng):
        frames = video(rng.integers(0, 256, (3, 8, 8, 3)).astype(np.uint8))
        masks = np.zeros((3, 8, 8), np.uint8)
        masks[:, 2:6, 2:6] = 255
        got = text_alignment(frames, MaskSequence(masks), "a dog", scorer=lambda f, t: 0.21)
        assert got == pytest.approx(21.0, abs=1e-9)

    def test_empty_mask_frame_rejected(self, rng):
        frames = video(rng.integers(0, 256, (2, 8, 8, 3)).astype(np.uint8))
        masks = np.zeros((2, 8, 8), np.uint8)
        masks[0, 1, 1] = 255
        with pytest.raises(EmptyMaskError):
            text_alignment(frames, MaskSequence(masks), "a dog", scorer=lambda f, t: 0.5)

    def test_scorer_sees_masked_crop(self, rng):
        frames = rng.integers(1, 255, (1, 8, 8, 3)).astype(np.uint8)
        masks = np.zeros((1, 8, 8), np.uint8)
        masks[0, 2:5, 3:7] = 255
        seen = {}

        def scorer(crop, text):
            seen["shape"] = crop.shape
            seen["corner"] = int(crop[0, 0, 0])
            return 0.5

        text_alignment(video(frames), MaskSequence(masks), "x", scorer=scorer)
        assert seen["shape"] == (3, 4, 3)
        assert seen["corner"] == frames[0, 2, 3, 0]


class TestDownsample:
    def test_49_by_4_gives_13(self, rng):
        v = video(rng.integers(0, 256, (49, 4, 4, 3)).astype(np.uint8))
        out = downsample_fps(v, 4)
        assert len(out) == 13
        assert out.fps == Fraction(30, 4)
        assert np.array_equal(out.frames[1], v.frames[4])

    def test_factor_one_identity(self, rng):
        v = video(rng.integers(0, 256, (5, 4, 4, 3)).astype(np.uint8))
        assert downsample_fps(v, 1) is v

    def test_floor_behavior(self, rng):
        v = video(rng.integers(0, 256, (3, 4, 4, 3)).astype(np.uint8))
        assert len(downsample_fps(v, 4)) == 1

    def test_composition(self, rng):
        v = video(rng.integers(0, 256, (16, 4, 4, 3)).astype(np.uint8))
        once = downsample_fps(v, 4)
        twice = downsample_fps(downsample_fps(v, 2), 2)
        assert np.array_equal(once.frames, twice.frames)
        assert once.fps == twice.fps


class TestEvalReport:
    def build_dataset(self, root, rng, *, edited_equals_original=True):
        records = []
        for task in (Task.ADDITION_MODIFICATION, Task.DELETION):
            for index in range(2):
                rid = f"{task.value}-{index}"
                frame = rng.integers(0, 256, (8, 12, 12, 3)).astype(np.uint8)
                frame = np.repeat(frame[:1], 8, axis=0)  # constant video
                masks = np.zeros((8, 12, 12), np.uint8)
                masks[:, 2:6, 2:6] = 255
                write_frames(root / "src" / rid, frame)
                write_masks(root / "masks" / rid, masks)
                edited = frame if edited_equals_original else np.roll(frame, 3, axis=2)
                write_frames(root / "edit" / rid, edited)
                records.append(
                    EvalRecord(
                        id=rid,
                        task=task,
                        frames_ref=f"src/{rid}",
                        masks_ref=f"masks/{rid}",
                        caption=DELETION_CAPTION if task == Task.DELETION else "a dog",
                        caption_length_class=CaptionLength.SHORT,
                        augmentation=AugmentationKind.NONE,
                        propagation=Propagation.TRACKED,
                        fps=Fraction(30),
                        resolution=(12, 12),
                        edited_ref=f"edit/{rid}",
                    )
                )
        return records

    def test_identical_edits_report(self, tmp_path, rng):
        records = self.build_dataset(tmp_path, rng)
        report = eval_report(records, tmp_path, scorer=lambda f, t: 0.21)
        assert not report.failures
        by_key = {(r.task, r.rate): r for r in report.rows}
        native_add = by_key[(Task.ADDITION_MODIFICATION.value, "native")]
        assert native_add.bp == pytest.approx(0.0)
        assert native_add.tc == pytest.approx(100.0)
        assert native_add.ta == pytest.approx(21.0)
        native_del = by_key[(Task.DELETION.value, "native")]
        assert native_del.ta is None
        assert (Task.ADDITION_MODIFICATION.value, "fps/4") in by_key

    def test_missing_edited_ref_is_failure_not_abort(self, tmp_path, rng):
        records = self.build_dataset(tmp_path, rng)
        broken = EvalRecord(
            **{**records[0].__dict__, "id": "broken", "edited_ref": None}
        )
        report = eval_report(records + [broken], tmp_path, scorer=lambda f, t: 0.2)
        assert [f["id"] for f in report.failures] == ["broken"]
        assert report.rows

    def test_empty_records_empty_report(self, tmp_path):
        report = eval_report([], tmp_path)
        assert report.rows == [] and report.failures == []

    def test_write_report(self, tmp_path, rng):
        records = self.build_dataset(tmp_path, rng)
        report = eval_report(records, tmp_path, scorer=lambda f, t: 0.21)
        out = tmp_path / "report.txt"
        write_report(report, out)
        text = out.read_text()
        assert "TC" in text and "BP" in text
        sidecar = out.with_suffix(".txt.json")
        assert sidecar.exists()
