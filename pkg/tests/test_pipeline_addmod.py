"""Addition/modification pipeline: multiplicities, filtering, determinism."""

from fractions import Fraction

import numpy as np

from vividforge.core import (
    AugmentationKind,
    FrameSequence,
    Task,
    apply_mask,
)
from vividforge.gateway import Gateway
from vividforge.pipeline_addmod import (
    PipelineConfig,
    build_addmod_samples,
    run_addmod_corpus,
    select_entities,
)
from vividforge.store import load_frame_sequence, load_mask_sequence, read_manifest
from vividforge.vocab import VocabularyConfig

from tests.conftest import noise_frames, paint

VOCAB = VocabularyConfig()


class TestSelectEntities:
    def test_red_rectangle_becomes_car(self, gateway, rng):
        frames = noise_frames(rng, 1, 64, 64)
        paint(frames, 0, 10, 30, 10, 40, (230, 20, 20))
        entities = select_entities(gateway, frames[0], VOCAB)
        assert [e.label for e in entities] == ["car"]
        expected = np.zeros((64, 64), np.uint8)
        expected[10:30, 10:40] = 255
        assert np.array_equal(entities[0].mask, expected)

    def test_color_word_label_filtered(self, gateway, rng):
        frames = noise_frames(rng, 1, 64, 64)
        paint(frames, 0, 10, 30, 10, 40, (230, 20, 230))  # magenta -> label "blue"
        assert select_entities(gateway, frames[0], VOCAB) == []

    def test_full_frame_entity_area_filtered(self, gateway):
        frames = np.zeros((1, 64, 64, 3), np.uint8)
        frames[0, :, :] = (230, 20, 20)
        assert select_entities(gateway, frames[0], VOCAB) == []

    def test_max_entities_cap(self, gateway, rng):
        frames = noise_frames(rng, 1, 96, 96)
        paint(frames, 0, 2, 20, 2, 30, (230, 20, 20))
        paint(frames, 0, 30, 48, 2, 30, (15, 230, 25))
        paint(frames, 0, 60, 80, 2, 30, (20, 30, 235))
        cfg = PipelineConfig(max_entities=2)
        entities = select_entities(gateway, frames[0], VOCAB, cfg)
        assert len(entities) == 2


class TestBuildSamples:
    def test_image_multiplicity_36(self, gateway, red_green_image, tmp_path):
        records = build_addmod_samples(
            gateway, red_green_image, VOCAB, PipelineConfig(seed=1), tmp_path
        )
        assert len(records) == 36  # 2 entities x 3 captions x 6 kinds
        per_entity = {}
        for r in records:
            per_entity.setdefault(r.provenance["entity_index"], []).append(r)
        assert {len(v) for v in per_entity.values()} == {18}

    def test_video_records_track_motion(self, gateway, moving_red_video, tmp_path):
        records = build_addmod_samples(
            gateway, moving_red_video, VOCAB, PipelineConfig(seed=1), tmp_path
        )
        assert len(records) == 18
        none_records = [r for r in records if r.augmentation == AugmentationKind.NONE]
        masks = load_mask_sequence(tmp_path, none_records[0].masks_ref)
        assert len(masks) == 5
        centers = [int(np.nonzero(m)[1].mean()) for m in masks.masks]
        assert centers == sorted(centers) and centers[-1] > centers[0]

    def test_caption_contract(self, gateway, red_green_image, tmp_path):
        records = build_addmod_samples(
            gateway, red_green_image, VOCAB, PipelineConfig(seed=1), tmp_path
        )
        for record in records:
            assert record.task == Task.ADDITION_MODIFICATION
            assert record.caption.startswith("The video shows")
            assert record.entity_label in record.caption

    def test_masked_identity_on_outputs(self, gateway, red_green_image, tmp_path):
        records = build_addmod_samples(
            gateway, red_green_image, VOCAB, PipelineConfig(seed=1), tmp_path
        )
        record = records[7]
        frames = load_frame_sequence(tmp_path, record.frames_ref, record.fps)
        masks = load_mask_sequence(tmp_path, record.masks_ref)
        masked = load_frame_sequence(tmp_path, record.masked_ref, record.fps)
        assert np.array_equal(apply_mask(frames, masks).frames, masked.frames)

    def test_oversized_augmentation_filtered(self, gateway, rng, tmp_path):
        # entity at 55% coverage: box/expand variants exceed the 60% cap
        frames = noise_frames(rng, 1, 40, 40)
        paint(frames, 0, 2, 35, 2, 29, (230, 20, 20))
        source = FrameSequence(frames, Fraction(30), "big-entity")
        records = build_addmod_samples(
            gateway, source, VOCAB, PipelineConfig(seed=1), tmp_path
        )
        kinds = {r.augmentation for r in records}
        assert AugmentationKind.NONE in kinds
        assert len(records) < 18
        assert len(records) % 3 == 0  # caption triplets stay intact

    def test_no_entities_no_records(self, gateway, rng, tmp_path):
        source = FrameSequence(noise_frames(rng, 1, 32, 32), Fraction(30), "plain")
        records = build_addmod_samples(
            gateway, source, VOCAB, PipelineConfig(seed=1), tmp_path
        )
        assert records == []


class TestCorpusRun:
    def test_manifest_deterministic(self, red_green_image, moving_red_video, tmp_path):
        sources = [red_green_image, moving_red_video]
        cfg = PipelineConfig(seed=1)
        path_a = run_addmod_corpus(
            sources, VOCAB, cfg, tmp_path / "a", lambda: Gateway(), workers=1
        )
        path_b = run_addmod_corpus(
            sources, VOCAB, cfg, tmp_path / "b", lambda: Gateway(), workers=2
        )
        assert path_a.read_bytes() == path_b.read_bytes()

    def test_counts(self, red_green_image, moving_red_video, tmp_path):
        path = run_addmod_corpus(
            [red_green_image, moving_red_video], VOCAB, PipelineConfig(seed=1),
            tmp_path, lambda: Gateway(),
        )
        manifest = read_manifest(path)
        assert manifest.counts["addition_modification"] == 54
        assert manifest.counts["deletion"] == 0
