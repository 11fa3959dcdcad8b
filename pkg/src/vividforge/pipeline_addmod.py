"""Addition/modification pipeline: entity selection, mask propagation, local
caption generation, mask augmentation, filtering, and manifest emission.

Videos run all three stages; one-frame sources skip propagation. Per-entity
failures are logged and skipped so a corpus run never aborts on one bad
sample. Everything is deterministic given the seed and mock backends.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

import numpy as np

from vividforge.core import (
    ALL_AUGMENTATIONS,
    AugmentationKind,
    FrameSequence,
    MaskSequence,
    Propagation,
    SampleRecord,
    Task,
)
from vividforge.errors import CaptionParseError, EmptyMaskError, GatewayError
from vividforge.gateway import Gateway
from vividforge.geometry import AreaFilterConfig, augment, area_filter, crop_entity, derive_seed
from vividforge.prompts import (
    CAPTION_LENGTH_ORDER,
    parse_caption_triplet,
    render_caption_prompt,
)
from vividforge.store import ManifestWriter, write_frames, write_masks, write_source
from vividforge.vocab import VocabularyConfig, filter_labels

logger = logging.getLogger(__name__)

GatewayFactory = Callable[[], Gateway]


@dataclass(frozen=True)
class PipelineConfig:
    seed: int = 0
    max_entities: int = 4
    score_threshold: float = 0.35
    top_detections: int = 8
    area_cfg: AreaFilterConfig = field(default_factory=AreaFilterConfig)
    aug_kinds: tuple[AugmentationKind, ...] = ALL_AUGMENTATIONS
    write_masked: bool = True


@dataclass(frozen=True)
class Entity:
    label: str
    mask: np.ndarray
    score: float


def select_regions(
    gateway: Gateway,
    first_frame: np.ndarray,
    vocab: VocabularyConfig,
    mode: str,
    cfg: PipelineConfig,
    area_cfg: Optional[AreaFilterConfig] = None,
) -> list[Entity]:
    """tag -> filter -> detect -> segment -> area-filter -> score cap.

    Shared by entity selection (foreground mode) and background positioning
    (background mode, looser area bound). An empty result is valid; the
    caller just skips the source.
    """
    area_cfg = area_cfg or cfg.area_cfg
    labels = filter_labels(gateway.tag_frame(first_frame), mode, vocab)
    candidates: list[Entity] = []
    for label in labels:
        detections = [
            d
            for d in gateway.detect_label(first_frame, label)
            if d.score >= cfg.score_threshold
        ]
        detections = sorted(detections, key=lambda d: -d.score)[: cfg.top_detections]
        for detection in detections:
            mask = gateway.segment_box(first_frame, detection.box)
            if not mask.any():
                continue
            if not area_filter(MaskSequence(mask[None]), area_cfg):
                continue
            candidates.append(Entity(label=label, mask=mask, score=detection.score))
    candidates.sort(key=lambda e: -e.score)
    return candidates[: cfg.max_entities]


def select_entities(
    gateway: Gateway,
    first_frame: np.ndarray,
    vocab: VocabularyConfig,
    cfg: PipelineConfig = PipelineConfig(),
) -> list[Entity]:
    return select_regions(gateway, first_frame, vocab, "foreground", cfg)


def _entity_masks(
    gateway: Gateway, source: FrameSequence, entity: Entity
) -> MaskSequence:
    """Propagate the keyframe mask across the clip; images skip propagation."""
    if len(source) == 1:
        return MaskSequence(entity.mask[None])
    propagated = gateway.propagate_mask(source, entity.mask)
    for i, mask in enumerate(propagated.masks):
        if not mask.any():
            raise EmptyMaskError(f"propagation lost the mask at frame {i}")
    return propagated


def build_addmod_samples(
    gateway: Gateway,
    source: FrameSequence,
    vocab: VocabularyConfig,
    cfg: PipelineConfig,
    out_root: Union[str, Path],
) -> list[SampleRecord]:
    """All records for one source: entities x captions x surviving augmentations."""
    records: list[SampleRecord] = []
    first_frame = source.frames[0]
    entities = select_entities(gateway, first_frame, vocab, cfg)
    if not entities:
        return records
    frames_ref = write_source(out_root, source)
    for entity_index, entity in enumerate(entities):
        try:
            masks = _entity_masks(gateway, source, entity)
            cropped = crop_entity(source, masks)
            prompt = render_caption_prompt(entity.label)
            text = gateway.caption_entity(cropped, entity.label, prompt)
            captions = parse_caption_triplet(text, entity.label)
        except (EmptyMaskError, CaptionParseError, GatewayError) as exc:
            logger.warning(
                "skipping entity %d (%s) of %s: %s",
                entity_index, entity.label, source.source_id, exc,
            )
            continue
        for kind in cfg.aug_kinds:
            aug_seed = derive_seed(cfg.seed, source.source_id, entity_index, kind.value)
            try:
                augmented = augment(masks, kind, aug_seed)
            except EmptyMaskError as exc:
                logger.warning(
                    "augmentation %s failed for %s entity %d: %s",
                    kind.value, source.source_id, entity_index, exc,
                )
                continue
            if not area_filter(augmented, cfg.area_cfg):
                continue
            group = f"{source.source_id}-e{entity_index}-{kind.value}"
            masks_ref = f"samples/{group}/masks"
            write_masks(Path(out_root) / masks_ref, augmented.masks)
            masked_ref = None
            if cfg.write_masked:
                from vividforge.core import apply_mask

                masked_ref = f"samples/{group}/masked"
                write_frames(
                    Path(out_root) / masked_ref, apply_mask(source, augmented).frames
                )
            for length_class, caption in zip(CAPTION_LENGTH_ORDER, captions):
                records.append(
                    SampleRecord(
                        id=f"{group}-{length_class.value}",
                        task=Task.ADDITION_MODIFICATION,
                        frames_ref=frames_ref,
                        masks_ref=masks_ref,
                        masked_ref=masked_ref,
                        caption=caption,
                        caption_length_class=length_class,
                        augmentation=kind,
                        propagation=Propagation.TRACKED,
                        entity_label=entity.label,
                        fps=source.fps,
                        resolution=source.resolution,
                        provenance={
                            "source_id": source.source_id,
                            "entity_index": str(entity_index),
                            "detection_score": f"{entity.score:.4f}",
                        },
                    )
                )
    return records


def run_addmod_corpus(
    sources: Sequence[FrameSequence],
    vocab: VocabularyConfig,
    cfg: PipelineConfig,
    out_root: Union[str, Path],
    gateway_factory: GatewayFactory,
    workers: int = 1,
    manifest_name: str = "manifest.jsonl",
) -> Path:
    """Run the pipeline over a corpus; one worker per source, ordered output.

    Records are appended in corpus order through a single manifest writer, so
    reruns with the same seed produce byte-identical manifests.
    """
    out_root = Path(out_root)

    def worker(source: FrameSequence) -> list[SampleRecord]:
        with gateway_factory() as gateway:
            try:
                return build_addmod_samples(gateway, source, vocab, cfg, out_root)
            except Exception as exc:
                logger.error("source %s failed entirely: %s", source.source_id, exc)
                return []

    manifest_path = out_root / manifest_name
    with ManifestWriter(manifest_path) as writer:
        if workers <= 1:
            batches = map(worker, sources)
        else:
            executor = ThreadPoolExecutor(max_workers=workers)
            batches = executor.map(worker, sources)
        for batch in batches:
            for record in batch:
                writer.append(record)
        if workers > 1:
            executor.shutdown()
    return manifest_path
