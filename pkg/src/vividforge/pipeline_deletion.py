"""Deletion pipeline: background positioning, donor mask pasting, and
dual-mode propagation.

Deletion ground truth cannot come from masking real entities, so a donor mask
sequence borrowed from the addition/modification pool is pasted onto a
background region. Videos emit two records per placement, one replaying the
donor trajectory (copied) and one advected by the target's own optical flow
(flowed); both share the paste transform. The caption is always the fixed
deletion prompt.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from vividforge.core import (
    DELETION_CAPTION,
    AugmentationKind,
    CaptionLength,
    FrameSequence,
    MaskSequence,
    Propagation,
    SampleRecord,
    Task,
    apply_mask,
)
from vividforge.errors import (
    DonorTooShortError,
    EmptyDonorPoolError,
    EmptyMaskError,
    NoFeasiblePlacementError,
)
from vividforge.flow import (
    block_match_flow,
    copy_escape_fraction,
    propagate_by_copy,
    propagate_by_flow,
)
from vividforge.gateway import Gateway
from vividforge.geometry import AreaFilterConfig, derive_seed, paste_mask
from vividforge.pipeline_addmod import Entity, GatewayFactory, PipelineConfig, select_regions
from vividforge.store import (
    Manifest,
    ManifestWriter,
    load_mask_sequence,
    write_frames,
    write_masks,
    write_source,
)
from vividforge.vocab import VocabularyConfig

logger = logging.getLogger(__name__)

# Background regions may legitimately dominate the frame.
BACKGROUND_MAX_FRACTION = 0.95


@dataclass(frozen=True)
class DonorEntry:
    id: str
    masks: MaskSequence


def position_background(
    gateway: Gateway,
    first_frame: np.ndarray,
    vocab: VocabularyConfig,
    cfg: PipelineConfig = PipelineConfig(),
) -> list[Entity]:
    """Like entity selection, but allowlist-filtered with a looser area bound."""
    area_cfg = AreaFilterConfig(cfg.area_cfg.min_fraction, BACKGROUND_MAX_FRACTION)
    return select_regions(gateway, first_frame, vocab, "background", cfg, area_cfg)


def load_donor_pool(manifest: Manifest, root: Union[str, Path]) -> list[DonorEntry]:
    """Distinct addition/modification mask sequences, deduplicated by masks_ref."""
    pool = []
    seen: set[str] = set()
    for record in manifest.records:
        if record.task != Task.ADDITION_MODIFICATION or record.masks_ref in seen:
            continue
        seen.add(record.masks_ref)
        pool.append(DonorEntry(id=record.id, masks=load_mask_sequence(root, record.masks_ref)))
    return pool


def synthesize_deletion_samples(
    gateway: Gateway,
    target: FrameSequence,
    donor_pool: Sequence[DonorEntry],
    vocab: VocabularyConfig,
    cfg: PipelineConfig,
    out_root: Union[str, Path],
    flow_source: str = "builtin",
) -> list[SampleRecord]:
    """Records for one target source; videos yield copied+flowed pairs."""
    if not donor_pool:
        raise EmptyDonorPoolError("deletion synthesis needs at least one donor")
    records: list[SampleRecord] = []
    regions = position_background(gateway, target.frames[0], vocab, cfg)
    if not regions:
        return records
    frames_ref = write_source(out_root, target)
    flow_fn = block_match_flow if flow_source == "builtin" else gateway.estimate_flow
    is_video = len(target) > 1
    for region_index, region in enumerate(regions):
        eligible = (
            [d for d in donor_pool if len(d.masks) >= len(target)]
            if is_video
            else list(donor_pool)
        )
        if not eligible:
            logger.warning(
                "no donor long enough for %s region %d", target.source_id, region_index
            )
            continue
        rng = np.random.default_rng(
            derive_seed(cfg.seed, target.source_id, region_index, "donor")
        )
        donor = eligible[int(rng.integers(len(eligible)))]
        try:
            paste = paste_mask(
                region.mask,
                donor.masks.masks[0],
                derive_seed(cfg.seed, target.source_id, region_index, "paste"),
            )
        except NoFeasiblePlacementError as exc:
            logger.warning(
                "region %d of %s: %s", region_index, target.source_id, exc
            )
            continue
        variants: list[tuple[Propagation, MaskSequence]] = []
        if not is_video:
            variants.append((Propagation.COPIED, MaskSequence(paste.mask[None])))
        else:
            try:
                escaped = copy_escape_fraction(
                    donor.masks, paste.offset, paste.scale, len(target), target.resolution
                )
                copied = propagate_by_copy(
                    donor.masks, paste.offset, paste.scale, len(target), target.resolution
                )
                if escaped > 0 or not all(m.any() for m in copied.masks):
                    logger.warning(
                        "copied mask escaped the frame for %s region %d",
                        target.source_id, region_index,
                    )
                else:
                    variants.append((Propagation.COPIED, copied))
            except (DonorTooShortError, EmptyMaskError) as exc:
                logger.warning("copied propagation failed: %s", exc)
            try:
                flowed = propagate_by_flow(target, paste.mask, flow_fn)
                variants.append((Propagation.FLOWED, flowed))
            except EmptyMaskError as exc:
                logger.warning("flowed propagation failed: %s", exc)
        for propagation, masks in variants:
            record_id = f"{target.source_id}-del-r{region_index}-{propagation.value}"
            masks_ref = f"samples/{record_id}/masks"
            write_masks(Path(out_root) / masks_ref, masks.masks)
            masked_ref = None
            if cfg.write_masked:
                masked_ref = f"samples/{record_id}/masked"
                write_frames(Path(out_root) / masked_ref, apply_mask(target, masks).frames)
            records.append(
                SampleRecord(
                    id=record_id,
                    task=Task.DELETION,
                    frames_ref=frames_ref,
                    masks_ref=masks_ref,
                    masked_ref=masked_ref,
                    caption=DELETION_CAPTION,
                    caption_length_class=CaptionLength.SHORT,
                    augmentation=AugmentationKind.NONE,
                    propagation=propagation,
                    entity_label=None,
                    fps=target.fps,
                    resolution=target.resolution,
                    provenance={
                        "source_id": target.source_id,
                        "region_label": region.label,
                        "donor_id": donor.id,
                        "paste_offset": f"{paste.offset[0]},{paste.offset[1]}",
                        "paste_scale": f"{paste.scale:.6f}",
                    },
                )
            )
    return records


def run_deletion_corpus(
    sources: Sequence[FrameSequence],
    donor_pool: Sequence[DonorEntry],
    vocab: VocabularyConfig,
    cfg: PipelineConfig,
    out_root: Union[str, Path],
    gateway_factory: GatewayFactory,
    workers: int = 1,
    flow_source: str = "builtin",
    manifest_name: str = "manifest.jsonl",
) -> Path:
    """Deletion pipeline over a corpus with ordered, deterministic output."""
    if not donor_pool:
        raise EmptyDonorPoolError("deletion synthesis needs at least one donor")
    out_root = Path(out_root)

    def worker(source: FrameSequence) -> list[SampleRecord]:
        with gateway_factory() as gateway:
            try:
                return synthesize_deletion_samples(
                    gateway, source, donor_pool, vocab, cfg, out_root, flow_source
                )
            except EmptyDonorPoolError:
                raise
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
