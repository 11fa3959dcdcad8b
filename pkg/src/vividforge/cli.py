"""Command-line entry point: corpus ingestion, pipeline runs, batch planning,
keyframe-conditional assembly, evaluation, dataset stats, and the QC service.

All randomness flows from --seed; every subcommand exits non-zero on an
aborting error. Backends default to the in-process deterministic mocks; point
--backends at a JSON config (role -> {transport, endpoint, timeout}) or set
VIVIDFORGE_BACKEND_<ROLE>=transport:endpoint to plug in real models.
"""

from __future__ import annotations

import logging
import shlex
import subprocess
from fractions import Fraction
from pathlib import Path

import click
import numpy as np

from vividforge.core import (
    ALL_AUGMENTATIONS,
    AugmentationKind,
    FrameSequence,
    MaskSequence,
    SampleRecord,
    Task,
    apply_mask,
)
from vividforge.errors import VividForgeError
from vividforge.gateway import Gateway, load_backend_config
from vividforge.geometry import AreaFilterConfig, augment, area_filter, derive_seed
from vividforge.pipeline_addmod import PipelineConfig, run_addmod_corpus
from vividforge.pipeline_deletion import load_donor_pool, run_deletion_corpus
from vividforge.vocab import VocabularyConfig

logger = logging.getLogger("vividforge")

MIN_SHORT_SIDE = 720
MIN_DURATION_SECONDS = 5.0


def _fail(message: str) -> None:
    raise click.ClickException(message)


def load_corpus(listing: Path) -> list[FrameSequence]:
    """Corpus listing: one `<frames_dir> <fps>` per line, # comments allowed."""
    from vividforge.store import read_frames

    sources = []
    seen: set[str] = set()
    for lineno, raw in enumerate(listing.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            path_str, fps_str = line.rsplit(maxsplit=1)
            fps = Fraction(fps_str)
        except ValueError:
            _fail(f"{listing}:{lineno}: expected '<frames_dir> <fps>'")
        directory = Path(path_str)
        source_id = directory.parent.name if directory.name == "frames" else directory.name
        if source_id in seen:
            source_id = f"{source_id}-{lineno}"
        seen.add(source_id)
        try:
            frames = read_frames(directory)
        except (FileNotFoundError, OSError) as exc:
            _fail(f"{listing}:{lineno}: {exc}")
        sources.append(FrameSequence(frames, fps, source_id))
    if not sources:
        _fail(f"{listing}: no corpus entries")
    return sources


def _gateway_factory(backends: str | None, workers: int):
    descriptors = load_backend_config(backends)
    pool = max(1, workers)
    return lambda: Gateway(descriptors, pool_size=pool)


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="debug logging")
def main(verbose: bool):
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )


@main.command()
@click.option("--corpus", type=click.Path(exists=True, path_type=Path), required=True,
              help="listing of raw media: <path> <fps> per line")
@click.option("--out", type=click.Path(path_type=Path), required=True)
@click.option("--extract-cmd", default="",
              help="frame extraction command template with {src} and {out} placeholders")
@click.option("--strict", is_flag=True, help="reject violations instead of warning")
def ingest(corpus: Path, out: Path, extract_cmd: str, strict: bool):
    """Adapt external media into frame directories and a validated listing.

    Sources already extracted (directories of frame_*.png) are taken as-is;
    files are passed through the user-configured extraction command. Sources
    below 720p or videos shorter than 5 seconds are warned about, or dropped
    under --strict.
    """
    from vividforge.store import read_frames

    out.mkdir(parents=True, exist_ok=True)
    accepted = []
    rejected = 0
    for lineno, raw in enumerate(corpus.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            src_str, fps_str = line.rsplit(maxsplit=1)
            fps = Fraction(fps_str)
        except ValueError:
            _fail(f"{corpus}:{lineno}: expected '<path> <fps>'")
        src = Path(src_str)
        if src.is_dir():
            frames_dir = src
        else:
            if not extract_cmd:
                _fail(f"{corpus}:{lineno}: {src} is a file but no --extract-cmd given")
            frames_dir = out / src.stem / "frames"
            frames_dir.mkdir(parents=True, exist_ok=True)
            command = extract_cmd.format(src=str(src), out=str(frames_dir))
            result = subprocess.run(shlex.split(command))
            if result.returncode != 0:
                _fail(f"extraction failed for {src} (exit {result.returncode})")
        try:
            frames = read_frames(frames_dir)
        except (FileNotFoundError, OSError) as exc:
            _fail(f"{corpus}:{lineno}: {exc}")
        n, h, w = frames.shape[0], frames.shape[1], frames.shape[2]
        problems = []
        if min(w, h) < MIN_SHORT_SIDE:
            problems.append(f"resolution {w}x{h} below {MIN_SHORT_SIDE}p")
        duration = n / float(fps)
        if n > 1 and duration < MIN_DURATION_SECONDS:
            problems.append(f"duration {duration:.2f}s below {MIN_DURATION_SECONDS}s")
        if problems:
            message = f"{frames_dir}: " + "; ".join(problems)
            if strict:
                click.echo(f"REJECT {message}", err=True)
                rejected += 1
                continue
            click.echo(f"WARN {message}", err=True)
        accepted.append(f"{frames_dir} {fps}")
    listing = out / "corpus.txt"
    listing.write_text("\n".join(accepted) + ("\n" if accepted else ""), encoding="utf-8")
    click.echo(f"accepted {len(accepted)}, rejected {rejected} -> {listing}")


def _parse_kinds(kinds: str) -> tuple[AugmentationKind, ...]:
    if kinds == "all":
        return ALL_AUGMENTATIONS
    try:
        return tuple(AugmentationKind(k.strip()) for k in kinds.split(",") if k.strip())
    except ValueError as exc:
        _fail(f"bad augmentation kind: {exc}")


@main.command("build-addmod")
@click.option("--corpus", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--out", type=click.Path(path_type=Path), required=True)
@click.option("--backends", type=click.Path(exists=True, path_type=Path), default=None)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--workers", type=int, default=None,
              help="pipeline parallelism [default: logical CPU count]")
@click.option("--kinds", default="all", show_default=True,
              help="comma-separated augmentation kinds, or 'all'")
@click.option("--max-entities", type=int, default=4, show_default=True)
@click.option("--no-masked", is_flag=True, help="skip writing masked videos")
def build_addmod(corpus, out, backends, seed, workers, kinds, max_entities, no_masked):
    """Run the addition/modification pipeline over a corpus listing."""
    import os

    workers = workers or os.cpu_count() or 1
    sources = load_corpus(corpus)
    cfg = PipelineConfig(
        seed=seed,
        aug_kinds=_parse_kinds(kinds),
        max_entities=max_entities,
        write_masked=not no_masked,
    )
    try:
        manifest = run_addmod_corpus(
            sources, VocabularyConfig(), cfg, out,
            _gateway_factory(str(backends) if backends else None, workers),
            workers=workers,
        )
    except VividForgeError as exc:
        _fail(str(exc))
    click.echo(f"wrote {manifest}")


@main.command("build-del")
@click.option("--corpus", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--donors", type=click.Path(exists=True, path_type=Path), required=True,
              help="addition/modification manifest supplying donor masks")
@click.option("--out", type=click.Path(path_type=Path), required=True)
@click.option("--backends", type=click.Path(exists=True, path_type=Path), default=None)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--workers", type=int, default=None,
              help="pipeline parallelism [default: logical CPU count]")
@click.option("--flow-source", type=click.Choice(["builtin", "backend"]),
              default="builtin", show_default=True)
@click.option("--no-masked", is_flag=True)
def build_del(corpus, donors, out, backends, seed, workers, flow_source, no_masked):
    """Run the deletion pipeline over a corpus listing."""
    import os

    from vividforge.store import read_manifest

    workers = workers or os.cpu_count() or 1
    sources = load_corpus(corpus)
    cfg = PipelineConfig(seed=seed, write_masked=not no_masked)
    try:
        donor_manifest = read_manifest(donors)
        pool = load_donor_pool(donor_manifest, Path(donors).parent)
        manifest = run_deletion_corpus(
            sources, pool, VocabularyConfig(), cfg, out,
            _gateway_factory(str(backends) if backends else None, workers),
            workers=workers, flow_source=flow_source,
        )
    except VividForgeError as exc:
        _fail(str(exc))
    click.echo(f"wrote {manifest}")


@main.command("augment")
@click.option("--manifest", "manifest_path", type=click.Path(exists=True, path_type=Path),
              required=True)
@click.option("--out", type=click.Path(path_type=Path), default=None,
              help="output manifest path [default: <root>/manifest-augmented.jsonl]")
@click.option("--kinds", default="expand,hull,box,hull_expand,box_expand", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
def augment_cmd(manifest_path: Path, out: Path | None, kinds: str, seed: int):
    """Re-run mask augmentation over an existing manifest.

    Unaugmented records act as bases; each requested kind yields a new record
    with freshly written masks (area-filtered). New mask directories live in
    the manifest's dataset root so all refs stay valid; the output manifest
    holds the originals plus the new records.
    """
    import dataclasses

    from vividforge.store import (
        load_frame_sequence,
        load_mask_sequence,
        read_manifest,
        write_frames,
        write_masks,
        write_manifest,
    )

    root = manifest_path.parent
    out = out or root / "manifest-augmented.jsonl"
    wanted = [k for k in _parse_kinds(kinds) if k != AugmentationKind.NONE]
    try:
        manifest = read_manifest(manifest_path)
    except VividForgeError as exc:
        _fail(str(exc))
    new_records = []
    area_cfg = AreaFilterConfig()
    bases = [r for r in manifest.records if r.augmentation == AugmentationKind.NONE]
    for base in bases:
        masks = load_mask_sequence(root, base.masks_ref)
        for kind in wanted:
            new_id = f"{base.id}+{kind.value}"
            try:
                augmented = augment(masks, kind, derive_seed(seed, base.masks_ref, kind.value))
            except VividForgeError as exc:
                logger.warning("augment %s for %s failed: %s", kind.value, base.id, exc)
                continue
            if not area_filter(augmented, area_cfg):
                continue
            masks_ref = f"samples/{new_id}/masks"
            write_masks(root / masks_ref, augmented.masks)
            masked_ref = None
            if base.masked_ref is not None:
                frames = load_frame_sequence(root, base.frames_ref, base.fps)
                masked_ref = f"samples/{new_id}/masked"
                write_frames(root / masked_ref, apply_mask(frames, augmented).frames)
            new_records.append(
                dataclasses.replace(
                    base,
                    id=new_id,
                    augmentation=kind,
                    masks_ref=masks_ref,
                    masked_ref=masked_ref,
                )
            )
    write_manifest(list(manifest.records) + new_records, out)
    click.echo(f"added {len(new_records)} augmented records -> {out}")


@main.command("plan-batches")
@click.option("--image-manifest", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--video-manifest", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--n-batches", type=int, required=True)
@click.option("--batch-size", type=int, default=8, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--image-ratio", type=int, default=10, show_default=True)
@click.option("--video-ratio", type=int, default=1, show_default=True)
@click.option("--addmod-weight", type=int, default=3, show_default=True)
@click.option("--del-weight", type=int, default=1, show_default=True)
@click.option("--kive-prob", type=float, default=0.5, show_default=True)
@click.option("--strict-cycle", is_flag=True,
              help="deterministic modality cycle instead of the stochastic draw")
@click.option("--out", type=click.Path(path_type=Path), required=True)
def plan_batches_cmd(image_manifest, video_manifest, n_batches, batch_size, seed,
                     image_ratio, video_ratio, addmod_weight, del_weight,
                     kive_prob, strict_cycle, out):
    """Plan homogeneous image/video training batches."""
    from vividforge.sampler import plan_batches, write_plan
    from vividforge.store import read_manifest

    try:
        plan = plan_batches(
            read_manifest(image_manifest),
            read_manifest(video_manifest),
            n_batches=n_batches, batch_size=batch_size, seed=seed,
            image_ratio=image_ratio, video_ratio=video_ratio,
            addmod_weight=addmod_weight, del_weight=del_weight,
            kive_prob=kive_prob, strict_cycle=strict_cycle,
        )
    except (VividForgeError, ValueError) as exc:
        _fail(str(exc))
    write_plan(plan, out)
    n_image = sum(1 for b in plan.batches if b.modality == "image")
    click.echo(f"planned {len(plan.batches)} batches ({n_image} image) -> {out}")


@main.group()
def kive():
    """Keyframe-guided editing helpers."""


@kive.command("assemble")
@click.option("--frames", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--masks", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--keyframe", type=click.Path(exists=True, path_type=Path), default=None,
              help="edited keyframe PNG; defaults to the source's first frame")
@click.option("--caption", required=True)
@click.option("--fps", default="30", show_default=True)
@click.option("--out", type=click.Path(path_type=Path), required=True)
def kive_assemble(frames, masks, keyframe, caption, fps, out):
    """Assemble and persist a keyframe-guided conditional input."""
    from PIL import Image

    from vividforge.core import CaptionLength, Propagation
    from vividforge.kive import assemble_kive_conditional
    from vividforge.store import read_frames, read_masks, write_frames, write_masks, write_manifest

    source = FrameSequence(read_frames(frames), Fraction(fps), source_id=Path(frames).parent.name or "kive")
    mask_seq = MaskSequence(read_masks(masks))
    key = (
        np.asarray(Image.open(keyframe).convert("RGB"))
        if keyframe
        else source.frames[0]
    )
    try:
        conditional = assemble_kive_conditional(source, mask_seq, key, caption)
    except VividForgeError as exc:
        _fail(str(exc))
    out.mkdir(parents=True, exist_ok=True)
    write_frames(out / "frames", conditional.frames.frames)
    write_masks(out / "masks", conditional.masks.masks)
    record = SampleRecord(
        id=f"{source.source_id}-kive",
        task=Task.ADDITION_MODIFICATION,
        frames_ref="frames",
        masks_ref="masks",
        caption=caption,
        caption_length_class=CaptionLength.SHORT,
        augmentation=AugmentationKind.NONE,
        propagation=Propagation.TRACKED,
        fps=source.fps,
        resolution=source.resolution,
        provenance={"kive": "true", "source_id": source.source_id},
    )
    write_manifest([record], out / "manifest.jsonl")
    click.echo(f"wrote conditional input to {out}")


@kive.command("chain")
@click.option("--total-frames", type=int, required=True)
@click.option("--clip-length", type=int, default=49, show_default=True)
def kive_chain(total_frames, clip_length):
    """Print overlapping clip boundaries for long-video editing."""
    from vividforge.kive import chain_long_video

    try:
        chain = chain_long_video(total_frames, clip_length)
    except (VividForgeError, ValueError) as exc:
        _fail(str(exc))
    for start, end in chain.boundaries:
        click.echo(f"{start} {end}")


@kive.command("cost")
@click.option("--attempts", type=int, required=True)
@click.option("--mode", type=click.Choice(["direct", "kive", "both"]), default="both",
              show_default=True)
@click.option("--c-im", type=float, default=1.5, show_default=True)
@click.option("--c-vid", type=float, default=17.1, show_default=True)
def kive_cost(attempts, mode, c_im, c_vid):
    """Compare iterative editing cost in PFLOPs."""
    from vividforge.kive import CostModel, editing_cost

    try:
        cm = CostModel(c_im=c_im, c_vid=c_vid)
        modes = ["direct", "kive"] if mode == "both" else [mode]
        for m in modes:
            click.echo(f"{m}: {editing_cost(attempts, m, cm):.6g} PFLOPs")
    except (VividForgeError, ValueError) as exc:
        _fail(str(exc))


@main.command("eval")
@click.option("--manifest", "manifest_path", type=click.Path(exists=True, path_type=Path),
              required=True, help="eval manifest with edited_ref fields")
@click.option("--backends", type=click.Path(exists=True, path_type=Path), default=None)
@click.option("--fps-factor", type=int, default=4, show_default=True)
@click.option("--out", type=click.Path(path_type=Path), required=True)
def eval_cmd(manifest_path, backends, fps_factor, out):
    """Compute editing-quality metrics over an evaluation manifest."""
    from vividforge.metrics import builtin_embed, eval_report, write_report
    from vividforge.store import read_eval_manifest

    try:
        manifest = read_eval_manifest(manifest_path)
    except VividForgeError as exc:
        _fail(str(exc))
    descriptors = load_backend_config(str(backends) if backends else None)
    with Gateway(descriptors) as gateway:
        report = eval_report(
            manifest.records,
            manifest_path.parent,
            embedder=builtin_embed,
            scorer=gateway.scorer(),
            fps_factor=fps_factor,
        )
        write_report(report, out)
    click.echo(report.to_text())


@main.command("stats")
@click.option("--manifest", "manifests", type=click.Path(exists=True, path_type=Path),
              multiple=True, required=True)
def stats_cmd(manifests):
    """Dataset statistics: record counts per task, sources, entity labels."""
    from vividforge.store import read_manifest

    counts = {t.value: 0 for t in Task}
    sources: set[str] = set()
    labels: set[str] = set()
    total = 0
    for path in manifests:
        try:
            manifest = read_manifest(path)
        except VividForgeError as exc:
            _fail(f"{path}: {exc}")
        for record in manifest.records:
            total += 1
            counts[record.task.value] += 1
            sources.add(record.provenance.get("source_id", record.frames_ref))
            if record.entity_label:
                labels.add(record.entity_label)
    click.echo(f"{'records':<24} {total}")
    for task in Task:
        click.echo(f"{task.value:<24} {counts[task.value]}")
    click.echo(f"{'sources':<24} {len(sources)}")
    click.echo(f"{'entity_labels':<24} {len(labels)}")


@main.command("serve-qc")
@click.option("--manifest", "manifest_path", type=click.Path(exists=True, path_type=Path),
              required=True)
@click.option("--verdicts", type=click.Path(path_type=Path), required=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8400, show_default=True)
@click.option("--ui-dir", type=click.Path(path_type=Path), default=None,
              help="static review UI bundle served at /")
def serve_qc(manifest_path, verdicts, host, port, ui_dir):
    """Serve the QC review API (and UI bundle if provided)."""
    from vividforge.qc import serve

    try:
        serve(manifest_path, verdicts, host=host, port=port, ui_dir=ui_dir)
    except VividForgeError as exc:
        _fail(str(exc))


if __name__ == "__main__":
    main()
