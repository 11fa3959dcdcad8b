"""Quality-control service: serves samples to human reviewers, persists
MG/MP/TA verdicts in an append-only log, and computes quality statistics.

Aggregation: per sample and dimension, majority vote across reviewers with
ties failing. The high-quality rate is the fraction of reviewed samples
passing mask generation AND text alignment AND (for multi-frame samples)
mask propagation; within a single-modality manifest it is therefore bounded
by each per-dimension rate.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

from vividforge.errors import (
    ConflictError,
    MpPresenceViolationError,
    SchemaViolationError,
    UnknownSampleError,
)
from vividforge.store import Manifest, read_manifest


@dataclass(frozen=True)
class VerdictRecord:
    """One human judgment; mp is present iff the sample has > 1 frame."""

    sample_id: str
    reviewer_id: str
    mg: bool
    ta: bool
    mp: Optional[bool] = None
    timestamp: float = 0.0

    def to_json(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "reviewer_id": self.reviewer_id,
            "mg": self.mg,
            "mp": self.mp,
            "ta": self.ta,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_json(cls, d: dict) -> "VerdictRecord":
        try:
            return cls(
                sample_id=str(d["sample_id"]),
                reviewer_id=str(d["reviewer_id"]),
                mg=bool(d["mg"]),
                ta=bool(d["ta"]),
                mp=None if d.get("mp") is None else bool(d["mp"]),
                timestamp=float(d.get("timestamp", 0.0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaViolationError(f"bad verdict: {exc}") from exc


@dataclass(frozen=True)
class QualityStats:
    mg_rate: Optional[float]
    mp_rate: Optional[float]
    ta_rate: Optional[float]
    hq_rate: Optional[float]
    n_reviewed: int

    def to_json(self) -> dict:
        return {
            "mg_rate": self.mg_rate,
            "mp_rate": self.mp_rate,
            "ta_rate": self.ta_rate,
            "hq_rate": self.hq_rate,
            "n_reviewed": self.n_reviewed,
        }


class VerdictLog:
    """Append-only newline-delimited verdict store; replayable after restart."""

    def __init__(self, path: Union[str, Path]):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._verdicts: list[VerdictRecord] = []
        self._index: set[tuple[str, str]] = set()
        if self.path.exists():
            for line in self.path.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    self._admit(VerdictRecord.from_json(json.loads(line)))
        else:
            self.path.parent.mkdir(parents=True, exist_ok=True)

    def _admit(self, verdict: VerdictRecord) -> None:
        key = (verdict.sample_id, verdict.reviewer_id)
        if key in self._index:
            raise ConflictError(f"verdict already recorded for {key}")
        self._index.add(key)
        self._verdicts.append(verdict)

    def append(self, verdict: VerdictRecord) -> None:
        with self._lock:
            self._admit(verdict)
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(verdict.to_json(), sort_keys=True) + "\n")

    def has(self, sample_id: str, reviewer_id: str) -> bool:
        return (sample_id, reviewer_id) in self._index

    def snapshot(self) -> tuple[VerdictRecord, ...]:
        with self._lock:
            return tuple(self._verdicts)


def _majority(votes: Sequence[bool]) -> bool:
    passes = sum(votes)
    return passes > len(votes) - passes


def quality_stats(
    sample_frames: dict[str, int], verdicts: Sequence[VerdictRecord]
) -> QualityStats:
    """Per-dimension pass rates over reviewed samples, majority-voted.

    ``sample_frames`` maps sample id to frame count (decides MP applicability).
    """
    by_sample: dict[str, list[VerdictRecord]] = {}
    for verdict in verdicts:
        by_sample.setdefault(verdict.sample_id, []).append(verdict)
    mg_pass = ta_pass = hq_pass = 0
    mp_pass = mp_total = 0
    for sample_id, sample_verdicts in by_sample.items():
        multi_frame = sample_frames.get(sample_id, 1) > 1
        mg = _majority([v.mg for v in sample_verdicts])
        ta = _majority([v.ta for v in sample_verdicts])
        mg_pass += mg
        ta_pass += ta
        hq = mg and ta
        if multi_frame:
            mp = _majority([bool(v.mp) for v in sample_verdicts])
            mp_total += 1
            mp_pass += mp
            hq = hq and mp
        hq_pass += hq
    n = len(by_sample)
    return QualityStats(
        mg_rate=mg_pass / n if n else None,
        mp_rate=mp_pass / mp_total if mp_total else None,
        ta_rate=ta_pass / n if n else None,
        hq_rate=hq_pass / n if n else None,
        n_reviewed=n,
    )


class QcState:
    """Manifest-backed review queue plus the verdict log."""

    def __init__(
        self,
        manifest_path: Union[str, Path],
        verdict_path: Union[str, Path],
        dataset_root: Optional[Union[str, Path]] = None,
    ):
        self.manifest_path = Path(manifest_path)
        self.dataset_root = Path(dataset_root or self.manifest_path.parent)
        self.manifest: Manifest = read_manifest(self.manifest_path)
        self.records = {r.id: r for r in self.manifest.records}
        self.order = [r.id for r in self.manifest.records]
        self.log = VerdictLog(verdict_path)
        self.frame_counts = {
            r.id: self._count_frames(r.frames_ref) for r in self.manifest.records
        }

    def _count_frames(self, frames_ref: str) -> int:
        directory = self.dataset_root / frames_ref
        return len(list(directory.glob("frame_*.png"))) if directory.exists() else 1

    def media_paths(self, record_id: str) -> dict[str, list[str]]:
        record = self.records[record_id]
        out: dict[str, list[str]] = {}
        for key, ref in (("frames", record.frames_ref), ("masks", record.masks_ref)):
            directory = self.dataset_root / ref
            pattern = "frame_*.png" if key == "frames" else "mask_*.png"
            names = sorted(p.name for p in directory.glob(pattern))
            out[key] = [f"/media/{ref}/{name}" for name in names]
        return out

    def next_for(self, reviewer_id: str) -> Optional[str]:
        for record_id in self.order:
            if not self.log.has(record_id, reviewer_id):
                return record_id
        return None

    def submit(self, verdict: VerdictRecord) -> None:
        record = self.records.get(verdict.sample_id)
        if record is None:
            raise UnknownSampleError(f"unknown sample {verdict.sample_id!r}")
        multi_frame = self.frame_counts[verdict.sample_id] > 1
        if multi_frame and verdict.mp is None:
            raise MpPresenceViolationError("multi-frame sample requires an mp verdict")
        if not multi_frame and verdict.mp is not None:
            raise MpPresenceViolationError("single-frame sample must not carry mp")
        self.log.append(verdict)

    def stats(self) -> QualityStats:
        return quality_stats(self.frame_counts, self.log.snapshot())

    def sample_payload(self, record_id: str) -> dict:
        record = self.records[record_id]
        return {
            "sample": record.to_json(),
            "media": self.media_paths(record_id),
            "n_frames": self.frame_counts[record_id],
        }


_PLACEHOLDER_PAGE = """<!doctype html>
<html><head><title>vividforge qc</title></head>
<body><h1>vividforge qc service</h1>
<p>No review UI bundle is installed. The API is live under /api/.</p>
</body></html>
"""


def create_app(state: QcState, ui_dir: Optional[Union[str, Path]] = None):
    """FastAPI application wired to one QcState."""
    from fastapi import FastAPI, Response
    from fastapi.responses import FileResponse, HTMLResponse, JSONResponse

    app = FastAPI(title="vividforge qc")

    @app.get("/api/queue/next")
    def queue_next(reviewer: str):
        record_id = state.next_for(reviewer)
        if record_id is None:
            return Response(status_code=204)
        return state.sample_payload(record_id)

    @app.get("/api/sample/{record_id}")
    def get_sample(record_id: str):
        if record_id not in state.records:
            return JSONResponse({"error": "unknown sample"}, status_code=404)
        return state.sample_payload(record_id)

    @app.get("/media/{path:path}")
    def media(path: str):
        target = (state.dataset_root / path).resolve()
        if not str(target).startswith(str(state.dataset_root.resolve())):
            return JSONResponse({"error": "forbidden"}, status_code=404)
        if not target.is_file():
            return JSONResponse({"error": "not found"}, status_code=404)
        return FileResponse(target, media_type="image/png")

    @app.post("/api/verdict")
    def post_verdict(payload: dict):
        try:
            verdict = VerdictRecord.from_json(
                {**payload, "timestamp": payload.get("timestamp") or time.time()}
            )
            state.submit(verdict)
        except UnknownSampleError as exc:
            return JSONResponse({"error": str(exc)}, status_code=404)
        except ConflictError as exc:
            return JSONResponse({"error": str(exc)}, status_code=409)
        except (MpPresenceViolationError, SchemaViolationError) as exc:
            return JSONResponse({"error": str(exc)}, status_code=400)
        return {"status": "ok"}

    @app.get("/api/stats")
    def get_stats():
        return state.stats().to_json()

    ui_root = Path(ui_dir) if ui_dir else None
    if ui_root is not None and (ui_root / "index.html").is_file():
        from fastapi.staticfiles import StaticFiles

        # registered after the API routes, so /api and /media match first
        app.mount("/", StaticFiles(directory=ui_root, html=True), name="ui")
    else:

        @app.get("/")
        def index():
            return HTMLResponse(_PLACEHOLDER_PAGE)

    return app


def serve(
    manifest_path: Union[str, Path],
    verdict_path: Union[str, Path],
    host: str = "127.0.0.1",
    port: int = 8400,
    ui_dir: Optional[Union[str, Path]] = None,
    dataset_root: Optional[Union[str, Path]] = None,
) -> None:
    import uvicorn

    state = QcState(manifest_path, verdict_path, dataset_root)
    app = create_app(state, ui_dir)
    uvicorn.run(app, host=host, port=port, log_level="info")
