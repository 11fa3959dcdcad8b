"""Uniform wire protocol to pluggable perception backends.

One JSON request per line, one JSON response per line, over subprocess stdio
or HTTP POST. Masks travel as row-major run-length encodings (alternating
zero/one run lengths, starting with zeros) so no binary framing is needed;
dense flow fields travel as 16-bit fixed-point sidecar files referenced by
path. Method names are part of the contract: ping, tag, detect, segment,
propagate, caption, flow, embed, score.

Responses are validated before they reach a pipeline: masks must be binary at
the frame resolution, flow fields finite and bounded, detections inside the
frame.
"""

from __future__ import annotations

import base64
import io
import json
import os
import select
import shlex
import subprocess
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
import requests
from PIL import Image

from vividforge.core import FrameSequence, MaskSequence
from vividforge.errors import (
    BackendFailure,
    BackendTimeoutError,
    ProtocolError,
    ValidationFailureError,
)
from vividforge.flow import read_flow_sidecar, validate_flow

ROLES = ("tagger", "detector", "segmenter", "captioner", "flow", "embedder", "scorer")
TRANSPORTS = ("subprocess", "http", "mock")

MASK_BINARIZE_THRESHOLD = 128
DEFAULT_TIMEOUT = 30.0
ENV_PREFIX = "VIVIDFORGE_BACKEND_"


@dataclass(frozen=True)
class BackendDescriptor:
    role: str
    transport: str
    endpoint: str = ""
    timeout: float = DEFAULT_TIMEOUT

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r}")
        if self.transport not in TRANSPORTS:
            raise ValueError(f"unknown transport {self.transport!r}")


@dataclass(frozen=True)
class Detection:
    label: str
    box: tuple[int, int, int, int]  # (x0, y0, x1, y1), half-open, x0 < x1
    score: float


# -- payload encodings --------------------------------------------------------

def encode_image(frame: np.ndarray) -> dict:
    buf = io.BytesIO()
    mode = "RGB" if frame.ndim == 3 else "L"
    Image.fromarray(frame, mode=mode).save(buf, format="PNG")
    return {"png_b64": base64.b64encode(buf.getvalue()).decode("ascii")}


def decode_image(payload: dict) -> np.ndarray:
    try:
        raw = base64.b64decode(payload["png_b64"])
        img = Image.open(io.BytesIO(raw))
    except (KeyError, TypeError, ValueError) as exc:
        raise ProtocolError(f"bad image payload: {exc}") from exc
    if img.mode == "L":
        return np.asarray(img)
    return np.asarray(img.convert("RGB"))


def encode_mask_rle(mask: np.ndarray) -> dict:
    """Row-major RLE: alternating zero/one run lengths, starting with zeros."""
    flat = (np.asarray(mask).reshape(-1) > 0).astype(np.int8)
    edges = np.nonzero(np.diff(flat))[0] + 1
    bounds = np.concatenate([[0], edges, [flat.size]])
    runs = np.diff(bounds).tolist()
    if flat.size and flat[0] == 1:
        runs = [0] + runs
    return {"rle": runs, "size": [int(mask.shape[0]), int(mask.shape[1])]}


def decode_mask(payload: dict, width: int, height: int) -> np.ndarray:
    """Decode an RLE or PNG mask payload to a validated (H, W) 0/255 raster.

    Grayscale PNG masks are binarized at threshold 128; RLE masks are binary
    by construction. Any size mismatch raises ValidationFailureError.
    """
    if "rle" in payload:
        try:
            runs = [int(r) for r in payload["rle"]]
            h, w = (int(v) for v in payload["size"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ProtocolError(f"bad rle payload: {exc}") from exc
        if any(r < 0 for r in runs) or sum(runs) != h * w:
            raise ValidationFailureError(f"rle runs sum to {sum(runs)}, expect {h * w}")
        flat = np.zeros(h * w, dtype=np.uint8)
        pos = 0
        value = 0
        for run in runs:
            if value:
                flat[pos : pos + run] = 255
            pos += run
            value ^= 1
        mask = flat.reshape(h, w)
    elif "png_b64" in payload:
        decoded = decode_image(payload)
        if decoded.ndim != 2:
            raise ValidationFailureError("mask PNG must be single-channel")
        mask = np.where(decoded >= MASK_BINARIZE_THRESHOLD, 255, 0).astype(np.uint8)
    else:
        raise ProtocolError("mask payload needs 'rle' or 'png_b64'")
    if mask.shape != (height, width):
        raise ValidationFailureError(
            f"mask is {mask.shape}, frame is {(height, width)}"
        )
    return mask


# -- transports ----------------------------------------------------------------

class _Session:
    def request(self, method: str, params: dict) -> dict:
        raise NotImplementedError

    def close(self) -> None:
        pass


class SubprocessSession(_Session):
    """Line-oriented stdio session to a backend subprocess."""

    def __init__(self, command: str, timeout: float):
        self.timeout = timeout
        self._proc = subprocess.Popen(
            shlex.split(command),
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )
        self._next_id = 0

    def _read_line(self, deadline: float) -> str:
        stdout = self._proc.stdout
        assert stdout is not None
        while True:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise BackendTimeoutError("backend did not respond in time")
            ready, _, _ = select.select([stdout], [], [], remaining)
            if ready:
                line = stdout.readline()
                if line == "":
                    raise ProtocolError("backend closed its stdout")
                return line

    def request(self, method: str, params: dict) -> dict:
        if self._proc.poll() is not None:
            raise ProtocolError("backend process has exited")
        self._next_id += 1
        request_id = self._next_id
        line = json.dumps({"id": request_id, "method": method, "params": params})
        assert self._proc.stdin is not None
        try:
            self._proc.stdin.write(line + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise ProtocolError(f"backend pipe broken: {exc}") from exc
        raw = self._read_line(time.monotonic() + self.timeout)
        return _parse_response(raw, request_id)

    def close(self) -> None:
        try:
            if self._proc.stdin is not None:
                self._proc.stdin.close()
            self._proc.terminate()
            self._proc.wait(timeout=5)
        except Exception:
            self._proc.kill()


class HttpSession(_Session):
    """One request per HTTP POST; the body carries the same JSON envelope."""

    def __init__(self, url: str, timeout: float):
        self.url = url
        self.timeout = timeout
        self._next_id = 0
        self._http = requests.Session()

    def request(self, method: str, params: dict) -> dict:
        self._next_id += 1
        request_id = self._next_id
        payload = {"id": request_id, "method": method, "params": params}
        try:
            resp = self._http.post(self.url, json=payload, timeout=self.timeout)
        except requests.Timeout as exc:
            raise BackendTimeoutError(str(exc)) from exc
        except requests.RequestException as exc:
            raise ProtocolError(f"http transport failure: {exc}") from exc
        if resp.status_code != 200:
            raise ProtocolError(f"backend returned HTTP {resp.status_code}")
        return _parse_response(resp.text, request_id)

    def close(self) -> None:
        self._http.close()


class MockSession(_Session):
    """In-process deterministic mock, same contract as the wire transports."""

    def __init__(self, role: str):
        from vividforge import mockbackend

        self.role = role
        self._handle = mockbackend.handle
        self._next_id = 0

    def request(self, method: str, params: dict) -> dict:
        self._next_id += 1
        raw = self._handle(
            self.role, json.dumps({"id": self._next_id, "method": method, "params": params})
        )
        return _parse_response(raw, self._next_id)


def _parse_response(raw: str, expect_id: int) -> dict:
    try:
        response = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"malformed response line: {exc}") from exc
    if not isinstance(response, dict) or "ok" not in response:
        raise ProtocolError("response missing 'ok' field")
    if response.get("id") != expect_id:
        raise ProtocolError(
            f"response id {response.get('id')} does not match request {expect_id}"
        )
    if not response["ok"]:
        error = response.get("error") or {}
        raise BackendFailure(error.get("code", "unknown"), error.get("message", ""))
    result = response.get("result")
    if not isinstance(result, dict):
        raise ProtocolError("successful response missing 'result' object")
    return result


def _open_session(desc: BackendDescriptor) -> _Session:
    if desc.transport == "subprocess":
        return SubprocessSession(desc.endpoint, desc.timeout)
    if desc.transport == "http":
        return HttpSession(desc.endpoint, desc.timeout)
    return MockSession(desc.role)


class _SessionPool:
    """Fixed-size pool; one in-flight request per session."""

    def __init__(self, desc: BackendDescriptor, size: int):
        self.desc = desc
        self._free: list[_Session] = []
        self._created = 0
        self._size = size
        self._lock = threading.Lock()
        self._available = threading.Semaphore(size)

    def acquire(self) -> _Session:
        self._available.acquire()
        with self._lock:
            if self._free:
                return self._free.pop()
            self._created += 1
            return _open_session(self.desc)

    def release(self, session: _Session) -> None:
        with self._lock:
            self._free.append(session)
        self._available.release()

    def close(self) -> None:
        with self._lock:
            for session in self._free:
                session.close()
            self._free.clear()


# -- gateway --------------------------------------------------------------------

def mock_descriptors() -> dict[str, BackendDescriptor]:
    return {role: BackendDescriptor(role, "mock") for role in ROLES}


def load_backend_config(path: Optional[str] = None) -> dict[str, BackendDescriptor]:
    """Build descriptors from a JSON config file plus environment overrides.

    Config maps role -> {transport, endpoint, timeout}. The environment
    variable VIVIDFORGE_BACKEND_<ROLE>=transport:endpoint overrides any file
    entry. Roles not mentioned anywhere fall back to the in-process mocks.
    """
    descriptors = mock_descriptors()
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            config = json.load(fh)
        for role, entry in config.items():
            descriptors[role] = BackendDescriptor(
                role=role,
                transport=entry["transport"],
                endpoint=entry.get("endpoint", ""),
                timeout=float(entry.get("timeout", DEFAULT_TIMEOUT)),
            )
    for role in ROLES:
        override = os.environ.get(ENV_PREFIX + role.upper())
        if override:
            transport, _, endpoint = override.partition(":")
            descriptors[role] = BackendDescriptor(role, transport, endpoint)
    return descriptors


class Gateway:
    """Typed access to the perception roles over pooled backend sessions."""

    def __init__(
        self,
        descriptors: Optional[dict[str, BackendDescriptor]] = None,
        pool_size: int = 1,
        scratch_dir: Optional[str] = None,
    ):
        self.descriptors = dict(descriptors or mock_descriptors())
        self._pools: dict[str, _SessionPool] = {}
        self._pool_size = pool_size
        self._lock = threading.Lock()
        self.scratch_dir = scratch_dir

    def close(self) -> None:
        for pool in self._pools.values():
            pool.close()

    def __enter__(self) -> "Gateway":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def _call(self, role: str, method: str, params: dict) -> dict:
        with self._lock:
            pool = self._pools.get(role)
            if pool is None:
                desc = self.descriptors.get(role)
                if desc is None:
                    raise ProtocolError(f"no backend configured for role {role!r}")
                pool = _SessionPool(desc, self._pool_size)
                self._pools[role] = pool
        session = pool.acquire()
        try:
            return session.request(method, params)
        finally:
            pool.release(session)

    def ping(self, role: str) -> dict:
        return self._call(role, "ping", {})

    def tag_frame(self, frame: np.ndarray) -> list[str]:
        result = self._call("tagger", "tag", {"image": encode_image(frame)})
        labels = result.get("labels")
        if not isinstance(labels, list) or not all(isinstance(l, str) for l in labels):
            raise ValidationFailureError("tag result must be a list of strings")
        return labels

    def detect_label(self, frame: np.ndarray, label: str) -> list[Detection]:
        result = self._call(
            "detector", "detect", {"image": encode_image(frame), "label": label}
        )
        h, w = frame.shape[0], frame.shape[1]
        detections = []
        for entry in result.get("detections", []):
            try:
                x0, y0, x1, y1 = (int(v) for v in entry["box"])
                score = float(entry["score"])
                det = Detection(label=str(entry["label"]), box=(x0, y0, x1, y1), score=score)
            except (KeyError, TypeError, ValueError) as exc:
                raise ProtocolError(f"bad detection entry: {exc}") from exc
            if not (0 <= x0 < x1 <= w and 0 <= y0 < y1 <= h and 0 <= score <= 1):
                raise ValidationFailureError(f"detection out of bounds: {det}")
            detections.append(det)
        return detections

    def segment_box(self, frame: np.ndarray, box: tuple[int, int, int, int]) -> np.ndarray:
        result = self._call(
            "segmenter",
            "segment",
            {"image": encode_image(frame), "box": [int(v) for v in box]},
        )
        if "mask" not in result:
            raise ProtocolError("segment result missing 'mask'")
        return decode_mask(result["mask"], frame.shape[1], frame.shape[0])

    def propagate_mask(self, frames: FrameSequence, mask0: np.ndarray) -> MaskSequence:
        result = self._call(
            "segmenter",
            "propagate",
            {
                "images": [encode_image(f) for f in frames.frames],
                "mask": encode_mask_rle(mask0),
            },
        )
        payloads = result.get("masks")
        if not isinstance(payloads, list) or len(payloads) != len(frames):
            raise ValidationFailureError(
                f"propagate returned {len(payloads or [])} masks for {len(frames)} frames"
            )
        decoded = [decode_mask(p, frames.width, frames.height) for p in payloads]
        return MaskSequence(np.stack(decoded))

    def caption_entity(self, cropped: FrameSequence, tag: str, prompt: str) -> str:
        result = self._call(
            "captioner",
            "caption",
            {
                "images": [encode_image(f) for f in cropped.frames],
                "tag": tag,
                "prompt": prompt,
            },
        )
        text = result.get("text")
        if not isinstance(text, str):
            raise ValidationFailureError("caption result must contain 'text'")
        return text

    def estimate_flow(self, frame_a: np.ndarray, frame_b: np.ndarray) -> np.ndarray:
        import tempfile

        scratch = self.scratch_dir or tempfile.gettempdir()
        result = self._call(
            "flow",
            "flow",
            {
                "image_a": encode_image(frame_a),
                "image_b": encode_image(frame_b),
                "scratch_dir": str(scratch),
            },
        )
        path = result.get("flow_path")
        if not isinstance(path, str):
            raise ProtocolError("flow result missing 'flow_path'")
        try:
            flow = read_flow_sidecar(path)
        except (OSError, ValueError) as exc:
            raise ValidationFailureError(f"unreadable flow sidecar: {exc}") from exc
        finally:
            Path(path).unlink(missing_ok=True)
        return validate_flow(flow, frame_a.shape[1], frame_a.shape[0])

    def embed_frame(self, frame: np.ndarray) -> np.ndarray:
        result = self._call("embedder", "embed", {"image": encode_image(frame)})
        vector = result.get("vector")
        if not isinstance(vector, list) or not vector:
            raise ValidationFailureError("embed result must contain a 'vector' list")
        arr = np.asarray(vector, dtype=np.float64)
        if not np.isfinite(arr).all() or not arr.any():
            raise ValidationFailureError("embedding must be finite and non-zero")
        return arr

    def score_frame(self, frame: np.ndarray, text: str) -> float:
        result = self._call(
            "scorer", "score", {"image": encode_image(frame), "text": text}
        )
        try:
            score = float(result["score"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ProtocolError(f"bad score result: {exc}") from exc
        if not (0.0 <= score <= 1.0):
            raise ValidationFailureError(f"score {score} outside [0, 1]")
        return score

    # adapters for eval-metrics, so that module stays transport-agnostic
    def embedder(self):
        return lambda frame: self.embed_frame(frame)

    def scorer(self):
        return lambda frame, text: self.score_frame(frame, text)
