"""Deterministic mock perception backends for tests and offline development.

The mocks key on saturated primary colors so synthetic fixtures can exercise
the full pipeline without any neural model:

  red regions    -> label "car"
  green regions  -> label "dog"
  blue regions   -> label "sky"
  magenta        -> label "blue" (a color word, so foreground filtering drops it)

Every handler is a pure function of its request; run as a stdio server with
``python -m vividforge.mockbackend --role tagger`` or call ``handle`` in
process through the gateway's mock transport.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from vividforge.gateway import (
    decode_image,
    decode_mask,
    encode_mask_rle,
)
from vividforge.flow import block_match_flow, write_flow_sidecar

MIN_REGION_PIXELS = 16

#: (color name, classifier, emitted label) in priority order.
_CLASSIFIERS = (
    ("red", lambda f: (f[..., 0] >= 200) & (f[..., 1] <= 80) & (f[..., 2] <= 80), "car"),
    ("green", lambda f: (f[..., 1] >= 200) & (f[..., 0] <= 80) & (f[..., 2] <= 80), "dog"),
    ("blue", lambda f: (f[..., 2] >= 200) & (f[..., 0] <= 80) & (f[..., 1] <= 80), "sky"),
    ("magenta", lambda f: (f[..., 0] >= 200) & (f[..., 2] >= 200) & (f[..., 1] <= 80), "blue"),
)

_LABEL_TO_CLASS = {label: name for name, _, label in _CLASSIFIERS}

ROLE_METHODS = {
    "tagger": ("tag",),
    "detector": ("detect",),
    "segmenter": ("segment", "propagate"),
    "captioner": ("caption",),
    "flow": ("flow",),
    "embedder": ("embed",),
    "scorer": ("score",),
}

MOCK_SCORE = 0.21

CAPTION_TEMPLATE = (
    "The video shows a {tag} in a synthetic scene.\n"
    "The video shows a {tag} rendered as a flat colored region. "
    "It stays clearly visible in every frame.\n"
    "The video shows a {tag} occupying part of the frame, drawn as a uniform "
    "block of color against a neutral background. The {tag} keeps its shape "
    "and position is easy to follow across the whole clip."
)


def _class_masks(frame: np.ndarray) -> dict[str, np.ndarray]:
    return {name: clf(frame) for name, clf, _ in _CLASSIFIERS}


def mock_tag(frame: np.ndarray) -> list[str]:
    """Labels for color classes covering at least MIN_REGION_PIXELS pixels."""
    counts = []
    for name, clf, label in _CLASSIFIERS:
        count = int(clf(frame).sum())
        if count >= MIN_REGION_PIXELS:
            counts.append((-count, label))
    return [label for _, label in sorted(counts)]


def mock_detect(frame: np.ndarray, label: str) -> list[dict]:
    name = _LABEL_TO_CLASS.get(label)
    if name is None:
        return []
    mask = _class_masks(frame)[name]
    if mask.sum() < MIN_REGION_PIXELS:
        return []
    ys, xs = np.nonzero(mask)
    x0, y0 = int(xs.min()), int(ys.min())
    x1, y1 = int(xs.max()) + 1, int(ys.max()) + 1
    coverage = round(float(mask.sum()) / ((x1 - x0) * (y1 - y0)), 4)
    return [{"label": label, "box": [x0, y0, x1, y1], "score": min(coverage, 1.0)}]


def mock_segment(frame: np.ndarray, box: list[int]) -> np.ndarray:
    """Mask of the dominant color class inside the box, zero outside it."""
    x0, y0, x1, y1 = box
    window = frame[y0:y1, x0:x1]
    best_name, best_count = None, 0
    for name, clf, _ in _CLASSIFIERS:
        count = int(clf(window).sum())
        if count > best_count:
            best_name, best_count = name, count
    out = np.zeros(frame.shape[:2], dtype=np.uint8)
    if best_name is not None:
        clf = dict((n, c) for n, c, _ in _CLASSIFIERS)[best_name]
        out[y0:y1, x0:x1] = np.where(clf(window), 255, 0).astype(np.uint8)
    return out


def mock_propagate(frames: list[np.ndarray], mask0: np.ndarray) -> list[np.ndarray]:
    """Track the color class that dominates the keyframe mask."""
    best_name, best_count = None, 0
    under = mask0 > 0
    for name, clf, _ in _CLASSIFIERS:
        count = int((clf(frames[0]) & under).sum())
        if count > best_count:
            best_name, best_count = name, count
    out = []
    for frame in frames:
        if best_name is None:
            out.append(np.zeros(frame.shape[:2], dtype=np.uint8))
        else:
            clf = dict((n, c) for n, c, _ in _CLASSIFIERS)[best_name]
            out.append(np.where(clf(frame), 255, 0).astype(np.uint8))
    return out


def mock_caption(tag: str) -> str:
    return CAPTION_TEMPLATE.format(tag=tag)


def mock_embed(frame: np.ndarray) -> list[float]:
    from vividforge.metrics import builtin_embed

    return [float(v) for v in builtin_embed(frame)]


def handle(role: str, line: str) -> str:
    """Process one request line for a role; always returns one response line."""
    try:
        request = json.loads(line)
        request_id = request.get("id")
        method = request["method"]
        params = request.get("params", {})
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        return json.dumps(
            {"id": None, "ok": False, "error": {"code": "bad_request", "message": str(exc)}}
        )
    try:
        if method == "ping":
            result = {"role": role, "protocol": "vivid-forge/1"}
        elif method not in ROLE_METHODS.get(role, ()):
            raise ValueError(f"method {method!r} not served by role {role!r}")
        elif method == "tag":
            result = {"labels": mock_tag(decode_image(params["image"]))}
        elif method == "detect":
            result = {
                "detections": mock_detect(decode_image(params["image"]), params["label"])
            }
        elif method == "segment":
            frame = decode_image(params["image"])
            mask = mock_segment(frame, [int(v) for v in params["box"]])
            result = {"mask": encode_mask_rle(mask)}
        elif method == "propagate":
            frames = [decode_image(p) for p in params["images"]]
            h, w = frames[0].shape[:2]
            mask0 = decode_mask(params["mask"], w, h)
            masks = mock_propagate(frames, mask0)
            result = {"masks": [encode_mask_rle(m) for m in masks]}
        elif method == "caption":
            result = {"text": mock_caption(params["tag"])}
        elif method == "flow":
            frame_a = decode_image(params["image_a"])
            frame_b = decode_image(params["image_b"])
            flow = block_match_flow(frame_a, frame_b)
            scratch = params.get("scratch_dir") or tempfile.gettempdir()
            fd, path = tempfile.mkstemp(suffix=".flow16", dir=scratch)
            os.close(fd)
            write_flow_sidecar(path, flow)
            result = {"flow_path": str(Path(path))}
        elif method == "embed":
            result = {"vector": mock_embed(decode_image(params["image"]))}
        elif method == "score":
            decode_image(params["image"])
            result = {"score": MOCK_SCORE}
        else:
            raise ValueError(f"unknown method {method!r}")
    except Exception as exc:  # mock boundary: map any failure to an error envelope
        return json.dumps(
            {
                "id": request_id,
                "ok": False,
                "error": {"code": type(exc).__name__, "message": str(exc)},
            }
        )
    return json.dumps({"id": request_id, "ok": True, "result": result})


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description="deterministic mock perception backend")
    parser.add_argument("--role", required=True, choices=sorted(ROLE_METHODS))
    args = parser.parse_args(argv)
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        sys.stdout.write(handle(args.role, line) + "\n")
        sys.stdout.flush()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
