"""Shared synthetic fixtures.

The mock backends key on saturated primary colors (red -> "car",
green -> "dog", blue -> "sky", magenta -> "blue"), so fixtures paint flat
rectangles over low-saturation noise that never trips a color classifier.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from vividforge.core import FrameSequence, MaskSequence
from vividforge.gateway import Gateway


def noise_frames(rng: np.random.Generator, n: int, h: int, w: int) -> np.ndarray:
    return rng.integers(90, 150, (n, h, w, 3)).astype(np.uint8)


def paint(frames: np.ndarray, index: int, y0: int, y1: int, x0: int, x1: int,
          color: tuple[int, int, int]) -> None:
    frames[index, y0:y1, x0:x1] = color


def rect_mask(n: int, h: int, w: int, y0: int, y1: int, x0: int, x1: int) -> MaskSequence:
    masks = np.zeros((n, h, w), dtype=np.uint8)
    masks[:, y0:y1, x0:x1] = 255
    return MaskSequence(masks)


def random_blob(rng: np.random.Generator, h: int, w: int, density: float = 0.08) -> np.ndarray:
    """Non-empty random binary raster."""
    while True:
        mask = (rng.random((h, w)) < density).astype(np.uint8) * 255
        if mask.any():
            return mask


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(0)


@pytest.fixture
def gateway() -> Gateway:
    with Gateway() as gw:
        yield gw


@pytest.fixture
def red_green_image(rng) -> FrameSequence:
    """One frame holding a red and a green rectangle (two mock entities)."""
    frames = noise_frames(rng, 1, 96, 96)
    paint(frames, 0, 10, 30, 12, 36, (230, 20, 20))
    paint(frames, 0, 50, 70, 40, 80, (15, 230, 25))
    return FrameSequence(frames, Fraction(30), "img-redgreen")


@pytest.fixture
def moving_red_video(rng) -> FrameSequence:
    """5 frames with a red rectangle drifting right 1 px/frame."""
    frames = noise_frames(rng, 5, 96, 96)
    for i in range(5):
        paint(frames, i, 20, 44, 10 + i, 34 + i, (230, 20, 20))
    return FrameSequence(frames, Fraction(30), "vid-red")


@pytest.fixture
def sky_video(rng) -> FrameSequence:
    """5 static frames with a large blue band (mock background region)."""
    frames = noise_frames(rng, 5, 96, 96)
    frames[:, 4:64, 4:92] = (20, 30, 235)
    return FrameSequence(frames, Fraction(30), "vid-sky")


@pytest.fixture
def sky_image(rng) -> FrameSequence:
    frames = noise_frames(rng, 1, 96, 96)
    frames[:, 4:64, 4:92] = (20, 30, 235)
    return FrameSequence(frames, Fraction(30), "img-sky")
