"""Hot raster kernels with a compiled core and a pure-numpy fallback.

The compiled extension is preferred; set ``VIVIDFORGE_PURE_PYTHON=1`` to force
the fallback. Both implementations are exact and produce identical outputs,
so callers never need to know which one is active (``BACKEND`` says anyway).
"""

from __future__ import annotations

import os

import numpy as np

if os.environ.get("VIVIDFORGE_PURE_PYTHON"):
    from vividforge.kernels import _fallback as _impl

    BACKEND = "fallback"
else:
    try:
        from vividforge.kernels import _native as _impl  # type: ignore[no-redef]

        BACKEND = "native"
    except ImportError:
        from vividforge.kernels import _fallback as _impl  # type: ignore[no-redef]

        BACKEND = "fallback"


def _as_mask(mask: np.ndarray) -> np.ndarray:
    mask = np.ascontiguousarray(mask, dtype=np.uint8)
    if mask.ndim != 2:
        raise ValueError(f"mask must be 2-D, got shape {mask.shape}")
    return mask


def dilate_disk(mask: np.ndarray, radius: int) -> np.ndarray:
    """Dilate a binary (0/255) raster by the discrete disk of ``radius``."""
    if radius < 0:
        raise ValueError(f"radius must be >= 0, got {radius}")
    return _impl.dilate_disk(_as_mask(mask), int(radius))


def erode_disk(mask: np.ndarray, radius: int) -> np.ndarray:
    """Erode by the disk: a pixel survives iff its whole disk neighbourhood is set.

    Computed as the complement dilation; out-of-frame counts as unset, so set
    regions touching the border erode there too.
    """
    mask = _as_mask(mask)
    inverted = np.where(mask > 0, 0, 255).astype(np.uint8)
    grown = dilate_disk(inverted, radius)
    return np.where(grown > 0, 0, 255).astype(np.uint8)


def closing_disk(mask: np.ndarray, radius: int) -> np.ndarray:
    """Morphological closing (dilate then erode) with infinite-plane semantics.

    Padding by ``2 * radius`` before the round trip keeps the operation
    extensive: the output is always a superset of the input, even at borders.
    """
    mask = _as_mask(mask)
    if radius == 0:
        return mask.copy()
    pad = 2 * radius
    padded = np.zeros((mask.shape[0] + 2 * pad, mask.shape[1] + 2 * pad), dtype=np.uint8)
    padded[pad:-pad, pad:-pad] = mask
    closed = erode_disk(dilate_disk(padded, radius), radius)
    return closed[pad:-pad, pad:-pad].copy()


def block_match(
    prev: np.ndarray,
    nxt: np.ndarray,
    init: np.ndarray,
    block: int = 8,
    radius: int = 4,
) -> np.ndarray:
    """Per-block integer displacement minimizing SAD around per-block inits.

    ``init`` is int32 (nby, nbx, 2) of (dx, dy) starting displacements; the
    result holds total displacements in the same layout.
    """
    prev = np.ascontiguousarray(prev, dtype=np.uint8)
    nxt = np.ascontiguousarray(nxt, dtype=np.uint8)
    if prev.shape != nxt.shape or prev.ndim != 2:
        raise ValueError(f"frames must be equal 2-D shapes, got {prev.shape} vs {nxt.shape}")
    init = np.ascontiguousarray(init, dtype=np.int32)
    nby = -(-prev.shape[0] // block)
    nbx = -(-prev.shape[1] // block)
    if init.shape != (nby, nbx, 2):
        raise ValueError(f"init must be {(nby, nbx, 2)}, got {init.shape}")
    return _impl.block_match(prev, nxt, init, int(block), int(radius))


def warp_forward(mask: np.ndarray, flow: np.ndarray) -> np.ndarray:
    """Scatter each set pixel to position + round(flow); out-of-frame drops."""
    mask = _as_mask(mask)
    flow = np.ascontiguousarray(flow, dtype=np.float32)
    if flow.shape != mask.shape + (2,):
        raise ValueError(f"flow must be {mask.shape + (2,)}, got {flow.shape}")
    return _impl.warp_forward(mask, flow)
