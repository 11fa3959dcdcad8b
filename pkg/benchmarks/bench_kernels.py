#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-numpy fallback.

Run after installing the package:

    python benchmarks/bench_kernels.py [--repeats 5]

Both implementations produce identical outputs (the test suite asserts it);
this script only reports wall-clock ratios on representative workloads.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from vividforge.kernels import _fallback

try:
    from vividforge.kernels import _native
except ImportError:
    _native = None


def timeit(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def workloads(rng: np.random.Generator):
    mask_small = (rng.random((256, 256)) < 0.05).astype(np.uint8) * 255
    mask_large = np.zeros((720, 1280), np.uint8)
    mask_large[200:520, 300:900] = 255
    frame_a = rng.integers(0, 256, (256, 256)).astype(np.uint8)
    frame_b = np.roll(frame_a, 2, axis=1)
    frame_a_hd = rng.integers(0, 256, (720, 1280)).astype(np.uint8)
    frame_b_hd = np.roll(frame_a_hd, 3, axis=1)
    init = np.zeros((32, 32, 2), np.int32)
    init_hd = np.zeros((90, 160, 2), np.int32)
    flow = ((rng.random((720, 1280, 2)) - 0.5) * 6).astype(np.float32)

    return [
        ("dilate r=4   256x256 sparse", lambda impl: impl.dilate_disk(mask_small, 4)),
        ("dilate r=25  720p solid", lambda impl: impl.dilate_disk(mask_large, 25)),
        ("dilate r=120 720p solid", lambda impl: impl.dilate_disk(mask_large, 120)),
        ("block match  256x256", lambda impl: impl.block_match(frame_a, frame_b, init, 8, 4)),
        ("block match  720p", lambda impl: impl.block_match(frame_a_hd, frame_b_hd, init_hd, 8, 4)),
        ("warp forward 720p", lambda impl: impl.warp_forward(mask_large, flow)),
    ]


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    rows = []
    for name, call in workloads(rng):
        fallback_s = timeit(lambda: call(_fallback), args.repeats)
        if _native is not None:
            native_s = timeit(lambda: call(_native), args.repeats)
            speedup = fallback_s / native_s
            rows.append((name, native_s, fallback_s, speedup))
        else:
            rows.append((name, float("nan"), fallback_s, float("nan")))

    header = f"{'workload':<28} {'native':>10} {'fallback':>10} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for name, native_s, fallback_s, speedup in rows:
        native_txt = f"{native_s * 1e3:9.2f}ms" if native_s == native_s else "      n/a"
        print(f"{name:<28} {native_txt} {fallback_s * 1e3:8.2f}ms {speedup:7.1f}x")
    if _native is None:
        print("\ncompiled kernels not built; only the fallback was measured")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
