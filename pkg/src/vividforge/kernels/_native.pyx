# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels: SAD block search, disk dilation, forward mask warping.

Semantics must stay bit-identical to ``_fallback.py``; the suite asserts it.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport floor

cnp.import_array()

cdef long long SENTINEL = (<long long>1) << 62
cdef long long INF = (<long long>1) << 40


def block_match(cnp.uint8_t[:, ::1] prev, cnp.uint8_t[:, ::1] nxt,
                cnp.int32_t[:, :, ::1] init, int block, int radius):
    cdef int h = prev.shape[0]
    cdef int w = prev.shape[1]
    cdef int nby = init.shape[0]
    cdef int nbx = init.shape[1]
    out = np.empty((nby, nbx, 2), dtype=np.int32)
    cdef cnp.int32_t[:, :, ::1] res = out
    cdef int by, bx, y0, y1, x0, x1, ix, iy, dy, dx, ty, tx, y, x, d
    cdef int best_dx, best_dy
    cdef long long best, cost
    for by in range(nby):
        y0 = by * block
        y1 = y0 + block
        if y1 > h:
            y1 = h
        for bx in range(nbx):
            x0 = bx * block
            x1 = x0 + block
            if x1 > w:
                x1 = w
            ix = init[by, bx, 0]
            iy = init[by, bx, 1]
            best = SENTINEL
            best_dx = ix
            best_dy = iy
            for dy in range(-radius, radius + 1):
                ty = iy + dy
                if y0 + ty < 0 or y1 + ty > h:
                    continue
                for dx in range(-radius, radius + 1):
                    tx = ix + dx
                    if x0 + tx < 0 or x1 + tx > w:
                        continue
                    cost = 0
                    for y in range(y0, y1):
                        for x in range(x0, x1):
                            d = <int>prev[y, x] - <int>nxt[y + ty, x + tx]
                            cost += d if d >= 0 else -d
                    if cost < best:
                        best = cost
                        best_dx = tx
                        best_dy = ty
            res[by, bx, 0] = best_dx
            res[by, bx, 1] = best_dy
    return out


cdef void _edt_1d(long long[::1] f, long long[::1] d, int[::1] v,
                  double[::1] z, int n) noexcept nogil:
    # Felzenszwalb-Huttenlocher 1D squared distance transform lower envelope.
    cdef int k = 0
    cdef int q
    cdef double s
    v[0] = 0
    z[0] = -1e308
    z[1] = 1e308
    for q in range(1, n):
        while True:
            s = ((<double>(f[q] + (<long long>q) * q)
                  - <double>(f[v[k]] + (<long long>v[k]) * v[k]))
                 / (2.0 * q - 2.0 * v[k]))
            if s <= z[k]:
                k -= 1
            else:
                break
        k += 1
        v[k] = q
        z[k] = s
        z[k + 1] = 1e308
    k = 0
    for q in range(n):
        while z[k + 1] < q:
            k += 1
        d[q] = (<long long>(q - v[k])) * (q - v[k]) + f[v[k]]


def dilate_disk(cnp.uint8_t[:, ::1] mask, int radius):
    # Exact disk dilation: squared EDT from set pixels, thresholded at r*r.
    cdef int h = mask.shape[0]
    cdef int w = mask.shape[1]
    cdef int n = h if h > w else w
    grid_arr = np.empty((h, w), dtype=np.int64)
    out_arr = np.zeros((h, w), dtype=np.uint8)
    f_arr = np.empty(n, dtype=np.int64)
    d_arr = np.empty(n, dtype=np.int64)
    v_arr = np.empty(n, dtype=np.int32)
    z_arr = np.empty(n + 1, dtype=np.float64)
    cdef long long[:, ::1] grid = grid_arr
    cdef cnp.uint8_t[:, ::1] out = out_arr
    cdef long long[::1] f = f_arr
    cdef long long[::1] d = d_arr
    cdef int[::1] v = v_arr
    cdef double[::1] z = z_arr
    cdef int x, y
    cdef long long r2 = (<long long>radius) * radius
    for x in range(w):
        for y in range(h):
            f[y] = 0 if mask[y, x] else INF
        _edt_1d(f, d, v, z, h)
        for y in range(h):
            grid[y, x] = d[y]
    for y in range(h):
        for x in range(w):
            f[x] = grid[y, x]
        _edt_1d(f, d, v, z, w)
        for x in range(w):
            if d[x] <= r2:
                out[y, x] = 255
    return out_arr


def warp_forward(cnp.uint8_t[:, ::1] mask, cnp.float32_t[:, :, ::1] flow):
    cdef int h = mask.shape[0]
    cdef int w = mask.shape[1]
    out_arr = np.zeros((h, w), dtype=np.uint8)
    cdef cnp.uint8_t[:, ::1] out = out_arr
    cdef int y, x, ty, tx
    for y in range(h):
        for x in range(w):
            if mask[y, x]:
                tx = x + <int>floor(<double>flow[y, x, 0] + 0.5)
                ty = y + <int>floor(<double>flow[y, x, 1] + 0.5)
                if 0 <= tx < w and 0 <= ty < h:
                    out[ty, tx] = 255
    return out_arr
