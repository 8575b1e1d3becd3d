# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: rectangular assignment and per-patch mask synthesis.

Keep the arithmetic in lockstep with ``_fallback.py``; tests assert the two
backends agree exactly.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fmod, floor, INFINITY, M_PI

cnp.import_array()

cdef double TWO_PI = 2.0 * M_PI


def lsa_solve(cost):
    cdef double[:, ::1] C = np.ascontiguousarray(cost, dtype=np.float64)
    cdef Py_ssize_t nr = C.shape[0], nc = C.shape[1]
    cdef double[::1] u = np.zeros(nr)
    cdef double[::1] v = np.zeros(nc)
    cdef double[::1] shortest = np.empty(nc)
    col4row_arr = np.full(nr, -1, dtype=np.int64)
    cdef cnp.int64_t[::1] col4row = col4row_arr
    cdef cnp.int64_t[::1] row4col = np.full(nc, -1, dtype=np.int64)
    cdef cnp.int64_t[::1] path = np.full(nc, -1, dtype=np.int64)
    cdef cnp.int64_t[::1] vis_rows = np.empty(nr, dtype=np.int64)
    cdef cnp.int64_t[::1] vis_cols = np.empty(nc, dtype=np.int64)
    cdef unsigned char[::1] remaining = np.empty(nc, dtype=np.uint8)
    cdef Py_ssize_t cur_row, i, j, jbest, sink, n_rows, n_cols, t, tmp
    cdef double min_val, lowest, reduced
    cdef bint best_free

    for cur_row in range(nr):
        for j in range(nc):
            shortest[j] = INFINITY
            remaining[j] = 1
        n_rows = 1
        vis_rows[0] = cur_row
        n_cols = 0
        min_val = 0.0
        i = cur_row
        sink = -1
        while sink < 0:
            for j in range(nc):
                if remaining[j]:
                    reduced = min_val + C[i, j] - u[i] - v[j]
                    if reduced < shortest[j]:
                        path[j] = i
                        shortest[j] = reduced
            lowest = INFINITY
            jbest = -1
            best_free = False
            for j in range(nc):
                if not remaining[j]:
                    continue
                if jbest < 0 or shortest[j] < lowest:
                    lowest = shortest[j]
                    jbest = j
                    best_free = row4col[j] < 0
                elif shortest[j] == lowest and not best_free and row4col[j] < 0:
                    jbest = j
                    best_free = True
            min_val = lowest
            remaining[jbest] = 0
            vis_cols[n_cols] = jbest
            n_cols += 1
            if row4col[jbest] < 0:
                sink = jbest
            else:
                i = row4col[jbest]
                vis_rows[n_rows] = i
                n_rows += 1

        u[cur_row] += min_val
        for t in range(1, n_rows):
            i = vis_rows[t]
            u[i] += min_val - shortest[col4row[i]]
        for t in range(n_cols):
            j = vis_cols[t]
            v[j] -= min_val - shortest[j]

        j = sink
        while True:
            i = path[j]
            row4col[j] = i
            tmp = col4row[i]
            col4row[i] = j
            j = tmp
            if i == cur_row:
                break
    return col4row_arr


def patch_levels(out, Py_ssize_t r0, Py_ssize_t r1, Py_ssize_t c0, Py_ssize_t c1,
                 x, y, double dx, double dy, double dz,
                 double wavelength, double focal_length, int bits):
    cdef double[::1] xs = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[::1] ys = np.ascontiguousarray(y, dtype=np.float64)
    cdef double k = M_PI / (wavelength * focal_length)
    cdef double curv = dz / focal_length
    cdef double n = <double>(1 << bits)
    cdef double xx
    cdef Py_ssize_t c
    cdef double[::1] qx = np.empty(c1 - c0)
    for c in range(c0, c1):
        xx = xs[c]
        qx[c - c0] = curv * xx * xx - 2.0 * dx * xx

    if out.dtype == np.uint8:
        _fill_u8(out, r0, r1, c0, c1, qx, ys, dy, curv, k, n)
    else:
        _fill_u16(out, r0, r1, c0, c1, qx, ys, dy, curv, k, n)


cdef inline double _level(double phi, double n) nogil:
    cdef double w = fmod(phi, TWO_PI)
    if w != 0.0 and w < 0.0:
        w += TWO_PI
    if w >= TWO_PI:
        w = 0.0
    cdef double lev = floor(w / TWO_PI * n)
    if lev < 0.0:
        lev = 0.0
    elif lev > n - 1.0:
        lev = n - 1.0
    return lev


cdef void _fill_u8(unsigned char[:, ::1] out, Py_ssize_t r0, Py_ssize_t r1, Py_ssize_t c0, Py_ssize_t c1,
                   double[::1] qx, double[::1] ys, double dy, double curv, double k, double n) noexcept nogil:
    cdef Py_ssize_t r, c
    cdef double yy, qy
    for r in range(r0, r1):
        yy = ys[r]
        qy = curv * yy * yy - 2.0 * dy * yy
        for c in range(c0, c1):
            out[r, c] = <unsigned char>_level(k * (qx[c - c0] + qy), n)


cdef void _fill_u16(cnp.uint16_t[:, ::1] out, Py_ssize_t r0, Py_ssize_t r1, Py_ssize_t c0, Py_ssize_t c1,
                    double[::1] qx, double[::1] ys, double dy, double curv, double k, double n) noexcept nogil:
    cdef Py_ssize_t r, c
    cdef double yy, qy
    for r in range(r0, r1):
        yy = ys[r]
        qy = curv * yy * yy - 2.0 * dy * yy
        for c in range(c0, c1):
            out[r, c] = <cnp.uint16_t>_level(k * (qx[c - c0] + qy), n)

