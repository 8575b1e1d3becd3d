"""Pure-Python/numpy implementations of the hot kernels.

These mirror ``_kernels.pyx`` operation for operation so that both backends
produce identical assignments and bit-identical quantized masks.
"""

from __future__ import annotations

import math

import numpy as np

TWO_PI = 2.0 * math.pi


def lsa_solve(cost: np.ndarray) -> np.ndarray:
    """Minimum-cost assignment of every row to a distinct column.

    Shortest augmenting path form of Jonker-Volgenant for ``rows <= cols``.
    Returns ``col4row``. Ties are broken toward free columns, then toward the
    lowest column index, so the result is deterministic.
    """
    cost = np.ascontiguousarray(cost, dtype=np.float64)
    nr, nc = cost.shape
    u = np.zeros(nr)
    v = np.zeros(nc)
    col4row = np.full(nr, -1, dtype=np.int64)
    row4col = np.full(nc, -1, dtype=np.int64)
    path = np.full(nc, -1, dtype=np.int64)

    for cur_row in range(nr):
        shortest = np.full(nc, np.inf)
        remaining = np.ones(nc, dtype=bool)
        visited_rows = [cur_row]
        visited_cols = []
        min_val = 0.0
        i = cur_row
        sink = -1
        while sink < 0:
            reduced = min_val + cost[i] - u[i] - v
            better = remaining & (reduced < shortest)
            path[better] = i
            shortest[better] = reduced[better]

            masked = np.where(remaining, shortest, np.inf)
            lowest = masked.min()
            tied = remaining & (masked == lowest)
            free = tied & (row4col < 0)
            j = int(np.argmax(free)) if free.any() else int(np.argmax(tied))

            min_val = lowest
            remaining[j] = False
            visited_cols.append(j)
            if row4col[j] < 0:
                sink = j
            else:
                i = int(row4col[j])
                visited_rows.append(i)

        u[cur_row] += min_val
        for r in visited_rows[1:]:
            u[r] += min_val - shortest[col4row[r]]
        for c in visited_cols:
            v[c] -= min_val - shortest[c]

        j = sink
        while True:
            i = int(path[j])
            row4col[j] = i
            col4row[i], j = j, col4row[i]
            if i == cur_row:
                break
    return col4row


def patch_levels(
    out: np.ndarray,
    r0: int,
    r1: int,
    c0: int,
    c1: int,
    x: np.ndarray,
    y: np.ndarray,
    dx: float,
    dy: float,
    dz: float,
    wavelength: float,
    focal_length: float,
    bits: int,
) -> None:
    """Write quantized steering phase for one target into ``out[r0:r1, c0:c1]``."""
    k = math.pi / (wavelength * focal_length)
    curv = dz / focal_length
    xs = x[c0:c1]
    ys = y[r0:r1]
    qx = curv * xs * xs - 2.0 * dx * xs
    qy = curv * ys * ys - 2.0 * dy * ys
    phi = k * (qx[None, :] + qy[:, None])
    w = np.mod(phi, TWO_PI)
    w[w >= TWO_PI] = 0.0
    n = float(1 << bits)
    levels = np.floor(w / TWO_PI * n)
    np.clip(levels, 0.0, n - 1.0, out=levels)
    out[r0:r1, c0:c1] = levels


def checkerboard_levels(out: np.ndarray, r0: int, r1: int, c0: int, c1: int, bits: int) -> None:
    """Binary 0/pi checkerboard at a two-pixel period, in quantized levels."""
    half = 1 << (bits - 1)
    rr = np.arange(r0, r1)[:, None]
    cc = np.arange(c0, c1)[None, :]
    out[r0:r1, c0:c1] = ((rr + cc) & 1) * half
