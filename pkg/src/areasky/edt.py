"""Exact two-pass squared Euclidean distance transform.

The row pass sweeps each row from both ends to get the horizontal distance to
the nearest same-row facility.  The column pass keeps, per column, a stack of
points ``(x, y)`` (x = row index, y = row-pass distance) forming the lower
envelope of the parabolas ``(x - x_i)**2 + y_i**2`` and then samples it.  All
comparisons are done by integer cross-multiplication.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np

from .model import ContractError, EmptyLayerError, GridMap, dmax2


class EnvelopePoint(NamedTuple):
    x: int
    y: int


@dataclass(frozen=True)
class DistanceField:
    type_id: int
    cells: np.ndarray  # (k, k) int64 squared distances

    def __eq__(self, other):
        if not isinstance(other, DistanceField):
            return NotImplemented
        return self.type_id == other.type_id and np.array_equal(self.cells, other.cells)

    __hash__ = None


def row_sentinel(k: int) -> int:
    return k


def empty_marker(k: int) -> int:
    """Value written for cells of a column with no reachable facility."""
    return dmax2(k) + 1


def row_pass_mask(occupied: np.ndarray) -> np.ndarray:
    """Row pass over a boolean ``(rows, k)`` occupancy block.

    Vectorised across rows; the sweep itself runs along the columns.
    """
    rows, k = occupied.shape
    inf = row_sentinel(k)
    fwd = np.empty((rows, k), dtype=np.int64)
    prev = np.full(rows, inf, dtype=np.int64)
    for c in range(k):
        prev = np.where(occupied[:, c], 0, np.minimum(prev + 1, inf))
        fwd[:, c] = prev
    out = fwd
    prev = np.full(rows, inf, dtype=np.int64)
    for c in range(k - 1, -1, -1):
        prev = np.where(occupied[:, c], 0, np.minimum(prev + 1, inf))
        np.minimum(out[:, c], prev, out=out[:, c])
    return out


def row_pass(m: GridMap, type_id: int, rows: slice | None = None) -> np.ndarray:
    """Horizontal distances for one layer; ``k`` marks rows without a facility."""
    occ = m.mask(type_id)
    if rows is not None:
        occ = occ[rows]
    return row_pass_mask(occ)


def bisector_x(p_i: Sequence[int], p_j: Sequence[int]) -> Fraction:
    """Row coordinate where the parabolas of ``p_i`` and ``p_j`` cross."""
    (xi, yi), (xj, yj) = p_i, p_j
    if xi == xj:
        raise ContractError(f"bisector undefined for equal x={xi}")
    return Fraction((yj * yj - yi * yi) + (xj * xj - xi * xi), 2 * (xj - xi))


def _cross(p, q):
    # numerator and (positive, since x increases on the stack) denominator
    return (q[1] * q[1] - p[1] * p[1]) + (q[0] * q[0] - p[0] * p[0]), 2 * (q[0] - p[0])


def lower_envelope(ys: Sequence[int], inf: int) -> list[EnvelopePoint]:
    """Stack of envelope points for one column, ``inf`` entries skipped.

    A middle point ``p_j`` is popped when ``x_ij >= x_jk``; with ``>=`` any
    point that only ever ties its neighbours is removed too.
    """
    stack: list[tuple[int, int]] = []
    for x, y in enumerate(ys):
        y = int(y)
        if y >= inf:
            continue
        p_k = (x, y)
        while len(stack) >= 2:
            n_ij, d_ij = _cross(stack[-2], stack[-1])
            n_jk, d_jk = _cross(stack[-1], p_k)
            if n_ij * d_jk >= n_jk * d_ij:
                stack.pop()
            else:
                break
        stack.append(p_k)
    return [EnvelopePoint(x, y) for x, y in stack]


def sample_envelope(points: Sequence[tuple[int, int]], k: int) -> list[int]:
    """Evaluate the envelope at rows ``0..k-1``."""
    if not points:
        return [empty_marker(k)] * k
    out = []
    t = 0
    last = len(points) - 1
    for x in range(k):
        # advance while the next point is strictly nearer beyond the bisector
        while t < last:
            num, den = _cross(points[t], points[t + 1])
            if num < x * den:
                t += 1
            else:
                break
        px, py = points[t]
        out.append((x - px) ** 2 + py * py)
    return out


def column_pass_scalar(rowdist: np.ndarray) -> np.ndarray:
    """Reference column pass: one :func:`lower_envelope` per column."""
    k = rowdist.shape[0]
    inf = row_sentinel(k)
    out = np.empty(rowdist.shape, dtype=np.int64)
    for c, ys in enumerate(rowdist.T.tolist()):
        out[:, c] = sample_envelope(lower_envelope(ys, inf), k)
    return out


def column_pass(rowdist: np.ndarray) -> np.ndarray:
    """Column pass over a ``(k, cols)`` block of row-pass distances.

    Same stack discipline as :func:`lower_envelope`, run for all columns of
    the block at once.  Returns squared distances in ``[row, col]`` layout.
    """
    rowdist = np.asarray(rowdist, dtype=np.int64)
    k, ncols = rowdist.shape
    inf = row_sentinel(k)
    sx = np.zeros((ncols, k), dtype=np.int64)
    sy = np.zeros((ncols, k), dtype=np.int64)
    top = np.zeros(ncols, dtype=np.int64)

    for x in range(k):
        y = rowdist[x]
        live = np.flatnonzero(y < inf)
        if not len(live):
            continue
        yk = y[live]
        busy = live
        ybusy = yk
        while len(busy):
            deep = top[busy] >= 2
            busy, ybusy = busy[deep], ybusy[deep]
            if not len(busy):
                break
            t = top[busy]
            xi, yi = sx[busy, t - 2], sy[busy, t - 2]
            xj, yj = sx[busy, t - 1], sy[busy, t - 1]
            n_ij = (yj * yj - yi * yi) + (xj * xj - xi * xi)
            d_ij = 2 * (xj - xi)
            n_jk = (ybusy * ybusy - yj * yj) + (x * x - xj * xj)
            d_jk = 2 * (x - xj)
            pop = n_ij * d_jk >= n_jk * d_ij
            busy, ybusy = busy[pop], ybusy[pop]
            top[busy] -= 1
        t = top[live]
        sx[live, t] = x
        sy[live, t] = yk
        top[live] += 1

    out = np.empty((k, ncols), dtype=np.int64)
    ptr = np.zeros(ncols, dtype=np.int64)
    filled = np.flatnonzero(top > 0)
    empty = top == 0
    for x in range(k):
        moving = filled
        while len(moving):
            moving = moving[ptr[moving] < top[moving] - 1]
            if not len(moving):
                break
            p = ptr[moving]
            xa, ya = sx[moving, p], sy[moving, p]
            xb, yb = sx[moving, p + 1], sy[moving, p + 1]
            num = (yb * yb - ya * ya) + (xb * xb - xa * xa)
            den = 2 * (xb - xa)
            moving = moving[num < x * den]
            ptr[moving] += 1
        cols = np.arange(ncols)
        px, py = sx[cols, ptr], sy[cols, ptr]
        out[x] = (x - px) ** 2 + py * py
        out[x, empty] = empty_marker(k)
    return out


def edt(m: GridMap, type_id: int) -> DistanceField:
    if not m.placements[type_id]:
        raise EmptyLayerError(f"facility type {type_id} has no placements")
    return DistanceField(type_id, column_pass(row_pass(m, type_id)))


def brute_force_edt(m: GridMap, type_id: int) -> DistanceField:
    """Direct nearest-facility minimisation (test oracle)."""
    cells = np.asarray(m.placements[type_id], dtype=np.int64).reshape(-1, 2)
    if not len(cells):
        raise EmptyLayerError(f"facility type {type_id} has no placements")
    k = m.k
    r = np.arange(k, dtype=np.int64)
    best = np.full((k, k), np.iinfo(np.int64).max, dtype=np.int64)
    dr = (r[None, :] - cells[:, 0:1]) ** 2  # (P, k)
    dc = (r[None, :] - cells[:, 1:2]) ** 2
    # keep the working set around a few million cells
    step = max(1, 4_000_000 // (k * k))
    for lo in range(0, len(cells), step):
        d = dr[lo : lo + step, :, None] + dc[lo : lo + step, None, :]
        np.minimum(best, d.min(axis=0), out=best)
    return DistanceField(type_id, best)
