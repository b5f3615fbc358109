"""Skyline operators over :class:`~areasky.model.TupleBlock` batches.

All operators return a canonical (row, col)-sorted block.  The block
nested-loop and sort-filter-skyline scans are vectorised per block of input
tuples; the dominance rule is the usual one (no worse everywhere, strictly
better somewhere), so identical tuples never eliminate each other.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .model import ContractError, DistanceTuple, TupleBlock

BLOCK = 1024
# upper bound on the boolean working set of one dominance test
_CELLS = 1 << 22


def as_block(tuples, n: int | None = None) -> TupleBlock:
    if isinstance(tuples, TupleBlock):
        return tuples
    tuples = list(tuples)
    if tuples and not isinstance(tuples[0], DistanceTuple):
        raise TypeError(f"expected DistanceTuple items, got {type(tuples[0]).__name__}")
    return TupleBlock.from_tuples(tuples, n=n if n is not None else 0)


def dominated_by(cands: np.ndarray, doms: np.ndarray) -> np.ndarray:
    """Mask over ``cands`` rows that some row of ``doms`` dominates.

    Uses ``b <= a`` componentwise plus ``sum(b) < sum(a)`` for strictness,
    which is equivalent once the componentwise test holds.
    """
    out = np.zeros(len(cands), dtype=bool)
    if not len(cands) or not len(doms):
        return out
    if cands.shape[1] != doms.shape[1]:
        raise ContractError(f"dimension mismatch: {cands.shape[1]} vs {doms.shape[1]}")
    n = cands.shape[1]
    csum = cands.sum(axis=1)
    dsum = doms.sum(axis=1)
    bstep = max(1, min(len(doms), _CELLS // max(1, min(len(cands), 4096))))
    astep = max(1, _CELLS // bstep)
    for a0 in range(0, len(cands), astep):
        a = cands[a0 : a0 + astep]
        asum = csum[a0 : a0 + astep]
        hit = np.zeros(len(a), dtype=bool)
        for b0 in range(0, len(doms), bstep):
            b = doms[b0 : b0 + bstep]
            m = dsum[None, b0 : b0 + bstep] < asum[:, None]
            for j in range(n):
                m &= b[None, :, j] <= a[:, None, j]
            hit |= m.any(axis=1)
        out[a0 : a0 + astep] = hit
    return out


def bnl_indices(scores: np.ndarray, block: int = BLOCK) -> np.ndarray:
    """Block nested loop: indices of skyline rows, ascending."""
    n = scores.shape[1] if scores.ndim == 2 else 0
    window = np.empty(0, dtype=np.int64)
    wscores = np.empty((0, n), dtype=np.int64)
    for lo in range(0, len(scores), block):
        idx = np.arange(lo, min(lo + block, len(scores)))
        x = scores[idx]
        keep = ~dominated_by(x, wscores)
        idx, x = idx[keep], x[keep]
        if not len(idx):
            continue
        evict = dominated_by(wscores, x)
        window, wscores = window[~evict], wscores[~evict]
        inner = ~dominated_by(x, x)
        window = np.concatenate([window, idx[inner]])
        wscores = np.concatenate([wscores, x[inner]])
    return np.sort(window)


def sfs_order(scores: np.ndarray, grids: np.ndarray | None = None) -> np.ndarray:
    """Presort by score sum, ties by (row, col) when grid ids are given."""
    keys = [scores.sum(axis=1)]
    if grids is not None:
        keys = [grids[:, 1], grids[:, 0]] + keys
    return np.lexsort(keys)


def sfs_indices(scores: np.ndarray, grids: np.ndarray | None = None, block: int = BLOCK) -> np.ndarray:
    """Sort-filter-skyline: after the presort nothing later can dominate an
    earlier tuple, so the window only ever grows."""
    n = scores.shape[1] if scores.ndim == 2 else 0
    order = sfs_order(scores, grids)
    kept = []
    wscores = np.empty((0, n), dtype=np.int64)
    for lo in range(0, len(order), block):
        idx = order[lo : lo + block]
        x = scores[idx]
        keep = ~dominated_by(x, wscores)
        idx, x = idx[keep], x[keep]
        if not len(idx):
            continue
        inner = ~dominated_by(x, x)
        kept.append(idx[inner])
        wscores = np.concatenate([wscores, x[inner]])
    if not kept:
        return np.empty(0, dtype=np.int64)
    return np.sort(np.concatenate(kept))


def bnl_skyline(tuples) -> TupleBlock:
    b = as_block(tuples)
    return b.take(bnl_indices(b.scores)).canonical()


def sfs_skyline(tuples) -> TupleBlock:
    b = as_block(tuples)
    return b.take(sfs_indices(b.scores, b.grids)).canonical()


def local_skyline(block: TupleBlock, algo: str = "bnl") -> TupleBlock:
    if algo == "bnl":
        return block.take(bnl_indices(block.scores))
    if algo == "sfs":
        return block.take(sfs_indices(block.scores, block.grids))
    raise ContractError(f"unknown skyline algorithm {algo!r}")


def brute_force_skyline(tuples) -> TupleBlock:
    """Pairwise definition, kept independent of the scan operators above.

    Only tuples with a strictly smaller score sum can dominate, so each chunk
    is checked against that prefix of the sum-sorted input.
    """
    b = as_block(tuples)
    order = np.argsort(b.scores.sum(axis=1), kind="stable")
    s = b.scores[order]
    sums = s.sum(axis=1)
    keep = np.ones(len(s), dtype=bool)
    step = max(1, _CELLS // max(1, len(s)))
    for lo in range(0, len(s), step):
        a = s[lo : lo + step]
        rivals = s[: np.searchsorted(sums, sums[lo + len(a) - 1], side="left")]
        if not len(rivals):
            continue
        no_worse = np.ones((len(a), len(rivals)), dtype=bool)
        better = np.zeros((len(a), len(rivals)), dtype=bool)
        for j in range(b.n):
            col, mine = rivals[None, :, j], a[:, j, None]
            no_worse &= col <= mine
            better |= col < mine
        keep[lo : lo + step] = ~np.any(no_worse & better, axis=1)
    return b.take(np.sort(order[keep])).canonical()


# --- median split used by the MR-BNL / MR-SFS back-ends -----------------------


def compute_center(tuples) -> np.ndarray:
    """Per-dimension lower median."""
    s = tuples.scores if isinstance(tuples, TupleBlock) else np.asarray(_score_rows(tuples), dtype=np.int64)
    if len(s) == 0:
        raise ContractError("center of an empty tuple set is undefined")
    return np.sort(s, axis=0)[(len(s) - 1) // 2].astype(np.int64)


def _score_rows(tuples):
    return [t.scores if isinstance(t, DistanceTuple) else tuple(t) for t in tuples]


def value_counts(scores: np.ndarray) -> list[tuple[np.ndarray, np.ndarray]]:
    """Per-dimension (values, counts); the map-side summary for the median."""
    return [np.unique(scores[:, j], return_counts=True) for j in range(scores.shape[1])]


def center_from_counts(parts: Sequence[list[tuple[np.ndarray, np.ndarray]]], n: int) -> np.ndarray:
    """Reduce-side lower median from per-partition value counts."""
    center = np.zeros(n, dtype=np.int64)
    for j in range(n):
        vals = np.concatenate([p[j][0] for p in parts if len(p[j][0])])
        cnts = np.concatenate([p[j][1] for p in parts if len(p[j][0])])
        if not len(vals):
            raise ContractError("center of an empty tuple set is undefined")
        uv, inv = np.unique(vals, return_inverse=True)
        tot = np.bincount(inv, weights=cnts).astype(np.int64)
        total = int(tot.sum())
        rank = (total - 1) // 2
        center[j] = uv[np.searchsorted(np.cumsum(tot), rank + 1)]
    return center


def subspace_of(tuple_or_scores, center: Sequence[int]) -> int:
    s = tuple_or_scores.scores if isinstance(tuple_or_scores, DistanceTuple) else tuple_or_scores
    if len(s) != len(center):
        raise ContractError(f"dimension mismatch: {len(s)} vs {len(center)}")
    return sum(1 << j for j, (v, c) in enumerate(zip(s, center)) if v >= c)


def subspace_ids(scores: np.ndarray, center: np.ndarray) -> np.ndarray:
    bits = (scores >= center[None, :]).astype(np.int64)
    return bits @ (np.int64(1) << np.arange(scores.shape[1], dtype=np.int64))


def global_merge(
    local_skylines: Sequence[TupleBlock],
    vmps: Sequence[np.ndarray | None] | None = None,
    algo: str = "sfs",
) -> TupleBlock:
    """Global skyline from local skylines.

    With ``vmps`` (one virtual maximum point per local skyline, aligned by
    position) a tuple is dropped early when another part's virtual maximum
    dominates it: every member of that part then dominates it as well.
    """
    parts = [as_block(p) for p in local_skylines]
    if not parts:
        return TupleBlock.empty(0)
    if vmps is not None:
        if len(vmps) != len(parts):
            raise ContractError("one virtual maximum point per local skyline expected")
        pruned = []
        for i, p in enumerate(parts):
            foreign = [v for j, v in enumerate(vmps) if j != i and v is not None]
            if foreign and len(p):
                p = p.take(~dominated_by(p.scores, np.asarray(foreign, dtype=np.int64)))
            pruned.append(p)
        parts = pruned
    merged = TupleBlock.concat(parts, n=parts[0].n)
    return local_skyline(merged, algo).canonical()


def is_skyline_of(candidate: TupleBlock, tuples: Iterable) -> bool:
    """Set equality of grid ids with the brute-force skyline."""
    return candidate.grid_set() == brute_force_skyline(tuples).grid_set()
