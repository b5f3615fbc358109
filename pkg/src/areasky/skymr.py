"""Sample / sky-quadtree / virtual-maximum-point sky-filter machinery.

The tree is built on a seeded sample.  Every region whose lower corner is
dominated by a sampled skyline point is pruned, which is safe because that
sample point is a real tuple dominating everything in the region.  Leaves are
keyed by their path of child bitmasks, so full-data tuples that land in a
child the sample never reached still get a deterministic leaf.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .model import ContractError, TupleBlock
from .skyline import dominated_by, sfs_indices, subspace_ids

LeafKey = tuple[int, ...]

DEFAULT_RATE = 0.01
SAMPLE_FLOOR = 256
LEAF_CAPACITY = 64
MAX_DEPTH = 16


def skymr_sample(tuples: TupleBlock, rate: float, seed: int) -> TupleBlock:
    """``ceil(rate * N)`` tuples drawn without replacement, in input order."""
    if not 0 < rate <= 1:
        raise ContractError(f"sample rate must be in (0, 1], got {rate}")
    size = min(len(tuples), math.ceil(rate * len(tuples)))
    if size == len(tuples):
        return tuples
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(len(tuples), size=size, replace=False))
    return tuples.take(idx)


def effective_rate(n_tuples: int, rate: float = DEFAULT_RATE, floor: int = SAMPLE_FLOOR) -> float:
    if n_tuples == 0:
        return 1.0
    return min(1.0, max(rate, floor / n_tuples))


@dataclass
class Node:
    path: LeafKey
    lo: np.ndarray  # lower corner of the region
    depth: int
    split: np.ndarray | None = None
    children: dict[int, "Node"] = field(default_factory=dict)
    members: np.ndarray | None = None  # sample indices for leaves
    pruned: bool = False

    @property
    def is_leaf(self) -> bool:
        return self.split is None


@dataclass
class SkyQuadtree:
    root: Node
    n: int
    capacity: int
    sample_skyline: np.ndarray  # scores of the sample's skyline
    _prune_cache: dict = field(default_factory=dict, repr=False)

    def leaves(self) -> list[Node]:
        out = []
        stack = [self.root]
        while stack:
            node = stack.pop()
            if node.is_leaf:
                out.append(node)
            else:
                stack.extend(node.children[m] for m in sorted(node.children, reverse=True))
        return sorted(out, key=lambda nd: nd.path)

    def depth(self) -> int:
        return max(nd.depth for nd in self.leaves())

    def populated_leaves(self) -> list[Node]:
        return [nd for nd in self.leaves() if not nd.pruned and nd.members is not None and len(nd.members)]

    def region_pruned(self, lo: np.ndarray) -> bool:
        key = lo.tobytes()
        if key not in self._prune_cache:
            self._prune_cache[key] = bool(dominated_by(lo[None, :], self.sample_skyline)[0])
        return self._prune_cache[key]

    def assign(self, scores: np.ndarray) -> tuple[dict[LeafKey, np.ndarray], int]:
        """Route tuples to leaves.  Returns ``{leaf: row indices}`` and the
        number of tuples dropped in pruned regions."""
        out: dict[LeafKey, np.ndarray] = {}
        dropped = 0
        work = [(self.root, np.arange(len(scores)))]
        while work:
            node, idx = work.pop()
            if not len(idx):
                continue
            if node.pruned:
                dropped += len(idx)
                continue
            if node.is_leaf:
                out[node.path] = idx
                continue
            masks = subspace_ids(scores[idx], node.split)
            for m in np.unique(masks):
                sub = idx[masks == m]
                child = node.children.get(int(m))
                if child is None:
                    lo = _child_lo(node, int(m))
                    if self.region_pruned(lo):
                        dropped += len(sub)
                    else:
                        out[node.path + (int(m),)] = sub
                else:
                    work.append((child, sub))
        return dict(sorted(out.items())), dropped


def _child_lo(node: Node, mask: int) -> np.ndarray:
    bits = (mask >> np.arange(len(node.lo))) & 1
    return np.where(bits == 1, node.split, node.lo)


def _split_point(s: np.ndarray) -> np.ndarray | None:
    """Upper median; falls back to the rounded-up midrange when the median
    leaves everything on one side.  ``None`` when the tuples are identical."""
    srt = np.sort(s, axis=0)
    split = srt[len(s) // 2]
    if len(np.unique(subspace_ids(s, split))) > 1:
        return split
    lo, hi = srt[0], srt[-1]
    if np.array_equal(lo, hi):
        return None
    return (lo + hi + 1) // 2


def build_sky_quadtree(sample: TupleBlock, leaf_capacity: int = LEAF_CAPACITY, max_depth: int = MAX_DEPTH) -> SkyQuadtree:
    if not len(sample):
        raise ContractError("cannot build a sky quadtree from an empty sample")
    if leaf_capacity < 1:
        raise ContractError(f"leaf capacity must be >= 1, got {leaf_capacity}")
    s = sample.scores
    n = sample.n
    sky = s[sfs_indices(s, sample.grids)]
    root = Node((), np.zeros(n, dtype=np.int64), 0)
    tree = SkyQuadtree(root, n, leaf_capacity, sky)

    work = [(root, np.arange(len(s)))]
    while work:
        node, idx = work.pop()
        if len(idx) <= leaf_capacity or node.depth >= max_depth:
            node.members = idx
            continue
        split = _split_point(s[idx])
        if split is None:
            node.members = idx
            continue
        node.split = split
        masks = subspace_ids(s[idx], split)
        for m in np.unique(masks):
            m = int(m)
            child = Node(node.path + (m,), _child_lo(node, m), node.depth + 1)
            node.children[m] = child
            if tree.region_pruned(child.lo):
                child.pruned = True
                child.members = np.empty(0, dtype=np.int64)
            else:
                work.append((child, idx[masks == m]))
    return tree


def virtual_max_points(local_skylines: Mapping[LeafKey, TupleBlock]) -> dict[LeafKey, np.ndarray]:
    """Componentwise maximum of each non-empty leaf's local skyline."""
    return {key: blk.scores.max(axis=0) for key, blk in sorted(local_skylines.items()) if len(blk)}


def sky_filters(local_skylines: Mapping[LeafKey, TupleBlock]) -> dict[LeafKey, np.ndarray]:
    """Componentwise minimum of each non-empty leaf's local skyline."""
    return {key: blk.scores.min(axis=0) for key, blk in sorted(local_skylines.items()) if len(blk)}


def filter_leaf(
    key: LeafKey,
    local_skylines: Mapping[LeafKey, TupleBlock],
    vmps: Mapping[LeafKey, np.ndarray],
    sfs: Mapping[LeafKey, np.ndarray],
) -> TupleBlock:
    """Global-phase filtering of one leaf's local skyline.

    Drops tuples under a foreign virtual maximum point, then compares the rest
    only against leaves whose sky filter dominates them (a leaf whose sky
    filter does not dominate ``t`` cannot contain a dominator of ``t``).
    """
    blk = local_skylines[key]
    if not len(blk):
        return blk
    others = [o for o in vmps if o != key]
    if others:
        blk = blk.take(~dominated_by(blk.scores, np.stack([vmps[o] for o in others])))
    keep = np.ones(len(blk), dtype=bool)
    for o in others:
        if not keep.any():
            break
        cand = np.flatnonzero(keep)
        reach = dominated_by(blk.scores[cand], sfs[o][None, :])
        if reach.any():
            hit = cand[reach]
            keep[hit[dominated_by(blk.scores[hit], local_skylines[o].scores)]] = False
    return blk.take(keep)
