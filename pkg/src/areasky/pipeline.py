"""Partitioned area-skyline pipeline.

Stages are separated by barriers; inside a stage one task runs per partition
(or per column block / subspace / leaf) on a pool of ``W`` logical workers.
The driver only ever sees small summaries: per-partition value counts, the
local partial skylines, the filter, virtual maximum points and sky filters.

Existing mode::

    GD Map -> GD Reduce -> MDT Map -> MDT Reduce -> back-end

Proposed mode extracts local partial skylines during MDT Reduce, builds the
filter at the driver (MF), and filters every partition (F) before the
back-end.
"""

from __future__ import annotations

import enum
import os
import time
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import skymr
from .edt import DistanceField, column_pass, row_pass_mask
from .model import ContractError, GridMap, TupleBlock, normalize_array
from .skyline import (
    bnl_indices,
    center_from_counts,
    dominated_by,
    global_merge,
    local_skyline,
    sfs_indices,
    subspace_ids,
    value_counts,
)


class Mode(enum.Enum):
    EXISTING = "E"
    PROPOSED = "P"


class Backend(enum.Enum):
    MR_BNL = "MR-BNL"
    MR_SFS = "MR-SFS"
    SKY_MR = "SKY-MR"


POOL_KINDS = ("auto", "thread", "process", "serial")
_SHORT = {"bnl": Backend.MR_BNL, "sfs": Backend.MR_SFS, "skymr": Backend.SKY_MR}


@dataclass(frozen=True)
class VariantSpec:
    mode: Mode
    backend: Backend
    workers: int = 1
    seed: int = 0
    sample_rate: float = skymr.DEFAULT_RATE
    leaf_capacity: int = skymr.LEAF_CAPACITY
    pool: str = "auto"

    def __post_init__(self):
        if self.workers < 1:
            raise ContractError(f"worker count must be >= 1, got {self.workers}")
        if self.pool not in POOL_KINDS:
            raise ContractError(f"unknown pool kind {self.pool!r}")

    @property
    def name(self) -> str:
        return f"{self.mode.value}-{self.backend.value}"

    @property
    def short(self) -> str:
        key = {v: k for k, v in _SHORT.items()}[self.backend]
        return f"{self.mode.value.lower()}-{key}"

    @classmethod
    def parse(cls, text: str, **kw) -> "VariantSpec":
        """Accepts ``e-bnl`` style or ``E-MR-BNL`` style names."""
        t = text.strip().lower()
        mode, _, rest = t.partition("-")
        rest = rest.replace("mr-", "").replace("sky-mr", "skymr").replace("-", "")
        if mode not in ("e", "p") or rest not in _SHORT:
            raise ContractError(f"unknown variant {text!r}")
        return cls(Mode(mode.upper()), _SHORT[rest], **kw)


VARIANTS = tuple(f"{m}-{b}" for m in ("e", "p") for b in ("bnl", "sfs", "skymr"))


def all_variants(**kw) -> list[VariantSpec]:
    return [VariantSpec.parse(v, **kw) for v in VARIANTS]


# --- instrumentation ---------------------------------------------------------

GD_STAGES = ("GD Map", "GD Reduce", "MDT Map", "MDT Reduce")
MR_STAGES = ("GM Map", "GM Reduce", "LS Map", "LS Reduce", "GS Map", "GS Reduce")
SKY_STAGES = ("TS", "MSQT", "LS Map", "LS Reduce", "MVM", "MSF", "GS Map", "GS Reduce")
FILTER_STAGES = ("MF", "F")
# stages that carry the tuple stream itself; the rest produce summaries
DATA_PATH = ("GD Map", "GD Reduce", "MDT Map", "MDT Reduce", "F", "LS Map", "LS Reduce", "GS Map", "GS Reduce")
BACKEND_TIMED = {
    Backend.MR_BNL: ("LS Map", "LS Reduce", "GS Map", "GS Reduce"),
    Backend.MR_SFS: ("LS Map", "LS Reduce", "GS Map", "GS Reduce"),
    Backend.SKY_MR: SKY_STAGES,
}


def expected_stages(v: VariantSpec) -> tuple[str, ...]:
    backend = SKY_STAGES if v.backend is Backend.SKY_MR else MR_STAGES
    extra = FILTER_STAGES if v.mode is Mode.PROPOSED else ()
    return GD_STAGES + extra + backend


@dataclass
class StageRecord:
    name: str
    ms: float  # critical path: slowest task plus driver-side work
    wall_ms: float
    in_count: int
    out_count: int


@dataclass
class StageReport:
    variant: str
    workers: int
    stages: list[StageRecord] = field(default_factory=list)
    total_ms: float = 0.0

    def add(self, name, ms, wall_ms, in_count, out_count):
        self.stages.append(StageRecord(name, float(ms), float(wall_ms), int(in_count), int(out_count)))

    def names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.stages)

    def __getitem__(self, name: str) -> StageRecord:
        for s in self.stages:
            if s.name == name:
                return s
        raise KeyError(name)

    @property
    def backend_input(self) -> int:
        return self["LS Map"].in_count

    def backend_ms(self, backend: Backend) -> float:
        return sum(self[s].ms for s in BACKEND_TIMED[backend])

    def check_consistency(self) -> None:
        """Raise if a data-path stage's input differs from its predecessor's output."""
        chain = [s for s in self.stages if s.name in DATA_PATH]
        for a, b in zip(chain, chain[1:]):
            if a.out_count != b.in_count:
                raise AssertionError(f"{a.name} emits {a.out_count} but {b.name} reads {b.in_count}")
        for s in self.stages:
            if s.ms < 0 or s.wall_ms < 0:
                raise AssertionError(f"negative time in stage {s.name}")

    def rows(self) -> list[tuple]:
        return [(self.variant, s.name, s.ms, s.in_count, s.out_count) for s in self.stages]


class PipelineError(RuntimeError):
    """A stage failed; ``report`` holds the stages completed before it."""

    def __init__(self, message: str, report: StageReport):
        super().__init__(message)
        self.report = report


# --- worker pool --------------------------------------------------------------


def _run_batch(fn, batch):
    t0 = time.perf_counter()
    out = [fn(*a) if isinstance(a, tuple) else fn(a) for a in batch]
    return out, time.perf_counter() - t0


class WorkerPool:
    """Ordered ``map`` over ``W`` logical workers with per-worker timings.

    Tasks are dealt to workers in contiguous batches, so a worker owning
    several reducers pays for all of them on the critical path.
    """

    def __init__(self, workers: int, kind: str = "auto"):
        if kind == "auto":
            # threads only contend for the GIL on a single core
            kind = "thread" if (os.cpu_count() or 1) > 1 else "serial"
        self.workers = workers
        self.kind = kind if workers > 1 else "serial"
        self._ex = None

    def __enter__(self):
        if self.kind == "thread":
            self._ex = ThreadPoolExecutor(max_workers=self.workers)
        elif self.kind == "process":
            self._ex = ProcessPoolExecutor(max_workers=self.workers)
        return self

    def __exit__(self, *exc):
        if self._ex is not None:
            self._ex.shutdown(wait=True)
            self._ex = None

    def batches(self, n_tasks: int) -> list[tuple[int, int]]:
        return [(lo, hi) for lo, hi in partition_rows(n_tasks, min(self.workers, max(1, n_tasks))) if hi > lo]

    def map(self, fn: Callable, args: Iterable) -> tuple[list, float]:
        """Run ``fn`` over ``args``; returns results and the slowest worker's ms."""
        args = list(args)
        chunks = [args[lo:hi] for lo, hi in self.batches(len(args))]
        if self._ex is None or len(chunks) <= 1:
            pairs = [_run_batch(fn, c) for c in chunks]
        else:
            pairs = list(self._ex.map(_run_batch, [fn] * len(chunks), chunks))
        slowest = max((t for _, t in pairs), default=0.0)
        return [r for rs, _ in pairs for r in rs], slowest * 1000.0


# --- partitioning ------------------------------------------------------------


def partition_rows(k: int, workers: int) -> list[tuple[int, int]]:
    """Contiguous row blocks; the first ``k % W`` blocks get one extra row."""
    if workers < 1:
        raise ContractError(f"worker count must be >= 1, got {workers}")
    base, extra = divmod(k, workers)
    out, lo = [], 0
    for w in range(workers):
        hi = lo + base + (1 if w < extra else 0)
        out.append((lo, hi))
        lo = hi
    return out


@dataclass(frozen=True)
class Partition:
    worker: int
    r_lo: int
    r_hi: int
    tuples: TupleBlock

    def __len__(self):
        return len(self.tuples)


def _grid_block(r_lo: int, r_hi: int, k: int) -> np.ndarray:
    rr, cc = np.meshgrid(np.arange(r_lo, r_hi), np.arange(k), indexing="ij")
    return np.stack([rr.ravel(), cc.ravel()], axis=1)


def _mdt_map(field_rows: list[np.ndarray], r_lo: int, r_hi: int, k: int):
    raw = np.stack([f.ravel() for f in field_rows], axis=1) if field_rows else np.empty((0, 0))
    return _grid_block(r_lo, r_hi, k), raw.reshape(-1, len(field_rows))


def _mdt_reduce(grids, raw, undesirable, k, partial: bool):
    """Normalise one partition; with ``partial`` also pick its local partial
    skyline.  Returns both timings so the two can be booked separately."""
    t0 = time.perf_counter()
    block = TupleBlock(grids, normalize_array(raw, undesirable, k))
    t1 = time.perf_counter()
    if not partial:
        return block, None, t1 - t0, 0.0
    lps = block.take(_partial_indices(block))
    return block, lps, t1 - t0, time.perf_counter() - t1


def make_tuples(fields: Sequence[DistanceField], m: GridMap, workers: int = 1) -> list[Partition]:
    """Assemble normalised distance tuples, one partition per row block."""
    if len(fields) != m.n:
        raise ContractError(f"{len(fields)} distance fields for {m.n} facility types")
    for f in fields:
        if f.cells.shape != (m.k, m.k):
            raise ContractError(f"field {f.type_id} has shape {f.cells.shape}, expected {(m.k, m.k)}")
    und = m.polarity_mask()
    out = []
    for w, (lo, hi) in enumerate(partition_rows(m.k, workers)):
        grids, raw = _mdt_map([f.cells[lo:hi] for f in fields], lo, hi, m.k)
        block, *_ = _mdt_reduce(grids, raw, und, m.k, partial=False)
        out.append(Partition(w, lo, hi, block))
    return out


# --- proposed: local partial skyline, filter, filtering ----------------------


def _partial_indices(block: TupleBlock) -> np.ndarray:
    if not len(block):
        return np.empty(0, dtype=np.int64)
    s = block.scores
    # block rows are in (row, col) order, so argmin's first hit is the GridId tie-break
    picks = [int(np.argmin((s * s).sum(axis=1)))]
    picks += [int(np.argmin(s[:, j])) for j in range(s.shape[1])]
    return np.array(sorted(set(picks)), dtype=np.int64)


def extract_local_partial_skyline(p: Partition | TupleBlock) -> TupleBlock:
    """Origin-nearest tuple (L2 on scores) plus each per-dimension minimum."""
    block = p.tuples if isinstance(p, Partition) else p
    return block.take(_partial_indices(block))


def create_filter(partials: Sequence[TupleBlock]) -> TupleBlock:
    """Skyline of the union of the local partial skylines."""
    live = [p for p in partials if len(p)]
    if not live:
        raise ContractError("no local partial skyline points to build a filter from")
    union = TupleBlock.concat(live)
    return union.take(bnl_indices(union.scores)).canonical()


def apply_filter(p: Partition | TupleBlock, f: TupleBlock):
    """Drop tuples strictly dominated by some filter tuple."""
    block = p.tuples if isinstance(p, Partition) else p
    kept = block.take(~dominated_by(block.scores, f.scores)) if len(f) else block
    if isinstance(p, Partition):
        return Partition(p.worker, p.r_lo, p.r_hi, kept)
    return kept


# --- back-ends ---------------------------------------------------------------


def _ls_map_mr(block: TupleBlock, center: np.ndarray):
    ids = subspace_ids(block.scores, center)
    return {int(m): block.take(ids == m) for m in np.unique(ids)}


def _shuffle(groups: Sequence[dict]) -> dict:
    keys = sorted({k for g in groups for k in g})
    return {k: TupleBlock.concat([g[k] for g in groups if k in g]) for k in keys}


def _run_mr(pool: WorkerPool, blocks: list[TupleBlock], n: int, algo: str, report: StageReport):
    total = sum(len(b) for b in blocks)

    t0 = time.perf_counter()
    summaries, ms = pool.map(value_counts, [b.scores for b in blocks])
    report.add("GM Map", ms, _ms(t0), total, len(summaries))

    t0 = time.perf_counter()
    center = center_from_counts(summaries, n)
    report.add("GM Reduce", _ms(t0), _ms(t0), len(summaries), 1)

    t0 = time.perf_counter()
    groups, ms = pool.map(_ls_map_mr, [(b, center) for b in blocks])
    report.add("LS Map", ms, _ms(t0), total, sum(len(x) for g in groups for x in g.values()))

    t0 = time.perf_counter()
    subspaces = _shuffle(groups)
    locals_, ms = pool.map(local_skyline, [(blk, algo) for blk in subspaces.values()])
    shuffle_in = sum(len(b) for b in subspaces.values())
    report.add("LS Reduce", ms, _ms(t0), shuffle_in, sum(len(x) for x in locals_))

    t0 = time.perf_counter()
    # the map side only re-keys every local skyline to the single global reducer
    carried = [x for x in locals_ if len(x)]
    report.add("GS Map", _ms(t0), _ms(t0), sum(len(x) for x in locals_), sum(len(x) for x in carried))

    t0 = time.perf_counter()
    sky = global_merge(carried, algo=algo) if carried else TupleBlock.empty(n)
    report.add("GS Reduce", _ms(t0), _ms(t0), sum(len(x) for x in carried), len(sky))
    return sky


def _ls_map_sky(tree: skymr.SkyQuadtree, block: TupleBlock):
    leaves, dropped = tree.assign(block.scores)
    return {key: block.take(idx) for key, idx in leaves.items()}, dropped


def _sky_local(block: TupleBlock) -> TupleBlock:
    return block.take(sfs_indices(block.scores, block.grids))


def _run_skymr(pool: WorkerPool, blocks: list[TupleBlock], n: int, v: VariantSpec, report: StageReport):
    total = sum(len(b) for b in blocks)

    t0 = time.perf_counter()
    # partitions are contiguous row blocks, so concatenation is row-major order
    # whatever W is; the sample therefore does not depend on the worker count
    everything = TupleBlock.concat(blocks, n=n)
    rate = skymr.effective_rate(total, v.sample_rate)
    sample = skymr.skymr_sample(everything, rate, v.seed)
    report.add("TS", _ms(t0), _ms(t0), total, len(sample))

    t0 = time.perf_counter()
    tree = skymr.build_sky_quadtree(sample, v.leaf_capacity)
    report.add("MSQT", _ms(t0), _ms(t0), len(sample), len(tree.leaves()))

    t0 = time.perf_counter()
    routed, ms = pool.map(_ls_map_sky, [(tree, b) for b in blocks])
    kept = total - sum(d for _, d in routed)
    report.add("LS Map", ms, _ms(t0), total, kept)

    t0 = time.perf_counter()
    leaves = _shuffle([g for g, _ in routed])
    results, ms = pool.map(_sky_local, list(leaves.values()))
    local = dict(zip(leaves.keys(), results))
    n_local = sum(len(x) for x in results)
    report.add("LS Reduce", ms, _ms(t0), kept, n_local)

    t0 = time.perf_counter()
    vmps = skymr.virtual_max_points(local)
    report.add("MVM", _ms(t0), _ms(t0), n_local, len(vmps))

    t0 = time.perf_counter()
    sfs = skymr.sky_filters(local)
    report.add("MSF", _ms(t0), _ms(t0), n_local, len(sfs))

    t0 = time.perf_counter()
    keys = [key for key in local if len(local[key])]
    survivors, ms = pool.map(skymr.filter_leaf, [(key, local, vmps, sfs) for key in keys])
    n_surv = sum(len(x) for x in survivors)
    report.add("GS Map", ms, _ms(t0), n_local, n_surv)

    t0 = time.perf_counter()
    merged = TupleBlock.concat(survivors, n=n)
    sky = merged.take(sfs_indices(merged.scores, merged.grids)).canonical()
    report.add("GS Reduce", _ms(t0), _ms(t0), n_surv, len(sky))
    return sky


def _ms(t0: float) -> float:
    return (time.perf_counter() - t0) * 1000.0


# --- driver ------------------------------------------------------------------


def compute_fields(m: GridMap, pool: WorkerPool, report: StageReport | None = None) -> list[DistanceField]:
    """GD Map (row pass per row block) and GD Reduce (column pass per column block)."""
    k, n = m.k, m.n
    blocks = partition_rows(k, pool.workers)
    masks = [m.mask(t) for t in range(n)]
    cells = n * k * k

    t0 = time.perf_counter()
    rowparts, ms = pool.map(_gd_map, [([mk[lo:hi] for mk in masks],) for lo, hi in blocks])
    if report is not None:
        report.add("GD Map", ms, _ms(t0), cells, sum(a.size for part in rowparts for a in part))

    t0 = time.perf_counter()
    rowdist = [np.concatenate([part[t] for part in rowparts]) for t in range(n)]
    colparts, ms = pool.map(_gd_reduce, [([rd[:, lo:hi] for rd in rowdist],) for lo, hi in blocks])
    fields = [DistanceField(t, np.concatenate([part[t] for part in colparts], axis=1)) for t in range(n)]
    if report is not None:
        report.add("GD Reduce", ms, _ms(t0), cells, sum(f.cells.size for f in fields))
    return fields


def _gd_map(masks: list[np.ndarray]) -> list[np.ndarray]:
    return [row_pass_mask(mk) for mk in masks]


def _gd_reduce(rowdists: list[np.ndarray]) -> list[np.ndarray]:
    # columns are independent, so all types go through one stacked pass
    widths = np.cumsum([rd.shape[1] for rd in rowdists])[:-1]
    return np.split(column_pass(np.concatenate(rowdists, axis=1)), widths, axis=1)


def run_pipeline(m: GridMap, v: VariantSpec) -> tuple[TupleBlock, StageReport]:
    """Run one variant end to end; returns the canonical skyline and its report."""
    report = StageReport(v.name, v.workers)
    t_start = time.perf_counter()
    stage = "GD Map"
    try:
        with WorkerPool(v.workers, v.pool) as pool:
            fields = compute_fields(m, pool, report)

            stage = "MDT Map"
            k, n = m.k, m.n
            bounds = partition_rows(k, v.workers)
            t0 = time.perf_counter()
            raws, ms = pool.map(_mdt_map, [([f.cells[lo:hi] for f in fields], lo, hi, k) for lo, hi in bounds])
            report.add("MDT Map", ms, _ms(t0), n * k * k, sum(len(r) for _, r in raws))

            stage = "MDT Reduce"
            proposed = v.mode is Mode.PROPOSED
            und = m.polarity_mask()
            t0 = time.perf_counter()
            built, _ = pool.map(_mdt_reduce, [(g, r, und, k, proposed) for g, r in raws])
            blocks = [b for b, *_ in built]
            # partial extraction runs inside the same task but is booked under MF
            ms = max(b[2] for b in built) * 1000.0
            report.add("MDT Reduce", ms, _ms(t0), sum(len(r) for _, r in raws), sum(len(b) for b in blocks))

            if proposed:
                stage = "MF"
                t0 = time.perf_counter()
                flt = create_filter([b[1] for b in built])
                ms = max(b[3] for b in built) * 1000.0 + _ms(t0)
                report.add("MF", ms, _ms(t0), k * k, len(flt))

                stage = "F"
                t0 = time.perf_counter()
                blocks, ms = pool.map(apply_filter, [(b, flt) for b in blocks])
                report.add("F", ms, _ms(t0), k * k, sum(len(b) for b in blocks))

            stage = "LS"
            if v.backend is Backend.SKY_MR:
                sky = _run_skymr(pool, blocks, n, v, report)
            else:
                algo = "bnl" if v.backend is Backend.MR_BNL else "sfs"
                sky = _run_mr(pool, blocks, n, algo, report)
    except Exception as exc:
        report.total_ms = _ms(t_start)
        raise PipelineError(f"{v.name} failed in stage {stage}: {exc}", report) from exc
    report.total_ms = _ms(t_start)
    return sky, report
