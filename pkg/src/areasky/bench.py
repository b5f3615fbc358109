"""Oracle verification and the six-variant benchmark suite."""

from __future__ import annotations

import csv
import os
import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .datagen import generate, preset
from .edt import DistanceField, brute_force_edt, edt
from .model import GridId, GridMap, TupleBlock, normalize_array
from .pipeline import StageReport, VariantSpec, all_variants, run_pipeline
from .reports import skyline_csv_text
from .skyline import brute_force_skyline

ORACLE_CAP = 128
ENV_WORKERS = "AREASKY_WORKERS"
ENV_ORACLE_CAP = "AREASKY_ORACLE_CAP"


class CorrectnessError(RuntimeError):
    """Variants disagree with each other or with the oracle."""


class OracleCapError(ValueError):
    pass


def env_int(name: str, default: int) -> int:
    raw = os.environ.get(name)
    if raw is None or raw == "":
        return default
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"{name}={raw!r} is not an integer") from None


@dataclass
class VerifyReport:
    passed: bool
    skyline_size: int
    messages: list[str] = field(default_factory=list)
    first_mismatch: tuple | None = None  # (type_id, row, col, got, expected)


def check_fields(m: GridMap, fields: Sequence[DistanceField]) -> tuple | None:
    """First cell where ``fields`` disagrees with the brute-force transform."""
    for t in range(m.n):
        want = brute_force_edt(m, t).cells
        got = fields[t].cells
        bad = np.argwhere(got != want)
        if len(bad):
            r, c = (int(v) for v in bad[0])
            return (t, r, c, int(got[r, c]), int(want[r, c]))
    return None


def oracle_tuples(m: GridMap) -> TupleBlock:
    raw = np.stack([brute_force_edt(m, t).cells.ravel() for t in range(m.n)], axis=1)
    rr, cc = np.divmod(np.arange(m.k * m.k), m.k)
    return TupleBlock(np.stack([rr, cc], axis=1), normalize_array(raw, m.polarity_mask(), m.k))


def verify(
    m: GridMap,
    *,
    workers: int = 1,
    oracle_cap: int | None = None,
    fields: Sequence[DistanceField] | None = None,
    variants: Sequence[VariantSpec] | None = None,
) -> VerifyReport:
    """Diff every variant (and the given or computed fields) against oracles."""
    cap = env_int(ENV_ORACLE_CAP, ORACLE_CAP) if oracle_cap is None else oracle_cap
    if m.k > cap:
        raise OracleCapError(
            f"k={m.k} exceeds the oracle cap of {cap}; raise it with --oracle-cap or {ENV_ORACLE_CAP}"
        )
    if fields is None:
        fields = [edt(m, t) for t in range(m.n)]
    report = VerifyReport(True, 0)
    mismatch = check_fields(m, fields)
    if mismatch:
        t, r, c, got, want = mismatch
        report.passed = False
        report.first_mismatch = mismatch
        report.messages.append(f"field {t}: cell ({r},{c}) = {got}, oracle {want}")

    truth = brute_force_skyline(oracle_tuples(m)).grid_set()
    report.skyline_size = len(truth)
    for v in variants or all_variants(workers=workers):
        sky, _ = run_pipeline(m, v)
        got = sky.grid_set()
        if got != truth:
            report.passed = False
            extra = sorted(got - truth)[:3]
            missing = sorted(truth - got)[:3]
            report.messages.append(f"{v.name}: extra {extra} missing {missing}")
    return report


@dataclass
class BenchResult:
    dataset: str
    k: int
    n: int
    variant: str
    workers: int
    reps: int
    mean_ms: float
    min_ms: float
    backend_in: int
    skyline_size: int
    verified: str  # "pass", "fail" or "skipped" (above the oracle cap)
    stages: list[StageReport] = field(default_factory=list, repr=False)
    skyline: frozenset[GridId] = field(default=frozenset(), repr=False)


BENCH_HEADER = [
    "dataset", "k", "n", "variant", "workers", "reps", "mean_ms", "min_ms", "backend_in", "skyline_size", "verified",
]
STAGE_BENCH_HEADER = ["dataset", "k", "n", "variant", "stage", "mean_ms", "min_ms", "in_count", "out_count"]


def bench_map(
    m: GridMap, dataset: str, *, repetitions: int = 1, workers: int = 1, seed: int = 0, oracle_cap: int = ORACLE_CAP
) -> list[BenchResult]:
    """All six variants on one map; raises :class:`CorrectnessError` on any
    disagreement so wrong answers never reach a timing table."""
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    truth = brute_force_skyline(oracle_tuples(m)).grid_set() if m.k <= oracle_cap else None
    results = []
    for v in all_variants(workers=workers, seed=seed):
        reports, text = [], None
        for _ in range(repetitions):
            sky, rep = run_pipeline(m, v)
            rep.check_consistency()
            this = skyline_csv_text(sky, m)
            if text is not None and this != text:
                raise CorrectnessError(f"{v.name} on {dataset}: output changed between repetitions")
            text = this
            reports.append(rep)
        grids = frozenset(sky.grid_set())
        status = "skipped" if truth is None else ("pass" if grids == truth else "fail")
        if status == "fail":
            raise CorrectnessError(f"{v.name} on {dataset}: skyline differs from the brute-force oracle")
        totals = [r.total_ms for r in reports]
        results.append(
            BenchResult(
                dataset, m.k, m.n, v.name, workers, repetitions,
                statistics.fmean(totals), min(totals), reports[0].backend_input, len(grids), status, reports, grids,
            )
        )
    ref = results[0]
    for r in results[1:]:
        if r.skyline != ref.skyline:
            raise CorrectnessError(f"{r.variant} and {ref.variant} disagree on {dataset}")
    return results


def bench_suite(
    presets: Sequence[str],
    scale: float,
    repetitions: int = 1,
    workers: int = 1,
    seed: int = 0,
    out_dir: str | os.PathLike | None = None,
    oracle_cap: int = ORACLE_CAP,
) -> list[BenchResult]:
    results = []
    for name in presets:
        spec = preset(name, scale, seed=seed)
        results += bench_map(
            generate(spec), spec.name, repetitions=repetitions, workers=workers, seed=seed, oracle_cap=oracle_cap
        )
    if out_dir is not None:
        write_bench(results, out_dir)
    return results


def stage_rows(results: Sequence[BenchResult]) -> list[list]:
    rows = []
    for res in results:
        names = res.stages[0].names()
        for name in names:
            recs = [rep[name] for rep in res.stages]
            ms = [r.ms for r in recs]
            rows.append(
                [res.dataset, res.k, res.n, res.variant, name, f"{statistics.fmean(ms):.3f}", f"{min(ms):.3f}",
                 recs[0].in_count, recs[0].out_count]
            )
    return rows


def write_bench(results: Sequence[BenchResult], out_dir) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    main, stages = out / "bench.csv", out / "bench_stages.csv"
    with open(main, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(BENCH_HEADER)
        for r in results:
            w.writerow([r.dataset, r.k, r.n, r.variant, r.workers, r.reps, f"{r.mean_ms:.3f}", f"{r.min_ms:.3f}",
                        r.backend_in, r.skyline_size, r.verified])
    with open(stages, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(STAGE_BENCH_HEADER)
        w.writerows(stage_rows(results))
    return main, stages
