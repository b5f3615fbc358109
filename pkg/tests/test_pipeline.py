import numpy as np
import pytest

from areasky.datagen import DatasetSpec, generate
from areasky.edt import edt
from areasky.model import ContractError, TupleBlock, make_map
from areasky.pipeline import (
    DATA_PATH,
    Backend,
    Mode,
    PipelineError,
    StageReport,
    VariantSpec,
    VARIANTS,
    WorkerPool,
    all_variants,
    apply_filter,
    create_filter,
    expected_stages,
    extract_local_partial_skyline,
    make_tuples,
    partition_rows,
    run_pipeline,
)
from areasky.reports import skyline_csv_text
from areasky.skyline import brute_force_skyline

from conftest import TABLE1_SKYLINE, random_map

FIG4_FILTER = [[2, 2], [1, 6], [7, 1]]
# the three filter points plus points inside their dominance regions
FIG4_POINTS = FIG4_FILTER + [[3, 3], [2, 7], [8, 2], [4, 5], [6, 6], [9, 9], [3, 2]]


def block_of(scores):
    s = np.asarray(scores, dtype=np.int64)
    grids = np.stack([np.zeros(len(s), dtype=np.int64), np.arange(len(s))], axis=1)
    return TupleBlock(grids, s)


def fields_of(m):
    return [edt(m, t) for t in range(m.n)]


def test_variant_names():
    assert VARIANTS == ("e-bnl", "e-sfs", "e-skymr", "p-bnl", "p-sfs", "p-skymr")
    assert [v.name for v in all_variants()] == [
        "E-MR-BNL", "E-MR-SFS", "E-SKY-MR", "P-MR-BNL", "P-MR-SFS", "P-SKY-MR",
    ]
    v = VariantSpec.parse("P-SKY-MR", workers=3)
    assert (v.mode, v.backend, v.workers, v.short) == (Mode.PROPOSED, Backend.SKY_MR, 3, "p-skymr")
    assert VariantSpec.parse("e-mr-sfs") == VariantSpec.parse("e-sfs")
    for bad in ("x-bnl", "e-quick", ""):
        with pytest.raises(ContractError):
            VariantSpec.parse(bad)
    with pytest.raises(ContractError):
        VariantSpec(Mode.EXISTING, Backend.MR_BNL, workers=0)
    with pytest.raises(ContractError):
        VariantSpec(Mode.EXISTING, Backend.MR_BNL, pool="gpu")


def test_partition_rows():
    assert partition_rows(4, 3) == [(0, 2), (2, 3), (3, 4)]
    assert partition_rows(5, 5) == [(r, r + 1) for r in range(5)]
    assert partition_rows(2, 4) == [(0, 1), (1, 2), (2, 2), (2, 2)]
    with pytest.raises(ContractError):
        partition_rows(4, 0)
    for k in range(1, 20):
        for w in range(1, 9):
            parts = partition_rows(k, w)
            assert parts[0][0] == 0 and parts[-1][1] == k
            assert all(a[1] == b[0] for a, b in zip(parts, parts[1:]))
            sizes = [hi - lo for lo, hi in parts]
            assert max(sizes) - min(sizes) <= 1 and sizes == sorted(sizes, reverse=True)


def test_make_tuples_table1(table1):
    parts = make_tuples(fields_of(table1), table1)
    assert len(parts) == 1 and len(parts[0]) == 16
    rows = dict(zip(parts[0].tuples.labels(), parts[0].tuples.scores.tolist()))
    assert rows["G00"] == [0, 1, 9, 5]
    assert rows["G20"] == [4, 1, 2, 9]
    assert rows["G23"] == [13, 5, 4, 18]
    per_row = make_tuples(fields_of(table1), table1, workers=4)
    assert [(p.r_lo, p.r_hi, len(p)) for p in per_row] == [(r, r + 1, 4) for r in range(4)]


def test_make_tuples_contract(table1):
    with pytest.raises(ContractError):
        make_tuples(fields_of(table1)[:2], table1)


def test_partial_skyline_fig4():
    lps = extract_local_partial_skyline(block_of(FIG4_POINTS))
    assert sorted(lps.scores.tolist()) == sorted(FIG4_FILTER)
    assert extract_local_partial_skyline(block_of([[5, 5]])).scores.tolist() == [[5, 5]]
    assert extract_local_partial_skyline(block_of([[0, 0], [1, 3], [3, 1]])).scores.tolist() == [[0, 0]]
    assert len(extract_local_partial_skyline(TupleBlock.empty(2))) == 0


def test_partial_skyline_tie_break_by_grid():
    # two origin-nearest candidates with equal L2; the smaller GridId wins
    b = TupleBlock(np.array([[0, 0], [0, 1], [1, 0]]), np.array([[3, 4], [4, 3], [3, 4]]))
    lps = extract_local_partial_skyline(b)
    assert lps.labels() == ["G00", "G01"]


def test_partial_skyline_bounded_by_n_plus_one():
    rng = np.random.default_rng(9)
    for n in range(1, 7):
        lps = extract_local_partial_skyline(block_of(rng.integers(0, 99, (200, n))))
        assert 1 <= len(lps) <= n + 1


def test_create_filter():
    partials = [block_of([p]) for p in FIG4_FILTER]
    assert len(create_filter(partials)) == 3
    rng = np.random.default_rng(3)
    parts = [block_of(rng.integers(0, 50, (30, 3))) for _ in range(32)]
    flt = create_filter([extract_local_partial_skyline(p) for p in parts])
    assert len(flt) <= 32 * 4
    single = extract_local_partial_skyline(parts[0])
    assert create_filter([single]).grid_set() == brute_force_skyline(single).grid_set()
    with pytest.raises(ContractError):
        create_filter([TupleBlock.empty(2)])


def test_apply_filter_examples():
    flt = block_of(FIG4_FILTER)
    kept = apply_filter(block_of(FIG4_POINTS), flt)
    assert sorted(kept.scores.tolist()) == sorted(FIG4_FILTER)
    # idempotent
    assert apply_filter(kept, flt).scores.tolist() == kept.scores.tolist()
    b = block_of(FIG4_POINTS)
    assert apply_filter(b, TupleBlock.empty(2)) is b
    zero = apply_filter(block_of([[0, 0], [0, 1], [0, 0]]), block_of([[0, 0]]))
    assert zero.scores.tolist() == [[0, 0], [0, 0]]


def test_apply_filter_keeps_oracle_skyline():
    rng = np.random.default_rng(21)
    for _ in range(30):
        m = random_map(rng, int(rng.integers(2, 25)), int(rng.integers(2, 5)), 0.1)
        parts = make_tuples(fields_of(m), m, workers=int(rng.integers(1, 6)))
        flt = create_filter([extract_local_partial_skyline(p) for p in parts])
        truth = brute_force_skyline(TupleBlock.concat([p.tuples for p in parts])).grid_set()
        kept = set().union(*(apply_filter(p, flt).tuples.grid_set() for p in parts))
        assert truth <= kept


@pytest.mark.parametrize("variant", VARIANTS)
def test_table1_every_variant(table1, variant):
    for w in (1, 2, 4):
        sky, rep = run_pipeline(table1, VariantSpec.parse(variant, workers=w))
        assert set(sky.labels()) == TABLE1_SKYLINE
        assert rep.names() == expected_stages(VariantSpec.parse(variant))
        rep.check_consistency()


def test_stage_names():
    assert expected_stages(VariantSpec.parse("e-bnl")) == (
        "GD Map", "GD Reduce", "MDT Map", "MDT Reduce",
        "GM Map", "GM Reduce", "LS Map", "LS Reduce", "GS Map", "GS Reduce",
    )
    assert expected_stages(VariantSpec.parse("p-skymr")) == (
        "GD Map", "GD Reduce", "MDT Map", "MDT Reduce", "MF", "F",
        "TS", "MSQT", "LS Map", "LS Reduce", "MVM", "MSF", "GS Map", "GS Reduce",
    )


def test_report_consistency_detects_breaks():
    rep = StageReport("x", 1)
    rep.add("GD Map", 1, 1, 10, 10)
    rep.add("GM Map", 1, 1, 10, 2)  # side stage, ignored by the chain
    rep.add("GD Reduce", 1, 1, 10, 9)
    rep.add("MDT Map", 1, 1, 8, 8)
    with pytest.raises(AssertionError):
        rep.check_consistency()
    assert "GM Map" not in DATA_PATH
    with pytest.raises(KeyError):
        rep["nope"]


def test_proposed_vs_existing_cardinality():
    m = generate(DatasetSpec(60, 3, seed=4))
    for backend in ("bnl", "sfs", "skymr"):
        e_sky, e_rep = run_pipeline(m, VariantSpec.parse(f"e-{backend}", workers=3))
        p_sky, p_rep = run_pipeline(m, VariantSpec.parse(f"p-{backend}", workers=3))
        assert e_sky.grid_set() == p_sky.grid_set()
        assert p_rep.backend_input <= e_rep.backend_input == 3600
        assert p_rep["F"].out_count == p_rep.backend_input


def test_worker_count_independence():
    m = generate(DatasetSpec(80, 4, undesirable=2, seed=2))
    for v in VARIANTS:
        texts = {skyline_csv_text(run_pipeline(m, VariantSpec.parse(v, workers=w))[0], m) for w in (1, 3, 8)}
        assert len(texts) == 1


def test_collision_map_runs():
    m = make_map(6, [("a", "desirable", [(2, 2)]), ("b", "desirable", [(2, 2)]), ("c", "undesirable", [(2, 2)])])
    truth = brute_force_skyline(TupleBlock.concat([p.tuples for p in make_tuples(fields_of(m), m)])).grid_set()
    for v in all_variants(workers=2):
        assert run_pipeline(m, v)[0].grid_set() == truth


def test_single_cell_and_single_column_maps():
    for m in (make_map(1, [("a", "desirable", [(0, 0)])]), make_map(1, [("a", "desirable", [(0, 0)]), ("b", "undesirable", [(0, 0)])])):
        for v in all_variants(workers=4):
            assert run_pipeline(m, v)[0].labels() == ["G00"]


def test_process_pool_matches_thread_pool():
    m = generate(DatasetSpec(40, 3, seed=1))
    for v in ("e-sfs", "p-skymr"):
        a = run_pipeline(m, VariantSpec.parse(v, workers=2, pool="thread"))[0]
        b = run_pipeline(m, VariantSpec.parse(v, workers=2, pool="process"))[0]
        assert skyline_csv_text(a, m) == skyline_csv_text(b, m)


def test_worker_pool_timing():
    for kind in ("auto", "thread", "serial"):
        with WorkerPool(3, kind) as pool:
            out, ms = pool.map(abs, [-1, -2, 3, -4, 5])
        assert out == [1, 2, 3, 4, 5] and ms >= 0
    assert WorkerPool(1, "process").kind == "serial"
    assert WorkerPool(3).batches(5) == [(0, 2), (2, 4), (4, 5)]
    assert WorkerPool(8).batches(2) == [(0, 1), (1, 2)]
    assert WorkerPool(4).batches(0) == []


def test_single_worker_critical_path_is_the_sum():
    import time as _t

    def nap(s):
        _t.sleep(s)
        return s

    with WorkerPool(1) as pool:
        _, ms = pool.map(nap, [0.01, 0.01, 0.01])
    assert ms >= 29
    with WorkerPool(3, "thread") as pool:
        _, ms = pool.map(nap, [0.01, 0.01, 0.01])
    assert ms < 29


def test_pipeline_error_keeps_partial_report(table1, monkeypatch):
    import areasky.pipeline as pl

    def boom(*_a, **_k):
        raise RuntimeError("disk on fire")

    monkeypatch.setattr(pl, "create_filter", boom)
    with pytest.raises(PipelineError) as info:
        run_pipeline(table1, VariantSpec.parse("p-bnl"))
    assert "MF" in str(info.value)
    assert info.value.report.names() == ("GD Map", "GD Reduce", "MDT Map", "MDT Reduce")
