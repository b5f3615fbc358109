"""``areasky`` command line: gen, edt, oracle, skyline, verify, bench.

Exit codes: 0 success, 1 correctness failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import bench as bench_mod
from .datagen import DatasetSpec, generate, preset
from .edt import brute_force_edt, edt
from .model import ContractError, MapFormatError, read_map, write_map
from .pipeline import POOL_KINDS, PipelineError, VariantSpec, VARIANTS, run_pipeline
from .reports import write_edt_csv, write_skyline_csv, write_stages_csv

EPILOG = f"""\
environment:
  {bench_mod.ENV_WORKERS}      default worker count when --workers is not given (1)
  {bench_mod.ENV_ORACLE_CAP}   largest k accepted by 'verify' (default {bench_mod.ORACLE_CAP})
"""


class UsageError(Exception):
    pass


def _workers(args) -> int:
    w = args.workers if args.workers is not None else bench_mod.env_int(bench_mod.ENV_WORKERS, 1)
    if w < 1:
        raise UsageError(f"worker count must be >= 1, got {w}")
    return w


def _load(path: str):
    try:
        return read_map(path)
    except OSError as exc:
        raise UsageError(f"cannot read map {path}: {exc.strerror}") from None


def cmd_gen(args) -> int:
    if args.preset:
        spec = preset(args.preset, args.scale, seed=args.seed, undesirable=args.undesirable)
    elif args.k and args.n:
        spec = DatasetSpec(args.k, args.n, args.undesirable, args.seed)
    else:
        raise UsageError("gen needs --preset or both --k and --n")
    write_map(generate(spec), args.out)
    print(f"wrote {args.out}: k={spec.k} n={spec.n}")
    return 0


def _write_fields(m, out_dir: Path, fn, prefix: str) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    for t in m.types:
        path = out_dir / f"{prefix}_{t.id}_{t.name}.csv"
        with open(path, "w", newline="") as fh:
            write_edt_csv(fn(m, t.id), fh)
        print(f"wrote {path}")


def cmd_edt(args) -> int:
    _write_fields(_load(args.map), Path(args.out_dir), edt, "edt")
    return 0


def cmd_oracle(args) -> int:
    _write_fields(_load(args.map), Path(args.out_dir), brute_force_edt, "oracle")
    return 0


def cmd_skyline(args) -> int:
    m = _load(args.map)
    v = VariantSpec.parse(args.variant, workers=_workers(args), seed=args.seed, pool=args.pool)
    sky, report = run_pipeline(m, v)
    with open(args.out, "w", newline="") as fh:
        write_skyline_csv(sky, m, fh)
    if args.timings:
        with open(args.timings, "w", newline="") as fh:
            write_stages_csv([report], fh)
    print(f"{v.name}: {len(sky)} skyline grids, {report.total_ms:.1f} ms")
    return 0


def cmd_verify(args) -> int:
    m = _load(args.map)
    try:
        rep = bench_mod.verify(m, workers=_workers(args), oracle_cap=args.oracle_cap)
    except bench_mod.OracleCapError as exc:
        raise UsageError(str(exc)) from None
    for line in rep.messages:
        print(line)
    print(f"{'PASS' if rep.passed else 'FAIL'}: skyline size {rep.skyline_size}")
    return 0 if rep.passed else 1


def cmd_bench(args) -> int:
    presets = [p.strip() for p in args.presets.split(",") if p.strip()]
    results = bench_mod.bench_suite(
        presets, args.scale, args.reps, _workers(args), args.seed, out_dir=args.out_dir,
        oracle_cap=args.oracle_cap if args.oracle_cap is not None else bench_mod.env_int(
            bench_mod.ENV_ORACLE_CAP, bench_mod.ORACLE_CAP),
    )
    for r in results:
        print(f"{r.dataset} k={r.k} n={r.n} {r.variant:9s} {r.mean_ms:10.1f} ms  backend_in={r.backend_in}")
    print(f"wrote {Path(args.out_dir) / 'bench.csv'} and bench_stages.csv")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="areasky", description=__doc__, epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter
    )
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a synthetic map")
    g.add_argument("--preset", help="dataset preset A..H")
    g.add_argument("--scale", type=float, default=1.0)
    g.add_argument("--k", type=int)
    g.add_argument("--n", type=int)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--undesirable", type=int, default=1, metavar="COUNT")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    for name, fn, helptext in (("edt", cmd_edt, "two-pass distance transform"),
                               ("oracle", cmd_oracle, "brute-force distance transform")):
        e = sub.add_parser(name, help=f"{helptext}, one CSV per facility type")
        e.add_argument("--map", required=True)
        e.add_argument("--out-dir", default=".")
        e.set_defaults(func=fn)

    s = sub.add_parser("skyline", help="run one pipeline variant")
    s.add_argument("--map", required=True)
    s.add_argument("--variant", default="p-sfs", choices=VARIANTS)
    s.add_argument("--workers", type=int)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--pool", default="auto", choices=POOL_KINDS,
                   help="how logical workers run; auto uses threads only with more than one CPU")
    s.add_argument("--out", default="skyline.csv")
    s.add_argument("--timings", help="per-stage CSV")
    s.set_defaults(func=cmd_skyline)

    v = sub.add_parser("verify", help="check every variant against the oracles")
    v.add_argument("--map", required=True)
    v.add_argument("--workers", type=int)
    v.add_argument("--oracle-cap", type=int)
    v.set_defaults(func=cmd_verify)

    b = sub.add_parser("bench", help="six-variant benchmark over presets")
    b.add_argument("--presets", default="A,B,C,D,E")
    b.add_argument("--scale", type=float, default=0.2)
    b.add_argument("--reps", type=int, default=3)
    b.add_argument("--workers", type=int)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out-dir", default=".")
    b.add_argument("--oracle-cap", type=int)
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, MapFormatError, ContractError, ValueError) as exc:
        print(f"areasky: error: {exc}", file=sys.stderr)
        return 2
    except (bench_mod.CorrectnessError, PipelineError) as exc:
        print(f"areasky: correctness failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
