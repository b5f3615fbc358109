"""A small six-variant benchmark written to CSV."""

# %%
import sys
import tempfile
from pathlib import Path

from areasky.bench import bench_suite

out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp())
results = bench_suite(["A", "B"], scale=0.05, repetitions=2, workers=4, out_dir=out)

# %%
for r in results:
    print(f"{r.dataset} k={r.k:4d} {r.variant:9s} {r.mean_ms:8.1f} ms  backend in {r.backend_in:6d}  {r.verified}")
print("csv files in", out)
