"""CSV writers for distance fields, skylines and stage timings."""

from __future__ import annotations

import csv
import io
import math
from typing import Iterable, TextIO

import numpy as np

from .edt import DistanceField
from .model import GridMap, TupleBlock, denormalize_array
from .pipeline import StageReport


def _fmt(d2: int) -> str:
    return f"{math.sqrt(d2):.6f}"


def edt_rows(f: DistanceField) -> Iterable[list]:
    k = f.cells.shape[0]
    for r in range(k):
        for c in range(k):
            d2 = int(f.cells[r, c])
            yield [r, c, d2, _fmt(d2)]


def write_edt_csv(f: DistanceField, fh: TextIO) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["row", "col", "dist2", "dist"])
    w.writerows(edt_rows(f))


def skyline_raw(sky: TupleBlock, m: GridMap) -> np.ndarray:
    """Raw squared distances of skyline members (scores un-reflected)."""
    return denormalize_array(sky.scores, m.polarity_mask(), m.k)


def write_skyline_csv(sky: TupleBlock, m: GridMap, fh: TextIO) -> None:
    sky = sky.canonical()
    raw = skyline_raw(sky, m)
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["row", "col"] + [f"d2_{j + 1}" for j in range(m.n)] + [f"d_{j + 1}" for j in range(m.n)])
    for (r, c), d2 in zip(sky.grids.tolist(), raw.tolist()):
        w.writerow([r, c] + d2 + [_fmt(v) for v in d2])


def skyline_csv_text(sky: TupleBlock, m: GridMap) -> str:
    buf = io.StringIO()
    write_skyline_csv(sky, m, buf)
    return buf.getvalue()


STAGE_HEADER = ["variant", "stage", "ms", "in_count", "out_count"]


def write_stages_csv(reports: Iterable[StageReport], fh: TextIO) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(STAGE_HEADER)
    for rep in reports:
        for variant, stage, ms, n_in, n_out in rep.rows():
            w.writerow([variant, stage, f"{ms:.3f}", n_in, n_out])
