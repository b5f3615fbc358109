import numpy as np
import pytest
from hypothesis import strategies as st

from areasky.model import GridId, make_map, table1_map

TABLE1_SKYLINE = {"G00", "G01", "G02", "G03", "G10", "G20", "G30", "G31"}

# verdict lines from test_acceptance.py, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def table1():
    return table1_map()


@pytest.fixture
def record():
    def _record(label: str, ok: bool, detail: str = ""):
        line = f"[{'PASS' if ok else 'FAIL'}] {label}" + (f" -- {detail}" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_map(rng: np.random.Generator, k: int, n: int, density: str = "row", undesirable: int = 1):
    """Random map; ``density`` is 'one', 'row', a float fraction, or 'full'."""
    layers = []
    for t in range(n):
        if density == "one":
            cells = [tuple(int(v) for v in rng.integers(0, k, 2))]
        elif density == "row":
            cells = [(r, int(rng.integers(0, k))) for r in range(k)]
        elif density == "full":
            cells = [(r, c) for r in range(k) for c in range(k)]
        else:
            occ = rng.random((k, k)) < float(density)
            cells = [tuple(int(v) for v in rc) for rc in np.argwhere(occ)]
            if not cells:
                cells = [tuple(int(v) for v in rng.integers(0, k, 2))]
        pol = "undesirable" if t >= n - undesirable else "desirable"
        layers.append((f"T{t}", pol, cells))
    return make_map(k, layers)


@st.composite
def grid_maps(draw, max_k=10, max_n=4):
    k = draw(st.integers(1, max_k))
    n = draw(st.integers(1, max_n))
    cell = st.tuples(st.integers(0, k - 1), st.integers(0, k - 1))
    layers = []
    for t in range(n):
        cells = draw(st.lists(cell, min_size=1, max_size=max(1, k * k // 2)))
        pol = draw(st.sampled_from(["desirable", "undesirable"]))
        layers.append((f"T{t}", pol, cells))
    return make_map(k, layers)


def brute_skyline_ids(scores, grids):
    """Plain double loop; the slowest and most literal oracle, for tiny inputs."""
    out = set()
    for i, a in enumerate(scores):
        dominated = False
        for j, b in enumerate(scores):
            if i != j and all(x <= y for x, y in zip(b, a)) and any(x < y for x, y in zip(b, a)):
                dominated = True
                break
        if not dominated:
            out.add(GridId(*grids[i]))
    return out
