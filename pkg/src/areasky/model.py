"""Grid maps, facility layers, distance tuples and the dominance relation.

Scores are kept in a single *minimize* convention: desirable layers use the
raw squared distance, undesirable layers are reflected as ``dmax2 - d2`` so
that larger raw distances become smaller scores.  Everything is exact integer
arithmetic.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np


class ContractError(ValueError):
    """An operation was called with arguments that break its contract."""


class EmptyLayerError(ContractError):
    """A facility type has no placements, so its distance field is undefined."""


class MapFormatError(ValueError):
    """A map file could not be parsed."""


class Polarity(enum.Enum):
    DESIRABLE = "desirable"
    UNDESIRABLE = "undesirable"


class GridId(NamedTuple):
    row: int
    col: int

    def label(self) -> str:
        return f"G{self.row}{self.col}"


@dataclass(frozen=True)
class FacilityType:
    id: int
    name: str
    polarity: Polarity = Polarity.DESIRABLE

    @property
    def desirable(self) -> bool:
        return self.polarity is Polarity.DESIRABLE


def dmax2(k: int) -> int:
    """Largest squared grid-to-grid distance on a ``k x k`` map."""
    return 2 * (k - 1) ** 2


@dataclass(frozen=True)
class GridMap:
    """A ``k x k`` map with one placement set per facility type.

    Placements are deduplicated and stored sorted, so two maps with the same
    facilities compare equal regardless of input order.
    """

    k: int
    types: tuple[FacilityType, ...]
    placements: tuple[tuple[GridId, ...], ...]

    def __post_init__(self):
        if self.k < 1:
            raise ContractError(f"grid side must be >= 1, got {self.k}")
        types = tuple(self.types)
        if not types:
            raise ContractError("a map needs at least one facility type")
        if [t.id for t in types] != list(range(len(types))):
            raise ContractError("facility type ids must be dense 0..n-1 in order")
        if len(self.placements) != len(types):
            raise ContractError(
                f"{len(types)} facility types but {len(self.placements)} placement sets"
            )
        cleaned = []
        for t, cells in zip(types, self.placements):
            layer = sorted({GridId(int(r), int(c)) for r, c in cells})
            for g in layer:
                if not (0 <= g.row < self.k and 0 <= g.col < self.k):
                    raise ContractError(f"placement {tuple(g)} of type {t.id} outside {self.k}x{self.k} grid")
            if not layer:
                raise EmptyLayerError(f"facility type {t.id} ({t.name}) has no placements")
            cleaned.append(tuple(layer))
        object.__setattr__(self, "types", types)
        object.__setattr__(self, "placements", tuple(cleaned))

    @property
    def n(self) -> int:
        return len(self.types)

    @property
    def dmax2(self) -> int:
        return dmax2(self.k)

    def mask(self, type_id: int) -> np.ndarray:
        """Boolean ``k x k`` occupancy matrix of one layer."""
        out = np.zeros((self.k, self.k), dtype=bool)
        cells = np.asarray(self.placements[type_id], dtype=np.int64).reshape(-1, 2)
        out[cells[:, 0], cells[:, 1]] = True
        return out

    def polarity_mask(self) -> np.ndarray:
        """``True`` for each undesirable dimension."""
        return np.array([not t.desirable for t in self.types], dtype=bool)


@dataclass(frozen=True)
class DistanceTuple:
    grid: GridId
    scores: tuple[int, ...]

    @property
    def n(self) -> int:
        return len(self.scores)


class DominanceResult(enum.Enum):
    FIRST_DOMINATES = "first"
    SECOND_DOMINATES = "second"
    INCOMPARABLE = "incomparable"
    EQUAL = "equal"


def _scores(t) -> Sequence[int]:
    return t.scores if isinstance(t, DistanceTuple) else t


def dominates(a, b) -> bool:
    """True iff ``a`` is no worse than ``b`` everywhere and better somewhere.

    Accepts :class:`DistanceTuple` objects or plain score sequences.
    """
    sa, sb = _scores(a), _scores(b)
    if len(sa) != len(sb):
        raise ContractError(f"dimension mismatch: {len(sa)} vs {len(sb)}")
    strict = False
    for x, y in zip(sa, sb):
        if x > y:
            return False
        if x < y:
            strict = True
    return strict


def compare(a, b) -> DominanceResult:
    sa, sb = _scores(a), _scores(b)
    if len(sa) != len(sb):
        raise ContractError(f"dimension mismatch: {len(sa)} vs {len(sb)}")
    if tuple(sa) == tuple(sb):
        return DominanceResult.EQUAL
    if dominates(sa, sb):
        return DominanceResult.FIRST_DOMINATES
    if dominates(sb, sa):
        return DominanceResult.SECOND_DOMINATES
    return DominanceResult.INCOMPARABLE


def normalize_scores(raw: Sequence[int], types: Sequence[FacilityType], k: int) -> tuple[int, ...]:
    """Map raw squared distances into minimize-convention scores."""
    if len(raw) != len(types):
        raise ContractError(f"{len(raw)} distances for {len(types)} facility types")
    top = dmax2(k)
    out = []
    for d, t in zip(raw, types):
        d = int(d)
        if not 0 <= d <= top:
            raise ContractError(f"squared distance {d} outside [0, {top}] for k={k}")
        out.append(d if t.desirable else top - d)
    return tuple(out)


def normalize_array(raw: np.ndarray, undesirable: np.ndarray, k: int) -> np.ndarray:
    """Vectorised :func:`normalize_scores` over an ``(N, n)`` array."""
    top = dmax2(k)
    if raw.size and (raw.min() < 0 or raw.max() > top):
        raise ContractError(f"squared distances outside [0, {top}] for k={k}")
    return np.where(undesirable[None, :], top - raw, raw).astype(np.int64, copy=False)


def denormalize_array(scores: np.ndarray, undesirable: np.ndarray, k: int) -> np.ndarray:
    # reflection is its own inverse
    return normalize_array(scores, undesirable, k)


@dataclass(frozen=True)
class TupleBlock:
    """Columnar batch of distance tuples.

    ``grids`` is ``(N, 2)`` of (row, col) and ``scores`` is ``(N, n)``, both
    int64.  This is the form tuples travel in between pipeline stages.
    """

    grids: np.ndarray
    scores: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.grids, dtype=np.int64).reshape(-1, 2)
        s = np.asarray(self.scores, dtype=np.int64)
        if s.ndim != 2:
            s = s.reshape(len(g), -1)
        if len(g) != len(s):
            raise ContractError(f"{len(g)} grid ids for {len(s)} score rows")
        object.__setattr__(self, "grids", g)
        object.__setattr__(self, "scores", s)

    def __len__(self) -> int:
        return len(self.grids)

    @property
    def n(self) -> int:
        return self.scores.shape[1]

    @classmethod
    def empty(cls, n: int) -> "TupleBlock":
        return cls(np.empty((0, 2), np.int64), np.empty((0, n), np.int64))

    @classmethod
    def from_tuples(cls, tuples: Iterable[DistanceTuple], n: int | None = None) -> "TupleBlock":
        tuples = list(tuples)
        if not tuples:
            if n is None:
                raise ContractError("cannot infer dimension of an empty tuple list")
            return cls.empty(n)
        dims = {t.n for t in tuples}
        if len(dims) != 1:
            raise ContractError(f"mixed tuple dimensions {sorted(dims)}")
        return cls(
            np.array([t.grid for t in tuples], dtype=np.int64),
            np.array([t.scores for t in tuples], dtype=np.int64),
        )

    @classmethod
    def concat(cls, blocks: Sequence["TupleBlock"], n: int | None = None) -> "TupleBlock":
        blocks = [b for b in blocks if b is not None]
        if not blocks:
            return cls.empty(n or 0)
        return cls(
            np.concatenate([b.grids for b in blocks]),
            np.concatenate([b.scores for b in blocks]),
        )

    def take(self, idx) -> "TupleBlock":
        return TupleBlock(self.grids[idx], self.scores[idx])

    def canonical(self) -> "TupleBlock":
        """Copy sorted by (row, col)."""
        order = np.lexsort((self.grids[:, 1], self.grids[:, 0]))
        return self.take(order)

    def to_tuples(self) -> list[DistanceTuple]:
        return [
            DistanceTuple(GridId(int(r), int(c)), tuple(int(v) for v in s))
            for (r, c), s in zip(self.grids, self.scores)
        ]

    def grid_set(self) -> set[GridId]:
        return {GridId(int(r), int(c)) for r, c in self.grids}

    def labels(self) -> list[str]:
        return [GridId(int(r), int(c)).label() for r, c in self.canonical().grids]


# --- map file format -------------------------------------------------------

_HEADER = re.compile(r"^map\s+k=(\d+)\s+n=(\d+)$")


def serialize_map(m: GridMap) -> str:
    lines = [f"map k={m.k} n={m.n}"]
    for t in m.types:
        lines.append(f"facility {t.id} {t.name} {t.polarity.value}")
    for t, cells in zip(m.types, m.placements):
        lines.extend(f"place {t.id} {g.row} {g.col}" for g in cells)
    return "\n".join(lines) + "\n"


def parse_map(text: str) -> GridMap:
    rows = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if line:
            rows.append((lineno, line))
    if not rows:
        raise MapFormatError("empty map file")
    lineno, head = rows[0]
    match = _HEADER.match(head)
    if not match:
        raise MapFormatError(f"line {lineno}: expected 'map k=<int> n=<int>', got {head!r}")
    k, n = int(match.group(1)), int(match.group(2))
    if len(rows) < 1 + n:
        raise MapFormatError(f"header declares {n} facility types, file has fewer lines")

    types = []
    for lineno, line in rows[1 : 1 + n]:
        parts = line.split()
        if len(parts) != 4 or parts[0] != "facility":
            raise MapFormatError(f"line {lineno}: expected 'facility <id> <name> <polarity>'")
        try:
            types.append(FacilityType(int(parts[1]), parts[2], Polarity(parts[3])))
        except ValueError as exc:
            raise MapFormatError(f"line {lineno}: {exc}") from None

    placements: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for lineno, line in rows[1 + n :]:
        parts = line.split()
        if len(parts) != 4 or parts[0] != "place":
            raise MapFormatError(f"line {lineno}: expected 'place <type_id> <row> <col>'")
        try:
            tid, r, c = (int(p) for p in parts[1:])
        except ValueError:
            raise MapFormatError(f"line {lineno}: non-integer field") from None
        if not 0 <= tid < n:
            raise MapFormatError(f"line {lineno}: unknown facility type {tid}")
        placements[tid].append((r, c))

    try:
        return GridMap(k, tuple(types), tuple(tuple(p) for p in placements))
    except ContractError as exc:
        raise MapFormatError(str(exc)) from None


def read_map(path) -> GridMap:
    with open(path, encoding="utf-8") as fh:
        return parse_map(fh.read())


def write_map(m: GridMap, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(serialize_map(m))


def make_map(k: int, layers: Sequence[tuple[str, Polarity | str, Iterable[tuple[int, int]]]]) -> GridMap:
    """Build a map from ``(name, polarity, cells)`` triples."""
    types, placements = [], []
    for i, (name, pol, cells) in enumerate(layers):
        types.append(FacilityType(i, name, Polarity(pol)))
        placements.append(tuple(GridId(r, c) for r, c in cells))
    return GridMap(k, tuple(types), tuple(placements))


def table1_map() -> GridMap:
    """The 4x4 station/apartment/warehouse/landfill example map."""
    return make_map(
        4,
        [
            ("station", Polarity.DESIRABLE, [(0, 0)]),
            ("apartment", Polarity.DESIRABLE, [(0, 2), (1, 0)]),
            ("warehouse", Polarity.DESIRABLE, [(0, 3), (3, 1)]),
            ("landfill", Polarity.UNDESIRABLE, [(2, 3)]),
        ],
    )
