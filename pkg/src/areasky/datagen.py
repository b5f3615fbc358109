"""Seeded synthetic maps: one facility per row per type.

Columns come from a 64-bit linear congruential generator with Knuth's MMIX
constants, so a (spec, seed) pair yields the same map on any platform:

    state = (6364136223846793005 * state + 1442695040888963407) mod 2**64
    col   = ((state >> 32) * k) >> 32

The state is seeded with ``seed`` and advanced once per placement, types in
id order, rows ascending within a type.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import ContractError, FacilityType, GridId, GridMap, Polarity

LCG_MULT = 6364136223846793005
LCG_INC = 1442695040888963407
_MASK = (1 << 64) - 1

# name -> (facility types, grid side) in the full-size experiments
PRESETS = {
    "A": (3, 1000),
    "B": (3, 2000),
    "C": (3, 3000),
    "D": (3, 4000),
    "E": (3, 5000),
    "F": (4, 3000),
    "G": (5, 3000),
    "H": (6, 3000),
}


class LCG:
    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next_u32(self) -> int:
        self.state = (LCG_MULT * self.state + LCG_INC) & _MASK
        return self.state >> 32

    def below(self, k: int) -> int:
        return (self.next_u32() * k) >> 32


@dataclass(frozen=True)
class DatasetSpec:
    k: int
    n: int
    undesirable: int = 1
    seed: int = 0
    name: str = "custom"

    def __post_init__(self):
        if self.k < 1 or self.n < 1:
            raise ContractError(f"need k >= 1 and n >= 1, got k={self.k}, n={self.n}")
        if not 0 <= self.undesirable <= self.n:
            raise ContractError(f"undesirable count {self.undesirable} outside [0, {self.n}]")


def preset(name: str, scale: float = 1.0, seed: int = 0, undesirable: int = 1) -> DatasetSpec:
    key = name.upper()
    if key not in PRESETS:
        raise ContractError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    if not 0 < scale <= 1:
        raise ContractError(f"scale must be in (0, 1], got {scale}")
    n, k = PRESETS[key]
    return DatasetSpec(max(1, int(k * scale + 0.5)), n, undesirable, seed, key)


def generate(spec: DatasetSpec) -> GridMap:
    """The last ``spec.undesirable`` types are undesirable, the rest desirable."""
    rng = LCG(spec.seed)
    types, placements = [], []
    for t in range(spec.n):
        pol = Polarity.UNDESIRABLE if t >= spec.n - spec.undesirable else Polarity.DESIRABLE
        types.append(FacilityType(t, f"F{t + 1}", pol))
        placements.append(tuple(GridId(r, rng.below(spec.k)) for r in range(spec.k)))
    return GridMap(spec.k, tuple(types), tuple(placements))
