"""Parallel area-skyline queries on grid maps.

Typical use::

    from areasky import datagen, pipeline

    m = datagen.generate(datagen.preset("A", scale=0.1, seed=7))
    sky, report = pipeline.run_pipeline(m, pipeline.VariantSpec.parse("p-sfs", workers=4))
"""

from .datagen import DatasetSpec, generate, preset
from .edt import DistanceField, brute_force_edt, edt
from .model import (
    ContractError,
    DistanceTuple,
    DominanceResult,
    EmptyLayerError,
    FacilityType,
    GridId,
    GridMap,
    MapFormatError,
    Polarity,
    TupleBlock,
    compare,
    dominates,
    normalize_scores,
    parse_map,
    serialize_map,
    table1_map,
)
from .pipeline import Backend, Mode, StageReport, VariantSpec, all_variants, run_pipeline
from .skyline import bnl_skyline, brute_force_skyline, sfs_skyline

__version__ = "0.1.0"
