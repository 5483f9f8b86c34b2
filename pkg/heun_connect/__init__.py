"""Series solutions and connection matrices for the symmetric Heun equation."""

from .connection import (
    Atlas,
    ConnectionMatrix,
    FundamentalPair,
    canonical_pair,
    chain_check,
    connect_to_point,
    connection_matrix,
    multi_center_atlas,
    single_point_atlas,
)
from .errors import HeunConnectError
from .geometry import AngleTriple, MoebiusMap, circumcircle, cross_ratio
from .regions import RegionRaster, condition_a, condition_b, z3_from_a
from .series import (
    LocalSolution,
    SymmetricHeunConfig,
    evaluate,
    frobenius_solution,
    standard_form_map,
    taylor_solution,
)

__version__ = "0.1.0"

__all__ = [
    "AngleTriple",
    "Atlas",
    "ConnectionMatrix",
    "FundamentalPair",
    "HeunConnectError",
    "LocalSolution",
    "MoebiusMap",
    "RegionRaster",
    "SymmetricHeunConfig",
    "canonical_pair",
    "chain_check",
    "circumcircle",
    "condition_a",
    "condition_b",
    "connect_to_point",
    "connection_matrix",
    "cross_ratio",
    "evaluate",
    "frobenius_solution",
    "multi_center_atlas",
    "single_point_atlas",
    "standard_form_map",
    "taylor_solution",
    "z3_from_a",
]
