"""Symmetry analysis and stochastic-circuit checks for qudit-chain gate sets."""

__version__ = "0.1.0"

from .catalog import CATALOG_NAMES, GateSet, build, custom
from .closure import OperatorBasis, lie_closure
from .commutant import bond_algebra, commutant, sector_table
from .operators import ChainGeometry, Operator
from .superalgebra import UniversalityReport, classify, super_commutant

__all__ = [
    "CATALOG_NAMES",
    "ChainGeometry",
    "GateSet",
    "Operator",
    "OperatorBasis",
    "UniversalityReport",
    "bond_algebra",
    "build",
    "classify",
    "commutant",
    "custom",
    "lie_closure",
    "sector_table",
    "super_commutant",
    "__version__",
]
