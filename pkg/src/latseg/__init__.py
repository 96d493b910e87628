"""Finite-stage lattice representations, interpolation, dynamical trees and a bounded priority-tree run."""

from .algebra import (
    LatticeTable,
    UnaryAlgebra,
    congruence_lattice,
    endomorphisms,
    homogeneity_sweep,
    is_malcev_homogeneous,
)
from .errors import LatsegError
from .lattice import CATALOG, FiniteLattice, UslHomomorphism, catalog_lattice, parse_lattice
from .partition import Partition
from .pudlak import pudlak_stage, to_dot, verify_pudlak_conditions
from .simulator import extract_g, run_construction
from .stages import StagedTable
from .trees import TreeMap

__version__ = "0.1.0"

__all__ = [
    "CATALOG",
    "FiniteLattice",
    "LatsegError",
    "LatticeTable",
    "Partition",
    "StagedTable",
    "TreeMap",
    "UnaryAlgebra",
    "UslHomomorphism",
    "catalog_lattice",
    "congruence_lattice",
    "endomorphisms",
    "extract_g",
    "homogeneity_sweep",
    "is_malcev_homogeneous",
    "parse_lattice",
    "pudlak_stage",
    "run_construction",
    "to_dot",
    "verify_pudlak_conditions",
]
