"""Cut times of simple random walk on quasi-transitive graphs: simulation and exact numerics."""

from cutwalk.graphs import (
    CapacityError,
    FreeGroup,
    Heisenberg,
    InvalidVertexError,
    Lattice,
    LatticeCrossFinite,
    OrbitDeclarationError,
    path_graph,
)

__version__ = "0.1.0"

__all__ = [
    "CapacityError",
    "FreeGroup",
    "Heisenberg",
    "InvalidVertexError",
    "Lattice",
    "LatticeCrossFinite",
    "OrbitDeclarationError",
    "path_graph",
]
