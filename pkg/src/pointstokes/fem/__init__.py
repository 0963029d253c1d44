"""Mixed finite elements for the Stokes operator."""

from .assembly import StokesSystem, assemble_div_load, assemble_load, assemble_stokes
from .norms import l2_error
from .solver import SolverError, solve_saddle_point
from .spaces import ElementPair, Field, MixedSpace

__all__ = [
    "ElementPair",
    "Field",
    "MixedSpace",
    "SolverError",
    "StokesSystem",
    "assemble_div_load",
    "assemble_load",
    "assemble_stokes",
    "l2_error",
    "solve_saddle_point",
]
