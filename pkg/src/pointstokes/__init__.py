"""Finite-element Stokes flow driven by point forces on the unit square.

Two discretisations of a Dirac force are provided: the direct one, which
tests the force against the finite-element basis at the source point, and
a subtraction scheme that removes a localised Stokeslet analytically and
solves a regular problem for the remainder.
"""

from .mesh import OutsideDomainError, TriMesh, build_uniform_mesh
from .fem import (
    ElementPair,
    Field,
    MixedSpace,
    SolverError,
    StokesSystem,
    assemble_div_load,
    assemble_load,
    assemble_stokes,
    l2_error,
    solve_saddle_point,
)
from .singular import (
    CutoffSpec,
    LineicForce,
    SingularityError,
    SingularSource,
    correction_g,
    correction_h,
    correction_residual_check,
    cutoff,
    cutoff_derivative,
    cutoff_stokeslet,
    discretize_lineic,
    point_force_load,
    stokeslet,
    stokeslet_residual_check,
)
from .solvers import (
    SubtractionSolution,
    evaluate_total,
    solve_direct,
    solve_multi_subtraction,
    solve_subtraction,
)

__version__ = "0.1.0"

__all__ = [
    "CutoffSpec",
    "ElementPair",
    "Field",
    "LineicForce",
    "MixedSpace",
    "OutsideDomainError",
    "SingularSource",
    "SingularityError",
    "SolverError",
    "StokesSystem",
    "SubtractionSolution",
    "TriMesh",
    "assemble_div_load",
    "assemble_load",
    "assemble_stokes",
    "build_uniform_mesh",
    "correction_g",
    "correction_h",
    "correction_residual_check",
    "cutoff",
    "cutoff_derivative",
    "cutoff_stokeslet",
    "discretize_lineic",
    "evaluate_total",
    "l2_error",
    "point_force_load",
    "solve_direct",
    "solve_multi_subtraction",
    "solve_saddle_point",
    "solve_subtraction",
    "stokeslet",
    "stokeslet_residual_check",
]
