"""End-to-end pipelines for point-force Stokes problems.

``solve_direct`` tests the Dirac load against the finite-element basis.
``solve_subtraction`` writes the solution as ``chi * Stokeslet + (v, q)``
and solves the regular problem for ``(v, q)``, whose loads are the
correction fields supported in the cutoff ring.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .fem.assembly import StokesSystem, assemble_load, assemble_loads, assemble_stokes
from .fem.solver import solve_saddle_point
from .fem.spaces import Field, MixedSpace
from .mesh import TriMesh
from .singular import (
    CutoffSpec,
    SingularSource,
    correction_g,
    correction_h,
    cutoff_stokeslet,
    point_force_load,
)

VectorField = Callable[[np.ndarray], np.ndarray]


def _shared_mu(sources: Sequence[SingularSource]) -> float:
    if not sources:
        raise ValueError("at least one source is required")
    mus = {s.mu for s in sources}
    if len(mus) != 1:
        raise ValueError(f"all sources must share one viscosity, got {sorted(mus)}")
    for s in sources:
        if s.dim != 2:
            raise ValueError("finite-element solves are two-dimensional")
    return mus.pop()


def _system(mesh, space, mu, system):
    if system is None:
        return assemble_stokes(mesh, space, mu)
    if system.space is not space or system.mu != mu:
        raise ValueError("pre-assembled system does not match the space or viscosity")
    return system


def solve_direct(
    mesh: TriMesh,
    space: MixedSpace,
    sources: Sequence[SingularSource],
    extra_f: VectorField | None = None,
    system: StokesSystem | None = None,
    method: str = "auto",
) -> Field:
    """Galerkin solution with the Dirac loads applied by point evaluation."""
    sources = list(sources)
    mu = _shared_mu(sources)
    system = _system(mesh, space, mu, system)
    g = np.zeros(2 * space.n_velocity)
    for src in sources:
        g += point_force_load(mesh, space, src)
    if extra_f is not None:
        g += assemble_load(mesh, space, extra_f)
    h = np.zeros(space.n_pressure)
    return solve_saddle_point(system.with_loads(g, h), method=method)


@dataclass(frozen=True, eq=False)
class SubtractionSolution:
    """Total solution ``sum_i chi_i (u_i, p_i) + (v_h, q_h)``.

    ``field`` holds the regular part ``(v_h, q_h)``; each source and its
    cutoff define one analytic part ``chi(|x - x0|)`` times the Stokeslet.
    """

    field: Field
    sources: tuple[SingularSource, ...]
    specs: tuple[CutoffSpec, ...]

    @property
    def mesh(self) -> TriMesh:
        return self.field.mesh

    @property
    def space(self) -> MixedSpace:
        return self.field.space

    def singular_part(self, points):
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        u = np.zeros_like(pts)
        p = np.zeros(len(pts))
        for src, spec in zip(self.sources, self.specs):
            us, ps = cutoff_stokeslet(pts, src, spec)
            u += us
            p += ps
        return u, p

    def evaluate(self, points):
        """Total velocity ``(m, 2)`` and pressure ``(m,)`` at ``points``."""
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        uv, pv = self.field.evaluate(pts)
        us, ps = self.singular_part(pts)
        return us + uv, ps + pv

    def velocity_at(self, points) -> np.ndarray:
        return self.evaluate(points)[0]


def evaluate_total(sol: SubtractionSolution, x):
    """Total velocity and pressure at one point ``(2,)`` or at points ``(m, 2)``.

    Raises :class:`~pointstokes.singular.SingularityError` at a source point
    and :class:`~pointstokes.mesh.OutsideDomainError` outside the square.
    """
    arr = np.asarray(x, dtype=float)
    u, p = sol.evaluate(arr)
    if arr.ndim == 1:
        return u[0], float(p[0])
    return u, p


def _ring_elements(mesh: TriMesh, src: SingularSource, spec: CutoffSpec) -> np.ndarray:
    # every point of a triangle is within h of its centroid
    centroids = mesh.vertices[mesh.triangles].mean(axis=1)
    dist = np.linalg.norm(centroids - src.x0, axis=1)
    return np.flatnonzero(dist < spec.b + mesh.h)


def correction_loads(mesh: TriMesh, space: MixedSpace, src: SingularSource, spec: CutoffSpec):
    """Velocity and pressure-equation loads of the regular problem for one source.

    The regular part satisfies ``-mu lap v + grad q = -g`` and ``div v = -h``.
    """
    elements = _ring_elements(mesh, src, spec)
    cuts = [(src.x0, (spec.a, spec.b))]
    return assemble_loads(
        mesh,
        space,
        f=lambda x: -correction_g(x, src, spec),
        h_fun=lambda x: -correction_h(x, src, spec),
        cuts=cuts,
        elements=elements,
    )


def solve_multi_subtraction(
    mesh: TriMesh,
    space: MixedSpace,
    sources: Sequence[SingularSource],
    specs: CutoffSpec | Sequence[CutoffSpec] = CutoffSpec(),
    extra_f: VectorField | None = None,
    system: StokesSystem | None = None,
    method: str = "auto",
) -> SubtractionSolution:
    """One regular solve for several point forces plus an optional smooth load.

    ``specs`` is one cutoff shared by all sources or one per source.
    Overlapping rings are allowed; their loads add.
    """
    sources = tuple(sources)
    mu = _shared_mu(sources)
    if isinstance(specs, CutoffSpec):
        specs = (specs,) * len(sources)
    specs = tuple(specs)
    if len(specs) != len(sources):
        raise ValueError(f"got {len(specs)} cutoffs for {len(sources)} sources")
    for src, spec in zip(sources, specs):
        spec.check_source(src)
    system = _system(mesh, space, mu, system)

    g = np.zeros(2 * space.n_velocity)
    h = np.zeros(space.n_pressure)
    for src, spec in zip(sources, specs):
        dg, dh = correction_loads(mesh, space, src, spec)
        g += dg
        h += dh
    if extra_f is not None:
        g += assemble_load(mesh, space, extra_f)
    field = solve_saddle_point(system.with_loads(g, h), method=method)
    return SubtractionSolution(field, sources, specs)


def solve_subtraction(
    mesh: TriMesh,
    space: MixedSpace,
    src: SingularSource,
    spec: CutoffSpec = CutoffSpec(),
    extra_f: VectorField | None = None,
    system: StokesSystem | None = None,
    method: str = "auto",
) -> SubtractionSolution:
    """Subtraction solve for a single point force."""
    return solve_multi_subtraction(mesh, space, [src], spec, extra_f, system, method)
