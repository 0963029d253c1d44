"""Velocity/pressure element pairs and their degree-of-freedom layout."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ..mesh import TriMesh


class ElementPair(str, enum.Enum):
    MINI = "MINI"  # P1 + cubic bubble / P1
    TAYLOR_HOOD = "TaylorHood"  # P2 / P1

    @classmethod
    def parse(cls, value) -> "ElementPair":
        if isinstance(value, cls):
            return value
        key = str(value).replace("-", "").replace("_", "").lower()
        for member in cls:
            if member.value.lower() == key or member.name.replace("_", "").lower() == key:
                return member
        raise ValueError(f"unknown element pair {value!r}; use MINI or TaylorHood")


# -- reference basis functions in barycentric coordinates ---------------------
# Each returns values (q, nloc) and derivatives w.r.t. the barycentrics (q, nloc, 3).


def p1_basis(lam):
    q = len(lam)
    return lam.copy(), np.broadcast_to(np.eye(3), (q, 3, 3)).copy()


def mini_basis(lam):
    vals, d = p1_basis(lam)
    l0, l1, l2 = lam.T
    bub = 27.0 * l0 * l1 * l2
    dbub = 27.0 * np.column_stack([l1 * l2, l0 * l2, l0 * l1])
    return np.column_stack([vals, bub]), np.concatenate([d, dbub[:, None, :]], axis=1)


def p2_basis(lam):
    q = len(lam)
    vals = np.empty((q, 6))
    d = np.zeros((q, 6, 3))
    for k in range(3):
        vals[:, k] = lam[:, k] * (2.0 * lam[:, k] - 1.0)
        d[:, k, k] = 4.0 * lam[:, k] - 1.0
        # edge opposite vertex k joins vertices k+1 and k+2
        i, j = (k + 1) % 3, (k + 2) % 3
        vals[:, 3 + k] = 4.0 * lam[:, i] * lam[:, j]
        d[:, 3 + k, i] = 4.0 * lam[:, j]
        d[:, 3 + k, j] = 4.0 * lam[:, i]
    return vals, d


def barycentric_gradients(tri_vertices: np.ndarray) -> np.ndarray:
    """Constant gradients of the barycentric coordinates, shape ``(m, 3, 2)``."""
    p0, p1, p2 = tri_vertices[:, 0], tri_vertices[:, 1], tri_vertices[:, 2]
    d1 = p1 - p0
    d2 = p2 - p0
    det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    g1 = np.column_stack([d2[:, 1], -d2[:, 0]]) / det[:, None]
    g2 = np.column_stack([-d1[:, 1], d1[:, 0]]) / det[:, None]
    return np.stack([-g1 - g2, g1, g2], axis=1)


def barycentric_coordinates(tri_vertices: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Barycentrics of ``points`` (``(m, q, 2)``) in triangles (``(m, 3, 2)``)."""
    grads = barycentric_gradients(tri_vertices)
    rel = points - tri_vertices[:, None, 0, :]
    l12 = np.einsum("mqd,mkd->mqk", rel, grads[:, 1:, :])
    return np.concatenate([1.0 - l12.sum(axis=2, keepdims=True), l12], axis=2)


@dataclass(frozen=True, eq=False)
class MixedSpace:
    """A velocity/pressure pair over a mesh.

    Velocity components share one scalar dof numbering; the full velocity
    vector is ``[u_x dofs, u_y dofs]``.  Pressure is P1 at the vertices.
    """

    mesh: TriMesh
    pair: ElementPair = ElementPair.MINI

    @classmethod
    def create(cls, mesh: TriMesh, pair="MINI") -> "MixedSpace":
        return cls(mesh, ElementPair.parse(pair))

    @property
    def is_mini(self) -> bool:
        return self.pair is ElementPair.MINI

    def velocity_basis(self, lam):
        return mini_basis(lam) if self.is_mini else p2_basis(lam)

    def pressure_basis(self, lam):
        return p1_basis(lam)

    @cached_property
    def velocity_cell_dofs(self) -> np.ndarray:
        mesh = self.mesh
        nv = mesh.n_vertices
        if self.is_mini:
            extra = nv + np.arange(mesh.n_triangles)[:, None]
        else:
            extra = nv + mesh.triangle_edges
        dofs = np.hstack([mesh.triangles, extra])
        dofs.setflags(write=False)
        return dofs

    @property
    def pressure_cell_dofs(self) -> np.ndarray:
        return self.mesh.triangles

    @property
    def n_velocity(self) -> int:
        """Scalar velocity dofs per component."""
        extra = self.mesh.n_triangles if self.is_mini else self.mesh.n_edges
        return self.mesh.n_vertices + extra

    @property
    def n_pressure(self) -> int:
        return self.mesh.n_vertices

    @cached_property
    def dof_coordinates(self) -> np.ndarray:
        mesh = self.mesh
        if self.is_mini:
            extra = mesh.vertices[mesh.triangles].mean(axis=1)
        else:
            extra = mesh.vertices[mesh.edges].mean(axis=1)
        return np.vstack([mesh.vertices, extra])

    @cached_property
    def boundary_dofs(self) -> np.ndarray:
        """Scalar velocity dofs lying on the boundary (bubbles never do)."""
        mesh = self.mesh
        dofs = np.flatnonzero(mesh.boundary_vertex_flags)
        if not self.is_mini:
            dofs = np.concatenate(
                [dofs, mesh.n_vertices + np.flatnonzero(mesh.boundary_edge_flags)]
            )
        return dofs

    @property
    def bubble_dofs(self) -> np.ndarray | None:
        if not self.is_mini:
            return None
        return self.mesh.n_vertices + np.arange(self.mesh.n_triangles)

    def interpolate_velocity(self, func) -> np.ndarray:
        """Coefficients ``(2, n_velocity)`` of the interpolant of ``func``.

        For MINI the bubble coefficient makes the interpolant match ``func``
        at each centroid.
        """
        coords = self.dof_coordinates
        vals = np.asarray(func(coords), dtype=float).reshape(-1, 2).T.copy()
        if self.is_mini:
            nv = self.mesh.n_vertices
            p1_at_centroid = vals[:, :nv][:, self.mesh.triangles].mean(axis=2)
            vals[:, nv:] -= p1_at_centroid
        return vals

    def interpolate_pressure(self, func) -> np.ndarray:
        return np.asarray(func(self.mesh.vertices), dtype=float).reshape(-1)


@dataclass(frozen=True, eq=False)
class Field:
    """Finite-element velocity and pressure coefficients on a :class:`MixedSpace`."""

    space: MixedSpace
    velocity: np.ndarray  # (2, n_velocity)
    pressure: np.ndarray  # (n_pressure,)

    def __post_init__(self):
        if self.velocity.shape != (2, self.space.n_velocity):
            raise ValueError(
                f"velocity has shape {self.velocity.shape}, "
                f"expected (2, {self.space.n_velocity})"
            )
        if self.pressure.shape != (self.space.n_pressure,):
            raise ValueError(
                f"pressure has shape {self.pressure.shape}, "
                f"expected ({self.space.n_pressure},)"
            )

    @classmethod
    def zeros(cls, space: MixedSpace) -> "Field":
        return cls(space, np.zeros((2, space.n_velocity)), np.zeros(space.n_pressure))

    @property
    def mesh(self) -> TriMesh:
        return self.space.mesh

    def __add__(self, other: "Field") -> "Field":
        if other.space is not self.space:
            raise ValueError("fields live on different spaces")
        return Field(self.space, self.velocity + other.velocity, self.pressure + other.pressure)

    def __sub__(self, other: "Field") -> "Field":
        return self + other.scaled(-1.0)

    def scaled(self, alpha: float) -> "Field":
        return Field(self.space, alpha * self.velocity, alpha * self.pressure)

    def evaluate_at(self, tri: np.ndarray, lam: np.ndarray):
        """Values at points given by triangle index ``(m,)`` and barycentrics ``(m, 3)``."""
        vals, _ = self.space.velocity_basis(lam)
        dofs = self.space.velocity_cell_dofs[tri]
        u = np.einsum("ml,cml->mc", vals, self.velocity[:, dofs])
        p = np.einsum("mk,mk->m", lam, self.pressure[self.space.pressure_cell_dofs[tri]])
        return u, p

    def evaluate(self, points):
        """Velocity ``(m, 2)`` and pressure ``(m,)`` at physical points."""
        tri, lam = self.mesh.locate_points(points)
        return self.evaluate_at(tri, lam)

    def velocity_at(self, points) -> np.ndarray:
        return self.evaluate(points)[0]

    def pressure_mean(self) -> float:
        mesh = self.mesh
        return float(np.sum(mesh.areas * self.pressure[mesh.triangles].mean(axis=1)))
