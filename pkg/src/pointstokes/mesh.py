"""Structured triangulations of the unit square.

Every cell ``[i/n, (i+1)/n] x [j/n, (j+1)/n]`` is cut along its
lower-left to upper-right diagonal.  Vertex ``(i, j)`` has index
``j * (n + 1) + i``; cell ``(i, j)`` owns triangles ``2 * (j * n + i)``
(below the diagonal) and ``2 * (j * n + i) + 1`` (above it).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

# slack in local cell coordinates when testing point membership
_LOCATE_TOL = 1e-12


class OutsideDomainError(ValueError):
    """A point lies outside the closed unit square."""


@dataclass(frozen=True, eq=False)
class TriMesh:
    """Uniform triangulation of the unit square with ``n`` cells per side."""

    n: int
    vertices: np.ndarray = field(repr=False)
    triangles: np.ndarray = field(repr=False)
    boundary_vertex_flags: np.ndarray = field(repr=False)

    @property
    def h(self) -> float:
        return 1.0 / self.n

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @cached_property
    def areas(self) -> np.ndarray:
        """Signed triangle areas (all equal to ``1 / (2 n^2)``)."""
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    @cached_property
    def _edge_data(self):
        local = np.array([[1, 2], [2, 0], [0, 1]])  # edge k is opposite vertex k
        pairs = np.sort(self.triangles[:, local], axis=2).reshape(-1, 2)
        edges, inverse, counts = np.unique(
            pairs, axis=0, return_inverse=True, return_counts=True
        )
        return edges, inverse.reshape(-1, 3), counts

    @property
    def edges(self) -> np.ndarray:
        """Unique edges as sorted vertex pairs, shape ``(n_edges, 2)``."""
        return self._edge_data[0]

    @property
    def triangle_edges(self) -> np.ndarray:
        """Per triangle, the edge indices opposite local vertices 0, 1, 2."""
        return self._edge_data[1]

    @property
    def edge_triangle_counts(self) -> np.ndarray:
        """Number of triangles sharing each edge (1 on the boundary)."""
        return self._edge_data[2]

    @property
    def boundary_edge_flags(self) -> np.ndarray:
        return self.edge_triangle_counts == 1

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def locate_point(self, x) -> tuple[int, np.ndarray]:
        """Return the containing triangle and barycentric coordinates of ``x``.

        On shared edges and vertices the lowest triangle index wins.
        """
        tri, bary = self.locate_points(np.asarray(x, dtype=float).reshape(1, 2))
        return int(tri[0]), bary[0]

    def locate_points(self, points) -> tuple[np.ndarray, np.ndarray]:
        """Vectorised :meth:`locate_point` for an ``(m, 2)`` array."""
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        outside = np.any((pts < 0.0) | (pts > 1.0) | ~np.isfinite(pts), axis=1)
        if np.any(outside):
            bad = pts[np.argmax(outside)]
            raise OutsideDomainError(
                f"point ({bad[0]!r}, {bad[1]!r}) lies outside the unit square"
            )
        n = self.n
        s = pts * n
        base = np.clip(np.floor(s).astype(np.int64), 0, n - 1)
        m = len(pts)
        tri = np.full(m, -1, dtype=np.int64)
        bary = np.zeros((m, 3))
        # candidates visited in increasing triangle index: row, column, lower/upper
        for dj in (-1, 0, 1):
            for di in (-1, 0, 1):
                i = base[:, 0] + di
                j = base[:, 1] + dj
                valid = (i >= 0) & (i < n) & (j >= 0) & (j < n) & (tri < 0)
                if not np.any(valid):
                    continue
                xi = s[:, 0] - i
                eta = s[:, 1] - j
                for upper in (0, 1):
                    if upper:
                        lam = np.stack([1.0 - eta, xi, eta - xi], axis=1)
                    else:
                        lam = np.stack([1.0 - xi, xi - eta, eta], axis=1)
                    hit = valid & np.all(lam >= -_LOCATE_TOL, axis=1)
                    tri[hit] = 2 * (j[hit] * n + i[hit]) + upper
                    bary[hit] = lam[hit]
                    valid &= ~hit
        if np.any(tri < 0):  # pragma: no cover - guarded by the domain check
            raise OutsideDomainError("point location failed")
        bary = np.clip(bary, 0.0, 1.0)
        bary /= bary.sum(axis=1, keepdims=True)
        return tri, bary

    def summary(self) -> dict:
        return {
            "n": self.n,
            "h": self.h,
            "vertices": self.n_vertices,
            "triangles": self.n_triangles,
            "edges": self.n_edges,
            "boundary_vertices": int(self.boundary_vertex_flags.sum()),
        }


def build_uniform_mesh(n: int) -> TriMesh:
    """Build the structured mesh of the unit square with ``n`` cells per side."""
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    n = int(n)
    coords = np.arange(n + 1) / n
    X, Y = np.meshgrid(coords, coords)  # index [j, i]
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    j, i = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    v00 = (j * (n + 1) + i).ravel()
    v10 = v00 + 1
    v01 = v00 + (n + 1)
    v11 = v01 + 1
    triangles = np.empty((2 * n * n, 3), dtype=np.int64)
    triangles[0::2] = np.column_stack([v00, v10, v11])
    triangles[1::2] = np.column_stack([v00, v11, v01])

    on_boundary = (
        (vertices[:, 0] == 0.0)
        | (vertices[:, 0] == 1.0)
        | (vertices[:, 1] == 0.0)
        | (vertices[:, 1] == 1.0)
    )
    for arr in (vertices, triangles, on_boundary):
        arr.setflags(write=False)
    return TriMesh(n, vertices, triangles, on_boundary)
