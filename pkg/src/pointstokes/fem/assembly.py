"""Assembly of the Stokes saddle-point operator and its load vectors."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np
import scipy.sparse as sp

from ..mesh import TriMesh
from .quadrature import DUNAVANT6, TriangleRule, physical_points, polar_rule, triangles_needing_polar
from .spaces import MixedSpace, barycentric_coordinates, barycentric_gradients

_CHUNK = 32768

# A cut is (center, radii): the integrand may be non-smooth across the
# circles |x - center| = r and singular at the center itself.
Cut = tuple[Sequence[float], Sequence[float]]


@dataclass(frozen=True)
class QuadratureBlock:
    triangles: np.ndarray  # (m,)
    bary: np.ndarray  # (m, q, 3)
    points: np.ndarray  # (m, q, 2)
    weights: np.ndarray  # (m, q), physical


def quadrature_blocks(
    mesh: TriMesh,
    elements: np.ndarray | None = None,
    cuts: Iterable[Cut] = (),
    rule: TriangleRule = DUNAVANT6,
    polar_order: int = 16,
) -> Iterator[QuadratureBlock]:
    """Yield quadrature points covering ``elements`` (default: all).

    Elements touched by a cut get a polar rule about the cut centre; all
    others use ``rule`` in chunks.
    """
    if elements is None:
        elements = np.arange(mesh.n_triangles)
    elements = np.asarray(elements, dtype=np.int64)
    verts = mesh.vertices[mesh.triangles[elements]]
    polar_owner = np.full(len(elements), -1)
    cuts = [(np.asarray(c, dtype=float), tuple(float(r) for r in radii)) for c, radii in cuts]
    for k, (center, radii) in enumerate(cuts):
        flag = triangles_needing_polar(verts, center, radii) & (polar_owner < 0)
        polar_owner[flag] = k

    regular = np.flatnonzero(polar_owner < 0)
    for start in range(0, len(regular), _CHUNK):
        sel = regular[start : start + _CHUNK]
        tri = elements[sel]
        v = verts[sel]
        pts = physical_points(v, rule)
        areas = mesh.areas[tri]
        bary = np.broadcast_to(rule.points, (len(sel),) + rule.points.shape)
        yield QuadratureBlock(tri, bary, pts, areas[:, None] * rule.weights[None, :])

    for idx in np.flatnonzero(polar_owner >= 0):
        tri = verts[idx]
        hits = cuts if len(cuts) == 1 else _touching_cuts(tri, cuts)
        if len({tuple(c) for c, _ in hits}) > 1:
            pts, w = _nested_polar(tri, cuts, polar_order)
        else:
            pts, w = polar_rule(tri, hits[0][0], hits[0][1], polar_order, polar_order)
        bary = barycentric_coordinates(tri[None], pts[None])
        yield QuadratureBlock(elements[idx : idx + 1], bary, pts[None], w[None])


def flat_quadrature(
    mesh: TriMesh,
    elements: np.ndarray | None = None,
    cuts: Iterable[Cut] = (),
    batch: int = 200_000,
) -> Iterator[tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]]:
    """Quadrature points of :func:`quadrature_blocks` merged into flat batches.

    Yields ``(triangle, bary, point, weight)`` arrays with one row per point,
    so that elements with polar rules of different sizes are evaluated
    together.
    """
    parts = []
    count = 0
    for blk in quadrature_blocks(mesh, elements, cuts):
        m, q = blk.weights.shape
        parts.append(
            (
                np.repeat(blk.triangles, q),
                blk.bary.reshape(-1, 3),
                blk.points.reshape(-1, 2),
                blk.weights.ravel(),
            )
        )
        count += m * q
        if count >= batch:
            yield tuple(np.concatenate(z) for z in zip(*parts))
            parts, count = [], 0
    if parts:
        yield tuple(np.concatenate(z) for z in zip(*parts))


def _touching_cuts(tri, cuts):
    v = tri[None]
    return [(c, r) for c, r in cuts if triangles_needing_polar(v, c, r)[0]]


def _nested_polar(tri, cuts, order):
    """Split an element touched by several cut centres into sub-triangles.

    Each sub-triangle is integrated recursively until it is touched by at
    most one centre; used only for overlapping multi-source configurations.
    """
    stack = [(tri, 0)]
    pts_out, w_out = [], []
    while stack:
        t, depth = stack.pop()
        hits = _touching_cuts(t, cuts)
        centers = {tuple(c) for c, _ in hits}
        if len(centers) <= 1 or depth >= 6:
            if hits:
                p, w = polar_rule(t, hits[0][0], hits[0][1], order, order)
            else:
                p = physical_points(t[None], DUNAVANT6)[0]
                area = 0.5 * abs(
                    (t[1, 0] - t[0, 0]) * (t[2, 1] - t[0, 1])
                    - (t[1, 1] - t[0, 1]) * (t[2, 0] - t[0, 0])
                )
                w = area * DUNAVANT6.weights
            pts_out.append(p)
            w_out.append(w)
            continue
        m01 = 0.5 * (t[0] + t[1])
        m12 = 0.5 * (t[1] + t[2])
        m20 = 0.5 * (t[2] + t[0])
        for sub in ((t[0], m01, m20), (m01, t[1], m12), (m20, m12, t[2]), (m01, m12, m20)):
            stack.append((np.array(sub), depth + 1))
    return np.concatenate(pts_out), np.concatenate(w_out)


@dataclass(frozen=True, eq=False)
class StokesSystem:
    """Discrete Stokes operator plus loads.

    The block system solved is::

        [ A   B^T  0 ] [u]   [ g_rhs ]
        [ B   0    m ] [p] = [-h_rhs ]
        [ 0   m^T  0 ] [l]   [   0   ]

    with ``A_ij = mu * int grad(phi_i) : grad(phi_j)``,
    ``B_kj = -int q_k div(phi_j)`` and ``m_k = int q_k``.  ``h_rhs`` holds
    ``int d q_k`` for the prescribed divergence ``div u = d``.
    """

    space: MixedSpace
    mu: float
    A: sp.csr_matrix
    B: sp.csr_matrix
    gauge: np.ndarray
    g_rhs: np.ndarray
    h_rhs: np.ndarray

    @property
    def mesh(self) -> TriMesh:
        return self.space.mesh

    def with_loads(self, g_rhs=None, h_rhs=None) -> "StokesSystem":
        g = self.g_rhs if g_rhs is None else np.asarray(g_rhs, dtype=float)
        h = self.h_rhs if h_rhs is None else np.asarray(h_rhs, dtype=float)
        if g.shape != self.g_rhs.shape or h.shape != self.h_rhs.shape:
            raise ValueError("load vector has the wrong length")
        return replace(self, g_rhs=g, h_rhs=h)


def _element_gradients(space: MixedSpace, verts: np.ndarray, rule: TriangleRule):
    vals, dlam = space.velocity_basis(rule.points)  # (q, l), (q, l, 3)
    glam = barycentric_gradients(verts)  # (m, 3, 2)
    grads = np.einsum("qlk,mkd->mqld", dlam, glam)
    return vals, grads


def assemble_stokes(mesh: TriMesh, space: MixedSpace, mu: float) -> StokesSystem:
    """Assemble the viscous block, the divergence block and the gauge vector."""
    if not mu > 0:
        raise ValueError(f"viscosity must be positive, got {mu!r}")
    if space.mesh is not mesh:
        raise ValueError("space was built on a different mesh")
    rule = DUNAVANT6
    nv = space.n_velocity
    npr = space.n_pressure
    vdofs = space.velocity_cell_dofs
    pdofs = space.pressure_cell_dofs
    nloc = vdofs.shape[1]
    psi, _ = space.pressure_basis(rule.points)  # (q, 3)

    a_rows, a_cols, a_vals = [], [], []
    b_rows, b_cols, b_vals = [], [], []
    for start in range(0, mesh.n_triangles, _CHUNK):
        tri = np.arange(start, min(start + _CHUNK, mesh.n_triangles))
        verts = mesh.vertices[mesh.triangles[tri]]
        area = mesh.areas[tri]
        _, grads = _element_gradients(space, verts, rule)
        wq = area[:, None] * rule.weights[None, :]
        K = mu * np.einsum("mq,mqid,mqjd->mij", wq, grads, grads)
        if space.is_mini:
            # grad(bubble) is L2-orthogonal to constant gradients on each element
            K[:, 3, :3] = 0.0
            K[:, :3, 3] = 0.0
        d = vdofs[tri]
        for c in range(2):
            a_rows.append(np.repeat(d + c * nv, nloc, axis=1).ravel())
            a_cols.append(np.tile(d + c * nv, (1, nloc)).ravel())
            a_vals.append(K.ravel())
        Bloc = -np.einsum("mq,qk,mqjd->mdkj", wq, psi, grads)  # (m, 2, 3, l)
        pd = pdofs[tri]
        for c in range(2):
            b_rows.append(np.repeat(pd, nloc, axis=1).ravel())
            b_cols.append(np.tile(d + c * nv, (1, 3)).ravel())
            b_vals.append(Bloc[:, c].ravel())

    A = sp.coo_matrix(
        (np.concatenate(a_vals), (np.concatenate(a_rows), np.concatenate(a_cols))),
        shape=(2 * nv, 2 * nv),
    ).tocsr()
    A = ((A + A.T) * 0.5).tocsr()
    A.sum_duplicates()
    A.sort_indices()
    B = sp.coo_matrix(
        (np.concatenate(b_vals), (np.concatenate(b_rows), np.concatenate(b_cols))),
        shape=(npr, 2 * nv),
    ).tocsr()
    B.sort_indices()
    gauge = np.bincount(
        mesh.triangles.ravel(), np.repeat(mesh.areas / 3.0, 3), minlength=npr
    )
    return StokesSystem(space, float(mu), A, B, gauge, np.zeros(2 * nv), np.zeros(npr))


def assemble_loads(
    mesh: TriMesh,
    space: MixedSpace,
    f: Callable[[np.ndarray], np.ndarray] | None = None,
    h_fun: Callable[[np.ndarray], np.ndarray] | None = None,
    cuts: Iterable[Cut] = (),
    elements: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Velocity load ``int f . phi_i`` and pressure load ``int h q_k`` in one pass.

    ``f(points) -> (m, 2)`` and ``h_fun(points) -> (m,)``; either may be
    ``None``.
    """
    nv = space.n_velocity
    g_out = np.zeros(2 * nv)
    h_out = np.zeros(space.n_pressure)
    vdofs = space.velocity_cell_dofs
    pdofs = space.pressure_cell_dofs
    for tri, lam, pts, w in flat_quadrature(mesh, elements, list(cuts)):
        if f is not None:
            fv = np.asarray(f(pts), dtype=float).reshape(-1, 2)
            vals, _ = space.velocity_basis(lam)
            d = vdofs[tri].ravel()
            for c in range(2):
                loc = (w * fv[:, c])[:, None] * vals
                g_out += np.bincount(d + c * nv, loc.ravel(), minlength=2 * nv)
        if h_fun is not None:
            hv = np.asarray(h_fun(pts), dtype=float).reshape(-1)
            loc = (w * hv)[:, None] * lam  # P1 pressure basis = barycentrics
            h_out += np.bincount(pdofs[tri].ravel(), loc.ravel(), minlength=len(h_out))
    return g_out, h_out


def assemble_load(
    mesh: TriMesh,
    space: MixedSpace,
    f: Callable[[np.ndarray], np.ndarray],
    cuts: Iterable[Cut] = (),
    elements: np.ndarray | None = None,
) -> np.ndarray:
    """Velocity load ``int f . phi_i`` for a vector field ``f(points) -> (m, 2)``."""
    return assemble_loads(mesh, space, f=f, cuts=cuts, elements=elements)[0]


def assemble_div_load(
    mesh: TriMesh,
    space: MixedSpace,
    h_fun: Callable[[np.ndarray], np.ndarray],
    cuts: Iterable[Cut] = (),
    elements: np.ndarray | None = None,
) -> np.ndarray:
    """Pressure-equation load ``int h q_k`` for a scalar field ``h_fun``."""
    return assemble_loads(mesh, space, h_fun=h_fun, cuts=cuts, elements=elements)[1]
