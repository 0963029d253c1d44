"""Quadrature on triangles.

Two rules are used.  The fixed symmetric 12-point rule (exact to degree 6)
handles smooth integrands.  Elements crossed by a circle across which the
integrand is not smooth, or containing a point singularity, are integrated
in polar coordinates about the circle centre: the angular range is split at
every vertex direction and every edge/circle crossing, and each radial
segment is split at the circle radii, so Gauss-Legendre only ever sees
smooth pieces.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np


@dataclass(frozen=True)
class TriangleRule:
    """Barycentric points (``(q, 3)``) and weights summing to one."""

    points: np.ndarray
    weights: np.ndarray
    degree: int

    def __len__(self) -> int:
        return len(self.weights)


def _symmetric_rule(orbits, degree) -> TriangleRule:
    pts, wts = [], []
    for coords, w in orbits:
        for perm in sorted(set(itertools.permutations(coords))):
            pts.append(perm)
            wts.append(w)
    return TriangleRule(np.array(pts), np.array(wts), degree)


def _dunavant6() -> TriangleRule:
    # orbit parameters solved from the degree <= 6 moment equations to 1e-16
    a1, w1 = 0.24928674517087782, 0.11678627572643453
    a2, w2 = 0.06308901449150917, 0.05084490637021657
    b, c, w3 = 0.053145049844793825, 0.3103524510338094, 0.08285107561834111
    return _symmetric_rule(
        [
            ((a1, a1, 1.0 - 2.0 * a1), w1),
            ((a2, a2, 1.0 - 2.0 * a2), w2),
            ((b, c, 1.0 - b - c), w3),
        ],
        degree=6,
    )


DUNAVANT6 = _dunavant6()
CENTROID = TriangleRule(np.array([[1 / 3, 1 / 3, 1 / 3]]), np.array([1.0]), 1)


@lru_cache(maxsize=None)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights mapped to ``[0, 1]``."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def physical_points(vertices: np.ndarray, rule: TriangleRule) -> np.ndarray:
    """Map rule points into each triangle; ``vertices`` is ``(m, 3, 2)``."""
    return np.einsum("qk,mkd->mqd", rule.points, vertices)


def _point_segment_distance(c, p0, p1):
    d = p1 - p0
    t = np.einsum("...d,...d->...", c - p0, d) / np.einsum("...d,...d->...", d, d)
    t = np.clip(t, 0.0, 1.0)
    foot = p0 + t[..., None] * d
    return np.linalg.norm(c - foot, axis=-1)


def _contains(vertices, c, tol=1e-14):
    """Whether ``c`` lies in each closed (counterclockwise) triangle."""
    inside = np.ones(len(vertices), dtype=bool)
    for k in range(3):
        p0 = vertices[:, k]
        p1 = vertices[:, (k + 1) % 3]
        cross = (p1[:, 0] - p0[:, 0]) * (c[1] - p0[:, 1]) - (p1[:, 1] - p0[:, 1]) * (
            c[0] - p0[:, 0]
        )
        inside &= cross >= -tol
    return inside


def triangles_needing_polar(vertices, center, radii, include_center=True):
    """Flag triangles crossed by a circle ``|x - center| = r`` or holding ``center``.

    ``vertices`` is ``(m, 3, 2)``.
    """
    c = np.asarray(center, dtype=float)
    contains = _contains(vertices, c)
    dmax = np.linalg.norm(vertices - c, axis=2).max(axis=1)
    dmin = np.min(
        [
            _point_segment_distance(c, vertices[:, k], vertices[:, (k + 1) % 3])
            for k in range(3)
        ],
        axis=0,
    )
    dmin = np.where(contains, 0.0, dmin)
    flag = contains if include_center else np.zeros(len(vertices), dtype=bool)
    for r in radii:
        flag |= (dmin < r) & (r < dmax)
    return flag


def _circle_edge_angles(tri, c, r):
    out = []
    for k in range(3):
        p0 = tri[k]
        d = tri[(k + 1) % 3] - p0
        f = p0 - c
        A = d @ d
        B = 2.0 * (f @ d)
        C = f @ f - r * r
        disc = B * B - 4.0 * A * C
        if disc < 0.0:
            continue
        sq = np.sqrt(disc)
        for t in ((-B - sq) / (2.0 * A), (-B + sq) / (2.0 * A)):
            if 0.0 <= t <= 1.0:
                q = f + t * d
                out.append(np.arctan2(q[1], q[0]))
    return out


def polar_rule(tri, center, radii=(), n_theta=16, n_r=16):
    """Physical points and weights integrating over one triangle in polar form.

    ``tri`` is ``(3, 2)`` counterclockwise.  The integrand may be non-smooth
    across the circles ``|x - center| = r`` for ``r`` in ``radii`` and may
    have an integrable singularity at ``center``.
    """
    tri = np.asarray(tri, dtype=float)
    c = np.asarray(center, dtype=float)
    rel = tri - c
    angles = [np.arctan2(v[1], v[0]) for v in rel if np.hypot(*v) > 0.0]
    for r in radii:
        angles.extend(_circle_edge_angles(tri, c, r))
    angles = np.sort(np.mod(angles, 2.0 * np.pi))
    breaks = np.concatenate([angles, [angles[0] + 2.0 * np.pi]])

    # inward normals n_k and offsets: n_k . (c + r e - p_k) >= 0
    normals = []
    offsets = []
    for k in range(3):
        d = tri[(k + 1) % 3] - tri[k]
        nk = np.array([-d[1], d[0]])
        normals.append(nk)
        offsets.append(nk @ (c - tri[k]))
    normals = np.array(normals)
    offsets = np.array(offsets)
    cuts = np.sort(np.asarray(radii, dtype=float))
    edges_r = np.concatenate([[0.0], cuts, [np.inf]])

    t0, t1 = breaks[:-1], breaks[1:]
    keep = (t1 - t0) > 1e-15
    t0, span = t0[keep], (t1 - t0)[keep]
    tnodes, tweights = gauss_legendre(n_theta)
    rnodes, rweights = gauss_legendre(n_r)
    theta = (t0[:, None] + span[:, None] * tnodes[None, :]).ravel()
    wt = (span[:, None] * tweights[None, :]).ravel()
    e = np.column_stack([np.cos(theta), np.sin(theta)])

    # each ray from c leaves the triangle where the first edge constraint binds
    ne = e @ normals.T  # (q, 3)
    with np.errstate(divide="ignore", invalid="ignore"):
        bound = -offsets[None, :] / ne
    lo = np.max(np.where(ne > 0.0, bound, 0.0), axis=1, initial=0.0)
    hi = np.min(np.where(ne < 0.0, bound, np.inf), axis=1, initial=np.inf)
    blocked = np.any((ne == 0.0) & (offsets[None, :] < 0.0), axis=1)
    hi = np.where(blocked, -np.inf, hi)

    pts_out, w_out = [], []
    for r0, r1 in zip(edges_r[:-1], edges_r[1:]):
        a = np.maximum(lo, r0)
        b = np.minimum(hi, r1)
        ok = b > a
        if not np.any(ok):
            continue
        a, b, th_w, ev = a[ok], b[ok], wt[ok], e[ok]
        if r0 == 0.0:
            # grade towards the centre, r = a + (b - a) t^3, for log-type singularities
            t = rnodes[None, :]
            r = a[:, None] + (b - a)[:, None] * t**3
            w = th_w[:, None] * (b - a)[:, None] * (3.0 * t**2 * rweights[None, :]) * r
        else:
            r = a[:, None] + (b - a)[:, None] * rnodes[None, :]
            w = th_w[:, None] * (b - a)[:, None] * rweights[None, :] * r
        pts_out.append((c + r[..., None] * ev[:, None, :]).reshape(-1, 2))
        w_out.append(w.ravel())
    if not pts_out:
        return np.zeros((0, 2)), np.zeros(0)
    return np.concatenate(pts_out), np.concatenate(w_out)
