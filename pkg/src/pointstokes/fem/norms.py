"""L2 distances between discrete and analytic fields."""

from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np

from ..mesh import TriMesh
from .assembly import Cut, flat_quadrature
from .spaces import Field

# a rectangle (x_min, x_max, y_min, y_max) or a point mask
Region = Sequence[float] | Callable[[np.ndarray], np.ndarray]


def _sampler(obj, mesh: TriMesh, component: str):
    """Return ``f(tri, bary, points)`` evaluating ``obj`` at quadrature points."""
    idx = 0 if component == "velocity" else 1
    if isinstance(obj, Field):
        if obj.mesh is mesh:
            return lambda tri, lam, pts: obj.evaluate_at(tri, lam)[idx]
        return lambda tri, lam, pts: obj.evaluate(pts)[idx]
    if hasattr(obj, "evaluate"):
        return lambda tri, lam, pts: obj.evaluate(pts)[idx]
    if callable(obj):
        return lambda tri, lam, pts: obj(pts)
    raise TypeError(f"cannot evaluate an object of type {type(obj).__name__}")


def _region_mask(region, pts):
    if region is None:
        return None
    if callable(region):
        return np.asarray(region(pts), dtype=bool)
    x0, x1, y0, y1 = (float(v) for v in region)
    return (pts[:, 0] >= x0) & (pts[:, 0] <= x1) & (pts[:, 1] >= y0) & (pts[:, 1] <= y1)


def l2_error(
    field_a,
    field_b,
    region: Region | None = None,
    cuts: Iterable[Cut] = (),
    component: str = "velocity",
    mesh: TriMesh | None = None,
) -> float:
    """L2 norm of ``field_a - field_b`` over ``region`` (default: the whole square).

    Parameters
    ----------
    field_a, field_b
        A :class:`Field`, any object with ``evaluate(points) -> (u, p)``
        (for instance a subtraction solution), or a callable returning the
        requested component at an ``(m, 2)`` array of points.
    region
        ``(x_min, x_max, y_min, y_max)`` or a boolean mask function of the
        points.  Quadrature is per element of the integration mesh; a region
        that does not align with element edges is integrated by masking
        quadrature points.
    cuts
        ``(center, radii)`` pairs about which the integrand is singular or
        kinked; elements touching them get polar quadrature.
    component
        ``"velocity"`` or ``"pressure"``.
    mesh
        Integration mesh; defaults to the mesh of ``field_b``.
    """
    if component not in ("velocity", "pressure"):
        raise ValueError(f"component must be 'velocity' or 'pressure', got {component!r}")
    if mesh is None:
        mesh = getattr(field_b, "mesh", None) or getattr(field_a, "mesh", None)
    if mesh is None:
        raise ValueError("no integration mesh: pass mesh= or a discrete field")
    if region is not None and not callable(region):
        x0, x1, y0, y1 = (float(v) for v in region)
        if not (x1 > x0 and y1 > y0) or x1 < 0 or y1 < 0 or x0 > 1 or y0 > 1:
            raise ValueError(f"empty integration region {tuple(region)}")

    fa = _sampler(field_a, mesh, component)
    fb = _sampler(field_b, mesh, component)
    cuts = list(cuts)
    total = 0.0
    covered = 0.0
    for tri, lam, pts, w in flat_quadrature(mesh, None, cuts):
        mask = _region_mask(region, pts)
        if mask is not None:
            if not mask.any():
                continue
            tri, lam, pts, w = tri[mask], lam[mask], pts[mask], w[mask]
        diff = np.asarray(fa(tri, lam, pts), dtype=float) - np.asarray(
            fb(tri, lam, pts), dtype=float
        )
        sq = diff**2 if diff.ndim == 1 else np.sum(diff**2, axis=1)
        total += float(np.sum(w * sq))
        covered += float(np.sum(w))
    if covered == 0.0:
        raise ValueError("the integration region contains no quadrature points")
    return float(np.sqrt(total))
