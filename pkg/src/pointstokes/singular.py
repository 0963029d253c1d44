"""Closed-form pieces of the point-force Stokes problem.

Stokeslets in two and three dimensions, the radial cutoff, the correction
fields left behind when the cutoff Stokeslet is substituted into the
Stokes operator, the direct point-force load and the reduction of a force
density along a curve to a finite set of point forces.

All field evaluators accept a single point ``(d,)`` or an array ``(m, d)``
and return results of matching leading shape.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, optimize

from .fem.spaces import MixedSpace
from .mesh import TriMesh


class SingularityError(ValueError):
    """Evaluation requested at the location of a point force."""


@dataclass(frozen=True, eq=False)
class SingularSource:
    """A point force ``F`` applied at ``x0`` in a fluid of viscosity ``mu``."""

    x0: np.ndarray
    F: np.ndarray
    mu: float = 1.0

    def __post_init__(self):
        x0 = np.asarray(self.x0, dtype=float).reshape(-1)
        F = np.asarray(self.F, dtype=float).reshape(-1)
        if x0.shape not in ((2,), (3,)) or F.shape != x0.shape:
            raise ValueError("x0 and F must both be 2- or 3-vectors")
        if not np.all(np.isfinite(F)):
            raise ValueError("force must be finite")
        if not self.mu > 0:
            raise ValueError(f"viscosity must be positive, got {self.mu!r}")
        if np.any(x0 <= 0.0) or np.any(x0 >= 1.0):
            raise ValueError(f"x0 = {x0.tolist()} is not strictly inside the unit domain")
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "F", F)
        object.__setattr__(self, "mu", float(self.mu))

    @property
    def dim(self) -> int:
        return len(self.x0)

    @property
    def boundary_distance(self) -> float:
        return float(min(self.x0.min(), (1.0 - self.x0).min()))

    def scaled(self, alpha: float) -> "SingularSource":
        return SingularSource(self.x0, alpha * self.F, self.mu)


@dataclass(frozen=True)
class CutoffSpec:
    """Radii of the cutoff ring; ``kind`` is ``"cubic"`` (C1) or ``"quintic"`` (C2)."""

    a: float = 0.1
    b: float = 0.2
    kind: str = "cubic"

    def __post_init__(self):
        if not 0.0 < self.a < self.b:
            raise ValueError(f"cutoff radii must satisfy 0 < a < b, got a={self.a}, b={self.b}")
        if self.kind not in ("cubic", "quintic"):
            raise ValueError(f"unknown cutoff kind {self.kind!r}")

    def check_source(self, src: SingularSource) -> None:
        """Raise unless the ring fits inside the domain around ``src``."""
        d = src.boundary_distance
        if not self.b < d:
            raise ValueError(
                f"outer cutoff radius b={self.b} must be smaller than the distance "
                f"{d} from x0 to the boundary, otherwise the cutoff Stokeslet "
                "does not vanish on the boundary"
            )


def _float_array(x):
    # keep extended precision when given; the FD oracles rely on it
    arr = np.asarray(x)
    if not np.issubdtype(arr.dtype, np.floating):
        arr = arr.astype(float)
    return arr


def _as_points(x, dim):
    arr = _float_array(x)
    single = arr.ndim == 1
    pts = arr.reshape(-1, dim)
    return pts, single


def _unwrap(single, *values):
    if single:
        out = tuple(v[0] for v in values)
    else:
        out = values
    return out if len(out) > 1 else out[0]


# -- Stokeslet ----------------------------------------------------------------


def _stokeslet(xb, F, mu):
    dim = xb.shape[1]
    r2 = np.einsum("md,md->m", xb, xb)
    if np.any(r2 == 0.0):
        raise SingularityError("the Stokeslet is singular at the source point")
    xF = xb @ F
    if dim == 2:
        u = (-0.5 * np.log(r2))[:, None] * F + xb * (xF / r2)[:, None]
        u /= 4.0 * np.pi * mu
        p = xF / (2.0 * np.pi * r2)
    else:
        r = np.sqrt(r2)
        u = F / r[:, None] + xb * (xF / (r2 * r))[:, None]
        u /= 8.0 * np.pi * mu
        p = xF / (4.0 * np.pi * r2 * r)
    return u, p


def stokeslet(x, src: SingularSource):
    """Free-space velocity and pressure of the point force ``src``."""
    pts, single = _as_points(x, src.dim)
    u, p = _stokeslet(pts - src.x0, src.F, src.mu)
    return _unwrap(single, u, p)


# -- radial cutoff ------------------------------------------------------------


def cutoff(r, spec: CutoffSpec):
    """Cutoff value: 1 for ``r <= a``, 0 for ``r >= b``, smooth in between."""
    r = _float_array(r)
    a, b = spec.a, spec.b
    mid = (r > a) & (r < b)
    rm = np.where(mid, r, a)
    if spec.kind == "cubic":
        poly = (2 * rm**3 - 3 * (a + b) * rm**2 + 6 * a * b * rm + b**2 * (b - 3 * a)) / (
            b - a
        ) ** 3
    else:
        t = (rm - a) / (b - a)
        poly = 1.0 - t**3 * (10.0 - 15.0 * t + 6.0 * t**2)
    return np.where(r <= a, 1.0, np.where(mid, poly, 0.0))


def cutoff_derivative(r, spec: CutoffSpec, order: int = 1):
    """First or second radial derivative of :func:`cutoff`."""
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    r = _float_array(r)
    a, b = spec.a, spec.b
    mid = (r > a) & (r < b)
    rm = np.where(mid, r, a)
    if spec.kind == "cubic":
        if order == 1:
            val = 6.0 * (rm - a) * (rm - b) / (b - a) ** 3
        else:
            val = 6.0 * (2.0 * rm - a - b) / (b - a) ** 3
    else:
        t = (rm - a) / (b - a)
        if order == 1:
            val = -30.0 * t**2 * (1.0 - t) ** 2 / (b - a)
        else:
            val = -60.0 * t * (1.0 - t) * (1.0 - 2.0 * t) / (b - a) ** 2
    return np.where(mid, val, 0.0)


def cutoff_stokeslet(x, src: SingularSource, spec: CutoffSpec):
    """The localised singular part ``(chi u_delta, chi p_delta)``.

    Exactly zero beyond the outer radius; singular only at ``x0``.
    """
    pts, single = _as_points(x, src.dim)
    xb = pts - src.x0
    r = np.linalg.norm(xb, axis=1)
    u = np.zeros_like(pts)
    p = np.zeros(len(pts), dtype=pts.dtype)
    near = r < spec.b
    if np.any(near):
        us, ps = _stokeslet(xb[near], src.F, src.mu)
        chi = cutoff(r[near], spec)
        u[near] = chi[:, None] * us
        p[near] = chi * ps
    return _unwrap(single, u, p)


# -- correction fields ----------------------------------------------------------


def _ring(pts, src, spec):
    xb = pts - src.x0
    r = np.linalg.norm(xb, axis=1)
    return xb, r, (r > spec.a) & (r < spec.b)


def _closed_form_g(xb, r, src, spec):
    a, b = spec.a, spec.b
    F = src.F
    outer = (xb * (xb @ F)[:, None]) / (r**2)[:, None]
    if src.dim == 2:
        lnr = np.log(r)
        iso = (3 * r**2 - 2 * (a + b) * r + a * b) * lnr + 2 * r**2 - 2 * (a + b) * r + 2 * a * b
        aniso = a * b - r**2
        pref = 3.0 / (2.0 * np.pi * (b - a) ** 3 * r)
    else:
        iso = (a + b) * r - 2 * r**2
        aniso = 2 * a * b - (a + b) * r
        pref = 3.0 / (4.0 * np.pi * (b - a) ** 3 * r**2)
    return pref[:, None] * (iso[:, None] * F + aniso[:, None] * outer)


def _closed_form_h(xb, r, src, spec):
    a, b = spec.a, spec.b
    quad = r**2 - (a + b) * r + a * b
    xF = xb @ src.F
    if src.dim == 2:
        return 3.0 * (1.0 - np.log(r)) * quad * xF / (2.0 * np.pi * src.mu * (b - a) ** 3 * r)
    return 3.0 * quad * xF / (2.0 * np.pi * src.mu * (b - a) ** 3 * r**2)


def _radial_g(xb, r, src, spec):
    # -mu (lap chi) u - 2 mu (grad chi . grad) u + p grad chi, with div u = 0
    u, p = _stokeslet(xb, src.F, src.mu)
    d1 = cutoff_derivative(r, spec, 1)
    d2 = cutoff_derivative(r, spec, 2)
    lap = d2 + (src.dim - 1) * d1 / r
    if src.dim == 2:
        radial_u = -np.broadcast_to(src.F / (4.0 * np.pi * src.mu), u.shape)
    else:
        radial_u = -u  # the 3D Stokeslet is homogeneous of degree -1
    return (
        -src.mu * (lap[:, None] * u + 2.0 * (d1 / r)[:, None] * radial_u)
        + (p * d1 / r)[:, None] * xb
    )


def _radial_h(xb, r, src, spec):
    u, _ = _stokeslet(xb, src.F, src.mu)
    return cutoff_derivative(r, spec, 1) / r * np.einsum("md,md->m", xb, u)


def correction_g(x, src: SingularSource, spec: CutoffSpec, closed_form: bool = True):
    """Momentum defect ``-mu lap(chi u_delta) + grad(chi p_delta) - delta F``.

    Zero outside the open ring ``a < |x - x0| < b``.  The cubic cutoff uses
    the explicit closed form; ``closed_form=False`` (and the quintic cutoff)
    goes through the general radial expression.
    """
    pts, single = _as_points(x, src.dim)
    xb, r, ring = _ring(pts, src, spec)
    out = np.zeros_like(pts)
    if np.any(ring):
        fn = _closed_form_g if closed_form and spec.kind == "cubic" else _radial_g
        out[ring] = fn(xb[ring], r[ring], src, spec)
    return _unwrap(single, out)


def correction_h(x, src: SingularSource, spec: CutoffSpec, closed_form: bool = True):
    """Divergence ``div(chi u_delta)``, zero outside the open ring."""
    pts, single = _as_points(x, src.dim)
    xb, r, ring = _ring(pts, src, spec)
    out = np.zeros(len(pts), dtype=pts.dtype)
    if np.any(ring):
        fn = _closed_form_h if closed_form and spec.kind == "cubic" else _radial_h
        out[ring] = fn(xb[ring], r[ring], src, spec)
    return _unwrap(single, out)


# -- finite-difference checks -------------------------------------------------


def fd_stokes_residual(u_fun, p_fun, x, mu: float, step: float):
    """Central-difference ``-mu lap u + grad p`` and ``div u`` at one point.

    The stencil is evaluated in extended precision: in double precision the
    second differences lose about ``eps / step**2`` and swamp the truncation
    error long before ``step = 1e-5``.
    """
    ext = np.longdouble
    x = np.asarray(x, dtype=ext)
    dim = len(x)
    h = ext(step)
    offsets = np.vstack([np.zeros(dim, dtype=ext), h * np.eye(dim, dtype=ext), -h * np.eye(dim, dtype=ext)])
    pts = x + offsets
    u = np.asarray(u_fun(pts)).reshape(len(pts), dim)
    p = np.asarray(p_fun(pts)).reshape(len(pts))
    up, um = u[1 : dim + 1], u[dim + 1 :]
    lap = (up + um - 2 * u[0]).sum(axis=0) / h**2
    grad_p = (p[1 : dim + 1] - p[dim + 1 :]) / (2 * h)
    div = np.trace(up - um) / (2 * h)
    return (-ext(mu) * lap + grad_p).astype(float), float(div)


def stokeslet_residual_check(x, src: SingularSource, fd_step: float = 1e-4):
    """FD residual of the Stokeslet in the homogeneous Stokes equations at ``x``."""
    x = np.asarray(x, dtype=float)
    if np.linalg.norm(x - src.x0) <= 3.0 * fd_step:
        raise ValueError("finite-difference stencil too close to the source point")
    return fd_stokes_residual(
        lambda p: stokeslet(p, src)[0], lambda p: stokeslet(p, src)[1], x, src.mu, fd_step
    )


def correction_residual_check(x, src: SingularSource, spec: CutoffSpec, fd_step: float = 1e-5):
    """FD value of the defect of ``chi * Stokeslet`` minus ``(g, h)`` at ``x``."""
    x = np.asarray(x, dtype=np.longdouble)
    r = float(np.linalg.norm(x - src.x0))
    if not (spec.a + 2.0 * fd_step < r < spec.b - 2.0 * fd_step):
        raise ValueError("finite-difference stencil must stay inside the open ring")
    mom, div = fd_stokes_residual(
        lambda p: cutoff_stokeslet(p, src, spec)[0],
        lambda p: cutoff_stokeslet(p, src, spec)[1],
        x,
        src.mu,
        fd_step,
    )
    g = correction_g(x, src, spec).astype(float)
    h = float(correction_h(x, src, spec))
    return mom - g, div - h


# -- point-force load -----------------------------------------------------------


def point_force_load(mesh: TriMesh, space: MixedSpace, src: SingularSource) -> np.ndarray:
    """Velocity load ``F_c phi_i(x0)`` of a Dirac force, per component."""
    if src.dim != 2:
        raise ValueError("point loads are assembled on 2D meshes only")
    tri, lam = mesh.locate_point(src.x0)
    vals, _ = space.velocity_basis(lam[None, :])
    dofs = space.velocity_cell_dofs[tri]
    out = np.zeros(2 * space.n_velocity)
    out[dofs] += src.F[0] * vals[0]
    out[dofs + space.n_velocity] += src.F[1] * vals[0]
    return out


# -- lineic forces --------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LineicForce:
    """A force density along a curve ``s -> curve(s)``, ``s`` in ``[0, 1]``.

    ``density(s)`` is the force per unit arc length.  ``tangent`` is
    ``d curve / ds``; when omitted it is approximated by central differences.
    ``breaks`` lists parameter values where the curve is not smooth.
    """

    curve: Callable[[float], np.ndarray]
    density: Callable[[float], np.ndarray]
    N: int
    tangent: Callable[[float], np.ndarray] | None = None
    breaks: tuple[float, ...] = ()
    mu: float = 1.0
    _length: float | None = field(default=None, repr=False)

    @classmethod
    def polyline(cls, vertices, density, N: int, mu: float = 1.0) -> "LineicForce":
        """Polyline parametrised proportionally to arc length."""
        v = np.asarray(vertices, dtype=float)
        if v.ndim != 2 or len(v) < 2:
            raise ValueError("a polyline needs at least two vertices")
        seg = np.linalg.norm(np.diff(v, axis=0), axis=1)
        total = seg.sum()
        if total <= 0.0:
            raise ValueError("degenerate (zero-length) curve")
        knots = np.concatenate([[0.0], np.cumsum(seg) / total])
        dens = _constant_density(density)

        def curve(s):
            k = int(np.clip(np.searchsorted(knots, s, side="right") - 1, 0, len(seg) - 1))
            t = (s - knots[k]) / (knots[k + 1] - knots[k]) if seg[k] > 0 else 0.0
            return v[k] + t * (v[k + 1] - v[k])

        def tangent(s):
            k = int(np.clip(np.searchsorted(knots, s, side="right") - 1, 0, len(seg) - 1))
            return (v[k + 1] - v[k]) * total / max(seg[k], 1e-300)

        return cls(curve, dens, N, tangent, tuple(knots[1:-1]), mu, float(total))

    def speed(self, s: float) -> float:
        if self.tangent is not None:
            return float(np.linalg.norm(self.tangent(s)))
        # fourth-order differences, one-sided near the ends of [0, 1]
        e = 1e-3
        if 2 * e <= s <= 1.0 - 2 * e:
            offsets, coef = np.arange(-2, 3), np.array([1.0, -8.0, 0.0, 8.0, -1.0])
        else:
            sign = 1.0 if s < 2 * e else -1.0
            offsets = sign * np.arange(5)
            coef = sign * np.array([-25.0, 48.0, -36.0, 16.0, -3.0])
        vals = np.array([self.curve(s + k * e) for k in offsets])
        return float(np.linalg.norm(coef @ vals / (12 * e)))

    def arc_length(self, s: float = 1.0) -> float:
        """Arc length from the start of the curve to parameter ``s``."""
        if s >= 1.0 and self._length is not None:
            return self._length
        pts = [0.0] + [t for t in self.breaks if 0.0 < t < s] + [s]
        tol = 1e-13 if self.tangent is not None else 1e-12
        return float(
            sum(
                integrate.quad(self.speed, lo, hi, epsabs=tol, epsrel=tol, limit=200)[0]
                for lo, hi in zip(pts[:-1], pts[1:])
            )
        )

    @property
    def length(self) -> float:
        return self.arc_length(1.0)


def _constant_density(density):
    if callable(density):
        return density
    value = np.asarray(density, dtype=float).reshape(2)
    return lambda s: value


def discretize_lineic(lf: LineicForce) -> list[SingularSource]:
    """Point forces at the arc-length midpoints of ``N`` equal-length pieces.

    Each carries the weight ``length / N`` times the density there.
    """
    if int(lf.N) != lf.N or lf.N < 1:
        raise ValueError(f"N must be a positive integer, got {lf.N!r}")
    total = lf.length
    if not total > 0.0:
        raise ValueError("degenerate (zero-length) curve")
    n = int(lf.N)
    weight = total / n
    sources = []
    for k in range(n):
        target = (k + 0.5) * weight
        s = optimize.brentq(lambda t: lf.arc_length(t) - target, 0.0, 1.0, xtol=1e-14)
        x = np.asarray(lf.curve(s), dtype=float)
        F = weight * np.asarray(lf.density(s), dtype=float)
        sources.append(SingularSource(x, F, lf.mu))
    return sources
