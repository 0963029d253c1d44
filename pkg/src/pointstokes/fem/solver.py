"""Solution of the gauged Stokes saddle-point system.

The zero-mean pressure gauge enters as one Lagrange multiplier ``l``.  It is
eliminated exactly before factorisation: constant pressures span the null
space of the ungauged operator, so ``l`` follows from the compatibility of
the pressure equations, and the remaining consistent system is solved with
one pressure dof pinned.  The pressure is then shifted to zero mean.  This
keeps the dense gauge row out of the sparse factorisation.
"""

from __future__ import annotations

import logging

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import StokesSystem
from .spaces import Field

log = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-10
# above this many reduced unknowns the factorisation no longer fits in a few GB
DIRECT_LIMIT = 250_000


class SolverError(RuntimeError):
    """The saddle-point system could not be solved to tolerance."""


def nested_dissection_order(
    coords: np.ndarray, stride: int = 1, leaf: int = 8, priority=None
) -> np.ndarray:
    """Fill-reducing ordering for unknowns on a structured lattice.

    ``coords`` are integer lattice positions; separators are lattice lines
    at multiples of ``stride`` (mesh lines), across which no element couples.
    Within a block, unknowns with lower ``priority`` come first.
    """
    coords = np.asarray(coords)
    if priority is None:
        priority = np.zeros(len(coords), dtype=np.int64)
    out = []

    def block_order(idx):
        return idx[np.lexsort((coords[idx, 0], coords[idx, 1], priority[idx]))]

    def split(idx, x0, x1, y0, y1):
        if len(idx) == 0:
            return
        if max(x1 - x0, y1 - y0) <= leaf * stride:
            out.append(block_order(idx))
            return
        axis = 0 if x1 - x0 >= y1 - y0 else 1
        lo, hi = (x0, x1) if axis == 0 else (y0, y1)
        mid = lo + ((hi - lo) // (2 * stride)) * stride
        c = coords[idx, axis]
        left, right, sep = idx[c < mid], idx[c > mid], idx[c == mid]
        if axis == 0:
            split(left, x0, mid - 1, y0, y1)
            split(right, mid + 1, x1, y0, y1)
        else:
            split(left, x0, x1, y0, mid - 1)
            split(right, x0, x1, mid + 1, y1)
        out.append(block_order(sep))

    lo = coords.min(axis=0)
    hi = coords.max(axis=0)
    split(np.arange(len(coords)), lo[0], hi[0], lo[1], hi[1])
    return np.concatenate(out)


def _condition_hint(lu) -> str:
    d = np.abs(lu.U.diagonal())
    if d.min() == 0.0:
        return "zero pivot encountered"
    return f"pivot ratio max|U_ii|/min|U_ii| = {d.max() / d.min():.3e}"


def _solve_direct(Avv, Bv, P, rhs_v, rhs_p, coords, stride):
    nvv = Avv.shape[0]
    npr = Bv.shape[0]
    # pin pressure dof 0: its row is redundant for a compatible right-hand side
    keep = np.ones(npr, dtype=bool)
    keep[0] = False
    pin = sp.diags(keep.astype(float))
    Bp = (pin @ Bv).tocsr()
    if P is None:
        Pp = sp.diags(np.where(keep, 0.0, -1.0))
    else:
        Pp = (pin @ P @ pin).tocsr() + sp.diags(np.where(keep, 0.0, -1.0))
    K = sp.bmat([[Avv, Bp.T], [Bp, Pp]], format="csr")
    rhs = np.concatenate([rhs_v, np.where(keep, rhs_p, 0.0)])

    # velocities before pressures in every block so that diagonal pivots exist
    priority = np.r_[np.zeros(nvv, dtype=np.int64), np.ones(npr, dtype=np.int64)]
    perm = nested_dissection_order(coords, stride, priority=priority)
    Kp = K[perm][:, perm].tocsc()
    try:
        lu = spla.splu(
            Kp,
            permc_spec="NATURAL",
            options={
                "SymmetricMode": True,
                "DiagPivotThresh": 0.0,
            },
        )
    except RuntimeError as exc:
        raise SolverError(
            f"sparse factorisation failed ({exc}); the system is singular beyond "
            "the pressure gauge"
        ) from exc
    bp = rhs[perm]
    xp = lu.solve(bp)
    for _ in range(3):  # iterative refinement
        r = bp - Kp @ xp
        if np.linalg.norm(r) <= 1e-14 * max(np.linalg.norm(bp), 1e-300):
            break
        xp += lu.solve(r)
    x = np.empty_like(xp)
    x[perm] = xp
    return x[:nvv], x[nvv:], lambda: _condition_hint(lu)


def _solve_minres(Avv, Bv, P, rhs_v, rhs_p, mass_p, mu, tol):
    import pyamg

    nvv = Avv.shape[0]
    half = nvv // 2
    # velocity block is two identical scalar Laplacians
    ml = pyamg.smoothed_aggregation_solver(Avv[:half, :half].tocsr(), symmetry="symmetric")
    amg = ml.aspreconditioner(cycle="V")
    # P is negative semidefinite, so |S| is approximated by mass/mu - diag(P)
    schur = mass_p / mu
    if P is not None:
        schur = schur - P.diagonal()
    Kop = sp.bmat([[Avv, Bv.T], [Bv, P]], format="csr")

    def prec(v):
        out = np.empty_like(v)
        out[:half] = amg @ v[:half]
        out[half:nvv] = amg @ v[half:nvv]
        out[nvv:] = v[nvv:] / schur
        return out

    M = spla.LinearOperator(Kop.shape, matvec=prec, dtype=float)
    rhs = np.concatenate([rhs_v, rhs_p])
    bnorm = np.linalg.norm(rhs)
    if bnorm == 0.0:
        return rhs_v * 0.0, rhs_p * 0.0, lambda: "zero right-hand side"
    # refinement with residuals in extended precision; MINRES solves corrections
    Kext = Kop.astype(np.longdouble)
    x = np.zeros(len(rhs), dtype=np.longdouble)
    info = 0
    for sweep in range(12):
        r = (rhs.astype(np.longdouble) - Kext @ x).astype(float)
        rel = np.linalg.norm(r) / bnorm
        log.debug("minres sweep %d: relative residual %.3e", sweep, rel)
        if rel <= tol:
            break
        d, info = spla.minres(Kop, r, M=M, rtol=1e-9, maxiter=3000)
        x += d
    x = x.astype(float)
    x[nvv:] -= x[nvv:].mean()
    return x[:nvv], x[nvv:], lambda: f"MINRES info={info}, last sweep residual {rel:.3e}"


def solve_saddle_point(
    system: StokesSystem,
    boundary_values=None,
    condense: bool = True,
    method: str = "auto",
) -> Field:
    """Solve with Dirichlet velocity data on ``space.boundary_dofs``.

    ``boundary_values`` is ``(n_boundary_dofs, 2)``; ``None`` means
    homogeneous data.  For MINI the bubble unknowns are eliminated element
    by element (their viscous block is diagonal) and recovered afterwards.
    ``method`` is ``"direct"``, ``"minres"`` or ``"auto"`` (direct unless the
    reduced system exceeds :data:`DIRECT_LIMIT` unknowns).
    """
    space = system.space
    mesh = space.mesh
    nv = space.n_velocity
    npr = space.n_pressure
    bdofs = space.boundary_dofs
    if boundary_values is None:
        bvals = np.zeros((len(bdofs), 2))
    else:
        bvals = np.asarray(boundary_values, dtype=float)
        if bvals.shape != (len(bdofs), 2):
            raise ValueError(
                f"boundary_values must have shape ({len(bdofs)}, 2), got {bvals.shape}"
            )

    fixed = np.concatenate([bdofs, bdofs + nv])
    u = np.zeros(2 * nv)
    u[fixed] = np.concatenate([bvals[:, 0], bvals[:, 1]])
    free = np.ones(2 * nv, dtype=bool)
    free[fixed] = False

    A, B = system.A, system.B
    rhs_u = system.g_rhs - A @ u
    rhs_p = -system.h_rhs - B @ u

    condensed = condense and space.bubble_dofs is not None
    if condensed:
        bub = np.concatenate([space.bubble_dofs, space.bubble_dofs + nv])
        D = A.diagonal()[bub]
        Bb = B[:, bub]
        Bb_scaled = (Bb @ sp.diags(1.0 / D)).tocsr()
        P = -(Bb_scaled @ Bb.T).tocsr()
        rhs_p_red = rhs_p - Bb_scaled @ rhs_u[bub]
        main_mask = free.copy()
        main_mask[bub] = False
    else:
        P = None
        rhs_p_red = rhs_p
        main_mask = free
    main = np.flatnonzero(main_mask)

    # gauge multiplier from compatibility: constants are B^T- and P-null
    lam = rhs_p_red.sum() / system.gauge.sum()
    rhs_p_red = rhs_p_red - lam * system.gauge

    Avv = A[main][:, main].tocsr()
    Bv = B[:, main].tocsr()
    n_red = len(main) + npr
    if method == "auto":
        method = "direct" if n_red <= DIRECT_LIMIT else "minres"
    log.debug("solving reduced saddle-point system: %d unknowns (%s)", n_red, method)

    if method == "direct":
        if space.is_mini and condensed:
            stride = 1
        elif space.is_mini:
            stride = 3
        else:
            stride = 2
        lattice = np.rint(space.dof_coordinates * mesh.n * stride).astype(np.int64)
        coords = np.vstack([lattice[main % nv], lattice[:npr]])
        uv, p, hint = _solve_direct(
            Avv, Bv, P, rhs_u[main], rhs_p_red, coords, stride
        )
    elif method == "minres":
        if P is None:
            P = sp.csr_matrix((npr, npr))
        uv, p, hint = _solve_minres(
            Avv, Bv, P, rhs_u[main], rhs_p_red, system.gauge, system.mu, RESIDUAL_TOL * 1e-2
        )
    else:
        raise ValueError(f"unknown method {method!r}")

    p = p - (system.gauge @ p) / system.gauge.sum()
    u[main] = uv
    if condensed:
        u[bub] = (rhs_u[bub] - Bb.T @ p) / D

    # residual of the full gauged system on the free rows, in extended
    # precision so that cancellation in the matvecs does not pollute it
    ext = np.longdouble
    Ae, Be, ge = A.astype(ext), B.astype(ext), system.gauge.astype(ext)
    uf = (u * free).astype(ext)
    pe = p.astype(ext)
    res = np.concatenate(
        [
            (rhs_u.astype(ext) - Ae @ uf - Be.T @ pe)[free],
            rhs_p.astype(ext) - Be @ uf - ge * ext(lam),
            [ge @ pe],
        ]
    ).astype(float)
    scale = np.linalg.norm(np.concatenate([rhs_u[free], rhs_p]))
    rel = np.linalg.norm(res) / scale if scale > 0.0 else np.linalg.norm(res)
    if not np.isfinite(rel) or rel > RESIDUAL_TOL:
        raise SolverError(
            f"relative residual {rel:.3e} exceeds {RESIDUAL_TOL:.0e}; {hint()}"
        )
    return Field(space, u.reshape(2, nv), p)
