"""Convergence studies: reference solutions, error tables and fitted orders."""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .fem.assembly import assemble_stokes
from .fem.norms import l2_error
from .fem.solver import SolverError
from .fem.spaces import Field, MixedSpace
from .mesh import build_uniform_mesh
from .singular import CutoffSpec, LineicForce, SingularityError, SingularSource, discretize_lineic
from .solvers import SubtractionSolution, solve_direct, solve_multi_subtraction, solve_subtraction

log = logging.getLogger(__name__)

DEFAULT_LEVELS = (3, 4, 5, 6, 7)
DEFAULT_REF_LEVEL = 9


def reference_solution(
    level_ref: int,
    src: SingularSource,
    spec: CutoffSpec = CutoffSpec(),
    pair="MINI",
) -> SubtractionSolution:
    """Subtraction solve on ``n = 2**level_ref``, used as the surrogate exact solution."""
    if int(level_ref) != level_ref or level_ref < 1:
        raise ValueError(f"reference level must be a positive integer, got {level_ref!r}")
    mesh = build_uniform_mesh(2 ** int(level_ref))
    space = MixedSpace.create(mesh, pair)
    try:
        return solve_subtraction(mesh, space, src, spec)
    except (MemoryError, SolverError) as exc:
        raise SolverError(
            f"reference solve at level {level_ref} failed ({exc}); try a smaller reference level"
        ) from exc


def estimate_order(rows: Sequence[tuple[float, float]]) -> float:
    """Least-squares slope of ``log(error)`` against ``log(h)``."""
    data = np.asarray(rows, dtype=float)
    if data.ndim != 2 or len(data) < 2:
        raise ValueError("need at least two (h, error) rows to estimate an order")
    h, err = data[:, 0], data[:, 1]
    if np.any(h <= 0) or np.any(err <= 0):
        raise ValueError("mesh sizes and errors must be positive")
    if len(np.unique(h)) != len(h):
        raise ValueError("mesh sizes must be distinct")
    slope, _ = np.polyfit(np.log(h), np.log(err), 1)
    return float(slope)


def _fmt_float(v) -> str:
    return repr(float(v))


@dataclass(frozen=True)
class ConvergenceReport:
    """Error table of the direct and subtraction methods with fitted orders."""

    rows: tuple[tuple[float, float, float], ...]  # (h, error_direct, error_subtraction)
    eoc_direct: float
    eoc_subtraction: float
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        hs = [r[0] for r in self.rows]
        if hs != sorted(hs, reverse=True):
            raise ValueError("rows must be sorted by decreasing h")
        if any(e <= 0 for r in self.rows for e in r[1:]):
            raise ValueError("errors must be positive")
        if any(not h > 0 or np.log2(h) != round(np.log2(h)) for h in hs):
            raise ValueError("mesh sizes must be powers of 1/2")

    def to_csv(self) -> str:
        lines = [f"# {k}={v}" for k, v in self.metadata.items()]
        lines.append("h,error_direct,error_subtraction")
        for h, ed, es in self.rows:
            lines.append(f"{_fmt_float(h)},{ed:.5e},{es:.5e}")
        lines.append(f"# eoc_direct={_fmt_float(self.eoc_direct)}")
        lines.append(f"# eoc_subtraction={_fmt_float(self.eoc_subtraction)}")
        return "\n".join(lines) + "\n"


def _study_metadata(src, spec, pair, levels, level_ref) -> dict:
    return {
        "element_pair": MixedSpace.create(build_uniform_mesh(1), pair).pair.value,
        "mu": _fmt_float(src.mu),
        "force": ",".join(_fmt_float(v) for v in src.F),
        "x0": ",".join(_fmt_float(v) for v in src.x0),
        "a": _fmt_float(spec.a),
        "b": _fmt_float(spec.b),
        "cutoff": spec.kind,
        "levels": ",".join(str(v) for v in levels),
        "reference_level": str(level_ref),
    }


def run_convergence_study(
    levels: Sequence[int] = DEFAULT_LEVELS,
    level_ref: int = DEFAULT_REF_LEVEL,
    src: SingularSource | None = None,
    spec: CutoffSpec = CutoffSpec(),
    pair="MINI",
    reference: SubtractionSolution | None = None,
) -> ConvergenceReport:
    """L2 velocity errors of both methods against one fine subtraction solve."""
    if src is None:
        src = SingularSource((0.5, 0.5), (1.0, 0.0), 1.0)
    levels = sorted({int(v) for v in levels})
    if len(levels) < 2:
        raise ValueError("need at least two levels to estimate an order")
    if min(levels) < 1:
        raise ValueError("levels must be positive")
    if level_ref < max(levels) + 2:
        raise ValueError(
            f"reference level {level_ref} must be at least 2 above the finest level {max(levels)}"
        )
    spec.check_source(src)
    if reference is None:
        reference = reference_solution(level_ref, src, spec, pair)
    cuts = [(src.x0, (spec.a, spec.b))]
    rows = []
    for level in levels:
        mesh = build_uniform_mesh(2**level)
        space = MixedSpace.create(mesh, pair)
        system = assemble_stokes(mesh, space, src.mu)
        direct = solve_direct(mesh, space, [src], system=system)
        sub = solve_subtraction(mesh, space, src, spec, system=system)
        ed = l2_error(reference, direct, cuts=cuts)
        es = l2_error(reference, sub, cuts=cuts)
        log.info("level %d: direct %.5e, subtraction %.5e", level, ed, es)
        rows.append((mesh.h, ed, es))
    rows.sort(key=lambda r: -r[0])
    return ConvergenceReport(
        tuple(rows),
        estimate_order([(h, ed) for h, ed, _ in rows]),
        estimate_order([(h, es) for h, _, es in rows]),
        _study_metadata(src, spec, pair, levels, level_ref),
    )


def _same_singular_part(a: SubtractionSolution, b: SubtractionSolution) -> bool:
    if len(a.sources) != len(b.sources):
        return False
    for sa, sb, ca, cb in zip(a.sources, b.sources, a.specs, b.specs):
        if not (
            np.array_equal(sa.x0, sb.x0)
            and np.array_equal(sa.F, sb.F)
            and sa.mu == sb.mu
            and ca == cb
        ):
            return False
    return True


def _safe_velocity(obj, pts):
    """Velocity at each point; ``nan`` where the evaluation is singular."""
    out = np.empty((len(pts), 2))
    try:
        return _velocity(obj, pts)
    except SingularityError:
        pass
    for k, x in enumerate(pts):
        try:
            out[k] = _velocity(obj, x[None])[0]
        except SingularityError:
            out[k] = np.nan
    return out


def _velocity(obj, pts):
    if isinstance(obj, (Field, SubtractionSolution)):
        return obj.evaluate(pts)[0]
    return np.asarray(obj(pts), dtype=float).reshape(-1, 2)


def extract_section(sol, y: float, n_samples: int, compare_to) -> list[tuple[float, float]]:
    """Samples ``(x, |u - u_h|(x, y))`` at ``n_samples`` uniform abscissae in ``[0, 1]``.

    ``sol`` and ``compare_to`` are fields, subtraction solutions or velocity
    callables.  When both are subtraction solutions with the same analytic
    part it cancels exactly and only the regular parts are compared.  A
    sample where exactly one side is singular has error ``inf``.
    """
    if not 0.0 < y < 1.0:
        raise ValueError(f"section ordinate must lie in (0, 1), got {y!r}")
    if int(n_samples) != n_samples or n_samples < 2:
        raise ValueError("need at least two samples")
    xs = np.linspace(0.0, 1.0, int(n_samples))
    pts = np.column_stack([xs, np.full_like(xs, y)])
    if (
        isinstance(sol, SubtractionSolution)
        and isinstance(compare_to, SubtractionSolution)
        and _same_singular_part(sol, compare_to)
    ):
        a, b = sol.field, compare_to.field
    else:
        a, b = sol, compare_to
    ua = _safe_velocity(a, pts)
    ub = _safe_velocity(b, pts)
    err = np.linalg.norm(ua - ub, axis=1)
    err = np.where(np.isnan(ua).any(axis=1) ^ np.isnan(ub).any(axis=1), np.inf, err)
    err = np.where(np.isnan(ua).any(axis=1) & np.isnan(ub).any(axis=1), 0.0, err)
    return [(float(x), float(e)) for x, e in zip(xs, err)]


@dataclass(frozen=True)
class LineicReport:
    """L2 differences to the finest point-force approximation of a curve load."""

    rows: tuple[tuple[int, float], ...]  # (N, difference)
    order: float
    metadata: dict = field(default_factory=dict)

    def to_csv(self, header: dict | None = None) -> str:
        meta = {**self.metadata, **(header or {})}
        lines = [f"# {k}={v}" for k, v in meta.items()]
        lines.append("N,difference")
        lines.extend(f"{n},{_fmt_float(d)}" for n, d in self.rows)
        lines.append(f"# order={_fmt_float(self.order)}")
        return "\n".join(lines) + "\n"


def _segment_distance(pts, vertices):
    best = np.full(len(pts), np.inf)
    for p0, p1 in zip(vertices[:-1], vertices[1:]):
        d = p1 - p0
        t = np.clip((pts - p0) @ d / max(d @ d, 1e-300), 0.0, 1.0)
        best = np.minimum(best, np.linalg.norm(pts - (p0 + t[:, None] * d), axis=1))
    return best


def run_lineic_study(
    vertices,
    density,
    N_list: Sequence[int] = (2, 4, 8, 16, 32),
    level: int = 6,
    spec: CutoffSpec = CutoffSpec(),
    distance: float = 0.15,
    mu: float = 1.0,
    pair="MINI",
) -> LineicReport:
    """Converge a polyline force by point forces and compare away from the curve.

    Each ``N`` is solved by the subtraction method on one mesh; the finest
    ``N`` stands in for the curve load.  Differences are L2 norms over the
    points at distance at least ``distance`` from the curve.
    """
    vertices = np.asarray(vertices, dtype=float)
    N_list = [int(n) for n in N_list]
    if len(N_list) < 2:
        raise ValueError("need at least two values of N")
    if N_list != sorted(set(N_list)):
        raise ValueError("N values must be strictly increasing")
    if not distance > 0.0:
        raise ValueError("the comparison region must stay at positive distance from the curve")
    if np.any(vertices <= 0.0) or np.any(vertices >= 1.0):
        raise ValueError("the curve must lie strictly inside the unit square")
    base = LineicForce.polyline(vertices, density, N_list[0], mu)

    mesh = build_uniform_mesh(2**level)
    space = MixedSpace.create(mesh, pair)
    system = assemble_stokes(mesh, space, mu)
    solutions = {}
    for n in N_list:
        sources = discretize_lineic(dataclasses.replace(base, N=n))
        if all(not np.any(s.F) for s in sources):
            solutions[n] = None
            continue
        solutions[n] = solve_multi_subtraction(mesh, space, sources, spec, system=system)

    def region(pts):
        return _segment_distance(pts, vertices) >= distance

    finest = solutions[N_list[-1]]
    rows = []
    for n in N_list:
        sol = solutions[n]
        if sol is None and finest is None:
            diff = 0.0
        elif n == N_list[-1]:
            diff = 0.0
        else:
            a = sol if sol is not None else (lambda p: np.zeros((len(p), 2)))
            b = finest if finest is not None else (lambda p: np.zeros((len(p), 2)))
            diff = l2_error(a, b, region=region, mesh=mesh)
        rows.append((n, diff))
    nonzero = [(float(n), d) for n, d in rows if d > 0.0]
    order = -estimate_order(nonzero) if len(nonzero) >= 2 else float("nan")
    meta = {
        "vertices": ";".join(",".join(_fmt_float(c) for c in v) for v in vertices),
        "density": ",".join(_fmt_float(c) for c in np.ravel(density)) if not callable(density) else "callable",
        "N_list": ",".join(str(n) for n in N_list),
        "level": str(level),
        "a": _fmt_float(spec.a),
        "b": _fmt_float(spec.b),
        "distance": _fmt_float(distance),
        "mu": _fmt_float(mu),
    }
    return LineicReport(tuple(rows), order, meta)
