"""Command-line interface.

Every subcommand accepts ``--config FILE`` with ``key = value`` lines whose
keys are the long option names (``ref-level`` or ``ref_level``); options
given on the command line take precedence.  Exit status is 0 on success,
2 for an invalid configuration and 3 when a solve fails.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .checks import run_analytics_checks
from .convergence import extract_section, reference_solution, run_convergence_study, run_lineic_study
from .fem.assembly import assemble_stokes
from .fem.solver import SolverError
from .fem.spaces import ElementPair, MixedSpace
from .io import write_nodal_csv, write_rows_csv, write_solution_vtk
from .mesh import build_uniform_mesh
from .singular import CutoffSpec, SingularSource
from .solvers import solve_direct, solve_subtraction

EXIT_OK = 0
EXIT_FAILED_CHECK = 1
EXIT_CONFIG = 2
EXIT_SOLVER = 3

log = logging.getLogger("pointstokes")


class ConfigError(ValueError):
    """Invalid run configuration."""


# -- value parsers --------------------------------------------------------------


def _floats(text: str, count: int | None = None) -> tuple[float, ...]:
    try:
        vals = tuple(float(v) for v in str(text).split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if count is not None and len(vals) != count:
        raise argparse.ArgumentTypeError(f"expected {count} comma-separated numbers, got {text!r}")
    if not all(math.isfinite(v) for v in vals):
        raise argparse.ArgumentTypeError(f"non-finite value in {text!r}")
    return vals


def _vec2(text):
    return _floats(text, 2)


def _int_list(text: str) -> list[int]:
    """``3:7`` (inclusive range) or ``2,4,8``."""
    text = str(text).strip()
    try:
        if ":" in text:
            lo, hi = (int(v) for v in text.split(":"))
            return list(range(lo, hi + 1))
        return [int(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a range a:b or a list a,b,..., got {text!r}")


def _polyline(text: str) -> np.ndarray:
    try:
        return np.array([_floats(p, 2) for p in str(text).split(";")])
    except argparse.ArgumentTypeError:
        raise argparse.ArgumentTypeError(f"expected vertices 'x,y;x,y;...', got {text!r}")


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _pair(text):
    try:
        return ElementPair.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


# -- parser -------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _physics_options(p, with_cutoff=True):
    p.add_argument("--x0", type=_vec2, default="0.5,0.5", help="source location x,y")
    p.add_argument("--force", type=_vec2, default="1,0", help="force vector Fx,Fy")
    p.add_argument("--mu", type=float, default=1.0, help="viscosity")
    p.add_argument("--pair", type=_pair, default="MINI", help="MINI or TaylorHood")
    if with_cutoff:
        p.add_argument("--a", type=float, default=0.1, help="inner cutoff radius")
        p.add_argument("--b", type=float, default=0.2, help="outer cutoff radius")
        p.add_argument("--cutoff", choices=("cubic", "quintic"), default="cubic")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pointstokes", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def command(name, help_text):
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--config", type=Path, help="key=value file; flags override it")
        return p

    p = command("solve", "solve one point-force problem and export the solution")
    _physics_options(p)
    p.add_argument("--method", choices=("direct", "subtraction", "both"), default="subtraction")
    p.add_argument("--n", type=_positive_int, default=32, help="cells per side")
    p.add_argument("--vtk", type=Path, default=Path("solution.vtk"), help="VTK output path")
    p.add_argument("--csv", type=Path, help="optional nodal CSV output path")
    p.set_defaults(handler=cmd_solve)

    p = command("convergence", "error table of both methods against a fine reference")
    _physics_options(p)
    p.add_argument("--levels", type=_int_list, default="3:7", help="mesh levels, n = 2**level")
    p.add_argument("--ref-level", type=_positive_int, default=9, help="reference level")
    p.add_argument("--output", type=Path, default=Path("convergence.csv"))
    p.set_defaults(handler=cmd_convergence)

    p = command("section", "pointwise error along a horizontal line, one file per method")
    _physics_options(p)
    p.add_argument("--n", type=_positive_int, default=8)
    p.add_argument("--y", type=float, default=0.5, help="ordinate of the section")
    p.add_argument("--samples", type=_positive_int, default=401)
    p.add_argument("--ref-level", type=_positive_int, default=9)
    p.add_argument("--output-prefix", type=str, default="section")
    p.set_defaults(handler=cmd_section)

    p = command("lineic", "approximate a polyline force by N point forces")
    p.add_argument("--vertices", type=_polyline, default="0.3,0.5;0.7,0.5", help="x,y;x,y;...")
    p.add_argument("--density", type=_vec2, default="0,1", help="force per unit length")
    p.add_argument("--N-list", dest="N_list", type=_int_list, default="2,4,8,16,32")
    p.add_argument("--level", type=_positive_int, default=6, help="mesh level, n = 2**level")
    p.add_argument("--distance", type=float, default=0.15, help="min distance from the curve")
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--pair", type=_pair, default="MINI")
    p.add_argument("--a", type=float, default=0.1)
    p.add_argument("--b", type=float, default=0.2)
    p.add_argument("--output", type=Path, default=Path("lineic.csv"))
    p.set_defaults(handler=cmd_lineic)

    p = command("mesh-info", "print the size of a uniform mesh")
    p.add_argument("--n", type=_positive_int, default=8)
    p.set_defaults(handler=cmd_mesh_info)

    p = command("check-analytics", "finite-difference checks of the closed-form fields")
    p.add_argument("--points", type=_positive_int, default=200)
    p.add_argument("--fd-step", type=float, default=1e-5)
    p.add_argument("--tol", type=float, default=1e-5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--a", type=float, default=0.1)
    p.add_argument("--b", type=float, default=0.2)
    p.set_defaults(handler=cmd_check_analytics)
    return parser


def read_config(path: Path) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}")
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value, got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _subparser(parser, name):
    for action in parser._subparsers._group_actions:
        if name in action.choices:
            return action.choices[name]
    raise KeyError(name)


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None) is None:
        return args
    try:
        cfg = read_config(args.config)
    except ConfigError as exc:
        parser.exit(EXIT_CONFIG, f"pointstokes: error: {exc}\n")
    sub = _subparser(parser, args.command)
    known = {a.dest for a in sub._actions} - {"help", "config", "handler"}
    unknown = sorted(set(cfg) - known)
    if unknown:
        parser.exit(EXIT_CONFIG, f"pointstokes: error: unknown config keys: {', '.join(unknown)}\n")
    # string defaults are converted by the option types, as if typed on the command line
    sub.set_defaults(**cfg)
    return parser.parse_args(argv)


# -- validation -----------------------------------------------------------------


def _source(args) -> SingularSource:
    try:
        return SingularSource(args.x0, args.force, args.mu)
    except ValueError as exc:
        raise ConfigError(str(exc))


def _cutoff(args, src) -> CutoffSpec:
    try:
        spec = CutoffSpec(args.a, args.b, getattr(args, "cutoff", "cubic"))
        spec.check_source(src)
    except ValueError as exc:
        raise ConfigError(str(exc))
    return spec


def _num(v) -> str:
    return repr(float(v))


def _header(command, args, extra=None) -> dict[str, str]:
    out = {"command": command, "version": __version__}
    for key in ("method", "n", "x0", "force", "mu", "pair", "a", "b", "cutoff", "levels",
                "ref_level", "y", "samples", "level", "distance", "N_list", "density"):
        if not hasattr(args, key):
            continue
        v = getattr(args, key)
        if isinstance(v, ElementPair):
            v = v.value
        elif isinstance(v, (tuple, list, np.ndarray)):
            v = ",".join(_num(c) if isinstance(c, float) else str(c) for c in v)
        elif isinstance(v, float):
            v = _num(v)
        out[key] = str(v)
    out.update(extra or {})
    return out


# -- commands -------------------------------------------------------------------


def cmd_solve(args) -> int:
    src = _source(args)
    methods = ["direct", "subtraction"] if args.method == "both" else [args.method]
    spec = _cutoff(args, src) if "subtraction" in methods else None
    mesh = build_uniform_mesh(args.n)
    space = MixedSpace.create(mesh, args.pair)
    system = assemble_stokes(mesh, space, src.mu)
    for method in methods:
        if method == "direct":
            sol = solve_direct(mesh, space, [src], system=system)
            field = sol
        else:
            sol = solve_subtraction(mesh, space, src, spec, system=system)
            field = sol.field
        header = _header("solve", args, {"method": method})
        title = "pointstokes " + " ".join(f"{k}={v}" for k, v in header.items() if k != "command")
        vtk = args.vtk if len(methods) == 1 else _suffixed(args.vtk, method)
        write_solution_vtk(vtk, sol, title)
        if args.csv is not None:
            csv = args.csv if len(methods) == 1 else _suffixed(args.csv, method)
            write_nodal_csv(csv, sol, header)
        # the analytic part is odd about x0, so the total mean equals the regular mean
        print(
            f"method={method} n={args.n} pair={space.pair.value} vertices={mesh.n_vertices} "
            f"pressure_mean={field.pressure_mean():.3e} vtk={vtk}"
        )
    return EXIT_OK


def _suffixed(path: Path, tag: str) -> Path:
    return path.with_name(f"{path.stem}_{tag}{path.suffix}")


def cmd_convergence(args) -> int:
    src = _source(args)
    spec = _cutoff(args, src)
    levels = sorted(set(args.levels))
    if len(levels) < 2:
        raise ConfigError("need at least 2 levels to estimate an order")
    if min(levels) < 1:
        raise ConfigError("levels must be positive")
    if args.ref_level < max(levels) + 2:
        raise ConfigError(
            f"--ref-level {args.ref_level} must be at least 2 above the finest level {max(levels)}"
        )
    report = run_convergence_study(levels, args.ref_level, src, spec, args.pair)
    args.output.write_text(report.to_csv())
    print(f"eoc_direct={report.eoc_direct:.4f} eoc_subtraction={report.eoc_subtraction:.4f}")
    print(f"wrote {args.output}")
    return EXIT_OK


def cmd_section(args) -> int:
    src = _source(args)
    spec = _cutoff(args, src)
    if not 0.0 < args.y < 1.0:
        raise ConfigError(f"--y must lie in (0, 1), got {args.y}")
    if args.samples < 2:
        raise ConfigError("--samples must be at least 2")
    level = math.log2(args.n)
    if args.ref_level < level + 2:
        raise ConfigError(f"--ref-level must be at least 2 above log2(n) = {level:g}")
    ref = reference_solution(args.ref_level, src, spec, args.pair)
    mesh = build_uniform_mesh(args.n)
    space = MixedSpace.create(mesh, args.pair)
    system = assemble_stokes(mesh, space, src.mu)
    sols = {
        "direct": solve_direct(mesh, space, [src], system=system),
        "subtraction": solve_subtraction(mesh, space, src, spec, system=system),
    }
    for name, sol in sols.items():
        rows = extract_section(sol, args.y, args.samples, ref)
        path = Path(f"{args.output_prefix}_{name}.csv")
        write_rows_csv(path, ("x", "error"), rows, _header("section", args, {"method": name}))
        finite = [e for _, e in rows if math.isfinite(e)]
        print(f"method={name} max_error={max(finite):.5e} rows={len(rows)} file={path}")
    return EXIT_OK


def cmd_lineic(args) -> int:
    verts = np.asarray(args.vertices)
    if len(verts) < 2:
        raise ConfigError("a polyline needs at least 2 vertices")
    if np.any(verts <= 0.0) or np.any(verts >= 1.0):
        raise ConfigError("the polyline must lie strictly inside the unit square")
    if len(args.N_list) < 2:
        raise ConfigError("need at least 2 values in --N-list")
    if args.N_list != sorted(set(args.N_list)) or min(args.N_list) < 1:
        raise ConfigError("--N-list must be strictly increasing positive integers")
    if not args.distance > 0.0:
        raise ConfigError("--distance must be positive")
    if not args.mu > 0.0:
        raise ConfigError("--mu must be positive")
    try:
        spec = CutoffSpec(args.a, args.b)
    except ValueError as exc:
        raise ConfigError(str(exc))
    edge = float(min(verts.min(), (1.0 - verts).min()))
    if not spec.b < edge:
        raise ConfigError(
            f"outer cutoff radius b={spec.b} must be smaller than the distance {edge} "
            "from the curve to the boundary"
        )
    report = run_lineic_study(
        verts, args.density, args.N_list, args.level, spec, args.distance, args.mu, args.pair
    )
    args.output.write_text(report.to_csv(_header("lineic", args)))
    print(f"order={report.order:.4f} rows={len(report.rows)} wrote {args.output}")
    return EXIT_OK


def cmd_mesh_info(args) -> int:
    mesh = build_uniform_mesh(args.n)
    print(mesh.summary())
    return EXIT_OK


def cmd_check_analytics(args) -> int:
    try:
        spec = CutoffSpec(args.a, args.b)
    except ValueError as exc:
        raise ConfigError(str(exc))
    if not 0.0 < args.fd_step < 1e-2:
        raise ConfigError("--fd-step must lie in (0, 1e-2)")
    ok = True
    for r in run_analytics_checks(args.points, args.fd_step, spec, seed=args.seed):
        worst = max(r.correction_momentum, r.correction_divergence, r.stokeslet_momentum,
                    r.stokeslet_divergence)
        passed = worst <= args.tol and abs(r.correction_order - 2.0) < 0.1
        ok &= passed
        print(
            f"{r.dim}D correction: momentum {r.correction_momentum:.3e} "
            f"divergence {r.correction_divergence:.3e} observed order {r.correction_order:.3f}; "
            f"stokeslet: momentum {r.stokeslet_momentum:.3e} "
            f"divergence {r.stokeslet_divergence:.3e} [{'ok' if passed else 'FAIL'}]"
        )
    return EXIT_OK if ok else EXIT_FAILED_CHECK


def main(argv=None) -> int:
    args = parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"pointstokes: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"pointstokes: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
