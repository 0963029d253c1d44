import numpy as np
import pytest
import sympy as sp

from pointstokes import CutoffSpec, SingularSource
from pointstokes.fem.assembly import flat_quadrature


def manufactured_stokes(mu=1.0):
    """Velocity, pressure and body force of the stream-function test case.

    ``psi = x^2 (1-x)^2 y^2 (1-y)^2``, ``u = (psi_y, -psi_x)``, ``p = x - 1/2``.
    The force is derived symbolically.
    """
    x, y = sp.symbols("x y")
    psi = x**2 * (1 - x) ** 2 * y**2 * (1 - y) ** 2
    ux, uy = sp.diff(psi, y), -sp.diff(psi, x)
    p = x - sp.Rational(1, 2)
    lap = lambda w: sp.diff(w, x, 2) + sp.diff(w, y, 2)
    fx = -mu * lap(ux) + sp.diff(p, x)
    fy = -mu * lap(uy) + sp.diff(p, y)

    def vec(exprs):
        fn = sp.lambdify((x, y), exprs, "numpy")

        def ev(pts):
            pts = np.asarray(pts, dtype=float).reshape(-1, 2)
            vals = fn(pts[:, 0], pts[:, 1])
            return np.column_stack([np.broadcast_to(v, (len(pts),)) for v in vals])

        return ev

    def scal(expr):
        fn = sp.lambdify((x, y), expr, "numpy")
        return lambda pts: np.broadcast_to(fn(pts[:, 0], pts[:, 1]), (len(pts),)).astype(float)

    return vec([ux, uy]), scal(p), vec([fx, fy])


def integrate_over(mesh, fun, cuts=()):
    """Quadrature of a scalar function over the whole mesh."""
    total = 0.0
    for _, _, pts, w in flat_quadrature(mesh, None, list(cuts)):
        total += float(np.sum(w * fun(pts)))
    return total


@pytest.fixture
def center_source():
    return SingularSource((0.5, 0.5), (1.0, 0.0), 1.0)


@pytest.fixture
def default_spec():
    return CutoffSpec(0.1, 0.2)


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES: dict[int, str] = {}


def record_criterion(number: int, passed: bool, detail: str) -> None:
    ACCEPTANCE_LINES[number] = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
