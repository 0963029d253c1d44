"""Export of nodal fields to legacy ASCII VTK and CSV."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping

import numpy as np

from .fem.spaces import Field
from .mesh import TriMesh
from .solvers import SubtractionSolution

VTK_TRIANGLE = 5


def _num(v) -> str:
    return repr(float(v))


def nodal_values(sol) -> tuple[np.ndarray, np.ndarray, list[int]]:
    """Velocity ``(nv, 2)`` and pressure ``(nv,)`` at the mesh vertices.

    For a subtraction solution the total field is used; at a vertex that
    coincides with a source only the regular part is finite and is used
    instead.  The indices of such vertices are returned as the third item.
    """
    if not isinstance(sol, (Field, SubtractionSolution)):
        raise TypeError(f"cannot export an object of type {type(sol).__name__}")
    mesh = sol.mesh
    if isinstance(sol, Field):
        u, p = sol.evaluate(mesh.vertices)
        return u, p, []
    u, p = sol.field.evaluate(mesh.vertices)
    at_source = np.zeros(mesh.n_vertices, dtype=bool)
    for src in sol.sources:
        at_source |= np.all(mesh.vertices == src.x0, axis=1)
    ok = ~at_source
    us, ps = sol.singular_part(mesh.vertices[ok])
    u[ok] += us
    p[ok] += ps
    return u, p, np.flatnonzero(at_source).tolist()


def write_vtk(
    path,
    mesh: TriMesh,
    velocity: np.ndarray,
    pressure: np.ndarray,
    title: str = "pointstokes",
    extra: Mapping[str, np.ndarray] | None = None,
) -> Path:
    """Write an unstructured-grid legacy VTK file with nodal point data.

    ``velocity`` is ``(n_vertices, 2)`` and is padded with a zero third
    component; ``extra`` maps names to further nodal scalar fields.
    """
    path = Path(path)
    nv = mesh.n_vertices
    velocity = np.asarray(velocity, dtype=float)
    pressure = np.asarray(pressure, dtype=float)
    if velocity.shape != (nv, 2) or pressure.shape != (nv,):
        raise ValueError("nodal arrays do not match the mesh")
    title = " ".join(title.split())[:255]  # the header is a single line
    lines = ["# vtk DataFile Version 3.0", title, "ASCII", "DATASET UNSTRUCTURED_GRID"]
    lines.append(f"POINTS {nv} double")
    lines.extend(f"{_num(x)} {_num(y)} 0.0" for x, y in mesh.vertices)
    nt = mesh.n_triangles
    lines.append(f"CELLS {nt} {4 * nt}")
    lines.extend(f"3 {a} {b} {c}" for a, b, c in mesh.triangles)
    lines.append(f"CELL_TYPES {nt}")
    lines.extend([str(VTK_TRIANGLE)] * nt)
    lines.append(f"POINT_DATA {nv}")
    lines.append("VECTORS velocity double")
    lines.extend(f"{_num(ux)} {_num(uy)} 0.0" for ux, uy in velocity)
    fields = {"pressure": pressure, **(extra or {})}
    for name, values in fields.items():
        values = np.asarray(values, dtype=float).reshape(-1)
        if len(values) != nv:
            raise ValueError(f"field {name!r} has {len(values)} values, expected {nv}")
        lines.append(f"SCALARS {name} double 1")
        lines.append("LOOKUP_TABLE default")
        lines.extend(_num(v) for v in values)
    path.write_text("\n".join(lines) + "\n")
    return path


def write_solution_vtk(path, sol, title: str = "pointstokes") -> Path:
    """Export a :class:`Field` or subtraction solution at the mesh vertices."""
    u, p, singular = nodal_values(sol)
    if singular:
        title = f"{title} (regular part only at vertices {singular})"
    extra = None
    if isinstance(sol, SubtractionSolution):
        uv, pv = sol.field.evaluate(sol.mesh.vertices)
        extra = {"regular_ux": uv[:, 0], "regular_uy": uv[:, 1], "regular_pressure": pv}
    return write_vtk(path, sol.mesh, u, p, title, extra)


def write_nodal_csv(path, sol, header: Mapping[str, str] | None = None) -> Path:
    """Write ``x,y,ux,uy,p`` at every mesh vertex."""
    u, p, singular = nodal_values(sol)
    lines = [f"# {k}={v}" for k, v in (header or {}).items()]
    if singular:
        lines.append(f"# regular part only at vertices {singular}")
    lines.append("x,y,ux,uy,p")
    for (x, y), (ux, uy), pk in zip(sol.mesh.vertices, u, p):
        lines.append(",".join(_num(v) for v in (x, y, ux, uy, pk)))
    path = Path(path)
    path.write_text("\n".join(lines) + "\n")
    return path


def write_rows_csv(path, columns, rows, header: Mapping[str, str] | None = None) -> Path:
    lines = [f"# {k}={v}" for k, v in (header or {}).items()]
    lines.append(",".join(columns))
    lines.extend(",".join(_num(v) for v in row) for row in rows)
    path = Path(path)
    path.write_text("\n".join(lines) + "\n")
    return path
