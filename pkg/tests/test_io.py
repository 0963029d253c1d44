import numpy as np
import pytest

from pointstokes import CutoffSpec, MixedSpace, SingularSource, build_uniform_mesh, solve_direct, solve_subtraction
from pointstokes.io import nodal_values, write_nodal_csv, write_rows_csv, write_solution_vtk, write_vtk


def _read_vtk(path):
    lines = path.read_text().splitlines()
    sections = {}
    k = 4
    while k < len(lines):
        head = lines[k].split()
        if head[0] == "POINTS":
            n = int(head[1])
            sections["POINTS"] = np.array([l.split() for l in lines[k + 1 : k + 1 + n]], dtype=float)
            k += n + 1
        elif head[0] == "CELLS":
            n = int(head[1])
            sections["CELLS"] = np.array([l.split() for l in lines[k + 1 : k + 1 + n]], dtype=int)
            k += n + 1
        elif head[0] == "CELL_TYPES":
            n = int(head[1])
            sections["CELL_TYPES"] = np.array(lines[k + 1 : k + 1 + n], dtype=int)
            k += n + 1
        elif head[0] == "POINT_DATA":
            npts = int(head[1])
            k += 1
        elif head[0] == "VECTORS":
            sections[head[1]] = np.array([l.split() for l in lines[k + 1 : k + 1 + npts]], dtype=float)
            k += npts + 1
        elif head[0] == "SCALARS":
            sections[head[1]] = np.array(lines[k + 2 : k + 2 + npts], dtype=float)
            k += npts + 2
        else:
            raise AssertionError(f"unexpected line {lines[k]!r}")
    return lines[:4], sections


@pytest.fixture(scope="module")
def problem():
    mesh = build_uniform_mesh(8)
    space = MixedSpace.create(mesh)
    src = SingularSource((0.5, 0.5), (1.0, 0.0))
    return mesh, space, src


def test_vtk_structure_and_round_trip(tmp_path, problem):
    mesh, space, src = problem
    field = solve_direct(mesh, space, [src])
    path = write_solution_vtk(tmp_path / "d.vtk", field, "direct run")
    head, data = _read_vtk(path)
    assert head == ["# vtk DataFile Version 3.0", "direct run", "ASCII", "DATASET UNSTRUCTURED_GRID"]
    assert data["POINTS"].shape == (81, 3) and np.all(data["POINTS"][:, 2] == 0.0)
    assert np.array_equal(data["POINTS"][:, :2], mesh.vertices)
    assert np.all(data["CELLS"][:, 0] == 3) and np.array_equal(data["CELLS"][:, 1:], mesh.triangles)
    assert np.all(data["CELL_TYPES"] == 5)
    u, p = field.evaluate(mesh.vertices)
    assert np.array_equal(data["velocity"][:, :2], u) and np.all(data["velocity"][:, 2] == 0.0)
    assert np.array_equal(data["pressure"], p)


def test_subtraction_export_uses_regular_part_at_source(tmp_path, problem):
    mesh, space, src = problem
    sol = solve_subtraction(mesh, space, src, CutoffSpec())
    u, p, singular = nodal_values(sol)
    v = int(np.flatnonzero(np.all(mesh.vertices == 0.5, axis=1))[0])
    assert singular == [v]
    assert np.all(np.isfinite(u)) and np.all(np.isfinite(p))
    uv, pv = sol.field.evaluate(mesh.vertices)
    assert np.array_equal(u[v], uv[v])
    others = np.arange(mesh.n_vertices) != v
    ut, pt = sol.evaluate(mesh.vertices[others])
    assert np.array_equal(u[others], ut) and np.array_equal(p[others], pt)

    head, data = _read_vtk(write_solution_vtk(tmp_path / "s.vtk", sol))
    assert f"vertices [{v}]" in head[1]
    assert np.array_equal(data["regular_ux"], uv[:, 0])
    assert np.array_equal(data["regular_pressure"], pv)


def test_vtk_rejects_mismatched_arrays(tmp_path, problem):
    mesh = problem[0]
    with pytest.raises(ValueError):
        write_vtk(tmp_path / "x.vtk", mesh, np.zeros((3, 2)), np.zeros(mesh.n_vertices))
    with pytest.raises(ValueError, match="extra"):
        write_vtk(
            tmp_path / "x.vtk", mesh, np.zeros((81, 2)), np.zeros(81), extra={"extra": np.zeros(5)}
        )


def test_nodal_csv(tmp_path, problem):
    mesh, space, src = problem
    field = solve_direct(mesh, space, [src])
    path = write_nodal_csv(tmp_path / "n.csv", field, {"n": "8"})
    lines = path.read_text().splitlines()
    assert lines[0] == "# n=8" and lines[1] == "x,y,ux,uy,p"
    table = np.array([l.split(",") for l in lines[2:]], dtype=float)
    u, p = field.evaluate(mesh.vertices)
    assert np.array_equal(table[:, 2:4], u) and np.array_equal(table[:, 4], p)


def test_rows_csv_is_round_trip_exact(tmp_path):
    rows = [(0.1, 1 / 3), (np.pi, 2.0**-40)]
    lines = write_rows_csv(tmp_path / "r.csv", ("x", "e"), rows, {"k": "v"}).read_text().splitlines()
    assert lines[:2] == ["# k=v", "x,e"]
    assert [tuple(float(v) for v in l.split(",")) for l in lines[2:]] == rows


def test_export_rejects_unknown_objects(tmp_path, problem):
    with pytest.raises(TypeError):
        nodal_values(problem[0])
