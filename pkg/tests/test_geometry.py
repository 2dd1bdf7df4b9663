import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from parmfem.geometry import (
    DomainKind,
    DomainSpec,
    Mesh,
    MeshError,
    generate_domain,
    load_mesh,
    refine_uniform,
    save_mesh,
    signed_area,
    validate_mesh,
)

from conftest import lshape, square


def test_unit_square_n1_counts():
    m = square(1)
    assert (m.nv, m.ne, m.ned) == (4, 2, 5)


def test_lshape_resolution_for_table_meshes():
    assert 400 <= lshape(9).ne <= 700


def test_polygon_with_two_holes_euler():
    m = generate_domain(DomainSpec(DomainKind.POLYGON_WITH_HOLES, 2))
    assert m.nv - m.ned + m.ne == -1
    assert m.boundary_loops() == 3


def test_door_has_one_hole():
    m = generate_domain(DomainSpec(DomainKind.DOOR, 2))
    assert m.nv - m.ned + m.ne == 0


def test_counts_follow_documented_formula():
    for kind, per_cell in [(DomainKind.UNIT_SQUARE, 2), (DomainKind.LSHAPE, 6), (DomainKind.DOOR, 22), (DomainKind.POLYGON_WITH_HOLES, 48)]:
        for n in (1, 3):
            assert generate_domain(DomainSpec(kind, n)).ne == per_cell * n * n


def test_refine_quadruples():
    m = square(1)
    assert refine_uniform(m).ne == 8


def test_unit_square_refined_twice():
    m = refine_uniform(refine_uniform(square(1)))
    assert (m.ne, m.nv) == (32, 25)
    validate_mesh(m)


def test_refinement_inherits_boundary_and_area():
    m = lshape(2)
    r = refine_uniform(m)
    validate_mesh(r, holes=0)
    assert r.area() == pytest.approx(3.0, abs=1e-12)
    # boundary length is preserved
    def blen(mesh):
        e = mesh.edges[mesh.boundary]
        return np.linalg.norm(mesh.vertices[e[:, 1]] - mesh.vertices[e[:, 0]], axis=1).sum()
    assert blen(r) == pytest.approx(blen(m), abs=1e-12)
    # children are congruent: each parent area split into four equal parts
    assert np.allclose(r.areas().reshape(-1, 4), m.areas()[:, None] / 4, atol=1e-15)


def test_lshape_area_matches_shoelace():
    poly = ((0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2))
    m = lshape(5)
    assert abs(m.area() - signed_area(poly)) <= 1e-12
    assert signed_area(poly) == 3.0


def test_save_load_round_trip(tmp_path):
    m = refine_uniform(lshape(3))
    path = tmp_path / "l.mesh"
    save_mesh(m, path)
    back = load_mesh(path)
    assert np.array_equal(back.vertices, m.vertices)
    assert np.array_equal(back.triangles, m.triangles)
    assert np.array_equal(back.edges, m.edges)
    assert back.digest() == m.digest()


def _write(path, text):
    path.write_text(text)
    return path


def test_load_rejects_out_of_range_vertex(tmp_path):
    text = "3 1 3\n0 0\n1 0\n0 1\n0 1 3\n0 1 1\n0 2 1\n1 2 1\n"
    with pytest.raises(MeshError, match=r":5: vertex index out of range"):
        load_mesh(_write(tmp_path / "bad.mesh", text))


def test_load_reports_line_of_parse_error(tmp_path):
    text = "3 1 3\n0 0\n1 zero\n0 1\n0 1 2\n0 1 1\n0 2 1\n1 2 1\n"
    with pytest.raises(MeshError, match=r":3: bad coordinate"):
        load_mesh(_write(tmp_path / "bad.mesh", text))


def test_load_reorients_clockwise_triangle(tmp_path):
    text = "3 1 3\n0 0\n1 0\n0 1\n0 2 1\n0 1 1\n0 2 1\n1 2 1\n"
    m = load_mesh(_write(tmp_path / "cw.mesh", text))
    assert m.areas()[0] == pytest.approx(0.5)


@pytest.mark.parametrize(
    "outer, msg",
    [
        (((0, 0), (1, 0), (1, 0), (0, 1)), "repeated"),
        (((0, 0), (2, 0), (0, 0), (2, 0)), "repeated|zero area|not simple"),
        (((0, 0), (0, 1), (1, 1), (1, 0)), "counter-clockwise"),
        (((0, 0), (2, 0), (2, 2), (1, 2), (1, -1), (0, -1)), "not simple"),
        (((0, 0), (2, 1), (0, 2)), "axis aligned"),
    ],
)
def test_degenerate_polygons_rejected(outer, msg):
    with pytest.raises(MeshError, match=msg):
        generate_domain(DomainSpec(DomainKind.POLYGON_WITH_HOLES, 1, outer=outer))


def test_hole_orientation_and_containment_checked():
    outer = ((0, 0), (4, 0), (4, 4), (0, 4))
    with pytest.raises(MeshError, match="clockwise"):
        generate_domain(DomainSpec(DomainKind.POLYGON_WITH_HOLES, 1, outer, (((1, 1), (2, 1), (2, 2), (1, 2)),)))
    with pytest.raises(MeshError, match="inside|touches"):
        generate_domain(DomainSpec(DomainKind.POLYGON_WITH_HOLES, 1, outer, (((3, 1), (3, 2), (5, 2), (5, 1)),)))


def test_bad_resolution_rejected():
    with pytest.raises(MeshError):
        generate_domain(DomainSpec(DomainKind.LSHAPE, 0))


def test_mesh_is_immutable():
    m = square(2)
    with pytest.raises(ValueError):
        m.vertices[0, 0] = 5.0


def test_nonconforming_mesh_detected():
    # two squares where one side is split: hanging node at (1, 0.5)
    v = [(0, 0), (1, 0), (1, 1), (0, 1), (2, 0), (2, 1), (1, 0.5)]
    tris = [(0, 1, 2), (0, 2, 3), (1, 4, 6), (6, 4, 5), (6, 5, 2)]
    with pytest.raises(MeshError):
        validate_mesh(Mesh.from_triangles(v, tris))


def _invariants(m: Mesh, holes: int):
    validate_mesh(m, holes=holes)
    assert np.all(m.areas() > 0)
    n_adj = (m.edge_triangles >= 0).sum(axis=1)
    assert np.all(n_adj[m.boundary] == 1) and np.all(n_adj[~m.boundary] == 2)
    assert m.nv - m.ned + m.ne == 1 - holes


HOLES = {DomainKind.UNIT_SQUARE: 0, DomainKind.LSHAPE: 0, DomainKind.DOOR: 1, DomainKind.POLYGON_WITH_HOLES: 2}


@settings(max_examples=25)
@given(st.sampled_from(list(DomainKind)), st.integers(1, 3), st.integers(0, 1))
def test_generated_and_refined_meshes_are_valid(kind, n, refinements):
    m = generate_domain(DomainSpec(kind, n))
    for _ in range(refinements):
        m = refine_uniform(m)
    _invariants(m, HOLES[kind])
    assert generate_domain(DomainSpec(kind, n + 1)).ne > generate_domain(DomainSpec(kind, n)).ne


@settings(max_examples=25)
@given(st.integers(3, 6), st.integers(3, 6), st.data(), st.integers(1, 2))
def test_random_rectangle_with_hole(W, H, data, n):
    hx = data.draw(st.integers(1, W - 2))
    hy = data.draw(st.integers(1, H - 2))
    outer = ((0, 0), (W, 0), (W, H), (0, H))
    hole = ((hx, hy), (hx, hy + 1), (hx + 1, hy + 1), (hx + 1, hy))
    m = generate_domain(DomainSpec(DomainKind.POLYGON_WITH_HOLES, n, outer, (hole,)))
    _invariants(m, 1)
    assert m.area() == pytest.approx(W * H - 1, abs=1e-12)


@settings(max_examples=10)
@given(st.integers(1, 3))
def test_loaded_mesh_is_valid(tmp_path_factory, n):
    m = generate_domain(DomainSpec(DomainKind.DOOR, n))
    path = tmp_path_factory.mktemp("m") / "door.mesh"
    save_mesh(m, path)
    _invariants(load_mesh(path), 1)
