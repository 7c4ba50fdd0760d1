import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from loophodge import shapes
from loophodge.errors import DisconnectedError, NonManifoldError, OpenSurfaceError, OrientationError, ParseError
from loophodge.mesh import (ControlMesh, build_topology, genus, load_control_mesh, loop_beta, save_off,
                            subdivide, subdivision_matrix)


def _counts(mesh):
    top = build_topology(mesh)
    return mesh.n_vertices, top.n_edges, mesh.n_faces


def test_octahedron_topology():
    top = build_topology(shapes.octahedron())
    assert top.n_edges == 12
    assert np.all(top.valence == 4)
    assert top.euler_characteristic == 2
    assert genus(top) == 0


def test_torus_2048_counts():
    mesh = shapes.torus(3, 1, 64, 32)
    V, E, F = _counts(mesh)
    assert (V, E, F) == (2048, 6144, 4096)
    top = build_topology(mesh)
    assert np.all(top.valence == 6)
    assert 3 * F == 2 * E
    assert top.valence.sum() == 2 * E
    assert genus(top) == 1


def test_refinement_counts_2048_torus():
    fine = subdivide(shapes.torus(3, 1, 64, 32))
    assert _counts(fine) == (8192, 24576, 16384)
    assert fine.refinement_level == 1


def test_regular_patch_stencil_has_12_vertices(torus16):
    assert all(len(s) == 12 for s in torus16.stencils)


def test_twin_involution_and_handshake():
    top = build_topology(shapes.sphere(1.0, 2))
    h = np.arange(len(top.twin))
    assert np.all(top.twin[top.twin[h]] == h)
    assert top.valence.sum() == 2 * top.n_edges


@pytest.mark.parametrize("mesh,g", [
    (shapes.octahedron(), 0),
    (shapes.torus(3, 1, 8, 6), 1),
    (shapes.double_torus(), 2),
    (shapes.handle_slab(3), 3),
])
def test_genus(mesh, g):
    assert genus(build_topology(mesh)) == g


def test_loop_beta_regular():
    assert loop_beta(6) == pytest.approx(1.0 / 16.0, abs=1e-15)


def test_masks_partition_of_unity():
    S, _, _ = subdivision_matrix(build_topology(shapes.double_torus()))
    np.testing.assert_allclose(S @ np.ones(S.shape[1]), 1.0, atol=1e-14)


def test_planar_mesh_stays_planar():
    # a flat torus grid embedded in z = 0 keeps planar data planar under the masks
    mesh = shapes.torus(3, 1, 12, 8)
    flat = mesh.with_vertices(np.column_stack([mesh.vertices[:, :2], np.zeros(mesh.n_vertices)]))
    S, _, _ = subdivision_matrix(build_topology(flat))
    assert np.abs((S @ flat.vertices)[:, 2]).max() == 0.0


def test_odd_vertices_have_valence_six():
    mesh = shapes.octahedron()
    fine = subdivide(mesh)
    val = build_topology(fine).valence
    assert np.all(val[mesh.n_vertices:] == 6)


@settings(max_examples=12, deadline=None)
@given(st.sampled_from(["octahedron", "torus", "slab1", "slab2"]), st.integers(1, 2))
def test_euler_and_genus_invariant_under_subdivision(name, levels):
    mesh = {"octahedron": shapes.octahedron(), "torus": shapes.torus(3, 1, 6, 5),
            "slab1": shapes.handle_slab(1), "slab2": shapes.handle_slab(2)}[name]
    top = build_topology(mesh)
    fine = build_topology(subdivide(mesh, levels))
    assert fine.euler_characteristic == top.euler_characteristic
    assert genus(fine) == genus(top)


def test_off_obj_round_trip(tmp_path):
    mesh = shapes.sphere(1.0, 1)
    p = tmp_path / "m.off"
    save_off(mesh, p)
    back = load_control_mesh(p)
    np.testing.assert_array_equal(back.faces, mesh.faces)
    np.testing.assert_allclose(back.vertices, mesh.vertices, rtol=0, atol=0)
    q = tmp_path / "m.obj"
    with open(q, "w") as fh:
        fh.write("# comment\n")
        for v in mesh.vertices:
            fh.write("v %.17g %.17g %.17g\n" % tuple(v))
        for f in mesh.faces + 1:
            fh.write("f %d/1 %d/1 %d/1\n" % tuple(f))
    back = load_control_mesh(q)
    np.testing.assert_array_equal(back.faces, mesh.faces)


def test_octahedron_off_file(tmp_path):
    p = tmp_path / "octa.off"
    save_off(shapes.octahedron(), p)
    mesh = load_control_mesh(p)
    assert (mesh.n_vertices, mesh.n_faces) == (6, 8)
    assert np.all(build_topology(mesh).valence == 4)


def test_malformed_file(tmp_path):
    p = tmp_path / "bad.off"
    p.write_text("OFF\n3 1 0\n0 0 0\n1 0\n")
    with pytest.raises(ParseError):
        load_control_mesh(p)


def test_open_surface_rejected():
    mesh = shapes.octahedron()
    with pytest.raises(OpenSurfaceError):
        build_topology(ControlMesh(mesh.vertices, mesh.faces[:-1]))


def test_edge_shared_by_three_faces():
    v = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1]], float)
    f = np.array([[0, 1, 2], [1, 0, 3], [0, 1, 4]])
    with pytest.raises(NonManifoldError):
        build_topology(ControlMesh(v, f))


def test_inconsistent_winding():
    mesh = shapes.octahedron()
    f = mesh.faces.copy()
    f[0] = f[0][::-1]
    with pytest.raises(OrientationError):
        build_topology(ControlMesh(mesh.vertices, f))


def test_disconnected_genus():
    a = shapes.octahedron()
    b = shapes.octahedron()
    mesh = ControlMesh(np.vstack([a.vertices, b.vertices + 5]), np.vstack([a.faces, b.faces + 6]))
    with pytest.raises(DisconnectedError):
        genus(build_topology(mesh))


def test_degenerate_face_rejected():
    mesh = shapes.octahedron()
    f = mesh.faces.copy()
    f[0] = [0, 0, 1]
    with pytest.raises(Exception):
        ControlMesh(mesh.vertices, f).validate()
