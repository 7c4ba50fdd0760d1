import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.spatial import cKDTree

from loophodge import shapes
from loophodge.errors import DegenerateJacobianError
from loophodge.mesh import ControlMesh, build_topology, subdivide
from loophodge.subdivision import (LimitSurface, evaluate_patch, integrated_curvatures, limit_point_matrix,
                                   max_mean_curvature, patch_basis, regular_basis, surface_area, valence_data)


def _random_params(rng, n):
    p = rng.random((n, 2))
    flip = p.sum(axis=1) > 1
    p[flip] = 1 - p[flip]
    return p


def test_regular_partition_of_unity(rng):
    B, Bv, Bw = regular_basis(_random_params(rng, 500), nderiv=1)
    np.testing.assert_allclose(B.sum(axis=1), 1.0, atol=1e-14)
    np.testing.assert_allclose(Bv.sum(axis=1), 0.0, atol=1e-13)
    np.testing.assert_allclose(Bw.sum(axis=1), 0.0, atol=1e-13)


@pytest.mark.parametrize("n", [3, 4, 5, 7, 8, 10])
def test_irregular_partition_of_unity(n, rng):
    basis = patch_basis(n, _random_params(rng, 300), 2)
    np.testing.assert_allclose(basis[0].sum(axis=1), 1.0, atol=1e-12)
    for d in basis[1:]:
        np.testing.assert_allclose(d.sum(axis=1), 0.0, atol=1e-9)


def test_box_spline_corner_equals_limit_mask():
    # Loop limit mask at a regular vertex: 1/2 at the center, 1/12 per neighbor
    B = regular_basis(np.array([[0.0, 0.0]]), 0)[0][0]
    expected = np.zeros(12)
    expected[0] = 0.5
    expected[1:7] = 1.0 / 12.0
    np.testing.assert_allclose(B, expected, atol=1e-15)


@pytest.mark.parametrize("n", [3, 4, 5, 7, 8])
def test_irregular_origin_equals_limit_mask(n):
    B = patch_basis(n, np.array([[0.0, 0.0]]), 0)[0][0]
    np.testing.assert_allclose(B, valence_data(n).limit_weights, atol=1e-12)


@pytest.mark.parametrize("mesh", [shapes.torus(3, 1, 8, 6), subdivide(shapes.octahedron())],
                         ids=["regular", "irregular"])
def test_dyadic_points_match_refined_limit_points(mesh):
    """Evaluating a patch at dyadic parameters hits limit points of the refined net."""
    surf = LimitSurface(mesh)
    fine = subdivide(mesh, 2)
    lim = limit_point_matrix(build_topology(fine)) @ fine.vertices
    tree = cKDTree(lim)
    params = np.array([[0.5, 0.0], [0.0, 0.5], [0.5, 0.5], [0.25, 0.25], [0.25, 0.0], [0.75, 0.25]])
    for p in range(surf.n_patches):
        pos = surf.evaluate(p, params).position
        d, _ = tree.query(pos)
        assert d.max() < 1e-12


def test_sample_invariants(torus16, rng):
    for p in (0, 17, 200):
        s = torus16.evaluate(p, _random_params(rng, 50))
        np.testing.assert_allclose(np.linalg.norm(s.normal, axis=1), 1.0, atol=1e-14)
        scale = np.linalg.norm(s.dr_dv, axis=1) * np.linalg.norm(s.normal, axis=1)
        assert np.all(np.abs(np.einsum("nd,nd->n", s.normal, s.dr_dv)) < 1e-12 * scale)
        assert np.all(np.abs(np.einsum("nd,nd->n", s.normal, s.dr_dw)) < 1e-12 * scale)
        assert np.all(s.jacobian > 0)


def test_planar_controls_give_flat_patch(torus16, rng):
    st_ = torus16.stencil(5)
    C = np.array(torus16.mesh.vertices)
    A = np.array([[2.0, 0.3, 0.0], [0.1, 1.5, 0.0], [0.0, 0.0, 0.0]])
    planar = C @ A.T + np.array([1.0, -2.0, 0.5])
    s = evaluate_patch(st_, planar, _random_params(rng, 40))
    np.testing.assert_allclose(s.position[:, 2], 0.5, atol=1e-13)
    np.testing.assert_allclose(s.mean_curvature, 0.0, atol=1e-10)
    np.testing.assert_allclose(np.abs(s.normal[:, 2]), 1.0, atol=1e-14)


def test_twice_refined_torus_near_analytic(torus64, rng):
    R, r = 3.0, 1.0
    params = _random_params(rng, 20)
    for p in rng.choice(torus64.n_patches, 30, replace=False):
        x = torus64.evaluate(int(p), params).position
        rho = np.hypot(x[:, 0], x[:, 1])
        # distance to the nearest analytic torus point, relative to that point's position
        d = np.abs(np.hypot(rho - R, x[:, 2]) - r)
        nearest = np.linalg.norm(x, axis=1) + d
        assert np.max(d / nearest) < 0.01


def _edge_params(t, which):
    t = np.asarray(t)
    return {0: np.column_stack([t, 0 * t]),          # origin -> stencil[1]
            1: np.column_stack([1 - t, t]),          # stencil[1] -> stencil[2]
            2: np.column_stack([0 * t, 1 - t])}[which]  # stencil[2] -> origin


@pytest.mark.parametrize("mesh", [shapes.torus(3, 1, 12, 8), subdivide(shapes.octahedron(), 1)],
                         ids=["regular", "irregular"])
def test_continuity_across_shared_edges(mesh):
    surf = LimitSurface(mesh)
    t = np.linspace(0.05, 0.95, 7)
    edge_owner = {}
    for p in range(surf.n_patches):
        c = surf.corner_vertices(p)
        for k in range(3):
            a, b = int(c[k]), int(c[(k + 1) % 3])
            edge_owner[(a, b)] = (p, k)
    checked = 0
    for (a, b), (p, k) in edge_owner.items():
        q, kq = edge_owner[(b, a)]
        sp = surf.evaluate(p, _edge_params(t, k))
        sq = surf.evaluate(q, _edge_params(t[::-1], kq))
        np.testing.assert_allclose(sp.position, sq.position, atol=1e-12)
        np.testing.assert_allclose(sp.normal, sq.normal, atol=1e-10)
        checked += 1
    assert checked == 3 * surf.n_patches


@pytest.mark.parametrize("patch", [0, 3, 40])
def test_derivatives_match_finite_differences(sphere2, patch):
    h = 1e-5
    x0 = np.array([0.3, 0.25])
    s = sphere2.evaluate(patch, x0)
    fd_v = (sphere2.evaluate(patch, x0 + [h, 0]).position - sphere2.evaluate(patch, x0 - [h, 0]).position) / (2 * h)
    fd_w = (sphere2.evaluate(patch, x0 + [0, h]).position - sphere2.evaluate(patch, x0 - [0, h]).position) / (2 * h)
    assert np.linalg.norm(fd_v - s.dr_dv) < 1e-6 * np.linalg.norm(s.dr_dv)
    assert np.linalg.norm(fd_w - s.dr_dw) < 1e-6 * np.linalg.norm(s.dr_dw)
    n_fd = np.cross(fd_v, fd_w)
    np.testing.assert_allclose(n_fd / np.linalg.norm(n_fd), s.normal, atol=1e-6)


def test_refinement_leaves_limit_surface_unchanged():
    areas = [surface_area(LimitSurface(subdivide(shapes.torus(3, 1, 12, 8), k)), 6) for k in range(3)]
    assert max(areas) - min(areas) < 1e-6 * areas[0]


def test_projected_sphere_area_converges():
    err = [abs(surface_area(LimitSurface(shapes.sphere(1.0, k)), 8) - 4 * np.pi) for k in (1, 2, 3)]
    assert err[0] > err[1] > err[2]
    assert err[2] < 0.05 * 4 * np.pi


def test_sigma_of_sphere():
    surf = LimitSurface(shapes.sphere(2.0, 3, fit_limit=True))
    # sigma is a maximum, so the valence-4 patches set it a few percent above 1/a
    assert max_mean_curvature(surf, 6) == pytest.approx(0.5, rel=0.05)


def test_gauss_bonnet_double_torus(double_torus):
    _, K = integrated_curvatures(double_torus, 8)
    assert K == pytest.approx(2 * np.pi * (2 - 2 * 2), rel=0.02)


def test_degenerate_jacobian_raises(torus16):
    collapsed = np.zeros_like(torus16.mesh.vertices)
    with pytest.raises(DegenerateJacobianError):
        evaluate_patch(torus16.stencil(0), collapsed, np.array([0.2, 0.2]))


def test_parameters_outside_domain_rejected(torus16):
    with pytest.raises(ValueError):
        torus16.evaluate(0, np.array([0.8, 0.8]))


@pytest.mark.parametrize("n", [3, 4, 5, 8])
def test_eigen_powers_match_repeated_subdivision(n):
    vd = valence_data(n)
    np.testing.assert_allclose(vd.power(7), np.linalg.matrix_power(vd.A, 7), atol=1e-11)


def test_two_extraordinary_corners_rejected():
    with pytest.raises(ValueError):
        LimitSurface(shapes.octahedron())


@settings(max_examples=25, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.sampled_from([3, 4, 5, 6, 7]))
def test_partition_of_unity_property(v, w, n):
    if v + w > 1:
        v, w = 1 - v, 1 - w
    B = patch_basis(n, np.array([[v, w]]), 0)[0]
    assert abs(B.sum() - 1.0) < 1e-12
    assert B.min() > -1e-12
