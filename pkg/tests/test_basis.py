import numpy as np
import pytest
from scipy import sparse

from helpers import partition_of_unity_error, random_params, support_boundary_values
from loophodge.basis import (BasisSet, assemble_cross_gram, assemble_stiffness_gram, scalar_basis_eval,
                             solve_gram_zero_mean, vector_basis_eval)
from loophodge.errors import IncompatibleRhsError, QuadratureDivergenceError


@pytest.mark.parametrize("name", ["sphere2", "double_torus", "torus16"])
def test_partition_of_unity(name, request, rng):
    assert partition_of_unity_error(request.getfixturevalue(name), rng, 2000) < 1e-12


def test_basis_nonnegative(sphere2, rng):
    _, basis = sphere2.basis_at(rng.integers(0, sphere2.n_patches, 2000), random_params(rng, 2000), 0)
    assert basis[0].min() > -1e-14


@pytest.mark.parametrize("name", ["sphere2", "torus16"])
def test_zero_on_support_boundary(name, request):
    surf = request.getfixturevalue(name)
    vals, grads = support_boundary_values(surf, range(0, surf.n_vertices, 7))
    assert vals < 1e-10 and grads < 1e-10


def test_outside_stencil_is_zero(torus16):
    st = torus16.stencils[0]
    outside = next(v for v in range(torus16.n_vertices) if v not in st)
    val, grad = scalar_basis_eval(torus16, outside, 0, np.array([[0.2, 0.3]]))
    assert val == 0 and np.all(grad == 0)


def test_vector_basis_pointwise(sphere2, rng):
    for patch in (0, 10, 100):
        n = int(sphere2.stencils[patch][1])
        params = random_params(rng, 30)
        j1 = vector_basis_eval(sphere2, n, 1, patch, params)
        j2 = vector_basis_eval(sphere2, n, 2, patch, params)
        nrm = sphere2.evaluate(patch, params).normal
        scale = np.linalg.norm(j1, axis=1)
        assert np.all(np.abs(np.einsum("nd,nd->n", j1, nrm)) < 1e-12 * scale)
        np.testing.assert_allclose(np.linalg.norm(j2, axis=1), scale, rtol=1e-12)
        assert np.all(np.abs(np.einsum("nd,nd->n", j1, j2)) < 1e-12 * scale ** 2)
    with pytest.raises(ValueError):
        vector_basis_eval(sphere2, 0, 3, 0, params)


@pytest.mark.parametrize("name", ["sphere2_ctx", "torus16_ctx", "double_torus_ctx"])
def test_stiffness_gram_properties(name, request):
    ctx = request.getfixturevalue(name)
    G = ctx.gram.matrix
    scale = abs(G).max()
    assert abs(G - G.T).max() == 0.0
    assert np.abs(G @ np.ones(G.shape[0])).max() < 1e-10 * scale
    # sparsity limited to overlapping supports
    S = sparse.lil_matrix(G.shape, dtype=bool)
    for s in ctx.surface.stencils:
        S[np.ix_(s, s)] = True
    rows, cols = G.nonzero()
    assert np.all(S.tocsr()[rows, cols])


def test_gram_nullspace_dimension_one(sphere2_ctx):
    w = np.linalg.eigvalsh(sphere2_ctx.gram.matrix.toarray())
    assert abs(w[0]) < 1e-12 * w[-1]
    assert w[1] > 1e-6 * w[-1]


def test_j1_j2_cross_gram_vanishes(double_torus_ctx):
    C = assemble_cross_gram(double_torus_ctx.basis)
    scale = abs(double_torus_ctx.gram.matrix).max()
    assert abs(C).max() < 1e-10 * scale
    assert abs(C + C.T).max() < 1e-10 * scale


def test_rotated_family_has_same_gram(torus16_ctx):
    b = torus16_ctx.basis
    W = sparse.diags(b.dA)
    G22 = sum(r.T @ W @ r for r in b.rot_op)
    G = torus16_ctx.gram.matrix
    assert abs(G22 - G).max() < 1e-10 * abs(G).max()


def test_discrete_divergence_consistency(torus16_ctx, rng):
    b, G = torus16_ctx.basis, torus16_ctx.gram.matrix
    a = rng.standard_normal(b.n_vertices)
    np.testing.assert_allclose(b.test_gradient(b.gradient(a)), G @ a, rtol=0, atol=1e-10 * np.abs(G @ a).max())


def test_constants_reproduced(sphere2_ctx):
    b = sphere2_ctx.basis
    np.testing.assert_allclose(b.scalar(np.ones(b.n_vertices)), 1.0, atol=1e-13)
    # relative to the largest single gradient (graded points near a valence-4 vertex reach ~2**16)
    scale = max(abs(D).max() for D in b.grad_op)
    assert np.abs(b.gradient(np.ones(b.n_vertices))).max() < 1e-13 * scale


def test_zero_mean_solver(torus16_ctx, rng):
    gram = torus16_ctx.gram
    n = gram.n
    assert np.all(solve_gram_zero_mean(gram, np.zeros(n)) == 0)
    x = rng.standard_normal(n)
    x -= x.mean()
    y = gram.solve(gram.matrix @ x)
    assert np.abs(y - x).max() < 1e-9 * np.abs(x).max()
    assert abs(y.sum()) < 1e-10 * np.abs(y).max()
    res = np.linalg.norm(gram.matrix @ y - gram.matrix @ x) / np.linalg.norm(gram.matrix @ x)
    assert res <= 1e-10
    with pytest.raises(IncompatibleRhsError):
        gram.solve(np.ones(n))


def test_quadrature_divergence_detected(torus16):
    with pytest.raises(QuadratureDivergenceError):
        assemble_stiffness_gram(BasisSet(torus16, 4))
    with pytest.raises(ValueError):
        assemble_stiffness_gram(BasisSet(torus16, 3), check=False)
