"""Shared numerical checks used by several test modules."""

import numpy as np

from loophodge.basis import scalar_basis_eval


def random_params(rng, n):
    p = rng.random((n, 2))
    flip = p.sum(axis=1) > 1
    p[flip] = 1 - p[flip]
    return p


def partition_of_unity_error(surface, rng, n_samples=10_000):
    patches = rng.integers(0, surface.n_patches, n_samples)
    _, basis = surface.basis_at(patches, random_params(rng, n_samples), 0)
    return float(np.abs(basis[0].sum(axis=1) - 1.0).max())


def _edge_params(t, k):
    return {0: np.column_stack([t, 0 * t]), 1: np.column_stack([1 - t, t]), 2: np.column_stack([0 * t, 1 - t])}[k]


def support_boundary_values(surface, vertices, n_t=9):
    """Max |xi_n| and |grad xi_n| on the boundary edges of each vertex's support."""
    t = np.linspace(0.0, 1.0, n_t)
    faces = [tuple(int(v) for v in surface.corner_vertices(p)) for p in range(surface.n_patches)]
    owner = {}
    for p, c in enumerate(faces):
        for k in range(3):
            owner[(c[k], c[(k + 1) % 3])] = p
    vmax = gmax = 0.0
    for n in vertices:
        support = {p for p, s in enumerate(surface.stencils) if n in s}
        for p in support:
            c = faces[p]
            for k in range(3):
                q = owner[(c[(k + 1) % 3], c[k])]
                if q in support:
                    continue
                val, grad = scalar_basis_eval(surface, n, p, _edge_params(t, k))
                vmax = max(vmax, float(np.abs(val).max()))
                gmax = max(gmax, float(np.abs(grad).max()))
    return vmax, gmax
