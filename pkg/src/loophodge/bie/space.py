"""The discrete current space seen by the integral operators.

Unknowns are ordered [J1 (Nv), J2 (Nv), J3 (g), J4 (g)]. On a patch the
supported functions are the stencil's J1 and J2 functions plus all 2g
harmonic fields; :func:`local_fields` evaluates them at arbitrary patch
parameters, which both the far-field point rule and the near-field pair
quadrature build on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .. import quadrature
from ..basis import stencil_gradients, stencil_laplacian
from ..harmonic import HarmonicBasis
from ..subdivision import LimitSurface, _geometry, irregular_rule, patch_basis

__all__ = ["CurrentSpace", "LocalFields", "local_fields", "FarRule"]


@dataclass
class LocalFields:
    """Function values at points of a batch of patches sharing one valence.

    Shapes: ``pos``/``normal`` (P, Q, 3), ``wdA`` (P, Q), ``funcs``
    (P, Q, L, 3), ``div`` (P, Q, L), ``gidx`` (P, L) global unknown indices.
    """

    pos: np.ndarray
    normal: np.ndarray
    wdA: np.ndarray
    funcs: np.ndarray
    div: np.ndarray
    gidx: np.ndarray


class CurrentSpace:
    """Current basis on a limit surface: J1/J2 from the stencils, J3/J4 from ``harmonics``."""

    def __init__(self, surface: LimitSurface, harmonics: HarmonicBasis | None = None):
        self.surface = surface
        self.harmonics = harmonics
        self.nv = surface.n_vertices
        self.g = 0 if harmonics is None else harmonics.g
        self.size = 2 * self.nv + 2 * self.g
        c = surface.mesh.vertices
        self.centroids = np.array([c[s[:3]].mean(axis=0) for s in surface.stencils])
        self.radii = np.array([np.linalg.norm(c[s[:3]] - m, axis=1).max()
                               for s, m in zip(surface.stencils, self.centroids)])

    def family_slices(self):
        nv, g = self.nv, self.g
        return (slice(0, nv), slice(nv, 2 * nv), slice(2 * nv, 2 * nv + g), slice(2 * nv + g, 2 * nv + 2 * g))

    def global_index(self, idx: np.ndarray) -> np.ndarray:
        """Global unknown indices (P, 2S + 2g) for stencils ``idx`` (P, S)."""
        P = len(idx)
        h = np.broadcast_to(2 * self.nv + np.arange(2 * self.g), (P, 2 * self.g))
        return np.concatenate([idx, self.nv + idx, h], axis=1)

    def rotation_signs(self):
        """Signed permutation R with n x J_k = sum R[k, l] J_l (J1->J2, J2->-J1, J3->J4, J4->-J3)."""
        nv, g = self.nv, self.g
        perm = np.concatenate([np.arange(nv, 2 * nv), np.arange(nv), 2 * nv + g + np.arange(g), 2 * nv + np.arange(g)])
        sign = np.concatenate([np.ones(nv), -np.ones(nv), np.ones(g), -np.ones(g)])
        # (R X)[k] = sign[k] * X[perm[k]]
        return perm, sign

    def rotate_rows(self, X):
        perm, sign = self.rotation_signs()
        return sign[:, None] * X[perm] if X.ndim == 2 else sign * X[perm]


def local_fields(space: CurrentSpace, valence: int, patches, params, weights=None) -> LocalFields:
    """Evaluate every supported function at ``params`` (Q, 2) on each of ``patches``.

    ``weights`` are parameter-domain quadrature weights (Q,); ``wdA`` then
    includes the surface Jacobian.
    """
    surf = space.surface
    patches = np.asarray(patches)
    idx = np.array([surf.stencils[p] for p in patches])
    basis = patch_basis(valence, params, 2)
    geo = _geometry(basis, surf.mesh.vertices[idx], shared=True)
    grads = stencil_gradients(basis, geo)
    lap = stencil_laplacian(basis, geo)
    n = geo["normal"]
    rot = np.cross(n[..., None, :], grads)
    parts = [grads, rot]
    divs = [lap, np.zeros_like(lap)]
    g = space.g
    if g:
        h = space.harmonics
        P, Q = n.shape[:2]
        flat_pos = geo["r"].reshape(-1, 3)
        flat_n = n.reshape(-1, 3)
        F = np.stack([f(flat_pos, flat_n).reshape(P, Q, 3) for f in h.fields], axis=2)   # (P, Q, g, 3)
        A1 = np.ascontiguousarray(h.a1[:, idx].transpose(1, 2, 0))                      # (P, S, g)
        A2 = np.ascontiguousarray(h.a2[:, idx].transpose(1, 2, 0))
        exact = (grads.transpose(0, 1, 3, 2) @ A1[:, None]) + (rot.transpose(0, 1, 3, 2) @ A2[:, None])
        j3 = F - exact.transpose(0, 1, 3, 2)
        parts += [j3, np.cross(n[..., None, :], j3)]
        divs += [np.zeros((P, Q, 2 * g))]
    funcs = np.concatenate(parts, axis=2)
    div = np.concatenate(divs, axis=2)
    wdA = geo["jac"] if weights is None else geo["jac"] * weights
    return LocalFields(geo["r"], n, wdA, funcs, div, space.global_index(idx))


class FarRule:
    """Global point rule with sparse (Npts x N) function-value matrices.

    ``vals[d]`` holds component d of every function at every point and
    ``div`` their surface divergences; ``weights`` include the Jacobian.
    """

    def __init__(self, space: CurrentSpace, order: int = 8, levels: int = 5, order_step: int = 2):
        self.space = space
        self.order = order
        self.levels = levels
        self.order_step = order_step
        pos, nrm, pid, w = [], [], [], []
        rows, cols, vals, divs = [], [], [], []
        loc = []
        offset = 0
        for n, (patches, _) in space.surface.groups.items():
            if n == 6:
                params, weights = quadrature.triangle_rule(order)
            else:
                params, weights = irregular_rule(order, levels, order_step)
            lf = local_fields(space, n, patches, params, weights)
            P, Q, L = lf.funcs.shape[:3]
            pos.append(lf.pos.reshape(-1, 3))
            nrm.append(lf.normal.reshape(-1, 3))
            pid.append(np.repeat(patches, Q))
            w.append(lf.wdA.ravel())
            r = offset + np.arange(P * Q).reshape(P, Q)
            rows.append(np.broadcast_to(r[..., None], (P, Q, L)).ravel())
            cols.append(np.broadcast_to(lf.gidx[:, None, :], (P, Q, L)).ravel())
            vals.append(lf.funcs.reshape(-1, 3))
            divs.append(lf.div.ravel())
            loc.append((np.repeat(lf.gidx, Q, axis=0),
                        np.concatenate([lf.funcs, lf.div[..., None]], axis=-1).reshape(P * Q, L, 4)))
            offset += P * Q
        self.points = np.concatenate(pos)
        self.normals = np.concatenate(nrm)
        self.patch = np.concatenate(pid)
        self.weights = np.concatenate(w)
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        v = np.concatenate(vals)
        shape = (offset, space.size)

        def mk(data):
            m = sparse.csr_matrix((data, (rows, cols)), shape=shape)
            m.eliminate_zeros()
            return m

        self.vals = [mk(v[:, d]) for d in range(3)]
        self.div = mk(np.concatenate(divs))
        # per-point padded layout for the fused kernels
        Lmax = max(g.shape[1] for g, _ in loc)
        self.local_index = np.zeros((offset, Lmax), dtype=np.int64)
        self.local_values = np.zeros((offset, Lmax, 4))
        self.local_count = np.zeros(offset, dtype=np.int64)
        r0 = 0
        for g, fv in loc:
            n, L = g.shape
            self.local_index[r0:r0 + n, :L] = g
            self.local_values[r0:r0 + n, :L] = fv
            self.local_count[r0:r0 + n] = L
            r0 += n

    @property
    def n_points(self) -> int:
        return len(self.weights)

    def weighted(self, mats):
        W = sparse.diags(self.weights)
        return [(W @ m).tocsr() for m in mats]

    def cross_position(self, origin):
        """Components of (J(x) x (x - origin)) as sparse matrices."""
        p = self.points - origin
        vx, vy, vz = self.vals

        def D(k):
            return sparse.diags(p[:, k])

        return [D(2) @ vy - D(1) @ vz,
                D(0) @ vz - D(2) @ vx,
                D(1) @ vx - D(0) @ vy]

    def packed(self, origin) -> np.ndarray:
        """Weighted per-point values (Npts, L, 7): [jx, jy, jz, div, J x (x - origin)]."""
        v = self.local_values * self.weights[:, None, None]
        c = np.cross(v[..., :3], (self.points - origin)[:, None, :])
        return np.concatenate([v, c], axis=-1)

    def current(self, x) -> np.ndarray:
        """Point values (Npts, 3) of the current with coefficients ``x``."""
        return np.stack([m @ x for m in self.vals], axis=-1)
