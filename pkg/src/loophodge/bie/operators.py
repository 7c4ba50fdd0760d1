"""Galerkin matrices of the T and K operators and the block Gram matrix.

With the rotation map R (n x J1 = J2, n x J2 = -J1, n x J3 = J4, n x J4 = -J3)
both operators reduce to symmetric cores:

    E_k[a, b] = jk <<G_k a . b>> - (j/k) <<G_k div a div b>>
    M_k[a, b] = <<g_k a(x) . ((x - y) x b(y))>>

    T_k = R E_k            (T J = n x E^s[J] / eta)
    K   = G/2 + R M_k      (tested I/2 - K with K J = n x p.v. grad G x J)

where <<.>> is the double surface integral. Far pairs use a global point
rule; near pairs use :mod:`loophodge.bie.near`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.spatial.distance import cdist

from ..basis import StiffnessGram
from ..harmonic import HarmonicBasis
from . import kernels
from .kernels import far_assemble_blocks, far_kernels
from .near import NearConfig, accumulate_near, classify_pairs, near_mask
from .space import CurrentSpace, FarRule

__all__ = [
    "QuadratureConfig",
    "OperatorMatrix",
    "Assembler",
    "assemble_T",
    "assemble_K",
    "block_gram",
    "localize_calderon",
    "support_distances",
]


@dataclass(frozen=True)
class QuadratureConfig:
    far_order: int = 8
    far_levels: int = 5
    far_order_step: int = 2
    near: NearConfig = field(default_factory=NearConfig)
    chunk: int = 1024


@dataclass
class OperatorMatrix:
    matrix: np.ndarray
    kind: str
    kappa: complex = 0.0

    @property
    def shape(self):
        return self.matrix.shape

    def __matmul__(self, x):
        return self.matrix @ x


class Assembler:
    """Shared quadrature data for assembling cores on one current space."""

    def __init__(self, space: CurrentSpace, config: QuadratureConfig | None = None):
        self.space = space
        self.config = config or QuadratureConfig()
        self.far = FarRule(space, self.config.far_order, self.config.far_levels, self.config.far_order_step)
        self.groups = classify_pairs(space, self.config.near.near_factor)
        self.near = near_mask(space, self.groups)
        W = sparse.diags(self.far.weights)
        self.origin = self.far.points.mean(axis=0)
        self.vw = [(W @ v).tocsr() for v in self.far.vals]
        self.dw = (W @ self.far.div).tocsr()
        self.cw = [(W @ c).tocsr() for c in self.far.cross_position(self.origin)]

    def cores(self, k1, k2=None, want=("E1", "E2", "M")):
        """Dense cores: ``E1`` at k1, ``E2`` at k2, ``M`` at k1."""
        k1 = complex(k1)
        k2 = k1 if k2 is None else complex(k2)
        N = self.space.size
        out = {name: np.zeros((N, N), dtype=complex) for name in ("E1", "E2", "M")}
        far = self.far
        if kernels.USE_NUMBA:
            far_assemble_blocks(far.points, far.patch, self.near, far.local_index, far.local_count, far.packed(self.origin),
                               k1, k2, want, out["E1"], out["E2"], out["M"])
        else:
            self._far_numpy(k1, k2, want, out)
        accumulate_near(self.space, self.groups, k1, k2, self.config.near, out["E1"], out["E2"], out["M"],
                        want=want)
        return {k: v for k, v in out.items() if k in want}

    def _far_numpy(self, k1, k2, want, out):
        N = self.space.size
        far = self.far
        x, px = far.points, far.patch
        src_e = sparse.vstack([v.T for v in self.vw] + [self.dw.T]).tocsr()
        src_m = sparse.vstack([v.T for v in self.vw] + [c.T for c in self.cw]).tocsr()
        step = self.config.chunk
        for i0 in range(0, far.n_points, step):
            i1 = min(i0 + step, far.n_points)
            # kernels are reciprocal, so sources-by-tests layout keeps the sparse products contiguous
            G1, G2, g1 = far_kernels(x, px, x[i0:i1], px[i0:i1], self.near, k1, k2)
            tv = [v[i0:i1].T.tocsr() for v in self.vw]
            td = self.dw[i0:i1].T.tocsr()
            for name, G, k in (("E1", G1, k1), ("E2", G2, k2)):
                if name not in want:
                    continue
                P = src_e @ G  # (4N, rows)
                acc = sum(tv[d] @ np.ascontiguousarray(P[d * N:(d + 1) * N].T) for d in range(3))
                out[name] += 1j * k * acc - (1j / k) * (td @ np.ascontiguousarray(P[3 * N:].T))
            if "M" in want:
                P = src_m @ g1  # (6N, rows)
                tc = [c[i0:i1].T.tocsr() for c in self.cw]
                acc = sum(tc[d] @ np.ascontiguousarray(P[d * N:(d + 1) * N].T)
                          + tv[d] @ np.ascontiguousarray(P[(3 + d) * N:(4 + d) * N].T) for d in range(3))
                out["M"] += acc

    def T(self, kappa) -> OperatorMatrix:
        E = self.cores(kappa, kappa, want=("E1",))["E1"]
        return OperatorMatrix(self.space.rotate_rows(E), "T", complex(kappa))

    def K(self, kappa, gram) -> OperatorMatrix:
        M = self.cores(kappa, kappa, want=("M",))["M"]
        return OperatorMatrix(0.5 * gram + self.space.rotate_rows(M), "K", complex(kappa))

    def operators(self, kappa, kappa_p, gram):
        """``(T_kappa, T_kappa', K_kappa)`` from a single pass over the point pairs."""
        c = self.cores(kappa, kappa_p)
        rot = self.space.rotate_rows
        return (OperatorMatrix(rot(c["E1"]), "T", complex(kappa)),
                OperatorMatrix(rot(c["E2"]), "T", complex(kappa_p)),
                OperatorMatrix(0.5 * gram + rot(c["M"]), "K", complex(kappa)))


def block_gram(space: CurrentSpace, gram: StiffnessGram, harmonics: HarmonicBasis | None) -> np.ndarray:
    """Dense block-diagonal Gram [gamma, gamma, G_harmonic] on the current ordering."""
    N = space.size
    G = np.zeros((N, N))
    s1, s2, s3, s4 = space.family_slices()
    g = gram.matrix.toarray()
    G[s1, s1] = g
    G[s2, s2] = g
    if space.g:
        G[2 * space.nv:, 2 * space.nv:] = harmonics.gram
    return G


def assemble_T(kappa, space: CurrentSpace, config: QuadratureConfig | None = None,
               assembler: Assembler | None = None) -> OperatorMatrix:
    return (assembler or Assembler(space, config)).T(kappa)


def assemble_K(kappa, space: CurrentSpace, gram_matrix, config: QuadratureConfig | None = None,
               assembler: Assembler | None = None) -> OperatorMatrix:
    return (assembler or Assembler(space, config)).K(kappa, gram_matrix)


def support_distances(space: CurrentSpace) -> np.ndarray:
    """Minimum centroid distance between the supports of every pair of scalar basis functions."""
    surf = space.surface
    supp = [[] for _ in range(space.nv)]
    for p, s in enumerate(surf.stencils):
        for v in s:
            supp[v].append(p)
    D = cdist(space.centroids, space.centroids)
    Dn = np.array([D[s].min(axis=0) for s in supp])          # (Nv, F)
    return np.array([Dn[:, s].min(axis=1) for s in supp])    # (Nv, Nv)


def localize_calderon(T: OperatorMatrix, space: CurrentSpace, cutoff: float,
                      distances: np.ndarray | None = None) -> OperatorMatrix:
    """Zero local-local entries whose supports are farther apart than ``cutoff``.

    Harmonic rows and columns are global and never truncated.
    """
    if not np.isfinite(cutoff):
        return OperatorMatrix(T.matrix.copy(), T.kind, T.kappa)
    D = support_distances(space) if distances is None else distances
    far = D > cutoff
    nv = space.nv
    mask = np.zeros(T.shape, dtype=bool)
    block = np.tile(far, (2, 2))
    mask[:2 * nv, :2 * nv] = block
    out = T.matrix.copy()
    out[mask] = 0.0
    return OperatorMatrix(out, T.kind + "_local", T.kappa)


def _patch_rule(surface, patch, order, levels, order_step=0):
    from .. import quadrature
    from ..subdivision import irregular_rule

    n = int(surface.valence[patch])
    return (quadrature.triangle_rule(order) if n == 6 else irregular_rule(order, levels, order_step)), n


def pair_block(space: CurrentSpace, p: int, q: int, kappa, order: int = 8, levels: int = 5, order_step: int = 2):
    """Cores (E, M) restricted to test patch ``p`` and source patch ``q`` by a plain product rule.

    Returns the local blocks and the global indices of their rows and
    columns. Only meaningful for patches that do not touch.
    """
    from .kernels import pair_kernels
    from .space import local_fields

    (pp, wp), n_p = _patch_rule(space.surface, p, order, levels, order_step)
    (pq, wq), n_q = _patch_rule(space.surface, q, order, levels, order_step)
    a = local_fields(space, n_p, [p], pp, wp)
    b = local_fields(space, n_q, [q], pq, wq)
    x, y = a.pos[0], b.pos[0]
    fa, fb = a.funcs[0], b.funcs[0]
    L = fa.shape[1]
    A = np.zeros((L, fb.shape[1]), dtype=complex)
    S = np.zeros_like(A)
    M = np.zeros_like(A)
    # test points in chunks keep the (rows, Q, L, 3) cross products small
    step = max(1, 2_000_000 // (len(y) * fb.shape[1] * 3))
    for i0 in range(0, len(x), step):
        xi = x[i0:i0 + step]
        G, _, g = pair_kernels(xi[None], np.broadcast_to(y[None], (len(xi),) + y.shape)[None], kappa, kappa)
        W = a.wdA[0][i0:i0 + step, None] * b.wdA[0][None, :]
        KG, Kg = W * G[0], W * g[0]
        A += np.einsum("iad,ij,jbd->ab", fa[i0:i0 + step], KG, fb, optimize=True)
        S += np.einsum("ia,ij,jb->ab", a.div[0][i0:i0 + step], KG, b.div[0], optimize=True)
        d = xi[:, None, :] - y[None, :, :]
        M += np.einsum("iad,ij,ijbd->ab", fa[i0:i0 + step], Kg, np.cross(d[:, :, None, :], fb[None, :, :, :]),
                       optimize=True)
    E = 1j * kappa * A - (1j / kappa) * S
    return E, M, a.gidx[0], b.gidx[0]
