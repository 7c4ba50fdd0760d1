"""Exact evaluation of Loop limit surfaces.

Regular patches (all three corners of valence 6) are quartic box-spline
patches over their 12-vertex stencil. A patch with one extraordinary corner
of valence ``n`` is evaluated by splitting its parameter domain into nested
tiles around that corner: the tile at depth ``k`` is a regular patch whose
controls are ``P_j A^(k-1)`` applied to the ``n + 6`` stencil vertices, with
``A`` the local subdivision matrix (powers taken through its
eigendecomposition when it is well conditioned).

All local matrices are produced by running the global refinement code on a
small synthetic stencil mesh, so the masks live in exactly one place
(:func:`loophodge.mesh.subdivision_matrix`).

Patch parameters ``(v, w)`` live in the unit triangle; ``(0, 0)`` is the
patch origin (``stencil[0]``), ``(1, 0)`` is ``stencil[1]`` and ``(0, 1)`` is
``stencil[2]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
from scipy import sparse

from . import quadrature
from .errors import DegenerateJacobianError
from .mesh import ControlMesh, Topology, build_topology, loop_beta, patch_stencil_arrays, subdivision_matrix

__all__ = [
    "regular_basis",
    "ValenceData",
    "valence_data",
    "patch_basis",
    "irregular_rule",
    "PatchStencil",
    "SurfaceSample",
    "LimitSurface",
    "QuadBlock",
    "SurfaceQuadrature",
    "evaluate_patch",
    "surface_area",
    "max_mean_curvature",
    "integrated_curvatures",
    "limit_point_matrix",
]

# Box-spline basis of a regular patch in the canonical stencil order, as
# coefficients (times 12) of the monomials v**i * w**j listed in _MONOMIALS.
_MONOMIALS = [(0, 0), (0, 1), (1, 0), (0, 2), (1, 1), (2, 0), (0, 3), (1, 2), (2, 1), (3, 0),
              (0, 4), (1, 3), (2, 2), (3, 1), (4, 0)]
_BOX_SPLINE_12 = np.array([
    [6, 0, 0, -12, -12, -12, 8, 12, 12, 8, -1, -2, 0, -2, -1],
    [1, 2, 4, 0, 6, 6, -4, -12, -6, -4, 2, 4, 0, -2, -1],
    [1, 4, 2, 6, 6, 0, -4, -6, -12, -4, -1, -2, 0, 4, 2],
    [1, 2, -2, 0, -6, 0, -4, 0, 6, 2, 2, 4, 0, -2, -1],
    [1, -2, -4, 0, 6, 6, 2, 0, -6, -4, -1, -2, 0, 2, 1],
    [1, -4, -2, 6, 6, 0, -4, -6, 0, 2, 1, 2, 0, -2, -1],
    [1, -2, 2, 0, -6, 0, 2, 6, 0, -4, -1, -2, 0, 4, 2],
    [0, 0, 0, 0, 0, 0, 0, 0, 0, 2, 0, 0, 0, -2, -1],
    [0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 2, 1],
    [0, 0, 0, 0, 0, 0, 2, 6, 6, 2, -1, -2, 0, -2, -1],
    [0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 2, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 2, 0, 0, 0, -1, -2, 0, 0, 0],
], dtype=float) / 12.0
_EV = np.array([i for i, _ in _MONOMIALS])
_EW = np.array([j for _, j in _MONOMIALS])

# child tiles of a patch: parent = T @ child + t
_CHILD_MAPS = (
    (np.eye(2) / 2, np.zeros(2)),                        # corner child at the origin
    (np.eye(2) / 2, np.array([0.5, 0.0])),               # child at stencil[1]
    (np.eye(2) / 2, np.array([0.0, 0.5])),               # child at stencil[2]
    (np.array([[0.0, -0.5], [0.5, 0.5]]), np.array([0.5, 0.0])),  # middle child
)
_CHILD_INV = tuple((np.linalg.inv(T), t) for T, t in _CHILD_MAPS)

MAX_DEPTH = 48


def _monomials(v, w, nderiv):
    """Monomials and their derivatives, each shaped (..., 15)."""
    v = np.asarray(v, dtype=float)[..., None]
    w = np.asarray(w, dtype=float)[..., None]
    pv = [np.ones_like(v), v, v * v, v ** 3, v ** 4]
    pw = [np.ones_like(w), w, w * w, w ** 3, w ** 4]

    def term(dv, dw):
        out = []
        for i, j in _MONOMIALS:
            if i < dv or j < dw:
                out.append(np.zeros(np.broadcast_shapes(v.shape, w.shape)))
                continue
            c = 1.0
            for k in range(dv):
                c *= i - k
            for k in range(dw):
                c *= j - k
            out.append(c * pv[i - dv] * pw[j - dw])
        return np.concatenate(out, axis=-1)

    res = [term(0, 0)]
    if nderiv >= 1:
        res += [term(1, 0), term(0, 1)]
    if nderiv >= 2:
        res += [term(2, 0), term(1, 1), term(0, 2)]
    return res


def regular_basis(params, nderiv: int = 2):
    """Box-spline values for a regular patch.

    Returns a list ``[B, Bv, Bw, Bvv, Bvw, Bww]`` (truncated per ``nderiv``),
    each shaped ``params.shape[:-1] + (12,)``.
    """
    params = np.asarray(params, dtype=float)
    mons = _monomials(params[..., 0], params[..., 1], nderiv)
    return [m @ _BOX_SPLINE_12.T for m in mons]


# -- local subdivision matrices -----------------------------------------------

def _local_faces(n: int) -> np.ndarray:
    """Synthetic stencil mesh whose labels are the canonical stencil order."""
    a, b, c = 0, 1, 2
    x = list(range(3, n + 1))
    p, q, z, s, t = n + 1, n + 2, n + 3, n + 4, n + 5
    ring_a = [b, c] + x
    faces = [(a, ring_a[i], ring_a[(i + 1) % n]) for i in range(n)]
    faces += [(b, x[-1], p), (b, p, q), (b, q, z), (b, z, c),
              (c, z, s), (c, s, t), (c, t, x[0])]
    return np.array(faces)


class ValenceData:
    """Subdivision matrices for a patch whose origin has valence ``n``."""

    def __init__(self, n: int):
        if n < 3:
            raise ValueError("valence must be at least 3")
        self.n = n
        self.size = n + 6
        faces = _local_faces(n)
        top = Topology(faces, self.size, closed=False)
        S, fine_faces, valid = subdivision_matrix(top)
        fine = Topology(fine_faces, S.shape[0], closed=False)
        nf = len(faces)
        start, stencils = patch_stencil_arrays(fine, [0, nf, 2 * nf, 3 * nf])
        if np.any(start != 0) or not all(valid[s].all() for s in stencils):
            raise AssertionError("local stencil construction failed")
        S = S.tocsr()
        self.A = S[stencils[0]].toarray()
        self.picks = np.stack([S[s].toarray() for s in stencils[1:]])  # (3, 12, n+6)
        lam, vec = np.linalg.eig(self.A)
        self.eigenvalues = lam
        self._eig = None
        try:
            inv = np.linalg.inv(vec)
            err = np.abs((vec * lam) @ inv - self.A).max()
            if np.linalg.cond(vec) < 1e8 and err < 1e-12:
                self._eig = (vec, lam, inv)
        except np.linalg.LinAlgError:
            pass
        self._powers = {0: np.eye(self.size)}
        self._deflated = {}
        self._tiles = {}

    @property
    def uses_eigen(self) -> bool:
        return self._eig is not None

    def power(self, k: int) -> np.ndarray:
        """``A**k``: closed form through the eigenbasis, or repeated local subdivision."""
        if k in self._powers:
            return self._powers[k]
        if self._eig is not None:
            vec, lam, inv = self._eig
            P = np.real((vec * lam ** k) @ inv)
        else:
            P = self.A @ self.power(k - 1)
        self._powers[k] = P
        return P

    def tile_matrix(self, k: int, j: int) -> np.ndarray:
        """Controls (12, n+6) of tile ``j`` (0: at stencil[1], 1: at stencil[2], 2: middle) at depth ``k``."""
        key = (k, j)
        if key not in self._tiles:
            self._tiles[key] = self.picks[j] @ self.power(k - 1)
        return self._tiles[key]

    def deflated_power(self, k: int) -> np.ndarray:
        """``(A - 1 l^T)**k = A**k - 1 l^T`` with ``l`` the limit mask, without the cancellation."""
        if k not in self._deflated:
            if k == 0:
                D = np.eye(self.size) - np.outer(np.ones(self.size), self.limit_weights)
            else:
                D = self.deflated_power(1) @ self.deflated_power(k - 1) if k > 1 else \
                    self.A - np.outer(np.ones(self.size), self.limit_weights)
            self._deflated[k] = D
        return self._deflated[k]

    def tile_derivative_matrix(self, k: int, j: int) -> np.ndarray:
        """Tile controls with the constant part removed, for derivative rows.

        Derivatives annihilate constants, so ``d @ tile_matrix == d @ this``
        analytically; deep tiles keep their relative accuracy this way.
        """
        key = ("d", k, j)
        if key not in self._tiles:
            self._tiles[key] = self.picks[j] @ self.deflated_power(k - 1)
        return self._tiles[key]

    @cached_property
    def limit_weights(self) -> np.ndarray:
        """Weights over the stencil giving the limit position of the origin."""
        w = np.zeros(self.size)
        n = self.n
        chi = 1.0 / (n + 3.0 / (8.0 * float(loop_beta(n))))
        w[0] = 1.0 - n * chi
        w[1:n + 1] = chi
        return w


@lru_cache(maxsize=None)
def valence_data(n: int) -> ValenceData:
    return ValenceData(n)


def patch_basis(n: int, params, nderiv: int = 2):
    """Basis values and parameter derivatives for the stencil of a valence-``n`` patch.

    Returns ``[B, Bv, Bw, Bvv, Bvw, Bww]`` (truncated per ``nderiv``), each of
    shape ``(N, n + 6)`` for ``N`` parameter points.
    """
    params = np.atleast_2d(np.asarray(params, dtype=float))
    if n == 6:
        return regular_basis(params, nderiv)
    data = valence_data(n)
    npts = len(params)
    nout = 1 + 2 * (nderiv >= 1) + 3 * (nderiv >= 2)
    out = [np.zeros((npts, data.size)) for _ in range(nout)]
    v = params[:, 0].copy()
    w = params[:, 1].copy()
    s = v + w
    floor = 2.0 ** (-MAX_DEPTH)
    tiny = s < floor
    if np.any(tiny):
        # nudge points at the extraordinary vertex itself onto the diagonal
        # keep the direction v : w; divide first so denormal inputs cannot overflow
        safe = np.where(s > 0, s, 1.0)
        v = np.where(tiny, np.where(s > 0, (v / safe) * floor, 0.5 * floor), v)
        w = np.where(tiny, np.where(s > 0, (w / safe) * floor, 0.5 * floor), w)
        s = v + w
    depth = np.maximum(1, np.ceil(-np.log2(s)).astype(int))
    depth = np.minimum(depth, MAX_DEPTH)
    sc = 2.0 ** (depth - 1)
    vs, ws = v * sc, w * sc
    child = np.where(vs >= 0.5, 0, np.where(ws >= 0.5, 1, 2))
    for k in np.unique(depth):
        for j in range(3):
            sel = np.nonzero((depth == k) & (child == j))[0]
            if len(sel) == 0:
                continue
            Tinv, t = _CHILD_INV[j + 1]
            loc = (np.column_stack([vs[sel], ws[sel]]) - t) @ Tinv.T
            cb = regular_basis(loc, nderiv)
            M = data.tile_matrix(int(k), j)
            Md = data.tile_derivative_matrix(int(k), j) if nderiv >= 1 else None
            # parent-parameter derivative = (scale * Tinv)^T child derivative
            J = Tinv * 2.0 ** (k - 1)
            out[0][sel] = cb[0] @ M
            if nderiv >= 1:
                dv, dw = cb[1] @ Md, cb[2] @ Md
                out[1][sel] = J[0, 0] * dv + J[1, 0] * dw
                out[2][sel] = J[0, 1] * dv + J[1, 1] * dw
            if nderiv >= 2:
                hvv, hvw, hww = cb[3] @ Md, cb[4] @ Md, cb[5] @ Md
                a, b, c, d = J[0, 0], J[0, 1], J[1, 0], J[1, 1]
                # H_parent = J^T H_child J
                out[3][sel] = a * a * hvv + 2 * a * c * hvw + c * c * hww
                out[4][sel] = a * b * hvv + (a * d + b * c) * hvw + c * d * hww
                out[5][sel] = b * b * hvv + 2 * b * d * hvw + d * d * hww
    return out


@lru_cache(maxsize=None)
def irregular_rule(order: int, levels: int, order_step: int = 0):
    """Graded tile rule for a patch with an extraordinary origin.

    Depth-``k`` tiles (k = 1..levels) get a triangle rule of order
    ``max(2, order - order_step * (k - 1))`` each (smaller tiles need less);
    the remaining corner triangle of size ``2**-levels`` gets the last one.
    Returns parameter points and weights in the patch parameter domain.
    """
    all_p, all_w = [], []
    for k in range(1, levels + 1):
        pts, wts = quadrature.triangle_rule(max(2, order - order_step * (k - 1)))
        for T, t in _CHILD_MAPS[1:]:
            p = (pts @ T.T + t) * 2.0 ** (-(k - 1))
            all_p.append(p)
            all_w.append(wts * abs(np.linalg.det(T)) * 4.0 ** (-(k - 1)))
    h = 2.0 ** (-levels)
    all_p.append(pts * h)
    all_w.append(wts * h * h)
    p = np.concatenate(all_p)
    w = np.concatenate(all_w)
    p.setflags(write=False)
    w.setflags(write=False)
    return p, w


def limit_point_matrix(top: Topology):
    """Sparse map from control vertices to the limit positions of the same vertices."""
    n = top.valence.astype(float)
    chi = 1.0 / (n + 3.0 / (8.0 * loop_beta(n)))
    e = top.edge_vertices
    rows = np.concatenate([np.arange(top.n_vertices), e[:, 0], e[:, 1]])
    cols = np.concatenate([np.arange(top.n_vertices), e[:, 1], e[:, 0]])
    vals = np.concatenate([1.0 - n * chi, chi[e[:, 0]], chi[e[:, 1]]])
    return sparse.csr_matrix((vals, (rows, cols)), shape=(top.n_vertices, top.n_vertices))


# -- geometry ----------------------------------------------------------------

def _geometry(basis, C, shared: bool = False):
    """Differential geometry from basis arrays and controls.

    Pointwise: basis (N, S) with controls (N, S, 3). Shared: basis (Q, S)
    used by every patch of controls (P, S, 3), giving arrays (P, Q, ...).
    """
    if shared:
        r, rv, rw, rvv, rvw, rww = (b @ C for b in basis)
    else:
        r, rv, rw, rvv, rvw, rww = (np.einsum("ns,nsd->nd", b, C) for b in basis)
    cr = np.cross(rv, rw)
    jac = np.linalg.norm(cr, axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        nrm = cr / jac[..., None]
    E = np.einsum("...i,...i->...", rv, rv)
    F = np.einsum("...i,...i->...", rv, rw)
    G = np.einsum("...i,...i->...", rw, rw)
    det = E * G - F * F
    with np.errstate(invalid="ignore", divide="ignore"):
        ginv = np.stack([np.stack([G, -F], -1), np.stack([-F, E], -1)], -2) / det[..., None, None]
    L = np.einsum("...i,...i->...", rvv, nrm)
    M = np.einsum("...i,...i->...", rvw, nrm)
    N = np.einsum("...i,...i->...", rww, nrm)
    with np.errstate(invalid="ignore", divide="ignore"):
        H = 0.5 * (E * N - 2 * F * M + G * L) / det
        K = (L * N - M * M) / det
    return dict(r=r, rv=rv, rw=rw, rvv=rvv, rvw=rvw, rww=rww, normal=nrm, jac=jac,
                metric=np.stack([np.stack([E, F], -1), np.stack([F, G], -1)], -2),
                ginv=ginv, H=H, K=K)


@dataclass(frozen=True)
class PatchStencil:
    patch: int
    vertices: np.ndarray
    valence: int
    start: int

    @property
    def regular(self) -> bool:
        return self.valence == 6


@dataclass(frozen=True)
class SurfaceSample:
    """Limit-surface quantities at one or more parameter points of a patch."""

    position: np.ndarray
    dr_dv: np.ndarray
    dr_dw: np.ndarray
    normal: np.ndarray
    metric: np.ndarray
    inverse_metric: np.ndarray
    mean_curvature: np.ndarray
    gaussian_curvature: np.ndarray
    jacobian: np.ndarray
    second: tuple


def evaluate_patch(stencil: PatchStencil, controls, params) -> SurfaceSample:
    """Evaluate the limit surface of one patch at ``params`` ((2,) or (N, 2))."""
    if isinstance(controls, ControlMesh):
        controls = controls.vertices
    params = np.asarray(params, dtype=float)
    single = params.ndim == 1
    params = np.atleast_2d(params)
    if np.any(params < -1e-14) or np.any(params.sum(axis=1) > 1 + 1e-14):
        raise ValueError("parameters must lie in the unit triangle")
    basis = patch_basis(stencil.valence, params, 2)
    C = np.asarray(controls, dtype=float)[stencil.vertices]
    geo = _geometry(basis, C, shared=True)
    if np.any(~(geo["jac"] >= 1e-14)):
        raise DegenerateJacobianError(f"vanishing area element on patch {stencil.patch}")
    pick = (lambda a: a[0]) if single else (lambda a: a)
    return SurfaceSample(
        position=pick(geo["r"]), dr_dv=pick(geo["rv"]), dr_dw=pick(geo["rw"]),
        normal=pick(geo["normal"]), metric=pick(geo["metric"]), inverse_metric=pick(geo["ginv"]),
        mean_curvature=pick(geo["H"]), gaussian_curvature=pick(geo["K"]), jacobian=pick(geo["jac"]),
        second=(pick(geo["rvv"]), pick(geo["rvw"]), pick(geo["rww"])),
    )


@dataclass
class QuadBlock:
    """Quadrature data for all patches sharing one origin valence.

    Basis arrays are shared by every patch in the block (they only depend on
    the valence); geometry arrays are per patch and point, shape (P, Q, ...).
    """

    valence: int
    patches: np.ndarray
    idx: np.ndarray
    params: np.ndarray
    weights: np.ndarray
    basis: list
    geo: dict

    @property
    def dA(self) -> np.ndarray:
        return self.weights * self.geo["jac"]

    @property
    def n_points(self) -> int:
        return self.idx.shape[0] * len(self.weights)


class SurfaceQuadrature:
    """Quadrature over the whole limit surface, grouped in :class:`QuadBlock`."""

    def __init__(self, surface: "LimitSurface", order: int, levels: int):
        self.surface = surface
        self.order = order
        self.levels = levels
        self.blocks: list[QuadBlock] = []
        C = surface.mesh.vertices
        for n, (patches, idx) in surface.groups.items():
            if n == 6:
                params, weights = quadrature.triangle_rule(order)
            else:
                params, weights = irregular_rule(order, levels)
            basis = patch_basis(n, params, 2)
            geo = _geometry(basis, C[idx], shared=True)
            jac = geo["jac"]
            # relative to each patch: near valence 3 the area element genuinely decays like |s|^2
            if np.any(~(jac >= 1e-14 * jac.max(axis=-1, keepdims=True))) or np.any(~(jac.max(axis=-1) > 0)):
                raise DegenerateJacobianError("vanishing area element in quadrature")
            self.blocks.append(QuadBlock(n, patches, idx, params, weights, basis, geo))

    @property
    def n_points(self) -> int:
        return sum(b.n_points for b in self.blocks)

    def flat(self, key: str) -> np.ndarray:
        """Concatenate a geometry array over all blocks as (Npts, ...)."""
        out = []
        for b in self.blocks:
            a = b.geo[key]
            out.append(a.reshape((-1,) + a.shape[2:]))
        return np.concatenate(out)

    @property
    def points(self) -> np.ndarray:
        return self.flat("r")

    @property
    def normals(self) -> np.ndarray:
        return self.flat("normal")

    @property
    def dA(self) -> np.ndarray:
        return np.concatenate([b.dA.ravel() for b in self.blocks])

    @property
    def point_patch(self) -> np.ndarray:
        return np.concatenate([np.repeat(b.patches, len(b.weights)) for b in self.blocks])

    def integrate(self, values) -> float:
        values = np.asarray(values)
        dA = self.dA
        return np.tensordot(dA, values, axes=(0, 0))


class LimitSurface:
    """Loop limit surface of a control mesh.

    Every patch must touch at most one extraordinary vertex; use
    :meth:`from_mesh` with ``refine >= 1`` to guarantee that.
    """

    def __init__(self, mesh: ControlMesh):
        self.mesh = mesh
        self.topology = build_topology(mesh)
        start, stencils = patch_stencil_arrays(self.topology)
        self.start = start
        self.stencils = stencils
        self.valence = np.array([self.topology.valence[s[0]] for s in stencils])
        groups = {}
        for n in np.unique(self.valence):
            patches = np.nonzero(self.valence == n)[0]
            groups[int(n)] = (patches, np.array([stencils[p] for p in patches]))
        self.groups = groups
        self._quad = {}

    @classmethod
    def from_mesh(cls, mesh: ControlMesh, refine: int = 1) -> "LimitSurface":
        from .mesh import subdivide

        return cls(subdivide(mesh, refine) if refine else mesh)

    @property
    def n_patches(self) -> int:
        return self.mesh.n_faces

    @property
    def n_vertices(self) -> int:
        return self.mesh.n_vertices

    @property
    def n_irregular(self) -> int:
        return int(np.sum(self.valence != 6))

    def stencil(self, patch: int) -> PatchStencil:
        return PatchStencil(int(patch), self.stencils[patch], int(self.valence[patch]),
                            int(self.start[patch]))

    def corner_vertices(self, patch: int) -> np.ndarray:
        """Face corners in the patch parameter order (origin, (1,0), (0,1))."""
        return self.stencils[patch][:3]

    def param_from_face_barycentric(self, patch: int, bary) -> np.ndarray:
        """Map weights on ``faces[patch]`` corners (…, 3) to patch parameters (…, 2)."""
        bary = np.asarray(bary, dtype=float)
        order = (np.arange(3) + self.start[patch]) % 3
        b = bary[..., order]
        return b[..., 1:]

    def evaluate(self, patch: int, params) -> SurfaceSample:
        return evaluate_patch(self.stencil(patch), self.mesh.vertices, params)

    def basis_at(self, patches, params, nderiv: int = 2):
        """Stencil indices and basis arrays for arbitrary (patch, param) pairs.

        Returns ``(idx, basis)`` with ``idx`` (N, Smax) (padded with vertex 0
        and zero weights) and ``basis`` a list of (N, Smax) arrays.
        """
        patches = np.asarray(patches)
        params = np.atleast_2d(params)
        smax = max(len(s) for s in self.stencils)
        nout = 1 + 2 * (nderiv >= 1) + 3 * (nderiv >= 2)
        idx = np.zeros((len(patches), smax), dtype=np.int64)
        out = [np.zeros((len(patches), smax)) for _ in range(nout)]
        vals = self.valence[patches]
        for n in np.unique(vals):
            sel = np.nonzero(vals == n)[0]
            m = int(n) + 6
            idx[sel, :m] = np.array([self.stencils[p] for p in patches[sel]])
            b = patch_basis(int(n), params[sel], nderiv)
            for o, bb in zip(out, b):
                o[sel, :m] = bb
        return idx, out

    def geometry_at(self, patches, params):
        idx, basis = self.basis_at(patches, params, 2)
        geo = _geometry(basis, self.mesh.vertices[idx])
        return idx, basis, geo

    def quadrature(self, order: int = 6, levels: int = 16) -> SurfaceQuadrature:
        key = (order, levels)
        if key not in self._quad:
            self._quad[key] = SurfaceQuadrature(self, order, levels)
        return self._quad[key]

    @cached_property
    def bounding_box(self):
        v = self.mesh.vertices
        return v.min(axis=0), v.max(axis=0)


def _as_surface(mesh) -> LimitSurface:
    return mesh if isinstance(mesh, LimitSurface) else LimitSurface(mesh)


def surface_area(mesh, quad_order: int = 6, levels: int = 16) -> float:
    """Area of the limit surface."""
    if quad_order < 1:
        raise ValueError("quad_order must be >= 1")
    q = _as_surface(mesh).quadrature(quad_order, levels)
    return float(q.dA.sum())


def _sample_params(density: int) -> np.ndarray:
    """Centroids of the density**2 sub-triangles of a uniform split."""
    n = density
    pts = []
    for i in range(n):
        for j in range(n - i):
            pts.append(((i + 1 / 3) / n, (j + 1 / 3) / n))
            if i + j < n - 1:
                pts.append(((i + 2 / 3) / n, (j + 2 / 3) / n))
    return np.array(pts)


def max_mean_curvature(mesh, sample_density: int = 6) -> float:
    """Maximum |H| over a ``sample_density``-per-direction grid on every patch."""
    if sample_density < 1:
        raise ValueError("sample_density must be >= 1")
    surf = _as_surface(mesh)
    params = _sample_params(sample_density)
    best = 0.0
    for n, (patches, idx) in surf.groups.items():
        basis = patch_basis(n, params, 2)
        geo = _geometry(basis, surf.mesh.vertices[idx], shared=True)
        best = max(best, float(np.nanmax(np.abs(geo["H"]))))
    return best


def integrated_curvatures(mesh, quad_order: int = 6, levels: int = 16):
    """``(integral of |H|, integral of K)`` over the limit surface."""
    q = _as_surface(mesh).quadrature(quad_order, levels)
    dA = q.dA
    return float(dA @ np.abs(q.flat("H"))), float(dA @ q.flat("K"))
