"""Scalar Loop basis functions, the local vector families J1 = grad xi and
J2 = n x grad xi, the stiffness Gram matrix and zero-mean solves.

All surface integrals go through a :class:`BasisSet`, which holds sparse
evaluation operators mapping a coefficient vector over control vertices to
values at every quadrature point of the limit surface.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as spla

from .errors import IncompatibleRhsError, NonConvergenceError, QuadratureDivergenceError
from .subdivision import LimitSurface, PatchStencil, SurfaceQuadrature

__all__ = [
    "BasisSet",
    "StiffnessGram",
    "scalar_basis_eval",
    "vector_basis_eval",
    "assemble_stiffness_gram",
    "assemble_cross_gram",
    "solve_gram_zero_mean",
    "stencil_gradients",
    "stencil_laplacian",
]

GRAM_TOL = 1e-11
DEFAULT_ORDER = 12


def stencil_gradients(basis, geo) -> np.ndarray:
    """Surface gradients (..., S, 3) of every stencil function.

    ``basis`` arrays may be shared (Q, S) or per point (..., Q, S); ``geo``
    arrays are (..., Q, ...).
    """
    _, Bv, Bw = basis[:3]
    gi = geo["ginv"]
    cv = gi[..., 0, 0][..., None] * Bv + gi[..., 0, 1][..., None] * Bw
    cw = gi[..., 1, 0][..., None] * Bv + gi[..., 1, 1][..., None] * Bw
    return cv[..., None] * geo["rv"][..., None, :] + cw[..., None] * geo["rw"][..., None, :]


def stencil_laplacian(basis, geo) -> np.ndarray:
    """Laplace-Beltrami g^ij (d_ij - Gamma^k_ij d_k) of every stencil function (..., S)."""
    _, Bv, Bw, Bvv, Bvw, Bww = basis
    gi = geo["ginv"]
    tang = (geo["rv"], geo["rw"])
    sec = {(0, 0): geo["rvv"], (0, 1): geo["rvw"], (1, 1): geo["rww"]}
    av = 0.0
    aw = 0.0
    for (i, j), rij in sec.items():
        mult = 1.0 if i == j else 2.0
        cov = np.stack([np.einsum("...d,...d->...", t, rij) for t in tang], -1)
        chris = np.einsum("...kl,...l->...k", gi, cov)
        av = av - mult * gi[..., i, j] * chris[..., 0]
        aw = aw - mult * gi[..., i, j] * chris[..., 1]
    return (gi[..., 0, 0][..., None] * Bvv + 2 * gi[..., 0, 1][..., None] * Bvw
            + gi[..., 1, 1][..., None] * Bww + av[..., None] * Bv + aw[..., None] * Bw)


def _point_operators(q: SurfaceQuadrature, n_vertices: int):
    """Sparse operators (Npts x Nv) for xi, its surface gradient (3) and its Laplace-Beltrami."""
    rows, cols, val, gx, gy, gz, lap = [], [], [], [], [], [], []
    offset = 0
    for b in q.blocks:
        P, S = b.idx.shape
        Q = len(b.weights)
        B = b.basis[0]
        grad = stencil_gradients(b.basis, b.geo)
        lp = stencil_laplacian(b.basis, b.geo)
        r = offset + np.arange(P * Q).reshape(P, Q)
        rows.append(np.broadcast_to(r[..., None], (P, Q, S)).ravel())
        cols.append(np.broadcast_to(b.idx[:, None, :], (P, Q, S)).ravel())
        val.append(np.broadcast_to(B, (P, Q, S)).ravel())
        gx.append(grad[..., 0].ravel())
        gy.append(grad[..., 1].ravel())
        gz.append(grad[..., 2].ravel())
        lap.append(lp.ravel())
        offset += P * Q
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    shape = (offset, n_vertices)

    def mk(data):
        return sparse.csr_matrix((np.concatenate(data), (rows, cols)), shape=shape)

    return mk(val), (mk(gx), mk(gy), mk(gz)), mk(lap)


class BasisSet:
    """Scalar basis xi_n (one per control vertex) and the J1/J2 families on a quadrature.

    Point arrays (``points``, ``normals``, ``dA``) are flattened over all
    quadrature points; the sparse operators act on coefficient vectors of
    length ``n_vertices``.
    """

    def __init__(self, surface: LimitSurface, quad_order: int = DEFAULT_ORDER, levels: int = 16):
        if quad_order < 1:
            raise ValueError("quad_order must be >= 1")
        self.surface = surface
        self.quad_order = quad_order
        self.levels = levels
        self.quad = surface.quadrature(quad_order, levels)
        self.n_vertices = surface.n_vertices
        self.points = self.quad.points
        self.normals = self.quad.normals
        self.dA = self.quad.dA
        self.point_patch = self.quad.point_patch
        self.value_op, self.grad_op, self.lap_op = _point_operators(self.quad, self.n_vertices)

    @property
    def n_points(self) -> int:
        return len(self.dA)

    @cached_property
    def rot_op(self):
        """Operators for n x grad xi, one per Cartesian component."""
        gx, gy, gz = self.grad_op
        nx, ny, nz = (sparse.diags(self.normals[:, k]) for k in range(3))
        return (ny @ gz - nz @ gy, nz @ gx - nx @ gz, nx @ gy - ny @ gx)

    # -- fields at points ---------------------------------------------------
    def gradient(self, a) -> np.ndarray:
        """Sum a_n J1_n at all points (Npts, 3)."""
        return np.stack([D @ a for D in self.grad_op], axis=-1)

    def rotated_gradient(self, a) -> np.ndarray:
        """Sum a_n J2_n at all points (Npts, 3)."""
        return np.stack([D @ a for D in self.rot_op], axis=-1)

    def scalar(self, a) -> np.ndarray:
        return self.value_op @ a

    def laplacian(self, a) -> np.ndarray:
        return self.lap_op @ a

    # -- tested inner products ---------------------------------------------
    def test_gradient(self, F) -> np.ndarray:
        """<J1_n, F> for every n, F given at the points (Npts, 3), real or complex."""
        wF = F * self.dA[:, None]
        return sum(D.T @ wF[:, k] for k, D in enumerate(self.grad_op))

    def test_rotated(self, F) -> np.ndarray:
        """<J2_n, F> for every n."""
        wF = F * self.dA[:, None]
        return sum(D.T @ wF[:, k] for k, D in enumerate(self.rot_op))

    def inner(self, F, G) -> float:
        """Unconjugated L2 pairing of two point fields."""
        return np.sum(self.dA * np.einsum("nd,nd->n", F, G))

    def norm(self, F) -> float:
        return float(np.sqrt(np.sum(self.dA * np.einsum("nd,nd->n", F, np.conj(F)).real)))

    def tangential(self, F) -> np.ndarray:
        """-n x n x F = F - (F.n) n."""
        n = self.normals
        return F - np.einsum("nd,nd->n", F, n)[:, None] * n

    def cross_normal(self, F) -> np.ndarray:
        return np.cross(self.normals, F)

    # -- single-function evaluation ------------------------------------------
    def support(self, n: int) -> np.ndarray:
        """Patches on which xi_n is not identically zero."""
        return np.array([p for p, s in enumerate(self.surface.stencils) if n in s])


def _stencil_position(stencil: PatchStencil, n: int):
    hit = np.nonzero(stencil.vertices == n)[0]
    return int(hit[0]) if len(hit) else None


def scalar_basis_eval(surface: LimitSurface, n: int, patch: int, param):
    """``(xi_n, surface gradient of xi_n)`` at ``param`` of ``patch``."""
    st = surface.stencil(patch)
    k = _stencil_position(st, n)
    param = np.atleast_2d(np.asarray(param, dtype=float))
    if k is None:
        return np.zeros(len(param)).squeeze(), np.zeros((len(param), 3)).squeeze()
    idx, basis, geo = surface.geometry_at(np.full(len(param), patch), param)
    gi = geo["ginv"]
    bv, bw = basis[1][:, k], basis[2][:, k]
    cv = gi[:, 0, 0] * bv + gi[:, 0, 1] * bw
    cw = gi[:, 1, 0] * bv + gi[:, 1, 1] * bw
    grad = cv[:, None] * geo["rv"] + cw[:, None] * geo["rw"]
    return basis[0][:, k].squeeze(), grad.squeeze()


def vector_basis_eval(surface: LimitSurface, n: int, kind: int, patch: int, param):
    """J1_n (kind 1) or J2_n (kind 2) at ``param`` of ``patch``."""
    if kind not in (1, 2):
        raise ValueError("kind must be 1 or 2")
    _, grad = scalar_basis_eval(surface, n, patch, param)
    if kind == 1:
        return grad
    param = np.atleast_2d(np.asarray(param, dtype=float))
    _, _, geo = surface.geometry_at(np.full(len(param), patch), param)
    return np.cross(geo["normal"], np.atleast_2d(grad)).squeeze()


@dataclass
class StiffnessGram:
    """Sparse symmetric gamma_mn = <grad xi_m, grad xi_n>, PSD with the constants as nullspace."""

    matrix: sparse.csr_matrix
    quad_order: int
    _factor: object = field(default=None, repr=False)

    @property
    def shape(self):
        return self.matrix.shape

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def factor(self):
        """LU of the bordered system [[gamma, 1], [1^T, 0]] (symmetric, no pinning)."""
        if self._factor is None:
            n = self.n
            ones = sparse.csc_matrix(np.ones((n, 1)))
            K = sparse.bmat([[self.matrix, ones], [ones.T, None]], format="csc")
            self._factor = spla.splu(K)
        return self._factor

    def solve(self, rhs, tol: float = GRAM_TOL, strict: bool = True, scale: float | None = None):
        return solve_gram_zero_mean(self, rhs, tol=tol, strict=strict, scale=scale)


def assemble_stiffness_gram(basis: BasisSet, quad_order: int | None = None, check: bool = True) -> StiffnessGram:
    """Stiffness Gram matrix on ``basis``'s surface.

    With ``check`` the matrix is recomputed at ``quad_order + 2`` and a
    relative change above 1e-8 raises :class:`QuadratureDivergenceError`.
    """
    if quad_order is not None and quad_order != basis.quad_order:
        basis = BasisSet(basis.surface, quad_order, basis.levels)
    if basis.quad_order < 4:
        raise ValueError("quad_order must be >= 4 for Gram assembly")
    gamma = _gram(basis.grad_op, basis.grad_op, basis.dA)
    gamma = (0.5 * (gamma + gamma.T)).tocsr()
    if check:
        finer = BasisSet(basis.surface, basis.quad_order + 2, basis.levels)
        g2 = _gram(finer.grad_op, finer.grad_op, finer.dA)
        change = abs(g2 - gamma).max() / abs(gamma).max()
        if change > 1e-8:
            raise QuadratureDivergenceError(
                f"Gram entries change by {change:.2e} relative when raising the order to {basis.quad_order + 2}")
    return StiffnessGram(gamma, basis.quad_order)


def assemble_cross_gram(basis: BasisSet) -> sparse.csr_matrix:
    """C_mn = <J1_m, J2_n>; vanishes on a closed surface."""
    return _gram(basis.grad_op, basis.rot_op, basis.dA).tocsr()


def _gram(A, B, dA):
    W = sparse.diags(dA)
    out = None
    for a, b in zip(A, B):
        term = a.T @ W @ b
        out = term if out is None else out + term
    return out


def solve_gram_zero_mean(gram: StiffnessGram, rhs, tol: float = GRAM_TOL, strict: bool = True,
                         maxiter: int = 200, scale: float | None = None) -> np.ndarray:
    """Zero-mean solution of ``gamma x = rhs``.

    Conjugate gradients on the constant-free subspace, preconditioned by the
    bordered LU factorization. With ``strict`` a right-hand side with a
    constant component above 1e-8 relative (to ``scale``, default the norm of
    ``rhs``) raises; otherwise it is removed.
    Complex and multi-column right-hand sides are accepted.
    """
    b = np.asarray(rhs)
    if b.ndim == 2:
        return np.column_stack([solve_gram_zero_mean(gram, b[:, k], tol, strict, maxiter, scale)
                                for k in range(b.shape[1])])
    if np.iscomplexobj(b):
        scale = np.linalg.norm(b) if scale is None else scale
        return (solve_gram_zero_mean(gram, b.real, tol, strict, maxiter, scale)
                + 1j * solve_gram_zero_mean(gram, b.imag, tol, strict, maxiter, scale))
    b = b.astype(float)
    n = gram.n
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(n)
    mean_part = abs(b.sum()) / (np.sqrt(n) * max(bnorm, scale or 0.0))
    if strict and mean_part > 1e-8:
        raise IncompatibleRhsError(f"right-hand side has a constant component ({mean_part:.2e} relative)")
    b = b - b.mean()
    lu = gram.factor()
    G = gram.matrix

    def proj(x):
        return x - x.mean()

    A = spla.LinearOperator((n, n), matvec=lambda x: proj(G @ proj(x)), dtype=float)
    M = spla.LinearOperator((n, n), matvec=lambda r: proj(lu.solve(np.append(proj(r), 0.0))[:n]), dtype=float)
    x0 = M @ b
    x, info = spla.cg(A, b, x0=x0, rtol=tol, atol=0.0, M=M, maxiter=maxiter)
    x = proj(x)
    res = np.linalg.norm(proj(G @ x) - b) / np.linalg.norm(b)
    if info != 0 or res > max(tol, 1e-14) * 10:
        raise NonConvergenceError(f"Gram solve stalled at relative residual {res:.2e}")
    return x
