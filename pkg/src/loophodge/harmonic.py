"""Harmonic (global loop) fields on a genus-g limit surface.

Each of ``g`` random tangential polynomial fields F is stripped of its
curl-free and divergence-free parts by two zero-mean Gram solves; the
remainder J3 = F - grad(a1) - n x grad(a2) is harmonic in the Galerkin sense
and J4 = n x J3 supplies the other ``g`` fields.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import legendre

from .basis import BasisSet, StiffnessGram
from .errors import LinearDependenceError

__all__ = [
    "RandomPolyField",
    "HarmonicBasis",
    "legendre_degree",
    "control_box",
    "make_random_fields",
    "project_out_exact_subspaces",
    "rotate_harmonic",
    "assemble_harmonic_gram",
    "build_harmonic_basis",
]

DEFAULT_SEED = 20240607
COND_LIMIT = 1e8


def legendre_degree(g: int) -> int:
    """Total degree bound ceil((2g)**(1/3)) + 5."""
    c = 0
    while c ** 3 < 2 * g:
        c += 1
    return c + 5


def control_box(vertices, inflate: float = 0.05):
    """Axis-aligned box of the control points, grown by ``inflate`` of its extent."""
    v = np.asarray(vertices, dtype=float)
    lo, hi = v.min(axis=0), v.max(axis=0)
    pad = 0.5 * inflate * (hi - lo)
    return lo - pad, hi + pad


@dataclass(frozen=True)
class RandomPolyField:
    """V(r) with components sum c[a, b, z] P_a(x~) P_b(y~) P_z(z~), x~ = (x - lo_x) / (2 L_x)."""

    seed: int
    coefficients: np.ndarray  # (3, D+1, D+1, D+1), zero beyond total degree D
    lo: np.ndarray
    extent: np.ndarray

    @property
    def degree(self) -> int:
        return self.coefficients.shape[1] - 1

    def volume_field(self, points) -> np.ndarray:
        p = (np.asarray(points, dtype=float) - self.lo) / (2.0 * self.extent)
        d = self.degree
        vx = legendre.legvander(p[:, 0], d)
        vy = legendre.legvander(p[:, 1], d)
        vz = legendre.legvander(p[:, 2], d)
        c = self.coefficients
        t = (vz @ c.reshape(-1, d + 1).T).reshape(len(p), 3, d + 1, d + 1)   # sum over z
        t = np.einsum("nkab,nb->nka", t, vy)
        return np.einsum("nka,na->nk", t, vx)

    def __call__(self, points, normals) -> np.ndarray:
        """Tangential field -n x n x V at surface points."""
        V = self.volume_field(points)
        return V - np.einsum("nd,nd->n", V, normals)[:, None] * normals


def make_random_fields(g: int, seed: int = DEFAULT_SEED, bbox=None) -> list[RandomPolyField]:
    """``g`` fields with coefficients i.i.d. uniform on [-1, 1]."""
    if g < 1:
        raise ValueError("g must be >= 1")
    if bbox is None:
        raise ValueError("bbox is required")
    lo, hi = (np.asarray(b, dtype=float) for b in bbox)
    extent = hi - lo
    extent = np.where(extent > 0, extent, 1.0)
    d = legendre_degree(g)
    a, b, z = np.meshgrid(*(np.arange(d + 1),) * 3, indexing="ij")
    mask = (a + b + z) <= d
    rng = np.random.default_rng(seed)
    fields = []
    for _ in range(g):
        c = rng.uniform(-1.0, 1.0, size=(3, d + 1, d + 1, d + 1)) * mask
        c.setflags(write=False)
        fields.append(RandomPolyField(seed, c, lo, extent))
    return fields


@dataclass
class HarmonicBasis:
    """J3_i = F_i - grad(a1_i) - n x grad(a2_i) and J4_i = n x J3_i, i < g.

    Stored in deferred form; :meth:`j3` and :meth:`j4` evaluate on any
    :class:`BasisSet` over the same surface. ``gram`` is the joint 2g x 2g
    matrix [[G33, G34], [G43, G44]].
    """

    fields: list
    a1: np.ndarray  # (g, Nv)
    a2: np.ndarray  # (g, Nv)
    gram: np.ndarray
    seed: int

    @property
    def g(self) -> int:
        return len(self.fields)

    @property
    def dimension(self) -> int:
        return 2 * self.g

    def j3(self, basis: BasisSet) -> np.ndarray:
        """(g, Npts, 3) values of J3 on ``basis``'s quadrature points."""
        out = np.empty((self.g, basis.n_points, 3))
        for i, F in enumerate(self.fields):
            out[i] = F(basis.points, basis.normals) - basis.gradient(self.a1[i]) - basis.rotated_gradient(self.a2[i])
        return out

    def j4(self, basis: BasisSet) -> np.ndarray:
        return rotate_harmonic(self.j3(basis), basis.normals)

    def values(self, basis: BasisSet) -> np.ndarray:
        """(2g, Npts, 3): J3_1..J3_g then J4_1..J4_g."""
        if self.g == 0:
            return np.zeros((0, basis.n_points, 3))
        j3 = self.j3(basis)
        return np.concatenate([j3, rotate_harmonic(j3, basis.normals)])

    @property
    def blocks(self):
        g = self.g
        G = self.gram
        return G[:g, :g], G[:g, g:], G[g:, :g], G[g:, g:]

    @property
    def condition_number(self) -> float:
        return float(np.linalg.cond(self.gram)) if self.g else 1.0

    def solve(self, rhs):
        return np.linalg.solve(self.gram, rhs)


def project_out_exact_subspaces(field: RandomPolyField, basis: BasisSet, gram: StiffnessGram, tol: float = 1e-11):
    """Coefficients ``(a1, a2)`` of the curl-free and divergence-free parts of ``field``."""
    F = field(basis.points, basis.normals)
    a1 = gram.solve(basis.test_gradient(F), tol=tol)
    a2 = gram.solve(basis.test_rotated(F), tol=tol)
    return a1, a2


def rotate_harmonic(j3, normals) -> np.ndarray:
    """J4 = n x J3 pointwise; ``j3`` shaped (..., Npts, 3)."""
    return np.cross(normals, j3)


def assemble_harmonic_gram(values, basis: BasisSet, cond_limit: float = COND_LIMIT) -> np.ndarray:
    """Joint Gram of the harmonic fields given as (2g, Npts, 3) point values."""
    w = values * np.sqrt(basis.dA)[None, :, None]
    flat = w.reshape(len(values), -1)
    G = flat @ flat.T
    G = 0.5 * (G + G.T)
    if len(G):
        c = np.linalg.cond(G)
        if not np.isfinite(c) or c > cond_limit:
            raise LinearDependenceError(f"harmonic Gram condition number {c:.3e} exceeds {cond_limit:.0e}")
    return G


def build_harmonic_basis(basis: BasisSet, gram: StiffnessGram, g: int, seed: int = DEFAULT_SEED,
                         max_reseed: int = 5, tol: float = 1e-11) -> HarmonicBasis:
    """Construct the 2g harmonic fields, reseeding on a near-dependent draw."""
    nv = basis.n_vertices
    if g == 0:
        return HarmonicBasis([], np.zeros((0, nv)), np.zeros((0, nv)), np.zeros((0, 0)), seed)
    box = control_box(basis.surface.mesh.vertices)
    last = None
    for attempt in range(max_reseed + 1):
        s = seed + attempt
        fields = make_random_fields(g, s, box)
        a1 = np.empty((g, nv))
        a2 = np.empty((g, nv))
        for i, F in enumerate(fields):
            a1[i], a2[i] = project_out_exact_subspaces(F, basis, gram, tol)
        hb = HarmonicBasis(fields, a1, a2, np.zeros((2 * g, 2 * g)), s)
        try:
            hb.gram = assemble_harmonic_gram(hb.values(basis), basis)
        except LinearDependenceError as exc:
            last = exc
            continue
        return hb
    raise LinearDependenceError(f"reseeding exhausted after {max_reseed + 1} draws: {last}")
