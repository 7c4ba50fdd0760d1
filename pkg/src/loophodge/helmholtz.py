"""Helmholtz decomposition of tangential fields and the analytic torus test fields.

A tangential field J is split as

    J = sum a1_n grad xi_n + sum a2_n n x grad xi_n + sum (a3_i J3_i + a4_i J4_i)

with each family found by its own Gram solve (the families are mutually
orthogonal, so no coupled system is needed).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import BasisSet, StiffnessGram, assemble_stiffness_gram
from .errors import SingularFieldError
from .harmonic import HarmonicBasis, build_harmonic_basis
from .mesh import genus
from .subdivision import LimitSurface

__all__ = [
    "TangentialField",
    "HelmholtzCoefficients",
    "HelmholtzContext",
    "FIELD_TAGS",
    "analytic_test_field",
    "decompose",
    "component_norms",
    "reconstruct",
    "norm_table",
]

FIELD_TAGS = ("xd", "xc", "xh", "nxh", "composite")


@dataclass(frozen=True)
class TangentialField:
    """Field evaluated from surface points and unit normals; ``tag`` names analytic fields."""

    func: object
    tag: str = "external"

    def __call__(self, points, normals) -> np.ndarray:
        return self.func(np.asarray(points, dtype=float), np.asarray(normals, dtype=float))


def _tangential(F, n):
    return F - np.einsum("nd,nd->n", F, n)[:, None] * n


def _xd(p, n):
    return _tangential(p, n)


def _xh(p, n):
    t = np.column_stack([p[:, 1], -p[:, 0], np.zeros(len(p))])
    tt = np.einsum("nd,nd->n", t, t)
    if np.any(np.sqrt(tt) < 1e-12):
        raise SingularFieldError("t = y x - x y vanishes at a sample (surface meets the z axis)")
    return _tangential(t / tt[:, None], n)


def analytic_test_field(tag: str) -> TangentialField:
    """X_d = -n x n x r, X_c = n x X_d, X_h = -n x n x t/|t|^2, n x X_h, or their sum."""
    tag = tag.lower().replace("_", "").replace("ncrossxh", "nxh")
    if tag == "xd":
        f = _xd
    elif tag == "xc":
        def f(p, n):
            return np.cross(n, _xd(p, n))
    elif tag == "xh":
        f = _xh
    elif tag == "nxh":
        def f(p, n):
            return np.cross(n, _xh(p, n))
    elif tag in ("composite", "xbar", "all"):
        tag = "composite"

        def f(p, n):
            xd, xh = _xd(p, n), _xh(p, n)
            return xd + np.cross(n, xd) + xh + np.cross(n, xh)
    else:
        raise ValueError(f"unknown field tag {tag!r}")
    return TangentialField(f, tag)


@dataclass(frozen=True)
class HelmholtzCoefficients:
    a1: np.ndarray
    a2: np.ndarray
    a3: np.ndarray
    a4: np.ndarray

    def __mul__(self, s):
        return HelmholtzCoefficients(self.a1 * s, self.a2 * s, self.a3 * s, self.a4 * s)

    __rmul__ = __mul__

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.a1, self.a2, self.a3, self.a4])

    @classmethod
    def from_vector(cls, x, n_vertices: int, g: int) -> "HelmholtzCoefficients":
        n = n_vertices
        return cls(x[:n], x[n:2 * n], x[2 * n:2 * n + g], x[2 * n + g:2 * n + 2 * g])


class HelmholtzContext:
    """Basis, stiffness Gram and harmonic fields assembled once per surface."""

    def __init__(self, surface: LimitSurface, quad_order: int | None = None, seed: int | None = None,
                 check_quadrature: bool = True):
        from .basis import DEFAULT_ORDER
        from .harmonic import DEFAULT_SEED

        self.surface = surface
        self.basis = BasisSet(surface, quad_order or DEFAULT_ORDER)
        self.gram: StiffnessGram = assemble_stiffness_gram(self.basis, check=check_quadrature)
        self.genus = genus(surface.topology)
        self.seed = DEFAULT_SEED if seed is None else seed
        self.harmonics: HarmonicBasis = build_harmonic_basis(self.basis, self.gram, self.genus, self.seed)

    @property
    def n_vertices(self) -> int:
        return self.basis.n_vertices


def _field_values(field, basis: BasisSet):
    if isinstance(field, TangentialField) or callable(field):
        return field(basis.points, basis.normals)
    return np.asarray(field)


def decompose(field, basis: BasisSet, gram: StiffnessGram, harmonics: HarmonicBasis,
              tol: float = 1e-11) -> HelmholtzCoefficients:
    """Helmholtz coefficients of ``field`` (callable or values at ``basis`` points)."""
    F = _field_values(field, basis)
    v1 = basis.test_gradient(F)
    v2 = basis.test_rotated(F)
    # Cauchy-Schwarz bound on the tested vectors, a scale that survives v1 = v2 = 0
    scale = basis.norm(F) * np.sqrt(gram.matrix.diagonal().sum())
    a1 = gram.solve(v1, tol=tol, scale=scale)
    a2 = gram.solve(v2, tol=tol, scale=scale)
    g = harmonics.g
    if g:
        H = harmonics.values(basis)
        rhs = np.einsum("knd,nd,n->k", H, F, basis.dA)
        h = harmonics.solve(rhs)
    else:
        h = np.zeros(0, dtype=F.dtype)
    return HelmholtzCoefficients(a1, a2, h[:g], h[g:])


def components(coeffs: HelmholtzCoefficients, basis: BasisSet, harmonics: HarmonicBasis):
    """The four reconstructed component fields at ``basis`` points."""
    c1 = basis.gradient(coeffs.a1)
    c2 = basis.rotated_gradient(coeffs.a2)
    if harmonics.g:
        j3 = harmonics.j3(basis)
        c3 = np.einsum("k,knd->nd", coeffs.a3, j3)
        c4 = np.einsum("k,knd->nd", coeffs.a4, np.cross(basis.normals, j3))
    else:
        c3 = np.zeros_like(c1)
        c4 = np.zeros_like(c1)
    return c1, c2, c3, c4


def component_norms(coeffs: HelmholtzCoefficients, basis: BasisSet, harmonics: HarmonicBasis) -> np.ndarray:
    """L2 norms of the four reconstructed components."""
    return np.array([basis.norm(c) for c in components(coeffs, basis, harmonics)])


def reconstruct(coeffs: HelmholtzCoefficients, basis: BasisSet, harmonics: HarmonicBasis) -> TangentialField:
    """Expansion as a field; it evaluates on the points of ``basis`` (or of a BasisSet
    passed through ``field.on(other)``)."""
    values = sum(components(coeffs, basis, harmonics))

    def f(points, normals):
        if len(points) != basis.n_points:
            raise ValueError("reconstructed fields evaluate on the quadrature points they were built on")
        return values

    return TangentialField(f, "reconstructed")


def norm_table(ctx: HelmholtzContext, tags=("xd", "xc", "xh", "nxh")):
    """Rows = recovered component (J1..J4), columns = input field."""
    table = np.zeros((4, len(tags)))
    coeffs = {}
    for j, tag in enumerate(tags):
        c = decompose(analytic_test_field(tag), ctx.basis, ctx.gram, ctx.harmonics)
        coeffs[tag] = c
        table[:, j] = component_norms(c, ctx.basis, ctx.harmonics)
    return table, coeffs
