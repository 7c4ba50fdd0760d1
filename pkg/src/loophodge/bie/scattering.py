"""End-to-end PEC scattering on a limit surface with the CC-CFIER system."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from ..helmholtz import HelmholtzContext
from ..subdivision import LimitSurface, max_mean_curvature
from .excitation import Excitation
from .farfield import radiated_far_field
from .operators import Assembler, QuadratureConfig, block_gram, localize_calderon
from .space import CurrentSpace
from .system import CalderonSystem, GramInverse, SolveResult, complexified_wavenumber, gmres_solve

__all__ = ["FORMULATIONS", "ScatteringConfig", "ScatteringProblem", "ScatteringSolution"]

FORMULATIONS = ("cccfier", "cccfier-no-gl")


@dataclass(frozen=True)
class ScatteringConfig:
    cutoff: float = 1.25            # Calderon localization distance in wavelengths
    tol: float = 1e-7
    gram_tol: float = 1e-11
    restart: int = 200
    max_iter: int = 1000
    quadrature: QuadratureConfig = field(default_factory=QuadratureConfig)
    gram_order: int | None = None
    seed: int | None = None


@dataclass
class ScatteringSolution:
    coefficients: np.ndarray
    iterations: int
    residual: float
    formulation: str
    problem: "ScatteringProblem"

    def current(self) -> np.ndarray:
        """Current (Npts, 3) at the far-rule points."""
        return self.problem.current(self.coefficients)

    def far_field(self, directions) -> np.ndarray:
        return self.problem.far_field(self.coefficients, directions)


class ScatteringProblem:
    """Operators for one surface and wavenumber; excitations and formulations share them."""

    def __init__(self, surface: LimitSurface, kappa: float, config: ScatteringConfig | None = None,
                 context: HelmholtzContext | None = None):
        self.config = config or ScatteringConfig()
        self.surface = surface
        self.kappa = float(kappa)
        self.wavelength = 2.0 * np.pi / self.kappa
        t0 = time.perf_counter()
        self.context = context or HelmholtzContext(surface, self.config.gram_order, self.config.seed)
        self.space = CurrentSpace(surface, self.context.harmonics if self.context.genus else None)
        self.sigma = max_mean_curvature(surface, 6)
        self.kappa_p = complexified_wavenumber(self.kappa, self.sigma)
        self.assembler = Assembler(self.space, self.config.quadrature)
        self.gram_matrix = block_gram(self.space, self.context.gram, self.context.harmonics)
        self.T, self.Tp, self.K = self.assembler.operators(self.kappa, self.kappa_p, self.gram_matrix)
        self.Tp_local = localize_calderon(self.Tp, self.space, self.config.cutoff * self.wavelength)
        self.assembly_time = time.perf_counter() - t0

    @property
    def n_unknowns(self) -> int:
        return self.space.size

    def _keep(self, formulation: str) -> np.ndarray:
        if formulation not in FORMULATIONS:
            raise ValueError(f"unknown formulation {formulation!r}; expected one of {FORMULATIONS}")
        n = self.space.size if formulation == "cccfier" else 2 * self.space.nv
        return np.arange(n)

    def system(self, formulation: str = "cccfier") -> CalderonSystem:
        keep = self._keep(formulation)
        sub = np.ix_(keep, keep)
        h = self.context.harmonics.gram if (formulation == "cccfier" and self.space.g) else None
        ginv = GramInverse(self.context.gram, h, self.config.gram_tol)
        return CalderonSystem(self.T.matrix[sub], self.Tp_local.matrix[sub], self.K.matrix[sub], ginv)

    def tested_fields(self, excitation: Excitation):
        """(<J, n x E^i> / eta, <J, n x H^i>) over the full basis."""
        far = self.assembler.far
        nE = np.cross(far.normals, excitation.E(far.points)) / excitation.eta
        nH = np.cross(far.normals, excitation.H(far.points))
        W = sparse.diags(far.weights)
        ve = sum((W @ v).T @ nE[:, d] for d, v in enumerate(far.vals))
        vh = sum((W @ v).T @ nH[:, d] for d, v in enumerate(far.vals))
        return ve, vh

    def solve(self, excitation: Excitation, formulation: str = "cccfier") -> ScatteringSolution:
        keep = self._keep(formulation)
        system = self.system(formulation)
        ve, vh = self.tested_fields(excitation)
        rhs = system.rhs(ve[keep], vh[keep])
        res: SolveResult = gmres_solve(system, rhs, self.config.tol, self.config.restart, self.config.max_iter)
        x = np.zeros(self.space.size, dtype=complex)
        x[keep] = res.x
        return ScatteringSolution(x, res.iterations, res.residual, formulation, self)

    def current(self, x) -> np.ndarray:
        return self.assembler.far.current(x)

    def far_field(self, x, directions) -> np.ndarray:
        far = self.assembler.far
        return radiated_far_field(self.current(x), far.points, far.weights, self.kappa, directions)
