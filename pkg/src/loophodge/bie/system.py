"""The Calderon-preconditioned combined field system and its GMRES solve.

    Z = G^-1 (L + K),  L = -2 T_k' G^-1 T_k
    V = G^-1 (2 T_k' G^-1 <J, n x E^i> / eta + <J, n x H^i>)

with T J = n x E^s[J] / eta and K the tested I/2 - K operator. The Gram
inverse is applied block by block: zero-mean solves for the two scalar
families and a dense solve for the harmonic block.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg as spla

from ..basis import GRAM_TOL, StiffnessGram
from ..errors import NonConvergenceError
from .operators import OperatorMatrix

__all__ = [
    "complexified_wavenumber",
    "GramInverse",
    "CalderonSystem",
    "build_system",
    "SolveResult",
    "gmres_solve",
]


def complexified_wavenumber(kappa: float, sigma: float) -> complex:
    """kappa' = kappa - 0.4j sigma^(2/3) kappa^(1/3); Im < 0 damps the regularizer."""
    return complex(kappa - 0.4j * sigma ** (2.0 / 3.0) * kappa ** (1.0 / 3.0))


class GramInverse:
    """Action of G^-1 for G = diag(gamma, gamma, G_harmonic)."""

    def __init__(self, gram: StiffnessGram, harmonic_gram: np.ndarray | None, tol: float = GRAM_TOL):
        self.gram = gram
        self.nv = gram.n
        self.hgram = None if harmonic_gram is None or harmonic_gram.size == 0 else np.asarray(harmonic_gram)
        self.tol = tol
        self.size = 2 * self.nv + (0 if self.hgram is None else len(self.hgram))

    def __call__(self, y) -> np.ndarray:
        y = np.asarray(y)
        if y.shape[0] != self.size:
            raise ValueError(f"expected length {self.size}, got {y.shape[0]}")
        nv = self.nv
        # rows of a closed-surface system never carry a constant component beyond round-off
        out = np.empty(y.shape, dtype=np.result_type(y, float))
        out[:nv] = self.gram.solve(y[:nv], tol=self.tol, strict=False)
        out[nv:2 * nv] = self.gram.solve(y[nv:2 * nv], tol=self.tol, strict=False)
        if self.hgram is not None:
            out[2 * nv:] = np.linalg.solve(self.hgram, y[2 * nv:])
        return out


@dataclass
class CalderonSystem:
    T: np.ndarray
    Tp: np.ndarray
    K: np.ndarray
    ginv: GramInverse

    @property
    def shape(self):
        return self.K.shape

    def apply(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=complex)
        L = -2.0 * (self.Tp @ self.ginv(self.T @ x))
        return self.ginv(L + self.K @ x)

    def linear_operator(self) -> spla.LinearOperator:
        return spla.LinearOperator(self.shape, matvec=self.apply, dtype=complex)

    def rhs(self, v_e, v_h) -> np.ndarray:
        """From tested fields v_e = <J, n x E^i> / eta and v_h = <J, n x H^i>."""
        return self.ginv(2.0 * (self.Tp @ self.ginv(np.asarray(v_e, dtype=complex))) + v_h)


def build_system(T: OperatorMatrix, Tp_local: OperatorMatrix, K: OperatorMatrix, ginv: GramInverse) -> CalderonSystem:
    mats = [np.asarray(getattr(m, "matrix", m)) for m in (T, Tp_local, K)]
    n = ginv.size
    for m in mats:
        if m.shape != (n, n):
            raise ValueError(f"block of shape {m.shape} does not match the basis size {n}")
    return CalderonSystem(mats[0], mats[1], mats[2], ginv)


@dataclass
class SolveResult:
    x: np.ndarray
    iterations: int
    residual: float


def gmres_solve(system, rhs, tol: float = 1e-7, restart: int = 200, max_iter: int = 1000) -> SolveResult:
    """GMRES on ``system`` (a CalderonSystem, LinearOperator or matrix) to relative residual ``tol``."""
    if isinstance(system, CalderonSystem):
        A = system.linear_operator()
    else:
        A = spla.aslinearoperator(system)
    b = np.asarray(rhs, dtype=complex)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return SolveResult(np.zeros_like(b), 0, 0.0)
    count = [0]

    def cb(_):
        count[0] += 1

    restart = min(restart, max_iter)
    cycles = int(np.ceil(max_iter / restart))
    x, info = spla.gmres(A, b, rtol=tol, atol=0.0, restart=restart, maxiter=cycles,
                         callback=cb, callback_type="pr_norm")
    res = float(np.linalg.norm(b - A @ x) / bnorm)
    if info != 0 or res > 10 * tol:
        raise NonConvergenceError(f"GMRES reached {count[0]} iterations at relative residual {res:.2e}")
    return SolveResult(x, count[0], res)
