"""Mie series for plane-wave scattering by a perfectly conducting sphere.

Scattering amplitudes follow the usual S1/S2 expansion with PEC
coefficients a_n = psi_n'(x)/xi_n'(x), b_n = psi_n(x)/xi_n(x), where
psi_n(x) = x j_n(x) and xi_n(x) = x h_n^(1)(x).
"""

from __future__ import annotations

import numpy as np
from scipy.special import spherical_jn, spherical_yn

__all__ = ["mie_coefficients", "mie_amplitudes", "mie_bistatic_rcs", "mie_backscatter", "mie_extinction"]


def _terms(x: float) -> int:
    return int(np.ceil(x + 4.0 * x ** (1.0 / 3.0) + 2.0)) + 2


def mie_coefficients(x: float, nmax: int | None = None):
    n = np.arange(1, (nmax or _terms(x)) + 1)
    jn, djn = spherical_jn(n, x), spherical_jn(n, x, derivative=True)
    yn, dyn = spherical_yn(n, x), spherical_yn(n, x, derivative=True)
    hn, dhn = jn + 1j * yn, djn + 1j * dyn
    psi, dpsi = x * jn, jn + x * djn
    xi, dxi = x * hn, hn + x * dhn
    return n, dpsi / dxi, psi / xi


def _pi_tau(nmax: int, mu):
    mu = np.asarray(mu, dtype=float)
    pi = np.zeros((nmax + 1,) + mu.shape)
    tau = np.zeros_like(pi)
    pi[1] = 1.0
    for n in range(1, nmax + 1):
        if n >= 2:
            pi[n] = ((2 * n - 1) * mu * pi[n - 1] - n * pi[n - 2]) / (n - 1)
        tau[n] = n * mu * pi[n] - (n + 1) * pi[n - 1]
    return pi[1:], tau[1:]


def mie_amplitudes(x: float, scattering_angle):
    """S1, S2 at scattering angles (radians from the forward direction)."""
    n, a, b = mie_coefficients(x)
    pi, tau = _pi_tau(len(n), np.cos(scattering_angle))
    c = ((2 * n + 1) / (n * (n + 1)))[:, None]
    S1 = (c * (a[:, None] * pi + b[:, None] * tau)).sum(axis=0)
    S2 = (c * (a[:, None] * tau + b[:, None] * pi)).sum(axis=0)
    return S1, S2


def mie_bistatic_rcs(radius: float, kappa: float, scattering_angle, plane: str = "E"):
    """sigma (m^2) in the E plane (S2) or H plane (S1)."""
    x = kappa * radius
    th = np.atleast_1d(np.asarray(scattering_angle, dtype=float))
    S1, S2 = mie_amplitudes(x, th)
    S = S2 if plane.upper() == "E" else S1
    return 4.0 * np.pi * np.abs(S) ** 2 / kappa ** 2


def mie_backscatter(radius: float, kappa: float) -> float:
    return float(mie_bistatic_rcs(radius, kappa, [np.pi])[0])


def mie_extinction(radius: float, kappa: float) -> float:
    """Extinction cross section (m^2) from the optical theorem."""
    x = kappa * radius
    n, a, b = mie_coefficients(x)
    return float(2.0 * np.pi / kappa ** 2 * np.sum((2 * n + 1) * (a + b).real))
