"""Far-zone radiation of a surface current and radar cross section.

With E^s ~ F(r_hat) exp(-j kappa r) / r,

    F = -j kappa eta / (4 pi) (I - r r) . sum_i w_i J(y_i) exp(j kappa r . y_i)

and sigma = 4 pi |F|^2 / |E0|^2.
"""

from __future__ import annotations

import numpy as np

from .excitation import ETA0

__all__ = ["radiated_far_field", "rcs", "rcs_dbsm", "cut_directions", "scattered_power"]


def cut_directions(theta_deg, phi_deg: float = 0.0) -> np.ndarray:
    """Unit observation directions on a constant-phi cut; theta measured from +z."""
    th = np.radians(np.asarray(theta_deg, dtype=float))
    ph = np.radians(phi_deg)
    return np.column_stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)])


def radiated_far_field(current, points, weights, kappa, directions, eta: float = ETA0) -> np.ndarray:
    """Far-field pattern (M, 3) of point-sampled ``current`` (Npts, 3) with quadrature ``weights``."""
    d = np.atleast_2d(np.asarray(directions, dtype=float))
    phase = np.exp(1j * kappa * (d @ np.asarray(points).T))             # (M, Npts)
    integral = phase @ (np.asarray(current) * np.asarray(weights)[:, None])
    radial = np.einsum("md,md->m", d, integral)
    transverse = integral - radial[:, None] * d
    return (-1j * kappa * eta / (4.0 * np.pi)) * transverse


def rcs(pattern, amplitude: complex = 1.0) -> np.ndarray:
    """Radar cross section (m^2) of far-field pattern rows."""
    p = np.asarray(pattern)
    return 4.0 * np.pi * np.einsum("md,md->m", p, p.conj()).real / abs(amplitude) ** 2


def rcs_dbsm(pattern, amplitude: complex = 1.0) -> np.ndarray:
    return 10.0 * np.log10(rcs(pattern, amplitude))


def scattered_power(pattern_fn, eta: float = ETA0, n_theta: int = 48, n_phi: int = 96) -> float:
    """Total scattered power from a callable returning the pattern at given directions."""
    x, w = np.polynomial.legendre.leggauss(n_theta)
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    ct, P = np.meshgrid(x, phi, indexing="ij")
    st = np.sqrt(1.0 - ct ** 2)
    d = np.column_stack([(st * np.cos(P)).ravel(), (st * np.sin(P)).ravel(), ct.ravel()])
    F = pattern_fn(d)
    inten = np.einsum("md,md->m", F, F.conj()).real.reshape(n_theta, n_phi)
    return float((w @ inten).sum() * (2.0 * np.pi / n_phi) / (2.0 * eta))
