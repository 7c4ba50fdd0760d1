"""Plane-wave excitation under the exp(j omega t) convention."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["C0", "ETA0", "Excitation", "wavenumber"]

C0 = 299_792_458.0
ETA0 = 376.730313668


def wavenumber(frequency: float) -> float:
    """Free-space wavenumber (rad/m) at ``frequency`` in Hz."""
    return 2.0 * np.pi * frequency / C0


@dataclass(frozen=True)
class Excitation:
    """E^i = E0 e exp(-j kappa k.r), H^i = (k x E^i) / eta."""

    kappa: float
    direction: tuple = (0.0, 0.0, -1.0)
    polarization: tuple = (1.0, 0.0, 0.0)
    amplitude: complex = 1.0
    eta: float = ETA0

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=float)
        p = np.asarray(self.polarization, dtype=float)
        if not np.isclose(np.linalg.norm(d), 1.0) or not np.isclose(np.linalg.norm(p), 1.0):
            raise ValueError("direction and polarization must be unit vectors")
        if abs(d @ p) > 1e-12:
            raise ValueError("polarization must be orthogonal to the propagation direction")

    @property
    def k_hat(self) -> np.ndarray:
        return np.asarray(self.direction, dtype=float)

    @property
    def e_hat(self) -> np.ndarray:
        return np.asarray(self.polarization, dtype=float)

    def E(self, points) -> np.ndarray:
        phase = np.exp(-1j * self.kappa * (np.asarray(points) @ self.k_hat))
        return self.amplitude * phase[:, None] * self.e_hat[None, :]

    def H(self, points) -> np.ndarray:
        return np.cross(self.k_hat, self.E(points)) / self.eta
