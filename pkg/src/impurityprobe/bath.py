"""Thermal Rb cloud: Gaussian density profile and its self-weighted measure.

The impurity samples the cloud with probability proportional to the bath
density itself, so the spatial average in the dephasing integral depends
on position only through the local density n(r).  That lets the 3D
integral collapse to a 1D measure over density values: with standard
normal coordinates y_i = x_i / sigma_i the density is n = n0 e^{-u}
where u = |y|^2 / 2 ~ Gamma(3/2), i.e. the same generalized
Gauss-Laguerre rule as the energy average applies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import roots_genlaguerre, roots_legendre, gamma as gamma_fn

from .constants import CONST

_GAMMA_3_2 = gamma_fn(1.5)


@dataclass(frozen=True)
class BathState:
    """Thermal Rb cloud in a harmonic trap (SI units).

    Either the peak density n0 or the atom number N may be given; the
    other is filled in from n0 = N / ((2 pi)^{3/2} sx sy sz).
    """

    n0: float                 # peak density, m^-3
    T: float                  # K
    omega_x: float            # rad/s
    omega_y: float
    omega_z: float
    N: float | None = None    # atom number

    def __post_init__(self):
        if self.T <= 0.0:
            raise ValueError("bath temperature must be positive")
        if min(self.omega_x, self.omega_y, self.omega_z) <= 0.0:
            raise ValueError("trap frequencies must be positive")
        if self.n0 <= 0.0:
            raise ValueError("peak density must be positive")
        vol = (2.0 * math.pi) ** 1.5 * np.prod(self.sigmas())
        if self.N is None:
            object.__setattr__(self, "N", self.n0 * vol)
        elif abs(self.N - self.n0 * vol) > 1e-6 * self.N:
            raise ValueError("atom number inconsistent with peak density")

    def sigmas(self) -> np.ndarray:
        """Gaussian cloud radii sigma_i = sqrt(kB T / (m_Rb omega_i^2)), m."""
        w = np.array([self.omega_x, self.omega_y, self.omega_z])
        return np.sqrt(CONST.k_B * self.T / CONST.m_Rb) / w


def density_at(r, bath: BathState):
    """Bath density at position r = (x, y, z), m^-3.

    n(r) = n0 exp(-m_Rb sum_i omega_i^2 x_i^2 / (2 kB T)).  r may carry
    leading batch dimensions (..., 3).
    """
    r = np.asarray(r, dtype=float)
    if not np.all(np.isfinite(r)):
        raise ValueError("coordinates must be finite")
    s = bath.sigmas()
    q = np.sum((r / s) ** 2, axis=-1)
    out = bath.n0 * np.exp(-0.5 * q)
    return float(out) if out.ndim == 0 else out


def density_weight_measure(bath: BathState, order: int = 48,
                           method: str = "gauss"):
    """Quadrature (densities, weights) for the impurity-sampled density.

    Positions drawn with probability n(r)/N see the local density
    n = n0 e^{-u} with u ~ Gamma(3/2, 1).

    method="gauss" returns the generalized Gauss-Laguerre rule for that
    law (exact density moments at any order).  method="panel" substitutes
    u = s^2 — turning the measure into the smooth weight 2 s^2 e^{-s^2} —
    and applies composite 8-point Gauss-Legendre panels on s in
    [0, sqrt(30)]; the panels track rapidly oscillating integrands (long
    evolution times) that defeat the global Gauss rule.  `order` is the
    node count for "gauss" and the total node budget for "panel".
    Weights are positive and sum to 1 in both cases.
    """
    if order < 2:
        raise ValueError("measure order must be >= 2")
    if method == "gauss":
        u, w = roots_genlaguerre(order, 0.5)
        return bath.n0 * np.exp(-u), w / _GAMMA_3_2
    if method == "panel":
        n_panels = max(4, order // 8)
        edges = math.sqrt(30.0) * np.arange(n_panels + 1) / n_panels
        xg, wg = roots_legendre(8)
        a, b = edges[:-1], edges[1:]
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        s = (mid[:, None] + half[:, None] * xg[None, :]).ravel()
        w = (half[:, None] * wg[None, :]).ravel()
        w = w * 2.0 * s**2 * np.exp(-(s**2)) / _GAMMA_3_2
        w = w / w.sum()  # absorb the ~1e-13 tail truncation
        return bath.n0 * np.exp(-(s**2)), w
    raise ValueError(f"unknown quadrature method {method!r}")


def interaction_detuning(n, d_a):
    """Mean-field clock-state detuning 2 pi hbar n (a_e - a_g) / mu, rad/s.

    Bilinear in density n and scattering-length difference d_a; the sign
    follows d_a.  Broadcasts over array arguments.
    """
    from .thermal import MU_RBCS
    n = np.asarray(n, dtype=float)
    if np.any(n < 0.0):
        raise ValueError("density must be nonnegative")
    out = 2.0 * math.pi * CONST.hbar / MU_RBCS * n * np.asarray(d_a, dtype=float)
    return float(out) if out.ndim == 0 else out
