"""Forward synthesis of Ramsey interference signals.

The microscopic model averages cos^2(delta_Rb(n, B, E) t / 2 + phi / 2)
over the impurity-sampled density measure and the Maxwell-Boltzmann
collision-energy distribution.  Because the node average of
cos^2((theta + phi)/2) separates as
1/2 + (1/2)(<cos theta> cos phi - <sin theta> sin phi), the double
quadrature is computed once per evolution time and the full phase fringe
follows analytically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bath import BathState, density_weight_measure, interaction_detuning
from .scattering import delta_a
from .thermal import mb_quadrature, QuadratureError


@dataclass(frozen=True)
class RamseyProtocol:
    """Ramsey sequence parameters (SI units).

    t: free-evolution times, s, strictly increasing and nonnegative.
    phi: second-pulse phases, rad.
    B: magnetic field at the atoms, T.
    delta_bg: bath-independent detuning (light shift + quadratic Zeeman), rad/s.
    T2_bg: dephasing time without bath, s.
    Omega0: Rabi frequency of the pi/2 pulses, rad/s (metadata only; pulses
    are treated as ideal instantaneous rotations).
    """

    t: np.ndarray
    phi: np.ndarray
    B: float = 198.5e-7
    delta_bg: float = -2.0 * math.pi * 135.0
    T2_bg: float = 27.2e-3
    Omega0: float = 2.0 * math.pi * 15.4e3

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        phi = np.asarray(self.phi, dtype=float)
        if t.size and (np.any(t < 0.0) or np.any(np.diff(t) <= 0.0)):
            raise ValueError("times must be nonnegative and strictly increasing")
        if self.T2_bg <= 0.0:
            raise ValueError("T2_bg must be positive")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "phi", phi)

    @classmethod
    def default_grid(cls, t_max_ms: float = 12.0, n_t: int = 30,
                     phi_step_deg: float = 30.0, **kw) -> "RamseyProtocol":
        """Grid mirroring the measurement: t in [0.1, t_max] ms, phases
        every `phi_step_deg` degrees over [0, 360)."""
        t = np.geomspace(0.1e-3, t_max_ms * 1e-3, n_t)
        phi = np.deg2rad(np.arange(0.0, 360.0, phi_step_deg))
        return cls(t=t, phi=phi, **kw)


@dataclass
class FringeSeries:
    """Populations on a rectangular (t, phi) grid."""

    t: np.ndarray          # s, shape (Nt,)
    phi: np.ndarray        # rad, shape (Nphi,)
    p: np.ndarray          # shape (Nt, Nphi), values in [0, 1]
    p_err: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.p.shape != (len(self.t), len(self.phi)):
            raise ValueError("population grid shape mismatch")


def fringe_closed_form(t, phi, Delta: float, T2: float):
    """Phenomenological Ramsey fringe with Gaussian dephasing.

    p = 1/2 + (sin^2[(Delta t - phi)/2] - 1/2) exp(-t^2 / T2^2)
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0.0):
        raise ValueError("time must be nonnegative")
    if T2 <= 0.0:
        raise ValueError("T2 must be positive")
    env = np.exp(-((t / T2) ** 2))
    out = 0.5 + (np.sin(0.5 * (Delta * t - np.asarray(phi))) ** 2 - 0.5) * env
    return float(out) if np.ndim(out) == 0 else out


def detuning_nodes(bath: BathState, model, B: float,
                   density_order: int = 384, energy_order: int = 512,
                   energy_method: str = "panel",
                   density_method: str = "panel"):
    """Detuning matrix delta_Rb(n_i, B, E_j) with product weights.

    Returns (delta, w) where delta has shape (Nd, Ne) and w are the
    matching product weights summing to 1.  Both defaults use composite
    panel rules: the integrand oscillates at long evolution times, which
    global Gauss rules cannot track.
    """
    n, wn = density_weight_measure(bath, order=density_order,
                                   method=density_method)
    E, wE = mb_quadrature(bath.T, order=energy_order, method=energy_method)
    da = delta_a(B, E, model)
    delta = interaction_detuning(n[:, None], da[None, :])
    return delta, wn[:, None] * wE[None, :]


def _coherence_trace(ts, delta, w):
    """<cos(delta t)>, <sin(delta t)> over the node measure, per time."""
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    C = np.empty(ts.shape)
    S = np.empty(ts.shape)
    d = delta.ravel()
    wf = w.ravel()
    for k, t in enumerate(ts):
        th = d * t
        C[k] = np.dot(wf, np.cos(th))
        S[k] = np.dot(wf, np.sin(th))
    return C, S


def ramsey_population(t, phi, bath: BathState, model, protocol: RamseyProtocol,
                      density_order: int = 384, energy_order: int = 512,
                      include_background: bool = False,
                      nodes=None, check_convergence: bool = False):
    """Ground-state population of the microscopic dephasing model.

    Averages cos^2(delta_Rb t / 2 + phi / 2) over the density measure and
    the collision-energy distribution.  With include_background=True the
    oscillatory part is additionally damped by exp(-t^2/T2_bg^2) and the
    phase shifted by delta_bg * t.  `nodes` may supply a precomputed
    (delta, weights) pair, e.g. a degenerate single-node measure.
    """
    if np.any(np.asarray(t) < 0.0):
        raise ValueError("time must be nonnegative")
    if nodes is None:
        nodes = detuning_nodes(bath, model, protocol.B,
                               density_order=density_order,
                               energy_order=energy_order)
        if check_convergence:
            nodes2 = detuning_nodes(bath, model, protocol.B,
                                    density_order=density_order,
                                    energy_order=2 * energy_order)
    delta, w = nodes
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    C, S = _coherence_trace(ts, delta, w)
    if check_convergence and 'nodes2' in locals():
        C2, S2 = _coherence_trace(ts, *nodes2)
        if np.max(np.hypot(C2 - C, S2 - S)) > 1e-4:
            raise QuadratureError("ramsey_population quadrature not converged")
        C, S = C2, S2
    phase = np.asarray(phi, dtype=float)
    env = 1.0
    if include_background:
        phase = phase + protocol.delta_bg * ts
        env = np.exp(-((ts / protocol.T2_bg) ** 2))
    out = 0.5 + 0.5 * env * (C * np.cos(phase) - S * np.sin(phase))
    if np.ndim(t) == 0 and np.ndim(phi) == 0:
        return float(out.reshape(-1)[0])
    return out


def population_grid(protocol: RamseyProtocol, bath: BathState, model,
                    density_order: int = 384, energy_order: int = 512,
                    include_background: bool = True,
                    check_convergence: bool = False) -> np.ndarray:
    """Noiseless population over the protocol's full (t, phi) grid."""
    delta, w = detuning_nodes(bath, model, protocol.B,
                              density_order=density_order,
                              energy_order=energy_order)
    C, S = _coherence_trace(protocol.t, delta, w)
    if check_convergence:
        delta2, w2 = detuning_nodes(bath, model, protocol.B,
                                    density_order=density_order,
                                    energy_order=2 * energy_order)
        C2, S2 = _coherence_trace(protocol.t, delta2, w2)
        if np.max(np.hypot(C2 - C, S2 - S)) > 1e-4:
            raise QuadratureError("population_grid quadrature not converged")
        C, S = C2, S2
    phase = protocol.phi[None, :]
    env = 1.0
    if include_background:
        phase = phase + (protocol.delta_bg * protocol.t)[:, None]
        env = np.exp(-((protocol.t / protocol.T2_bg) ** 2))[:, None]
    return 0.5 + 0.5 * env * (C[:, None] * np.cos(phase) - S[:, None] * np.sin(phase))


def synthesize_fringe(protocol: RamseyProtocol, bath: BathState, model,
                      noise: dict | None = None, seed: int = 0,
                      density_order: int = 384, energy_order: int = 512,
                      include_background: bool = True) -> FringeSeries:
    """Synthesize a FringeSeries, optionally with binomial counting noise.

    noise = {"atoms_per_shot": int, "repetitions": int} replaces each
    population by a binomial draw over atoms_per_shot * repetitions
    trials.  Each grid cell derives its own RNG from (seed, it, iphi), so
    results are independent of any evaluation partitioning.
    """
    p = population_grid(protocol, bath, model, density_order=density_order,
                        energy_order=energy_order,
                        include_background=include_background)
    p_err = None
    if noise is not None:
        trials = int(noise.get("atoms_per_shot", 10)) * int(noise.get("repetitions", 1))
        if trials < 1:
            raise ValueError("noise requires at least one trial")
        draws = np.empty_like(p)
        for it in range(p.shape[0]):
            for ip in range(p.shape[1]):
                rng = np.random.default_rng(np.random.SeedSequence([seed, it, ip]))
                draws[it, ip] = rng.binomial(trials, p[it, ip]) / trials
        p_err = np.sqrt(np.clip(draws * (1.0 - draws), 1.0 / trials**2, None) / trials)
        p = draws
    meta = {"seed": seed, "noise": noise, "include_background": include_background,
            "density_order": density_order, "energy_order": energy_order}
    return FringeSeries(t=protocol.t.copy(), phi=protocol.phi.copy(),
                        p=p, p_err=p_err, meta=meta)


def no_bath_trace(t, A: float, C: float, delta: float, T2: float):
    """Detected atom number without bath:
    N(t) = 0.5 A (1 - exp(-t^2/T2^2) cos(delta t)) + C."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0.0):
        raise ValueError("time must be nonnegative")
    if T2 <= 0.0:
        raise ValueError("T2 must be positive")
    out = 0.5 * A * (1.0 - np.exp(-((t / T2) ** 2)) * np.cos(delta * t)) + C
    return float(out) if out.ndim == 0 else out
