"""Unitary spin-pair amplitude dynamics under the magnetic drive.

Amplitudes (S, T0, T+, T-) live in the frame rotating at the bare
triplet energy, so only the detuning E_S - E_T appears on the diagonal:

    hbar dS/dt  = -i delta0 T0 - i (E_S - E_T) S
    hbar dT0/dt = -i delta0 S  - i sqrt(2) b_x (T+ + T-)
    hbar dT+/dt = -i b_bar T+  - i sqrt(2) b_x T0
    hbar dT-/dt = +i b_bar T-  - i sqrt(2) b_x T0

Evolution is strictly norm conserving; dephasing enters only at the
density-matrix layer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import EnergyLevels, LandeFactors, PulseConfig, SystemConfig
from .constants import HBAR_MEV_FS
from .integrate import IntegrationError, integrate_to_checkpoints, step_cap
from .pulse import HyperfineSample, draw_hyperfine_ensemble, phase_grid

_SQRT2 = math.sqrt(2.0)

NORM_DRIFT_LIMIT = 1e-6


@dataclass(frozen=True)
class SpinAmplitudes:
    """Four complex amplitudes; norm must be 1 to 1e-12 before propagation."""

    s: complex = 1.0 + 0.0j
    t0: complex = 0.0j
    t_plus: complex = 0.0j
    t_minus: complex = 0.0j

    def vector(self) -> np.ndarray:
        return np.array([self.s, self.t0, self.t_plus, self.t_minus], dtype=complex)

    def norm(self) -> float:
        return float(np.linalg.norm(self.vector()))


@dataclass(frozen=True)
class Trajectory:
    """Population (and optionally amplitude) history on a time grid."""

    times: np.ndarray
    populations: np.ndarray            # shape (n_t, 4): S, T0, T+, T-
    amplitudes: np.ndarray | None = None
    max_norm_drift: float = 0.0

    @property
    def pop_s(self):
        return self.populations[:, 0]

    @property
    def pop_t0(self):
        return self.populations[:, 1]

    @property
    def pop_t_plus(self):
        return self.populations[:, 2]

    @property
    def pop_t_minus(self):
        return self.populations[:, 3]

    def total_triplet(self):
        return self.populations[:, 1:].sum(axis=1)


def _batch_rhs(pulse: PulseConfig, lande: LandeFactors, i_e, i_h, phases,
               detuning: float):
    """RHS closure for a batch of amplitude 4-vectors, shape (B, 4)."""
    s_e, s_h, s_mean = pulse.scales(lande)
    b0, omega, t0, sig = pulse.b0, pulse.omega, pulse.t_center, pulse.sigma_t
    base_phase = pulse.phase
    i_e = np.asarray(i_e, dtype=float)
    i_h = np.asarray(i_h, dtype=float)
    phases = np.asarray(phases, dtype=float)
    inv_hbar = 1.0 / HBAR_MEV_FS

    def rhs(t, y):
        u = (t - t0) / sig
        env = b0 * math.exp(-0.5 * u * u)
        arg = omega * t + base_phase + phases
        bz = env * np.sin(arg)
        bx = -env * np.cos(arg)          # sin(arg - pi/2)
        b_e = -s_e * bz + i_e
        b_h = -s_h * bz + i_h
        delta0 = 0.5 * (b_e - b_h)
        b_bar = 0.5 * (b_e + b_h)
        c = _SQRT2 * s_mean * bx
        out = np.empty_like(y)
        out[:, 0] = delta0 * y[:, 1] + detuning * y[:, 0]
        out[:, 1] = delta0 * y[:, 0] + c * (y[:, 2] + y[:, 3])
        out[:, 2] = b_bar * y[:, 2] + c * y[:, 1]
        out[:, 3] = -b_bar * y[:, 3] + c * y[:, 1]
        out *= -1j * inv_hbar
        return out

    return rhs


def coupling_bound(pulse: PulseConfig, lande: LandeFactors, hf_samples,
                   detuning: float = 0.0) -> float:
    """Upper bound (meV) on any Hamiltonian entry, for the step-size cap."""
    s_e, s_h, s_mean = pulse.scales(lande)
    hf_max = max((max(abs(h.i_e), abs(h.i_h)) for h in hf_samples), default=0.0)
    peak = max(abs(s_e), abs(s_h), abs(s_mean)) * pulse.b0
    return _SQRT2 * peak + hf_max + abs(detuning)


def propagate_amplitudes(init: SpinAmplitudes, pulse: PulseConfig,
                         lande: LandeFactors, hf: HyperfineSample,
                         levels: EnergyLevels, t_grid,
                         rtol: float = 1e-9, atol: float = 1e-12,
                         keep_amplitudes: bool = True) -> Trajectory:
    """Propagate one disorder sample over a strictly increasing time grid.

    The initial norm must be 1 to 1e-12; norm drift beyond 1e-6 during
    propagation raises IntegrationError with the failing time.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size < 1 or np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be strictly increasing")
    if abs(init.norm() - 1.0) > 1e-12:
        raise ValueError("initial amplitudes must be normalized to 1e-12")

    detuning = levels.e_singlet - levels.e_triplet
    rhs = _batch_rhs(pulse, lande, [hf.i_e], [hf.i_h], [0.0], detuning)
    cap = step_cap(pulse.omega, coupling_bound(pulse, lande, [hf], detuning),
                   HBAR_MEV_FS)

    y0 = init.vector()[None, :]
    t_start = float(t_grid[0])
    amps = np.empty((t_grid.size, 4), dtype=complex)
    drift = [0.0]

    def grab(idx, t, y):
        amps[idx] = y[0]
        d = abs(float(np.sum(np.abs(y[0]) ** 2)) - 1.0)
        drift[0] = max(drift[0], d)
        if d > NORM_DRIFT_LIMIT:
            raise IntegrationError(t, f"norm drift {d:.3e} exceeds {NORM_DRIFT_LIMIT:.0e}")

    integrate_to_checkpoints(rhs, y0, t_start, t_grid, rtol=rtol, atol=atol,
                             max_step=cap, on_checkpoint=grab)
    pops = np.abs(amps) ** 2
    return Trajectory(times=t_grid, populations=pops,
                      amplitudes=amps if keep_amplitudes else None,
                      max_norm_drift=drift[0])


def ensemble_average_populations(cfg: SystemConfig, pulse: PulseConfig, t_grid,
                                 init: SpinAmplitudes | None = None,
                                 rtol: float = 1e-9, atol: float = 1e-12) -> Trajectory:
    """Mean populations over the hyperfine x carrier-phase ensemble.

    Members are ordered (hyperfine index, phase index); the average is a
    fixed-order arithmetic mean, so results are deterministic under a
    fixed seed regardless of internal batching.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size < 1 or np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be strictly increasing")
    init = init if init is not None else SpinAmplitudes()
    if abs(init.norm() - 1.0) > 1e-12:
        raise ValueError("initial amplitudes must be normalized to 1e-12")

    samples = draw_hyperfine_ensemble(cfg.hyperfine, cfg.rng())
    phases = phase_grid(pulse.n_phase)
    i_e = np.repeat([h.i_e for h in samples], phases.size)
    i_h = np.repeat([h.i_h for h in samples], phases.size)
    phis = np.tile(phases, len(samples))

    detuning = cfg.levels.e_singlet - cfg.levels.e_triplet
    rhs = _batch_rhs(pulse, cfg.lande, i_e, i_h, phis, detuning)
    cap = step_cap(pulse.omega, coupling_bound(pulse, cfg.lande, samples, detuning),
                   HBAR_MEV_FS)

    n_members = i_e.size
    y0 = np.tile(init.vector(), (n_members, 1))
    mean_pops = np.empty((t_grid.size, 4))
    drift = [0.0]

    def grab(idx, t, y):
        p = np.abs(y) ** 2
        mean_pops[idx] = p.mean(axis=0)
        d = float(np.max(np.abs(p.sum(axis=1) - 1.0)))
        drift[0] = max(drift[0], d)
        if d > NORM_DRIFT_LIMIT:
            bad = int(np.argmax(np.abs(p.sum(axis=1) - 1.0)))
            raise IntegrationError(t, f"norm drift {d:.3e} in ensemble member {bad}")

    integrate_to_checkpoints(rhs, y0, float(t_grid[0]), t_grid, rtol=rtol,
                             atol=atol, max_step=cap, on_checkpoint=grab)
    return Trajectory(times=t_grid, populations=mean_pops, amplitudes=None,
                      max_norm_drift=drift[0])


def strong_drive_reference(t, ratio: float, omega: float):
    """Closed-form strong-drive signal cos(ratio * cos(omega * t)).

    Analytic cross-check for the integrator: a flat-envelope two-level
    reduction of the amplitude equations reproduces this form.
    """
    t = np.asarray(t, dtype=float)
    return np.cos(ratio * np.cos(omega * t))
