"""The two-component magnetic drive and the effective spin couplings.

The drive has an oscillating carrier and a Gaussian envelope:

    b_z(t) = B0 * sin(w*t + phi)        * env(t)
    b_x(t) = B0 * sin(w*t + phi - pi/2) * env(t)
    env(t) = exp(-(t - t0)^2 / (2 sigma_t^2))

The x and z components are locked in quadrature (relative phase pi/2).
From the per-carrier couplings the three effective energies driving the
spin pair are

    B_e(t) = -s_e * b_z(t) + i_e        (i_e: static nuclear-field energy)
    B_h(t) = -s_h * b_z(t) + i_h
    delta0 = (B_e - B_h) / 2            (S <-> T0 mixing)
    b_bar  = (B_e + B_h) / 2            (T+/T- splitting)
    b_x    =  s_mean * b_x(t)           (T0 <-> T+/- transverse coupling)

All functions are pure and vectorize over time and over batches of
samples.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import HyperfineConfig, LandeFactors, PulseConfig


@dataclass(frozen=True)
class HyperfineSample:
    """Static nuclear-field energies (meV) seen by the electron and the hole."""

    i_e: float
    i_h: float


@dataclass(frozen=True)
class EffectiveFields:
    """Effective coupling energies (meV) entering the spin-pair Hamiltonian."""

    delta0: float | np.ndarray
    b_bar: float | np.ndarray
    b_x: float | np.ndarray


def envelope(t, p: PulseConfig):
    """Gaussian envelope, peak 1 at t_center."""
    u = (np.asarray(t, dtype=float) - p.t_center) / p.sigma_t
    return np.exp(-0.5 * u * u)


def field_components(t, p: PulseConfig, phase_offset: float = 0.0):
    """(b_x, b_z) in tesla at time(s) t. Total function on finite inputs."""
    t = np.asarray(t, dtype=float)
    env = envelope(t, p)
    arg = p.omega * t + p.phase + phase_offset
    b_z = p.b0 * np.sin(arg) * env
    b_x = p.b0 * np.sin(arg - 0.5 * np.pi) * env
    return b_x, b_z


def effective_fields(t, p: PulseConfig, lande: LandeFactors,
                     hf: HyperfineSample, phase_offset: float = 0.0) -> EffectiveFields:
    """Effective coupling energies at time(s) t for one disorder sample."""
    s_e, s_h, s_mean = p.scales(lande)
    b_x, b_z = field_components(t, p, phase_offset)
    b_e = -s_e * b_z + hf.i_e
    b_h = -s_h * b_z + hf.i_h
    return EffectiveFields(
        delta0=0.5 * (b_e - b_h),
        b_bar=0.5 * (b_e + b_h),
        b_x=s_mean * b_x,
    )


def draw_hyperfine_ensemble(cfg: HyperfineConfig,
                            rng: np.random.Generator) -> list[HyperfineSample]:
    """Draw n_samples i.i.d. zero-mean Gaussian sample pairs.

    Deterministic for a given generator state; sigma_hf = 0 yields exact
    zeros.
    """
    if cfg.n_samples < 1:
        raise ValueError("ensemble size must be >= 1")
    if cfg.sigma_hf == 0.0:
        return [HyperfineSample(0.0, 0.0) for _ in range(cfg.n_samples)]
    draws = rng.normal(0.0, cfg.sigma_hf, size=(cfg.n_samples, 2))
    return [HyperfineSample(float(a), float(b)) for a, b in draws]


def phase_grid(n_phase: int) -> np.ndarray:
    """Deterministic uniform grid of n_phase carrier phases over [0, 2pi)."""
    if n_phase < 1:
        raise ValueError("phase sample count must be >= 1")
    return np.arange(n_phase) * (2.0 * np.pi / n_phase)
