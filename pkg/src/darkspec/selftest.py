"""Built-in invariant suite behind `darkspec selftest`.

Quick structural checks of every layer; one PASS/FAIL line each. The
full quantitative acceptance suite lives in the pytest tests.
"""

from __future__ import annotations

import io
import math
import tempfile
from pathlib import Path

import numpy as np

from .config import (DephasingConfig, DipoleOperator, EnergyLevels,
                     HyperfineConfig, LandeFactors, PulseConfig, SystemConfig,
                     TimeGrids, validate_config)
from .constants import HBAR_MEV_FS, wavelength_to_energy, energy_to_wavelength
from .liouville import (LindbladGenerator, TimeDependentHamiltonian,
                        lindblad_apply, propagate_density)
from .pulse import HyperfineSample, draw_hyperfine_ensemble, field_components
from .response import ResponseGrid, averaged_response
from .spectra import twod_transform
from .spindyn import SpinAmplitudes, propagate_amplitudes
from .analysis import reconstruct_hamiltonian, reconstruction_matrix


def _small_system(b0=0.0, sigma_hf=0.0, gamma=True):
    return SystemConfig(
        levels=EnergyLevels(1400.0, 1390.0),
        lande=LandeFactors(2.0005, 1.9995),
        hyperfine=HyperfineConfig(sigma_hf, 2),
        dephasing=DephasingConfig(1 / 80 if gamma else 0.0,
                                  1 / 200 if gamma else 0.0),
        dipole=DipoleOperator(1.0),
        rng_seed=11,
    ), PulseConfig(b0=b0, omega=2 * math.pi * 1e-3, t_center=200.0,
                   sigma_t=2000.0, coupling_scale=20.0, n_phase=2)


def _checks():
    yield "unit round trip", lambda: abs(
        energy_to_wavelength(wavelength_to_energy(885.6)) - 885.6) < 885.6 * 1e-12

    def quadrature():
        p = PulseConfig(b0=1.0, omega=0.01, t_center=100.0, sigma_t=300.0,
                        phase=0.7)
        t = np.linspace(-500.0, 700.0, 1000)
        bx, bz = field_components(t, p)
        env2 = (p.b0 * np.exp(-0.5 * ((t - p.t_center) / p.sigma_t) ** 2)) ** 2
        return float(np.max(np.abs(bx ** 2 + bz ** 2 - env2))) < 1e-12
    yield "drive x-z quadrature", quadrature

    def hyperfine_determinism():
        cfg = HyperfineConfig(1.0, 64)
        a = draw_hyperfine_ensemble(cfg, np.random.Generator(np.random.PCG64(3)))
        b = draw_hyperfine_ensemble(cfg, np.random.Generator(np.random.PCG64(3)))
        return a == b
    yield "hyperfine draw determinism", hyperfine_determinism

    def norm_conservation():
        cfg, pulse = _small_system(b0=1.0)
        traj = propagate_amplitudes(SpinAmplitudes(), pulse, cfg.lande,
                                    HyperfineSample(0.4, -0.3), cfg.levels,
                                    np.linspace(0.0, 800.0, 9))
        return traj.max_norm_drift < 1e-8
    yield "amplitude norm conservation", norm_conservation

    def zero_coupling_freeze():
        cfg, _ = _small_system()
        quiet = PulseConfig(b0=0.0, omega=0.0, t_center=0.0, sigma_t=100.0)
        init = SpinAmplitudes(s=1 / math.sqrt(2), t0=1j / math.sqrt(2))
        traj = propagate_amplitudes(init, quiet, LandeFactors(2.0, 2.0),
                                    HyperfineSample(0.0, 0.0),
                                    EnergyLevels(1400.0, 1400.0),
                                    np.linspace(0.0, 500.0, 6))
        return float(np.max(np.abs(traj.populations - traj.populations[0]))) < 1e-12
    yield "zero-coupling population freeze", zero_coupling_freeze

    def lindblad_identities():
        rng = np.random.Generator(np.random.PCG64(5))
        a = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
        rho = a + a.conj().T
        gen = LindbladGenerator(0.02, 0.01)
        out = lindblad_apply(rho, gen)
        return (abs(np.trace(out)) < 1e-14
                and float(np.max(np.abs(out - out.conj().T))) < 1e-14)
    yield "dissipator trace/hermiticity", lindblad_identities

    def density_vs_amplitudes():
        cfg, pulse = _small_system(b0=0.7, gamma=False)
        hf = HyperfineSample(0.5, -0.2)
        grid = np.linspace(0.0, 400.0, 5)
        traj = propagate_amplitudes(SpinAmplitudes(), pulse, cfg.lande, hf,
                                    cfg.levels, grid)
        psi = traj.amplitudes[-1]
        rho0 = np.zeros((5, 5), dtype=complex)
        rho0[1:, 1:] = np.outer(SpinAmplitudes().vector(),
                                SpinAmplitudes().vector().conj())
        ham = TimeDependentHamiltonian(cfg, pulse, hf)
        gen = LindbladGenerator(0.0, 0.0)
        rho = propagate_density(rho0, 0.0, 400.0, ham, gen)
        return float(np.max(np.abs(rho[1:, 1:] - np.outer(psi, psi.conj())))) < 1e-8
    yield "density/amplitude unitary equivalence", density_vs_amplitudes

    def transform_oracle():
        hbar = HBAR_MEV_FS
        n, dt = 64, 3.0
        t = np.arange(n) * dt
        wa, wb, g = 8.0, -5.0, 0.004
        vals = np.exp((-1j * wa / hbar - g) * t)[:, None] \
            * np.exp((-1j * wb / hbar - g) * t)[None, :]
        grid = ResponseGrid(values=vals, dt1=dt, dt3=dt, t2=0.0, omega_ref=0.0,
                            kind="total")
        m = twod_transform(grid, "nonrephasing", zero_pad=4)
        idx = np.unravel_index(np.argmax(np.abs(m.values)), m.values.shape)
        return (abs(m.omega1_grid[idx[0]] - wa) <= m.d_omega1
                and abs(m.omega3_grid[idx[1]] - wb) <= m.d_omega3)
    yield "2D transform peak position", transform_oracle

    def reconstruction_roundtrip():
        truth = (1410.0, 1386.0, 6.0, 9.0, 13.0)
        eig = np.linalg.eigvalsh(reconstruction_matrix(*truth))
        model = reconstruct_hamiltonian(eig, truth[3], truth[4])
        return (abs(model.e_singlet_fit - truth[0]) < 1e-6
                and abs(model.e_triplet_fit - truth[1]) < 1e-6
                and abs(model.zeeman - truth[2]) < 1e-6)
    yield "reconstruction round trip", reconstruction_roundtrip

    def response_determinism():
        cfg, pulse = _small_system(b0=0.5, sigma_hf=0.3)
        grids = TimeGrids(n_t1=4, dt1=4.0, n_t3=4, dt3=4.0, t2=30.0,
                          t_first=0.0)
        a = averaged_response(cfg, pulse, grids).total.values
        b = averaged_response(cfg, pulse, grids).total.values
        return np.array_equal(a, b)
    yield "response determinism", response_determinism

    def config_validation():
        try:
            validate_config(SystemConfig(
                levels=EnergyLevels(1400.0, 1390.0),
                lande=LandeFactors(2.0, 2.0),
                hyperfine=HyperfineConfig(1.0, 0),
                dephasing=DephasingConfig(-0.1, 0.0),
            ))
        except Exception as exc:
            codes = {d.code for d in getattr(exc, "diagnostics", [])}
            return {"bad-ensemble-size", "negative-dephasing-rate"} <= codes
        return False
    yield "config validation itemizes violations", config_validation


def run_selftest(stream=None) -> bool:
    ok = True
    for name, check in _checks():
        try:
            passed = bool(check())
        except Exception as exc:   # a crash is a failure, not an abort
            passed = False
            name = f"{name} ({type(exc).__name__}: {exc})"
        ok &= passed
        line = f"{'PASS' if passed else 'FAIL'}  {name}"
        print(line, file=stream)
    print(f"selftest {'passed' if ok else 'FAILED'}", file=stream)
    return ok
