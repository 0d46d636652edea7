import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from darkspec.config import HyperfineConfig, LandeFactors, PulseConfig
from darkspec.pulse import (HyperfineSample, draw_hyperfine_ensemble,
                            effective_fields, field_components, phase_grid)


def test_envelope_peak_components():
    # at t = t_center with omega * t_center = 0 and zero phase:
    # sin(-pi/2) = -1 on x, sin(0) = 0 on z
    p = PulseConfig(b0=2.0, omega=0.5, t_center=0.0, sigma_t=100.0, phase=0.0)
    bx, bz = field_components(0.0, p)
    assert bx == pytest.approx(-2.0, abs=1e-15)
    assert bz == pytest.approx(0.0, abs=1e-15)


def test_envelope_decay_six_sigma():
    p = PulseConfig(b0=1.0, omega=0.02, t_center=500.0, sigma_t=50.0)
    for t in (500.0 - 6 * 50.0, 500.0 + 6 * 50.0):
        bx, bz = field_components(t, p)
        assert abs(bx) <= 1.0 * math.exp(-18) * 1.0001
        assert abs(bz) <= 1.0 * math.exp(-18) * 1.0001


@given(st.floats(min_value=0.0, max_value=2 * math.pi))
@settings(max_examples=25)
def test_quadrature_identity(phase):
    p = PulseConfig(b0=1.3, omega=0.0123, t_center=200.0, sigma_t=300.0,
                    phase=phase)
    t = np.linspace(-1000.0, 1500.0, 1000)
    bx, bz = field_components(t, p)
    env = p.b0 * np.exp(-0.5 * ((t - p.t_center) / p.sigma_t) ** 2)
    assert np.max(np.abs(bx ** 2 + bz ** 2 - env ** 2)) < 1e-12


def test_quadrature_cos_sin_split_at_zero_phase():
    p = PulseConfig(b0=1.0, omega=0.01, t_center=0.0, sigma_t=500.0, phase=0.0)
    t = np.linspace(-900.0, 900.0, 777)
    bx, bz = field_components(t, p)
    env = np.exp(-0.5 * (t / 500.0) ** 2)
    assert np.max(np.abs(bx / env + np.cos(0.01 * t))) < 1e-12
    assert np.max(np.abs(bz / env - np.sin(0.01 * t))) < 1e-12


def test_symmetric_couplings_cancel_delta0():
    p = PulseConfig(b0=1.0, omega=0.01, t_center=0.0, sigma_t=200.0,
                    coupling_scale=10.0)
    t = np.linspace(-500.0, 500.0, 64)
    f = effective_fields(t, p, LandeFactors(2.0, 2.0), HyperfineSample(0.0, 0.0))
    assert np.max(np.abs(f.delta0)) == 0.0


def test_pure_hyperfine_limit():
    p = PulseConfig(b0=0.0, omega=0.01, t_center=0.0, sigma_t=200.0,
                    coupling_scale=10.0)
    t = np.linspace(-500.0, 500.0, 17)
    f = effective_fields(t, p, LandeFactors(2.0, 2.0), HyperfineSample(1.0, -1.0))
    assert np.allclose(f.delta0, 1.0)
    assert np.allclose(f.b_bar, 0.0)
    assert np.allclose(f.b_x, 0.0)


def test_delta0_antisymmetric_bbar_symmetric_under_swap():
    p = PulseConfig(b0=0.8, omega=0.02, t_center=10.0, sigma_t=150.0,
                    coupling_scale=7.0)
    t = np.linspace(-300.0, 300.0, 41)
    f1 = effective_fields(t, p, LandeFactors(2.4, 1.6), HyperfineSample(0.7, -0.2))
    f2 = effective_fields(t, p, LandeFactors(1.6, 2.4), HyperfineSample(-0.2, 0.7))
    assert np.allclose(f1.delta0, -f2.delta0, atol=1e-14)
    assert np.allclose(f1.b_bar, f2.b_bar, atol=1e-14)


@given(st.floats(min_value=0.1, max_value=4.0))
@settings(max_examples=25)
def test_fields_linear_in_amplitude(scale_factor):
    lande = LandeFactors(2.2, 1.8)
    hf = HyperfineSample(0.3, -0.1)
    t = np.linspace(-200.0, 400.0, 31)
    p1 = PulseConfig(b0=1.0, omega=0.015, t_center=80.0, sigma_t=120.0,
                     coupling_scale=5.0)
    p2 = PulseConfig(b0=scale_factor, omega=0.015, t_center=80.0,
                     sigma_t=120.0, coupling_scale=5.0)
    f1 = effective_fields(t, p1, lande, hf)
    f2 = effective_fields(t, p2, lande, hf)
    hf0 = HyperfineSample(0.0, 0.0)
    g1 = effective_fields(t, p1, lande, hf0)
    g2 = effective_fields(t, p2, lande, hf0)
    # pulse-driven parts scale linearly; hyperfine offsets are b0-independent
    assert np.allclose(g2.delta0, scale_factor * g1.delta0, atol=1e-12)
    assert np.allclose(g2.b_bar, scale_factor * g1.b_bar, atol=1e-12)
    assert np.allclose(g2.b_x, scale_factor * g1.b_x, atol=1e-12)
    assert np.allclose(f2.delta0 - g2.delta0, f1.delta0 - g1.delta0, atol=1e-12)


def test_hyperfine_zero_width_draws_exact_zeros():
    cfg = HyperfineConfig(0.0, 20)
    samples = draw_hyperfine_ensemble(cfg, np.random.Generator(np.random.PCG64(1)))
    assert all(s.i_e == 0.0 and s.i_h == 0.0 for s in samples)


def test_hyperfine_sample_std_in_chi_square_band():
    cfg = HyperfineConfig(1.0, 1000)
    samples = draw_hyperfine_ensemble(cfg, np.random.Generator(np.random.PCG64(21)))
    vals = np.array([(s.i_e, s.i_h) for s in samples]).ravel()
    assert 0.93 <= vals.std(ddof=1) <= 1.07


def test_hyperfine_same_seed_bit_identical():
    cfg = HyperfineConfig(2.0, 64)
    a = draw_hyperfine_ensemble(cfg, np.random.Generator(np.random.PCG64(5)))
    b = draw_hyperfine_ensemble(cfg, np.random.Generator(np.random.PCG64(5)))
    assert a == b


def test_ensemble_mean_delta0_within_standard_error():
    # direct Monte-Carlo statistics oracle: mean of (i_e - i_h)/2 over 1e4
    # draws of width 1 meV has standard error (1/sqrt(2))/100
    cfg = HyperfineConfig(1.0, 10_000)
    samples = draw_hyperfine_ensemble(cfg, np.random.Generator(np.random.PCG64(9)))
    delta0 = np.array([(s.i_e - s.i_h) / 2 for s in samples])
    assert abs(delta0.mean()) <= 3.0 * (1 / math.sqrt(2)) / 100.0


def test_phase_grid_uniform():
    g = phase_grid(8)
    assert g.shape == (8,)
    assert np.allclose(np.diff(g), math.pi / 4)
    assert g[0] == 0.0 and g[-1] < 2 * math.pi
    with pytest.raises(ValueError):
        phase_grid(0)
