import numpy as np
import pytest

from darkspec.config import (ConfigError, DephasingConfig, DipoleOperator,
                             EnergyLevels, HyperfineConfig, LandeFactors,
                             PulseConfig, SystemConfig, build_run_config,
                             parse_config_text, validate_config, validate_pulse)
from darkspec.constants import StateIndex


def make_config(**over):
    base = dict(
        levels=EnergyLevels(1400.0, 1390.0),
        lande=LandeFactors(2.0, 2.0),
        hyperfine=HyperfineConfig(1.0, 10),
        dephasing=DephasingConfig(1 / 80, 1 / 200),
        dipole=DipoleOperator(1.0),
        rng_seed=1,
    )
    base.update(over)
    return SystemConfig(**base)


def test_reference_energies_accepted():
    cfg = make_config(levels=EnergyLevels(1400.0, 1390.0))
    assert validate_config(cfg) is cfg


def test_negative_dephasing_rejected_with_code():
    cfg = make_config(dephasing=DephasingConfig(-0.1, 1 / 200))
    with pytest.raises(ConfigError) as err:
        validate_config(cfg)
    codes = {d.code for d in err.value.diagnostics}
    assert "negative-dephasing-rate" in codes
    assert "negative dephasing rate" in str(err.value)


def test_zero_ensemble_rejected():
    cfg = make_config(hyperfine=HyperfineConfig(1.0, 0))
    with pytest.raises(ConfigError) as err:
        validate_config(cfg)
    assert any("ensemble size must be >= 1" in d.message
               for d in err.value.diagnostics)


def test_every_violation_reported_not_just_first():
    cfg = make_config(hyperfine=HyperfineConfig(-1.0, 0),
                      dephasing=DephasingConfig(-0.1, -0.2),
                      levels=EnergyLevels(float("nan"), 1390.0))
    with pytest.raises(ConfigError) as err:
        validate_config(cfg)
    assert len(err.value.diagnostics) >= 4


def test_validation_idempotent():
    cfg = make_config()
    assert validate_config(validate_config(cfg)) is cfg


def test_dipole_pattern_two_entries():
    m = DipoleOperator(2.5).matrix()
    assert m[StateIndex.G, StateIndex.S] == 2.5
    assert m[StateIndex.S, StateIndex.G] == 2.5
    assert np.count_nonzero(m) == 2


def test_pulse_phase_canonicalized():
    p = validate_pulse(PulseConfig(b0=1.0, omega=0.01, sigma_t=100.0,
                                   phase=7.0))
    assert 0.0 <= p.phase < 2 * np.pi
    assert p.phase == pytest.approx(7.0 - 2 * np.pi)


def test_pulse_invariants_rejected():
    with pytest.raises(ConfigError):
        validate_pulse(PulseConfig(b0=-1.0, omega=0.01, sigma_t=100.0))
    with pytest.raises(ConfigError):
        validate_pulse(PulseConfig(b0=1.0, omega=0.01, sigma_t=0.0))


def test_parse_rejects_unknown_keys_fail_closed():
    with pytest.raises(ConfigError) as err:
        parse_config_text("e_singlet_mev = 1400\nnot_a_key = 3\n")
    assert any(d.code == "unknown-key" for d in err.value.diagnostics)


def test_parse_comments_and_values():
    text = """
    # a comment
    e_singlet_mev = 1405.5   # trailing comment
    n_hyperfine = 25
    seed = 42
    """
    kv = parse_config_text(text)
    assert kv == {"e_singlet_mev": 1405.5, "n_hyperfine": 25, "seed": 42}


def test_parse_reports_bad_values():
    with pytest.raises(ConfigError) as err:
        parse_config_text("e_singlet_mev = abc\nomega_thz = 1.0\n")
    assert any(d.code == "bad-value" for d in err.value.diagnostics)


def test_build_run_config_defaults_and_units():
    run = build_run_config({"omega_thz": 1.0, "b0_tesla": 1.0})
    assert run.pulse.omega == pytest.approx(2 * np.pi * 1e-3)
    assert run.system.levels.e_singlet == 1400.0
    assert run.grids.n_t1 == 128


def test_coupling_scale_default_is_physical():
    from darkspec.constants import MU_B_MEV_PER_T

    p = PulseConfig(b0=1.0, omega=0.01, sigma_t=100.0, coupling_scale=None)
    s_e, s_h, s_mean = p.scales(LandeFactors(2.0, 2.0))
    assert s_e == pytest.approx(MU_B_MEV_PER_T)
    assert s_mean == pytest.approx(MU_B_MEV_PER_T)


def test_coupling_scale_split_follows_g_ratio():
    p = PulseConfig(b0=1.0, omega=0.01, sigma_t=100.0, coupling_scale=100.0)
    s_e, s_h, s_mean = p.scales(LandeFactors(2.5, 1.5))
    assert s_mean == 100.0
    assert s_e == pytest.approx(125.0)
    assert s_h == pytest.approx(75.0)


def test_seed_gives_bit_identical_draws():
    cfg = make_config()
    a = cfg.rng().normal(size=8)
    b = cfg.rng().normal(size=8)
    assert np.array_equal(a, b)
