import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from darkspec.constants import (HBAR_MEV_FS, HC_EV_NM, MU_B_MEV_PER_T,
                                N_STATES, StateIndex, UnitConstants,
                                energy_to_wavelength, thz_to_rad_per_fs,
                                wavelength_to_energy)


def test_constants_positive_and_fixed():
    u = UnitConstants()
    assert u.hbar == HBAR_MEV_FS > 0
    assert u.mu_b == MU_B_MEV_PER_T > 0
    assert u.hc == HC_EV_NM > 0


def test_state_ordering_is_fixed():
    assert [s.value for s in StateIndex] == [0, 1, 2, 3, 4]
    assert StateIndex.G == 0 and StateIndex.S == 1 and StateIndex.T0 == 2
    assert StateIndex.T_PLUS == 3 and StateIndex.T_MINUS == 4
    assert N_STATES == 5


def test_wavelength_to_energy_reference_points():
    # 885.6 nm and 892 nm are the paired reference wavelengths
    assert wavelength_to_energy(885.6) == pytest.approx(1.400, abs=5e-4)
    assert wavelength_to_energy(892.0) == pytest.approx(1.390, abs=1e-3)
    assert wavelength_to_energy(HC_EV_NM) == pytest.approx(1.0, rel=1e-15)


@pytest.mark.parametrize("bad", [0.0, -3.0, float("nan"), float("inf")])
def test_wavelength_domain_errors(bad):
    with pytest.raises(ValueError):
        wavelength_to_energy(bad)
    with pytest.raises(ValueError):
        energy_to_wavelength(bad)


@given(st.floats(min_value=1e-6, max_value=1e9))
def test_conversion_round_trip(lam):
    back = energy_to_wavelength(wavelength_to_energy(lam))
    assert abs(back - lam) <= 1e-12 * lam


def test_thz_conversion():
    assert thz_to_rad_per_fs(1.0) == pytest.approx(2 * math.pi * 1e-3, rel=1e-15)
    # one 1 THz quantum in meV
    assert HBAR_MEV_FS * thz_to_rad_per_fs(1.0) == pytest.approx(4.1356677, abs=1e-6)
