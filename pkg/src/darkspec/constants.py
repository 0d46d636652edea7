"""Physical constants, unit conversions, and the five-level state space.

Internal unit system: energies in meV, times in fs, magnetic fields in
tesla. All conversions to/from other units (eV, nm, THz) happen at the
I/O boundary.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

#: Reduced Planck constant, meV * fs.
HBAR_MEV_FS = 658.2119569

#: Bohr magneton, meV / T.
MU_B_MEV_PER_T = 0.05788381806

#: Photon energy-wavelength product h*c, eV * nm.
HC_EV_NM = 1239.841984


@dataclass(frozen=True)
class UnitConstants:
    """Fixed positive constants used by every unit conversion."""

    hbar: float = HBAR_MEV_FS          # meV * fs
    mu_b: float = MU_B_MEV_PER_T       # meV / T
    hc: float = HC_EV_NM               # eV * nm

    def __post_init__(self):
        if not (self.hbar > 0 and self.mu_b > 0 and self.hc > 0):
            raise ValueError("unit constants must all be positive")


UNITS = UnitConstants()


class StateIndex(enum.IntEnum):
    """Basis ordering of the five-level space.

    The ordering is part of the external file format contract and must
    not change.
    """

    G = 0
    S = 1
    T0 = 2
    T_PLUS = 3
    T_MINUS = 4


N_STATES = 5
#: Number of optically excited (charge-pair) states: S, T0, T+, T-.
N_EXCITED = 4


def wavelength_to_energy(lambda_nm: float) -> float:
    """Convert a wavelength in nm to a photon energy in eV.

    Raises ValueError on non-positive or non-finite input. The inverse
    is :func:`energy_to_wavelength`; the round trip is exact to 1e-12
    relative.
    """
    if not math.isfinite(lambda_nm) or lambda_nm <= 0.0:
        raise ValueError(f"wavelength must be positive and finite, got {lambda_nm!r}")
    return HC_EV_NM / lambda_nm


def energy_to_wavelength(energy_ev: float) -> float:
    """Convert a photon energy in eV to a wavelength in nm."""
    if not math.isfinite(energy_ev) or energy_ev <= 0.0:
        raise ValueError(f"energy must be positive and finite, got {energy_ev!r}")
    return HC_EV_NM / energy_ev


def thz_to_rad_per_fs(f_thz: float) -> float:
    """Convert a frequency in THz to an angular frequency in rad/fs."""
    return 2.0 * math.pi * f_thz * 1e-3


def rad_per_fs_to_mev(omega: float) -> float:
    """Energy quantum hbar*omega in meV for an angular frequency in rad/fs."""
    return HBAR_MEV_FS * omega
