"""Validated configuration types and the flat key=value config format.

All types are immutable after validation and safe to share across
concurrent workers. Validation collects every violated invariant into a
single machine-readable report instead of stopping at the first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .constants import HBAR_MEV_FS, MU_B_MEV_PER_T, N_STATES, StateIndex, thz_to_rad_per_fs


@dataclass(frozen=True)
class Diagnostic:
    """One violated invariant: which field, a stable code, and a message."""

    field: str
    code: str
    message: str

    def __str__(self):
        return f"{self.field}: {self.message} [{self.code}]"


class ConfigError(ValueError):
    """Raised when validation fails; carries the full list of diagnostics."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(str(d) for d in self.diagnostics))


@dataclass(frozen=True)
class EnergyLevels:
    """Bare singlet and (degenerate) triplet charge-pair energies in meV."""

    e_singlet: float
    e_triplet: float


@dataclass(frozen=True)
class LandeFactors:
    """Dimensionless g-factors of the electron and the hole."""

    g_e: float
    g_h: float

    @property
    def mean(self) -> float:
        return 0.5 * (self.g_e + self.g_h)

    @property
    def delta(self) -> float:
        return self.g_e - self.g_h


@dataclass(frozen=True)
class HyperfineConfig:
    """Gaussian width (meV) of the static nuclear-field energy per carrier."""

    sigma_hf: float
    n_samples: int


@dataclass(frozen=True)
class DephasingConfig:
    """Pure-dephasing rates in 1/fs for the singlet and the triplet manifold."""

    gamma_s: float
    gamma_t: float


@dataclass(frozen=True)
class DipoleOperator:
    """Transition dipole; couples only G and S."""

    mu: float = 1.0

    def matrix(self) -> np.ndarray:
        """5x5 dipole matrix: exactly two nonzero entries, (G,S) and (S,G)."""
        m = np.zeros((N_STATES, N_STATES))
        m[StateIndex.G, StateIndex.S] = self.mu
        m[StateIndex.S, StateIndex.G] = self.mu
        return m


@dataclass(frozen=True)
class SystemConfig:
    """Full physical parameter set shared by all simulation layers."""

    levels: EnergyLevels
    lande: LandeFactors
    hyperfine: HyperfineConfig
    dephasing: DephasingConfig
    dipole: DipoleOperator = DipoleOperator()
    rng_seed: int = 1234

    @property
    def omega_ref(self) -> float:
        """Reference energy (meV) of the rotating frame used for response storage."""
        return 0.5 * (self.levels.e_singlet + self.levels.e_triplet)

    def rng(self) -> np.random.Generator:
        """Seeded generator; identical seed gives bit-identical draws."""
        return np.random.Generator(np.random.PCG64(self.rng_seed))


@dataclass(frozen=True)
class PulseConfig:
    """Two-component magnetic drive and its spin coupling strength.

    `omega` is the angular frequency in rad/fs. `coupling_scale` is the
    mean spin-field coupling in meV/T; when None the physical value
    mu_B * g / 2 per carrier is used. Per-carrier scales follow the
    g-factor ratio: s_e = s * g_e / g_mean, s_h = s * g_h / g_mean.
    """

    b0: float = 0.0
    omega: float = 0.0
    t_center: float = 0.0
    sigma_t: float = 2000.0
    phase: float = 0.0
    coupling_scale: float | None = None
    n_phase: int = 8

    def scales(self, lande: LandeFactors) -> tuple[float, float, float]:
        """(s_e, s_h, s_mean) in meV/T."""
        if self.coupling_scale is None:
            s_e = 0.5 * MU_B_MEV_PER_T * lande.g_e
            s_h = 0.5 * MU_B_MEV_PER_T * lande.g_h
            return s_e, s_h, 0.5 * (s_e + s_h)
        g_mean = lande.mean
        if g_mean == 0.0:
            return self.coupling_scale, self.coupling_scale, self.coupling_scale
        s = self.coupling_scale
        return s * lande.g_e / g_mean, s * lande.g_h / g_mean, s


@dataclass(frozen=True)
class TimeGrids:
    """Delay grids of the three-pulse sequence.

    t1/t3 grids are uniform and start at 0. `t_first` is the absolute
    time of the first optical interaction; None means `t_center - 200 fs`
    so the drive envelope is approximately flat over the sequence.
    """

    n_t1: int = 128
    dt1: float = 3.0
    n_t3: int = 128
    dt3: float = 3.0
    t2: float = 400.0
    t_first: float | None = None
    zero_pad: int = 4

    def t1_grid(self) -> np.ndarray:
        return np.arange(self.n_t1) * self.dt1

    def t3_grid(self) -> np.ndarray:
        return np.arange(self.n_t3) * self.dt3

    def first_interaction_time(self, pulse: PulseConfig) -> float:
        if self.t_first is not None:
            return self.t_first
        return pulse.t_center - 200.0


@dataclass(frozen=True)
class DynamicsGrid:
    """Output time grid for population-dynamics runs."""

    n_t: int = 1001
    dt: float = 5.0

    def times(self) -> np.ndarray:
        return np.arange(self.n_t) * self.dt


@dataclass(frozen=True)
class RunConfig:
    """Everything a CLI run needs: physics, drive, and grids."""

    system: SystemConfig
    pulse: PulseConfig
    grids: TimeGrids = TimeGrids()
    dynamics: DynamicsGrid = DynamicsGrid()


def _check_finite(diags, field_name, value):
    if not math.isfinite(value):
        diags.append(Diagnostic(field_name, "non-finite", f"value {value!r} is not finite"))
        return False
    return True


def validate_config(cfg: SystemConfig) -> SystemConfig:
    """Return the validated config, or raise ConfigError listing every violation.

    Validation is idempotent: validate(validate(c)) == validate(c).
    """
    d: list[Diagnostic] = []
    lv, ln, hf, dp = cfg.levels, cfg.lande, cfg.hyperfine, cfg.dephasing

    _check_finite(d, "levels.e_singlet", lv.e_singlet)
    _check_finite(d, "levels.e_triplet", lv.e_triplet)
    _check_finite(d, "lande.g_e", ln.g_e)
    _check_finite(d, "lande.g_h", ln.g_h)

    if _check_finite(d, "hyperfine.sigma_hf", hf.sigma_hf) and hf.sigma_hf < 0:
        d.append(Diagnostic("hyperfine.sigma_hf", "negative-width",
                            "hyperfine width must be >= 0"))
    if hf.n_samples < 1:
        d.append(Diagnostic("hyperfine.n_samples", "bad-ensemble-size",
                            "ensemble size must be >= 1"))
    for name, g in (("dephasing.gamma_s", dp.gamma_s), ("dephasing.gamma_t", dp.gamma_t)):
        if _check_finite(d, name, g) and g < 0:
            d.append(Diagnostic(name, "negative-dephasing-rate",
                                "negative dephasing rate"))
    _check_finite(d, "dipole.mu", cfg.dipole.mu)

    if d:
        raise ConfigError(d)
    return cfg


def validate_pulse(p: PulseConfig) -> PulseConfig:
    """Validate and normalize a pulse config (phase canonicalized to [0, 2pi))."""
    d: list[Diagnostic] = []
    for name, v in (("b0", p.b0), ("omega", p.omega), ("t_center", p.t_center),
                    ("sigma_t", p.sigma_t), ("phase", p.phase)):
        _check_finite(d, f"pulse.{name}", v)
    if p.coupling_scale is not None:
        _check_finite(d, "pulse.coupling_scale", p.coupling_scale)
    if math.isfinite(p.b0) and p.b0 < 0:
        d.append(Diagnostic("pulse.b0", "negative-amplitude", "field amplitude must be >= 0"))
    if math.isfinite(p.omega) and p.omega < 0:
        d.append(Diagnostic("pulse.omega", "negative-frequency", "frequency must be >= 0"))
    if math.isfinite(p.sigma_t) and p.sigma_t <= 0:
        d.append(Diagnostic("pulse.sigma_t", "bad-envelope-width", "envelope width must be > 0"))
    if p.n_phase < 1:
        d.append(Diagnostic("pulse.n_phase", "bad-phase-count", "phase sample count must be >= 1"))
    if d:
        raise ConfigError(d)
    phase = p.phase % (2.0 * math.pi)
    return p if phase == p.phase else replace(p, phase=phase)


def validate_grids(g: TimeGrids) -> TimeGrids:
    d: list[Diagnostic] = []
    if g.n_t1 < 1:
        d.append(Diagnostic("grids.n_t1", "bad-grid", "need at least one t1 point"))
    if g.n_t3 < 1:
        d.append(Diagnostic("grids.n_t3", "bad-grid", "need at least one t3 point"))
    if g.dt1 <= 0 or g.dt3 <= 0:
        d.append(Diagnostic("grids.dt", "bad-grid", "grid steps must be positive"))
    if g.t2 < 0:
        d.append(Diagnostic("grids.t2", "bad-grid", "population time must be >= 0"))
    if g.zero_pad < 1:
        d.append(Diagnostic("grids.zero_pad", "bad-grid", "zero_pad factor must be >= 1"))
    if d:
        raise ConfigError(d)
    return g


# --- flat key=value config documents -------------------------------------

_IDENT = object()


def _as_int(s):
    return int(s)


def _as_float(s):
    return float(s)


#: Known config keys. Unknown keys are an error (fail-closed).
KEY_CASTERS = {
    "e_singlet_mev": _as_float,
    "e_triplet_mev": _as_float,
    "g_e": _as_float,
    "g_h": _as_float,
    "sigma_hf_mev": _as_float,
    "n_hyperfine": _as_int,
    "gamma_s_per_fs": _as_float,
    "gamma_t_per_fs": _as_float,
    "seed": _as_int,
    "mu": _as_float,
    "b0_tesla": _as_float,
    "omega_thz": _as_float,
    "t_center_fs": _as_float,
    "sigma_t_fs": _as_float,
    "phase_rad": _as_float,
    "coupling_scale_mev_per_tesla": _as_float,
    "n_phase_samples": _as_int,
    "n_t1": _as_int,
    "dt1_fs": _as_float,
    "n_t3": _as_int,
    "dt3_fs": _as_float,
    "t2_fs": _as_float,
    "t_first_fs": _as_float,
    "zero_pad": _as_int,
    "n_t": _as_int,
    "dt_fs": _as_float,
}

DEFAULTS = {
    "e_singlet_mev": 1400.0,
    "e_triplet_mev": 1390.0,
    "g_e": 2.0,
    "g_h": 2.0,
    "sigma_hf_mev": 0.0,
    "n_hyperfine": 1,
    "gamma_s_per_fs": 1.0 / 80.0,
    "gamma_t_per_fs": 1.0 / 200.0,
    "seed": 1234,
    "mu": 1.0,
    "b0_tesla": 0.0,
    "omega_thz": 1.0,
    "t_center_fs": 200.0,
    "sigma_t_fs": 2000.0,
    "phase_rad": 0.0,
    "coupling_scale_mev_per_tesla": None,
    "n_phase_samples": 8,
    "n_t1": 128,
    "dt1_fs": 3.0,
    "n_t3": 128,
    "dt3_fs": 3.0,
    "t2_fs": 400.0,
    "t_first_fs": None,
    "zero_pad": 4,
    "n_t": 1001,
    "dt_fs": 5.0,
}


def parse_config_text(text: str) -> dict:
    """Parse a `key = value` document with `#` comments. Fail-closed on unknown keys."""
    diags: list[Diagnostic] = []
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            diags.append(Diagnostic(f"line {lineno}", "bad-syntax",
                                    f"expected 'key = value', got {raw.strip()!r}"))
            continue
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        caster = KEY_CASTERS.get(key)
        if caster is None:
            diags.append(Diagnostic(key, "unknown-key", f"unknown config key {key!r}"))
            continue
        try:
            values[key] = caster(val)
        except ValueError:
            diags.append(Diagnostic(key, "bad-value",
                                    f"cannot parse {val!r} for key {key!r}"))
    if diags:
        raise ConfigError(diags)
    return values


def build_run_config(mapping: dict) -> RunConfig:
    """Assemble and validate a RunConfig from a parsed key->value mapping."""
    unknown = [k for k in mapping if k not in KEY_CASTERS]
    if unknown:
        raise ConfigError([Diagnostic(k, "unknown-key", f"unknown config key {k!r}")
                           for k in unknown])
    kv = dict(DEFAULTS)
    kv.update(mapping)

    system = SystemConfig(
        levels=EnergyLevels(kv["e_singlet_mev"], kv["e_triplet_mev"]),
        lande=LandeFactors(kv["g_e"], kv["g_h"]),
        hyperfine=HyperfineConfig(kv["sigma_hf_mev"], kv["n_hyperfine"]),
        dephasing=DephasingConfig(kv["gamma_s_per_fs"], kv["gamma_t_per_fs"]),
        dipole=DipoleOperator(kv["mu"]),
        rng_seed=kv["seed"],
    )
    pulse = PulseConfig(
        b0=kv["b0_tesla"],
        omega=thz_to_rad_per_fs(kv["omega_thz"]),
        t_center=kv["t_center_fs"],
        sigma_t=kv["sigma_t_fs"],
        phase=kv["phase_rad"],
        coupling_scale=kv["coupling_scale_mev_per_tesla"],
        n_phase=kv["n_phase_samples"],
    )
    grids = TimeGrids(
        n_t1=kv["n_t1"], dt1=kv["dt1_fs"], n_t3=kv["n_t3"], dt3=kv["dt3_fs"],
        t2=kv["t2_fs"], t_first=kv["t_first_fs"], zero_pad=kv["zero_pad"],
    )
    dyn = DynamicsGrid(n_t=kv["n_t"], dt=kv["dt_fs"])
    return RunConfig(system=validate_config(system), pulse=validate_pulse(pulse),
                     grids=validate_grids(grids), dynamics=dyn)


def run_config_from_text(text: str) -> RunConfig:
    return build_run_config(parse_config_text(text))
