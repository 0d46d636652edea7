"""Frequency-domain spectra: 2D maps, linear absorption, pump-probe.

Discrete approximation of the half-infinite double Fourier integral

    S(O3, t2, O1) = int_0^inf dt1 int_0^inf dt3 S(t3,t2,t1)
                    e^{i O3 t3 / hbar} e^{+- i O1 t1 / hbar}

with the + (-) t1 kernel for non-rephasing (rephasing) grids so that
both place peaks at positive excitation frequencies. The t = 0 sample is
half-weighted (trapezoid at the integral boundary) and grids are
zero-padded (x4 by default, no apodization) before the transform; both
choices are part of the bit-exact output contract.

Displayed spectra carry the heterodyne factor i*hbar^3, which cancels
the (i/hbar)^3 response prefactor so that the all-field-free system
produces positive absorptive peaks.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .config import PulseConfig, SystemConfig, TimeGrids
from .constants import HBAR_MEV_FS, HC_EV_NM
from .response import (ResponseGrid, ResponseSet, averaged_response,
                       first_order_coherence)

#: Converts raw response values to detected-signal scale (see module doc).
SIGNAL_SCALE = 1j * HBAR_MEV_FS ** 3

_TWO_PI_HBAR = 2.0 * np.pi * HBAR_MEV_FS


@dataclass(frozen=True)
class SpectrumMap:
    """2D spectrum on ascending frequency axes (meV)."""

    omega1_grid: np.ndarray
    omega3_grid: np.ndarray
    values: np.ndarray            # (n_omega1, n_omega3)
    t2: float
    kind: str                     # rephasing | nonrephasing | total-real

    @property
    def d_omega1(self) -> float:
        return float(self.omega1_grid[1] - self.omega1_grid[0])

    @property
    def d_omega3(self) -> float:
        return float(self.omega3_grid[1] - self.omega3_grid[0])


@dataclass(frozen=True)
class AbsorptionSpectrum:
    """1D spectrum: real intensity on an ascending frequency axis (meV)."""

    omega_grid: np.ndarray
    intensity: np.ndarray

    def wavelengths_nm(self) -> np.ndarray:
        """Axis in nm via the energy-wavelength product (meV -> eV)."""
        return HC_EV_NM / (self.omega_grid * 1e-3)


def _weights(n: int, window: str) -> np.ndarray:
    w = np.ones(n)
    w[0] = 0.5
    if window == "cosine":
        w *= 0.5 * (1.0 + np.cos(np.pi * np.arange(n) / n))
    elif window != "none":
        raise ValueError(f"unknown window {window!r}")
    return w


def _axis_freqs(n_pad: int, dt: float, omega_ref: float) -> np.ndarray:
    return np.fft.fftshift(np.fft.fftfreq(n_pad, dt)) * _TWO_PI_HBAR + omega_ref


def _half_infinite_transform(values, dt, n_pad, sign, axis):
    """Sum_n v_n e^{sign * i O t_n / hbar} dt along one axis, padded/shifted."""
    if sign > 0:
        out = np.fft.ifft(values, n=n_pad, axis=axis) * n_pad
    else:
        out = np.fft.fft(values, n=n_pad, axis=axis)
    return np.fft.fftshift(out, axes=axis) * dt


def twod_transform(r: ResponseGrid, kind: str, zero_pad: int = 4,
                   window: str = "none") -> SpectrumMap:
    """Transform one response grid with the given sign convention.

    kind must be 'rephasing' or 'nonrephasing'; the t3 kernel is always
    e^{+i O3 t3 / hbar}.
    """
    if kind not in ("rephasing", "nonrephasing"):
        raise ValueError(f"kind must be rephasing or nonrephasing, got {kind!r}")
    if zero_pad < 1:
        raise ValueError("zero_pad must be >= 1")
    v = np.asarray(r.values, dtype=complex)
    n1, n3 = v.shape
    v = v * _weights(n1, window)[:, None] * _weights(n3, window)[None, :]
    p1, p3 = zero_pad * n1, zero_pad * n3
    sign1 = -1 if kind == "rephasing" else +1
    out = _half_infinite_transform(v, r.dt1, p1, sign1, axis=0)
    out = _half_infinite_transform(out, r.dt3, p3, +1, axis=1)
    return SpectrumMap(
        omega1_grid=_axis_freqs(p1, r.dt1, r.omega_ref),
        omega3_grid=_axis_freqs(p3, r.dt3, r.omega_ref),
        values=out, t2=r.t2, kind=kind,
    )


def spectrum_map(rset: ResponseSet, kind: str = "total", zero_pad: int = 4,
                 window: str = "none") -> SpectrumMap:
    """Displayed 2D spectrum of a pathway-summed response set.

    'total' gives Re(S_R + S_NR) on the detected-signal scale; the pure
    'rephasing'/'nonrephasing' kinds stay complex.
    """
    if kind == "rephasing":
        m = twod_transform(rset.rephasing_sum(), "rephasing", zero_pad, window)
        return replace(m, values=SIGNAL_SCALE * m.values)
    if kind == "nonrephasing":
        m = twod_transform(rset.nonrephasing_sum(), "nonrephasing", zero_pad, window)
        return replace(m, values=SIGNAL_SCALE * m.values)
    if kind != "total":
        raise ValueError(f"kind must be total, rephasing or nonrephasing, got {kind!r}")
    m_r = twod_transform(rset.rephasing_sum(), "rephasing", zero_pad, window)
    m_nr = twod_transform(rset.nonrephasing_sum(), "nonrephasing", zero_pad, window)
    total = SIGNAL_SCALE * (m_r.values + m_nr.values)
    return replace(m_r, values=total.real, kind="total-real")


def combined_complex_map(rset: ResponseSet, zero_pad: int = 4,
                         window: str = "none") -> SpectrumMap:
    """Complex S_R + S_NR map (detected-signal scale) for identities."""
    m_r = twod_transform(rset.rephasing_sum(), "rephasing", zero_pad, window)
    m_nr = twod_transform(rset.nonrephasing_sum(), "nonrephasing", zero_pad, window)
    return replace(m_r, values=SIGNAL_SCALE * (m_r.values + m_nr.values),
                   kind="total-complex")


def absorption(cfg: SystemConfig, pulse: PulseConfig, grids: TimeGrids,
               rtol: float = 1e-9, window: str = "none",
               hf_samples=None) -> AbsorptionSpectrum:
    """Linear absorption from the first-order coherence decay.

    I(O) = int_0^inf dt e^{i O t / hbar} J(t) with J the ensemble-mean
    first-order signal; the intensity is Re I. The projection-slice
    identity ties this to the O3-integrated t2 = 0 2D map and is tested,
    not used as the implementation route.
    """
    j = first_order_coherence(cfg, pulse, grids, rtol=rtol, hf_samples=hf_samples)
    w = _weights(j.size, window)
    n_pad = grids.zero_pad * j.size
    spec = _half_infinite_transform(j * w, grids.dt1, n_pad, +1, axis=0)
    omega = _axis_freqs(n_pad, grids.dt1, cfg.omega_ref)
    return AbsorptionSpectrum(omega_grid=omega, intensity=spec.real)


def transient_absorption(cfg: SystemConfig, pulse: PulseConfig, t2: float,
                         grids: TimeGrids, rtol: float = 1e-9,
                         hf_samples=None) -> AbsorptionSpectrum:
    """Pump-probe spectrum: the t1 = 0 response, transformed along t3.

    With an impulsive (spectrally flat) pump the summed pathway response
    at t1 = 0 is the probe-induced polarization; the displayed spectrum
    is Re of its detected-signal transform.
    """
    if t2 < 0:
        raise ValueError("population time must be >= 0")
    g1 = replace(grids, n_t1=1, t2=float(t2))
    rset = averaged_response(cfg, pulse, g1, rtol=rtol) if hf_samples is None \
        else averaged_response_with_samples(cfg, pulse, g1, hf_samples, rtol)
    sl = rset.total.values[0, :]
    w = _weights(sl.size, "none")
    n_pad = grids.zero_pad * sl.size
    spec = _half_infinite_transform(sl * w, grids.dt3, n_pad, +1, axis=0)
    spec = SIGNAL_SCALE * spec
    omega = _axis_freqs(n_pad, grids.dt3, cfg.omega_ref)
    return AbsorptionSpectrum(omega_grid=omega, intensity=spec.real)


def averaged_response_with_samples(cfg, pulse, grids, hf_samples, rtol=1e-9):
    from .response import response_movie

    return response_movie(cfg, pulse, grids, [grids.t2], rtol=rtol,
                          hf_samples=hf_samples)[0]


def integrate_out_omega3(m: SpectrumMap) -> tuple[np.ndarray, np.ndarray]:
    """(omega1 axis, int dO3 values): the projection-slice left-hand side."""
    return m.omega1_grid, m.values.sum(axis=1) * m.d_omega3


# --- rendering ------------------------------------------------------------

def _diverging_rgb(t: np.ndarray) -> np.ndarray:
    """Symmetric blue-white-red map on t in [0, 1]; 0.5 is white."""
    t = np.clip(t, 0.0, 1.0)
    lo = np.clip(2.0 * t, 0.0, 1.0)
    hi = np.clip(2.0 - 2.0 * t, 0.0, 1.0)
    rgb = np.empty(t.shape + (3,), dtype=np.uint8)
    rgb[..., 0] = np.round(255 * lo)
    rgb[..., 1] = np.round(255 * np.minimum(lo, hi))
    rgb[..., 2] = np.round(255 * hi)
    return rgb


def render_heatmap(m: SpectrumMap, path) -> None:
    """Write a binary PPM with a symmetric diverging colormap.

    The color scale runs over [-vmax, +vmax] with vmax = max |value|, so
    a map and its negation give mirror images. A map with zero dynamic
    range renders uniformly at the colormap midpoint. Axis metadata goes
    to a '<path>.meta.txt' sidecar.
    """
    vals = np.asarray(m.values)
    if np.iscomplexobj(vals):
        vals = vals.real
    if not np.all(np.isfinite(vals)):
        raise ValueError("heatmap values must be finite")
    vmax = float(np.max(np.abs(vals)))
    if vmax == 0.0 or float(np.max(vals) - np.min(vals)) == 0.0:
        t = np.full(vals.shape, 0.5)
    else:
        t = 0.5 * (vals / vmax + 1.0)
    # pixel rows run from high omega3 down, columns from low omega1 up
    rgb = _diverging_rgb(t.T[::-1, :])
    h, w = rgb.shape[:2]
    try:
        with open(path, "wb") as fh:
            fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
            fh.write(rgb.tobytes())
        with open(f"{path}.meta.txt", "w", encoding="utf-8") as fh:
            fh.write(f"kind = {m.kind}\n")
            fh.write(f"t2_fs = {m.t2:.9g}\n")
            fh.write(f"omega1_mev = {m.omega1_grid[0]:.9g} .. {m.omega1_grid[-1]:.9g}\n")
            fh.write(f"omega3_mev = {m.omega3_grid[0]:.9g} .. {m.omega3_grid[-1]:.9g}\n")
            fh.write(f"omega1_nm = {HC_EV_NM / (m.omega1_grid[-1] * 1e-3):.9g} .. "
                     f"{HC_EV_NM / (m.omega1_grid[0] * 1e-3):.9g}\n"
                     if m.omega1_grid[0] > 0 else "omega1_nm = n/a\n")
            fh.write(f"value_scale = {vmax:.9g}\n")
    except OSError as exc:
        raise OSError(f"cannot write heatmap {path}: {exc}") from exc


def write_map_csv(m: SpectrumMap, path) -> None:
    """CSV rows: omega1_mev, omega3_mev, value (real part for total maps)."""
    vals = np.asarray(m.values)
    if np.iscomplexobj(vals):
        vals = vals.real
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("omega1_mev,omega3_mev,value\n")
        for i, o1 in enumerate(m.omega1_grid):
            for j, o3 in enumerate(m.omega3_grid):
                fh.write(f"{o1:.9g},{o3:.9g},{vals[i, j]:.17g}\n")


def write_map_binary(m: SpectrumMap, path) -> None:
    """Binary grid with the response header layout; dt fields carry the
    frequency steps in meV and the omega_ref field the axis origins."""
    from .response import ResponseGrid, write_response_binary

    grid = ResponseGrid(values=np.asarray(m.values, dtype=complex),
                        dt1=m.d_omega1, dt3=m.d_omega3, t2=m.t2,
                        omega_ref=float(m.omega1_grid[0]), kind=m.kind)
    write_response_binary(grid, path)


def write_absorption_csv(a: AbsorptionSpectrum, path) -> None:
    """CSV rows: omega_mev, wavelength_nm, intensity."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("omega_mev,wavelength_nm,intensity\n")
        for o, v in zip(a.omega_grid, a.intensity):
            lam = HC_EV_NM / (o * 1e-3) if o > 0 else float("nan")
            fh.write(f"{o:.9g},{lam:.9g},{v:.17g}\n")
