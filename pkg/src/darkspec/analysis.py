"""Inverse pipeline: peaks -> population-time traces -> coherence
frequencies -> bare-Hamiltonian reconstruction.

The reconstruction inverts the eigenstructure of the real symmetric
4x4 model in the basis (S, T-, T0, T+),

        [ S    0    A    0   ]
        [ 0   T-Z   B    0   ]
        [ A    B    T    B   ]
        [ 0    0    B   T+Z  ]

fitting the unknowns (S, T, Z) so the model eigenvalues match the
measured diagonal-peak energies, with the couplings (A, B) supplied by
cross-peak oscillation analysis. The 4-eigenvalue / 3-unknown problem is
overdetermined; a damped least-squares fit from multiple deterministic
starts keeps the inversion robust.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .constants import HBAR_MEV_FS
from .spectra import SpectrumMap

_TWO_PI_HBAR = 2.0 * np.pi * HBAR_MEV_FS


@dataclass(frozen=True)
class Peak2D:
    """One detected spectral feature, sub-bin refined."""

    omega1: float
    omega3: float
    amplitude: float
    is_diagonal: bool


@dataclass(frozen=True)
class T2Trace:
    """Amplitude of one (omega1, omega3) point across population times."""

    t2_values: np.ndarray
    amplitudes: np.ndarray


@dataclass(frozen=True)
class MultiExpFit:
    """Multi-exponential detrend result: y ~ sum_k c_k e^{-r_k t} + c0."""

    rates: np.ndarray
    coefficients: np.ndarray
    constant: float
    residual: T2Trace
    converged: bool
    cost: float


@dataclass(frozen=True)
class ReconstructionModel:
    """Fitted couplings and bare energies with the eigenvalue residual."""

    a_coupling: float
    b_coupling: float
    zeeman: float
    e_singlet_fit: float
    e_triplet_fit: float
    residual: float
    flagged: bool


def _quadratic_refine_1d(y_m, y_0, y_p) -> tuple[float, float]:
    """Sub-bin offset and refined height from three samples around a max."""
    denom = y_m - 2.0 * y_0 + y_p
    if denom >= 0.0 or abs(denom) < 1e-300:
        return 0.0, y_0
    delta = 0.5 * (y_m - y_p) / denom
    delta = float(np.clip(delta, -1.0, 1.0))
    height = y_0 - 0.25 * (y_m - y_p) * delta
    return delta, float(height)


def find_peaks(m: SpectrumMap, threshold_frac: float = 0.05,
               diag_tol: float = 4.0) -> list[Peak2D]:
    """Local maxima over 8-neighborhoods above a fraction of the global max.

    Peak coordinates are refined by separable quadratic interpolation;
    an empty result is valid. Scaling the map rescales amplitudes but
    leaves every coordinate unchanged.
    """
    if not 0.0 < threshold_frac < 1.0:
        raise ValueError("threshold_frac must be in (0, 1)")
    vals = np.asarray(m.values)
    if np.iscomplexobj(vals):
        vals = vals.real
    if not np.all(np.isfinite(vals)):
        raise ValueError("spectrum values must be finite")
    vmax = float(vals.max())
    if vmax <= 0.0:
        return []
    cut = threshold_frac * vmax

    core = vals[1:-1, 1:-1]
    neigh = [vals[1 + di:vals.shape[0] - 1 + di, 1 + dj:vals.shape[1] - 1 + dj]
             for di in (-1, 0, 1) for dj in (-1, 0, 1) if (di, dj) != (0, 0)]
    is_max = (core > cut)
    for nb in neigh:
        is_max &= core > nb
    ii, jj = np.nonzero(is_max)

    d1, d3 = m.d_omega1, m.d_omega3
    peaks = []
    for i, j in zip(ii + 1, jj + 1):
        off1, h1 = _quadratic_refine_1d(vals[i - 1, j], vals[i, j], vals[i + 1, j])
        off3, h3 = _quadratic_refine_1d(vals[i, j - 1], vals[i, j], vals[i, j + 1])
        o1 = float(m.omega1_grid[i] + off1 * d1)
        o3 = float(m.omega3_grid[j] + off3 * d3)
        amp = max(h1, h3)
        peaks.append(Peak2D(omega1=o1, omega3=o3, amplitude=amp,
                            is_diagonal=abs(o1 - o3) <= diag_tol))
    peaks.sort(key=lambda p: -p.amplitude)
    return peaks


def _bilinear(m: SpectrumMap, omega1: float, omega3: float) -> float:
    o1, o3 = m.omega1_grid, m.omega3_grid
    if not (o1[0] <= omega1 <= o1[-1] and o3[0] <= omega3 <= o3[-1]):
        raise ValueError(f"coordinate ({omega1}, {omega3}) outside the map grid")
    vals = np.asarray(m.values)
    if np.iscomplexobj(vals):
        vals = vals.real
    i = min(int(np.searchsorted(o1, omega1, side="right")) - 1, o1.size - 2)
    j = min(int(np.searchsorted(o3, omega3, side="right")) - 1, o3.size - 2)
    i = max(i, 0)
    j = max(j, 0)
    u = (omega1 - o1[i]) / (o1[i + 1] - o1[i])
    v = (omega3 - o3[j]) / (o3[j + 1] - o3[j])
    return float((1 - u) * (1 - v) * vals[i, j] + u * (1 - v) * vals[i + 1, j]
                 + (1 - u) * v * vals[i, j + 1] + u * v * vals[i + 1, j + 1])


def extract_trace(maps, at: tuple[float, float]) -> T2Trace:
    """Bilinear interpolation of each map at one fixed coordinate.

    All maps must share their frequency grids; values on a grid node
    reproduce the stored samples exactly.
    """
    maps = list(maps)
    if not maps:
        raise ValueError("need at least one map")
    ref1, ref3 = maps[0].omega1_grid, maps[0].omega3_grid
    for mm in maps[1:]:
        if (mm.omega1_grid.shape != ref1.shape or mm.omega3_grid.shape != ref3.shape
                or not np.allclose(mm.omega1_grid, ref1)
                or not np.allclose(mm.omega3_grid, ref3)):
            raise ValueError("maps must share frequency grids")
    t2s = np.array([mm.t2 for mm in maps])
    amps = np.array([_bilinear(mm, at[0], at[1]) for mm in maps])
    return T2Trace(t2_values=t2s, amplitudes=amps)


def detrend_multiexp(trace: T2Trace, n_exp: int = 2,
                     max_iter: int = 200) -> MultiExpFit:
    """Variable-projection least squares of a multi-exponential trend.

    The linear coefficients (and constant offset) are projected out for
    every trial rate vector, so the nonlinear search runs only over the
    n_exp decay rates. Non-convergence returns the best parameters found
    with `converged=False` instead of raising.
    """
    if n_exp not in (1, 2, 3):
        raise ValueError("n_exp must be 1, 2 or 3")
    t = np.asarray(trace.t2_values, dtype=float)
    y = np.asarray(trace.amplitudes, dtype=float)
    if t.size < 4 * n_exp:
        raise ValueError(f"trace too short for n_exp={n_exp}: need >= {4 * n_exp}")
    span = float(t[-1] - t[0]) if t[-1] > t[0] else 1.0
    scale = float(np.max(np.abs(y))) or 1.0

    def design(rates):
        cols = [np.exp(-np.clip(r, 0.0, None) * (t - t[0])) for r in rates]
        cols.append(np.ones_like(t))
        return np.stack(cols, axis=1)

    def solve_linear(rates):
        phi = design(rates)
        coef, *_ = np.linalg.lstsq(phi, y, rcond=None)
        return coef, phi

    def projected_residual(rates):
        coef, phi = solve_linear(rates)
        return (y - phi @ coef) / scale

    base_rates = np.array([1.0, 4.0, 16.0])[:n_exp] / span
    starts = [base_rates * f for f in (0.25, 1.0, 4.0, 16.0)]
    best = None
    for r0 in starts:
        res = least_squares(projected_residual, r0, method="trf",
                            bounds=(0.0, np.inf), max_nfev=max_iter,
                            xtol=1e-14, ftol=1e-14, gtol=1e-14)
        key = (res.cost, tuple(r0))
        if best is None or key < best[0]:
            best = (key, res)
    res = best[1]
    coef, phi = solve_linear(res.x)
    resid = y - phi @ coef
    return MultiExpFit(
        rates=np.asarray(res.x), coefficients=coef[:-1], constant=float(coef[-1]),
        residual=T2Trace(t2_values=t, amplitudes=resid),
        converged=bool(res.status > 0), cost=float(res.cost),
    )


def oscillation_frequencies(residual: T2Trace, n_freq: int = 2,
                            zero_pad: int = 8,
                            min_weight_frac: float = 0.05) -> list[tuple[float, float]]:
    """Dominant oscillation energies (meV) of a detrended trace.

    Zero-padded discrete transform of the residual; the top n_freq local
    spectral maxima are sub-bin refined by quadratic interpolation and
    converted to energy via hbar. A zero residual yields an empty list.
    """
    t = np.asarray(residual.t2_values, dtype=float)
    y = np.asarray(residual.amplitudes, dtype=float)
    if t.size < 2:
        return []
    dt = np.diff(t)
    if np.any(np.abs(dt - dt[0]) > 1e-9 * max(abs(t[-1]), 1.0)):
        raise ValueError("population-time spacing must be uniform")
    dt = float(dt[0])
    if not np.any(np.abs(y) > 0.0):
        return []
    n_pad = zero_pad * y.size
    spec = np.abs(np.fft.rfft(y, n=n_pad))
    emax = float(spec.max())
    if emax == 0.0:
        return []
    d_e = _TWO_PI_HBAR / (n_pad * dt)

    cands = []
    for k in range(1, spec.size - 1):
        if spec[k] > spec[k - 1] and spec[k] > spec[k + 1] \
                and spec[k] >= min_weight_frac * emax:
            off, height = _quadratic_refine_1d(spec[k - 1], spec[k], spec[k + 1])
            cands.append(((k + off) * d_e, height))
    cands.sort(key=lambda fw: -fw[1])
    return cands[:n_freq]


def reconstruction_matrix(e_s: float, e_t: float, z: float,
                          a: float, b: float) -> np.ndarray:
    """Real symmetric model matrix in the basis (S, T-, T0, T+)."""
    return np.array([
        [e_s, 0.0, a, 0.0],
        [0.0, e_t - z, b, 0.0],
        [a, b, e_t, b],
        [0.0, 0.0, b, e_t + z],
    ])


def reconstruct_hamiltonian(eigen_peaks, a: float, b: float,
                            n_starts: int = 16,
                            residual_tol: float = 1e-6) -> ReconstructionModel:
    """Recover (E_S, E_T, Z) whose model eigenvalues match four peaks.

    Sorted eigenvalues are matched against sorted peak energies (both
    are totally ordered, so no permutation search is needed). The fit is
    damped least squares from >= 16 deterministic starts seeded from the
    input spread; a residual above tolerance flags the result instead of
    failing silently. Z is reported non-negative (eigenvalues are even
    in Z).
    """
    peaks = np.sort(np.asarray(eigen_peaks, dtype=float))
    if peaks.size != 4:
        raise ValueError("need exactly four diagonal-peak energies")
    if not (a > 0 and b > 0):
        raise ValueError("couplings a, b must be positive")

    spread = max(float(peaks[-1] - peaks[0]), 1e-3)
    mean = float(peaks.mean())

    def resid(theta):
        e_s, e_t, z = theta
        vals = np.linalg.eigvalsh(reconstruction_matrix(e_s, e_t, z, a, b))
        return vals - peaks

    starts = []
    for e_s0 in (*peaks, mean):
        e_t0 = (peaks.sum() - e_s0) / 3.0
        for z0 in (spread / 8.0, spread / 3.0, spread):
            starts.append((float(e_s0), float(e_t0), float(z0)))
    starts = starts[:max(n_starts, len(starts))]

    best = None
    for idx, theta0 in enumerate(starts):
        res = least_squares(resid, theta0, method="lm", xtol=1e-15,
                            ftol=1e-15, gtol=1e-15, max_nfev=2000)
        key = (res.cost, idx)
        if best is None or key < best[0]:
            best = (key, res)
    res = best[1]
    e_s, e_t, z = (float(v) for v in res.x)
    z = abs(z)
    rnorm = float(np.linalg.norm(resid((e_s, e_t, z))))

    model = reconstruction_matrix(e_s, e_t, z, a, b)
    trace_err = abs(np.trace(model) - (e_s + 3.0 * e_t))
    assert trace_err <= 1e-8 * max(1.0, abs(e_s) + 3.0 * abs(e_t)), \
        "eigenvalue sum rule violated"

    return ReconstructionModel(
        a_coupling=a, b_coupling=b, zeeman=z, e_singlet_fit=e_s,
        e_triplet_fit=e_t, residual=rnorm,
        flagged=rnorm > residual_tol * max(1.0, abs(mean)),
    )


def diagonal_peak_energies(peaks, n: int = 4) -> np.ndarray:
    """Energies of the n strongest diagonal peaks, via (omega1+omega3)/2."""
    diag = [p for p in peaks if p.is_diagonal]
    if len(diag) < n:
        raise ValueError(f"found only {len(diag)} diagonal peaks, need {n}")
    chosen = diag[:n]
    return np.sort(np.array([(p.omega1 + p.omega3) / 2.0 for p in chosen]))
