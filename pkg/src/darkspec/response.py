"""Third-order response on (t1, t2, t3) grids by explicit pathway propagation.

Only ground-state-bleach and stimulated-emission pathways exist in the
five-level model (no states above the charge-pair manifold), each in a
rephasing and a non-rephasing variant:

    SE_NR :  ket, bra, bra   (t1 coherence |X><g|)
    SE_R  :  bra, ket, bra   (t1 coherence |g><X|)
    GSB_R :  bra, bra, ket
    GSB_NR:  ket, ket, ket

Dipole interactions are instantaneous (impulsive limit) and the drive is
treated exactly with absolute-time bookkeeping: interaction k happens at
t_first + (elapsed delays), so the drive is never shifted per delay.

Grids are stored in the frame rotating at omega_ref = (E_S + E_T)/2.
Propagation runs on the invariant sectors of the master equation (the
ground block, the excited-ground coherence block, and the excited
block), which is exactly equivalent to propagating the full 5x5 density
matrix because neither H(t) nor the dephasing couples the sectors.
Values carry the (i/hbar)^3 mu^4 prefactor of the response function.
"""

from __future__ import annotations

import enum
import math
import struct
from dataclasses import dataclass, replace

import numpy as np

from .config import PulseConfig, SystemConfig, TimeGrids
from .constants import HBAR_MEV_FS
from .integrate import integrate_to_checkpoints, step_cap
from .pulse import HyperfineSample, draw_hyperfine_ensemble, phase_grid
from .spindyn import coupling_bound

_SQRT2 = math.sqrt(2.0)
_INV_HBAR = 1.0 / HBAR_MEV_FS

# Excited-block basis ordering: S=0, T0=1, T+=2, T-=3.
_XS, _XT0, _XTP, _XTM = 0, 1, 2, 3


class PathwayKind(enum.Enum):
    GSB_R = "GSB_R"
    GSB_NR = "GSB_NR"
    SE_R = "SE_R"
    SE_NR = "SE_NR"

    @property
    def rephasing(self) -> bool:
        return self in (PathwayKind.GSB_R, PathwayKind.SE_R)


@dataclass(frozen=True)
class ResponseGrid:
    """Complex response values on the t1 x t3 grid at fixed t2.

    Values are stored in the omega_ref rotating frame, row-major in t1.
    """

    values: np.ndarray
    dt1: float
    dt3: float
    t2: float
    omega_ref: float
    kind: str
    t_first: float = 0.0

    @property
    def n_t1(self) -> int:
        return self.values.shape[0]

    @property
    def n_t3(self) -> int:
        return self.values.shape[1]

    def t1_grid(self) -> np.ndarray:
        return np.arange(self.n_t1) * self.dt1

    def t3_grid(self) -> np.ndarray:
        return np.arange(self.n_t3) * self.dt3


@dataclass(frozen=True)
class ResponseSet:
    """All four pathway grids plus their sum, at one population time."""

    pathways: dict
    total: ResponseGrid

    @property
    def t2(self) -> float:
        return self.total.t2

    def rephasing_sum(self) -> ResponseGrid:
        v = (self.pathways[PathwayKind.GSB_R].values
             + self.pathways[PathwayKind.SE_R].values)
        return replace(self.total, values=v, kind="rephasing")

    def nonrephasing_sum(self) -> ResponseGrid:
        v = (self.pathways[PathwayKind.GSB_NR].values
             + self.pathways[PathwayKind.SE_NR].values)
        return replace(self.total, values=v, kind="nonrephasing")


@dataclass(frozen=True)
class _EngineParams:
    """Scalar parameters of the batched sector propagation."""

    b0: float
    omega: float
    t_center: float
    sigma_t: float
    base_phase: float
    s_e: float
    s_h: float
    s_mean: float
    de_s: float           # E_S - omega_ref
    de_t: float           # E_T - omega_ref
    lam_s: float          # gamma_S / 2
    lam_t: float          # gamma_T / 2
    g_st: float           # (gamma_S + gamma_T) / 2
    max_step: float


def _make_params(cfg: SystemConfig, pulse: PulseConfig, hf_samples) -> _EngineParams:
    s_e, s_h, s_mean = pulse.scales(cfg.lande)
    omega_ref = cfg.omega_ref
    detuning = cfg.levels.e_singlet - cfg.levels.e_triplet
    cap = step_cap(pulse.omega,
                   coupling_bound(pulse, cfg.lande, hf_samples, detuning),
                   HBAR_MEV_FS)
    return _EngineParams(
        b0=pulse.b0, omega=pulse.omega, t_center=pulse.t_center,
        sigma_t=pulse.sigma_t, base_phase=pulse.phase,
        s_e=s_e, s_h=s_h, s_mean=s_mean,
        de_s=cfg.levels.e_singlet - omega_ref,
        de_t=cfg.levels.e_triplet - omega_ref,
        lam_s=0.5 * cfg.dephasing.gamma_s,
        lam_t=0.5 * cfg.dephasing.gamma_t,
        g_st=0.5 * (cfg.dephasing.gamma_s + cfg.dephasing.gamma_t),
        max_step=cap,
    )


def _fields(par: _EngineParams, t_abs, i_e, i_h, phi):
    """Effective couplings (delta0, z, c) at per-branch absolute times."""
    u = (t_abs - par.t_center) / par.sigma_t
    env = par.b0 * np.exp(-0.5 * u * u)
    arg = par.omega * t_abs + par.base_phase + phi
    bz = env * np.sin(arg)
    bx = -env * np.cos(arg)
    delta0 = -0.5 * (par.s_e - par.s_h) * bz + 0.5 * (i_e - i_h)
    z = -0.5 * (par.s_e + par.s_h) * bz + 0.5 * (i_e + i_h)
    c = _SQRT2 * par.s_mean * bx
    return delta0, z, c


def _coherence_rhs(par: _EngineParams, t_off, i_e, i_h, phi):
    """RHS for excited-ground coherence columns, state shape (B, 4, K).

    d y/ds = [-i (H_X - omega_ref) / hbar - diag(lam)] y, with H_X real
    symmetric; the bra-side evolution is the complex conjugate.
    """
    lam = np.array([par.lam_s, par.lam_t, par.lam_t, par.lam_t])

    def rhs(s, y):
        delta0, z, c = _fields(par, t_off + s, i_e, i_h, phi)
        d0 = delta0[:, None]
        cc = c[:, None]
        zz = z[:, None]
        hy = np.empty_like(y)
        hy[:, _XS] = par.de_s * y[:, _XS] + d0 * y[:, _XT0]
        hy[:, _XT0] = d0 * y[:, _XS] + par.de_t * y[:, _XT0] + cc * (y[:, _XTP] + y[:, _XTM])
        hy[:, _XTP] = cc * y[:, _XT0] + (par.de_t + zz) * y[:, _XTP]
        hy[:, _XTM] = cc * y[:, _XT0] + (par.de_t - zz) * y[:, _XTM]
        return (-1j * _INV_HBAR) * hy - lam[None, :, None] * y

    return rhs


def _xblock_rhs(par: _EngineParams, t_off, i_e, i_h, phi):
    """RHS for the excited 4x4 block, state shape (B, 4, 4).

    dM/ds = -(i/hbar)[H_X, M] - G o M; the projector dissipator reduces
    to the elementwise mask G with (gamma_S+gamma_T)/2 on S-triplet
    coherences and zero elsewhere inside the excited block.
    """
    g_mask = np.zeros((4, 4))
    g_mask[_XS, 1:] = par.g_st
    g_mask[1:, _XS] = par.g_st

    def rhs(s, m):
        delta0, z, c = _fields(par, t_off + s, i_e, i_h, phi)
        d0 = delta0[:, None]
        cc = c[:, None]
        dp = (par.de_t + z)[:, None]
        dm = (par.de_t - z)[:, None]
        hm = np.empty_like(m)
        hm[:, _XS] = par.de_s * m[:, _XS] + d0 * m[:, _XT0]
        hm[:, _XT0] = d0 * m[:, _XS] + par.de_t * m[:, _XT0] + cc * (m[:, _XTP] + m[:, _XTM])
        hm[:, _XTP] = cc * m[:, _XT0] + dp * m[:, _XTP]
        hm[:, _XTM] = cc * m[:, _XT0] + dm * m[:, _XTM]
        mt = m.transpose(0, 2, 1)
        mh = np.empty_like(m)
        mh[:, _XS] = par.de_s * mt[:, _XS] + d0 * mt[:, _XT0]
        mh[:, _XT0] = d0 * mt[:, _XS] + par.de_t * mt[:, _XT0] + cc * (mt[:, _XTP] + mt[:, _XTM])
        mh[:, _XTP] = cc * mt[:, _XT0] + dp * mt[:, _XTP]
        mh[:, _XTM] = cc * mt[:, _XT0] + dm * mt[:, _XTM]
        return (-1j * _INV_HBAR) * (hm - mh.transpose(0, 2, 1)) - g_mask[None] * m

    return rhs


def _propagate_sector(kind: str, par: _EngineParams, t_off, i_e, i_h, phi,
                      y0: np.ndarray, checkpoints, on_checkpoint,
                      rtol: float, atol: float):
    """Batched sector sweep from local time 0 through the checkpoints.

    Uses the fused kernels when available, the generic integrator
    otherwise; both honor the same tableau, tolerances and step cap.
    """
    from . import _fastpath
    from .integrate import drive_adaptive

    step = _fastpath.make_fused_step(kind, _fastpath.pack_params(par),
                                     t_off, i_e, i_h, phi, y0.shape, rtol, atol)
    if step is not None:
        return drive_adaptive(step, y0, 0.0, checkpoints, rtol=rtol, atol=atol,
                              max_step=par.max_step, on_checkpoint=on_checkpoint)
    rhs_factory = _coherence_rhs if kind == "columns" else _xblock_rhs
    rhs = rhs_factory(par, np.asarray(t_off, dtype=float),
                      np.asarray(i_e, dtype=float), np.asarray(i_h, dtype=float),
                      np.asarray(phi, dtype=float))
    return integrate_to_checkpoints(rhs, y0, 0.0, checkpoints, rtol=rtol,
                                    atol=atol, max_step=par.max_step,
                                    on_checkpoint=on_checkpoint)


def _ensemble_arrays(cfg: SystemConfig, pulse: PulseConfig, hf_samples=None):
    samples = (list(hf_samples) if hf_samples is not None
               else draw_hyperfine_ensemble(cfg.hyperfine, cfg.rng()))
    phases = phase_grid(pulse.n_phase)
    i_e = np.repeat([h.i_e for h in samples], phases.size)
    i_h = np.repeat([h.i_h for h in samples], phases.size)
    phi = np.tile(phases, len(samples))
    return samples, i_e, i_h, phi


def first_order_coherence(cfg: SystemConfig, pulse: PulseConfig,
                          grids: TimeGrids, rtol: float = 1e-9,
                          atol: float = 1e-12, hf_samples=None) -> np.ndarray:
    """Ensemble-averaged first-order coherence decay on the t1 grid.

    Returns mu^2 <S| W(t) |S> in the rotating frame (the co-rotating
    detection component; the counter-rotating term lies far outside the
    stored bandwidth and is omitted).
    """
    samples, i_e, i_h, phi = _ensemble_arrays(cfg, pulse, hf_samples)
    par = _make_params(cfg, pulse, samples)
    t_first = grids.first_interaction_time(pulse)
    n_members = i_e.size
    t_off = np.full(n_members, t_first)

    y0 = np.zeros((n_members, 4, 1), dtype=complex)
    y0[:, _XS, 0] = 1.0
    out = np.empty(grids.n_t1, dtype=complex)

    def grab(idx, s, y):
        out[idx] = y[:, _XS, 0].mean()

    _propagate_sector("columns", par, t_off, i_e, i_h, phi, y0,
                      grids.t1_grid(), grab, rtol, atol)
    return cfg.dipole.mu ** 2 * out


def response_movie(cfg: SystemConfig, pulse: PulseConfig, grids: TimeGrids,
                   t2_list, rtol: float = 1e-9, atol: float = 1e-12,
                   progress=None, hf_samples=None) -> list[ResponseSet]:
    """Ensemble-averaged pathway responses at each population time.

    The population-time leg is propagated once through the sorted t2
    checkpoints (shared-segment caching); each checkpoint spawns an
    independent detection-time sweep. Results are deterministic under a
    fixed seed: members enter a fixed-order batched average.
    """
    t2_list = np.atleast_1d(np.asarray(t2_list, dtype=float))
    if t2_list.size < 1 or np.any(np.diff(t2_list) < 0) or t2_list[0] < 0:
        raise ValueError("t2 list must be ascending and non-negative")

    samples, i_e, i_h, phi = _ensemble_arrays(cfg, pulse, hf_samples)
    par = _make_params(cfg, pulse, samples)
    t_first = grids.first_interaction_time(pulse)
    n_members = i_e.size
    n1, n3 = grids.n_t1, grids.n_t3
    t1g, t3g = grids.t1_grid(), grids.t3_grid()
    mu4 = cfg.dipole.mu ** 4
    prefactor = (1j * _INV_HBAR) ** 3 * mu4

    # --- t1 leg: evolve the ket column |S> once per ensemble member.
    t_off1 = np.full(n_members, t_first)
    y0 = np.zeros((n_members, 4, 1), dtype=complex)
    y0[:, _XS, 0] = 1.0
    w_all = np.empty((n_members, n1, 4), dtype=complex)

    def grab_w(idx, s, y):
        w_all[:, idx, :] = y[:, :, 0]

    _propagate_sector("columns", par, t_off1, i_e, i_h, phi, y0, t1g,
                      grab_w, rtol, atol)
    w_s = w_all[:, :, _XS]                       # (members, N1)

    # --- population-time leg over branches (member, t1 index).
    branch_ie = np.repeat(i_e, n1)
    branch_ih = np.repeat(i_h, n1)
    branch_phi = np.repeat(phi, n1)
    t_off2 = t_first + np.tile(t1g, n_members)   # absolute second-interaction time

    m0 = np.zeros((n_members * n1, 4, 4), dtype=complex)
    m0[:, :, _XS] = w_all.reshape(n_members * n1, 4)

    results: list[ResponseSet] = []

    def at_t2(idx, s, m):
        t2 = float(t2_list[idx])
        # third interaction: assemble detection-leg columns per branch
        ycols = np.zeros((n_members * n1, 4, 3), dtype=complex)
        ycols[:, _XS, 0] = 1.0                       # shared GSB column |S>
        ycols[:, :, 1] = m[:, :, _XS]                # SE_NR: M e_S
        ycols[:, :, 2] = m[:, _XS, :].conj()         # SE_R: adjoint row of M
        t_off3 = t_off2 + t2

        acc = np.zeros((4, n1, n3), dtype=complex)   # GSB_R, GSB_NR, SE_R, SE_NR

        def detect(j, s3, y):
            d = y[:, _XS, :].reshape(n_members, n1, 3)
            acc[0, :, j] += (w_s.conj() * d[:, :, 0]).sum(axis=0)
            acc[1, :, j] += (w_s * d[:, :, 0]).sum(axis=0)
            acc[2, :, j] += d[:, :, 2].sum(axis=0)
            acc[3, :, j] += d[:, :, 1].sum(axis=0)

        _propagate_sector("columns", par, t_off3, branch_ie, branch_ih,
                          branch_phi, ycols, t3g, detect, rtol, atol)
        acc *= prefactor / n_members

        def grid(vals, kind):
            return ResponseGrid(values=vals, dt1=grids.dt1, dt3=grids.dt3,
                                t2=t2, omega_ref=cfg.omega_ref, kind=kind,
                                t_first=t_first)

        pathways = {
            PathwayKind.GSB_R: grid(acc[0], "GSB_R"),
            PathwayKind.GSB_NR: grid(acc[1], "GSB_NR"),
            PathwayKind.SE_R: grid(acc[2], "SE_R"),
            PathwayKind.SE_NR: grid(acc[3], "SE_NR"),
        }
        results.append(ResponseSet(pathways=pathways,
                                   total=grid(acc.sum(axis=0), "total")))
        if progress is not None:
            progress(idx, t2)

    _propagate_sector("xblock", par, t_off2, branch_ie, branch_ih, branch_phi,
                      m0, t2_list, at_t2, rtol, atol)
    return results


def averaged_response(cfg: SystemConfig, pulse: PulseConfig, grids: TimeGrids,
                      rtol: float = 1e-9, atol: float = 1e-12) -> ResponseSet:
    """Pathway-summed, ensemble-averaged response at the configured t2."""
    return response_movie(cfg, pulse, grids, [grids.t2], rtol=rtol, atol=atol)[0]


def pathway_response(kind: PathwayKind, grids: TimeGrids, cfg: SystemConfig,
                     pulse: PulseConfig, hf: HyperfineSample, phase: float = 0.0,
                     rtol: float = 1e-9, atol: float = 1e-12) -> ResponseGrid:
    """Single-pathway response for one disorder sample and carrier phase."""
    one_pulse = replace(pulse, n_phase=1,
                        phase=(pulse.phase + phase) % (2.0 * math.pi))
    sets = response_movie(cfg, one_pulse, grids, [grids.t2], rtol=rtol,
                          atol=atol, hf_samples=[hf])
    return sets[0].pathways[kind]


# --- binary grid file format ---------------------------------------------

_MAGIC = b"DSPC"
_VERSION = 1
_HEADER = struct.Struct("<4sIIIdddd")


def write_response_binary(grid: ResponseGrid, path) -> None:
    """Little-endian grid file: header then N1*N3 complex doubles, t1-major."""
    vals = np.ascontiguousarray(grid.values, dtype=complex)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, _VERSION, grid.n_t1, grid.n_t3,
                              grid.dt1, grid.dt3, grid.t2, grid.omega_ref))
        fh.write(vals.astype("<c16").tobytes())


def read_response_binary(path) -> ResponseGrid:
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        magic, version, n1, n3, dt1, dt3, t2, omega_ref = _HEADER.unpack(head)
        if magic != _MAGIC:
            raise ValueError(f"not a grid file: bad magic {magic!r}")
        if version != _VERSION:
            raise ValueError(f"unsupported grid file version {version}")
        data = np.frombuffer(fh.read(n1 * n3 * 16), dtype="<c16")
    values = data.reshape(n1, n3).astype(complex)
    return ResponseGrid(values=values, dt1=dt1, dt3=dt3, t2=t2,
                        omega_ref=omega_ref, kind="total")


def write_response_csv(grid: ResponseGrid, path) -> None:
    """CSV equivalent of the binary grid: t1_fs, t3_fs, re, im."""
    t1g, t3g = grid.t1_grid(), grid.t3_grid()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("t1_fs,t3_fs,re,im\n")
        for i, t1 in enumerate(t1g):
            for j, t3 in enumerate(t3g):
                v = grid.values[i, j]
                fh.write(f"{t1:.9g},{t3:.9g},{v.real:.17g},{v.imag:.17g}\n")
