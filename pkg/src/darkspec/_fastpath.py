"""Fused batched integrator steps (numba) for the sector propagators.

Each kernel performs one full embedded RK5(4) trial step for every
branch of a batch, keeping all stage values in a per-branch workspace
slab so memory traffic stays linear in the state size. Results match
the generic numpy path to integrator tolerance (same tableau, same
error weighting; stage arithmetic is fused rather than staged, so the
two paths differ only at rounding level).

The pure-numpy fallback is always available; set DARKSPEC_NO_NUMBA=1 to
force it.
"""

from __future__ import annotations

import math
import os

import numpy as np

from .integrate import DP_A, DP_B5, DP_C, DP_E

HAVE_NUMBA = False
if not os.environ.get("DARKSPEC_NO_NUMBA"):
    try:
        from numba import njit, prange

        HAVE_NUMBA = True
    except ImportError:        # pragma: no cover - numba is an accelerator
        pass

# dense tableau for kernel consumption
_A = np.zeros((7, 6))
for _i in range(1, 7):
    _A[_i, : len(DP_A[_i])] = DP_A[_i]
_C = np.asarray(DP_C)
_B5 = np.asarray(DP_B5)
_E = np.asarray(DP_E)

# parameter-vector layout shared with response._EngineParams
P_B0, P_OMEGA, P_TCENTER, P_SIGMA, P_PHASE, P_SE, P_SH, P_SMEAN, \
    P_DES, P_DET, P_LAMS, P_LAMT, P_GST, P_INVH = range(14)

_SQRT2 = math.sqrt(2.0)


if HAVE_NUMBA:

    @njit(cache=True, inline="always")
    def _branch_fields(par, t_abs, ie, ih, ph):
        u = (t_abs - par[P_TCENTER]) / par[P_SIGMA]
        env = par[P_B0] * math.exp(-0.5 * u * u)
        arg = par[P_OMEGA] * t_abs + par[P_PHASE] + ph
        bz = env * math.sin(arg)
        bx = -env * math.cos(arg)
        delta0 = -0.5 * (par[P_SE] - par[P_SH]) * bz + 0.5 * (ie - ih)
        z = -0.5 * (par[P_SE] + par[P_SH]) * bz + 0.5 * (ie + ih)
        c = _SQRT2 * par[P_SMEAN] * bx
        return delta0, z, c

    @njit(cache=True, parallel=True)
    def columns_step(y, y_new, work, t_off, i_e, i_h, phi, s, h, par,
                     a, cvec, b5, evec, rtol, atol, errsq):
        """One trial step for coherence columns, y shape (B, 4, K)."""
        nb = y.shape[0]
        nk = y.shape[2]
        mih = -1j * par[P_INVH]
        for b in prange(nb):
            tb = t_off[b]
            ie = i_e[b]
            ih = i_h[b]
            ph = phi[b]
            for st in range(7):
                delta0, z, c = _branch_fields(par, tb + s + cvec[st] * h, ie, ih, ph)
                d2 = par[P_DET] + z
                d3 = par[P_DET] - z
                for k in range(nk):
                    a0 = y[b, 0, k]
                    a1 = y[b, 1, k]
                    a2 = y[b, 2, k]
                    a3 = y[b, 3, k]
                    for j in range(st):
                        w = h * a[st, j]
                        if w != 0.0:
                            a0 += w * work[b, j, 0, k]
                            a1 += w * work[b, j, 1, k]
                            a2 += w * work[b, j, 2, k]
                            a3 += w * work[b, j, 3, k]
                    work[b, st, 0, k] = mih * (par[P_DES] * a0 + delta0 * a1) \
                        - par[P_LAMS] * a0
                    work[b, st, 1, k] = mih * (delta0 * a0 + par[P_DET] * a1
                                               + c * (a2 + a3)) - par[P_LAMT] * a1
                    work[b, st, 2, k] = mih * (c * a1 + d2 * a2) - par[P_LAMT] * a2
                    work[b, st, 3, k] = mih * (c * a1 + d3 * a3) - par[P_LAMT] * a3
            esum = 0.0
            for i in range(4):
                for k in range(nk):
                    y5 = y[b, i, k]
                    err = 0.0j
                    for st in range(7):
                        kv = work[b, st, i, k]
                        y5 += h * b5[st] * kv
                        err += h * evec[st] * kv
                    y_new[b, i, k] = y5
                    sc = atol + rtol * max(abs(y[b, i, k]), abs(y5))
                    q = abs(err) / sc
                    esum += q * q
            errsq[b] = esum

    @njit(cache=True, parallel=True)
    def xblock_step(y, y_new, work, t_off, i_e, i_h, phi, s, h, par,
                    a, cvec, b5, evec, rtol, atol, errsq):
        """One trial step for the excited block, y shape (B, 4, 4).

        work shape (B, 8, 4, 4); slot 7 holds the stage state.
        """
        nb = y.shape[0]
        mih = -1j * par[P_INVH]
        for b in prange(nb):
            tb = t_off[b]
            ie = i_e[b]
            ih = i_h[b]
            ph = phi[b]
            for st in range(7):
                delta0, z, c = _branch_fields(par, tb + s + cvec[st] * h, ie, ih, ph)
                d0 = par[P_DES]
                d1 = par[P_DET]
                d2 = par[P_DET] + z
                d3 = par[P_DET] - z
                for i in range(4):
                    for k in range(4):
                        v = y[b, i, k]
                        for j in range(st):
                            w = h * a[st, j]
                            if w != 0.0:
                                v += w * work[b, j, i, k]
                        work[b, 7, i, k] = v
                m = work[b, 7]
                for k in range(4):
                    m0 = m[0, k]
                    m1 = m[1, k]
                    m2 = m[2, k]
                    m3 = m[3, k]
                    work[b, st, 0, k] = d0 * m0 + delta0 * m1
                    work[b, st, 1, k] = delta0 * m0 + d1 * m1 + c * (m2 + m3)
                    work[b, st, 2, k] = c * m1 + d2 * m2
                    work[b, st, 3, k] = c * m1 + d3 * m3
                for i in range(4):
                    n0 = m[i, 0]
                    n1 = m[i, 1]
                    n2 = m[i, 2]
                    n3 = m[i, 3]
                    mh0 = n0 * d0 + n1 * delta0
                    mh1 = n0 * delta0 + n1 * d1 + n2 * c + n3 * c
                    mh2 = n1 * c + n2 * d2
                    mh3 = n1 * c + n3 * d3
                    work[b, st, i, 0] = mih * (work[b, st, i, 0] - mh0)
                    work[b, st, i, 1] = mih * (work[b, st, i, 1] - mh1)
                    work[b, st, i, 2] = mih * (work[b, st, i, 2] - mh2)
                    work[b, st, i, 3] = mih * (work[b, st, i, 3] - mh3)
                # pure-dephasing mask: only S-triplet coherences decay
                g = par[P_GST]
                for k in range(1, 4):
                    work[b, st, 0, k] -= g * m[0, k]
                    work[b, st, k, 0] -= g * m[k, 0]
            esum = 0.0
            for i in range(4):
                for k in range(4):
                    y5 = y[b, i, k]
                    err = 0.0j
                    for st in range(7):
                        kv = work[b, st, i, k]
                        y5 += h * b5[st] * kv
                        err += h * evec[st] * kv
                    y_new[b, i, k] = y5
                    sc = atol + rtol * max(abs(y[b, i, k]), abs(y5))
                    q = abs(err) / sc
                    esum += q * q
            errsq[b] = esum


def pack_params(par) -> np.ndarray:
    """Flatten response._EngineParams into the kernel parameter vector."""
    from .constants import HBAR_MEV_FS

    vec = np.zeros(14)
    vec[P_B0] = par.b0
    vec[P_OMEGA] = par.omega
    vec[P_TCENTER] = par.t_center
    vec[P_SIGMA] = par.sigma_t
    vec[P_PHASE] = par.base_phase
    vec[P_SE] = par.s_e
    vec[P_SH] = par.s_h
    vec[P_SMEAN] = par.s_mean
    vec[P_DES] = par.de_s
    vec[P_DET] = par.de_t
    vec[P_LAMS] = par.lam_s
    vec[P_LAMT] = par.lam_t
    vec[P_GST] = par.g_st
    vec[P_INVH] = 1.0 / HBAR_MEV_FS
    return vec


def make_fused_step(kind: str, par_vec: np.ndarray, t_off, i_e, i_h, phi,
                    shape, rtol: float, atol: float):
    """Build a drive_adaptive-compatible step closure, or None without numba."""
    if not HAVE_NUMBA:
        return None
    nb = shape[0]
    n_comp = int(np.prod(shape))
    errsq = np.empty(nb)
    t_off = np.ascontiguousarray(t_off, dtype=float)
    i_e = np.ascontiguousarray(i_e, dtype=float)
    i_h = np.ascontiguousarray(i_h, dtype=float)
    phi = np.ascontiguousarray(phi, dtype=float)
    if kind == "columns":
        work = np.empty((nb, 7) + shape[1:], dtype=complex)
        kernel = columns_step
    elif kind == "xblock":
        work = np.empty((nb, 8, 4, 4), dtype=complex)
        kernel = xblock_step
    else:
        raise ValueError(f"unknown fused kind {kind!r}")

    def step(t, h, y, y_new):
        kernel(y, y_new, work, t_off, i_e, i_h, phi, t, h, par_vec,
               _A, _C, _B5, _E, rtol, atol, errsq)
        return math.sqrt(float(errsq.sum()) / n_comp)

    return step
