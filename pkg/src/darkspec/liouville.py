"""Five-level Lindblad dynamics under the time-dependent drive.

The Hamiltonian in the basis (G, S, T0, T+, T-) is

    H(t) = diag(0, E_S, E_T, E_T + Z(t), E_T - Z(t))
           + delta0(t)  on (S, T0)
           + sqrt(2) b_x(t) on (T0, T+-)

with Z(t) = b_bar(t). The ground state carries no magnetic coupling, so
its row and column are identically zero. Dissipation is pure dephasing
with projector collapse operators onto S and onto the triplet subspace;
for projectors the whole dissipator reduces to an elementwise damping
mask on the coherences:

    (G S): gamma_S/2    (G T): gamma_T/2    (S T): (gamma_S+gamma_T)/2

and zero on all populations and intra-triplet coherences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import DephasingConfig, PulseConfig, SystemConfig
from .constants import HBAR_MEV_FS, N_STATES, StateIndex
from .integrate import integrate_to_checkpoints, step_cap
from .pulse import HyperfineSample, effective_fields
from .spindyn import coupling_bound

_SQRT2 = math.sqrt(2.0)

_EXCITED = slice(1, 5)


def _projector(indices) -> np.ndarray:
    p = np.zeros((N_STATES, N_STATES))
    for i in indices:
        p[i, i] = 1.0
    return p


SIGMA_S = _projector([StateIndex.S])
SIGMA_T = _projector([StateIndex.T0, StateIndex.T_PLUS, StateIndex.T_MINUS])


@dataclass(frozen=True)
class LindbladGenerator:
    """Pure-dephasing generator with projector collapse operators."""

    gamma_s: float
    gamma_t: float

    @classmethod
    def from_config(cls, deph: DephasingConfig) -> "LindbladGenerator":
        return cls(gamma_s=deph.gamma_s, gamma_t=deph.gamma_t)

    @property
    def sigma_s(self) -> np.ndarray:
        return SIGMA_S.copy()

    @property
    def sigma_t(self) -> np.ndarray:
        return SIGMA_T.copy()

    def damping_mask(self) -> np.ndarray:
        """Elementwise decay rates equivalent to the projector dissipator."""
        lam = 0.5 * (self.gamma_s * np.diag(SIGMA_S) + self.gamma_t * np.diag(SIGMA_T))
        mask = lam[:, None] + lam[None, :]
        mask -= self.gamma_s * np.outer(np.diag(SIGMA_S), np.diag(SIGMA_S))
        mask -= self.gamma_t * np.outer(np.diag(SIGMA_T), np.diag(SIGMA_T))
        return mask


def lindblad_apply(rho: np.ndarray, gen: LindbladGenerator) -> np.ndarray:
    """Dissipator sum_a gamma_a (s_a rho s_a - {s_a, rho}/2), projector form."""
    rho = np.asarray(rho, dtype=complex)
    out = np.zeros_like(rho)
    for gamma, sig in ((gen.gamma_s, SIGMA_S), (gen.gamma_t, SIGMA_T)):
        if gamma == 0.0:
            continue
        out += gamma * (sig @ rho @ sig - 0.5 * (sig @ rho + rho @ sig))
    return out


@dataclass(frozen=True)
class TimeDependentHamiltonian:
    """Closure producing the 5x5 Hermitian energy matrix at any time.

    `phase_offset` is added to the pulse carrier phase; it is the axis
    the ensemble phase average runs over.
    """

    cfg: SystemConfig
    pulse: PulseConfig
    hf: HyperfineSample
    phase_offset: float = 0.0

    def matrix(self, t: float) -> np.ndarray:
        f = effective_fields(t, self.pulse, self.cfg.lande, self.hf,
                             self.phase_offset)
        e_s = self.cfg.levels.e_singlet
        e_t = self.cfg.levels.e_triplet
        h = np.zeros((N_STATES, N_STATES), dtype=complex)
        h[StateIndex.S, StateIndex.S] = e_s
        h[StateIndex.T0, StateIndex.T0] = e_t
        h[StateIndex.T_PLUS, StateIndex.T_PLUS] = e_t + f.b_bar
        h[StateIndex.T_MINUS, StateIndex.T_MINUS] = e_t - f.b_bar
        h[StateIndex.S, StateIndex.T0] = h[StateIndex.T0, StateIndex.S] = f.delta0
        c = _SQRT2 * f.b_x
        h[StateIndex.T0, StateIndex.T_PLUS] = h[StateIndex.T_PLUS, StateIndex.T0] = c
        h[StateIndex.T0, StateIndex.T_MINUS] = h[StateIndex.T_MINUS, StateIndex.T0] = c
        return h

    def max_coupling(self) -> float:
        return coupling_bound(self.pulse, self.cfg.lande, [self.hf],
                              self.cfg.levels.e_singlet - self.cfg.levels.e_triplet)


def hamiltonian_at(t: float, h: TimeDependentHamiltonian) -> np.ndarray:
    """Assembled 5x5 matrix at time t; Hermitian by construction."""
    return h.matrix(t)


def check_density(rho: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Validate density-matrix shape and Hermiticity before propagation."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (N_STATES, N_STATES):
        raise ValueError(f"density matrix must be {N_STATES}x{N_STATES}")
    herm = float(np.max(np.abs(rho - rho.conj().T)))
    if herm > tol * max(1.0, float(np.max(np.abs(rho)))):
        raise ValueError(f"density matrix is not Hermitian (deviation {herm:.3e})")
    return rho


def propagate_density(rho: np.ndarray, t_a: float, t_b: float,
                      ham: TimeDependentHamiltonian, gen: LindbladGenerator,
                      rtol: float = 1e-9, atol: float = 1e-12,
                      frame_shift_mev: float = 0.0) -> np.ndarray:
    """Solve d rho/dt = -(i/hbar)[H(t), rho] + L(rho) from t_a to t_b.

    `frame_shift_mev` subtracts a constant times the excited-manifold
    projector from H; this is an exact gauge change that only rotates
    ground-excited coherences and leaves all observables of the excited
    block untouched. Composition over subintervals agrees with direct
    propagation to integrator tolerance.
    """
    if t_b < t_a:
        raise ValueError("t_b must be >= t_a")
    rho = check_density(rho)
    if t_b == t_a:
        return rho.copy()

    mask = gen.damping_mask()
    shift = np.zeros(N_STATES)
    shift[_EXCITED] = frame_shift_mev
    inv_hbar = 1.0 / HBAR_MEV_FS

    def rhs(t, r):
        h = ham.matrix(t) - np.diag(shift)
        return -1j * inv_hbar * (h @ r - r @ h) - mask * r

    cap = step_cap(ham.pulse.omega, ham.max_coupling(), HBAR_MEV_FS)
    out = integrate_to_checkpoints(rhs, rho, float(t_a), [float(t_b)],
                                   rtol=rtol, atol=atol, max_step=cap)
    return out[0]
