"""Model generators and single-excitation dynamics.

Four generators form the model hierarchy: the effective XX flip-flop model
and the native Rydberg model, each with nearest-neighbor or long-range
couplings. States live in an excitation-number-truncated occupation basis
(the full 2^L space is the m_max=None limit); truncation is applied to the
generator, never to the state, so evolution stays exactly unitary within
the truncated space.

The production stepper diagonalizes the (real symmetric) generator once and
reuses the spectral decomposition across the whole time grid; a Krylov
backend (scipy expm_multiply) serves dimensions where a dense
eigendecomposition is wasteful. `brute_force_oracle` is the validation
reference: full Hilbert space, dense matrix exponential per sample time,
independent of the spectral path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from itertools import combinations

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from .errors import ConfigError
from .inversion import ChainSolution, effective_mapping, interaction_matrix
from .params import PhysicalParams

#: dense eigendecomposition is used up to this dimension, Krylov beyond
EIGH_DIM_LIMIT = 2000
#: sentinel for the untruncated basis
FULL = None


class ModelKind(str, Enum):
    XX_NN = "xx_nn"
    XX_LRI = "xx_lri"
    RYD_NN = "ryd_nn"
    RYD_LRI = "ryd_lri"

    @property
    def is_rydberg(self) -> bool:
        return self in (ModelKind.RYD_NN, ModelKind.RYD_LRI)

    @property
    def coupling_mode(self) -> str:
        return "nn" if self in (ModelKind.XX_NN, ModelKind.RYD_NN) else "lri"


@dataclass(frozen=True)
class BasisIndex:
    """Occupation-number basis truncated at m_max excitations.

    Index 0 is the vacuum; indices 1..L are the single-excitation states in
    site order; higher sectors follow ordered by excitation number. Site l
    (1-based) maps to bit l-1 of the state bitmask.
    """

    L: int
    m_max: int | None
    states: tuple[int, ...]
    index: dict[int, int]

    @property
    def dim(self) -> int:
        return len(self.states)

    def site_mask(self, site: int) -> int:
        if not 1 <= site <= self.L:
            raise ConfigError(f"site {site} outside chain of length {self.L}")
        return 1 << (site - 1)


def basis_index(L: int, m_max: int | None = 3) -> BasisIndex:
    """Build the truncated basis; m_max=None (FULL) keeps all 2^L states."""
    if L < 1:
        raise ConfigError(f"chain length must be >= 1, got {L}")
    cap = L if m_max is None else min(m_max, L)
    if cap < 1:
        raise ConfigError(f"m_max must be >= 1, got {m_max}")
    states = [0]
    for m in range(1, cap + 1):
        for sites in combinations(range(L), m):
            mask = 0
            for s in sites:
                mask |= 1 << s
            states.append(mask)
    index = {mask: k for k, mask in enumerate(states)}
    return BasisIndex(L=L, m_max=None if m_max is None else cap,
                      states=tuple(states), index=index)


@dataclass
class QuantumState:
    basis: BasisIndex
    amplitudes: np.ndarray

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def single_excitation_state(basis: BasisIndex, site: int) -> QuantumState:
    """|l>: the single excitation on `site` (1-based)."""
    amp = np.zeros(basis.dim, dtype=complex)
    amp[basis.index[basis.site_mask(site)]] = 1.0
    return QuantumState(basis=basis, amplitudes=amp)


@dataclass(frozen=True)
class EvolutionResult:
    """Transport and excitation-subspace populations on a time grid."""

    times: np.ndarray       # us
    p_transport: np.ndarray  # |<L|psi(t)>|^2
    p_return: np.ndarray     # |<1|psi(t)>|^2
    p_vac: np.ndarray        # m = 0
    p_single: np.ndarray     # m = 1
    p_multi: np.ndarray      # m >= 2
    model: ModelKind


def build_generator(chain: ChainSolution, params: PhysicalParams, model: ModelKind,
                    basis: BasisIndex, sparse: bool = False):
    """Hamiltonian matrix (rad/us) of `model` on `basis`.

    XX models: diagonal sum of mu_l over occupied sites plus J flip-flop
    hops, block diagonal in excitation number. Rydberg models: diagonal
    -sum(Delta_l) + sum(V_ll') over occupied sites/pairs, with Omega/2
    sigma_x couplings between adjacent excitation sectors; couplings out of
    the truncated space are dropped.
    """
    if basis.L != chain.L:
        raise ConfigError(f"basis is for L={basis.L}, chain has L={chain.L}")
    L = chain.L
    rows, cols, vals = [], [], []
    diag = np.zeros(basis.dim)

    if model.is_rydberg:
        v = interaction_matrix(chain.positions, params.c6, model.coupling_mode)
        delta = chain.global_detuning + chain.site_detunings
        half_omega = 0.5 * chain.omega
        for k, s in enumerate(basis.states):
            occ = [i for i in range(L) if s >> i & 1]
            diag[k] = -delta[occ].sum() if occ else 0.0
            for a in range(len(occ)):
                for b in range(a + 1, len(occ)):
                    diag[k] += v[occ[a], occ[b]]
            for i in range(L):
                flipped = s ^ (1 << i)
                kf = basis.index.get(flipped)
                if kf is not None and kf > k:  # fill upper triangle once
                    rows.append(k)
                    cols.append(kf)
                    vals.append(half_omega)
    else:
        coup = effective_mapping(chain, params, mode=model.coupling_mode)
        mu, jmat = coup.mu, coup.j
        pairs = [(i, j) for i in range(L) for j in range(i + 1, L) if jmat[i, j] != 0.0]
        for k, s in enumerate(basis.states):
            occ_mask = s
            diag[k] = sum(mu[i] for i in range(L) if occ_mask >> i & 1)
            for i, j in pairs:
                bi, bj = 1 << i, 1 << j
                if (s & bi) and not (s & bj):
                    kf = basis.index.get(s ^ bi ^ bj)
                    if kf is not None and kf > k:
                        rows.append(k)
                        cols.append(kf)
                        vals.append(jmat[i, j])
                elif (s & bj) and not (s & bi):
                    kf = basis.index.get(s ^ bi ^ bj)
                    if kf is not None and kf > k:
                        rows.append(k)
                        cols.append(kf)
                        vals.append(jmat[i, j])

    if sparse:
        upper = scipy.sparse.coo_array(
            (vals, (rows, cols)), shape=(basis.dim, basis.dim)
        ).tocsr()
        return upper + upper.T + scipy.sparse.diags_array(diag, format="csr")
    h = np.zeros((basis.dim, basis.dim))
    h[rows, cols] = vals
    h += h.T
    h[np.diag_indices(basis.dim)] = diag
    return h


class Propagator:
    """Spectral propagator exp(-iHt) for a real symmetric generator."""

    def __init__(self, generator: np.ndarray):
        if not np.all(np.isfinite(generator)):
            raise ConfigError("generator has non-finite entries")
        self.eigvals, self.eigvecs = scipy.linalg.eigh(generator)

    def coefficients(self, psi0: np.ndarray) -> np.ndarray:
        return self.eigvecs.T @ psi0

    def row_amplitudes(self, coeff: np.ndarray, rows, times) -> np.ndarray:
        """Amplitudes <row|psi(t)> for selected basis rows; shape (len(rows), T)."""
        phases = np.exp(-1j * np.outer(self.eigvals, np.asarray(times)))
        weighted = self.eigvecs[rows, :] * coeff[None, :]
        return weighted @ phases

    def states(self, coeff: np.ndarray, times) -> np.ndarray:
        """Full state vectors at each time; shape (dim, T)."""
        phases = np.exp(-1j * np.outer(self.eigvals, np.asarray(times)))
        return self.eigvecs @ (phases * coeff[:, None])


def _validate_times(times):
    t = np.asarray(times, dtype=float)
    if t.size == 0:
        raise ConfigError("time grid is empty")
    if np.any(t < 0) or np.any(np.diff(t) < 0):
        raise ConfigError("times must be sorted and non-negative")
    return t


def _populations(basis: BasisIndex, amps: np.ndarray, model: ModelKind, times) -> EvolutionResult:
    prob = np.abs(amps) ** 2
    popcount = np.array([int(s).bit_count() for s in basis.states])
    singles = np.nonzero(popcount == 1)[0]
    p_vac = prob[0]
    p_single = prob[singles].sum(axis=0)
    p_multi = prob[popcount >= 2].sum(axis=0)
    return EvolutionResult(
        times=np.asarray(times, dtype=float),
        p_transport=prob[basis.index[basis.site_mask(basis.L)]],
        p_return=prob[basis.index[basis.site_mask(1)]],
        p_vac=p_vac,
        p_single=p_single,
        p_multi=p_multi,
        model=model,
    )


def evolve(generator, psi0: QuantumState, times, model: ModelKind = ModelKind.XX_NN,
           backend: str = "auto") -> EvolutionResult:
    """Evolve psi0 under exp(-i H t) and report populations at `times`."""
    t = _validate_times(times)
    if abs(psi0.norm() - 1.0) > 1e-9:
        raise ConfigError(f"psi0 is not normalized (norm {psi0.norm():.12f})")
    dim = psi0.basis.dim
    is_sparse = scipy.sparse.issparse(generator)
    if backend == "auto":
        backend = "krylov" if (is_sparse or dim > EIGH_DIM_LIMIT) else "eigh"
    if backend == "eigh":
        gen = generator.toarray() if is_sparse else generator
        prop = Propagator(gen)
        amps = prop.states(prop.coefficients(psi0.amplitudes), t)
    elif backend == "krylov":
        gen = generator if is_sparse else scipy.sparse.csr_array(generator)
        if not np.all(np.isfinite(gen.data)):
            raise ConfigError("generator has non-finite entries")
        a = -1j * gen
        amps = np.empty((dim, t.size), dtype=complex)
        psi = psi0.amplitudes.astype(complex)
        t_prev = 0.0
        for k, tk in enumerate(t):
            dt = tk - t_prev
            if dt > 0:
                psi = scipy.sparse.linalg.expm_multiply(a * dt, psi)
            amps[:, k] = psi
            t_prev = tk
    else:
        raise ConfigError(f"unknown backend {backend!r}")
    return _populations(psi0.basis, amps, model, t)


@dataclass(frozen=True)
class TransportPeak:
    p_pi: float
    t_star: float
    at_boundary: bool


def peak_search(prop: Propagator, coeff: np.ndarray, row: int, t_window,
                n_grid: int = 201) -> TransportPeak:
    """Maximum of |<row|psi(t)>|^2 over a dense grid with parabolic refinement.

    A window that excludes the true peak simply returns the boundary
    maximum (flagged via at_boundary).
    """
    t0, t1 = float(t_window[0]), float(t_window[1])
    if not (t1 > t0) or n_grid < 3:
        raise ConfigError(f"empty or degenerate peak window ({t0}, {t1})")
    grid = np.linspace(t0, t1, n_grid)
    p = np.abs(prop.row_amplitudes(coeff, [row], grid)[0]) ** 2
    i = int(np.argmax(p))
    if i == 0 or i == n_grid - 1:
        return TransportPeak(p_pi=float(p[i]), t_star=float(grid[i]), at_boundary=True)
    denom = p[i + 1] - 2.0 * p[i] + p[i - 1]
    t_star = grid[i]
    if denom < 0:
        h = grid[1] - grid[0]
        t_star = grid[i] - 0.5 * h * (p[i + 1] - p[i - 1]) / denom
        t_star = min(max(t_star, t0), t1)
    p_star = float(np.abs(prop.row_amplitudes(coeff, [row], [t_star])[0, 0]) ** 2)
    if p_star >= p[i]:
        return TransportPeak(p_pi=p_star, t_star=float(t_star), at_boundary=False)
    return TransportPeak(p_pi=float(p[i]), t_star=float(grid[i]), at_boundary=False)


def transport_probability_at(chain: ChainSolution, params: PhysicalParams,
                             model: ModelKind, t_window=None,
                             basis: BasisIndex | None = None,
                             n_grid: int = 201) -> TransportPeak:
    """Peak transport probability near the analytic transport time.

    Default window is +-10% around the chain's t_pi; default basis is the
    single-excitation sector for XX models and m_max=3 for Rydberg models.
    """
    if basis is None:
        basis = basis_index(chain.L, 3 if model.is_rydberg else 1)
    if t_window is None:
        t_window = (0.9 * chain.t_pi, 1.1 * chain.t_pi)
    gen = build_generator(chain, params, model, basis)
    prop = Propagator(gen)
    psi0 = single_excitation_state(basis, 1)
    coeff = prop.coefficients(psi0.amplitudes)
    row = basis.index[basis.site_mask(basis.L)]
    return peak_search(prop, coeff, row, t_window, n_grid)


def apply_decay(p: float, gamma: float, t: float) -> float:
    """Radiative-decay factor: p * exp(-gamma t)."""
    if gamma < 0 or t < 0:
        raise ConfigError("decay rate and time must be non-negative")
    return p * math.exp(-gamma * t)


def brute_force_oracle(chain: ChainSolution, params: PhysicalParams, model: ModelKind,
                       times, psi0: QuantumState | None = None) -> EvolutionResult:
    """Full-Hilbert-space reference evolution (dense expm per sample time).

    Same contract as `evolve` on the FULL basis; independent of the spectral
    propagator. Limited to L <= 12.
    """
    if chain.L > 12:
        raise ConfigError(f"oracle limited to L <= 12, got L={chain.L}")
    t = _validate_times(times)
    basis = basis_index(chain.L, FULL)
    if psi0 is None:
        psi0 = single_excitation_state(basis, 1)
    if psi0.basis.dim != basis.dim:
        raise ConfigError("oracle needs a full-basis initial state")
    gen = build_generator(chain, params, model, basis)
    amps = np.empty((basis.dim, t.size), dtype=complex)
    for k, tk in enumerate(t):
        u = scipy.linalg.expm(-1j * gen * tk)
        amps[:, k] = u @ psi0.amplitudes
    return _populations(basis, amps, model, t)
