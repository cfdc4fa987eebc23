"""Inversion of the perturbative mapping onto the perfect-transport targets.

Given a global detuning delta0, find the site detunings delta_l and atom
positions x_l such that the second-order effective couplings reproduce the
linear-spectrum targets: flat on-site potential mu_l = mu and
J_{l,l+1} = 2 J_max sqrt(l(L-l)) / L_bar.

Conventions pinned before solving: mirror symmetry (x and delta), central
spacing at the hardware floor dx_min, central site detuning(s) exactly zero.
For even L this leaves floor((L-1)/2) free outer spacings and as many free
outer detunings, and the center coupling equals the closed-form J_max
identically. For odd L the center-adjacent sites carry nonzero detuning, so
the realized center coupling cannot equal the closed form at the spacing
floor; it becomes one extra unknown (a scale factor on the target profile),
which keeps the system square. ChainSolution.j_max / t_pi always report the
realized values.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ConvergenceError, InfeasibleGeometryError, SingularityError
from .params import HardwareConstraints, PhysicalParams
from .targets import coupling_targets, j_max, transport_time

MODES = ("nn", "lri")

#: relative guard against the pairwise resonance Delta_l = V_ll'
_RESONANCE_EPS = 1e-9
#: initial outer-spacing increment, as a fraction of dx_min (keeps the
#: positivity transform well conditioned; the chain is still near-uniform)
_GUESS_INCREMENT = 0.05


@dataclass(frozen=True)
class EffectiveCouplings:
    """On-site potentials mu_l and flip-flop rates J_ll' (rad/us)."""

    mu: np.ndarray
    j: np.ndarray  # symmetric, zero diagonal; NN-only entries in "nn" mode


@dataclass(frozen=True)
class ChainSolution:
    """Positions and detunings realizing the transport condition at one delta0."""

    L: int
    positions: np.ndarray        # um, increasing, positions[0] = 0
    site_detunings: np.ndarray   # rad/us, mirror symmetric, center exactly 0
    global_detuning: float       # rad/us
    omega: float                 # rad/us, uniform
    residual_norm: float         # max |scaled residual|
    j_max: float                 # realized center coupling, rad/us
    t_pi: float                  # us
    diagnostics: dict = field(default_factory=dict)

    @property
    def spacings(self) -> np.ndarray:
        return np.diff(self.positions)


def interaction_matrix(positions, c6, mode: str = "lri") -> np.ndarray:
    """Pairwise van der Waals couplings V_ll' = c6 / dx^6, masked by mode."""
    x = np.asarray(positions, dtype=float)
    L = x.size
    dx = np.abs(x[:, None] - x[None, :])
    with np.errstate(divide="ignore"):
        v = np.where(dx > 0, c6 / np.maximum(dx, 1e-300) ** 6, 0.0)
    np.fill_diagonal(v, 0.0)
    if mode == "nn":
        keep = np.eye(L, k=1, dtype=bool) | np.eye(L, k=-1, dtype=bool)
        v = np.where(keep, v, 0.0)
    elif mode != "lri":
        raise ConfigError(f"unknown mapping mode {mode!r}; expected one of {MODES}")
    return v


def _mapping_arrays(positions, detunings, delta0, omega, c6, mode):
    """Second-order mapping from raw chain controls to (mu, J)."""
    delta = delta0 + np.asarray(detunings, dtype=float)
    if np.any(delta == 0):
        site = int(np.nonzero(delta == 0)[0][0]) + 1
        raise SingularityError(f"total detuning Delta vanishes on site {site}")
    v = interaction_matrix(positions, c6, mode)
    gap = delta[None, :] - v  # gap[i, j] = Delta_j - V_ij
    active = v != 0
    bad = active & (np.abs(gap) < _RESONANCE_EPS * np.maximum(np.abs(delta)[None, :], v))
    if np.any(bad):
        i, j = np.argwhere(bad)[0]
        raise SingularityError(
            f"blockade resonance Delta = V on pair ({i + 1}, {j + 1}): "
            f"Delta_{j + 1} = {delta[j]:.6g}, V = {v[i, j]:.6g} rad/us"
        )
    with np.errstate(divide="ignore", invalid="ignore"):
        term = np.where(active, v / (delta[None, :] * gap), 0.0)
    mu = -delta - omega**2 / (2.0 * delta) + 0.25 * omega**2 * term.sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(active, 1.0 / (delta[:, None] * (delta[:, None] - v)), 0.0)
    j = omega**2 * v / 8.0 * (t + t.T)
    return mu, j


def effective_mapping(chain: ChainSolution, params: PhysicalParams,
                      mode: str = "nn") -> EffectiveCouplings:
    """Evaluate the perturbative mapping (mu_l, J_ll') on a chain solution."""
    mu, j = _mapping_arrays(
        chain.positions, chain.site_detunings, chain.global_detuning,
        chain.omega, params.c6, mode,
    )
    return EffectiveCouplings(mu=mu, j=j)


def nnn_ratio(chain: ChainSolution, params: PhysicalParams) -> float:
    """lambda = max next-nearest-neighbor coupling / max nearest-neighbor coupling.

    Both taken from the long-range mapping on the solved geometry.
    """
    if chain.L < 3:
        raise ConfigError("nnn_ratio needs a chain of at least 3 sites")
    coup = effective_mapping(chain, params, mode="lri")
    nn = np.abs(np.diagonal(coup.j, offset=1))
    nnn = np.abs(np.diagonal(coup.j, offset=2))
    return float(nnn.max() / nn.max())


# ---------------------------------------------------------------------------
# solver internals

def _softplus(u):
    return np.logaddexp(0.0, u)


def _softplus_inv(y):
    return np.log(np.expm1(y))


class _HalfChain:
    """Bookkeeping for the mirror-reduced unknown vector.

    Layout: [spacing increments (softplus-transformed), site detunings
    (scaled by |delta0|), and for odd L a log target-scale].
    """

    def __init__(self, L, dx_min, delta0):
        self.L = L
        self.dx_min = dx_min
        self.delta0 = delta0
        self.odd = L % 2 == 1
        self.n_free_sp = L // 2 - 1
        self.n_free_det = (L - 1) // 2
        self.n_unknowns = self.n_free_sp + self.n_free_det + (1 if self.odd else 0)
        self.center = (L - 1) // 2  # 0-based index of the (left) central site

    def initial_vector(self, increments=None, detunings=None, q=1.0):
        incr = (np.full(self.n_free_sp, _GUESS_INCREMENT) if increments is None
                else np.asarray(increments, dtype=float))
        det = (np.zeros(self.n_free_det) if detunings is None
               else np.asarray(detunings, dtype=float))
        vec = np.concatenate([
            _softplus_inv(np.maximum(incr, 1e-9)),
            det / abs(self.delta0),
        ])
        if self.odd:
            vec = np.append(vec, math.log(q))
        return vec

    def unpack(self, vec):
        """Full-chain spacings (L-1), detunings (L), and target scale q."""
        L = self.L
        u = vec[: self.n_free_sp]
        d = vec[self.n_free_sp: self.n_free_sp + self.n_free_det] * abs(self.delta0)
        q = math.exp(vec[-1]) if self.odd else 1.0
        half_sp = np.concatenate([self.dx_min * (1.0 + _softplus(u)), [self.dx_min]])
        spacings = np.empty(L - 1)
        k = half_sp.size
        spacings[:k] = half_sp
        spacings[k:] = half_sp[: L - 1 - k][::-1]
        detunings = np.zeros(L)
        detunings[: self.n_free_det] = d
        detunings[L - self.n_free_det:] = d[::-1]
        return spacings, detunings, q


def _solve_newton(residual_fn, vec, tol, max_iter):
    """Damped Newton with a finite-difference Jacobian on the scaled system."""
    f = residual_fn(vec)
    jac_cond = math.inf
    for iteration in range(1, max_iter + 1):
        fnorm = np.abs(f).max()
        if fnorm <= tol:
            return vec, f, iteration - 1, jac_cond
        jac = np.empty((f.size, vec.size))
        h = 1e-7
        for k in range(vec.size):
            pert = vec.copy()
            pert[k] += h
            jac[:, k] = (residual_fn(pert) - f) / h
        try:
            jac_cond = float(np.linalg.cond(jac))
            step = np.linalg.solve(jac, -f)
        except np.linalg.LinAlgError as exc:
            raise ConvergenceError(f"singular Jacobian at iteration {iteration}: {exc}",
                                   residual=fnorm, last_iterate=vec) from exc
        alpha = 1.0
        for _ in range(20):
            trial = vec + alpha * step
            try:
                f_trial = residual_fn(trial)
            except SingularityError:
                alpha *= 0.5
                continue
            if np.abs(f_trial).max() < fnorm:
                vec, f = trial, f_trial
                break
            alpha *= 0.5
        else:
            raise ConvergenceError(
                f"line search stalled at iteration {iteration} (residual {fnorm:.3e})",
                residual=fnorm, last_iterate=vec,
            )
    fnorm = np.abs(f).max()
    if fnorm <= tol:
        return vec, f, max_iter, jac_cond
    raise ConvergenceError(
        f"no convergence after {max_iter} iterations (residual {fnorm:.3e})",
        residual=fnorm, last_iterate=vec,
    )


def _extend_outward(values, length, floor=None):
    """Grow a half-profile (listed outermost first) by linear extrapolation."""
    values = np.asarray(values, dtype=float)
    out = np.empty(length)
    if values.size == 0:
        out.fill(_GUESS_INCREMENT if floor is not None else 0.0)
    else:
        out[1:] = values[: length - 1]
        out[0] = 2.0 * values[0] - values[1] if values.size >= 2 else values[0]
    if floor is not None:
        out = np.maximum(out, floor)
    return out


def _guess_from_smaller(inner: ChainSolution, hc: _HalfChain):
    """Warm-start vector for L sites from a converged solution at L-2 sites.

    Half-profiles align at the chain center; the new outermost spacing and
    detuning are linearly extrapolated.
    """
    half_sp = np.diff(inner.positions)[: inner.L // 2]
    incr_in = half_sp[:-1] / hc.dx_min - 1.0  # drop the pinned central spacing
    incr = _extend_outward(incr_in, hc.n_free_sp, floor=1e-9)
    det = _extend_outward(inner.site_detunings[: (inner.L - 1) // 2], hc.n_free_det)
    q = inner.diagnostics.get("target_scale", 1.0)
    return hc.initial_vector(incr, det, q if hc.odd else 1.0)


def solve_chain(L: int, params: PhysicalParams, hw: HardwareConstraints, delta0: float,
                tol: float = 1e-10, max_iter: int = 60, mode: str = "nn",
                pert_warn_ratio: float = 0.2, initial_guess: ChainSolution | None = None,
                _allow_homotopy: bool = True) -> ChainSolution:
    """Solve the inversion problem for one (L, delta0) operating point.

    Residuals (scaled by J_max) are the mismatches of the mapped couplings
    against the target profile and of the on-site potentials against the
    central one, evaluated through the mapping in the requested mode ("nn"
    by default; "lri" constrains against the all-pair mapping). The start is
    a near-uniform chain at the spacing floor with zero site detunings; an
    `initial_guess` solution (e.g. the neighboring grid point in a sweep)
    warm-starts the iteration, and a homotopy from the L-2 solution is the
    fallback.
    """
    if L < 2:
        raise ConfigError(f"chain length must be >= 2, got {L}")
    if mode not in MODES:
        raise ConfigError(f"unknown mapping mode {mode!r}; expected one of {MODES}")
    omega, c6, dx_min = params.omega, params.c6, hw.dx_min
    if abs(delta0) > 0 and omega / abs(delta0) > pert_warn_ratio:
        warnings.warn(
            f"Omega/|delta0| = {omega / abs(delta0):.3f} exceeds {pert_warn_ratio}; "
            "the perturbative mapping is marginal here",
            stacklevel=2,
        )
    jmax_closed = j_max(omega, delta0, c6, dx_min)
    if jmax_closed <= 0:
        raise ConfigError(
            "closed-form J_max is non-positive for this detuning; the transport "
            "targets assume the red-detuned branch (delta0 < 0)"
        )

    def build(spacings, detunings, q, residual, extra):
        if np.any(spacings < dx_min - 1e-9):
            raise InfeasibleGeometryError(
                f"solution needs spacing {spacings.min():.6g} um below the floor {dx_min} um"
            )
        positions = np.concatenate([[0.0], np.cumsum(spacings)])
        jmax_real = q * jmax_closed
        diag = {"mode": mode, "target_scale": q, "closed_form_j_max": jmax_closed}
        diag.update(extra)
        return ChainSolution(
            L=L, positions=positions, site_detunings=detunings,
            global_detuning=delta0, omega=omega, residual_norm=float(residual),
            j_max=jmax_real, t_pi=transport_time(L, jmax_real), diagnostics=diag,
        )

    if L == 2:
        sol = build(np.array([dx_min]), np.zeros(2), 1.0, 0.0,
                    {"iterations": 0, "jacobian_cond": 0.0})
        coup = effective_mapping(sol, params, mode)
        resid = abs(coup.j[0, 1] - jmax_closed) / jmax_closed
        return build(np.array([dx_min]), np.zeros(2), 1.0, resid,
                     {"iterations": 0, "jacobian_cond": 0.0})

    hc = _HalfChain(L, dx_min, delta0)
    targets_unit = coupling_targets(L, jmax_closed)
    n_cup = (L - 1) // 2  # constrained couplings; the even-L center one holds identically
    center = hc.center

    def residual_fn(vec):
        spacings, detunings, q = hc.unpack(vec)
        positions = np.concatenate([[0.0], np.cumsum(spacings)])
        mu, j = _mapping_arrays(positions, detunings, delta0, omega, c6, mode)
        r_cup = (np.diagonal(j, offset=1)[:n_cup] - q * targets_unit[:n_cup]) / jmax_closed
        r_mu = (mu[:center] - mu[center]) / jmax_closed
        return np.concatenate([r_cup, r_mu])

    starts = []
    if initial_guess is not None and initial_guess.L == L:
        incr = np.diff(initial_guess.positions)[: hc.n_free_sp] / dx_min - 1.0
        det = initial_guess.site_detunings[: hc.n_free_det]
        q = initial_guess.diagnostics.get("target_scale", 1.0)
        starts.append(("warm", hc.initial_vector(np.maximum(incr, 1e-9), det,
                                                 q if hc.odd else 1.0)))
    starts.append(("uniform", hc.initial_vector()))

    last_error: ConvergenceError | None = None
    for label, vec0 in starts:
        try:
            vec, f, iters, cond = _solve_newton(residual_fn, vec0, tol, max_iter)
            spacings, detunings, q = hc.unpack(vec)
            return build(spacings, detunings, q, np.abs(f).max(),
                         {"iterations": iters, "jacobian_cond": cond, "start": label})
        except ConvergenceError as exc:
            last_error = exc
    if _allow_homotopy and L - 2 >= 2:
        inner = solve_chain(L - 2, params, hw, delta0, tol=tol, max_iter=max_iter,
                            mode=mode, pert_warn_ratio=math.inf)
        try:
            vec0 = _guess_from_smaller(inner, hc)
            vec, f, iters, cond = _solve_newton(residual_fn, vec0, tol, max_iter)
            spacings, detunings, q = hc.unpack(vec)
            return build(spacings, detunings, q, np.abs(f).max(),
                         {"iterations": iters, "jacobian_cond": cond, "start": "homotopy"})
        except ConvergenceError as exc:
            last_error = exc
    raise last_error
