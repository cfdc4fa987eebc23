"""Optimization sweeps over detuning, principal quantum number, and length.

The unitary part of every sweep point (chain solve + evolution + peak
search) is independent of temperature; radiative decay enters as a scalar
exp(-Gamma t) factor applied afterwards. Sweeps therefore evaluate the
unitary records once and dress them per temperature, which roughly halves
the cost of the two-temperature length study.

All grids are deterministic; per-point solver failures are recorded
(converged=False) and excluded from optima rather than aborting the sweep.
Parallelism lives at the task level (one n or one L per worker).
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, RydchainError
from .evolution import (ModelKind, Propagator, basis_index, build_generator,
                        peak_search, single_excitation_state)
from .inversion import ChainSolution, nnn_ratio, solve_chain
from .params import HardwareConstraints, ParamTable, physical_params

DEFAULT_MODELS = (ModelKind.XX_NN, ModelKind.RYD_NN, ModelKind.RYD_LRI)


@dataclass(frozen=True)
class SweepSettings:
    """Knobs shared by all sweep drivers (defaults match the shipped config)."""

    m_max: int = 3
    peak_grid: int = 201
    window_frac: float = 0.10
    include_admixture: bool = False
    solver_tol: float = 1e-10
    solver_max_iter: int = 60
    chain_mode: str = "nn"
    lo_frac: float = 0.2
    hi_frac: float = 50.0
    grid_points: int = 60
    pert_floor: float = 5.0
    refine: bool = True
    refine_points: int = 12


@dataclass(frozen=True)
class SweepRecord:
    """One (model, n, L, delta0, theta) evaluation."""

    model: ModelKind
    n: int
    L: int
    delta0: float            # rad/us
    theta: float             # K
    p_pi: float              # with decay
    p_pi_no_decay: float
    t_pi: float              # realized peak time, us
    t_pi_chain: float        # analytic transport time of the chain, us
    leak_vac: float          # decay-dressed populations at t_pi
    leak_single: float
    leak_multi: float
    converged: bool
    at_boundary: bool
    error: str = ""
    chain: ChainSolution | None = None


@dataclass(frozen=True)
class OptimumSummary:
    model: ModelKind
    theta: float
    n_star: int
    L: int
    delta_star: float        # rad/us
    p_star: float
    p_star_no_decay: float
    t_star: float            # us
    edge_optimum: bool
    grid_points: int
    refined: bool
    lambda_nnn: float = math.nan
    chain: ChainSolution | None = None


@dataclass(frozen=True)
class _ModelEval:
    p_no_decay: float
    t_star: float
    p_vac: float
    p_single: float
    p_multi: float
    at_boundary: bool


@dataclass(frozen=True)
class _UnitaryPoint:
    delta0: float
    chain: ChainSolution | None
    evals: dict
    error: str = ""


def detuning_grid(v_max: float, omega: float, lo_frac: float = 0.2, hi_frac: float = 50.0,
                  n_points: int = 60, pert_floor: float = 5.0) -> np.ndarray:
    """Log-spaced red detunings delta0 < 0 spanning the blockade scale.

    The magnitude runs from max(lo_frac * V_max, pert_floor * Omega) up to
    hi_frac * V_max; the perturbative floor keeps the grid inside the
    regime where the effective model is meaningful.
    """
    lo = max(lo_frac * v_max, pert_floor * omega)
    hi = hi_frac * v_max
    if hi <= lo:
        raise ConfigError(f"empty detuning grid: lo={lo:.3g} >= hi={hi:.3g} rad/us")
    if n_points < 2:
        raise ConfigError("detuning grid needs at least 2 points")
    return -np.geomspace(lo, hi, n_points)


def _evaluate_models(chain: ChainSolution, params, models, settings: SweepSettings) -> dict:
    """Unitary peak and populations for each model on one chain."""
    out = {}
    window = ((1.0 - settings.window_frac) * chain.t_pi,
              (1.0 + settings.window_frac) * chain.t_pi)
    for model in models:
        basis = basis_index(chain.L, settings.m_max if model.is_rydberg else 1)
        gen = build_generator(chain, params, model, basis)
        prop = Propagator(gen)
        psi0 = single_excitation_state(basis, 1)
        coeff = prop.coefficients(psi0.amplitudes)
        row = basis.index[basis.site_mask(basis.L)]
        peak = peak_search(prop, coeff, row, window, settings.peak_grid)
        state = prop.states(coeff, [peak.t_star])[:, 0]
        prob = np.abs(state) ** 2
        popcount = np.array([int(s).bit_count() for s in basis.states])
        out[model] = _ModelEval(
            p_no_decay=peak.p_pi,
            t_star=peak.t_star,
            p_vac=float(prob[0]),
            p_single=float(prob[popcount == 1].sum()),
            p_multi=float(prob[popcount >= 2].sum()),
            at_boundary=peak.at_boundary,
        )
    return out


def _unitary_point(n, L, delta0, params, hw, models, settings, guess=None) -> _UnitaryPoint:
    try:
        chain = solve_chain(
            L, params, hw, delta0,
            tol=settings.solver_tol, max_iter=settings.solver_max_iter,
            mode=settings.chain_mode, pert_warn_ratio=math.inf,
            initial_guess=guess,
        )
        evals = _evaluate_models(chain, params, models, settings)
        return _UnitaryPoint(delta0=delta0, chain=chain, evals=evals)
    except RydchainError as exc:
        return _UnitaryPoint(delta0=delta0, chain=None, evals={}, error=str(exc))


def _dress(point: _UnitaryPoint, model: ModelKind, n, L, theta, gamma) -> SweepRecord:
    if point.chain is None:
        return SweepRecord(
            model=model, n=n, L=L, delta0=point.delta0, theta=theta,
            p_pi=math.nan, p_pi_no_decay=math.nan, t_pi=math.nan,
            t_pi_chain=math.nan, leak_vac=math.nan, leak_single=math.nan,
            leak_multi=math.nan, converged=False, at_boundary=False,
            error=point.error,
        )
    ev = point.evals[model]
    survival = math.exp(-gamma * ev.t_star)
    return SweepRecord(
        model=model, n=n, L=L, delta0=point.delta0, theta=theta,
        p_pi=ev.p_no_decay * survival,
        p_pi_no_decay=ev.p_no_decay,
        t_pi=ev.t_star,
        t_pi_chain=point.chain.t_pi,
        leak_vac=1.0 - survival * (1.0 - ev.p_vac),
        leak_single=survival * ev.p_single,
        leak_multi=survival * ev.p_multi,
        converged=True,
        at_boundary=ev.at_boundary,
        chain=point.chain,
    )


def _optimum(records, model, theta, n, L, grid_points, refined, params) -> OptimumSummary | None:
    ok = [r for r in records if r.model is model and r.converged]
    if not ok:
        return None
    ok.sort(key=lambda r: abs(r.delta0))
    best_i = int(np.argmax([r.p_pi for r in ok]))
    best = ok[best_i]
    lam = math.nan
    if best.chain is not None and L >= 3:
        lam = nnn_ratio(best.chain, params)
    return OptimumSummary(
        model=model, theta=theta, n_star=n, L=L, delta_star=best.delta0,
        p_star=best.p_pi, p_star_no_decay=best.p_pi_no_decay, t_star=best.t_pi,
        edge_optimum=(best_i == 0 or best_i == len(ok) - 1),
        grid_points=grid_points, refined=refined, lambda_nnn=lam, chain=best.chain,
    )


def _refinement_points(records, model, existing_mags) -> np.ndarray:
    """Log-spaced extra detunings bracketing this model's coarse optimum."""
    ok = sorted((r for r in records if r.model is model and r.converged),
                key=lambda r: abs(r.delta0))
    if len(ok) < 3:
        return np.array([])
    i = int(np.argmax([r.p_pi for r in ok]))
    lo = abs(ok[max(i - 1, 0)].delta0)
    hi = abs(ok[min(i + 1, len(ok) - 1)].delta0)
    if hi <= lo:
        return np.array([])
    pts = np.geomspace(lo, hi, 14)[1:-1]
    fresh = [p for p in pts
             if not np.any(np.isclose(p, existing_mags, rtol=1e-12, atol=0.0))]
    return -np.asarray(fresh)


def _sweep_unitary(n, L, grid, params, hw, models, settings) -> list[_UnitaryPoint]:
    """Solve and evolve every grid point, warm-starting along the grid."""
    order = np.argsort(np.abs(np.asarray(grid)))
    points: list[_UnitaryPoint] = [None] * len(grid)  # type: ignore[list-item]
    guess = None
    for k in order:
        pt = _unitary_point(n, L, float(grid[k]), params, hw, models, settings, guess=guess)
        if pt.chain is not None:
            guess = pt.chain
        points[k] = pt
    return points


def sweep_detuning(n: int, L: int, grid=None, models=DEFAULT_MODELS, theta: float = 300.0,
                   table: ParamTable = None, hw: HardwareConstraints = None,
                   settings: SweepSettings = SweepSettings()):
    """Detuning study at fixed (n, L): records plus per-model optima.

    Returns (records, optima) where optima maps ModelKind to OptimumSummary.
    """
    if table is None or hw is None:
        raise ConfigError("sweep_detuning needs a parameter table and hardware constraints")
    models = tuple(models)
    params = physical_params(n, theta, table, hw)
    if grid is None:
        v_max = params.c6 / hw.dx_min**6
        grid = detuning_grid(v_max, params.omega, settings.lo_frac, settings.hi_frac,
                             settings.grid_points, settings.pert_floor)
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ConfigError("empty detuning grid")
    gamma = params.gamma_total(settings.include_admixture)

    points = _sweep_unitary(n, L, grid, params, hw, models, settings)
    records = [_dress(pt, m, n, L, theta, gamma) for pt in points for m in models]

    refined = False
    if settings.refine:
        extra: list[float] = []
        for m in models:
            known = np.abs(np.concatenate([grid, np.asarray(extra)])) if extra else np.abs(grid)
            cand = _refinement_points(records, m, known)
            extra.extend(cand.tolist())
        if extra:
            refined = True
            extra_points = _sweep_unitary(n, L, np.asarray(extra), params, hw, models, settings)
            points = points + extra_points
            records = [_dress(pt, m, n, L, theta, gamma) for pt in points for m in models]

    records.sort(key=lambda r: (abs(r.delta0), r.model.value))
    optima = {}
    for m in models:
        opt = _optimum(records, m, theta, n, L, grid.size, refined, params)
        if opt is not None:
            optima[m] = opt
    return records, optima


# ---------------------------------------------------------------------------
# principal-quantum-number sweep

@dataclass(frozen=True)
class NSweepEntry:
    """Per-n summary row of the principal-quantum-number study."""

    model: ModelKind
    n: int
    L: int
    theta: float
    delta_star: float
    p_star: float
    p_star_no_decay: float
    t_star: float
    v_max_nn: float      # rad/us at the spacing floor
    v_max_nnn: float     # rad/us at twice the spacing floor
    omega: float         # rad/us
    gamma: float         # 1/us
    lambda_nnn: float
    j_max_nn: float      # rad/us, realized at the optimum
    edge_optimum: bool


def _n_task(args):
    (n, L, theta, table, hw, models, settings) = args
    records, optima = sweep_detuning(n, L, None, models, theta, table, hw, settings)
    params = physical_params(n, theta, table, hw)
    v_nn = params.c6 / hw.dx_min**6
    entries = []
    for m, opt in optima.items():
        entries.append(NSweepEntry(
            model=m, n=n, L=L, theta=theta, delta_star=opt.delta_star,
            p_star=opt.p_star, p_star_no_decay=opt.p_star_no_decay,
            t_star=opt.t_star, v_max_nn=v_nn, v_max_nnn=v_nn / 64.0,
            omega=params.omega, gamma=params.gamma_total(settings.include_admixture),
            lambda_nnn=opt.lambda_nnn,
            j_max_nn=opt.chain.j_max if opt.chain is not None else math.nan,
            edge_optimum=opt.edge_optimum,
        ))
    slim = [replace(r, chain=None) for r in records]
    return n, entries, slim


def sweep_n(n_values, L: int, theta: float = 300.0, table: ParamTable = None,
            hw: HardwareConstraints = None, models=DEFAULT_MODELS,
            settings: SweepSettings = SweepSettings(), workers: int = 1):
    """Inner detuning sweep for each n; returns (entries, records, n_star per model).

    entries is a flat list of NSweepEntry sorted by (n, model); n_star maps
    each model to the entry maximizing p_star.
    """
    if table is None or hw is None:
        raise ConfigError("sweep_n needs a parameter table and hardware constraints")
    if not table.covers(n_values) and not table.allow_fallback:
        raise ConfigError("parameter table does not cover the requested n range")
    tasks = [(int(n), L, theta, table, hw, tuple(models), settings) for n in n_values]
    results = _run_tasks(_n_task, tasks, workers)
    results.sort(key=lambda r: r[0])
    entries = [e for _, es, _ in results for e in es]
    entries.sort(key=lambda e: (e.n, e.model.value))
    records = [r for _, _, rs in results for r in rs]
    best = {}
    for m in set(e.model for e in entries):
        sub = [e for e in entries if e.model is m]
        best[m] = max(sub, key=lambda e: e.p_star)
    return entries, records, best


# ---------------------------------------------------------------------------
# chain-length sweep

@dataclass(frozen=True)
class LSweepEntry:
    """Per-(L, theta) summary row of the chain-length study."""

    model: ModelKind
    L: int
    theta: float
    n_star: int
    delta_star: float
    p_star: float
    p_star_no_decay: float
    t_star: float
    gamma: float          # 1/us at (n_star, theta)
    lambda_nnn: float
    edge_optimum: bool


def _length_task(args):
    (L, thetas, n_candidates, refine_n, table, hw, model, settings) = args
    cache: dict[int, list[_UnitaryPoint]] = {}
    models = (model,)

    def unitary_for(n):
        if n not in cache:
            params = physical_params(n, 0.0, table, hw)
            v_max = params.c6 / hw.dx_min**6
            grid = detuning_grid(v_max, params.omega, settings.lo_frac, settings.hi_frac,
                                 settings.grid_points, settings.pert_floor)
            cache[n] = _sweep_unitary(n, L, grid, params, hw, models, settings)
        return cache[n]

    def best_for(n, theta):
        params = physical_params(n, theta, table, hw)
        gamma = params.gamma_total(settings.include_admixture)
        recs = [_dress(pt, model, n, L, theta, gamma) for pt in unitary_for(n)]
        opt = _optimum(recs, model, theta, n, L, settings.grid_points, False, params)
        if settings.refine and opt is not None:
            known = np.abs(np.array([pt.delta0 for pt in cache[n]]))
            extra = _refinement_points(recs, model, known)
            if extra.size:
                cache[n] = cache[n] + _sweep_unitary(n, L, extra, params, hw, models, settings)
                recs = [_dress(pt, model, n, L, theta, gamma) for pt in cache[n]]
                opt = _optimum(recs, model, theta, n, L, settings.grid_points, True, params)
        return opt

    entries = []
    for theta in thetas:
        opts = {}
        for n in n_candidates:
            opt = best_for(n, theta)
            if opt is not None:
                opts[n] = opt
        if not opts:
            continue
        n_best = max(opts, key=lambda n: opts[n].p_star)
        if refine_n:
            for n in (n_best - 1, n_best + 1):
                if n not in opts and table.covers([n]):
                    opt = best_for(n, theta)
                    if opt is not None:
                        opts[n] = opt
            n_best = max(opts, key=lambda n: opts[n].p_star)
        opt = opts[n_best]
        params = physical_params(n_best, theta, table, hw_local)
        entries.append(LSweepEntry(
            model=model, L=L, theta=theta, n_star=n_best, delta_star=opt.delta_star,
            p_star=opt.p_star, p_star_no_decay=opt.p_star_no_decay, t_star=opt.t_star,
            gamma=params.gamma_total(settings.include_admixture),
            lambda_nnn=opt.lambda_nnn, edge_optimum=opt.edge_optimum,
        ))
    return L, entries


def sweep_length(l_values, thetas=(300.0, 4.0), table: ParamTable = None,
                 hw: HardwareConstraints = None, model: ModelKind = ModelKind.RYD_LRI,
                 n_candidates=tuple(range(58, 81, 2)), refine_n: bool = True,
                 settings: SweepSettings = SweepSettings(), workers: int = 1):
    """Optimize (n, delta0) per chain length and temperature.

    Unitary evolutions are shared between temperatures, since decay only
    rescales the recorded peaks. Returns a flat list of LSweepEntry sorted
    by (theta, L).
    """
    if table is None or hw is None:
        raise ConfigError("sweep_length needs a parameter table and hardware constraints")
    tasks = [(int(L), tuple(thetas), tuple(n_candidates), refine_n, table, hw, model, settings)
             for L in l_values]
    results = _run_tasks(_length_task, tasks, workers)
    entries = [e for _, es in results for e in es]
    entries.sort(key=lambda e: (e.theta, e.L))
    return entries


def _run_tasks(fn, tasks, workers: int):
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))
