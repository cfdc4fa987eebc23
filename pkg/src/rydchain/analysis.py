"""Entanglement-distribution analysis of the optimized transport channel.

The end-to-end Bell-pair protocol inherits its entanglement from the
transport probability: the concurrence bound is C = max(0, 2 p - 1), so the
channel stops distributing entanglement once p drops to 1/2. p*(L) decays
approximately exponentially with chain length; fitting log p*(L) and
extrapolating gives the critical length L_c per temperature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


def concurrence(p_pi: float) -> float:
    """Concurrence bound of the distributed pair: max(0, 2 p - 1)."""
    if not -1e-12 <= p_pi <= 1.0 + 1e-12:
        raise ConfigError(f"transport probability outside [0, 1]: {p_pi}")
    return max(0.0, 2.0 * min(p_pi, 1.0) - 1.0)


@dataclass(frozen=True)
class ChannelAnalysis:
    """Exponential fit of p*(L) and the extrapolated entanglement cutoff."""

    theta: float
    amplitude: float            # A in p(L) ~ A exp(-k L)
    rate: float                 # k
    fit_residual: float         # RMS of log-space residuals over the fitted range
    l_c: int                    # smallest L with extrapolated p <= 1/2
    concurrence_per_l: tuple    # ((L, C), ...) over all input points
    fit_l_min: int              # smallest L included in the fit


def fit_and_extrapolate(lengths, p_values, theta: float = 300.0,
                        fit_l_min: int = 8) -> ChannelAnalysis:
    """Least-squares fit of log p vs L and the L_c extrapolation.

    Points with L below fit_l_min are excluded from the fit (small-chain
    transients) but still reported in the concurrence list.
    """
    ls = np.asarray(lengths, dtype=float)
    ps = np.asarray(p_values, dtype=float)
    if ls.shape != ps.shape or ls.ndim != 1:
        raise ConfigError("lengths and p_values must be 1-d and the same shape")
    if np.any(ps <= 0.0) or np.any(ps > 1.0 + 1e-12):
        raise ConfigError("transport probabilities must lie in (0, 1]")
    sel = ls >= fit_l_min
    if sel.sum() < 4:
        raise ConfigError(f"need at least 4 points with L >= {fit_l_min} to fit")
    lf, pf = ls[sel], np.log(ps[sel])
    if np.allclose(pf, pf[0], rtol=0.0, atol=1e-15):
        raise ConfigError("degenerate series: all probabilities equal")
    slope, intercept = np.polyfit(lf, pf, 1)
    k = -float(slope)
    a = math.exp(float(intercept))
    if k <= 0.0:
        raise ConfigError("fitted decay rate is non-positive; no finite L_c")
    resid = float(np.sqrt(np.mean((pf - (intercept + slope * lf)) ** 2)))
    # smallest integer L with A exp(-k L) <= 1/2
    l_c = math.ceil(math.log(2.0 * a) / k)
    while a * math.exp(-k * l_c) > 0.5:
        l_c += 1
    while l_c > 1 and a * math.exp(-k * (l_c - 1)) <= 0.5:
        l_c -= 1
    conc = tuple((int(l), concurrence(p)) for l, p in zip(ls, ps))
    return ChannelAnalysis(
        theta=float(theta), amplitude=a, rate=k, fit_residual=resid,
        l_c=int(l_c), concurrence_per_l=conc, fit_l_min=int(fit_l_min),
    )


def linear_fit_r2(x, y):
    """Least-squares line fit; returns (slope, intercept, R^2)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 3:
        raise ConfigError("need at least 3 points for a meaningful line fit")
    slope, intercept = np.polyfit(x, y, 1)
    pred = intercept + slope * x
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2
