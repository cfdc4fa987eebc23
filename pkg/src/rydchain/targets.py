"""Linear-spectrum perfect-transport targets.

For a chain of L spins the target nearest-neighbor coupling profile
J_{l,l+1} = 2 J_max sqrt(l(L-l)) / L_bar produces an equally spaced
single-excitation spectrum, which refocuses an end excitation at the mirror
site after t_pi = pi L_bar / (4 J_max). J_max is the coupling between the
two central atoms held at the minimum spacing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, SingularityError

#: relative distance to the blockade resonance below which j_max refuses to evaluate
RESONANCE_GUARD = 1e-9


def characteristic_length(L: int) -> float:
    """L_bar: L for even chains, sqrt(L^2 - 1) for odd chains."""
    if L < 2:
        raise ConfigError(f"chain length must be >= 2, got {L}")
    return float(L) if L % 2 == 0 else math.sqrt(L * L - 1.0)


def j_max(omega: float, delta0: float, c6: float, dx_min: float) -> float:
    """Coupling between the central atoms at spacing dx_min (rad/us).

    J_max = (Omega^2 / 4 delta0) / (delta0 dx_min^6 / C6 - 1). The point
    delta0 = V_max = C6/dx_min^6 is a hard singularity (blockade resonance),
    not a clamp: the perturbative mapping is invalid there.
    """
    if delta0 == 0:
        raise SingularityError("delta0 must be nonzero")
    v_max = c6 / dx_min**6
    denom = delta0 / v_max - 1.0
    if abs(denom) < RESONANCE_GUARD * max(1.0, abs(delta0 / v_max)):
        raise SingularityError(
            f"delta0 = {delta0:.6g} rad/us sits on the blockade resonance V_max = {v_max:.6g}"
        )
    return omega**2 / (4.0 * delta0) / denom


def coupling_targets(L: int, jmax: float) -> np.ndarray:
    """The L-1 target couplings J_{l,l+1} = 2 jmax sqrt(l(L-l)) / L_bar."""
    if jmax <= 0:
        raise ConfigError(f"jmax must be positive, got {jmax}")
    lbar = characteristic_length(L)
    ls = np.arange(1, L)
    return 2.0 * jmax * np.sqrt(ls * (L - ls)) / lbar


def transport_time(L: int, jmax: float) -> float:
    """Perfect transport time t_pi = pi L_bar / (4 jmax) in us."""
    if jmax <= 0:
        raise ConfigError(f"jmax must be positive, got {jmax}")
    return math.pi * characteristic_length(L) / (4.0 * jmax)


@dataclass(frozen=True)
class TransportTargets:
    """Kinematic targets of the perfect-transport condition for one chain.

    mu_target is the flat on-site potential realized at the chain center; it
    depends on the solved geometry, so it is NaN until attached to a chain
    solution.
    """

    L: int
    l_bar: float
    j_max: float
    j_targets: np.ndarray   # rad/us, length L-1
    t_pi: float             # us
    mu_target: float = math.nan


def transport_targets(L: int, jmax: float, mu_target: float = math.nan) -> TransportTargets:
    return TransportTargets(
        L=L,
        l_bar=characteristic_length(L),
        j_max=jmax,
        j_targets=coupling_targets(L, jmax),
        t_pi=transport_time(L, jmax),
        mu_target=mu_target,
    )
