#!/usr/bin/env python3
"""Calibrate the default drive-strength anchor.

The source studies never state the absolute two-photon Rabi frequency; it
only enters through J_max ~ Omega^2. This script scans candidate anchors
and reports the two observables the shipped default must reproduce:

* n* : the principal quantum number maximizing the decayed long-range
  transport probability at L = 16, room temperature (target 71 +- 2);
* L_c: the extrapolated entanglement cutoff lengths at 300 K and 4 K
  (targets 54 +- 6 and 90 +- 10).

Usage: python tools/calibrate_anchor.py OMEGA_MHZ [OMEGA_MHZ ...] [--fast]
"""

from __future__ import annotations

import argparse
import time

from rydchain.analysis import fit_and_extrapolate, linear_fit_r2
from rydchain.evolution import ModelKind
from rydchain.params import HardwareConstraints, default_table
from rydchain.sweeps import SweepSettings, sweep_length, sweep_n
from rydchain.units import angular_to_mhz, mhz_to_angular


def evaluate(omega_mhz: float, fast: bool, workers: int = 2):
    table = default_table()
    hw = HardwareConstraints(omega_anchor=mhz_to_angular(omega_mhz))
    settings = SweepSettings(grid_points=36 if fast else 60, refine=not fast)

    t0 = time.time()
    entries, _, best = sweep_n(range(62, 81, 2), 16, 300.0, table, hw,
                               models=(ModelKind.RYD_LRI,), settings=settings,
                               workers=workers)
    n_star = best[ModelKind.RYD_LRI].n
    print(f"  n-sweep ({time.time() - t0:.0f} s): n* = {n_star}, "
          f"p* = {best[ModelKind.RYD_LRI].p_star:.4f}, "
          f"t* = {best[ModelKind.RYD_LRI].t_star:.1f} us, "
          f"|delta*| = {abs(angular_to_mhz(best[ModelKind.RYD_LRI].delta_star)):.0f} MHz")
    for e in entries:
        print(f"    n={e.n}: p*={e.p_star:.4f} lam={e.lambda_nnn:.4f} "
              f"|d*|={abs(angular_to_mhz(e.delta_star)):.0f} t*={e.t_star:.1f}")

    t0 = time.time()
    l_values = range(8, 21, 2) if fast else range(8, 21)
    n_cands = range(max(58, n_star - 6), min(81, n_star + 7), 2)
    entries_l = sweep_length(l_values, (300.0, 4.0), table, hw,
                             n_candidates=n_cands, settings=settings, workers=workers)
    out = {}
    for theta in (300.0, 4.0):
        sub = [e for e in entries_l if e.theta == theta]
        ls = [e.L for e in sub]
        ps = [e.p_star for e in sub]
        ts = [e.t_star for e in sub]
        ana = fit_and_extrapolate(ls, ps, theta)
        _, _, r2_t = linear_fit_r2(ls, ts)
        _, _, r2_p = linear_fit_r2(ls, [__import__("math").log(p) for p in ps])
        out[theta] = ana.l_c
        print(f"  L-sweep {theta:g} K ({time.time() - t0:.0f} s): L_c = {ana.l_c} "
              f"(A={ana.amplitude:.3f}, k={ana.rate:.5f}, R2_t={r2_t:.4f}, R2_logp={r2_p:.4f})")
        print("    " + "  ".join(f"L={e.L}:n*={e.n_star},p={e.p_star:.3f},t={e.t_star:.0f}us"
                                 for e in sub))
    return n_star, out


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("omegas", nargs="+", type=float)
    ap.add_argument("--fast", action="store_true")
    ap.add_argument("--workers", type=int, default=2)
    args = ap.parse_args()
    for om in args.omegas:
        print(f"Omega_anchor = 2pi x {om:g} MHz:")
        evaluate(om, args.fast, args.workers)


if __name__ == "__main__":
    main()
