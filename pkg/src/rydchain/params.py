"""Atomic and hardware parameters for Rb nS1/2 Rydberg chains.

All n-dependent quantities (van der Waals coefficient, relative dipole
element, Rabi frequency, vacuum and blackbody decay rates) come from an
ingestable data table; power-law fallbacks anchored at ``n_ref`` cover n
outside the tabulated range as a degraded mode.

Table file format (see ``data/rb87_ns.csv``): comment lines start with '#';
metadata lines are comments of the form ``# key: value``; the mandatory
header row names the columns ``n,c6_mhz_um6,d_er_rel,gamma0_per_us,
bbr_amp_per_us,bbr_x_k``. Frequencies are plain MHz in the file and are
converted to angular rad/us on load; decay columns are rates in 1/us.

The blackbody rate is stored per row as the theta-independent pieces of a
Beterov-style parametrization, Gamma_BBR(n, theta) = amp_n / (exp(x_n /
theta) - 1), which vanishes at theta = 0.
"""

from __future__ import annotations

import math
import os
import warnings
from dataclasses import dataclass
from importlib import resources

from .errors import ConfigError, TableError
from .units import mhz_to_angular

#: scaling exponents of the degraded (power-law fallback) mode
C6_EXPONENT = 11.0        # C6(n) ~ n^11
DIPOLE_EXPONENT = -1.5    # d_er(n) ~ n^-3/2
LIFETIME_EXPONENT = 3.0   # tau(n) ~ n^3
BBR_EXPONENT = -2.0       # Gamma_BBR(n) ~ n^-2 at fixed theta

_COLUMNS = ("n", "c6_mhz_um6", "d_er_rel", "gamma0_per_us", "bbr_amp_per_us", "bbr_x_k")


@dataclass(frozen=True)
class HardwareConstraints:
    """Hardware budget: trap geometry and optical power for the |e>->|r> leg.

    dx_min: minimum interatomic spacing (um)
    power_er: available optical power (W)
    intensity: peak intensity delivered by the beam (kW/cm^2)
    core_radius: beam core radius (um)
    delta_ge: intermediate-state detuning (rad/us)
    omega_anchor: optional direct override of the effective two-photon Rabi
        frequency at n_ref (rad/us); when None the anchor is derived from the
        table's dipole scale and the intensity.
    """

    dx_min: float = 3.0
    power_er: float = 4.0
    intensity: float = 127.0
    core_radius: float = 10.0
    delta_ge: float = mhz_to_angular(40000.0)
    omega_anchor: float | None = None

    def __post_init__(self):
        if self.dx_min <= 0:
            raise ConfigError("dx_min must be positive")
        if self.power_er <= 0:
            raise ConfigError("power_er must be positive")
        if self.intensity <= 0:
            raise ConfigError("intensity must be positive")
        if self.core_radius <= 0:
            raise ConfigError("core_radius must be positive")


@dataclass(frozen=True)
class TableRow:
    n: int
    c6: float          # rad/us * um^6
    d_er_rel: float    # relative to n_ref
    gamma0: float      # 1/us
    bbr_amp: float     # 1/us
    bbr_x: float       # K


@dataclass(frozen=True)
class ParamTable:
    """Validated per-n atomic data plus species-level metadata."""

    rows: dict[int, TableRow]
    n_ref: int
    source: str
    dipole_scale: float   # Omega_er(n_ref) per sqrt(intensity), rad/us per sqrt(kW/cm^2)
    gamma_e: float        # intermediate-state decay rate, 1/us
    allow_fallback: bool = True

    @property
    def n_values(self):
        return sorted(self.rows)

    def covers(self, n_values) -> bool:
        return all(int(n) in self.rows for n in n_values)


def _parse_meta(lines):
    meta = {}
    for ln in lines:
        body = ln.lstrip("#").strip()
        if ":" in body:
            key, _, val = body.partition(":")
            meta[key.strip()] = val.strip()
    return meta


def load_param_table(path, allow_fallback: bool = True) -> ParamTable:
    """Load and validate a parameter table file.

    Raises TableError naming the offending row/field on any schema violation
    (bad header, wrong column count, non-positive C6, negative decay
    coefficients, duplicate n).
    """
    if not os.path.isfile(path):
        raise TableError(f"parameter table not found: {path}")
    comments, header, rows = [], None, {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                comments.append(line)
                continue
            if header is None:
                header = tuple(col.strip() for col in line.split(","))
                if header != _COLUMNS:
                    raise TableError(
                        f"bad header at line {lineno}: expected {','.join(_COLUMNS)}"
                    )
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) != len(_COLUMNS):
                raise TableError(f"line {lineno}: expected {len(_COLUMNS)} columns, got {len(parts)}")
            try:
                n = int(parts[0])
                vals = [float(p) for p in parts[1:]]
            except ValueError as exc:
                raise TableError(f"line {lineno}: {exc}") from exc
            c6_mhz, d_er_rel, gamma0, bbr_amp, bbr_x = vals
            if c6_mhz <= 0:
                raise TableError(f"row n={n}: c6 must be positive, got {c6_mhz}")
            if d_er_rel <= 0:
                raise TableError(f"row n={n}: d_er_rel must be positive, got {d_er_rel}")
            if gamma0 < 0 or bbr_amp < 0 or bbr_x < 0:
                raise TableError(f"row n={n}: decay coefficients must be non-negative")
            if n in rows:
                raise TableError(f"duplicate row for n={n}")
            rows[n] = TableRow(
                n=n,
                c6=mhz_to_angular(c6_mhz),
                d_er_rel=d_er_rel,
                gamma0=gamma0,
                bbr_amp=bbr_amp,
                bbr_x=bbr_x,
            )
    if header is None or not rows:
        raise TableError(f"{path}: no header/data rows found")
    meta = _parse_meta(comments)
    try:
        n_ref = int(meta.get("n_ref", ""))
    except ValueError:
        raise TableError("metadata 'n_ref' missing or not an integer") from None
    if n_ref not in rows:
        raise TableError(f"n_ref={n_ref} has no table row")
    dipole_scale_mhz = float(meta.get("dipole_scale_mhz_per_sqrt_kw_cm2", "0") or 0)
    gamma_e = float(meta.get("gamma_e_per_us", "0") or 0)
    return ParamTable(
        rows=rows,
        n_ref=n_ref,
        source=meta.get("source", "unknown"),
        dipole_scale=mhz_to_angular(dipole_scale_mhz),
        gamma_e=gamma_e,
        allow_fallback=allow_fallback,
    )


def default_table(allow_fallback: bool = True) -> ParamTable:
    """The Rb87 nS1/2 table shipped with the package."""
    with resources.as_file(resources.files("rydchain.data") / "rb87_ns.csv") as p:
        return load_param_table(p, allow_fallback=allow_fallback)


def _row_or_none(n, table):
    return table.rows.get(int(n))


def _require_fallback(n, table, what):
    if not table.allow_fallback:
        raise TableError(f"n={n} outside table range for {what} and fallback is disabled")
    return table.rows[table.n_ref]


def c6_of(n, table: ParamTable) -> float:
    """Van der Waals coefficient C6(n) in rad/us*um^6 (n^11 fallback)."""
    row = _row_or_none(n, table)
    if row is not None:
        return row.c6
    anchor = _require_fallback(n, table, "c6")
    return anchor.c6 * (n / table.n_ref) ** C6_EXPONENT


def d_er_of(n, table: ParamTable) -> float:
    """Relative |e>->|r> dipole element d_er(n)/d_er(n_ref) (n^-3/2 fallback)."""
    row = _row_or_none(n, table)
    if row is not None:
        return row.d_er_rel
    anchor = _require_fallback(n, table, "d_er")
    return anchor.d_er_rel * (n / table.n_ref) ** DIPOLE_EXPONENT


def omega_anchor_of(hw: HardwareConstraints, table: ParamTable) -> float:
    """Effective two-photon Rabi frequency at n_ref (rad/us).

    Either supplied directly (hw.omega_anchor) or derived from the
    intensity-limited single-photon Rabi frequency as
    Omega_er^2 / (2 delta_ge) with Omega_er = dipole_scale * sqrt(I).
    """
    if hw.omega_anchor is not None:
        if hw.omega_anchor <= 0:
            raise ConfigError("omega_anchor must be positive")
        return hw.omega_anchor
    if hw.delta_ge == 0:
        raise ConfigError("delta_ge must be nonzero to derive the Rabi anchor")
    if table.dipole_scale <= 0:
        raise ConfigError("table has no dipole_scale metadata and no omega_anchor was supplied")
    omega_er = table.dipole_scale * math.sqrt(hw.intensity)
    return omega_er**2 / (2.0 * abs(hw.delta_ge))


def rabi_of(n, hw: HardwareConstraints, table: ParamTable) -> float:
    """Effective Rabi frequency Omega(n) = Omega_anchor * d_er_rel(n) in rad/us."""
    return omega_anchor_of(hw, table) * d_er_of(n, table)


def decay_rate(n, theta, table: ParamTable, include_admixture: bool = False,
               hw: HardwareConstraints | None = None) -> float:
    """Rydberg decay rate Gamma(n, theta) in 1/us.

    Vacuum part plus blackbody part; the optional admixture term
    |eps_r|^2 * Gamma_e (off by default) needs the hardware constraints to
    fix the intermediate-state admixture.
    """
    if theta < 0:
        raise ConfigError(f"temperature must be non-negative, got {theta}")
    row = _row_or_none(n, table)
    if row is not None:
        gamma0, bbr_amp, bbr_x = row.gamma0, row.bbr_amp, row.bbr_x
    else:
        anchor = _require_fallback(n, table, "decay")
        gamma0 = anchor.gamma0 * (n / table.n_ref) ** (-LIFETIME_EXPONENT)
        bbr_amp = anchor.bbr_amp * (n / table.n_ref) ** BBR_EXPONENT
        bbr_x = anchor.bbr_x
    gamma = gamma0
    if theta > 0 and bbr_amp > 0:
        gamma += bbr_amp / math.expm1(bbr_x / theta)
    if include_admixture:
        if hw is None:
            raise ConfigError("include_admixture requires hardware constraints")
        gamma += eps_r2_of(n, hw, table) * table.gamma_e
    return gamma


def eps_r2_of(n, hw: HardwareConstraints, table: ParamTable) -> float:
    """Residual intermediate-state admixture |eps_r(n)|^2 = Omega_er(n)^2 / (4 delta_ge^2)."""
    if hw.delta_ge == 0:
        raise ConfigError("delta_ge must be nonzero for the admixture fraction")
    anchor = omega_anchor_of(hw, table)
    return anchor * d_er_of(n, table) ** 2 / (2.0 * abs(hw.delta_ge))


@dataclass(frozen=True)
class PhysicalParams:
    """Frozen bundle of the n-, theta-, and hardware-dependent quantities."""

    n: int
    c6: float         # rad/us * um^6
    d_er: float       # relative to n_ref
    omega: float      # rad/us
    gamma0: float     # 1/us
    gamma_bbr: float  # 1/us
    gamma_e: float    # 1/us
    eps_r2: float
    theta: float      # K

    def __post_init__(self):
        if self.c6 <= 0:
            raise ConfigError("c6 must be positive (repulsive interaction)")
        if self.omega <= 0:
            raise ConfigError("omega must be positive")
        if self.gamma0 < 0 or self.gamma_bbr < 0:
            raise ConfigError("decay rates must be non-negative")

    def gamma_total(self, include_admixture: bool = False) -> float:
        """Gamma_r(n, theta), optionally with the |eps_r|^2 Gamma_e admixture."""
        gamma = self.gamma0 + self.gamma_bbr
        if include_admixture:
            gamma += self.eps_r2 * self.gamma_e
        return gamma


def physical_params(n, theta, table: ParamTable, hw: HardwareConstraints) -> PhysicalParams:
    """Assemble the PhysicalParams bundle for one (n, theta) operating point."""
    gamma_vac = decay_rate(n, 0.0, table)
    gamma_tot = decay_rate(n, theta, table)
    return PhysicalParams(
        n=int(n),
        c6=c6_of(n, table),
        d_er=d_er_of(n, table),
        omega=rabi_of(n, hw, table),
        gamma0=gamma_vac,
        gamma_bbr=gamma_tot - gamma_vac,
        gamma_e=table.gamma_e,
        eps_r2=eps_r2_of(n, hw, table),
        theta=float(theta),
    )


def check_intensity_consistency(hw: HardwareConstraints, core_fraction: float = 0.1,
                                rel_tol: float = 0.05) -> bool:
    """Check I ~= core_fraction * P / (pi w0^2) and warn on mismatch.

    Intensity in kW/cm^2, power in W, core radius in um. Advisory only: the
    configured intensity always wins.
    """
    area_cm2 = math.pi * (hw.core_radius * 1e-4) ** 2
    implied = core_fraction * hw.power_er / area_cm2 / 1e3
    ok = abs(implied - hw.intensity) <= rel_tol * hw.intensity
    if not ok:
        warnings.warn(
            f"configured intensity {hw.intensity:.1f} kW/cm^2 differs from the "
            f"power-implied {implied:.1f} kW/cm^2",
            stacklevel=2,
        )
    return ok
