"""Runtime oracles: mass identities, decay bounds, quasi-energy, verdicts.

Every provable statement about the continuum system that survives
discretisation becomes a pure function of diagnostic records here:

* the exact total-mass identity  int(u) + int(v) = e^{-t} M0 + kappa|O|(1-e^{-t}),
  a consequence of the u*w conversion terms cancelling;
* the one-sided mass bound  int(u) <= e^{-t} int(u0) + kappa|O|(1-e^{-t});
* the analogous bound on int(v) with the combined initial mass;
* the quasi-energy  F = (1/p) int(u^p) + ((p+3)/4) int(v^2) + int(|grad w|^2),
  whose differential inequality forces a plateau for admissible p.

The monitors are stateless; each record is evaluated independently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from .grid import Grid, State, atomic_write_text, grad_norm_sq, integrate, lp_norm
from .model import Params

CSV_COLUMNS = (
    "t", "mass_u", "mass_v", "mass_w", "sup_u", "sup_v", "sup_w", "lp_u",
    "grad_v_sq", "grad_w_sq", "energy", "mass_identity_residual",
    "u_bound_slack", "v_bound_slack",
)


@dataclass
class DiagnosticsRecord:
    t: float
    mass_u: float
    mass_v: float
    mass_w: float
    sup_u: float
    sup_v: float
    sup_w: float
    lp_u: float
    grad_v_sq: float
    grad_w_sq: float
    energy: float
    mass_identity_residual: float
    u_bound_slack: float
    v_bound_slack: float


@dataclass(frozen=True)
class RunBaseline:
    """Initial masses and geometry needed to evaluate the bounds later."""

    mass_u0: float
    mass_uv0: float
    volume: float


@dataclass(frozen=True)
class BoundednessVerdict:
    label: str  # "bounded-plateau" | "growing" | "inconclusive"
    peak_sup_u: float
    tail_slope: float


def quasi_energy(state: State, p: float, grid: Grid) -> float:
    """F = (1/p) int(u^p) + ((p+3)/4) int(v^2) + int(|grad w|^2)."""
    if not p > 1:
        raise ValueError(f"energy exponent must exceed 1, got {p}")
    p = float(p)
    term_u = integrate(state.u ** p, grid) / p
    term_v = (p + 3.0) / 4.0 * integrate(state.v * state.v, grid)
    return term_u + term_v + grad_norm_sq(state.w, grid)


def mass_identity_residual(mass_u: float, mass_v: float, t: float,
                           initial_mass_uv: float, kappa: float, volume: float) -> float:
    """Signed defect of the exact total-mass identity at time t."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    expected = math.exp(-t) * initial_mass_uv + kappa * volume * (1.0 - math.exp(-t))
    return (mass_u + mass_v) - expected


def check_u_mass_bound(mass_u: float, mass_u0: float, kappa: float,
                       volume: float, t: float) -> float:
    """Slack of the healthy-cell mass bound; nonnegative means it holds."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    bound = math.exp(-t) * mass_u0 + kappa * volume * (1.0 - math.exp(-t))
    return bound - mass_u


def check_v_mass_bound(mass_v: float, initial_mass_uv: float, kappa: float,
                       volume: float, t: float) -> float:
    """Slack of the infected-cell mass bound (uses the combined initial mass)."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    bound = math.exp(-t) * initial_mass_uv + kappa * volume * (1.0 - math.exp(-t))
    return bound - mass_v


def compute_record(state: State, grid: Grid, params: Params, p: float | None,
                   baseline: RunBaseline) -> DiagnosticsRecord:
    """Evaluate all diagnostics for one state.

    ``p`` is the selected energy exponent, or None when infeasible, in
    which case the energy and lp_u columns are NaN (energy monitoring is
    disabled below the threshold).
    """
    inf = math.inf
    mass_u = integrate(state.u, grid)
    mass_v = integrate(state.v, grid)
    return DiagnosticsRecord(
        t=state.t,
        mass_u=mass_u,
        mass_v=mass_v,
        mass_w=integrate(state.w, grid),
        sup_u=lp_norm(state.u, grid, inf),
        sup_v=lp_norm(state.v, grid, inf),
        sup_w=lp_norm(state.w, grid, inf),
        lp_u=lp_norm(state.u, grid, float(p)) if p is not None else math.nan,
        grad_v_sq=grad_norm_sq(state.v, grid),
        grad_w_sq=grad_norm_sq(state.w, grid),
        energy=quasi_energy(state, float(p), grid) if p is not None else math.nan,
        mass_identity_residual=mass_identity_residual(
            mass_u, mass_v, state.t, baseline.mass_uv0, params.kappa, baseline.volume),
        u_bound_slack=check_u_mass_bound(
            mass_u, baseline.mass_u0, params.kappa, baseline.volume, state.t),
        v_bound_slack=check_v_mass_bound(
            mass_v, baseline.mass_uv0, params.kappa, baseline.volume, state.t),
    )


def classify_boundedness(records, growth_factor: float = 1e3,
                         tail_fraction: float = 0.2,
                         slope_tol: float = 1e-4) -> BoundednessVerdict:
    """Classify a trajectory as bounded-plateau, growing or inconclusive.

    growing: some sup_u exceeds growth_factor * sup_u(0) + 1.
    bounded-plateau: no growth trigger, and the least-squares slope of
    log(sup_u) over the final ``tail_fraction`` of the records stays below
    ``slope_tol`` per unit time.  Anything else is inconclusive.
    """
    records = list(records)
    if len(records) < 10:
        raise ValueError(f"classification needs >= 10 records, got {len(records)}")
    sup = np.array([r.sup_u for r in records])
    times = np.array([r.t for r in records])
    peak = float(sup.max())
    trigger = growth_factor * sup[0] + 1.0

    tail = max(2, int(math.ceil(tail_fraction * len(records))))
    tail_t = times[-tail:]
    tail_log = np.log(np.maximum(sup[-tail:], 1e-300))
    if float(tail_t[-1] - tail_t[0]) == 0.0:
        slope = 0.0
    else:
        slope = float(np.polyfit(tail_t, tail_log, 1)[0])

    if bool(np.any(sup > trigger)):
        label = "growing"
    elif slope < slope_tol:
        label = "bounded-plateau"
    else:
        label = "inconclusive"
    return BoundednessVerdict(label=label, peak_sup_u=peak, tail_slope=slope)


def energy_plateau_exceedance(records, window_fraction: float = 0.2) -> float:
    """Relative amount by which the final-window max of F exceeds the earlier max.

    Nonpositive values mean the energy admitted a finite running maximum
    that stopped increasing (the numerical restatement of the quasi-energy
    inequality).  NaN energies (disabled monitor) raise.
    """
    energies = np.array([r.energy for r in records], dtype=float)
    if np.any(np.isnan(energies)):
        raise ValueError("energy monitoring was disabled for this run")
    split = len(energies) - max(1, int(math.ceil(window_fraction * len(energies))))
    if split < 1:
        raise ValueError("trajectory too short for a plateau window")
    early = float(energies[:split].max())
    late = float(energies[split:].max())
    scale = max(abs(early), 1e-30)
    return (late - early) / scale


def write_diagnostics_csv(records, path):
    """Write records to CSV with the fixed column schema (atomically)."""
    lines = [",".join(CSV_COLUMNS)]
    for record in records:
        lines.append(",".join(repr(getattr(record, col)) for col in CSV_COLUMNS))
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_diagnostics_csv(path):
    """Read back a diagnostics CSV into records."""
    with open(path) as handle:
        header = handle.readline().strip().split(",")
        if tuple(header) != CSV_COLUMNS:
            raise ValueError(f"{path}: unexpected diagnostics header {header}")
        records = []
        for line in handle:
            if not line.strip():
                continue
            values = [float(x) for x in line.split(",")]
            records.append(DiagnosticsRecord(*values))
    return records


# DiagnosticsRecord must mirror the CSV schema exactly.
assert tuple(f.name for f in fields(DiagnosticsRecord)) == CSV_COLUMNS
