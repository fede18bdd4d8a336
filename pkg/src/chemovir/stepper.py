"""Time integration with adaptive steps and a hard positivity guarantee.

Two schemes are provided:

``imex`` (default)
    Chemotaxis, the u*w conversion and the kappa source advance
    explicitly; diffusion and the linear decays advance implicitly by a
    Helmholtz solve per field, (1 + dt*decay - dt*d*lap) x = star.  Folding
    the decay into the implicit operator makes the infection-free state
    (kappa, 0, 0) an exact fixed point of the discrete map.

``explicit-euler``
    Everything explicit.  With unit-coefficient reactions the discrete
    total mass M = int(u) + int(v) then obeys
    M_{k+1} = M_k + dt (kappa |O| - M_k) exactly (the conversion terms are
    the identical array and the transport terms integrate to zero), which
    the monitors exploit as an oracle.

Negative values are never clamped: a step that produces one raises
NegativityDetected and the driver retries with half the step, aborting the
run after 20 halvings.  Clamping would silently break the mass identity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .discretization import (
    _laplacian_raw,
    chemotaxis_divergence,
    helmholtz_solve,
    max_face_gradient,
)
from .grid import Grid, State, integrate
from .model import ExponentInfeasibleError, Params, select_energy_exponent
from .monitors import DiagnosticsRecord, RunBaseline, compute_record

SCHEMES = ("imex", "explicit-euler")
MAX_HALVINGS = 20


class NegativityDetected(RuntimeError):
    """A step drove a component negative; retry with a smaller dt."""

    def __init__(self, component: str, minimum: float, dt: float):
        super().__init__(f"{component} reached {minimum:.3e} with dt={dt:.3e}")
        self.component = component
        self.minimum = minimum
        self.dt = dt


class UnstableRunError(RuntimeError):
    """A run aborted: repeated dt halvings could not restore positivity."""

    def __init__(self, t: float, state: State, last_error: NegativityDetected):
        super().__init__(
            f"run aborted at t={t:.6g} after {MAX_HALVINGS} dt halvings ({last_error})")
        self.t = t
        self.state = state
        self.last_error = last_error


@dataclass(frozen=True)
class StepControl:
    """Step-size policy.  dt_max is deliberately small by default: the
    implicit decay introduces an O(dt) surplus in the monitored mass bounds
    and 0.01 keeps that surplus well inside the acceptance tolerances."""

    dt_max: float = 0.01
    cfl_advect: float = 0.4
    cfl_react: float = 0.9
    scheme: str = "imex"
    solver_tol: float = 1e-10

    def __post_init__(self):
        if not self.dt_max > 0:
            raise ValueError(f"dt_max must be > 0, got {self.dt_max}")
        for name in ("cfl_advect", "cfl_react"):
            value = getattr(self, name)
            if not 0 < value < 1:
                raise ValueError(f"{name} must lie in (0, 1), got {value}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if not self.solver_tol > 0:
            raise ValueError(f"solver_tol must be > 0, got {self.solver_tol}")


@dataclass
class RunResult:
    """Trajectory of diagnostics plus the final state and step statistics."""

    records: list[DiagnosticsRecord]
    final_state: State
    steps: int = 0
    negativity_retries: int = 0
    max_dt: float = 0.0
    energy_exponent: float | None = None
    baseline: RunBaseline | None = None


def stable_dt(state: State, params: Params, grid: Grid, control: StepControl) -> float:
    """Largest step the positivity-preserving bounds allow.

    Advective cap: the donor-cell chemotaxis update removes at most
    dt * phi(u_i)/u_i * sum_k 2 max|grad v|/h_k of each cell's content, and
    phi(u)/u = (1+u)^-alpha is largest at the smallest u, so

        dt <= cfl_advect * h_min / (2 ndim * max|grad v| * (1+min u)^-alpha)

    keeps the pure advective update nonnegative.  Reaction cap: the
    explicit pointwise loss rate is at most max(w) + decay, giving
    dt <= cfl_react / max(w + decay).  Explicit diffusion adds the usual
    h^2/(2 ndim d) limit.  With no velocity and dt_max as the only cap the
    result is dt_max, so the step is always positive.
    """
    caps = [control.dt_max]
    gmax = max_face_gradient(state.v, grid)
    if gmax > 0.0:
        saturation = (1.0 + float(state.u.min())) ** (-params.alpha)
        speed = 2.0 * grid.ndim * gmax * saturation
        caps.append(control.cfl_advect * min(grid.spacing) / speed)
    c = params.coeffs
    loss_rate = max(float(state.w.max()) + c.decay_u, c.decay_v, c.decay_w)
    caps.append(control.cfl_react / loss_rate)
    if control.scheme == "explicit-euler":
        diffusivity = max(c.d_u, c.d_v, c.d_w)
        caps.append(control.cfl_advect * min(grid.spacing) ** 2 / (2.0 * grid.ndim * diffusivity))
    return min(caps)


def _implicit_diffusion_decay(star: np.ndarray, dt: float, diffusivity: float,
                              decay: float, grid: Grid, tol: float) -> np.ndarray:
    # (1 + dt*decay - dt*d*lap) x = star, rescaled onto (I - tau*lap) x = rhs
    denominator = 1.0 + dt * decay
    return helmholtz_solve(star / denominator, dt * diffusivity / denominator, grid, tol=tol)


def step(state: State, params: Params, grid: Grid, dt: float, control: StepControl) -> State:
    """Advance one step of the selected scheme; raises NegativityDetected."""
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    u, v, w = state.u, state.v, state.w
    c = params.coeffs
    conversion = u * w
    chem = chemotaxis_divergence(u, v, grid, params.alpha)

    if control.scheme == "explicit-euler":
        # accumulate each rate in the (owned) Laplacian buffer to cut temporaries
        rate_u = _laplacian_raw(u, grid)
        if c.d_u != 1.0:
            rate_u *= c.d_u
        rate_u -= chem
        rate_u -= conversion
        rate_u += params.kappa
        rate_u -= u if c.decay_u == 1.0 else c.decay_u * u
        rate_u *= dt
        rate_u += u
        u_new = rate_u

        rate_v = _laplacian_raw(v, grid)
        if c.d_v != 1.0:
            rate_v *= c.d_v
        rate_v += conversion
        rate_v -= v if c.decay_v == 1.0 else c.decay_v * v
        rate_v *= dt
        rate_v += v
        v_new = rate_v

        rate_w = _laplacian_raw(w, grid)
        if c.d_w != 1.0:
            rate_w *= c.d_w
        rate_w += v if c.production == 1.0 else c.production * v
        rate_w -= w if c.decay_w == 1.0 else c.decay_w * w
        rate_w *= dt
        rate_w += w
        w_new = rate_w
    else:
        u_star = u + dt * (params.kappa - conversion - chem)
        v_star = v + dt * conversion
        w_star = w + dt * (c.production * v)
        tol = control.solver_tol
        u_new = _implicit_diffusion_decay(u_star, dt, c.d_u, c.decay_u, grid, tol)
        v_new = _implicit_diffusion_decay(v_star, dt, c.d_v, c.decay_v, grid, tol)
        w_new = _implicit_diffusion_decay(w_star, dt, c.d_w, c.decay_w, grid, tol)

    for name, values in (("u", u_new), ("v", v_new), ("w", w_new)):
        minimum = float(values.min())
        if minimum < 0.0:
            raise NegativityDetected(name, minimum, dt)
    return State(u_new, v_new, w_new, state.t + dt)


def _monitor_targets(t_end: float, monitor_every: float) -> list[float]:
    if monitor_every <= 0:
        return [t_end]
    targets = []
    k = 1
    while k * monitor_every < t_end - 1e-9 * max(1.0, t_end):
        targets.append(k * monitor_every)
        k += 1
    targets.append(t_end)
    return targets


def run(initial: State, params: Params, grid: Grid, control: StepControl,
        t_end: float, monitor_every: float, on_record=None) -> RunResult:
    """Advance to t_end, emitting diagnostics every monitor_every time units.

    The step size is re-evaluated from stable_dt every step and clipped so
    each monitor boundary is hit exactly; records land at t = 0, every
    boundary, and t_end.  Deterministic for identical inputs.  Raises
    UnstableRunError (with the failing time and state) when positivity
    cannot be restored by halving dt.
    """
    if t_end < 0:
        raise ValueError(f"t_end must be >= 0, got {t_end}")
    initial.validate(grid)
    baseline = RunBaseline(
        mass_u0=integrate(initial.u, grid),
        mass_uv0=integrate(initial.u, grid) + integrate(initial.v, grid),
        volume=grid.volume,
    )
    try:
        exponent = float(select_energy_exponent(params.alpha, grid.ndim).p)
    except ExponentInfeasibleError:
        exponent = None
    result = RunResult([], initial.copy(), energy_exponent=exponent, baseline=baseline)
    if t_end == 0:
        return result

    state = initial.copy()
    record = compute_record(state, grid, params, exponent, baseline)
    result.records.append(record)
    if on_record is not None:
        on_record(state, record)

    for target in _monitor_targets(t_end, monitor_every):
        cutoff = target - 1e-12 * max(1.0, target)
        while state.t < cutoff:
            dt = min(stable_dt(state, params, grid, control), target - state.t)
            last_error = None
            for _ in range(MAX_HALVINGS + 1):
                try:
                    state = step(state, params, grid, dt, control)
                    break
                except NegativityDetected as error:
                    last_error = error
                    result.negativity_retries += 1
                    dt *= 0.5
            else:
                raise UnstableRunError(state.t, state.copy(), last_error)
            result.steps += 1
            result.max_dt = max(result.max_dt, dt)
        state.t = target  # snap off the accumulated roundoff
        record = compute_record(state, grid, params, exponent, baseline)
        result.records.append(record)
        if on_record is not None:
            on_record(state, record)

    result.final_state = state
    return result
