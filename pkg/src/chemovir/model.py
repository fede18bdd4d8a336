"""Pointwise model definitions for the saturated-chemotaxis infection system.

The system couples healthy cells u, infected cells v and virus w:

    u_t = d_u*lap(u) - div(u/(1+u)^alpha * grad v) - u*w + kappa - u
    v_t = d_v*lap(v) + u*w - v
    w_t = d_w*lap(w) + v - w

with homogeneous Neumann boundaries.  This module holds the pointwise
ingredients: the saturated chemotactic sensitivity u/(1+u)^alpha, the
reaction kinetics, the dimension-dependent alpha threshold that guarantees
bounded solutions, the admissible exponent p used by the quasi-energy
monitor, and the spatially homogeneous steady states.

Threshold and exponent arithmetic is done in exact rationals
(`fractions.Fraction`) whenever the inputs are exact, so that alpha chosen
exactly on the threshold is never misclassified.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational

import numpy as np


class ExponentInfeasibleError(ValueError):
    """No admissible energy exponent exists: 2*alpha is at or below the
    largest lower bound, i.e. alpha does not exceed the boundedness
    threshold for this dimension.  Simulation may still run, but energy
    monitoring is disabled."""


@dataclass(frozen=True)
class Coefficients:
    """Positive coefficient overrides; the defaults reproduce the plain system."""

    d_u: float = 1.0
    d_v: float = 1.0
    d_w: float = 1.0
    decay_u: float = 1.0
    decay_v: float = 1.0
    decay_w: float = 1.0
    production: float = 1.0

    def __post_init__(self):
        for name in ("d_u", "d_v", "d_w", "decay_u", "decay_v", "decay_w", "production"):
            value = getattr(self, name)
            if not value > 0:
                raise ValueError(f"coefficient {name} must be > 0, got {value}")


@dataclass(frozen=True)
class Params:
    """Model constants: saturation exponent alpha >= 0 and source rate kappa >= 0."""

    alpha: float
    kappa: float = 0.0
    coeffs: Coefficients = field(default_factory=Coefficients)

    def __post_init__(self):
        if not self.alpha >= 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if not self.kappa >= 0:
            raise ValueError(f"kappa must be >= 0, got {self.kappa}")


@dataclass(frozen=True)
class EnergyExponent:
    """Admissible exponent for the quasi-energy functional.

    Satisfies lower_bound < p <= upper_bound with upper_bound = 2*alpha.
    """

    p: float
    lower_bound: float
    upper_bound: float

    def __post_init__(self):
        if not (self.lower_bound < self.p <= self.upper_bound):
            raise ValueError(
                f"energy exponent must satisfy {self.lower_bound} < p <= "
                f"{self.upper_bound}, got p={self.p}"
            )
        if not self.p > 1:
            raise ValueError(f"energy exponent must exceed 1, got {self.p}")


def chemotactic_sensitivity(u, alpha):
    """Saturated sensitivity phi(u) = u / (1+u)^alpha.

    Accepts scalars or arrays.  phi is bounded by u, by u^(1-alpha) for
    alpha <= 1, and by 1 for alpha >= 1; it is nondecreasing in u when
    alpha <= 1.
    """
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    values = np.asarray(u, dtype=float)
    if np.any(values < 0):
        raise ValueError("chemotactic_sensitivity requires u >= 0")
    result = values / (1.0 + values) ** alpha
    if np.isscalar(u) or values.ndim == 0:
        return float(result)
    return result


def reaction_rates(u, v, w, params: Params):
    """Pointwise kinetic rates (du/dt, dv/dt, dw/dt) without transport.

    The u*w conversion carries a unit coefficient in both the u and v
    equations so that the two contributions cancel exactly in the total
    mass budget; decay_* and production scale the linear terms.
    """
    if np.any(np.asarray(u) < 0) or np.any(np.asarray(v) < 0) or np.any(np.asarray(w) < 0):
        raise ValueError("reaction_rates requires nonnegative concentrations")
    c = params.coeffs
    conversion = np.multiply(u, w)
    du = -conversion + params.kappa - c.decay_u * np.asarray(u, dtype=float)
    dv = conversion - c.decay_v * np.asarray(v, dtype=float)
    dw = c.production * np.asarray(v, dtype=float) - c.decay_w * np.asarray(w, dtype=float)
    return du, dv, dw


def alpha_threshold(n: int) -> Fraction:
    """Exact rational threshold on alpha above which solutions stay bounded.

    1/2 + n^2/(6n+4) in dimensions 1..4 and n/4 for n >= 5.
    """
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ValueError(f"spatial dimension must be an integer >= 1, got {n!r}")
    if n <= 4:
        return Fraction(1, 2) + Fraction(n * n, 6 * n + 4)
    return Fraction(n, 4)


def _positive_part(x):
    zero = Fraction(0) if isinstance(x, Rational) else 0.0
    return x if x > zero else zero


def select_energy_exponent(alpha, n: int) -> EnergyExponent:
    """Pick an exponent p for the quasi-energy functional.

    All four lower bounds

        1 + n^2/(3n+2),  n/2,  (1-alpha)_+ * n/2,  (1 + (1-alpha)_+)/(1 + 1/n)

    must be strictly exceeded while p <= 2*alpha; p is placed at the
    midpoint of the feasible interval so neither strict bound is grazed.
    Raises ExponentInfeasibleError when the interval is empty.

    Rational alpha keeps the computation exact; float alpha uses floats.
    """
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ValueError(f"spatial dimension must be an integer >= 1, got {n!r}")
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    exact = isinstance(alpha, Rational)
    a = Fraction(alpha) if exact else float(alpha)
    one = Fraction(1) if exact else 1.0
    deficit = _positive_part(one - a)
    bounds = (
        one + Fraction(n * n, 3 * n + 2) * one,
        Fraction(n, 2) * one,
        deficit * Fraction(n, 2),
        (one + deficit) / (one + Fraction(1, n)),
    )
    lower = max(bounds)
    upper = 2 * a
    if not upper > lower:
        raise ExponentInfeasibleError(
            f"2*alpha = {upper} does not exceed the required lower bound {lower} "
            f"for n={n}; alpha is at or below the boundedness threshold"
        )
    p = (lower + upper) / 2
    return EnergyExponent(p=p, lower_bound=lower, upper_bound=upper)


def homogeneous_steady_states(kappa: float):
    """Spatially uniform states annihilating the kinetics (unit coefficients).

    The infection-free state (kappa, 0, 0) always exists; for kappa >= 1
    the infected state (1, kappa-1, kappa-1) appears (coinciding with the
    former at kappa = 1).
    """
    if not kappa >= 0:
        raise ValueError(f"kappa must be >= 0, got {kappa}")
    states = [(float(kappa), 0.0, 0.0)]
    if kappa > 1:
        states.append((1.0, float(kappa) - 1.0, float(kappa) - 1.0))
    return states
