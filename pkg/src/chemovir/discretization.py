"""Spatial operators on the cell-centered grid.

All operators implement the homogeneous Neumann condition through the
zero-flux convention: every boundary face carries exactly zero flux, which
is equivalent to mirrored ghost cells but makes discrete conservation
exact (fluxes telescope), not merely approximate.

The chemotaxis term is discretised conservatively with first-order
donor-cell upwinding of the sensitivity phi(u) = u/(1+u)^alpha on faces
and central face differences of v.  Upwinding sacrifices an order of
accuracy in exchange for sign-correctness: the explicit advective update
cannot push a nonnegative u below zero as long as the step size respects
the advective CFL bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import Grid, check_field
from .model import chemotactic_sensitivity


class ConvergenceError(RuntimeError):
    """Iterative solver failed to reach the requested residual."""


@dataclass(frozen=True)
class FaceVelocity:
    """Per-axis face-centered values of the gradient of v.

    ``components[k]`` has ``shape[k] + 1`` entries along axis k, one per
    face including the two boundary faces, which are identically zero
    (no-flux boundaries).
    """

    components: tuple[np.ndarray, ...]

    def max_abs(self) -> float:
        return max(float(np.abs(c).max()) for c in self.components)


# slice tuples selecting the lower/upper neighbours of the interior faces
# along one axis, cached per (ndim, axis)
_FACE_SLICES: dict[tuple[int, int], tuple[tuple, tuple]] = {}


def _face_slices(ndim: int, axis: int) -> tuple[tuple, tuple]:
    key = (ndim, axis)
    cached = _FACE_SLICES.get(key)
    if cached is None:
        lo = [slice(None)] * ndim
        hi = [slice(None)] * ndim
        lo[axis] = slice(None, -1)
        hi[axis] = slice(1, None)
        cached = (tuple(lo), tuple(hi))
        _FACE_SLICES[key] = cached
    return cached


def _face_slice(ndim: int, axis: int, sl) -> tuple:
    index = [slice(None)] * ndim
    index[axis] = sl
    return tuple(index)


def _laplacian_raw(values: np.ndarray, grid: Grid) -> np.ndarray:
    # hot path: assumes a float array of the right shape
    ndim = values.ndim
    out = np.zeros_like(values)
    for axis, h in enumerate(grid.spacing):
        lo, hi = _face_slices(ndim, axis)
        flux = values[hi] - values[lo]
        flux /= h * h
        out[lo] += flux
        out[hi] -= flux
    return out


def laplacian_neumann(values: np.ndarray, grid: Grid) -> np.ndarray:
    """2*ndim+1 point Laplacian with zero-flux boundary faces.

    Assembled as the divergence of interior face differences, so the
    integral of the output telescopes to zero up to roundoff.
    """
    return _laplacian_raw(check_field(values, grid), grid)


def face_gradient(values: np.ndarray, grid: Grid) -> FaceVelocity:
    """Face-centered gradient components; boundary faces are zero."""
    values = check_field(values, grid)
    components = []
    for axis, h in enumerate(grid.spacing):
        lo, hi = _face_slices(values.ndim, axis)
        full_shape = list(grid.shape)
        full_shape[axis] += 1
        comp = np.zeros(full_shape)
        comp[_face_slice(values.ndim, axis, slice(1, -1))] = (values[hi] - values[lo]) / h
        components.append(comp)
    return FaceVelocity(components=tuple(components))


def max_face_gradient(values: np.ndarray, grid: Grid) -> float:
    """max |face gradient| over all interior faces and axes (0 for constants).

    Equivalent to ``face_gradient(values, grid).max_abs()`` without
    materialising the padded face arrays; used in step-size control.
    """
    values = check_field(values, grid)
    result = 0.0
    for axis, h in enumerate(grid.spacing):
        lo, hi = _face_slices(values.ndim, axis)
        largest = float(np.abs(values[hi] - values[lo]).max()) / h
        if largest > result:
            result = largest
    return result


def chemotaxis_divergence(u: np.ndarray, v: np.ndarray, grid: Grid, alpha: float) -> np.ndarray:
    """Conservative divergence of the chemotactic flux phi(u) * grad(v).

    The face flux takes phi from the donor cell (the cell the flux leaves,
    determined by the sign of the face gradient of v).  Returns div(phi(u)
    grad v); the PDE right-hand side contribution is minus this value.
    """
    u = check_field(u, grid, "u")
    v = check_field(v, grid, "v")
    if np.any(u < 0):
        raise ValueError("chemotaxis_divergence requires u >= 0")
    ndim = u.ndim
    out = np.zeros_like(u)
    gradients = []
    for axis, h in enumerate(grid.spacing):
        lo, hi = _face_slices(ndim, axis)
        g = v[hi] - v[lo]
        g /= h
        gradients.append(g)
    if not any(g.any() for g in gradients):
        return out
    phi = chemotactic_sensitivity(u, alpha)
    for axis, h in enumerate(grid.spacing):
        lo, hi = _face_slices(ndim, axis)
        g = gradients[axis]
        flux = np.where(g > 0, phi[lo], phi[hi]) * g
        flux /= h
        if ndim == 1:
            out[lo] += flux
            out[hi] -= flux
        else:
            # assemble each axis in a zero buffer and sum in axis order, so
            # mirroring an axis mirrors the output bitwise (no reassociation)
            part = np.zeros_like(u)
            part[lo] += flux
            part[hi] -= flux
            out += part
    return out


def helmholtz_iteration_cap(grid: Grid) -> int:
    return int(math.ceil(10 * grid.n_cells ** (1.0 / grid.ndim)))


def helmholtz_solve(rhs: np.ndarray, tau: float, grid: Grid, tol: float = 1e-10,
                    max_iter: int | None = None) -> np.ndarray:
    """Solve (I - tau * lap) x = rhs by conjugate gradients, matrix free.

    The operator is symmetric positive definite with smallest eigenvalue 1,
    so plain CG converges without preconditioning at these sizes.  The
    initial guess is rhs itself, which makes constant right-hand sides
    exact without a single iteration.  Terminates when the l2 residual
    drops below tol * ||rhs||_2; raises ConvergenceError at the iteration
    cap (10 * cells^(1/ndim) by default).  Because the Laplacian integrates
    to zero, the converged solution preserves the mean of rhs to solver
    tolerance.
    """
    rhs = check_field(rhs, grid)
    if not tau > 0:
        raise ValueError(f"tau must be > 0, got {tau}")
    rhs_norm = float(np.sqrt((rhs * rhs).sum()))
    if rhs_norm == 0.0:
        return np.zeros_like(rhs)
    limit = helmholtz_iteration_cap(grid) if max_iter is None else max_iter
    threshold = tol * rhs_norm

    x = rhs.copy()
    r = tau * _laplacian_raw(x, grid)  # rhs - (x - tau*lap x) with x = rhs
    res = float(np.sqrt((r * r).sum()))
    if res <= threshold:
        return x
    p = r.copy()
    rs = float((r * r).sum())
    for _ in range(limit):
        ap = p - tau * _laplacian_raw(p, grid)
        step = rs / float((p * ap).sum())
        x += step * p
        r -= step * ap
        rs_next = float((r * r).sum())
        if math.sqrt(rs_next) <= threshold:
            return x
        p = r + (rs_next / rs) * p
        rs = rs_next
    raise ConvergenceError(
        f"helmholtz_solve did not reach residual {threshold:.3e} within "
        f"{limit} iterations (tau={tau}, grid={grid.shape}); "
        f"final residual {math.sqrt(rs):.3e}"
    )
