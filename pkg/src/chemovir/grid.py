"""Cell-centered uniform Cartesian meshes, fields, quadrature and norms.

A field is a plain ``numpy`` array with one value per cell, C-ordered
(row-major) over ``grid.shape``.  The domain is a rectangular box; the
boundary condition everywhere is homogeneous Neumann, realised by the
zero-flux convention of the operators in :mod:`chemovir.discretization`.

Reductions run in a fixed order (numpy's sequential sum over the flat
array), so results are reproducible bit for bit.
"""

from __future__ import annotations

import math
import os
import tempfile
from dataclasses import dataclass

import numpy as np

SNAPSHOT_MAGIC = "CVF1"


@dataclass(frozen=True)
class Grid:
    """Uniform cell-centered mesh in 1, 2 or 3 dimensions.

    ``shape`` gives cells per axis (each >= 3); ``lengths`` the domain
    extent per axis (default 1.0 each).
    """

    shape: tuple[int, ...]
    lengths: tuple[float, ...] = ()

    def __post_init__(self):
        shape = self.shape if isinstance(self.shape, (tuple, list)) else (self.shape,)
        shape = tuple(int(s) for s in shape)
        if not 1 <= len(shape) <= 3:
            raise ValueError(f"grid dimension must be 1, 2 or 3, got {len(shape)}")
        if any(s < 3 for s in shape):
            raise ValueError(f"every axis needs >= 3 cells, got shape {shape}")
        lengths = self.lengths if self.lengths else (1.0,) * len(shape)
        lengths = tuple(float(L) for L in lengths)
        if len(lengths) != len(shape):
            raise ValueError(f"lengths {lengths} do not match shape {shape}")
        if any(not L > 0 for L in lengths):
            raise ValueError(f"domain lengths must be > 0, got {lengths}")
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "lengths", lengths)
        # geometry is immutable, cache the derived quantities
        spacing = tuple(L / s for L, s in zip(lengths, shape))
        object.__setattr__(self, "_spacing", spacing)
        object.__setattr__(self, "_cell_volume", math.prod(spacing))
        object.__setattr__(self, "_n_cells", math.prod(shape))
        object.__setattr__(self, "_volume", math.prod(lengths))

    @property
    def ndim(self) -> int:
        return len(self.shape)

    @property
    def spacing(self) -> tuple[float, ...]:
        return self._spacing

    @property
    def cell_volume(self) -> float:
        return self._cell_volume

    @property
    def n_cells(self) -> int:
        return self._n_cells

    @property
    def volume(self) -> float:
        return self._volume

    def cell_centers(self, axis: int) -> np.ndarray:
        """Cell-center coordinates along one axis."""
        h = self.spacing[axis]
        return (np.arange(self.shape[axis]) + 0.5) * h

    def new_field(self, fill: float = 0.0) -> np.ndarray:
        return np.full(self.shape, float(fill))


def check_field(values: np.ndarray, grid: Grid, name: str = "field") -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.shape != grid.shape:
        raise ValueError(f"{name} shape {values.shape} does not match grid {grid.shape}")
    return values


@dataclass
class State:
    """Solution triple (u, v, w) on a common grid at time t."""

    u: np.ndarray
    v: np.ndarray
    w: np.ndarray
    t: float = 0.0

    def copy(self) -> "State":
        return State(self.u.copy(), self.v.copy(), self.w.copy(), self.t)

    def validate(self, grid: Grid):
        for name in ("u", "v", "w"):
            values = check_field(getattr(self, name), grid, name)
            if not np.all(np.isfinite(values)):
                raise ValueError(f"{name} contains non-finite values")
            if np.any(values < 0):
                raise ValueError(f"{name} contains negative values")


def integrate(values: np.ndarray, grid: Grid) -> float:
    """Midpoint-rule integral over the box: cell_volume * sum of values."""
    values = check_field(values, grid)
    return grid.cell_volume * float(values.sum())


def lp_norm(values: np.ndarray, grid: Grid, p) -> float:
    """Discrete L^p norm; p = inf gives the max of |values|."""
    values = check_field(values, grid)
    if p == math.inf:
        return float(np.abs(values).max())
    if not p >= 1:
        raise ValueError(f"p must be >= 1 or inf, got {p}")
    return float((np.abs(values) ** p).sum() * grid.cell_volume) ** (1.0 / p)


def grad_norm_sq(values: np.ndarray, grid: Grid) -> float:
    """Quadrature of the squared gradient from face-centered differences.

    Each interior face contributes (difference/spacing)^2 times the cell
    volume; faces adjacent to the boundary take a 1.5x weight so that the
    gradient value there also covers the boundary half-cell.  This makes
    the quadrature exact for linear fields and leaves constants at zero
    exactly.
    """
    values = check_field(values, grid)
    vol = grid.cell_volume
    total = 0.0
    for axis, h in enumerate(grid.spacing):
        d = np.diff(values, axis=axis) / h
        sq = d * d
        first = tuple(0 if k == axis else slice(None) for k in range(grid.ndim))
        last = tuple(-1 if k == axis else slice(None) for k in range(grid.ndim))
        total += vol * (float(sq.sum()) + 0.5 * (float(sq[first].sum()) + float(sq[last].sum())))
    return total


def atomic_write_text(path, text: str):
    """Write a file fully or not at all (temp file + rename)."""
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


def write_snapshot(path, state: State, grid: Grid):
    """Write a lossless text snapshot (CVF1 format).

    Layout: magic line, ``ndim s1 [s2] [s3]``, domain lengths, ``t=<time>``,
    then blocks labeled u, v, w with all cells row-major, one value per
    line, 17 significant digits.
    """
    state.validate(grid)
    lines = [
        SNAPSHOT_MAGIC,
        " ".join([str(grid.ndim)] + [str(s) for s in grid.shape]),
        " ".join(f"{L:.17g}" for L in grid.lengths),
        f"t={state.t:.17g}",
    ]
    for label in ("u", "v", "w"):
        lines.append(label)
        values = getattr(state, label)
        lines.extend(f"{x:.17g}" for x in values.ravel(order="C"))
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_snapshot(path) -> tuple[State, Grid]:
    """Read a CVF1 snapshot back into (State, Grid)."""
    with open(path) as handle:
        lines = [line.rstrip("\n") for line in handle]
    if not lines or lines[0] != SNAPSHOT_MAGIC:
        raise ValueError(f"{path}: not a {SNAPSHOT_MAGIC} snapshot")
    header = lines[1].split()
    ndim = int(header[0])
    shape = tuple(int(s) for s in header[1:])
    if len(shape) != ndim:
        raise ValueError(f"{path}: dimension header {lines[1]!r} is inconsistent")
    lengths = tuple(float(x) for x in lines[2].split())
    grid = Grid(shape, lengths)
    if not lines[3].startswith("t="):
        raise ValueError(f"{path}: missing time line, got {lines[3]!r}")
    t = float(lines[3][2:])
    fields = {}
    cursor = 4
    for label in ("u", "v", "w"):
        if cursor >= len(lines) or lines[cursor] != label:
            raise ValueError(f"{path}: expected block label {label!r} at line {cursor + 1}")
        cursor += 1
        block = lines[cursor:cursor + grid.n_cells]
        if len(block) < grid.n_cells:
            raise ValueError(f"{path}: block {label!r} is truncated")
        fields[label] = np.array([float(x) for x in block]).reshape(grid.shape)
        cursor += grid.n_cells
    state = State(fields["u"], fields["v"], fields["w"], t)
    state.validate(grid)
    return state, grid
