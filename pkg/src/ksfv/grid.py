"""Uniform structured grids and discrete operators with zero-flux boundaries.

Cell-centered finite-volume convention: a field stores one value per cell
(cell average), faces sit between cells, and every differential operator is
written in flux form so that discrete integrals telescope exactly.  All
boundary faces carry zero flux (homogeneous Neumann closure).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class GridSpec:
    """Axis-aligned box [0, L_0] x ... partitioned into uniform cells.

    dim must be 1 or 2; each axis needs at least 3 cells so that interior
    stencils exist away from both boundaries.
    """

    dim: int
    cells: tuple[int, ...]
    extent: tuple[float, ...]

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        object.__setattr__(self, "cells", tuple(int(n) for n in self.cells))
        object.__setattr__(self, "extent", tuple(float(L) for L in self.extent))
        if len(self.cells) != self.dim or len(self.extent) != self.dim:
            raise ValueError("cells and extent must have one entry per axis")
        if any(n < 3 for n in self.cells):
            raise ValueError(f"need at least 3 cells per axis, got {self.cells}")
        if any(L <= 0.0 for L in self.extent):
            raise ValueError(f"extent must be positive, got {self.extent}")
        object.__setattr__(self, "_spacing",
                           tuple(L / n for L, n in zip(self.extent, self.cells)))
        object.__setattr__(self, "_cell_volume", math.prod(self._spacing))

    @property
    def spacing(self) -> tuple[float, ...]:
        return self._spacing

    @property
    def cell_volume(self) -> float:
        return self._cell_volume

    @property
    def num_cells(self) -> int:
        return math.prod(self.cells)

    def cell_centers(self, axis: int) -> np.ndarray:
        """1D array of cell-center coordinates along the given axis."""
        h = self.spacing[axis]
        return (np.arange(self.cells[axis]) + 0.5) * h


@dataclass(frozen=True, eq=False)
class Field:
    """Cell-averaged scalar field on a GridSpec.

    The value array is frozen (read-only) once constructed; operations
    return new fields, so instances are safe to share across workers.
    Identity semantics (no elementwise ==); compare .values explicitly.
    """

    grid: GridSpec
    values: np.ndarray
    allow_nonfinite: bool = field(default=False, compare=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != self.grid.cells:
            raise ValueError(f"values shape {v.shape} does not match grid cells {self.grid.cells}")
        if not self.allow_nonfinite and not np.all(np.isfinite(v)):
            raise ValueError("field contains non-finite values")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def with_values(self, values: np.ndarray, allow_nonfinite: bool = False) -> "Field":
        return Field(self.grid, values, allow_nonfinite=allow_nonfinite)

    def min(self) -> float:
        return float(self.values.min())

    def max(self) -> float:
        return float(self.values.max())


def constant_field(grid: GridSpec, value: float) -> Field:
    return Field(grid, np.full(grid.cells, float(value)))


def face_gradient(f: Field, axis: int) -> np.ndarray:
    """Two-point difference (f_R - f_L)/h on every face along `axis`.

    The returned array has one entry per face (cells+1 along the axis);
    the two boundary faces are exactly zero.
    """
    if axis < 0 or axis >= f.grid.dim:
        raise ValueError(f"axis {axis} out of range for dim {f.grid.dim}")
    v = f.values
    h = f.grid.spacing[axis]
    shape = list(v.shape)
    shape[axis] += 1
    g = np.zeros(shape)
    interior = tuple(slice(1, -1) if k == axis else slice(None) for k in range(v.ndim))
    with np.errstate(invalid="ignore"):
        g[interior] = np.diff(v, axis=axis) / h
    return g


def _face_difference(faces: np.ndarray, axis: int, h: float) -> np.ndarray:
    """Per-cell (F_right - F_left)/h from a face array along `axis`."""
    return np.diff(faces, axis=axis) / h


def laplacian(f: Field) -> Field:
    """Flux-form 2*dim+1 point Laplacian with zero-flux boundary faces.

    Because every interior face gradient enters two adjacent cells with
    opposite signs, the discrete integral of the result vanishes up to
    floating-point accumulation.
    """
    out = np.zeros(f.grid.cells)
    for axis in range(f.grid.dim):
        g = face_gradient(f, axis)
        out += _face_difference(g, axis, f.grid.spacing[axis])
    return Field(f.grid, out, allow_nonfinite=True)


def apply_face_fluxes(f: Field, fluxes: list[np.ndarray], dt: float) -> Field:
    """Conservative update f - dt*div(F) for per-axis face flux arrays.

    The outgoing and incoming parts are accumulated separately so that a
    cell whose outflow is budgeted below its content can never be driven
    negative by rounding (fl(a - b) >= 0 whenever 0 <= b < a).
    """
    out_rate, in_rate = outflow_inflow_rates(f.grid, fluxes)
    with np.errstate(over="ignore", invalid="ignore"):
        updated = (f.values - dt * out_rate) + dt * in_rate
    return Field(f.grid, updated, allow_nonfinite=True)


def outflow_inflow_rates(grid: GridSpec, fluxes: list[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    """Split per-axis face fluxes into nonnegative outflow/inflow rates per cell.

    Rates are per unit volume: out[i] = sum over faces of flux leaving cell i
    divided by the spacing along that face's axis.
    """
    out_rate = np.zeros(grid.cells)
    in_rate = np.zeros(grid.cells)
    for axis in range(grid.dim):
        F = fluxes[axis]
        h = grid.spacing[axis]
        right = tuple(slice(1, None) if k == axis else slice(None) for k in range(grid.dim))
        left = tuple(slice(0, -1) if k == axis else slice(None) for k in range(grid.dim))
        Fr = F[right]
        Fl = F[left]
        out_rate += (np.maximum(Fr, 0.0) + np.maximum(-Fl, 0.0)) / h
        in_rate += (np.maximum(-Fr, 0.0) + np.maximum(Fl, 0.0)) / h
    return out_rate, in_rate


def integrate(f: Field) -> float:
    """Discrete integral: sum of cell values times cell volume."""
    return float(f.values.sum() * f.grid.cell_volume)


def lp_norm(f: Field, p: float) -> float:
    """L^p norm under cell-average quadrature; p=inf gives max |value|."""
    if p == math.inf:
        return float(np.abs(f.values).max())
    if p < 1:
        raise ValueError(f"p must be >= 1 or inf, got {p}")
    return float((np.abs(f.values) ** p).sum() * f.grid.cell_volume) ** (1.0 / p)


def face_gradient_sup(f: Field) -> float:
    """Max over all faces and axes of |two-point gradient|."""
    return max(float(np.abs(face_gradient(f, axis)).max()) for axis in range(f.grid.dim))


def second_difference_sup(f: Field) -> float:
    """Max over cells and axes of |f_{i+1} - 2 f_i + f_{i-1}| / h^2.

    Crude curvature monitor used alongside the face-gradient sup; interior
    cells only, since the mirror closure makes boundary second differences
    degenerate.
    """
    worst = 0.0
    v = f.values
    for axis in range(f.grid.dim):
        h = f.grid.spacing[axis]
        dd = np.diff(v, n=2, axis=axis) / (h * h)
        if dd.size:
            worst = max(worst, float(np.abs(dd).max()))
    return worst


def grad_square_integral(f: Field) -> float:
    """Discrete integral of |grad f|^2 using face gradients.

    Each interior face contributes g^2 times the cell volume; boundary
    faces contribute nothing (their gradient is zero by construction).
    """
    total = 0.0
    vol = f.grid.cell_volume
    for axis in range(f.grid.dim):
        g = face_gradient(f, axis)
        total += float((g * g).sum() * vol)
    return total
