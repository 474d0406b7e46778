"""Model parameters, exponent-regime classification, and initial data presets.

The system evolved by the solver is

    u_t = div( m (u + sigma)^(m-1) grad u ) - div( u^q grad v ),
    v_t = laplace v - v + u,

with zero-flux boundaries.  sigma > 0 regularizes the degenerate mobility;
sigma = 0 runs the limit problem directly (well-defined because u >= 0 is
preserved and 0^m = 0 for m > 0).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .grid import Field, GridSpec, constant_field, integrate


class Regime(enum.Enum):
    """Exponent regime of the pair (m, q) at dimension N."""

    H3 = "H3"                # m > q: nonlinear diffusion dominates, bounded
    H4 = "H4"                # q <= 1 and q + (q-1)/(N+1) <= m <= q
    CRITICAL_CLASSICAL = "CriticalClassical"  # m = q = 1
    OUTSIDE = "Outside"


@dataclass(frozen=True)
class ModelParams:
    m: float
    q: float
    sigma: float = 0.0
    dim: int = 2
    chemotaxis: bool = True

    def __post_init__(self):
        if not self.m > 0:
            raise ValueError(f"m must be > 0, got {self.m}")
        if not self.q > 0:
            raise ValueError(f"q must be > 0, got {self.q}")
        if not 0.0 <= self.sigma < 1.0:
            raise ValueError(f"sigma must be in [0, 1), got {self.sigma}")
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")


def classify_regime(params: ModelParams, N: int) -> Regime:
    """Classify (m, q) against the boundedness hypotheses at dimension N.

    Exact comparisons on the given floats.  m = q = 1 also satisfies the
    H4 inequalities but gets its own label because it is the classical
    case with known blow-up solutions.
    """
    m, q = params.m, params.q
    if m == 1.0 and q == 1.0:
        return Regime.CRITICAL_CLASSICAL
    if m > q:
        return Regime.H3
    if q <= 1.0 and q + (q - 1.0) / (N + 1) <= m <= q:
        return Regime.H4
    return Regime.OUTSIDE


@dataclass(frozen=True, eq=False)
class InitialData:
    preset: str
    u0: Field
    v0: Field

    def __post_init__(self):
        if self.u0.min() < 0 or self.v0.min() < 0:
            raise ValueError("initial data must be nonnegative")


def _gaussian_values(grid: GridSpec, mass: float, width: float,
                     center: tuple[float, ...] | None) -> np.ndarray:
    if mass <= 0:
        raise ValueError(f"requested mass must be > 0, got {mass}")
    if width < 2.0 * max(grid.spacing):
        raise ValueError(
            f"width {width} under-resolved: need at least 2 cells ({2.0 * max(grid.spacing)})")
    if center is None:
        center = tuple(L / 2.0 for L in grid.extent)
    r2 = np.zeros(grid.cells)
    for axis in range(grid.dim):
        x = grid.cell_centers(axis) - center[axis]
        shape = [1] * grid.dim
        shape[axis] = -1
        r2 = r2 + (x ** 2).reshape(shape)
    bump = np.exp(-r2 / (2.0 * width * width))
    raw_mass = bump.sum() * grid.cell_volume
    return bump * (mass / raw_mass)


def make_initial_data(grid: GridSpec, preset: str, *, value: float = 1.0,
                      mass: float = 1.0, width: float = 0.1,
                      center: tuple[float, ...] | None = None,
                      centers: list[tuple[float, ...]] | None = None,
                      low: float = 0.0, high: float = 1.0, seed: int = 0,
                      v0_preset: str = "constant", v0_value: float = 0.0) -> InitialData:
    """Build nonnegative (u0, v0) from a named preset.

    Presets for u0:
      constant       - u0 = value everywhere
      gaussian-bump  - normalized bump with total integral exactly `mass`
      two-bumps      - two bumps sharing `mass` equally
      random-nonneg  - seeded uniform values in [low, high)
    v0 is a constant field (v0_value) unless v0_preset = "match", which
    copies u0.
    """
    if preset == "constant":
        if value < 0:
            raise ValueError(f"constant preset needs value >= 0, got {value}")
        u0 = constant_field(grid, value)
    elif preset == "gaussian-bump":
        u0 = Field(grid, _gaussian_values(grid, mass, width, center))
    elif preset == "two-bumps":
        if centers is None:
            centers = [tuple(0.3 * L for L in grid.extent),
                       tuple(0.7 * L for L in grid.extent)]
        vals = np.zeros(grid.cells)
        for c in centers:
            vals += _gaussian_values(grid, mass / len(centers), width, tuple(c))
        u0 = Field(grid, vals)
    elif preset == "random-nonneg":
        if low < 0 or high <= low:
            raise ValueError(f"need 0 <= low < high, got [{low}, {high})")
        rng = np.random.default_rng(seed)
        u0 = Field(grid, rng.uniform(low, high, size=grid.cells))
    else:
        raise ValueError(f"unknown preset {preset!r}")

    if v0_preset == "constant":
        if v0_value < 0:
            raise ValueError(f"v0 must be nonnegative, got {v0_value}")
        v0 = constant_field(grid, v0_value)
    elif v0_preset == "match":
        v0 = u0
    else:
        raise ValueError(f"unknown v0 preset {v0_preset!r}")

    data = InitialData(preset=preset, u0=u0, v0=v0)
    assert integrate(data.u0) >= 0.0
    return data


# Classical 2D aggregation threshold for concentrated data; imported from the
# chemotaxis literature as a benchmark constant, configurable in experiments.
CRITICAL_MASS_2D = 8.0 * math.pi
