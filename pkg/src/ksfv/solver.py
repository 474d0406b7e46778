"""Time integration of the regularized chemotaxis system.

One step advances (u, v) by operator splitting:

  1. u is updated by a conservative explicit flux-form Euler step with total
     face flux = diffusive + chemotactic.  The diffusive face flux uses the
     potential form -((u_R+sigma)^m - (u_L+sigma)^m)/h, which is exactly
     zero across degenerate faces and needs no division by u.  The
     chemotactic face flux is donor-cell upwinded so no cell is ever drained
     below zero.
  2. v is advanced by backward Euler on v_t - laplace v + v = u, with the
     previous step's u on the right-hand side, solved by conjugate
     gradients (the operator is symmetric positive definite and an
     M-matrix, so the exact update preserves nonnegativity and the discrete
     maximum principle).

The time step combines an explicit diffusion bound, an advective speed
bound, and a donor-cell outflow budget (total outgoing flux * dt <= safety *
cell content), which makes positivity of u structural rather than
statistical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .grid import Field, face_gradient
from .model import InitialData, ModelParams

_EPS = float(np.finfo(np.float64).eps)


@dataclass(frozen=True, eq=False)
class SimState:
    u: Field
    v: Field
    t: float
    step: int


@dataclass(frozen=True)
class StepControl:
    safety: float = 0.4
    dt_min: float = 1e-12
    dt_max: float = 0.1
    v_solve_tol: float = 1e-10
    v_solve_max_iters: int = 20000
    dt_fixed: float | None = None   # capped at the stability bound when set
    max_steps: int = 50_000_000

    def __post_init__(self):
        if not 0.0 < self.safety <= 1.0:
            raise ValueError(f"safety must be in (0, 1], got {self.safety}")
        if not 0.0 < self.dt_min < self.dt_max:
            raise ValueError(f"need 0 < dt_min < dt_max, got {self.dt_min}, {self.dt_max}")


@dataclass(frozen=True)
class StepFlags:
    dt_collapsed: bool = False
    nonfinite_detected: bool = False


@dataclass(frozen=True)
class StepOutcome:
    state: SimState
    dt_used: float
    v_solve_iters: int
    flags: StepFlags = field(default_factory=StepFlags)
    # sup |grad v| of the pre-step v, reused by run-level monitors when the
    # flux assembly already produced the gradients (nan otherwise)
    sup_grad_v: float = math.nan


def diffusive_flux(u: Field, params: ModelParams, axis: int) -> np.ndarray:
    """Face flux -((u_R+sigma)^m - (u_L+sigma)^m)/h along `axis`.

    Identical to -m (u+sigma)^(m-1) grad u in potential form; zero on
    boundary faces.
    """
    if u.min() < 0:
        raise ValueError("diffusive_flux requires u >= 0")
    with np.errstate(over="ignore", invalid="ignore"):
        pot = (u.values + params.sigma) ** params.m
    return -face_gradient(Field(u.grid, pot, allow_nonfinite=True), axis)


def chemotactic_flux(u: Field, v: Field, params: ModelParams, axis: int) -> np.ndarray:
    """Donor-cell upwinded face flux (u_donor)^q * grad v along `axis`.

    The donor is the left cell when the face gradient of v is positive
    (transport toward +axis) and the right cell otherwise; empty donors
    carry zero flux, so chemotaxis cannot overdraw a cell.
    """
    g = face_gradient(v, axis)
    uq = np.maximum(u.values, 0.0) ** params.q
    dim = u.grid.dim
    left = tuple(slice(0, -1) if k == axis else slice(None) for k in range(dim))
    right = tuple(slice(1, None) if k == axis else slice(None) for k in range(dim))
    interior = tuple(slice(1, -1) if k == axis else slice(None) for k in range(dim))
    g_int = g[interior]
    donor = np.where(g_int > 0.0, uq[left], uq[right])
    flux = np.zeros_like(g)
    flux[interior] = donor * g_int
    return flux


def _power(x: np.ndarray, e: float) -> np.ndarray:
    """x**e with the hot small-integer exponents special-cased."""
    if e == 1.0:
        return x
    if e == 2.0:
        return x * x
    with np.errstate(over="ignore", invalid="ignore"):
        return x ** e


@lru_cache(maxsize=None)
def _slices(dim: int, axis: int):
    left = tuple(slice(0, -1) if k == axis else slice(None) for k in range(dim))
    right = tuple(slice(1, None) if k == axis else slice(None) for k in range(dim))
    return left, right


class _StepWork:
    """One-pass evaluation of fluxes, outflow/inflow rates, and dt bounds.

    Face fluxes are kept on interior faces only (boundary faces are
    identically zero) and the donor-cell outflow budget shares the same
    rate arrays as the conservative update.
    """

    def __init__(self, u: Field, v: Field, params: ModelParams):
        grid = u.grid
        dim = grid.dim
        uv = u.values
        m, q, sigma = params.m, params.q, params.sigma

        pot = _power(uv + sigma, m) if sigma != 0.0 or m != 1.0 else uv
        uq = _power(uv, q) if params.chemotaxis else None

        out_rate = np.zeros(grid.cells)
        in_rate = np.zeros(grid.cells)
        speed_max = 0.0
        sup_dv = 0.0 if params.chemotaxis else math.nan
        for axis in range(dim):
            h = grid.spacing[axis]
            left, right = _slices(dim, axis)
            with np.errstate(invalid="ignore"):
                F = (pot[right] - pot[left]) * (-1.0 / h)
            if params.chemotaxis:
                vv = v.values
                dv = (vv[right] - vv[left]) * (1.0 / h)
                uphill = dv > 0.0
                donor_q = np.where(uphill, uq[left], uq[right])
                F = F + donor_q * dv
                abs_dv_max = float(np.abs(dv).max()) if dv.size else 0.0
                sup_dv = max(sup_dv, abs_dv_max)
                if q == 1.0:
                    sp_max = abs_dv_max
                else:
                    donor = np.where(uphill, uv[left], uv[right])
                    with np.errstate(divide="ignore", invalid="ignore"):
                        sp = np.where(donor > 0.0,
                                      _power(donor, q - 1.0) * np.abs(dv), 0.0)
                    sp_max = float(sp.max()) if sp.size else 0.0
                speed_max = max(speed_max, sp_max)
            with np.errstate(invalid="ignore"):
                Fp = np.maximum(F, 0.0)
                Fm = Fp - F  # max(-F, 0), reusing the clipped array
                Fp *= 1.0 / h
                Fm *= 1.0 / h
                out_rate[left] += Fp
                out_rate[right] += Fm
                in_rate[left] += Fm
                in_rate[right] += Fp

        self.grid = grid
        self.u = u
        self.out_rate = out_rate
        self.in_rate = in_rate
        self.speed_max = speed_max
        self.sup_grad_v = sup_dv
        self.params = params

    def dt_diffusion(self) -> float:
        """h^2 / (2 dim D_max), D_max = max over cells of m (u+sigma)^(m-1).

        The mobility is monotone in u, so the extreme cell is the sup (m>1)
        or the inf (m<1) of u.  For m < 1 with sigma = 0 the evaluation
        point is floored at machine epsilon scaled by the field sup; the
        flux itself never needs this floor.
        """
        m, sigma = self.params.m, self.params.sigma
        uv = self.u.values
        if m == 1.0:
            d_max = 1.0
        elif m > 1.0:
            d_max = m * (float(uv.max()) + sigma) ** (m - 1.0)
        else:
            lo = float(uv.min())
            if sigma == 0.0:
                lo = max(lo, _EPS * max(1.0, float(uv.max())))
            d_max = m * (lo + sigma) ** (m - 1.0)
        if d_max <= 0.0:
            return math.inf
        h = min(self.grid.spacing)
        return h * h / (2.0 * self.grid.dim * d_max)

    def dt_advection(self) -> float:
        """min of h/(2 dim max face speed) and the donor outflow budget
        (total outgoing flux * dt <= cell content, combined fluxes)."""
        h = min(self.grid.spacing)
        dt_speed = math.inf if self.speed_max == 0.0 else h / (2.0 * self.grid.dim * self.speed_max)
        busy = self.out_rate > 0.0
        if np.any(busy):
            budget = float((self.u.values[busy] / self.out_rate[busy]).min())
        else:
            budget = math.inf
        return min(dt_speed, budget)

    def dt(self, ctrl: StepControl) -> float:
        dt = ctrl.safety * min(self.dt_diffusion(), self.dt_advection(), ctrl.dt_max)
        if ctrl.dt_fixed is not None:
            # Fixed steps are for convergence studies; never exceed the stable dt.
            dt = min(ctrl.dt_fixed, dt)
        return dt

    def updated_u(self, dt: float) -> np.ndarray:
        """Conservative update; outgoing mass is removed before incoming
        mass is added so budgeted cells cannot round below zero."""
        with np.errstate(over="ignore", invalid="ignore"):
            return (self.u.values - dt * self.out_rate) + dt * self.in_rate


def compute_dt(state: SimState, params: ModelParams, ctrl: StepControl) -> float:
    """safety * min(diffusive bound, advective bound, dt_max).

    Values below ctrl.dt_min signal stiffness collapse; the caller is
    responsible for flagging dt_collapsed.
    """
    return _StepWork(state.u, state.v, params).dt(ctrl)


def advance_v(v: Field, u: Field, dt: float, ctrl: StepControl,
              x0: np.ndarray | None = None) -> tuple[Field, int]:
    """Backward-Euler solve of (1 + dt) v_new - dt laplace v_new = v + dt u.

    Conjugate gradients on the matrix-free SPD operator, warm-started from
    the previous v, to residual 2-norm <= v_solve_tol * (1 + |rhs|).  The
    exact solution of this M-matrix system is nonnegative for nonnegative
    inputs; in that case (and only then) the iterate is projected onto
    [0, inf) to remove solver-tolerance undershoot.  Signed inputs are
    solved as-is.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    grid = v.grid
    rhs = v.values + dt * u.values
    if x0 is None:
        x0 = v.values

    axes = [(_slices(grid.dim, axis), dt / grid.spacing[axis] ** 2)
            for axis in range(grid.dim)]
    diff_buf = [np.empty(tuple(n - 1 if k == axis else n
                               for k, n in enumerate(grid.cells)))
                for axis in range(grid.dim)]

    def apply_A(x: np.ndarray, out: np.ndarray) -> np.ndarray:
        np.multiply(x, 1.0 + dt, out=out)
        for ((left, right), scale), g in zip(axes, diff_buf):
            np.subtract(x[right], x[left], out=g)
            g *= scale
            out[left] -= g
            out[right] += g
        return out

    x = np.array(x0, dtype=np.float64)
    Ax = apply_A(x, np.empty_like(x))
    r = rhs - Ax
    tol = ctrl.v_solve_tol * (1.0 + float(np.linalg.norm(rhs)))
    rs = float(np.vdot(r, r))
    iters = 0
    if math.sqrt(rs) > tol:
        p = r.copy()
        Ap = np.empty_like(x)
        while True:
            apply_A(p, Ap)
            alpha = rs / float(np.vdot(p, Ap))
            x += alpha * p
            r -= alpha * Ap
            rs_new = float(np.vdot(r, r))
            iters += 1
            if math.sqrt(rs_new) <= tol:
                break
            if iters >= ctrl.v_solve_max_iters:
                raise RuntimeError(
                    f"v-solve failed to converge in {iters} iterations; "
                    f"residual {math.sqrt(rs_new):.3e}, tolerance {tol:.3e}")
            p *= rs_new / rs
            p += r
            rs = rs_new
    if float(v.values.min()) >= 0.0 and float(u.values.min()) >= 0.0:
        x = np.maximum(x, 0.0)
    return Field(grid, x, allow_nonfinite=True), iters


def step(state: SimState, params: ModelParams, ctrl: StepControl) -> StepOutcome:
    """One split step: explicit flux-form update of u, then the v-solve
    driven by the pre-step u.  Mass of u telescopes exactly; positivity is
    guaranteed by the outflow budget inside the time step."""
    work = _StepWork(state.u, state.v, params)
    dt = work.dt(ctrl)
    if dt < ctrl.dt_min:
        return StepOutcome(state=state, dt_used=0.0, v_solve_iters=0,
                           flags=StepFlags(dt_collapsed=True))

    u_new = Field(state.u.grid, work.updated_u(dt), allow_nonfinite=True)
    v_new, iters = advance_v(state.v, state.u, dt, ctrl, x0=state.v.values)

    new_state = SimState(u=u_new, v=v_new, t=state.t + dt, step=state.step + 1)
    # one-reduction finiteness probe: any nan/inf poisons the sum
    if not math.isfinite(float(u_new.values.sum()) + float(v_new.values.sum())):
        return StepOutcome(state=new_state, dt_used=dt, v_solve_iters=iters,
                           flags=StepFlags(nonfinite_detected=True),
                           sup_grad_v=work.sup_grad_v)
    return StepOutcome(state=new_state, dt_used=dt, v_solve_iters=iters,
                       sup_grad_v=work.sup_grad_v)


REACHED_T = "reached_T"
DT_COLLAPSED = "dt_collapsed"
NONFINITE = "nonfinite"
SUP_THRESHOLD = "sup_threshold"
MAX_STEPS = "max_steps"
WALL_BUDGET = "wall_budget"


@dataclass(eq=False)
class RunResult:
    records: list
    final_state: SimState
    termination: str
    sample_times: list[float]
    u_samples: list[np.ndarray]
    running_max_sup_u: float
    running_max_sup_grad_v: float
    comparison_violation: float
    steps: int


def run(initial: InitialData, params: ModelParams, ctrl: StepControl,
        horizon: float, samples: int = 11, tracker=None,
        sup_threshold_multiple: float = 1e4,
        wall_clock_budget: float | None = None) -> RunResult:
    """Integrate from the initial data to time `horizon` or a stopping flag.

    Diagnostics records are emitted at `samples` evenly spaced times
    (including t = 0 and the final state); the sampled u fields are kept
    for level-set post-processing.  Termination reasons: reached_T,
    dt_collapsed, nonfinite, sup_threshold, max_steps, wall_budget.

    Per-step monitors: running sup of u and of |grad v| (both cheap), plus
    the comparison check sup v <= max(sup v0, running sup u); the worst
    violation is reported rather than raised.
    """
    import time as _time

    if horizon <= 0:
        raise ValueError(f"horizon must be positive, got {horizon}")
    if samples < 2:
        raise ValueError(f"need at least 2 samples, got {samples}")

    state = SimState(u=initial.u0, v=initial.v0, t=0.0, step=0)
    sup_u0 = state.u.max()
    sup_cap = sup_threshold_multiple * sup_u0 if sup_u0 > 0 else math.inf
    targets = [horizon * j / (samples - 1) for j in range(1, samples)]

    records = []
    sample_times = [0.0]
    u_samples = [np.array(state.u.values)]
    if tracker is not None:
        records.append(tracker.record(state))

    running_sup_u = sup_u0
    running_sup_gv = _sup_grad(state.v)
    sup_v0 = state.v.max()
    violation = 0.0
    start = _time.monotonic() if wall_clock_budget is not None else 0.0

    termination = None
    next_target = 0
    while True:
        if state.t >= horizon:
            termination = REACHED_T
            break
        if state.step >= ctrl.max_steps:
            termination = MAX_STEPS
            break
        if wall_clock_budget is not None and _time.monotonic() - start > wall_clock_budget:
            termination = WALL_BUDGET
            break

        outcome = step(state, params, ctrl)
        if outcome.flags.dt_collapsed:
            termination = DT_COLLAPSED
            break
        if outcome.flags.nonfinite_detected:
            termination = NONFINITE
            break
        state = outcome.state

        sup_u = state.u.max()
        running_sup_u = max(running_sup_u, sup_u)
        # pre-step gradients come free with the fluxes; the final state's
        # gradient is folded in after the loop
        gv = outcome.sup_grad_v
        running_sup_gv = max(running_sup_gv, gv if not math.isnan(gv) else _sup_grad(state.v))
        violation = max(violation, state.v.max() - max(sup_v0, running_sup_u))

        if next_target < len(targets) and state.t >= targets[next_target]:
            while next_target < len(targets) and state.t >= targets[next_target]:
                next_target += 1
            sample_times.append(state.t)
            u_samples.append(np.array(state.u.values))
            if tracker is not None:
                records.append(tracker.record(state))

        if sup_u > sup_cap:
            termination = SUP_THRESHOLD
            break

    running_sup_gv = max(running_sup_gv, _sup_grad(state.v))
    if sample_times[-1] != state.t:
        sample_times.append(state.t)
        u_samples.append(np.array(state.u.values))
        if tracker is not None:
            records.append(tracker.record(state))

    return RunResult(records=records, final_state=state, termination=termination,
                     sample_times=sample_times, u_samples=u_samples,
                     running_max_sup_u=running_sup_u,
                     running_max_sup_grad_v=running_sup_gv,
                     comparison_violation=violation, steps=state.step)


def _sup_grad(v: Field) -> float:
    worst = 0.0
    for axis in range(v.grid.dim):
        d = np.diff(v.values, axis=axis)
        if d.size:
            worst = max(worst, float(np.abs(d).max()) / v.grid.spacing[axis])
    return worst
