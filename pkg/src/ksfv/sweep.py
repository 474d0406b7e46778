"""Phase-diagram sweeps over (m, q) with bounded/blow-up classification.

Each grid point runs the same template configuration with its own exponent
pair.  Points are independent jobs; results are merged by grid index, so
the outcome is identical for any worker count and completion order.
Individual job failures are recorded per point and do not abort the sweep.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .config import RunConfig, SweepConfig, run_config_to_dict
from .diagnostics import DiagnosticsTracker
from .model import classify_regime
from .solver import DT_COLLAPSED, NONFINITE, REACHED_T, SUP_THRESHOLD, run

BOUNDED = "Bounded"
BLOW_UP = "BlowUp"
INCONCLUSIVE = "Inconclusive"

_BLOW_UP_REASONS = (DT_COLLAPSED, NONFINITE, SUP_THRESHOLD)


@dataclass(frozen=True)
class Classification:
    label: str
    monotone_growth: bool


def classify_run(records: list, termination: str, bounded_multiple: float,
                 running_max_sup_u: float | None = None) -> Classification:
    """Map a finished run onto {Bounded, BlowUp, Inconclusive}.

    BlowUp when a stopping flag fired; Bounded when the horizon was reached
    and sup u stayed within bounded_multiple times its initial value;
    Inconclusive otherwise.  A bounded run whose sampled sup u grew
    monotonically is flagged for human review (it may simply not have blown
    up yet).
    """
    if not records:
        raise ValueError("empty diagnostics series")
    if termination in _BLOW_UP_REASONS:
        return Classification(BLOW_UP, False)

    sups = [rec.sup_u for rec in records]
    peak = max(sups) if running_max_sup_u is None else running_max_sup_u
    initial = sups[0]
    monotone = all(a <= b for a, b in zip(sups, sups[1:])) and sups[-1] > initial
    if termination == REACHED_T and (initial == 0.0 or peak <= bounded_multiple * initial):
        return Classification(BOUNDED, monotone)
    return Classification(INCONCLUSIVE, monotone)


def execute_run(cfg: RunConfig, wall_clock_budget: float | None = None):
    """Run one configuration end to end: initial data, tracker, integration.

    Returns (result, tracker).
    """
    initial = cfg.make_initial()
    tracker = DiagnosticsTracker(cfg.model, cfg.diagnostics, initial.v0)
    result = run(initial, cfg.model, cfg.control, cfg.horizon,
                 samples=cfg.samples, tracker=tracker,
                 sup_threshold_multiple=cfg.thresholds.sup_multiple,
                 wall_clock_budget=wall_clock_budget)
    return result, tracker


def _max_ratio_s14(records) -> float | None:
    vals = [rec.ratio_s14 for rec in records
            if not math.isnan(rec.ratio_s14) and not math.isinf(rec.ratio_s14)]
    return max(vals) if vals else None


def _sweep_point(args) -> dict:
    i, j, m, q, template_doc = args
    from .config import parse_config
    import json

    point = {"i": i, "j": j, "m": m, "q": q}
    try:
        template = parse_config(json.dumps(template_doc))
        cfg = template.with_exponents(m, q)
        regime = classify_regime(cfg.model, max(cfg.model.dim, 2))
        result, _ = execute_run(cfg)
        verdict = classify_run(result.records, result.termination,
                               cfg.thresholds.bounded_multiple,
                               running_max_sup_u=result.running_max_sup_u)
        point.update({
            "regime": regime.value,
            "classification": verdict.label,
            "monotone_growth": verdict.monotone_growth,
            "termination": result.termination,
            "final_sup_u": result.records[-1].sup_u,
            "t_end": result.final_state.t,
            "max_ratio_s14": _max_ratio_s14(result.records),
            "error": None,
        })
    except Exception as e:  # job isolation: record, keep sweeping
        point.update({
            "regime": None, "classification": None, "monotone_growth": None,
            "termination": None, "final_sup_u": None, "t_end": None,
            "max_ratio_s14": None, "error": f"{type(e).__name__}: {e}",
        })
    return point


@dataclass(frozen=True)
class SweepResult:
    config: SweepConfig
    points: tuple[dict, ...]    # grid order: i-major over m_grid, j over q_grid

    @property
    def failures(self) -> list[dict]:
        return [pt for pt in self.points if pt["error"] is not None]


def sigma_ladder_report(cfg: RunConfig,
                        sigmas=(1e-1, 1e-2, 1e-3, 0.0)) -> list[dict]:
    """Rerun one configuration across a ladder of regularization strengths.

    Purely observational: emits one summary per sigma (termination, mass
    drift, sup monitors, the diagnostics records) so the approach to the
    sigma -> 0 limit can be inspected.  No claim is attached to the limit;
    the bounds being monitored carry unknown constants.
    """
    from dataclasses import replace

    reports = []
    for sigma in sigmas:
        run_cfg = replace(cfg, model=replace(cfg.model, sigma=sigma))
        result, _ = execute_run(run_cfg)
        masses = [rec.mass for rec in result.records]
        reports.append({
            "sigma": sigma,
            "termination": result.termination,
            "t_end": result.final_state.t,
            "mass_drift": max(abs(mm - masses[0]) for mm in masses),
            "running_max_sup_u": result.running_max_sup_u,
            "running_max_sup_grad_v": result.running_max_sup_grad_v,
            "records": result.records,
        })
    return reports


def run_sweep(cfg: SweepConfig) -> SweepResult:
    """Execute all (m, q) jobs, merging results by grid index.

    The merge is keyed, so worker count and completion order cannot change
    the result.
    """
    template_doc = run_config_to_dict(cfg.template)
    jobs = [(i, j, m, q, template_doc)
            for i, m in enumerate(cfg.m_grid)
            for j, q in enumerate(cfg.q_grid)]

    merged: dict[tuple[int, int], dict] = {}
    if cfg.workers == 1:
        for job in jobs:
            pt = _sweep_point(job)
            merged[(pt["i"], pt["j"])] = pt
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            for pt in pool.map(_sweep_point, jobs):
                merged[(pt["i"], pt["j"])] = pt

    ordered = tuple(merged[(i, j)]
                    for i in range(len(cfg.m_grid))
                    for j in range(len(cfg.q_grid)))
    return SweepResult(config=cfg, points=ordered)
