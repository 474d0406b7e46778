"""Command line entry point.

Subcommands:
  run <config>     integrate one configuration and write its artifacts
  sweep <config>   run an (m, q) phase-diagram sweep
  kernels          self-verify the analytic kernels, emit a JSON report
  ladder <run-dir> rebuild a truncation ladder from a stored run series

Exit codes: 0 on success, 1 on configuration errors, 2 when a completed
sweep contains failed jobs (or the kernel self-check fails).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .config import ConfigError, RunConfig, SweepConfig, parse_config
from .diagnostics import build_ladder, ladder_for_run
from .kernels import self_check
from .outputs import (SWEEP_JSON, emit_run_outputs, load_series,
                      write_ladder_csv, write_sweep_json)
from .sweep import execute_run, run_sweep


def _load_config(path: str, kind):
    try:
        cfg = parse_config(Path(path).read_text())
    except FileNotFoundError:
        print(f"config file not found: {path}", file=sys.stderr)
        raise SystemExit(1)
    except ConfigError as e:
        print("invalid config:", file=sys.stderr)
        for err in e.errors:
            print(f"  {err}", file=sys.stderr)
        raise SystemExit(1)
    if not isinstance(cfg, kind):
        print(f"expected a {kind.__name__} document", file=sys.stderr)
        raise SystemExit(1)
    return cfg


def _cmd_run(args) -> int:
    cfg: RunConfig = _load_config(args.config, RunConfig)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    out_dir = Path(args.out)

    result, tracker = execute_run(cfg)
    ladder = ladder_for_run(result.sample_times, result.u_samples,
                            cfg.grid.cell_volume, cfg.model, cfg.diagnostics,
                            result.running_max_sup_u)
    emit_run_outputs(cfg, result, tracker, ladder, out_dir)
    print(f"termination: {result.termination} at t={result.final_state.t:.6g} "
          f"({result.steps} steps); artifacts in {out_dir}")
    return 0


def _cmd_sweep(args) -> int:
    cfg: SweepConfig = _load_config(args.config, SweepConfig)
    if args.workers is not None:
        cfg = replace(cfg, workers=args.workers)
    if args.seed is not None:
        cfg = replace(cfg, template=replace(cfg.template, seed=args.seed))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    result = run_sweep(cfg)
    write_sweep_json(result, out_dir / SWEEP_JSON)
    n_fail = len(result.failures)
    print(f"{len(result.points)} points swept, {n_fail} failures; "
          f"artifacts in {out_dir}")
    return 2 if n_fail else 0


def _cmd_kernels(args) -> int:
    report = self_check(tuples=args.tuples, seed=args.seed or 0)
    text = json.dumps(report, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return 0 if report["all_pass"] else 2


def _cmd_ladder(args) -> int:
    run_dir = Path(args.run_dir)
    meta_path = run_dir / "metadata.json"
    if not meta_path.exists():
        print(f"no run metadata found in {run_dir}", file=sys.stderr)
        return 1
    meta = json.loads(meta_path.read_text())
    times, fields = load_series(run_dir)
    from .kernels import exponent_ms_qs

    model = meta["config"]["model"]
    grid = meta["config"]["grid"]
    cell_volume = 1.0
    for n, L in zip(grid["cells"], grid["extent"]):
        cell_volume *= L / n
    m_s, _ = exponent_ms_qs(meta["s_used"], model["m"], model["q"], meta["N_used"])
    ladder = build_ladder(list(times), list(fields), cell_volume,
                          K=args.K, n_max=args.n_max, m_s=m_s)
    out = Path(args.out) if args.out else run_dir / "ladder_custom.csv"
    write_ladder_csv(ladder, out)
    print(f"ladder written to {out}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="ksfv", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="integrate one configuration")
    p_run.add_argument("config")
    p_run.add_argument("--out", default="ksfv-out")
    p_run.add_argument("--seed", type=int, default=None)

    p_sweep = sub.add_parser("sweep", help="run an (m, q) sweep")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--out", default="ksfv-out")
    p_sweep.add_argument("--workers", type=int, default=None)
    p_sweep.add_argument("--seed", type=int, default=None)

    p_k = sub.add_parser("kernels", help="kernel self-verification report")
    p_k.add_argument("--out", default=None)
    p_k.add_argument("--tuples", type=int, default=200)
    p_k.add_argument("--seed", type=int, default=None)

    p_l = sub.add_parser("ladder", help="rebuild a ladder from a run artifact")
    p_l.add_argument("run_dir")
    p_l.add_argument("--K", type=float, required=True)
    p_l.add_argument("--n-max", type=int, default=8)
    p_l.add_argument("--out", default=None)

    args = parser.parse_args(argv)
    handlers = {"run": _cmd_run, "sweep": _cmd_sweep,
                "kernels": _cmd_kernels, "ladder": _cmd_ladder}
    return handlers[args.command](args)


if __name__ == "__main__":
    raise SystemExit(main())
