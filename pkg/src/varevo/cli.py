"""Command-line front end.

Example::

    varevo --problem brachistochrone --tau-max 300 --output runs/brach

Writes ``history.csv``, one ``trajectory_<tau>.csv`` per snapshot,
``costates.csv`` for the final snapshot and ``report.json``.  The output
directory defaults to ``$VAREVO_OUTPUT_DIR`` and then ``./varevo_output``.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .core import compute_rates
from .diagnostics import reconstruct_costates
from .engine import EvolutionConfig, MovingGrid, SolveReport, StopReason, evolve
from .errors import VarevoError
from .model import GainConfig, ProblemModel
from .problems import (
    BuiltinProblem,
    builtin,
    init_feedback_double_integrator,
    init_straightline_brachistochrone,
)

log = logging.getLogger("varevo")

OUTPUT_ENV = "VAREVO_OUTPUT_DIR"
DEFAULT_NODES = {BuiltinProblem.DOUBLE_INTEGRATOR: 41, BuiltinProblem.BRACHISTOCHRONE: 101}

EXIT_OK, EXIT_USAGE, EXIT_FAILED = 0, 1, 2


def fmt(value: float) -> str:
    """Lossless decimal form of a double."""
    return format(float(value), ".17g")


@dataclass
class RunConfig:
    problem: BuiltinProblem
    N: int
    K: np.ndarray
    k_tf: float
    evolution: EvolutionConfig
    output: Path


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="varevo", description="Solve a built-in optimal control problem by variation evolution.")
    p.add_argument("--problem", required=True, choices=[b.value for b in BuiltinProblem])
    p.add_argument("--nodes", "-N", type=int, default=None, help="grid nodes (default 41 or 101 by problem)")
    gains = p.add_mutually_exclusive_group()
    gains.add_argument("--k", type=float, default=0.1, help="control gain K as a multiple of identity")
    gains.add_argument("--k-matrix", type=Path, help="file holding the full m x m gain matrix")
    p.add_argument("--k-tf", type=float, default=0.05, help="terminal-time gain")
    p.add_argument("--tau-max", type=float, default=300.0)
    p.add_argument("--rel-tol", type=float, default=1e-3)
    p.add_argument("--abs-tol", type=float, default=1e-6)
    p.add_argument("--residual-tol", type=float, default=1e-6)
    p.add_argument("--snapshot-every", type=float, default=5.0)
    p.add_argument("--feasibility-tol", type=float, default=0.1)
    p.add_argument("--moving-grid", choices=[g.value for g in MovingGrid], default=MovingGrid.CONVECTIVE.value)
    p.add_argument("--output", "-o", type=Path, default=None)
    p.add_argument("--verbose", "-v", action="store_true")
    return p


def parse_config(argv: Optional[Sequence[str]] = None) -> RunConfig:
    parser = build_parser()
    args = parser.parse_args(argv)
    tag = BuiltinProblem(args.problem)
    N = args.nodes if args.nodes is not None else DEFAULT_NODES[tag]
    if N < 3:
        parser.error("--nodes must be at least 3")
    m = 1
    if args.k_matrix is not None:
        try:
            K = np.atleast_2d(np.loadtxt(args.k_matrix, dtype=float))
        except (OSError, ValueError) as exc:
            parser.error(f"cannot read --k-matrix: {exc}")
    else:
        K = args.k * np.eye(m)
    output = args.output or Path(os.environ.get(OUTPUT_ENV) or "varevo_output")
    try:
        evo = EvolutionConfig(
            tau_max=args.tau_max,
            rel_tol=args.rel_tol,
            abs_tol=args.abs_tol,
            residual_tol=args.residual_tol,
            snapshot_every=args.snapshot_every,
            feasibility_tol=args.feasibility_tol,
            moving_grid=MovingGrid(args.moving_grid),
        )
    except ValueError as exc:
        parser.error(str(exc))
    if args.verbose:
        logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    return RunConfig(tag, N, K, args.k_tf, evo, output)


def write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def read_csv(path: Path) -> tuple[list[str], np.ndarray]:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array([[float(v) for v in r] for r in rows[1:]])


def trajectory_filename(tau: float) -> str:
    return f"trajectory_{tau:09.3f}.csv"


def write_outputs(problem: ProblemModel, report: SolveReport, gains: GainConfig, out: Path) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    q, n, m = problem.q, problem.n, problem.m
    write_csv(
        out / "history.csv",
        ["tau", "J", "res_u", "res_tf", "t_f", "g_drift"] + [f"pi_{k + 1}" for k in range(q)],
        ([r.tau, r.J, r.res_u, r.res_tf, r.tf, r.g_drift, *r.pi] for r in report.records),
    )
    traj_header = ["t"] + [f"x_{k + 1}" for k in range(n)] + [f"u_{k + 1}" for k in range(m)]
    taus = [r.tau for r in report.records] or [0.0]
    for tau, traj in zip(taus, report.snapshots):
        write_csv(out / trajectory_filename(tau), traj_header, np.vstack([traj.times, traj.x, traj.u]).T)

    final = report.final
    summary = {
        "problem": problem.name,
        "stop_reason": report.stop_reason.value,
        "message": report.message,
        "nodes": final.N,
        "wall_time_s": report.wall_time,
        "rhs_evaluations": report.nfev,
    }
    if report.records:
        rec = report.final_record
        summary.update(tau=rec.tau, J=rec.J, t_f=rec.tf, pi=rec.pi.tolist(), res_u=rec.res_u,
                       res_tf=rec.res_tf, g_drift=rec.g_drift)
        try:
            bundle = compute_rates(problem, final, gains)
            ct = reconstruct_costates(problem, final, bundle.ts, bundle.gf, bundle.ms.pi, bundle.nodes)
            write_csv(
                out / "costates.csv",
                ["t"] + [f"gamma_{k + 1}" for k in range(n)],
                np.vstack([final.times, ct.gamma]).T,
            )
        except VarevoError as exc:
            log.warning("costates not written: %s", exc)
    with open(out / "report.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    return summary


def run(argv: Optional[Sequence[str]] = None) -> int:
    try:
        cfg = parse_config(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    problem = builtin(cfg.problem)
    if cfg.K.shape != (problem.m, problem.m):
        print(f"varevo: error: gain matrix must be {problem.m}x{problem.m}", file=sys.stderr)
        return EXIT_USAGE
    try:
        gains = GainConfig(cfg.K, cfg.k_tf)
    except ValueError as exc:
        print(f"varevo: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if cfg.problem is BuiltinProblem.DOUBLE_INTEGRATOR:
        init = init_feedback_double_integrator(cfg.N)
    else:
        init = init_straightline_brachistochrone(cfg.N)
    try:
        report = evolve(problem, init, gains, cfg.evolution)
    except VarevoError as exc:
        print(f"varevo: {exc}", file=sys.stderr)
        return EXIT_FAILED
    summary = write_outputs(problem, report, gains, cfg.output)
    log.info("%s: %s", summary["stop_reason"], summary["message"])
    print(json.dumps({k: summary[k] for k in ("stop_reason", "J", "t_f", "pi") if k in summary}))
    if report.stop_reason in (StopReason.DIVERGED, StopReason.FEASIBILITY_LOST):
        return EXIT_FAILED
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
