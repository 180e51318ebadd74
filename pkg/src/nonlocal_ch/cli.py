"""
Command-line entry point.

    nch run         --config F [--out D]
    nch coarsen     --config F [--out D]
    nch converge    --config F [--out D]
    nch kernel-check --delta D --epsilon E --nx N --X X
    nch fit         --csv F --tmin A --tmax B

Exit status: 0 success, 1 invalid input, 2 numerical divergence.
FFT worker threads come from ``NCH_NUM_THREADS`` (default: all cores).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import io
from .config import RunConfig, parse_config
from .errors import ConfigError, DivergenceError, DomainError, ModelError, ShapeError
from .experiments import (
    ConvergenceConfig,
    SimulationResult,
    convergence_study,
    default_fit_window,
    fit_power_law,
    simulate,
)
from .kernel import build_kernel, verify_conditions
from .spectral_grid import Grid

EXIT_OK, EXIT_INVALID, EXIT_DIVERGED = 0, 1, 2
VALIDATION_ERRORS = (ConfigError, ShapeError, DomainError, ModelError, io.FormatError, OSError)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise _UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="nch", description="Nonlocal Cahn-Hilliard spectral solver")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    for name, help_ in (
        ("run", "integrate a config and write energy CSV and snapshots"),
        ("coarsen", "run a coarsening config and fit the energy power law"),
        ("converge", "temporal convergence study from a config's convergence section"),
    ):
        s = sub.add_parser(name, help=help_)
        s.add_argument("--config", required=True, type=Path)
        s.add_argument("--out", type=Path, default=None, help="output directory (default: config output.dir)")

    k = sub.add_parser("kernel-check", help="report kernel conditions for a Gaussian kernel")
    k.add_argument("--delta", type=float, required=True)
    k.add_argument("--epsilon", type=float, required=True)
    k.add_argument("--nx", type=int, required=True, help="nodes per direction")
    k.add_argument("--X", type=float, required=True, help="domain half-width")
    k.add_argument("--images", type=int, default=1)

    f = sub.add_parser("fit", help="fit E(t) ~ b_e t^m_e to an energy CSV")
    f.add_argument("--csv", type=Path, required=True)
    f.add_argument("--tmin", type=float, required=True)
    f.add_argument("--tmax", type=float, required=True)
    return p


def snapshot_name(t: float) -> str:
    return f"phi_t{t:g}"


def write_outputs(res: SimulationResult, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    io.write_energy_csv(res.records, out / "energy.csv")
    for _, (t, phi) in sorted(res.snapshots.items()):
        base = snapshot_name(t)
        io.write_snapshot(phi, t, out / f"{base}.nchf", res.grid)
        io.write_pgm(phi, out / f"{base}.pgm")


def _simulate_to(cfg: RunConfig, out: Path) -> SimulationResult:
    try:
        res = simulate(cfg)
    except DivergenceError as e:
        # keep whatever was produced before the blow-up
        grid = Grid(cfg.X1, cfg.X2, cfg.N1, cfg.N2)
        write_outputs(SimulationResult(grid, None, e.records, e.snapshots, None), out)
        raise
    write_outputs(res, out)
    return res


def _out_dir(args, cfg: RunConfig) -> Path:
    return args.out if args.out is not None else Path(cfg.output.dir)


def cmd_run(args) -> int:
    cfg = parse_config(args.config)
    out = _out_dir(args, cfg)
    res = _simulate_to(cfg, out)
    last = res.records[-1] if res.records else None
    print(f"t={cfg.t_final:g} records={len(res.records)} snapshots={len(res.snapshots)} out={out}")
    if last is not None:
        print(f"E={last.E:.10g} mass={last.mass:.10g}")
    return EXIT_OK


def cmd_coarsen(args) -> int:
    cfg = parse_config(args.config)
    out = _out_dir(args, cfg)
    res = _simulate_to(cfg, out)
    t_min, t_max = (cfg.fit.t_min, cfg.fit.t_max) if cfg.fit else default_fit_window(cfg.t_final)
    fit = fit_power_law(res.records, t_min, t_max)
    summary = {
        "m_e": fit.m_e,
        "b_e": fit.b_e,
        "t_min": t_min,
        "t_max": t_max,
        "residual": fit.residual,
        "n_points": fit.n_points,
    }
    (out / "fit.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(f"m_e={fit.m_e:.6g} b_e={fit.b_e:.6g} window=[{t_min:g}, {t_max:g}] residual={fit.residual:.3g}")
    return EXIT_OK


def cmd_converge(args) -> int:
    cfg = parse_config(args.config)
    cc = ConvergenceConfig.from_run_config(cfg)
    res = convergence_study(cc)
    out = _out_dir(args, cfg)
    out.mkdir(parents=True, exist_ok=True)
    lines = ["dt,steps,l2_error,rate"]
    for r in res.rows:
        rate = "" if r.rate is None else format(r.rate, ".17g")
        lines.append(f"{r.dt:.17g},{r.steps},{r.l2_error:.17g},{rate}")
    (out / "convergence.csv").write_text("\n".join(lines) + "\n")
    print(f"benchmark dt={res.dt_ref:g}")
    print(f"{'dt':>12} {'steps':>7} {'l2_error':>14} {'rate':>7}")
    for r in res.rows:
        rate = "" if r.rate is None else f"{r.rate:7.3f}"
        flag = "  FAILED" if r.failed else ""
        print(f"{r.dt:12.6g} {r.steps:7d} {r.l2_error:14.6e} {rate:>7}{flag}")
    print(f"least-squares order: {res.slope:.4f}")
    for n in res.notes:
        print(f"note: {n}")
    return EXIT_DIVERGED if any(r.failed for r in res.rows) else EXIT_OK


def cmd_kernel_check(args) -> int:
    grid = Grid(args.X, args.X, args.nx, args.nx)
    kernel = build_kernel(grid, args.delta, args.images)
    report = verify_conditions(kernel, args.epsilon)
    print(json.dumps(report.as_dict(), sort_keys=True))
    if not report.condition_d:
        print(
            f"condition (d) violated: gamma0 = {report.gamma0:.3g} <= 0 (needs delta < 2*epsilon)",
            file=sys.stderr,
        )
    return EXIT_OK


def cmd_fit(args) -> int:
    records = io.read_energy_csv(args.csv)
    fit = fit_power_law(records, args.tmin, args.tmax)
    print(f"m_e={fit.m_e:.6g} b_e={fit.b_e:.6g} residual={fit.residual:.3g} n={fit.n_points}")
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "coarsen": cmd_coarsen,
    "converge": cmd_converge,
    "kernel-check": cmd_kernel_check,
    "fit": cmd_fit,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError:
        return EXIT_INVALID
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_INVALID
    try:
        return COMMANDS[args.command](args)
    except DivergenceError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DIVERGED
    except VALIDATION_ERRORS as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
