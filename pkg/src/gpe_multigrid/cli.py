"""Batch front end: ``gpe-mg run <config>``."""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass, replace
from pathlib import Path

from .assembly import Potential, ProblemParams
from .coarse import ScfConfig, ScfError
from .diagnostics import compare_csv, compare_runs, error_vs_reference, errors_csv, write_dat_files
from .driver import MultigridConfig, MultigridRun, RunError, reference_solution, run_direct_all_levels, run_multigrid
from .linalg import DEFAULT_DIRECT_MAX_DOFS, SolverConfig, SolverError
from .mesh import BoxDomain

EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_IO = 4

MODES = ("multigrid", "direct", "both")
REQUIRED_KEYS = ("dim", "cells_per_axis", "n_levels", "zeta", "gammas")


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(message)
        self.line = line


@dataclass(frozen=True)
class RunConfig:
    dim: int
    cells_per_axis: int
    n_levels: int
    zeta: float
    gammas: tuple[float, ...] | None
    lower: tuple[float, ...] | None = None
    upper: tuple[float, ...] | None = None
    damping: float | None = None
    residual_tol: float = 1e-10
    max_iters: int = 500
    direct_max_dofs: int = DEFAULT_DIRECT_MAX_DOFS
    tol_base: float = 1e-10
    c_tol: float = 1e-2
    reference_tol: float = 1e-11
    mode: str = "multigrid"
    output_dir: str = "out"

    def problem(self) -> ProblemParams:
        lower = self.lower or (0.0,) * self.dim
        upper = self.upper or (1.0,) * self.dim
        potential = Potential(self.gammas) if self.gammas is not None else None
        return ProblemParams(BoxDomain(lower, upper), self.zeta, potential)

    def multigrid_config(self) -> MultigridConfig:
        scf = ScfConfig.for_zeta(
            self.zeta,
            residual_tol=self.residual_tol,
            max_iters=self.max_iters,
            **({} if self.damping is None else {"damping": self.damping}),
        )
        return MultigridConfig(scf, SolverConfig(self.direct_max_dofs, self.tol_base, self.c_tol))


def _int(v: str) -> int:
    return int(v)


def _floats(v: str) -> tuple[float, ...]:
    return tuple(float(p) for p in v.split(","))


def _optional_floats(v: str):
    return None if v.strip().lower() == "none" else _floats(v)


_PARSERS = {
    "dim": _int,
    "cells_per_axis": _int,
    "n_levels": _int,
    "zeta": float,
    "gammas": _optional_floats,
    "lower": _floats,
    "upper": _floats,
    "damping": float,
    "residual_tol": float,
    "max_iters": _int,
    "direct_max_dofs": _int,
    "tol_base": float,
    "c_tol": float,
    "reference_tol": float,
    "mode": str,
    "output_dir": str,
    "refinement_index": _int,
}


def parse_config(text: str) -> RunConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values: dict = {}
    where: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, value = (p.strip() for p in line.split("=", 1))
        if key not in _PARSERS:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in values:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        try:
            values[key] = _PARSERS[key](value)
        except ValueError:
            raise ConfigError(f"malformed value {value!r} for {key}", lineno) from None
        where[key] = lineno

    missing = [k for k in REQUIRED_KEYS if k not in values]
    if missing:
        raise ConfigError("missing required keys: " + ", ".join(missing))

    def check(key, ok, msg):
        if key in values and not ok(values[key]):
            raise ConfigError(f"{key} {msg}, got {values[key]!r}", where[key])

    check("refinement_index", lambda v: v == 2, "must be 2 (regular refinement)")
    values.pop("refinement_index", None)
    check("dim", lambda v: v in (1, 2, 3), "must be 1, 2 or 3")
    dim = values["dim"]
    check("cells_per_axis", lambda v: v >= 1, "must be >= 1")
    check("n_levels", lambda v: v >= 1, "must be >= 1")
    check("zeta", lambda v: v >= 0, "must be >= 0")
    check("gammas", lambda v: v is None or (len(v) == dim and all(g > 0 for g in v)), f"must be {dim} positive numbers or none")
    check("lower", lambda v: len(v) == dim, f"must have {dim} entries")
    check("upper", lambda v: len(v) == dim, f"must have {dim} entries")
    if "lower" in values or "upper" in values:
        lo = values.get("lower", (0.0,) * dim)
        hi = values.get("upper", (1.0,) * dim)
        if any(h <= l for l, h in zip(lo, hi)):
            raise ConfigError("upper corner must exceed lower corner", where.get("upper", where.get("lower")))
    check("damping", lambda v: 0 < v <= 1, "must lie in (0, 1]")
    for key in ("residual_tol", "tol_base", "c_tol", "reference_tol"):
        check(key, lambda v: v > 0, "must be positive")
    check("max_iters", lambda v: v >= 1, "must be >= 1")
    check("direct_max_dofs", lambda v: v >= 0, "must be >= 0")
    check("mode", lambda v: v in MODES, "must be one of " + "/".join(MODES))
    return RunConfig(**values)


def _summary(run: MultigridRun) -> str:
    lines = [
        f"{'Number of levels':>16} | {'Number of elements':>18} | {'Time (s)':>10} | {'lambda':>18}",
        "-" * 73,
    ]
    total = 0.0
    for r in run.levels:
        total += r.seconds
        lines.append(f"{r.level:>16d} | {r.elements:>18d} | {total:>10.4f} | {r.pair.lam:>18.12f}")
    return "\n".join(lines)


def execute(cfg: RunConfig, export_vtk: bool = False, quiet: bool = False) -> list[Path]:
    """Run the configured experiment and write its artifacts; returns written paths."""
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    params = cfg.problem()
    mg_cfg = cfg.multigrid_config()
    written: list[Path] = []

    def emit(name: str, text: str):
        path = out / name
        path.write_text(text)
        written.append(path)

    primary = direct = None
    if cfg.mode in ("multigrid", "both"):
        primary = run_multigrid(params, cfg.cells_per_axis, cfg.n_levels, mg_cfg)
    if cfg.mode in ("direct", "both"):
        direct = run_direct_all_levels(params, cfg.cells_per_axis, cfg.n_levels, mg_cfg)
    primary = primary or direct
    emit("run.csv", primary.to_csv())
    errors = None
    if cfg.mode == "both":
        emit("compare.csv", compare_csv(compare_runs(primary, direct)))
        ref, ref_ops, to_ref = reference_solution(direct, mg_cfg, cfg.reference_tol)
        errors = error_vs_reference(primary, ref, ref_ops, to_ref)
        emit("errors.csv", errors_csv(errors))
    written += write_dat_files(out, primary, errors)
    if export_vtk:
        for r, mesh in zip(primary.levels, primary.hierarchy.meshes):
            path = out / f"level_{r.level}.vtk"
            mesh.write_vtk(path, {"u": r.pair.u.values})
            written.append(path)
    if not quiet:
        print(_summary(primary))
    return written


_HELP_EPILOG = """\
config file: UTF-8 'key = value' lines, '#' comments.
  required: dim, cells_per_axis, n_levels, zeta, gammas (comma list or 'none')
  optional: lower, upper, damping, residual_tol, max_iters, direct_max_dofs,
            tol_base, c_tol, reference_tol, mode, output_dir, refinement_index (=2)

outputs (column order is fixed):
  run.csv      level,elements,dofs,lambda,residual,norm_drift,seconds
  compare.csv  level,elements,dofs,lambda_multigrid,lambda_direct,lambda_gap,h1_gap,l2_gap
  errors.csv   level,err_lambda,err_h1,err_l2,order_lambda,order_h1,order_l2
  time.dat     level elements dofs seconds cumulative_seconds
  errors.dat   level elements dofs err_lambda err_h1 err_l2
  level_k.vtk  legacy ASCII VTK with the nodal solution (--export-vtk)

exit codes: 0 ok, 2 config error, 3 solver failure, 4 I/O error
"""


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gpe-mg",
        description="Multigrid Newton solver for the Gross-Pitaevskii ground state.",
        epilog=_HELP_EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run an experiment", epilog=_HELP_EPILOG,
                         formatter_class=argparse.RawDescriptionHelpFormatter)
    run.add_argument("config", help="path to the key = value config file")
    run.add_argument("--mode", choices=MODES, help="override the config's mode")
    run.add_argument("--out", help="override the config's output_dir")
    run.add_argument("--export-vtk", action="store_true", help="write level_k.vtk files")
    run.add_argument("--quiet", action="store_true", help="suppress the summary table")
    return parser


def _fail(code: int, kind: str, message: str, **fields) -> int:
    extra = "".join(f" {k}={v}" for k, v in fields.items() if v is not None)
    msg = message.replace("\n", " ").replace('"', "'")
    print(f'error: kind={kind}{extra} message="{msg}"', file=sys.stderr)
    return code


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s")
    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as exc:
        return _fail(EXIT_IO, "io", str(exc), path=args.config)
    try:
        cfg = parse_config(text)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, "config", str(exc), line=exc.line)
    if args.mode:
        cfg = replace(cfg, mode=args.mode)
    if args.out:
        cfg = replace(cfg, output_dir=args.out)
    try:
        execute(cfg, export_vtk=args.export_vtk, quiet=args.quiet)
    except RunError as exc:
        return _fail(EXIT_SOLVER, "solver", str(exc), level=exc.level)
    except (SolverError, ScfError) as exc:
        return _fail(EXIT_SOLVER, "solver", str(exc))
    except OSError as exc:
        return _fail(EXIT_IO, "io", str(exc))
    return 0


if __name__ == "__main__":
    sys.exit(main())
