"""Command line front end: ``nlsfem run | converge | consistency``.

Configuration comes from an optional JSON file; command-line flags override
individual keys. Exit codes: 0 success, 1 solver failure, 2 bad
configuration, 3 measured orders below the configured thresholds.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .assembly import Nonlinearity, ScalarField, assemble_mass, m_norm
from .errors import NlsError, UnknownCase
from .mesh import FeSpace, build_perturbed_mesh, build_uniform_mesh
from .timestepper import NlsProblem, TimeGrid, advance
from .verification import (BUILTIN_CASES, COUPLINGS, ManufacturedCase, builtin_case,
                           consistency_residuals, convergence_study, error_h1, error_l2,
                           without_forcing)

EXIT_OK, EXIT_SOLVER, EXIT_CONFIG, EXIT_THRESHOLD = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    case: Union[str, dict] = "ms1"
    degree: int = 1
    m: int = 32
    time_steps: int = 32
    T: Optional[float] = None
    time_jitter: float = 0.0
    mesh_jitter: float = 0.0
    seed: int = 0
    drop_forcing: bool = False
    timing: bool = False
    # convergence study
    levels: int = 4
    m0: int = 8
    coupling: str = "h"
    k_factor: float = 1.0
    max_over_n: bool = False
    min_rate_l2: Optional[float] = None
    min_rate_h1: Optional[float] = None
    # consistency check
    ks: list = field(default_factory=lambda: [2.0 ** -j for j in range(3, 10)])
    t0: float = 0.3
    half_order: list = field(default_factory=lambda: [0.9, 1.1])
    full_order: list = field(default_factory=lambda: [1.9, 2.1])
    # output
    out: str = "."
    outputs: list = field(default_factory=list)

    def __post_init__(self):
        self.validate()

    def validate(self):
        if isinstance(self.case, str):
            if self.case not in BUILTIN_CASES:
                raise ConfigError(f"unknown case {self.case!r}; built-ins: {sorted(BUILTIN_CASES)}")
        elif isinstance(self.case, dict):
            unknown = set(self.case) - {"a", "b", "lam", "T"}
            if unknown:
                raise ConfigError(f"inline case has unknown keys {sorted(unknown)}")
        else:
            raise ConfigError("case must be a built-in name or an inline problem object")
        if self.degree not in (1, 2, 3):
            raise ConfigError(f"degree must be 1, 2 or 3, got {self.degree}")
        if self.m < 2 or self.time_steps < 1:
            raise ConfigError("need m >= 2 and time_steps >= 1")
        if self.coupling not in COUPLINGS:
            raise ConfigError(f"coupling must be one of {COUPLINGS}")
        if self.levels < 3:
            raise ConfigError("levels must be >= 3")
        if not 0.0 <= self.time_jitter < 0.5 or not 0.0 <= self.mesh_jitter < 0.5:
            raise ConfigError("jitter values must lie in [0, 0.5)")
        if self.outputs and len(self.outputs) != 2:
            raise ConfigError("outputs must list exactly [csv_path, json_path]")

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        return asdict(self)

    def output_paths(self, command: str) -> tuple[Path, Path]:
        if self.outputs:
            return Path(self.outputs[0]), Path(self.outputs[1])
        base = Path(self.out)
        return base / f"{command}.csv", base / f"{command}.json"


def build_case(cfg: RunConfig) -> ManufacturedCase:
    if isinstance(cfg.case, str):
        case = builtin_case(cfg.case, T=cfg.T if cfg.T is not None else 1.0)
    else:
        case = inline_case(cfg.case, cfg.T)
    if cfg.drop_forcing:
        case = without_forcing(case)
    return case


def inline_case(params: dict, T_override: Optional[float] = None) -> ManufacturedCase:
    """Cubic NLS on (a, b) with g = 0 and u0 = sin(pi (x - a) / (b - a))."""
    a = float(params.get("a", 0.0))
    b = float(params.get("b", 1.0))
    lam = float(params.get("lam", 1.0))
    T = float(T_override if T_override is not None else params.get("T", 1.0))
    L = b - a
    u0 = ScalarField(
        value=lambda t, x: np.sin(math.pi * (np.asarray(x) - a) / L) + 0j,
        dx=lambda t, x: (math.pi / L) * np.cos(math.pi * (np.asarray(x) - a) / L) + 0j,
    )
    problem = NlsProblem((a, b), T, Nonlinearity.cubic(lam), ScalarField.zero(), u0)
    return ManufacturedCase("inline", problem, f"cubic NLS on ({a}, {b}), lam={lam}, g=0")


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def write_csv(path: Path, header: list[str], rows: list[dict]):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(row.get(col)) for col in header])


def write_json(path: Path, payload: dict):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")


def cmd_run(cfg: RunConfig) -> int:
    case = build_case(cfg)
    p = case.problem
    a, b = p.domain
    if cfg.mesh_jitter:
        mesh = build_perturbed_mesh(a, b, cfg.m, cfg.mesh_jitter, cfg.seed)
    else:
        mesh = build_uniform_mesh(a, b, cfg.m)
    space = FeSpace(mesh, cfg.degree)
    grid = TimeGrid.perturbed(p.T, cfg.time_steps, cfg.time_jitter, cfg.seed)
    M = assemble_mass(space)
    errors = {}
    state = {}

    def observe(n, t, U):
        if n == 0:
            state["l2_0"] = m_norm(M, U)
        if p.exact is not None:
            errors[n] = (error_l2(space, U, p.exact, t), error_h1(space, U, p.exact, t))

    start = time.perf_counter()
    U, records = advance(space, p, grid, observer=observe)
    total = time.perf_counter() - start

    header = ["n", "t", "l2_norm", "g_l2"]
    if cfg.timing:
        header.append("wall_time")
    if p.exact is not None:
        header += ["err_l2", "err_h1"]
    rows = []
    for rec in records:
        row = asdict(rec)
        if p.exact is not None:
            row["err_l2"], row["err_h1"] = errors[rec.n]
        rows.append(row)
    csv_path, json_path = cfg.output_paths("run")
    write_csv(csv_path, header, rows)

    l2_0 = state["l2_0"]
    norms = np.array([rec.l2_norm for rec in records])
    summary = {
        "command": "run",
        "case": case.name,
        "h": mesh.h,
        "k": grid.k,
        "steps": grid.N,
        "initial_l2_norm": l2_0,
        "final_l2_norm": float(norms[-1]),
        "mass_drift": float(np.max(np.abs(norms - l2_0))),
        "final_err_l2": errors[grid.N][0] if p.exact is not None else None,
        "final_err_h1": errors[grid.N][1] if p.exact is not None else None,
        "wall_time": total,
        "config": cfg.to_dict(),
    }
    write_json(json_path, summary)
    print(f"run {case.name}: N={grid.N} mass_drift={summary['mass_drift']:.3e}"
          + (f" err_l2={summary['final_err_l2']:.3e}" if p.exact is not None else ""))
    return EXIT_OK


def cmd_converge(cfg: RunConfig) -> int:
    case = build_case(cfg)
    report = convergence_study(case, cfg.degree, cfg.levels, m0=cfg.m0, coupling=cfg.coupling,
                               jitter=cfg.time_jitter, mesh_jitter=cfg.mesh_jitter,
                               k_factor=cfg.k_factor, seed=cfg.seed,
                               max_over_n=cfg.max_over_n)
    csv_path, json_path = cfg.output_paths("converge")
    header = ["level", "m", "h", "k", "N", "err_l2", "rate_l2", "err_h1", "rate_h1"]
    write_csv(csv_path, header, report.rows())
    ok = True
    if cfg.min_rate_l2 is not None and not report.rate_l2 >= cfg.min_rate_l2:
        ok = False
    if cfg.min_rate_h1 is not None and not report.rate_h1 >= cfg.min_rate_h1:
        ok = False
    write_json(json_path, {
        "command": "converge",
        "case": case.name,
        "levels": report.rows(),
        "rates_l2": report.rates_l2,
        "rates_h1": report.rates_h1,
        "rate_l2": report.rate_l2,
        "rate_h1": report.rate_h1,
        "passed": ok,
        "config": cfg.to_dict(),
    })
    print(f"converge {case.name} P{cfg.degree}: median L2 rate {report.rate_l2:.3f}, "
          f"H1 rate {report.rate_h1:.3f} -> {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_THRESHOLD


def _in_range(value: float, bounds) -> bool:
    lo, hi = bounds
    return lo <= value <= hi


def cmd_consistency(cfg: RunConfig) -> int:
    case = build_case(cfg)
    report = consistency_residuals(case, cfg.ks, t0=cfg.t0)
    csv_path, json_path = cfg.output_paths("consistency")
    write_csv(csv_path, ["k", "r_half", "r_full"], report.rows())
    vanishing = max(report.r_half_norms + report.r_full_norms) <= 1e-12
    ok = vanishing or (_in_range(report.fitted_order_half, cfg.half_order)
                       and _in_range(report.fitted_order_full, cfg.full_order))
    write_json(json_path, {
        "command": "consistency",
        "case": case.name,
        "rows": report.rows(),
        "fitted_order_half": None if vanishing else report.fitted_order_half,
        "fitted_order_full": None if vanishing else report.fitted_order_full,
        "residuals_vanish": vanishing,
        "passed": ok,
        "config": cfg.to_dict(),
    })
    if vanishing:
        print(f"consistency {case.name}: residuals vanish -> PASS")
    else:
        print(f"consistency {case.name}: half-step order {report.fitted_order_half:.3f}, "
              f"full-step order {report.fitted_order_full:.3f} -> {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_THRESHOLD


COMMANDS = {"run": cmd_run, "converge": cmd_converge, "consistency": cmd_consistency}

# flag name -> (config key, type)
OVERRIDES = {
    "case": ("case", str),
    "degree": ("degree", int),
    "m": ("m", int),
    "steps": ("time_steps", int),
    "levels": ("levels", int),
    "coupling": ("coupling", str),
    "jitter": ("time_jitter", float),
    "seed": ("seed", int),
    "out": ("out", str),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nlsfem", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("config", nargs="?", help="JSON configuration file")
        for flag, (_, typ) in OVERRIDES.items():
            sp.add_argument(f"--{flag}", type=typ)
        sp.add_argument("--timing", action="store_true",
                        help="add a wall_time column to the per-step CSV")
    return parser


def load_config(args) -> RunConfig:
    data = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
    for flag, (key, _) in OVERRIDES.items():
        value = getattr(args, flag)
        if value is not None:
            data[key] = value
    if args.timing:
        data["timing"] = True
    return RunConfig.from_dict(data)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
    except (ConfigError, UnknownCase) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](cfg)
    except (NlsError, np.linalg.LinAlgError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
