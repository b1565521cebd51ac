"""Command-line interface.

Subcommands: norms, lemma-cos, cstar, project, simulate, oscillate,
stability, nonosc, bilinear, dump-config.  Reports are written as CSV plus a
JSON sidecar; one line per headline quantity goes to stdout.  Exit codes:
0 success, 1 assertion failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import math
import sys

from .spectral import make_grid, set_fft_workers, leray_project, SpectralField
from .littlewood_paley import INF, BesovIndex, besov_norm, get_partition, \
    low_block_sup, weak_lebesgue_norm
from .forcing import schedule_forcing, segment_from_config, segment_config, \
    _SEGMENT_KEYS
from .solver import SolverConfig, solve_mild, solve_timestepper
from .experiments import (ExperimentConfig, bilinear_ratio_suite,
                          cos_lemma_report, cstar_report, run_nonosc,
                          run_oscillation, run_stability)
from .reports import Report, export_report, config_hash
from .config import (ConfigError, apply_overrides, dump_config_text,
                     load_config, save_config)
from .fieldio import load_field, save_field


def _add_common(sub):
    sub.add_argument("--config", help="key=value config file")
    sub.add_argument("--out", default="runs/latest", help="output directory")
    sub.add_argument("--seed", type=int, default=None)
    sub.add_argument("--threads", type=int, default=1)
    sub.add_argument("--grid", type=int, default=None,
                     help="override points per axis")
    sub.add_argument("--override", action="append", default=[],
                     metavar="KEY=VALUE", help="config override (repeatable)")


def _load_cfg(args, defaults: dict | None = None) -> dict:
    cfg = dict(defaults or {})
    if args.config:
        cfg.update(load_config(args.config))
    cfg = apply_overrides(cfg, args.override)
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.grid is not None:
        cfg["points"] = args.grid
    return cfg


def _finish(report: Report, outdir: str) -> int:
    report.config["config_hash"] = config_hash(
        {k: v for k, v in report.config.items() if k != "config_hash"})
    paths = export_report(report, outdir)
    for line in report.summary_lines():
        print(line)
    print(f"{report.name}: report written to {paths['json']}")
    return 0 if report.passed else 1


def _experiment_cfg(args, regime: str, extra: dict | None = None) -> ExperimentConfig:
    cfg = _load_cfg(args, {"regime": regime, **(extra or {})})
    return ExperimentConfig.from_dict(cfg)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="nsbesov",
        description="Pseudo-spectral Navier-Stokes laboratory with Besov-norm "
                    "diagnostics")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("norms", help="Besov / weak-Lebesgue norms of a field snapshot")
    _add_common(p)
    p.add_argument("--field", required=True, help="field snapshot file")
    p.add_argument("--s", type=float, default=-1.0)
    p.add_argument("--p", default="inf")
    p.add_argument("--q", default="inf")

    p = subs.add_parser("lemma-cos", help="modulated-bump norm scaling fit")
    _add_common(p)
    p.add_argument("--s", type=float, default=None, help="single (s,p) fit")
    p.add_argument("--p", default=None)

    p = subs.add_parser("cstar", help="the second-iteration constant and its stability")
    _add_common(p)

    p = subs.add_parser("project", help="Helmholtz-project a field snapshot")
    _add_common(p)
    p.add_argument("--field", required=True)
    p.add_argument("--output", required=True)

    p = subs.add_parser("simulate", help="run a solver on a configured forcing")
    _add_common(p)
    p.add_argument("--solver", choices=("mild", "stepper"), default="stepper")

    for name in ("oscillate", "stability", "nonosc", "bilinear"):
        p = subs.add_parser(name)
        _add_common(p)

    p = subs.add_parser("dump-config", help="echo a config in canonical form")
    _add_common(p)

    args = parser.parse_args(argv)
    set_fft_workers(args.threads)

    try:
        return _dispatch(args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _parse_exponent(tok) -> float:
    if tok is None:
        return INF
    if isinstance(tok, (int, float)):
        return float(tok)
    return INF if tok == "inf" else float(tok)


def _dispatch(args) -> int:
    cmd = args.command
    if cmd == "norms":
        fld = load_field(args.field)
        idx = BesovIndex(args.s, _parse_exponent(args.p), _parse_exponent(args.q))
        ns = besov_norm(fld, idx)
        rep = Report("norms", {"field": args.field, "s": idx.s,
                               "p": str(idx.p), "q": str(idx.q)})
        rep.scalars["besov_norm"] = ns.value
        rep.scalars["low_block_sup"] = low_block_sup(fld)
        rep.scalars["weak_lebesgue_n"] = weak_lebesgue_norm(fld, float(fld.grid.dim))
        rep.add_profile("besov_norm", ns)
        from .reports import norm_table
        rep.tables["norms"] = norm_table({"besov_norm": ns})
        return _finish(rep, args.out)

    if cmd == "lemma-cos":
        cfg = _experiment_cfg(args, "lemmas", {"dim": 2, "points": 512})
        if args.s is not None:
            from .experiments import check_cos_lemma
            grid = cfg.grid()
            slope, det = check_cos_lemma(grid, args.s, _parse_exponent(args.p),
                                         (16.0, 32.0, 64.0))
            print(f"lemma_cos: fitted slope = {slope:.6g} (s = {args.s:g})")
            print(f"lemma_cos: block counts = {det['block_counts']}")
            return 0 if abs(slope - args.s) <= 0.1 else 1
        return _finish(cos_lemma_report(cfg), args.out)

    if cmd == "cstar":
        cfg = _experiment_cfg(args, "lemmas", {"dim": 3, "points": 64})
        return _finish(cstar_report(cfg), args.out)

    if cmd == "project":
        fld = load_field(args.field)
        save_field(leray_project(fld), args.output)
        print(f"project: wrote {args.output}")
        return 0

    if cmd == "simulate":
        cfg = _load_cfg(args)
        grid_keys = {"dim", "points", "length"}
        solver_keys = {"dt", "horizon", "sample_stride", "picard_tol",
                       "picard_max_iter", "seed", "norm_s", "norm_p", "norm_q"}
        seg_cfg = {k: v for k, v in cfg.items()
                   if k not in grid_keys | solver_keys}
        grid = make_grid(int(cfg.get("dim", 3)), cfg.get("points", 64),
                         float(cfg.get("length", 4 * math.pi)))
        seg = segment_from_config(grid, seg_cfg)
        sched = schedule_forcing([seg])
        scfg = SolverConfig(dt=float(cfg.get("dt", 0.02)),
                            horizon=float(cfg.get("horizon", 5.0)),
                            sample_stride=int(cfg.get("sample_stride", 25)))
        solver = solve_mild if args.solver == "mild" else solve_timestepper
        from .spectral import zero_field
        traj = solver(zero_field(grid), sched, scfg)
        idx = BesovIndex(float(cfg.get("norm_s", grid.dim / 2.0 - 1.0)),
                         _parse_exponent(cfg.get("norm_p", 2.0)),
                         _parse_exponent(cfg.get("norm_q", 2.0)))
        part = get_partition(grid)
        rows = []
        for t, f in zip(traj.times, traj.fields):
            row = [float(t), besov_norm(f, idx, part).value,
                   low_block_sup(f, partition=part)]
            if grid.dim == 3:
                row.append(weak_lebesgue_norm(f, 3.0))
            rows.append(tuple(row))
        rep = Report("simulate", cfg)
        header = ["t", "besov_norm", "low_block_sup"] + \
            (["weak_lebesgue_3"] if grid.dim == 3 else [])
        rep.tables["trajectory"] = (header, rows)
        rep.scalars["terminal_norm"] = rows[-1][1]
        import os
        os.makedirs(args.out, exist_ok=True)
        save_field(traj.final(), os.path.join(args.out, "final_state.nsb"))
        return _finish(rep, args.out)

    if cmd == "oscillate":
        cfg = _experiment_cfg(args, "oscillation_2d",
                              {"dim": 2, "points": 256, "length": 3.2 * math.pi})
        return _finish(run_oscillation(cfg), args.out)

    if cmd == "stability":
        cfg = _experiment_cfg(args, "stability",
                              {"dim": 3, "points": 48, "p": 2.0, "q": 2.0,
                               "beta": 6.0, "horizon": 22.0})
        return _finish(run_stability(cfg), args.out)

    if cmd == "nonosc":
        cfg = _experiment_cfg(args, "nonosc",
                              {"dim": 3, "points": [512, 48, 48],
                               "horizon": 80.0, "p": 6.0})
        return _finish(run_nonosc(cfg), args.out)

    if cmd == "bilinear":
        cfg = _experiment_cfg(args, "lemmas")
        return _finish(bilinear_ratio_suite(cfg), args.out)

    if cmd == "dump-config":
        cfg = _load_cfg(args)
        if "kind" in cfg:
            # round-trip the forcing part through its constructor
            grid_keys = {"dim", "points", "length"}
            grid = make_grid(int(cfg.get("dim", 3)), cfg.get("points", 64),
                             float(cfg.get("length", 4 * math.pi)))
            seg_cfg = {k: v for k, v in cfg.items()
                       if k in _SEGMENT_KEYS.get(cfg["kind"], ())}
            seg = segment_from_config(grid, seg_cfg)
            canonical = dict(cfg)
            canonical.update(segment_config(seg))
            sys.stdout.write(dump_config_text(canonical))
        else:
            sys.stdout.write(dump_config_text(cfg))
        return 0

    raise ConfigError(f"unknown command {cmd!r}")


if __name__ == "__main__":
    sys.exit(main())
