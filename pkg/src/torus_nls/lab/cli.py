"""Command-line interface.

    torus-nls <scenario> --config <path> [--out DIR] [--seed N] [--threads N]
    torus-nls profiles <make|extinction|kernel|extract> --config <path> ...

Exit codes: 0 all declared properties pass, 1 property failure (report still
written), 2 config error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np
import scipy.fft as _fft

from ..field import load_field, save_field
from ..invariants import PreconditionError, QuadratureError
from ..profiles import (
    PROFILE_CATALOG,
    extract_bubbles,
    kernel_sup_bound_check,
    make_profile_on_torus,
)
from .config import SCENARIOS, ConfigError, load_config
from .report import write_manifest, write_run_info
from .scenarios import NumericFailure, build_constants, run_scenario

EXIT_OK = 0
EXIT_PROPERTY_FAILURE = 1
EXIT_CONFIG_ERROR = 2
EXIT_NUMERIC_FAILURE = 3


def _add_common(p):
    p.add_argument("--config", required=True, help="experiment config file")
    p.add_argument("--out", default=None, help="output directory (default from config)")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--threads", type=int, default=None, help="worker threads for transforms")
    fig = p.add_mutually_exclusive_group()
    fig.add_argument("--figures", dest="figures", action="store_true", default=None)
    fig.add_argument("--no-figures", dest="figures", action="store_false")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="torus-nls",
        description="pseudospectral lab for the energy-critical cubic NLS on 4D tori",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    alias = {"ground_state": ["ground-state"], "profile_suite": ["profile-suite"],
             "blowup_probe": ["blowup-probe"]}
    for name in SCENARIOS:
        p = sub.add_parser(name, aliases=alias.get(name, []),
                           help=f"run the {name} scenario")
        _add_common(p)
        p.set_defaults(command=name)

    prof = sub.add_parser("profiles", help="profile construction and analysis verbs")
    verbs = prof.add_subparsers(dest="verb", required=True)
    for verb in ("make", "extinction", "kernel", "extract"):
        v = verbs.add_parser(verb)
        _add_common(v)
    return parser


def _load(args):
    overrides = {}
    if args.seed is not None:
        overrides["run.seed"] = int(args.seed)
    if args.out is not None:
        overrides["run.out"] = args.out
    if args.threads is not None:
        overrides["run.threads"] = int(args.threads)
    if args.figures is not None:
        overrides["run.figures"] = bool(args.figures)
    cfg = load_config(args.config, overrides)
    return cfg


def _run_scenario_command(args) -> int:
    cfg = _load(args)
    out_dir = cfg.out_dir
    os.makedirs(out_dir, exist_ok=True)
    t0 = time.perf_counter()
    with _fft.set_workers(max(1, int(cfg["run"]["threads"]))):
        report = run_scenario(cfg, out_dir)
    report.wall_clock_s = time.perf_counter() - t0
    report.save_json(os.path.join(out_dir, "report.json"))
    files = sorted(
        f for f in os.listdir(out_dir) if f not in ("manifest.json", "run_info.txt")
    )
    if cfg["run"]["figures"]:
        from . import figures

        for path in figures.render(report, out_dir):
            name = os.path.basename(path)
            if name not in files:
                files.append(name)
    write_manifest(out_dir, {
        "scenario": cfg.scenario,
        "seed": cfg.seed,
        "files": sorted(files),
        "passed": report.passed,
    })
    write_run_info(out_dir, report)
    for name, ok in sorted(report.flags.items()):
        print(f"[{'PASS' if ok else 'FAIL'}] {cfg.scenario}: {name}")
    if not report.flags:
        print(f"[done] {cfg.scenario}: no pass/fail properties declared")
    return EXIT_OK if report.passed else EXIT_PROPERTY_FAILURE


def _profiles_make(cfg, out_dir) -> int:
    geometry = cfg.geometry()
    pm = cfg["profile_make"]
    phi = PROFILE_CATALOG[pm["profile"]]()
    field = make_profile_on_torus(phi, float(pm["scale_n"]), geometry,
                                  center=tuple(pm["center"]))
    field.samples *= float(pm["amplitude"])
    path = os.path.join(out_dir, f"profile_{pm['profile']}_N{pm['scale_n']:g}.tnls")
    save_field(field, path)
    print(f"wrote {path}")
    return EXIT_OK


def _profiles_extinction(cfg, out_dir) -> int:
    from .scenarios import run_extinction_scenario

    report = run_extinction_scenario(cfg, out_dir)
    report.save_json(os.path.join(out_dir, "report.json"))
    for name, ok in sorted(report.flags.items()):
        print(f"[{'PASS' if ok else 'FAIL'}] extinction: {name}")
    return EXIT_OK if report.passed else EXIT_PROPERTY_FAILURE


def _profiles_kernel(cfg, out_dir) -> int:
    kc = cfg["kernel"]
    m_values = [int(m) for m in kc["m_values"]]
    if kc["s_rule"] == "equal_m":
        s_values = [float(m) for m in m_values]
    else:
        s_values = [float(s) for s in (kc["s_values"] or [])]
        if len(s_values) != len(m_values):
            raise ConfigError("[kernel] s_values must match m_values")
    reports = []
    for M, S in zip(m_values, s_values):
        rep = kernel_sup_bound_check(M, S, n_times=int(kc["n_times"]),
                                     refine=bool(kc["refine"]))
        reports.append(rep)
        print(f"M={M} S={S:g}: sup={rep['sup']:.6g} C_M={rep['C_M']:.6g} "
              f"origin={rep['origin_value']:.6g}")
    cs = [r["C_M"] for r in reports]
    agreement = max(cs) / min(cs) if min(cs) > 0 else float("inf")
    doc = {"reports": reports, "C_M_agreement_factor": agreement,
           "agreement_tolerance": float(kc["agreement_factor"])}
    with open(os.path.join(out_dir, "kernel_report.json"), "w") as fh:
        from .report import _plain

        json.dump(_plain(doc), fh, indent=2, sort_keys=True)
        fh.write("\n")
    ok = agreement <= float(kc["agreement_factor"])
    print(f"[{'PASS' if ok else 'FAIL'}] kernel: C_M agreement {agreement:.3f}")
    return EXIT_OK if ok else EXIT_PROPERTY_FAILURE


def _profiles_extract(cfg, out_dir) -> int:
    xc = cfg["extract"]
    if xc["input"]:
        field = load_field(xc["input"])
    else:
        geometry = cfg.geometry()
        constants = build_constants(cfg, geometry)
        from .data import build_initial_data

        field = build_initial_data(cfg["initial_data"], geometry, cfg.seed, constants)
    result = extract_bubbles(
        field,
        max_profiles=int(xc["max_profiles"]),
        z_tolerance=float(xc["z_tolerance"]),
        search_times=[float(t) for t in xc["search_times"]],
    )
    manifest = {"profiles": [], "remainder_z": result["remainder_z"],
                "complete": result["complete"],
                "residuals": {k: v for k, v in result["residuals"].items()}}
    from ..field import inverse_transform

    for i, p in enumerate(result["profiles"]):
        path = os.path.join(out_dir, f"bubble_{i:02d}.tnls")
        save_field(inverse_transform(p["field"]), path)
        manifest["profiles"].append(
            {"file": os.path.basename(path), "N": p["N"], "t_star": p["t_star"],
             "x_star": list(p["x_star"])}
        )
    save_field(inverse_transform(result["remainder"]), os.path.join(out_dir, "remainder.tnls"))
    with open(os.path.join(out_dir, "extract_manifest.json"), "w") as fh:
        from .report import _plain

        json.dump(_plain(manifest), fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"extracted {len(result['profiles'])} profiles; "
          f"remainder Z = {result['remainder_z']:.4g}; complete = {result['complete']}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "profiles":
            cfg = _load(args)
            out_dir = cfg.out_dir
            os.makedirs(out_dir, exist_ok=True)
            verb = {
                "make": _profiles_make,
                "extinction": _profiles_extinction,
                "kernel": _profiles_kernel,
                "extract": _profiles_extract,
            }[args.verb]
            return verb(cfg, out_dir)
        return _run_scenario_command(args)
    except (ConfigError, PreconditionError) as exc:
        # PreconditionError = the configured datum violates the scenario's
        # analytical hypotheses, i.e. the experiment as configured is ill-posed
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except (NumericFailure, QuadratureError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC_FAILURE
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR


if __name__ == "__main__":
    sys.exit(main())
