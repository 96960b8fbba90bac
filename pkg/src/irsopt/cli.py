"""Command-line front end: optimize designs, evaluate them, run sweeps.

Exit codes: 0 ok, 2 usage/config error, 3 design/config data mismatch,
4 numeric failure.  Every output file embeds the config digest and the seed
it was produced with, and reruns with the same seed are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np

from . import baselines, evaluate, report, ssca
from .channel import build_statistics
from .config import (ConfigError, SystemConfig, UraGeometry, hex_layout_distances,
                     load_config, path_gain)
from .beamform import DesignResult
from .evaluate import DimensionMismatchError

DESIGN_TAGS = ("er", "gp1", "gp2", "b1", "b2", "b3", "b4")
AXES = ("irs_size", "rician", "err_std", "dist_user", "dist_irs")


def _settings_from(args, seed: int) -> ssca.SscaSettings:
    return ssca.SscaSettings(
        tau=args.tau, samples_per_iter=args.samples_per_iter,
        max_iters=args.iters, seed=seed, init=args.init)


def build_design(tag: str, cfg: SystemConfig, settings: ssca.SscaSettings,
                 scenario: str = "ergodic") -> DesignResult:
    stats = build_statistics(cfg)
    if tag in ("er", "gp1", "gp2"):
        return ssca.optimize(tag, cfg, stats, settings)
    return baselines.build_baseline(tag, cfg, stats, settings, scenario)


def _write_trace_csv(trace: dict, path: str):
    cols = ["t", "c0", "c1_norm", "step_size", "movement"]
    with open(path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for i in range(len(trace["t"])):
            fh.write(",".join(repr(trace[c][i]) for c in cols) + "\n")


def cmd_optimize(args) -> int:
    cfg = load_config(args.cfg)
    settings = _settings_from(args, args.seed)
    design = build_design(args.design, cfg, settings, args.scenario)
    design.meta["config_digest"] = cfg.digest()
    design.meta.setdefault("seed", args.seed)
    os.makedirs(args.out, exist_ok=True)
    design_path = os.path.join(args.out, "design.json")
    design.save(design_path)
    print(f"wrote {design_path} (kind={design.kind}, digest={cfg.digest()})")
    if design.trace.get("t"):
        trace_path = os.path.join(args.out, "trace.csv")
        _write_trace_csv(design.trace, trace_path)
        print(f"wrote {trace_path}")
        if args.figures:
            png = os.path.join(args.out, "trace.png")
            report.render_trace(trace_path, png)
            print(f"wrote {png}")
    return 0


def cmd_evaluate(args) -> int:
    cfg = load_config(args.cfg)
    if args.slots < 2:
        raise ConfigError("--slots must be >= 2")
    try:
        design = DesignResult.load(args.design_file)
    except OSError as e:
        raise ConfigError(f"{args.design_file}: {e.strerror or e}") from None
    except (KeyError, json.JSONDecodeError) as e:
        raise ConfigError(f"{args.design_file}: malformed design file ({e})") from None
    stats = build_statistics(cfg)
    scenario = args.scenario
    if scenario == "auto":
        scenario = "both" if design.rate_kind != "none" else "ergodic"
    if scenario == "ergodic":
        rep = evaluate.eval_ergodic(design, cfg, stats, args.slots, args.seed,
                                    jobs=args.jobs)
    elif scenario == "goodput":
        rep = evaluate.eval_goodput(design, cfg, stats, args.slots,
                                    np.random.default_rng(args.seed), jobs=args.jobs)
        rep.seed = args.seed
    else:
        rep = evaluate.evaluate_design(design, cfg, stats, args.slots, args.seed,
                                       jobs=args.jobs)
    os.makedirs(args.out, exist_ok=True)
    report_path = os.path.join(args.out, "report.json")
    rep.save(report_path)
    evaluate.append_csv_row(rep, os.path.join(args.out, "reports.csv"))
    bits = [f"ergodic={rep.ergodic_rate:.4f}" if rep.ergodic_rate is not None else "",
            f"goodput={rep.avg_goodput:.4f}" if rep.avg_goodput is not None else "",
            f"success={rep.success_prob:.4f}" if rep.success_prob is not None else ""]
    print(f"wrote {report_path} " + " ".join(b for b in bits if b))
    return 0


# ---------------------------------------------------------------------------
# Sweeps.
# ---------------------------------------------------------------------------

_DEFAULT_EXPONENTS = {"direct": 3.7, "bs_irs": 2.0, "irs_user": 3.0}


def apply_axis(cfg: SystemConfig, axis: str, value, spec: dict) -> SystemConfig:
    """One sweep point: override the swept quantity on a base config."""
    if axis == "irs_size":
        n = int(value)
        return replace(cfg, irs_array=UraGeometry(n, n))
    if axis == "rician":
        ric = (float(value),) + cfg.rician_bs_irs[1:]
        return replace(cfg, rician_bs_irs=ric, rician_irs_user=float(value))
    if axis == "err_std":
        return replace(cfg, err_std_cascaded=float(value), err_std_direct=float(value))
    exps = {**_DEFAULT_EXPONENTS, **spec.get("exponents", {})}
    d_user = float(spec.get("d_user", 200.0 * math.sqrt(3.0)))
    d_irs = float(spec.get("d_irs", 300.0))
    if axis == "dist_user":
        dist = hex_layout_distances(float(value), d_irs, cfg.num_interferers)
        return replace(
            cfg,
            alpha_direct=tuple(path_gain(d, exps["direct"]) for d in dist["bs_user"]),
            alpha_irs_user=path_gain(dist["irs_user"], exps["irs_user"]))
    if axis == "dist_irs":
        dist = hex_layout_distances(d_user, float(value), cfg.num_interferers)
        return replace(
            cfg,
            alpha_bs_irs=tuple(path_gain(d, exps["bs_irs"]) for d in dist["bs_irs"]),
            alpha_irs_user=path_gain(dist["irs_user"], exps["irs_user"]))
    raise ConfigError(f"unknown sweep axis '{axis}'")


def load_sweep_spec(path: str) -> dict:
    try:
        with open(path) as fh:
            spec = json.load(fh)
    except OSError as e:
        raise ConfigError(f"{path}: {e.strerror or e}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}:{e.lineno}: invalid JSON ({e.msg})") from None
    for key in ("axis", "values", "designs", "scenario"):
        if key not in spec:
            raise ConfigError(f"{path}: sweep spec missing '{key}'")
    if spec["axis"] not in AXES:
        raise ConfigError(f"{path}: axis must be one of {AXES}")
    if not spec["values"]:
        raise ConfigError(f"{path}: 'values' must be non-empty")
    if spec["axis"] != "rician" and any(float(v) <= 0 for v in spec["values"]):
        raise ConfigError(f"{path}: '{spec['axis']}' values must be positive")
    if spec["scenario"] not in ("ergodic", "goodput"):
        raise ConfigError(f"{path}: scenario must be 'ergodic' or 'goodput'")
    bad = [d for d in spec["designs"] if d not in DESIGN_TAGS]
    if bad:
        raise ConfigError(f"{path}: unknown design tags {bad}")
    return spec


def _run_cell(payload: dict) -> dict:
    """One (axis value, design) sweep cell; safe to run in a worker process."""
    cfg = load_config(payload["cfg_path"])
    spec = payload["spec"]
    cfg = apply_axis(cfg, spec["axis"], payload["value"], spec)
    settings = ssca.SscaSettings(
        max_iters=int(spec.get("iters", 2000)),
        samples_per_iter=int(spec.get("samples_per_iter", 16)),
        tau=float(spec.get("tau", 1.0)),
        seed=payload["opt_seed"])
    scenario = spec["scenario"]
    out = {"axis_value": payload["value"], "design": payload["design"],
           "opt_seed": payload["opt_seed"], "eval_seed": payload["eval_seed"],
           "config_digest": cfg.digest()}
    try:
        design = build_design(payload["design"], cfg, settings, scenario)
        stats = build_statistics(cfg)
        slots = int(spec.get("slots", 10000))
        if scenario == "ergodic":
            rep = evaluate.eval_ergodic(design, cfg, stats, slots,
                                        payload["eval_seed"])
            out.update(value=rep.ergodic_rate, se=rep.ergodic_rate_se, status="ok")
        else:
            rep = evaluate.eval_goodput(design, cfg, stats, slots,
                                        np.random.default_rng(payload["eval_seed"]))
            out.update(value=rep.avg_goodput, se=rep.avg_goodput_se,
                       success_prob=rep.success_prob, status="ok")
    except Exception as e:  # cell failures are recorded, the sweep continues
        out.update(value=None, se=None, status=f"error: {e}")
    return out


def cmd_sweep(args) -> int:
    spec = load_sweep_spec(args.spec)
    cfg_path = args.cfg or spec.get("cfg")
    if not cfg_path:
        raise ConfigError("no config: pass --cfg or put 'cfg' in the sweep spec")
    load_config(cfg_path)  # fail early with a good message
    master_seed = args.seed if args.seed is not None else int(spec.get("seed", 0))

    cells = []
    idx = 0
    for value in spec["values"]:
        for design in spec["designs"]:
            cells.append({
                "cfg_path": cfg_path, "spec": spec, "value": value,
                "design": design,
                "opt_seed": master_seed * 1000003 + 2 * idx,
                "eval_seed": master_seed * 1000003 + 2 * idx + 1,
            })
            idx += 1

    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_run_cell, cells))
    else:
        results = [_run_cell(c) for c in cells]

    os.makedirs(args.out, exist_ok=True)
    scenario, axis = spec["scenario"], spec["axis"]
    base = f"{scenario}_{axis}"
    csv_path = os.path.join(args.out, base + ".csv")
    designs = spec["designs"]
    by_key = {(r["axis_value"], r["design"]): r for r in results}
    with open(csv_path, "w") as fh:
        header = ["axis_value"]
        for d in designs:
            header += [d, d + "_se"]
        fh.write(",".join(header) + "\n")
        for value in spec["values"]:
            row = [repr(float(value))]
            for d in designs:
                r = by_key[(value, d)]
                row.append("" if r["value"] is None else repr(r["value"]))
                row.append("" if r.get("se") is None else repr(r["se"]))
            fh.write(",".join(row) + "\n")
    manifest = {
        "spec": spec, "cfg": cfg_path, "master_seed": master_seed,
        "config_digest": load_config(cfg_path).digest(), "cells": results,
    }
    man_path = os.path.join(args.out, base + "_manifest.json")
    with open(man_path, "w") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=1)
        fh.write("\n")
    print(f"wrote {csv_path}")
    print(f"wrote {man_path}")
    if args.figures:
        png = os.path.join(args.out, base + ".png")
        report.render_sweep(csv_path, png, scenario, axis)
        print(f"wrote {png}")
    failures = [r for r in results if r["status"] != "ok"]
    if failures:
        print(f"{len(failures)} cell(s) failed; see manifest", file=sys.stderr)
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="irsopt",
                                description="Robust IRS phase-shift design toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    po = sub.add_parser("optimize", help="optimize a design and write design.json")
    po.add_argument("--cfg", required=True, help="system config file")
    po.add_argument("--design", required=True, choices=DESIGN_TAGS)
    po.add_argument("--seed", type=int, default=0)
    po.add_argument("--iters", type=int, default=2000)
    po.add_argument("--samples-per-iter", type=int, default=16)
    po.add_argument("--tau", type=float, default=1.0)
    po.add_argument("--init", choices=("warm", "random"), default="warm")
    po.add_argument("--scenario", choices=("ergodic", "goodput"), default="ergodic",
                    help="only used to pick the inner objective of baseline b3")
    po.add_argument("--out", default=".")
    po.add_argument("--figures", action=argparse.BooleanOptionalAction, default=True)
    po.set_defaults(func=cmd_optimize)

    pe = sub.add_parser("evaluate", help="Monte Carlo evaluation of a design file")
    pe.add_argument("design_file")
    pe.add_argument("--cfg", required=True)
    pe.add_argument("--slots", type=int, default=10000)
    pe.add_argument("--seed", type=int, default=0)
    pe.add_argument("--jobs", type=int, default=1)
    pe.add_argument("--scenario", choices=("auto", "ergodic", "goodput", "both"),
                    default="auto")
    pe.add_argument("--out", default=".")
    pe.set_defaults(func=cmd_evaluate)

    ps = sub.add_parser("sweep", help="axis sweep reproducing the figure shapes")
    ps.add_argument("--spec", required=True, help="JSON sweep specification")
    ps.add_argument("--cfg", default=None, help="overrides the spec's cfg")
    ps.add_argument("--seed", type=int, default=None)
    ps.add_argument("--jobs", type=int, default=1)
    ps.add_argument("--out", default=".")
    ps.add_argument("--figures", action=argparse.BooleanOptionalAction, default=True)
    ps.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except DimensionMismatchError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except (FloatingPointError, np.linalg.LinAlgError) as e:
        print(f"numeric failure: {e}", file=sys.stderr)
        return 4
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
