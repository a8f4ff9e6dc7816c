"""Command-line front end.

    gjntail analyze --config net.json [--out DIR]
    gjntail fluid   --config net.json [--out DIR]
    gjntail tail    --config net.json [--seed N] [--cycles N] [--workers N] [--out DIR]
    gjntail psbj    --config net.json [--seed N] [--cycles N] [--workers N] [--out DIR]
    gjntail verify  --config net.json [--seed N] [--cycles N] [--out DIR]

Seed and worker count resolve flag > environment (GJNTAIL_SEED,
GJNTAIL_WORKERS) > config > default. Exit codes: 0 success, 1 a verify
suite found a violation, 2 the config file is invalid, 3 the model itself
refuses (instability, no usable drain), 4 not enough statistics at the
requested size. With --out, artifacts are JSON plus one tidy CSV per
table; rerunning with the same config and seed reproduces them byte for
byte, manifest.json (which records the runtime) aside.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from importlib.metadata import PackageNotFoundError, version as _pkg_version

import numpy as np

from . import asymptotics, fluid, verify as verify_mod
from .config import ConfigError, RunConfig, load_config
from .distributions import NoCommonReferenceError, hta_constants
from .fluid import FluidInstability
from .network import validate, visit_stats

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_BAD_CONFIG = 2
EXIT_MODEL = 3
EXIT_INSUFFICIENT = 4


def _version() -> str:
    try:
        return _pkg_version("gjntail")
    except PackageNotFoundError:
        return "unknown"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return None if np.isnan(v) else v
    return obj


def _write_json(out: str, name: str, payload: dict) -> None:
    with open(os.path.join(out, name), "w") as fh:
        json.dump(_jsonable(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_csv(out: str, name: str, header: list[str], rows) -> None:
    with open(os.path.join(out, name), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow(["" if v is None or (isinstance(v, float) and np.isnan(v))
                        else (repr(float(v)) if isinstance(v, (float, np.floating))
                              else v) for v in row])


def _resolve(args, cfg: RunConfig):
    seed = args.seed
    if seed is None and os.environ.get("GJNTAIL_SEED"):
        seed = int(os.environ["GJNTAIL_SEED"])
    if seed is None:
        seed = cfg.seed
    workers = getattr(args, "workers", None)
    if workers is None and os.environ.get("GJNTAIL_WORKERS"):
        workers = int(os.environ["GJNTAIL_WORKERS"])
    if workers is None:
        workers = cfg.workers
    cycles = getattr(args, "cycles", None) or cfg.cycles
    return seed, workers, cycles


def _cmd_analyze(args, cfg: RunConfig, out: str | None) -> int:
    report = validate(cfg.spec, allow_bounded_arrivals=args.allow_bounded_arrivals)
    payload = {
        "ok": report.ok,
        "problems": list(report.problems),
        "warnings": list(report.warnings),
        "stations": cfg.spec.n_stations,
        "mean_interarrival": cfg.spec.a,
        "mean_services": cfg.spec.b,
    }
    if report.stats is not None:
        payload.update({
            "expected_visits": report.stats.e_n,
            "first_visit_prob": report.stats.beta,
            "utilisation": report.stats.rho,
            "stability_margin": report.stats.margin,
            "unreachable": report.stats.unreachable,
        })
    if report.ok:
        coeff = fluid.all_coefficients(cfg.spec)
        payload["tau"] = coeff.tau
        payload["u"] = coeff.u
        payload["fluid_skipped"] = {str(k): v for k, v in coeff.skipped.items()}
        ref = cfg.reference or asymptotics._auto_reference(cfg.spec)
        if ref is None:
            payload["tail_constants"] = None
            payload["tail_note"] = "no power-law service law"
        else:
            try:
                prof = hta_constants(cfg.spec.services, ref)
                payload["tail_constants"] = prof.c
                payload["tail_reference"] = ref.as_config()
            except NoCommonReferenceError as exc:
                payload["tail_constants"] = None
                payload["tail_note"] = str(exc)
    for line in report.problems:
        print(f"problem: {line}")
    for line in report.warnings:
        print(f"warning: {line}")
    if report.ok:
        print(f"stable, margin {payload['stability_margin']:.6g}; "
              f"u = {np.array2string(np.asarray(payload['u']), precision=6)}")
    if out:
        _write_json(out, "analysis.json", payload)
        if report.stats is not None:
            _write_csv(out, "stations.csv",
                       ["station", "mean_service", "expected_visits",
                        "first_visit_prob", "utilisation", "u"],
                       [(k, cfg.spec.b[k], report.stats.e_n[k], report.stats.beta[k],
                         report.stats.rho[k],
                         payload.get("u", [None] * cfg.spec.n_stations)[k])
                        for k in range(cfg.spec.n_stations)])
    return EXIT_OK if report.ok else EXIT_MODEL


def _cmd_fluid(args, cfg: RunConfig, out: str | None) -> int:
    spec = cfg.spec
    rows = []
    payload = {"stations": {}}
    for k in range(spec.n_stations):
        try:
            tl = fluid.drain_timeline(spec, k)
        except ValueError as exc:
            payload["stations"][str(k)] = {"skipped": str(exc)}
            continue
        payload["stations"][str(k)] = {
            "tau": tl.tau, "u": tl.u, "t_frozen": tl.t_frozen,
            "t_drain": tl.t_drain_k, "t_settle": tl.t_settle,
            "frozen_rate": tl.frozen_rate,
        }
        for si, seg in enumerate(tl.segments):
            for j in range(spec.n_stations):
                rows.append((k, si, seg.t0, seg.t1, j, seg.levels[j], seg.slopes[j]))
        print(f"station {k}: tau = {tl.tau:.9g}, u = {tl.u:.9g}")
    if out:
        _write_json(out, "fluid.json", payload)
        _write_csv(out, "fluid_timeline.csv",
                   ["drained_station", "segment", "t0", "t1", "station",
                    "level_t0", "slope"], rows)
    return EXIT_OK


def _cmd_tail(args, cfg: RunConfig, out: str | None) -> int:
    seed, workers, cycles = _resolve(args, cfg)
    rep = asymptotics.estimate_tail(
        cfg.spec, cycles, seed=seed, xs=cfg.xs, reference=cfg.reference,
        workers=workers, allow_bounded_arrivals=args.allow_bounded_arrivals)
    try:
        slope = asymptotics.tail_slope(rep.xs, rep.p_hat, rep.exceed)
    except asymptotics.InsufficientExceedances:
        slope = None
    payload = {
        "seed": seed, "cycles": cycles, "n_overflow": rep.n_overflow,
        "e_nu": rep.e_nu, "e_nu_se": rep.e_nu_se, "slope_top_decade": slope,
        "theory_note": rep.theory_note,
        "reference": None if rep.reference is None else rep.reference.as_config(),
        "tail_constants": rep.c, "u": rep.u, "expected_visits": rep.e_n,
    }
    n = rep.xs.size
    none = [None] * n
    cols = [rep.xs, rep.exceed, rep.p_hat, rep.ci_lo, rep.ci_hi,
            rep.theory if rep.theory is not None else none,
            rep.ratio if rep.ratio is not None else none,
            rep.ratio_lo if rep.ratio_lo is not None else none,
            rep.ratio_hi if rep.ratio_hi is not None else none]
    if rep.ratio is not None:
        mid = rep.ratio[np.isfinite(rep.ratio)]
        print(f"E nu = {rep.e_nu:.6g} (se {rep.e_nu_se:.2g}); "
              f"ratio over grid: {mid.min():.3g} .. {mid.max():.3g}"
              if mid.size else f"E nu = {rep.e_nu:.6g}; no exceedances on grid")
    else:
        print(f"E nu = {rep.e_nu:.6g}; prediction absent: {rep.theory_note}")
    if slope is not None:
        print(f"top-decade slope {slope:.4f}")
    if out:
        _write_json(out, "tail.json", payload)
        _write_csv(out, "tail.csv",
                   ["x", "exceed", "p_hat", "ci_lo", "ci_hi", "predicted",
                    "ratio", "ratio_lo", "ratio_hi"],
                   zip(*cols))
    return EXIT_OK


def _cmd_psbj(args, cfg: RunConfig, out: str | None) -> int:
    if cfg.x is None:
        print("psbj needs a threshold: set \"x\" in the config", file=sys.stderr)
        return EXIT_BAD_CONFIG
    seed, workers, cycles = _resolve(args, cfg)
    rep = asymptotics.psbj_diagnostic(cfg.spec, cfg.x, cycles, seed=seed,
                                      workers=workers)
    payload = {
        "x": rep.x, "seed": seed, "cycles": rep.n_cycles, "n_exceed": rep.n_exceed,
        "eps": list(rep.eps), "single_jump_fraction": rep.single_frac,
        "double_jump_fraction": rep.double_frac, "c_u": rep.c_u, "L": rep.L,
        "u": rep.u,
    }
    for e, f in zip(rep.eps, rep.single_frac):
        print(f"single jump >= {e:g} * u * x: {f:.4f}")
    print(f"double jump (two services > u * x): {rep.double_frac:.4f} "
          f"over {rep.n_exceed} exceedances")
    if out:
        _write_json(out, "psbj.json", payload)
        _write_csv(out, "psbj.csv", ["eps", "single_jump_fraction"],
                   zip(rep.eps, rep.single_frac))
    return EXIT_OK


def _cmd_verify(args, cfg: RunConfig, out: str | None) -> int:
    seed, _, _ = _resolve(args, cfg)
    n = args.cycles   # config "cycles" is sized for tail runs, not replays
    rep = verify_mod.run_all(cfg.spec, seed,
                             n_perturb=n or 100, n_bound_cycles=n or 100)
    for line in rep.lines():
        print(line)
    if out:
        _write_json(out, "verify.json", {
            "ok": rep.ok,
            "suites": [{"name": s.name, "n_trials": s.n_trials, "n_pass": s.n_pass,
                        "failures": list(s.failures)} for s in rep.suites],
        })
    return EXIT_OK if rep.ok else EXIT_VERIFY_FAILED


_COMMANDS = {
    "analyze": _cmd_analyze,
    "fluid": _cmd_fluid,
    "tail": _cmd_tail,
    "psbj": _cmd_psbj,
    "verify": _cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gjntail",
                                description="busy-period tail analysis for "
                                            "open queueing networks")
    sub = p.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="JSON network config")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--cycles", type=int, default=None)
        sp.add_argument("--workers", type=int, default=None)
        sp.add_argument("--out", default=None, help="directory for artifacts")
        sp.add_argument("--allow-bounded-arrivals", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    t0 = time.monotonic()
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        for line in exc.problems:
            print(f"config: {line}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    except OSError as exc:
        print(f"config: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG

    out = args.out
    if out:
        os.makedirs(out, exist_ok=True)

    if args.command not in ("analyze",):
        report = validate(cfg.spec,
                          allow_bounded_arrivals=args.allow_bounded_arrivals)
        if not report.ok:
            for line in report.problems:
                print(f"model: {line}", file=sys.stderr)
            return EXIT_MODEL

    try:
        code = _COMMANDS[args.command](args, cfg, out)
    except asymptotics.InsufficientExceedances as exc:
        print(f"insufficient statistics: {exc}", file=sys.stderr)
        return EXIT_INSUFFICIENT
    except FluidInstability as exc:
        print(f"model: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except RuntimeError as exc:
        print(f"model: {exc}", file=sys.stderr)
        return EXIT_MODEL

    if out:
        seed, workers, cycles = _resolve(args, cfg)
        _write_json(out, "manifest.json", {
            "command": args.command,
            "config_sha256": cfg.sha256,
            "seed": seed,
            "version": _version(),
            "runtime_s": round(time.monotonic() - t0, 3),
        })
    return code


if __name__ == "__main__":
    sys.exit(main())
