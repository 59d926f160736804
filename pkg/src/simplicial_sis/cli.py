"""Command-line entry point.

Exit codes: 0 success, 2 invalid input, 3 no endemic equilibrium to compute,
4 integration left the state space.  ``SIS_LOG`` sets the log level.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import math
import os
import sys

import numpy as np

from . import analysis, equilibrium, model, sim, sweep
from .analysis import Domain
from .errors import DomainEscape, OutOfDomain, PreconditionViolated, ValidationError

EXIT_INVALID = 2
EXIT_NO_EQUILIBRIUM = 3
EXIT_ESCAPE = 4


def _num(value) -> str:
    if value is None:
        return "none"
    value = float(value)
    if math.isnan(value):
        return "nan"
    return format(value, ".12g")


def _vec(values) -> str:
    return ",".join(_num(v) for v in values)


def _emit(report: dict, as_json: bool):
    if as_json:
        print(json.dumps(report, indent=2, sort_keys=False, default=str))
    else:
        for key, value in report.items():
            if isinstance(value, (list, tuple, np.ndarray)):
                value = _vec(value)
            elif isinstance(value, float) or value is None:
                value = _num(value)
            print(f"{key}: {value}")


def _load(args):
    m = model.load_model(args.model)
    if args.beta1 is not None or getattr(args, "beta2", None) is not None:
        if isinstance(m, model.SimplicialSis):
            m = m.with_rates(beta1=args.beta1, beta2=args.beta2)
        else:
            if args.beta2 is not None:
                raise ValidationError("--beta2 does not apply to a higher-order model file", "beta2")
            m = dataclasses.replace(m, beta1=args.beta1)
    return m


def _parse_x0(text: str, n: int) -> np.ndarray:
    presets = {"zeros": 0.0, "ones": 1.0, "half": 0.5}
    if text in presets:
        return np.full(n, presets[text])
    try:
        values = np.array([float(v) for v in text.split(",")])
    except ValueError as exc:
        raise ValidationError(f"--x0 must be zeros, ones, half or a comma list, not {text!r}", "x0") from exc
    if values.shape != (n,):
        raise ValidationError(f"--x0 needs {n} values", "x0")
    return values


def _config(args) -> sim.IntegratorConfig:
    return sim.IntegratorConfig(dt=args.dt, t_end=args.t_end,
                                record_stride=getattr(args, "stride", 1))


# ---------------------------------------------------------------- subcommands

def cmd_classify(args) -> int:
    m = _load(args)
    cls = analysis.classify(m)
    report = {
        "domain": cls.domain.value,
        "reproduction_number": cls.reproduction_number,
        "rho_df": cls.disease_free_lhs,
        "bistable_margin": cls.bistable_margin,
    }
    if isinstance(m, model.SimplicialSis):
        hat = None
        if cls.reproduction_number < 1.0:
            hat = analysis.beta2_bistable_threshold(m)
        report["beta2_hat"] = hat
    if args.empirical:
        report["empirical"] = sim.classify_empirical(m, _config(args)).value
    _emit(report, args.json)
    return 0


def cmd_scalar(args) -> int:
    diag = analysis.scalar_classify(model.ScalarSis(args.gamma, args.beta1, args.beta2))
    _emit({"domain": diag.domain.value, "v_c": diag.v_c,
           "nu_minus": diag.nu_minus, "nu_plus": diag.nu_plus}, args.json)
    return 0


def cmd_equilibrium(args) -> int:
    m = _load(args)
    if not isinstance(m, model.SimplicialSis):
        raise ValidationError("equilibrium needs a simplicial (order-2) model file", "orders")
    domain = analysis.classify_theory(m).domain
    if domain not in (Domain.BISTABLE, Domain.ENDEMIC):
        print(f"error: model is {domain.value}; no endemic equilibrium is certified", file=sys.stderr)
        return EXIT_NO_EQUILIBRIUM
    result, trace = equilibrium.endemic_iterate(m, domain, tol=args.tol, max_iter=args.max_iter,
                                                keep_trace=args.trace is not None)
    report = {
        "domain": domain.value,
        "xstar": result.xstar,
        "iterations": result.iterations,
        "residual": result.residual,
        "converged": str(result.converged).lower(),
        "stability": "none" if result.stability is None else result.stability.value,
    }
    if args.certify and result.converged:
        cert = equilibrium.contraction_certificate(m, result.xstar, seed=args.seed)
        report["certificate"] = "certified" if cert.certified else "not-certified"
        report["certificate_rate"] = cert.rate
        report["certificate_worst_measure"] = cert.worst_measure
    if args.trace:
        with open(args.trace, "w", encoding="utf-8", newline="") as fh:
            n = m.n
            fh.write(",".join(["k"] + [f"y{i + 1}" for i in range(n)] + ["step"]) + "\n")
            for k, y in enumerate(trace.iterates):
                step = "" if k == 0 else format(trace.residuals[k - 1], ".17g")
                fh.write(",".join([str(k)] + [format(v, ".17g") for v in y] + [step]) + "\n")
    _emit(report, args.json)
    return 0


def cmd_simulate(args) -> int:
    m = _load(args)
    x0 = _parse_x0(args.x0, m.n)
    traj = sim.integrate(m, x0, _config(args), monitor=args.monitor == "lyapunov")
    sim.write_trajectory_csv(traj, args.out or sys.stdout)
    final = traj.states[-1]
    print(f"final_sup_norm: {_num(np.max(np.abs(final)))}", file=sys.stderr)
    return 0


def cmd_sweep(args) -> int:
    m = _load(args)
    if not isinstance(m, model.SimplicialSis):
        raise ValidationError("sweep needs a simplicial (order-2) model file", "orders")
    grid = sweep.GridSpec.parse(args.grid) if args.grid else sweep.default_grid(m)
    d = sweep.sweep(m, grid, _config(args), mode=args.mode, workers=args.workers)
    if args.out:
        sweep.export_csv(d, args.out)
    if args.svg:
        sweep.export_svg(d, args.svg)
    counts = {}
    for c in d.cells:
        key = c.shade_domain.value if c.shade_domain is not None else "none"
        counts[key] = counts.get(key, 0) + 1
    _emit({"cells": len(d.cells), **{f"count_{k}": v for k, v in sorted(counts.items())},
           "green_beta1": d.green}, args.json)
    return 0


def cmd_gen(args) -> int:
    if args.n < 2:
        raise ValidationError("--n must be at least 2", "n")
    zero_b = [int(i) - 1 for i in args.zero_b.split(",")] if args.zero_b else []
    if any(not 0 <= i < args.n for i in zero_b):
        raise ValidationError("--zero-b indices must lie in 1..n", "zero_b")
    m = model.random_binary_model(args.n, args.density, args.seed, gamma=args.gamma,
                                  beta1=args.beta1, beta2=args.beta2 if args.beta2 is not None else 1.0,
                                  zero_b=zero_b)
    if args.out:
        model.dump_model(m, args.out)
    else:
        json.dump(model.model_to_dict(m), sys.stdout, indent=2)
        sys.stdout.write("\n")
    return 0


# ---------------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="simplicial-sis",
                                description="Simplicial and higher-order SIS epidemic models.")
    sub = p.add_subparsers(dest="command", required=True)

    def model_args(sp, required=True):
        sp.add_argument("--model", required=required, help="model JSON file")
        sp.add_argument("--beta1", type=float, help="override beta1")
        sp.add_argument("--beta2", type=float, help="override beta2")
        sp.add_argument("--json", action="store_true", help="print a JSON document instead of key: value lines")

    def integ_args(sp, t_end=500.0):
        sp.add_argument("--dt", type=float, default=0.01)
        sp.add_argument("--t-end", type=float, default=t_end)

    sp = sub.add_parser("classify", help="theory classification of a model file")
    model_args(sp)
    sp.add_argument("--empirical", action="store_true", help="also classify from simulations")
    integ_args(sp)
    sp.set_defaults(func=cmd_classify)

    sp = sub.add_parser("scalar", help="scalar model diagnostics")
    sp.add_argument("--gamma", type=float, required=True)
    sp.add_argument("--beta1", type=float, required=True)
    sp.add_argument("--beta2", type=float, required=True)
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=cmd_scalar)

    sp = sub.add_parser("equilibrium", help="endemic equilibrium by monotone iteration")
    model_args(sp)
    sp.add_argument("--tol", type=float, default=equilibrium.DEFAULT_TOL)
    sp.add_argument("--max-iter", type=int, default=equilibrium.DEFAULT_MAX_ITER)
    sp.add_argument("--trace", help="write the iteration trace CSV here")
    sp.add_argument("--certify", action="store_true", help="run the sampled contraction certificate")
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_equilibrium)

    sp = sub.add_parser("simulate", help="integrate one trajectory to CSV")
    model_args(sp)
    sp.add_argument("--x0", default="ones", help="zeros | ones | half | comma-separated values")
    integ_args(sp, t_end=200.0)
    sp.add_argument("--stride", type=int, default=1, help="record every k-th step")
    sp.add_argument("--monitor", choices=["lyapunov"], help="append the Lyapunov value V")
    sp.add_argument("--out", help="CSV path (default: stdout)")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("sweep", help="(beta1, beta2) epidemic diagram")
    model_args(sp)
    sp.add_argument("--grid", help="b1lo:b1hi:n1,b2lo:b2hi:n2 (default: 60x60 window around both thresholds)")
    sp.add_argument("--mode", choices=list(sweep.MODES), default="theory")
    sp.add_argument("--workers", type=int, default=1)
    integ_args(sp)
    sp.add_argument("--out", help="diagram CSV path")
    sp.add_argument("--svg", help="diagram SVG path")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("gen", help="seeded random binary model")
    sp.add_argument("--n", type=int, default=5)
    sp.add_argument("--density", type=float, default=0.5)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--gamma", type=float, default=2.0)
    sp.add_argument("--beta1", type=float)
    sp.add_argument("--beta2", type=float)
    sp.add_argument("--zero-b", help="comma list of groups (1-based) whose B_i is zero")
    sp.add_argument("--out", help="model JSON path (default: stdout)")
    sp.set_defaults(func=cmd_gen)
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("SIS_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, OutOfDomain, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except PreconditionViolated as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_EQUILIBRIUM
    except DomainEscape as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ESCAPE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
