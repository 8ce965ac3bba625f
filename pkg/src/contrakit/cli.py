"""Command-line front end.

Subcommands: ``measure`` (matrix measures from a CSV matrix),
``simulate`` (trajectory CSV), ``check`` (property verdicts as JSON,
exit code 0 certified / 1 falsified / 2 error), and ``reproduce``
(scenario report bundles with figures).

The environment variable CONTRAKIT_THREADS caps the worker count used
for region measure bounds; results are identical for any setting.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import report, scenarios
from .errors import ContrakitError, SchemaError
from .measures import (L1, L2, LINF, MeasureSpec, measure, mu_limit_estimate)
from .models import model_from_spec, load_model
from .scenarios import dumps_bundle, load_scenario, run_all, run_scenario
from .simulate import (DEFAULT_MAX_STEP, DEFAULT_TOL, integrate,
                       trajectory_to_csv)
from .verify import (CERTIFIED, FALSIFIED, PropertyQuery, SamplePlan,
                     check_property)

_FMT = ".17g"


def _fmt(v: float) -> str:
    return format(float(v), _FMT)


def _read_matrix(path: str) -> np.ndarray:
    rows = []
    with open(path, newline="") as fh:
        for r, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            vals = []
            for c, cell in enumerate(row, start=1):
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise SchemaError(f"not a number: {cell.strip()!r}",
                                      f"{path} row {r}, column {c}")
            rows.append(vals)
    if not rows:
        raise SchemaError("empty matrix", path)
    if len({len(r) for r in rows}) != 1:
        raise SchemaError("rows have differing lengths", path)
    return np.asarray(rows)


def _floats(text: str) -> tuple:
    return tuple(float(v) for v in text.split(","))


def _model_from_args(args):
    if getattr(args, "scenario", None):
        record = load_scenario(args.scenario)
        return model_from_spec(record["model"],
                               location=f"{args.scenario}.model"), record
    if getattr(args, "model", None):
        return load_model(args.model), None
    raise SchemaError("provide --scenario or --model", "arguments")


# ---------------------------------------------------------------------------
# subcommands


def cmd_measure(args) -> int:
    A = _read_matrix(args.infile)
    weight = _read_matrix(args.weight) if args.weight else None
    norms = args.norm or [L1, L2, LINF]
    for base in norms:
        spec = MeasureSpec(base, weight)
        value = (mu_limit_estimate(A, spec, args.limit_eps)
                 if args.limit_eps else measure(A, spec))
        if len(norms) == 1:
            print(_fmt(value))
        else:
            print(f"{base} {_fmt(value)}")
    return 0


def cmd_simulate(args) -> int:
    model, _ = _model_from_args(args)
    t1 = args.t1
    if args.x0 is not None:
        x0 = np.asarray(_floats(args.x0))
    else:
        u = (np.asarray(_floats(args.u)) if args.u is not None
             else model.sampling_box().center())
        x0 = model.initial_state(t1, u)
    traj = integrate(model, t1, x0, args.t_end, tol=args.tol,
                     max_step=args.max_step)
    times = np.asarray(_floats(args.times)) if args.times else None
    text = trajectory_to_csv(traj, times)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.verify_closed_form:
        if model.closed_form is None:
            print("error: model has no closed form to verify against",
                  file=sys.stderr)
            return 2
        errs = [np.max(np.abs(s - np.atleast_1d(model.closed_form(t, t1, x0))))
                for t, s in zip(traj.times, traj.states)]
        worst = float(max(errs))
        print(f"max closed-form deviation: {_fmt(worst)}", file=sys.stderr)
        if worst > 1e-7:
            return 1
    return 0


def _query_from_args(args, model, plan) -> PropertyQuery:
    if args.bio_eps is not None:
        from .models import BioParams, bio_measure_spec
        spec = model.spec
        p = BioParams(spec["n"], tuple(spec["alphas"]), spec["k"])
        norm = bio_measure_spec(p, args.bio_eps)
    elif args.weight:
        norm = MeasureSpec(args.norm_base, _read_matrix(args.weight))
    else:
        norm = MeasureSpec(args.norm_base)
    return PropertyQuery(
        property=args.property, norm=norm, plan=plan,
        c=args.c, tau=args.tau, eps=args.eps, ell=args.ell,
        window=tuple(args.window) if args.window else None)


def _plan_from_args(args, base: SamplePlan) -> SamplePlan:
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.n_pairs is not None:
        overrides["n_pairs"] = args.n_pairs
    if args.t1_grid is not None:
        overrides["t1_grid"] = _floats(args.t1_grid)
    if args.t2_offsets is not None:
        overrides["t2_offsets"] = _floats(args.t2_offsets)
    if args.tol is not None:
        overrides["tol"] = args.tol
    if not overrides:
        return base
    from dataclasses import replace
    return replace(base, **overrides)


def _matches(rec: dict, args) -> bool:
    if rec.get("check") != "property" or rec.get("property") != args.property:
        return False
    for name in ("tau", "eps", "ell", "c"):
        wanted = getattr(args, name)
        if wanted is not None and rec.get(name) is not None \
                and abs(rec[name] - wanted) > 1e-12:
            return False
    return True


def cmd_check(args) -> int:
    model, record = _model_from_args(args)
    base_plan = SamplePlan()
    if record is not None and "plan" in record:
        base_plan = scenarios._plan_from_json(record["plan"], "plan")
    plan = _plan_from_args(args, base_plan)

    verdicts = []
    if record is not None:
        matching = [rec for rec in record.get("checks", [])
                    if _matches(rec, args)]
        for rec in matching:
            verdicts.extend(scenarios._run_check(model, rec, plan))
    if not verdicts:
        verdicts = [check_property(model, _query_from_args(args, model, plan))]

    payload = verdicts[0].to_dict() if len(verdicts) == 1 else \
        {"verdicts": [v.to_dict() for v in verdicts]}
    text = json.dumps(payload, sort_keys=True, indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 1 if any(v.status == FALSIFIED for v in verdicts) else 0


def cmd_reproduce(args) -> int:
    names = scenarios.scenario_names() if args.name == "all" else (args.name,)
    os.makedirs(args.out_dir, exist_ok=True)
    if args.name == "all":
        bundle = run_all()
        path = os.path.join(args.out_dir, "all.json")
        with open(path, "w") as fh:
            fh.write(dumps_bundle(bundle) + "\n")
        print(path)
        if not args.no_figures:
            for name in names:
                for fig in report.render_bundle_figures(
                        bundle["scenarios"][name], args.out_dir):
                    print(fig)
        return 0
    bundle = run_scenario(args.name)
    path = os.path.join(args.out_dir, f"{args.name}.json")
    with open(path, "w") as fh:
        fh.write(dumps_bundle(bundle) + "\n")
    print(path)
    if not args.no_figures:
        for fig in report.render_bundle_figures(bundle, args.out_dir):
            print(fig)
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="contrakit",
        description="Certify and falsify contraction properties of "
                    "dynamical systems.",
        epilog="Environment: CONTRAKIT_THREADS caps internal worker "
               "threads (default 1); outputs are identical for any value.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("measure", help="matrix measures from a CSV matrix")
    p.add_argument("--in", dest="infile", required=True,
                   help="CSV file holding a square matrix")
    p.add_argument("--norm", action="append", choices=[L1, L2, LINF],
                   help="base norm (repeatable; default: all)")
    p.add_argument("--weight", help="CSV file holding the weight matrix")
    p.add_argument("--limit-eps", type=float, default=None,
                   help="print the finite-eps limit quotient instead")
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("simulate", help="integrate a model and emit CSV")
    p.add_argument("--model", help="model specification JSON file")
    p.add_argument("--scenario", help="use a named scenario's model")
    p.add_argument("--t1", type=float, default=0.0)
    p.add_argument("--t-end", type=float, required=True)
    p.add_argument("--x0", help="comma-separated initial state")
    p.add_argument("--u", help="comma-separated free initial parameters")
    p.add_argument("--times", help="comma-separated output times")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--max-step", type=float, default=DEFAULT_MAX_STEP)
    p.add_argument("--out", help="output CSV path (default: stdout)")
    p.add_argument("--verify-closed-form", action="store_true",
                   help="compare against the model's closed-form solution")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("check", help="check one property, print the verdict")
    p.add_argument("--model", help="model specification JSON file")
    p.add_argument("--scenario", help="named scenario (uses its plan, and "
                                      "its declared checks when they match)")
    p.add_argument("--property", required=True,
                   choices=["contraction", "st", "so", "sost", "ne", "wc"])
    p.add_argument("--tau", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--ell", type=float)
    p.add_argument("--c", type=float)
    p.add_argument("--norm", dest="norm_base", default=L1,
                   choices=[L1, L2, LINF])
    p.add_argument("--weight", help="CSV weight matrix for the norm")
    p.add_argument("--bio-eps", type=float,
                   help="use the circuit's diagonal weight at this eps")
    p.add_argument("--window", nargs=2, type=float,
                   help="restrict t1 and t2 to [a, b]")
    p.add_argument("--seed", type=int)
    p.add_argument("--n-pairs", type=int)
    p.add_argument("--t1-grid", help="comma-separated start times")
    p.add_argument("--t2-offsets", help="comma-separated offsets")
    p.add_argument("--tol", type=float)
    p.add_argument("--out", help="write the verdict JSON here")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("reproduce", help="run a canned scenario (or 'all')")
    p.add_argument("name", help="scenario name or 'all'")
    p.add_argument("--out-dir", default=".")
    p.add_argument("--no-figures", action="store_true",
                   help="skip PNG rendering, write JSON only")
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ContrakitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
