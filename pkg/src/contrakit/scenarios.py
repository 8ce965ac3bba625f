"""Data-driven scenario registry and runner.

A scenario is a JSON record shipped with the package: a model
specification plus a list of checks to run.  Running a scenario produces
a report bundle (verdicts plus an implication audit) whose JSON form is
byte-identical across runs for a fixed seed.
"""

from __future__ import annotations

import json
from importlib import resources

import numpy as np

from . import models as model_zoo
from . import verify
from .errors import ParameterError, SchemaError
from .measures import MeasureSpec, vector_norm
from .models import (BioParams, SystemModel, bio_equilibrium,
                     bio_measure_spec, bio_norm_family, model_from_spec)
from .simulate import integrate
from .verify import (CERTIFIED, FALSIFIED, PropertyQuery, SamplePlan, Verdict,
                     certify_sost_via_nc, check_br, check_entrainment,
                     check_ic, check_property, check_swe, ic_implied_st,
                     implication_audit, nc_implied_so, nc_implied_sost)

SCENARIO_NAMES = (
    "erf-drift", "draining-rate", "idle-then-decay", "clock-augmented",
    "bio-contractive", "bio-boundary", "entrain-linear", "entrain-bio",
)


def _scenario_dir():
    return resources.files("contrakit") / "scenarios"


def scenario_names() -> tuple:
    return SCENARIO_NAMES


def load_scenario(name: str) -> dict:
    if name not in SCENARIO_NAMES:
        raise SchemaError(
            f"unknown scenario {name!r}; known: {list(SCENARIO_NAMES)}",
            "scenario")
    path = _scenario_dir() / f"{name}.json"
    try:
        return json.loads(path.read_text())
    except FileNotFoundError as exc:
        raise SchemaError(f"scenario file missing: {path}", name) from exc


def _bio_params(model: SystemModel) -> BioParams:
    spec = model.spec
    if spec.get("model") not in ("bio", "bio-periodic"):
        raise SchemaError("this check needs a circuit model", "checks")
    return BioParams(spec["n"], tuple(spec["alphas"]), spec["k"])


def _norm_from_json(model: SystemModel, rec, location: str) -> MeasureSpec:
    if rec is None:
        return MeasureSpec()
    if not isinstance(rec, dict):
        raise SchemaError("norm must be a JSON object", location)
    base = rec.get("base", "l1")
    if "bio_eps" in rec:
        return bio_measure_spec(_bio_params(model), float(rec["bio_eps"]))
    if "weight" in rec:
        return MeasureSpec(base, np.asarray(rec["weight"], dtype=float))
    return MeasureSpec(base)


def _plan_from_json(rec, location: str) -> SamplePlan:
    if rec is None:
        return SamplePlan()
    if not isinstance(rec, dict):
        raise SchemaError("plan must be a JSON object", location)
    kwargs = {}
    for key, val in rec.items():
        if key in ("t1_grid", "t2_offsets"):
            kwargs[key] = tuple(float(v) for v in val)
        elif key in ("seed", "n_pairs", "refinement_rounds"):
            kwargs[key] = int(val)
        elif key in ("boundary_margin", "pair_separation", "tol", "max_step"):
            kwargs[key] = float(val)
        elif key in ("boundary_pairs", "slow_direction_pairs"):
            kwargs[key] = bool(val)
        else:
            raise SchemaError(f"unknown plan field {key!r}", location)
    try:
        return SamplePlan(**kwargs)
    except ParameterError as exc:
        raise SchemaError(str(exc), location) from exc


def _check_equilibrium(model: SystemModel, rec, plan: SamplePlan) -> Verdict:
    """Sampled trajectories must land on the analytic equilibrium."""
    p = _bio_params(model)
    target = bio_equilibrium(p)
    t_end = float(rec.get("t_end", 40.0))
    tol = float(rec.get("tol", 1e-6))
    n_starts = int(rec.get("n_starts", 5))
    norm = _norm_from_json(model, rec.get("norm"), "equilibrium.norm")
    rng = np.random.default_rng(int(rec.get("seed", 0)))
    starts = model.domain.sample(rng, n_starts)
    worst = 0.0
    for x0 in starts:
        traj = integrate(model, 0.0, x0, t_end, tol=plan.tol,
                         max_step=plan.max_step)
        worst = max(worst, vector_norm(traj.final_state() - target, norm))
    certified = worst < tol
    return Verdict(
        property="equilibrium", status=CERTIFIED if certified else FALSIFIED,
        params={"t_end": t_end, "tol": tol, "n_starts": n_starts},
        norm=norm.describe(), estimated_rate=None, witness=None,
        samples_evaluated=n_starts, worst_margin=float(worst - tol),
        slack=tol, plan=plan.describe(),
        extras={"equilibrium": target.tolist(), "max_final_distance": float(worst)},
    )


def _run_check(model: SystemModel, rec: dict, default_plan: SamplePlan) -> list:
    """Run one check record; returns the produced verdicts (a certified
    pipeline check may imply further certificates)."""
    kind = rec.get("check")
    plan = _plan_from_json(rec.get("plan"), f"{kind}.plan") \
        if "plan" in rec else default_plan
    norm = _norm_from_json(model, rec.get("norm"), f"{kind}.norm")

    if kind == "property":
        query = PropertyQuery(
            property=rec["property"], norm=norm, plan=plan,
            c=rec.get("c"), tau=rec.get("tau"), eps=rec.get("eps"),
            ell=rec.get("ell"),
            window=tuple(rec["window"]) if "window" in rec else None)
        return [check_property(model, query)]
    if kind == "swe":
        return [check_swe(model, float(rec["delta"]), plan=plan, norm=norm)]
    if kind == "ic":
        v = check_ic(model, norm=norm,
                     grid=int(rec.get("grid", 21)),
                     shrink_factor=float(rec.get("shrink_factor", 1e-3)),
                     tol=plan.tol)
        out = [v]
        if v.certified:
            out.append(ic_implied_st(v))
        return out
    if kind == "br":
        return [check_br(model, delta=float(rec["delta"]),
                         Delta=float(rec["Delta"]),
                         grid=int(rec.get("grid", 9)))]
    if kind == "nc":
        fam_name = rec.get("norm_family", "base")
        if fam_name == "bio":
            norm_family = bio_norm_family(_bio_params(model))
            base_norm = bio_measure_spec(_bio_params(model), 0.0)
        else:
            base_norm = _norm_from_json(model, rec.get("base_norm"), "nc.base_norm")
            norm_family = lambda zeta: base_norm
        kwargs = {}
        if "tau_grid" in rec:
            kwargs["tau_grid"] = tuple(float(v) for v in rec["tau_grid"])
        if "zeta_grid" in rec:
            kwargs["zeta_grid"] = tuple(float(v) for v in rec["zeta_grid"])
        if "entry_horizon" in rec:
            kwargs["entry_horizon"] = float(rec["entry_horizon"])
        if "region_grid" in rec:
            kwargs["region_grid"] = int(rec["region_grid"])
        v = certify_sost_via_nc(model, norm_family, base_norm, plan=plan,
                                **kwargs)
        out = [v]
        if v.certified:
            out.append(nc_implied_sost(v))
            so = nc_implied_so(v)
            if so is not None:
                out.append(so)
        return out
    if kind == "entrain":
        return [check_entrainment(
            model,
            n_starts=int(rec.get("n_starts", 5)),
            n_periods=int(rec.get("n_periods", 20)),
            tol=float(rec.get("tol", 1e-6)),
            seed=int(rec.get("seed", 0)), norm=norm,
            integration_tol=plan.tol, max_step=plan.max_step)]
    if kind == "equilibrium":
        return [_check_equilibrium(model, rec, plan)]
    raise SchemaError(f"unknown check kind {kind!r}", "checks")


def run_scenario(name: str) -> dict:
    """Run a named scenario and return its report bundle."""
    record = load_scenario(name)
    model = model_from_spec(record["model"], location=f"{name}.model")
    default_plan = _plan_from_json(record.get("plan"), f"{name}.plan")
    verdicts = []
    for rec in record.get("checks", []):
        verdicts.extend(_run_check(model, rec, default_plan))
    audit = implication_audit(verdicts)
    return {
        "schema_version": verify.SCHEMA_VERSION,
        "scenario": name,
        "description": record.get("description", ""),
        "model": record["model"],
        "verdicts": [v.to_dict() for v in verdicts],
        "audit": audit,
    }


def run_all() -> dict:
    """Run every scenario; merge the per-scenario audits."""
    bundles = {name: run_scenario(name) for name in SCENARIO_NAMES}
    inconsistencies = [
        dict(item, scenario=name)
        for name, b in bundles.items()
        for item in b["audit"]["inconsistencies"]
    ]
    return {
        "schema_version": verify.SCHEMA_VERSION,
        "scenarios": bundles,
        "inconsistencies": inconsistencies,
        "consistent": not inconsistencies,
    }


def dumps_bundle(bundle: dict) -> str:
    """Canonical JSON rendering: sorted keys, stable float formatting."""
    return json.dumps(bundle, sort_keys=True, indent=2, allow_nan=False)
