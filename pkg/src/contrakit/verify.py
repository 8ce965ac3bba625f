"""Empirical certification and falsification of contraction properties.

Certification is falsification search: the defining inequality of a
property is evaluated on a deterministic plan of sampled trajectory
quadruples (t1, t2, a, b) plus refinement rounds around the worst margin.
CERTIFIED means no violation beyond the numeric slack was found over the
declared plan; FALSIFIED carries a concrete witness reproducible by
re-simulation.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from . import simulate
from .domains import DomainSpec, check_nested_family_monotone, _family_region
from .errors import ParameterError, QueryError
from .measures import (L1, MeasureSpec, induced_norm, measure,
                       sup_measure_over_region, vector_norm)
from .models import SystemModel
from .simulate import DEFAULT_MAX_STEP, DEFAULT_TOL, integrate

CERTIFIED = "CERTIFIED"
FALSIFIED = "FALSIFIED"

SCHEMA_VERSION = 1

# Violations must exceed 100x the integration tolerance, relative to the
# initial separation, to count as genuine rather than integrator noise.
SLACK_FACTOR = 100.0

CONTRACTION = "contraction"
ST = "st"
SO = "so"
SOST = "sost"
NE = "ne"
WC = "wc"

_RATE_PROPERTIES = (CONTRACTION, ST, SO, SOST)
_SHIFTED = (ST, SOST)      # properties evaluated after the time shift tau
_OVERSHOOT = (SO, SOST)    # properties with the (1+eps) amplitude factor


@dataclass(frozen=True)
class SamplePlan:
    """Deterministic sampling plan realizing the for-all quantifiers.

    ``t2_offsets`` are offsets from t1 and extend geometrically because
    some falsifications only appear at large horizons.  Structured pairs
    (facet-anchored and slowest-Jacobian-direction separations) target
    near-boundary and near-neutral divergence directions that uniform
    sampling rarely hits.
    """

    seed: int = 0
    n_pairs: int = 6
    t1_grid: tuple = (0.0, 1.0, 5.0)
    t2_offsets: tuple = (0.1, 1.0, 10.0, 100.0)
    boundary_margin: float = 1e-6
    refinement_rounds: int = 1
    boundary_pairs: bool = True
    slow_direction_pairs: bool = True
    pair_separation: float = 0.05
    tol: float = DEFAULT_TOL
    max_step: float = DEFAULT_MAX_STEP

    def __post_init__(self):
        if not self.t1_grid or not self.t2_offsets:
            raise ParameterError("sample plan grids must be nonempty")
        if any(dt <= 0 for dt in self.t2_offsets):
            raise ParameterError("t2 offsets must be > 0")

    def describe(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class PropertyQuery:
    """Which property to check, with its parameters and sampling plan.

    A present rate (``c`` for plain contraction, ``ell`` otherwise) means
    CHECK mode; an absent one means ESTIMATE mode.  ``window`` restricts
    t1 and t2 to a closed interval.
    """

    property: str
    norm: MeasureSpec = field(default_factory=MeasureSpec)
    plan: SamplePlan = field(default_factory=SamplePlan)
    c: Optional[float] = None
    tau: Optional[float] = None
    eps: Optional[float] = None
    ell: Optional[float] = None
    window: Optional[tuple] = None

    def __post_init__(self):
        p = self.property
        if p not in _RATE_PROPERTIES + (NE, WC):
            raise QueryError(f"unknown property {p!r}")
        if p in _SHIFTED and (self.tau is None or self.tau <= 0):
            raise QueryError(f"property {p!r} requires tau > 0")
        if p in _OVERSHOOT and (self.eps is None or self.eps <= 0):
            raise QueryError(f"property {p!r} requires eps > 0")
        if p == CONTRACTION and self.c is not None and self.c <= 0:
            raise QueryError("contraction rate c must be > 0")
        if p in (ST, SO, SOST) and self.ell is not None and self.ell <= 0:
            raise QueryError("rate ell must be > 0")
        for name in ("tau", "eps"):
            val = getattr(self, name)
            if val is not None and p not in (_SHIFTED if name == "tau" else _OVERSHOOT):
                raise QueryError(f"parameter {name} is not valid for property {p!r}")
        if self.c is not None and p != CONTRACTION:
            raise QueryError(f"parameter c is not valid for property {p!r}")
        if self.ell is not None and p not in (ST, SO, SOST):
            raise QueryError(f"parameter ell is not valid for property {p!r}")
        if p in (NE, WC) and (self.c is not None or self.ell is not None):
            raise QueryError(f"property {p!r} takes no rate parameter")

    @property
    def rate(self) -> Optional[float]:
        return self.c if self.property == CONTRACTION else self.ell

    @property
    def estimate_mode(self) -> bool:
        return self.property in _RATE_PROPERTIES and self.rate is None

    def params(self) -> dict:
        out = {}
        for name in ("c", "tau", "eps", "ell"):
            val = getattr(self, name)
            if val is not None:
                out[name] = val
        if self.window is not None:
            out["window"] = list(self.window)
        return out


@dataclass(frozen=True)
class Witness:
    """A concrete quadruple violating (or binding) the checked inequality."""

    t1: float
    t2: float
    eval_time: float
    a: tuple
    b: tuple
    d0: float
    d: float
    margin: float
    slack: float

    def to_dict(self) -> dict:
        return {
            "t1": self.t1, "t2": self.t2, "eval_time": self.eval_time,
            "a": list(self.a), "b": list(self.b),
            "d0": self.d0, "d": self.d, "margin": self.margin,
            "slack": self.slack,
        }


@dataclass(frozen=True)
class Verdict:
    """Outcome of a property query."""

    property: str
    status: str
    params: dict
    norm: dict
    estimated_rate: Optional[float]
    witness: Optional[Witness]
    samples_evaluated: int
    worst_margin: float
    slack: float
    plan: dict
    extras: dict = field(default_factory=dict)

    @property
    def certified(self) -> bool:
        return self.status == CERTIFIED

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "property": self.property,
            "status": self.status,
            "params": self.params,
            "norm": self.norm,
            "rate": self.estimated_rate,
            "witness": self.witness.to_dict() if self.witness else None,
            "samples": self.samples_evaluated,
            "worst_margin": self.worst_margin
            if math.isfinite(self.worst_margin) else None,
            "slack": self.slack,
            "plan": self.plan,
            "extras": _jsonable(self.extras),
        }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, Verdict):
        return obj.to_dict()
    if isinstance(obj, Witness):
        return obj.to_dict()
    return obj


# ---------------------------------------------------------------------------
# sample generation and divergence tables


@dataclass(frozen=True)
class _DivSample:
    t1: float
    dt: float              # t2 - t1
    u_a: tuple             # free initial parameters (pre init_transform)
    u_b: tuple
    a: tuple               # initial states
    b: tuple
    d0: float
    d: float               # distance at eval time t1 + dt + tau


def _pair_parameters(model: SystemModel, plan: SamplePlan, t1: float) -> list:
    """Deterministic list of (u_a, u_b) free-parameter pairs for one t1."""
    rng = np.random.default_rng((plan.seed, int(t1 * 1e6) & 0xFFFFFFFF))
    sbox = model.sampling_box().interior_box(plan.boundary_margin)
    lo = np.asarray(sbox.lower)
    hi = np.asarray(sbox.upper)
    width = hi - lo
    sep = plan.pair_separation * width

    pairs = []
    pts = lo + rng.random((2 * plan.n_pairs, sbox.dim)) * width
    for i in range(plan.n_pairs):
        a, b = pts[2 * i], pts[2 * i + 1]
        if np.allclose(a, b):
            b = np.clip(a + sep, lo, hi)
        pairs.append((a, b))

    anchors = []
    if plan.boundary_pairs:
        # one anchor per facet at the margin, plus the all-low corner
        for axis in range(sbox.dim):
            for bound, v in ((lo[axis], lo), (hi[axis], hi)):
                p = (lo + hi) / 2.0
                p[axis] = bound
                anchors.append(p.copy())
        anchors.append(lo.copy())
    anchors.append((lo + hi) / 2.0)

    for p in anchors:
        # separate inward so both endpoints stay feasible
        direction = np.where(p <= (lo + hi) / 2.0, 1.0, -1.0)
        q = np.clip(p + sep * direction, lo, hi)
        pairs.append((p, q))
        if plan.slow_direction_pairs and model.init_transform is None:
            # separation along the slowest (largest real part) Jacobian
            # direction at the anchor: the direction most likely to defeat
            # a claimed uniform rate
            J = model.jacobian(t1, model.initial_state(t1, p))
            vals, vecs = np.linalg.eig(J)
            v = np.real(vecs[:, int(np.argmax(np.real(vals)))])
            nrm = np.linalg.norm(v)
            if nrm > 0:
                v = v / nrm
                if np.dot(v, direction) < 0:
                    v = -v
                r = plan.pair_separation * float(np.min(width))
                q = np.clip(p + r * v, lo, hi)
                if not np.allclose(p, q):
                    pairs.append((p.copy(), q))
    return pairs


def _window_clip(plan: SamplePlan, window):
    if window is None:
        return list(plan.t1_grid), lambda t1: list(plan.t2_offsets)
    w_lo, w_hi = window
    t1s = [t for t in plan.t1_grid if w_lo <= t <= w_hi]
    if not t1s:
        t1s = [w_lo]
    return t1s, lambda t1: [dt for dt in plan.t2_offsets if t1 + dt <= w_hi]


_TABLE_CACHE: dict = {}
_TABLE_CACHE_MAX = 64


def _divergence_table(model: SystemModel, plan: SamplePlan, tau: float,
                      norm: MeasureSpec, window) -> list:
    key = (id(model), plan, float(tau), norm.key(), window)
    if key in _TABLE_CACHE:
        return _TABLE_CACHE[key]
    t1s, offsets_for = _window_clip(plan, window)
    samples = []
    for t1 in t1s:
        offsets = offsets_for(t1)
        if not offsets:
            continue
        pairs = _pair_parameters(model, plan, t1)
        for u_a, u_b in pairs:
            samples.extend(
                _evaluate_pair(model, plan, norm, t1, u_a, u_b, offsets, tau))
    if len(_TABLE_CACHE) >= _TABLE_CACHE_MAX:
        _TABLE_CACHE.clear()
    _TABLE_CACHE[key] = samples
    return samples


def _evaluate_pair(model: SystemModel, plan: SamplePlan, norm: MeasureSpec,
                   t1, u_a, u_b, offsets, tau) -> list:
    a = model.initial_state(t1, u_a)
    b = model.initial_state(t1, u_b)
    d0 = vector_norm(a - b, norm)
    if d0 == 0.0:
        return []
    eval_times = [t1 + dt + tau for dt in offsets]
    t_end = max(eval_times)
    ta = integrate(model, t1, a, t_end, tol=plan.tol, max_step=plan.max_step)
    tb = integrate(model, t1, b, t_end, tol=plan.tol, max_step=plan.max_step)
    xs = np.atleast_2d(ta.eval(eval_times))
    ys = np.atleast_2d(tb.eval(eval_times))
    out = []
    for dt, x, y in zip(offsets, xs, ys):
        out.append(_DivSample(
            t1=float(t1), dt=float(dt),
            u_a=tuple(map(float, np.atleast_1d(u_a))),
            u_b=tuple(map(float, np.atleast_1d(u_b))),
            a=tuple(map(float, a)), b=tuple(map(float, b)),
            d0=d0, d=vector_norm(x - y, norm)))
    return out


# ---------------------------------------------------------------------------
# the inequality checks


def _bound(q: PropertyQuery, dt: float, d0: float, rate: float) -> float:
    amp = (1.0 + q.eps) if q.property in _OVERSHOOT else 1.0
    if q.property in (NE, WC):
        return d0
    return amp * math.exp(-rate * dt) * d0


def _margin(q: PropertyQuery, s: _DivSample, rate) -> float:
    return s.d - _bound(q, s.dt, s.d0, rate)


def _violates(q: PropertyQuery, margin: float, slack: float) -> bool:
    if q.property == WC:
        # strict inequality: distances that fail to shrink by more than
        # the slack falsify weak contraction
        return margin > -slack
    return margin > slack


def _sample_rate(q: PropertyQuery, s: _DivSample) -> float:
    amp = (1.0 + q.eps) if q.property in _OVERSHOOT else 1.0
    ratio = s.d / (amp * s.d0)
    if ratio <= 0.0:
        return math.inf
    return -math.log(ratio) / s.dt


def check_property(model: SystemModel, q: PropertyQuery) -> Verdict:
    """Certify or falsify the defining inequality of ``q.property``.

    CHECK mode (rate given) falsifies on any sampled violation beyond the
    numeric slack.  ESTIMATE mode returns the infimum per-sample rate,
    clamped at 0; a nonpositive infimum is a falsification.
    """
    tau = q.tau if q.property in _SHIFTED else 0.0
    plan = q.plan
    samples = list(_divergence_table(model, plan, tau, q.norm, q.window))
    if not samples:
        raise QueryError("sampling plan produced no (t1, t2) samples")

    if q.estimate_mode:
        rates = [_sample_rate(q, s) for s in samples]
        finite = [r for r in rates if math.isfinite(r)]
        ell_hat = min(finite) if finite else math.inf
        certified = ell_hat > 0.0
        idx = rates.index(ell_hat) if finite else 0
        witness = _witness(q, samples[idx], rate=max(ell_hat, 0.0) or None)
        return Verdict(
            property=q.property, status=CERTIFIED if certified else FALSIFIED,
            params=q.params(), norm=q.norm.describe(),
            estimated_rate=float(max(ell_hat, 0.0)) if math.isfinite(ell_hat) else None,
            witness=None if certified else witness,
            samples_evaluated=len(samples),
            worst_margin=float("nan"), slack=SLACK_FACTOR * plan.tol,
            plan=plan.describe(),
            extras={"mode": "estimate",
                    "binding_sample": witness.to_dict()},
        )

    rate = q.rate if q.property in _RATE_PROPERTIES else 0.0
    margins = [_margin(q, s, rate) for s in samples]
    samples, margins = _refine(model, q, tau, samples, margins, rate)
    worst = int(np.argmax(margins))
    s = samples[worst]
    slack = SLACK_FACTOR * plan.tol * s.d0
    violated = _violates(q, margins[worst], slack)
    witness = _witness(q, s, rate=rate, margin=margins[worst], slack=slack)
    return Verdict(
        property=q.property, status=FALSIFIED if violated else CERTIFIED,
        params=q.params(), norm=q.norm.describe(),
        estimated_rate=None if violated else rate,
        witness=witness if violated else None,
        samples_evaluated=len(samples),
        worst_margin=float(margins[worst]), slack=slack,
        plan=plan.describe(),
        extras={"mode": "check", "binding_sample": witness.to_dict()},
    )


def _witness(q: PropertyQuery, s: _DivSample, rate=None, margin=None, slack=None) -> Witness:
    tau = q.tau if q.property in _SHIFTED else 0.0
    if margin is None:
        margin = _margin(q, s, rate if rate is not None else 0.0)
    return Witness(
        t1=s.t1, t2=s.t1 + s.dt, eval_time=s.t1 + s.dt + tau,
        a=s.a, b=s.b, d0=s.d0, d=s.d,
        margin=float(margin),
        slack=float(slack) if slack is not None else 0.0,
    )


def _refine(model, q, tau, samples, margins, rate):
    """Add samples around the current worst margin: neighbor offsets and
    jittered pairs, shrinking each round."""
    plan = q.plan
    sbox = model.sampling_box().interior_box(plan.boundary_margin)
    lo = np.asarray(sbox.lower)
    hi = np.asarray(sbox.upper)
    for rnd in range(plan.refinement_rounds):
        worst = samples[int(np.argmax(margins))]
        rng = np.random.default_rng((plan.seed, 7919, rnd))
        offsets = sorted({worst.dt, worst.dt * 0.5, worst.dt * 2.0})
        if q.window is not None:
            offsets = [dt for dt in offsets if worst.t1 + dt <= q.window[1]]
        if not offsets:
            break
        radius = (hi - lo) * 0.05 / (2.0 ** rnd)
        new = []
        for _ in range(3):
            u_a = np.clip(np.asarray(worst.u_a) + rng.normal(size=len(lo)) * radius, lo, hi)
            u_b = np.clip(np.asarray(worst.u_b) + rng.normal(size=len(lo)) * radius, lo, hi)
            if np.allclose(u_a, u_b):
                continue
            new.extend(_evaluate_pair(model, plan, q.norm, worst.t1,
                                      u_a, u_b, offsets, tau))
        # re-evaluate the worst pair at the neighbor offsets as well
        new.extend(_evaluate_pair(model, plan, q.norm, worst.t1,
                                  np.asarray(worst.u_a), np.asarray(worst.u_b),
                                  offsets, tau))
        samples = samples + new
        margins = margins + [_margin(q, s, rate) for s in new]
    return samples, margins


def replay_witness(model: SystemModel, q: PropertyQuery, witness: Witness,
                   tol: float = DEFAULT_TOL) -> float:
    """Re-simulate a witness from scratch and return the recomputed margin."""
    series_times = [witness.eval_time]
    rate = q.rate if q.property in _RATE_PROPERTIES else 0.0
    div = simulate.pair_divergence(model, witness.t1, witness.a, witness.b,
                                   series_times, norm=q.norm, tol=tol,
                                   max_step=q.plan.max_step)
    d = float(div.distances[0])
    d0 = vector_norm(np.asarray(witness.a) - np.asarray(witness.b), q.norm)
    dt = witness.t2 - witness.t1
    s = _DivSample(witness.t1, dt, witness.a, witness.b,
                   witness.a, witness.b, d0, d)
    return _margin(q, s, rate or 0.0)


# ---------------------------------------------------------------------------
# short-window expansion (SWE)


def check_swe(model: SystemModel, delta: float,
              plan: SamplePlan = SamplePlan(),
              norm: MeasureSpec = MeasureSpec(),
              n_window_points: int = 6,
              tau0_grid: tuple = (2.0, 1.0, 0.5, 0.25, 0.1, 0.05),
              lipschitz: Optional[float] = None) -> Verdict:
    """Check that distances grow by at most (1+delta) over short windows.

    With a Lipschitz bound L (passed in, or declared by the model) the
    window tau0 = log(1+delta)/L is proposed and verified; otherwise the
    largest passing grid window is searched.
    """
    if delta <= 0:
        raise ParameterError(f"delta must be > 0, got {delta}")
    lipschitz = lipschitz if lipschitz is not None else model.lipschitz_bound

    def window_passes(tau0):
        worst = (-math.inf, None)
        count = 0
        for t0 in plan.t1_grid:
            pairs = _pair_parameters(model, plan, t0)
            times = np.linspace(t0, t0 + tau0, n_window_points)[1:]
            for u_a, u_b in pairs:
                a = model.initial_state(t0, u_a)
                b = model.initial_state(t0, u_b)
                d0 = vector_norm(a - b, norm)
                if d0 == 0.0:
                    continue
                div = simulate.pair_divergence(model, t0, a, b, times,
                                               norm=norm, tol=plan.tol,
                                               max_step=plan.max_step)
                for t, d in zip(div.times, div.distances):
                    count += 1
                    margin = d - (1.0 + delta) * d0
                    if margin > worst[0]:
                        worst = (margin, Witness(
                            t1=t0, t2=float(t), eval_time=float(t),
                            a=tuple(map(float, a)), b=tuple(map(float, b)),
                            d0=d0, d=float(d), margin=float(margin),
                            slack=SLACK_FACTOR * plan.tol * d0))
        slack = SLACK_FACTOR * plan.tol * (worst[1].d0 if worst[1] else 1.0)
        return worst[0] <= slack, worst, count

    if lipschitz is not None:
        tau0 = math.log(1.0 + delta) / lipschitz
        ok, (margin, witness), count = window_passes(tau0)
        return Verdict(
            property="swe", status=CERTIFIED if ok else FALSIFIED,
            params={"delta": delta, "tau0": tau0,
                    "lipschitz_bound": lipschitz},
            norm=norm.describe(), estimated_rate=None,
            witness=None if ok else witness,
            samples_evaluated=count, worst_margin=float(margin),
            slack=SLACK_FACTOR * plan.tol, plan=plan.describe(),
            extras={"tau0": tau0, "tau0_source": "lipschitz"},
        )
    for tau0 in tau0_grid:
        ok, (margin, witness), count = window_passes(tau0)
        if ok:
            return Verdict(
                property="swe", status=CERTIFIED,
                params={"delta": delta, "tau0": tau0},
                norm=norm.describe(), estimated_rate=None, witness=None,
                samples_evaluated=count, worst_margin=float(margin),
                slack=SLACK_FACTOR * plan.tol, plan=plan.describe(),
                extras={"tau0": tau0, "tau0_source": "grid-search"},
            )
    return Verdict(
        property="swe", status=FALSIFIED,
        params={"delta": delta}, norm=norm.describe(), estimated_rate=None,
        witness=witness, samples_evaluated=count, worst_margin=float(margin),
        slack=SLACK_FACTOR * plan.tol, plan=plan.describe(),
        extras={"tau0": None, "tau0_source": "grid-search"},
    )


def lipschitz_from_jacobian(model: SystemModel, region: DomainSpec,
                            norm: MeasureSpec = MeasureSpec(),
                            grid=9, t_samples=(0.0,)) -> float:
    """Grid estimate of sup ||J(t, x)|| as a Lipschitz constant."""
    points = region.grid(grid)
    times = (0.0,) if model.time_invariant else tuple(t_samples)
    return max(induced_norm(model.jacobian(t, x), norm)
               for t in times for x in points)


# ---------------------------------------------------------------------------
# interior contractivity (IC)


def check_ic(model: SystemModel, norm: MeasureSpec = MeasureSpec(),
             probe_time: float = 0.1, probe_threshold: float = 1e-4,
             shrink_factor: float = 1e-3, grid=21, per_facet: int = 5,
             tol: float = DEFAULT_TOL) -> Verdict:
    """Interior-contractivity test for time-invariant systems on a compact
    convex domain.

    (a) every boundary point must move a positive distance into the
    interior by ``probe_time``; (b) the measure of the Jacobian must be
    negative on an interior shrink of the domain.  A certified verdict
    also carries the implied transient-contraction rate from the region
    bound (see ``ic_implied_st``).
    """
    if not model.time_invariant:
        raise QueryError(
            "interior-contractivity requires a time-invariant model; the "
            "time-varying analogue is false")
    for x in (model.domain.center(), np.asarray(model.domain.lower)):
        if not np.allclose(model.f(0.0, np.asarray(x)), model.f(7.31, np.asarray(x))):
            raise QueryError("model vector field depends on t")
    if any(model.domain.open_lower) or any(model.domain.open_upper):
        raise QueryError("interior-contractivity requires a compact (closed) domain")

    params = {"probe_time": probe_time, "probe_threshold": probe_threshold,
              "shrink_factor": shrink_factor}

    # (a) boundary repulsion probe
    worst_depth = math.inf
    worst_point = None
    n_probes = 0
    for x0 in model.domain.facet_points(per_facet):
        traj = integrate(model, 0.0, x0, probe_time, tol=tol)
        depth = model.domain.distance_to_boundary(traj.final_state())
        n_probes += 1
        if depth < worst_depth:
            worst_depth, worst_point = depth, x0
    boundary_ok = worst_depth >= probe_threshold

    # (b) negative measure on the interior shrink
    region = model.domain.shrink(shrink_factor)
    bound = sup_measure_over_region(model, region, norm, grid=grid)
    interior_ok = bound.sup_measure < 0.0

    certified = boundary_ok and interior_ok
    witness = None
    if not boundary_ok:
        wp = tuple(map(float, worst_point))
        witness = Witness(t1=0.0, t2=probe_time, eval_time=probe_time,
                          a=wp, b=wp, d0=0.0, d=float(worst_depth),
                          margin=float(probe_threshold - worst_depth), slack=0.0)
    return Verdict(
        property="ic", status=CERTIFIED if certified else FALSIFIED,
        params=params, norm=norm.describe(),
        estimated_rate=-bound.sup_measure if certified else None,
        witness=witness,
        samples_evaluated=n_probes + int(np.prod(bound.grid_resolution)),
        worst_margin=float(bound.sup_measure),
        slack=0.0, plan={"grid": bound.grid_resolution, "per_facet": per_facet},
        extras={
            "boundary_ok": boundary_ok, "interior_ok": interior_ok,
            "min_boundary_depth": float(worst_depth),
            "region_bound": {
                "sup_measure": bound.sup_measure,
                "argmax_point": list(bound.argmax_point),
                "grid_resolution": list(bound.grid_resolution),
            },
        },
    )


def ic_implied_st(ic_verdict: Verdict) -> Verdict:
    """Transient-contraction certificate implied by a certified interior-
    contractivity verdict, with rate from the region bound."""
    return Verdict(
        property=ST, status=ic_verdict.status,
        params={"derived_from": "ic"},
        norm=ic_verdict.norm,
        estimated_rate=ic_verdict.estimated_rate,
        witness=None, samples_evaluated=ic_verdict.samples_evaluated,
        worst_margin=ic_verdict.worst_margin, slack=ic_verdict.slack,
        plan=ic_verdict.plan, extras={"derived_from": "ic"},
    )


# ---------------------------------------------------------------------------
# boundary repulsion (BR)


def check_br(model: SystemModel, delta: float, Delta: float,
             grid: int = 9, t_samples=(0.0,),
             threshold: float = 1e-9) -> Verdict:
    """Lower-bound each component velocity on its near-zero slab.

    For each axis k the slab {x_k <= Delta, x_i >= delta for i < k} is
    gridded and min f_k reported; certified iff every minimum clears the
    positive threshold.
    """
    dom = model.domain
    if dom.kind != "positive_orthant_box":
        raise QueryError("boundary repulsion needs an orthant-anchored domain")
    if Delta <= 0:
        raise ParameterError(f"Delta must be > 0, got {Delta}")
    times = (0.0,) if model.time_invariant else tuple(t_samples)
    minima = []
    worst = (math.inf, None, None)
    for k in range(dom.dim):
        lower = [delta if i < k else 0.0 for i in range(dom.dim)]
        upper = [min(Delta, dom.upper[i]) if i == k else dom.upper[i]
                 for i in range(dom.dim)]
        slab = DomainSpec("box", tuple(lower), tuple(upper))
        m = math.inf
        arg = None
        for t in times:
            for x in slab.grid(grid):
                v = float(model.f(t, x)[k])
                if v < m:
                    m, arg = v, (t, x)
        minima.append(m)
        if m < worst[0]:
            worst = (m, k, arg)
    k_hat = min(minima)
    certified = k_hat >= threshold
    witness = None
    if not certified:
        t, x = worst[2]
        pt = tuple(map(float, x))
        witness = Witness(t1=float(t), t2=float(t), eval_time=float(t),
                          a=pt, b=pt, d0=0.0, d=float(worst[0]),
                          margin=float(threshold - worst[0]), slack=0.0)
    return Verdict(
        property="br", status=CERTIFIED if certified else FALSIFIED,
        params={"delta": delta, "Delta": Delta, "threshold": threshold},
        norm={}, estimated_rate=k_hat if certified else None,
        witness=witness, samples_evaluated=dom.dim * grid ** dom.dim,
        worst_margin=float(threshold - k_hat), slack=0.0,
        plan={"grid": grid},
        extras={"K_hat": float(k_hat),
                "component_minima": [float(m) for m in minima]},
    )


# ---------------------------------------------------------------------------
# nested contraction (NC) pipeline


def certify_sost_via_nc(model: SystemModel,
                        norm_family: Callable[[float], MeasureSpec],
                        base_norm: MeasureSpec,
                        family: Optional[Callable] = None,
                        plan: SamplePlan = SamplePlan(),
                        tau_grid: tuple = (0.25, 0.5, 1.0),
                        zeta_grid: tuple = (0.5, 0.25, 0.1, 0.05, 0.02,
                                            0.01, 0.005, 0.002, 0.001),
                        entry_horizon: float = 10.0,
                        region_grid=15,
                        rate_floor: float = 1e-3) -> Verdict:
    """Nested-contraction pipeline certifying small-overshoot-small-
    transient contraction.

    Steps: (i) trajectories enter the nested subregion for each probe
    transient; (ii) contraction holds inside each entered subregion,
    certified by a negative measure bound or, failing that, by direct
    pairwise rate estimation; (iii) the subregion norms converge to the
    base norm; (iv) the system is non-expanding under the base norm.
    """
    family = family or model.domain.nested_family
    if family is None:
        raise QueryError("model declares no nested region family")
    check_nested_family_monotone(family, zeta_grid, t1=min(plan.t1_grid))

    extras = {"steps": {}}

    # (i) entry into the nested regions
    zeta_of_tau = {}
    entry_ok = True
    for tau in tau_grid:
        zeta_found = None
        for zeta in sorted(zeta_grid, reverse=True):
            ok = True
            for t1 in plan.t1_grid:
                region = _family_region(family, zeta, t1)
                for u_a, u_b in _pair_parameters(model, plan, t1):
                    for u in (u_a, u_b):
                        x0 = model.initial_state(t1, u)
                        traj = integrate(model, t1, x0, t1 + entry_horizon,
                                         tol=plan.tol, max_step=plan.max_step)
                        check_times = np.linspace(t1 + tau, t1 + entry_horizon, 24)
                        states = np.atleast_2d(traj.eval(check_times))
                        if any(not region.contains(s, slack=1e-9) for s in states):
                            ok = False
                            break
                    if not ok:
                        break
                if not ok:
                    break
            if ok:
                zeta_found = zeta
                break
        if zeta_found is None:
            entry_ok = False
            break
        zeta_of_tau[tau] = zeta_found
    extras["steps"]["entry"] = {"ok": entry_ok,
                                "zeta_of_tau": {str(k): v for k, v in zeta_of_tau.items()}}
    if not entry_ok:
        return _nc_verdict(FALSIFIED, extras, plan, base_norm)

    # (ii) contraction on each entered subregion: a uniformly negative
    # measure bound, sampled over time as well for time-varying fields so
    # that rates draining to zero with t are caught
    contraction_ok = True
    region_reports = []
    t1_anchor = min(plan.t1_grid)
    t_samples = () if model.time_invariant else tuple(sorted(
        set(plan.t1_grid) | {1.0, 10.0, 100.0, 1e3, 1e4}))
    for tau, zeta in zeta_of_tau.items():
        spec = norm_family(zeta)
        region = _family_region(family, zeta, t1_anchor)
        bounded_region = _bounded(region, model)
        bound = sup_measure_over_region(model, bounded_region, spec,
                                        grid=region_grid, t_samples=t_samples)
        report = {"tau": tau, "zeta": zeta, "sup_measure": bound.sup_measure}
        if bound.sup_measure > -rate_floor:
            # The measure bound is sufficient but not necessary (feasible
            # trajectory differences may span only a subspace); fall back
            # to direct pairwise rate estimation inside the subregion.
            rate = _empirical_rate_in_region(model, plan, spec, tau, entry_horizon)
            report["empirical_rate"] = rate
            if rate is None or rate <= rate_floor:
                contraction_ok = False
        region_reports.append(report)
    extras["steps"]["contraction"] = {"ok": contraction_ok,
                                      "regions": region_reports}
    if not contraction_ok:
        return _nc_verdict(FALSIFIED, extras, plan, base_norm)

    # (iii) norm convergence to the base norm
    rng = np.random.default_rng(plan.seed)
    ys = rng.standard_normal((64, model.n))
    conv = []
    for zeta in sorted(set(zeta_of_tau.values()), reverse=True):
        spec = norm_family(zeta)
        ratios = [vector_norm(y, spec) / vector_norm(y, base_norm) for y in ys]
        conv.append((zeta, max(abs(r - 1.0) for r in ratios)))
    conv_ok = all(b[1] <= a[1] + 1e-9 for a, b in zip(conv[:-1], conv[1:]))
    extras["steps"]["norm_convergence"] = {
        "ok": conv_ok, "max_ratio_gap": [[z, g] for z, g in conv]}
    if not conv_ok:
        return _nc_verdict(FALSIFIED, extras, plan, base_norm)

    # (iv) non-expansion under the base norm
    ne_verdict = check_property(model, PropertyQuery(NE, norm=base_norm, plan=plan))
    extras["steps"]["non_expansion"] = {"ok": ne_verdict.certified,
                                        "verdict": ne_verdict.to_dict()}
    if not ne_verdict.certified:
        return _nc_verdict(FALSIFIED, extras, plan, base_norm)

    verdict = _nc_verdict(CERTIFIED, extras, plan, base_norm)

    # Upgrade: with a short-window expansion bound the
    # transient certificate strengthens to an overshoot-only one.
    try:
        swe = check_swe(model, delta=0.5, plan=plan, norm=base_norm)
    except ParameterError:
        swe = None
    if swe is not None:
        verdict.extras["swe"] = swe.to_dict()
        verdict.extras["implies_so"] = bool(swe.certified and verdict.certified)
    return verdict


def _bounded(region: DomainSpec, model: SystemModel) -> DomainSpec:
    """Clip an unbounded-ish nested region to the model's working box so
    it can be gridded."""
    lo = [max(l, ml) for l, ml in zip(region.lower, model.domain.lower)]
    hi = [min(u, mu) for u, mu in zip(region.upper, model.domain.upper)]
    # keep a nonempty box even if the nested region pokes past the domain
    hi = [h if h > l else l + 1.0 for l, h in zip(lo, hi)]
    return DomainSpec("box", tuple(lo), tuple(hi))


def _empirical_rate_in_region(model, plan, spec, tau, horizon):
    """Worst pairwise contraction rate observed after entering the nested
    region: min over samples of -log(d(t)/d(t1+tau)) / (t - t1 - tau).

    For time-varying fields the start-time grid is extended to large t1
    so rates that drain away with time are caught."""
    rates = []
    t1_grid = tuple(plan.t1_grid)
    if not model.time_invariant:
        t1_grid = tuple(sorted(set(t1_grid) | {100.0, 1000.0}))
    for t1 in t1_grid:
        for u_a, u_b in _pair_parameters(model, plan, t1):
            a = model.initial_state(t1, u_a)
            b = model.initial_state(t1, u_b)
            times = np.linspace(t1 + tau, t1 + horizon, 8)
            div = simulate.pair_divergence(model, t1, a, b, times, norm=spec,
                                           tol=plan.tol, max_step=plan.max_step)
            d_ref = div.distances[0]
            if d_ref <= 0:
                continue
            for t, d in zip(div.times[1:], div.distances[1:]):
                if d <= 0:
                    continue
                rates.append(-math.log(d / d_ref) / (t - times[0]))
    return min(rates) if rates else None


def _nc_verdict(status, extras, plan, base_norm) -> Verdict:
    return Verdict(
        property="nc", status=status, params={},
        norm=base_norm.describe(), estimated_rate=None, witness=None,
        samples_evaluated=0, worst_margin=float("nan"), slack=0.0,
        plan=plan.describe(), extras=extras,
    )


def nc_implied_sost(nc_verdict: Verdict) -> Verdict:
    """Small-overshoot-small-transient certificate implied by a certified
    nested-contraction verdict."""
    return Verdict(
        property=SOST, status=nc_verdict.status,
        params={"derived_from": "nc"}, norm=nc_verdict.norm,
        estimated_rate=None, witness=None,
        samples_evaluated=nc_verdict.samples_evaluated,
        worst_margin=float("nan"), slack=0.0, plan=nc_verdict.plan,
        extras={"derived_from": "nc"},
    )


def nc_implied_so(nc_verdict: Verdict) -> Optional[Verdict]:
    """Overshoot-only certificate when the nested-contraction verdict also
    carries a short-window expansion bound."""
    if not nc_verdict.extras.get("implies_so"):
        return None
    return Verdict(
        property=SO, status=nc_verdict.status,
        params={"derived_from": "nc+swe"}, norm=nc_verdict.norm,
        estimated_rate=None, witness=None,
        samples_evaluated=nc_verdict.samples_evaluated,
        worst_margin=float("nan"), slack=0.0, plan=nc_verdict.plan,
        extras={"derived_from": "nc+swe"},
    )


# ---------------------------------------------------------------------------
# rate-transform algebra


DIAGONAL_TO_GENERAL = "diagonal_to_general"
SHIFTED_TO_WINDOWED = "shifted_to_windowed"


def transform_rates(kind: str, params: dict) -> dict:
    """Pure algebra mapping one certificate parameterization to another.

    ``diagonal_to_general``: from the single-parameter family (overshoot
    factor 1+tau at shift tau) to a requested (tau_hat, eps_hat) pair; the
    certificate at shift min(tau_hat, eps_hat) serves both.

    ``shifted_to_windowed``: from a shifted-time certificate (tau, eps,
    ell) to a rate ell1 = c*ell valid for all t >= t1 + tau, where c is
    the largest grid value with (1 + eps/2) * exp(tau*c*ell) <= 1 + eps.
    """
    if kind == DIAGONAL_TO_GENERAL:
        tau_hat, eps_hat = params["tau_hat"], params["eps_hat"]
        if tau_hat <= 0 or eps_hat <= 0:
            raise ParameterError("tau_hat and eps_hat must be > 0")
        return {"tau": min(tau_hat, eps_hat)}
    if kind == SHIFTED_TO_WINDOWED:
        ell, tau, eps = params["ell"], params["tau"], params["eps"]
        if ell <= 0 or tau <= 0 or eps <= 0:
            raise ParameterError("ell, tau, eps must be > 0")
        n_grid = int(params.get("grid_points", 4096))
        c_star = math.log((1.0 + eps) / (1.0 + eps / 2.0)) / (tau * ell)
        c_star = min(1.0, c_star)
        grid = np.linspace(0.0, 1.0, n_grid + 1)[1:]
        feasible = grid[(1.0 + eps / 2.0) * np.exp(tau * grid * ell) <= 1.0 + eps]
        c = float(feasible[-1]) if len(feasible) else c_star
        return {"c": c, "ell1": c * ell, "c_star": c_star}
    raise ParameterError(f"unknown rate transform {kind!r}")


# ---------------------------------------------------------------------------
# entrainment


def check_entrainment(model: SystemModel, n_starts: int = 5,
                      n_periods: int = 20, tol: float = 1e-6,
                      seed: int = 0, phase_points: int = 65,
                      norm: MeasureSpec = MeasureSpec(),
                      integration_tol: float = DEFAULT_TOL,
                      max_step: float = DEFAULT_MAX_STEP) -> Verdict:
    """Certify convergence of every sampled start to one periodic orbit.

    Certified iff (i) pairwise distances at t = N*T fall below the
    tolerance and (ii) the period-map residual |x((N+1)T) - x(NT)| does
    too.  The orbit is returned sampled over one period.
    """
    if model.period is None:
        raise QueryError("entrainment check requires a declared period")
    T = model.period
    rng = np.random.default_rng(seed)
    starts = model.domain.sample(rng, n_starts)
    t_mark = n_periods * T
    t_end = (n_periods + 1) * T
    finals = []
    residuals = []
    trajs = []
    for x0 in starts:
        traj = integrate(model, 0.0, x0, t_end, tol=integration_tol,
                         max_step=max_step)
        trajs.append(traj)
        finals.append(traj.eval(t_mark))
        residuals.append(vector_norm(traj.eval(t_end) - traj.eval(t_mark), norm))
    pairwise = max(
        (vector_norm(fa - fb, norm)
         for i, fa in enumerate(finals) for fb in finals[i + 1:]),
        default=0.0)
    residual = max(residuals)
    certified = pairwise < tol and residual < tol
    phases = np.linspace(t_mark, t_end, phase_points)
    orbit = np.atleast_2d(trajs[0].eval(phases))
    return Verdict(
        property="entrain", status=CERTIFIED if certified else FALSIFIED,
        params={"period": T, "n_starts": n_starts, "n_periods": n_periods,
                "tol": tol},
        norm=norm.describe(), estimated_rate=None, witness=None,
        samples_evaluated=n_starts, worst_margin=float(max(pairwise, residual) - tol),
        slack=tol, plan={"seed": seed, "phase_points": phase_points},
        extras={
            "pairwise_distance": float(pairwise),
            "period_map_residual": float(residual),
            "orbit_times": (phases - t_mark).tolist(),
            "orbit": orbit.tolist(),
        },
    )


# ---------------------------------------------------------------------------
# implication audit


# antecedent -> consequents; an arrow is checked only when verdicts for
# both endpoints are present
IMPLICATIONS = {
    CONTRACTION: (ST, SO, SOST, NE, WC),
    SO: (SOST, NE),
    ST: (SOST, WC, NE),
    SOST: (NE,),
    "ic": (ST,),
    "nc": (SOST,),
}


def implication_audit(verdicts) -> dict:
    """Flag certified antecedents whose consequents were falsified.

    Such a combination contradicts the implication graph and indicates a
    tooling bug or sampling artifact; it is reported, never silently
    accepted.
    """
    status = {}
    for v in verdicts:
        prev = status.get(v.property)
        if prev == CERTIFIED:
            continue
        if prev is None or v.status == CERTIFIED:
            status[v.property] = v.status
    inconsistencies = []
    checked = []
    for antecedent, consequents in IMPLICATIONS.items():
        if status.get(antecedent) != CERTIFIED:
            continue
        for consequent in consequents:
            if consequent not in status:
                continue
            checked.append([antecedent, consequent])
            if status[consequent] == FALSIFIED:
                inconsistencies.append({
                    "antecedent": antecedent, "consequent": consequent,
                    "detail": f"{antecedent} certified but {consequent} falsified",
                })
    # conditional bridge: with a short-window expansion bound, the
    # transient and overshoot forms must agree
    if status.get("swe") == CERTIFIED and status.get(SOST) == CERTIFIED \
            and status.get(SO) == FALSIFIED:
        inconsistencies.append({
            "antecedent": "swe+sost", "consequent": SO,
            "detail": "swe and sost certified but so falsified",
        })
    return {
        "schema_version": SCHEMA_VERSION,
        "statuses": status,
        "edges_checked": checked,
        "inconsistencies": inconsistencies,
        "consistent": not inconsistencies,
    }
