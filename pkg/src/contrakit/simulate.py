"""Adaptive ODE integration with dense output, plus trajectory-pair
divergence measurement and domain-invariance checking.

Integration uses an embedded Runge-Kutta pair (Dormand-Prince 5(4)) with
dense output.  Known switching times declared by the model split the
integration so the stepper never straddles a discontinuity.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp

from .domains import DomainSpec
from .errors import ParameterError, RegionError, StiffnessError
from .measures import MeasureSpec, vector_norm
from .models import SystemModel

DEFAULT_TOL = 1e-9
DEFAULT_MAX_STEP = 0.1
# Excursions beyond this slack are genuine domain exits, not roundoff.
DOMAIN_EXIT_SLACK = 1e-6


@dataclass(frozen=True, eq=False)
class Trajectory:
    """A dense-output solution of one initial-value problem."""

    model: SystemModel
    t1: float
    x1: np.ndarray
    t_end: float
    tol: float
    segments: tuple            # (t_lo, t_hi, OdeSolution) per smooth piece
    times: np.ndarray          # solver step times, strictly increasing
    states: np.ndarray         # states at the step times, shape (len(times), n)
    invariance_violation: bool
    max_excursion: float

    def eval(self, t) -> np.ndarray:
        """Interpolate the state at time(s) ``t`` within [t1, t_end]."""
        scalar = np.isscalar(t)
        ts = np.atleast_1d(np.asarray(t, dtype=float))
        if np.any(ts < self.t1 - 1e-12) or np.any(ts > self.t_end + 1e-12):
            raise ParameterError(
                f"evaluation times must lie in [{self.t1}, {self.t_end}]"
            )
        out = np.empty((len(ts), self.model.n))
        for i, tv in enumerate(ts):
            out[i] = self._eval_one(min(max(tv, self.t1), self.t_end))
        return out[0] if scalar else out

    def _eval_one(self, t):
        if not self.segments:
            return self.x1
        for lo, hi, sol in self.segments:
            if t <= hi or (lo, hi, sol) is self.segments[-1]:
                if sol is None:
                    return self.x1
                return np.atleast_1d(sol(t))
        raise AssertionError("unreachable")

    def final_state(self) -> np.ndarray:
        return self.states[-1]


def integrate(model: SystemModel, t1: float, x1, t_end: float,
              tol: float = DEFAULT_TOL, max_step: float = DEFAULT_MAX_STEP) -> Trajectory:
    """Integrate the model from (t1, x1) to t_end.

    Restarts at every declared switching time inside (t1, t_end).  Domain
    exits beyond ``DOMAIN_EXIT_SLACK`` set the invariance-violation flag
    (recorded, not fatal).  Step-size underflow raises StiffnessError with
    the last reached state.
    """
    if tol <= 0:
        raise ParameterError(f"tol must be > 0, got {tol}")
    if t_end < t1:
        raise ParameterError(f"t_end {t_end} precedes t1 {t1}")
    x1 = np.atleast_1d(np.asarray(x1, dtype=float))
    if x1.shape != (model.n,):
        raise ParameterError(f"state shape {x1.shape} does not match n={model.n}")
    if not model.domain.contains(x1, slack=1e-12):
        raise ParameterError(f"initial state {x1} outside the model domain")

    breakpoints = [t for t in sorted(model.discontinuities) if t1 < t < t_end]
    edges = [t1] + breakpoints + [t_end]

    segments = []
    times = [t1]
    states = [x1.copy()]
    current = x1.copy()
    disc = set(breakpoints) | set(model.discontinuities)
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi - lo <= 0:
            continue
        # stage evaluations at a declared switching time must take the
        # branch interior to this smooth piece, so nudge them inward
        lo_eff = lo + 1e-12 * (1.0 + abs(lo)) if lo in disc else lo
        hi_eff = hi - 1e-12 * (1.0 + abs(hi)) if hi in disc else hi

        def rhs(t, x, lo_eff=lo_eff, hi_eff=hi_eff):
            return model.f(min(max(t, lo_eff), hi_eff), x)

        res = solve_ivp(rhs, (lo, hi), current, method="RK45",
                        rtol=tol, atol=tol, max_step=max_step,
                        dense_output=True)
        if res.status == -1:
            raise StiffnessError(
                f"integration stalled at t={res.t[-1]}: {res.message}",
                t=float(res.t[-1]),
                state=res.y[:, -1].copy(),
            )
        segments.append((lo, hi, res.sol))
        times.extend(res.t[1:].tolist())
        states.extend(res.y[:, 1:].T)
        current = res.y[:, -1].copy()

    states = np.asarray(states)
    excursion = max((model.domain.excursion(s) for s in states), default=0.0)
    return Trajectory(
        model=model, t1=float(t1), x1=x1, t_end=float(t_end), tol=tol,
        segments=tuple(segments), times=np.asarray(times), states=states,
        invariance_violation=excursion > DOMAIN_EXIT_SLACK,
        max_excursion=float(excursion),
    )


@dataclass(frozen=True, eq=False)
class DivergenceSeries:
    """Distances between two trajectories, under a chosen norm."""

    t1: float
    a: np.ndarray
    b: np.ndarray
    times: np.ndarray
    distances: np.ndarray
    norm: MeasureSpec


def pair_divergence(model: SystemModel, t1: float, a, b, times,
                    norm: MeasureSpec = MeasureSpec(),
                    tol: float = DEFAULT_TOL,
                    max_step: float = DEFAULT_MAX_STEP) -> DivergenceSeries:
    """Distance |x(t, t1, a) - x(t, t1, b)| at the requested times."""
    times = np.sort(np.atleast_1d(np.asarray(times, dtype=float)))
    t_end = float(times[-1]) if len(times) else t1
    ta = integrate(model, t1, a, t_end, tol=tol, max_step=max_step)
    tb = integrate(model, t1, b, t_end, tol=tol, max_step=max_step)
    xs = np.atleast_2d(ta.eval(times))
    ys = np.atleast_2d(tb.eval(times))
    dist = np.array([vector_norm(x - y, norm) for x, y in zip(xs, ys)])
    return DivergenceSeries(
        t1=float(t1), a=np.atleast_1d(np.asarray(a, float)),
        b=np.atleast_1d(np.asarray(b, float)),
        times=times, distances=dist, norm=norm,
    )


@dataclass(frozen=True)
class InvarianceReport:
    region: DomainSpec
    n_samples: int
    horizon: float
    max_excursion: float
    worst_start: tuple


def invariance_check(model: SystemModel, region: DomainSpec, n_samples: int,
                     horizon: float, seed: int = 0,
                     tol: float = DEFAULT_TOL,
                     max_step: float = DEFAULT_MAX_STEP) -> InvarianceReport:
    """Integrate sampled starts from ``region`` and report the largest
    outward excursion observed along any trajectory."""
    if not model.domain.contains_region(region, slack=1e-9):
        raise RegionError("region is not contained in the model domain")
    rng = np.random.default_rng(seed)
    starts = region.sample(rng, n_samples, margin=0.0)
    worst = 0.0
    worst_start = starts[0]
    for x0 in starts:
        traj = integrate(model, 0.0, x0, horizon, tol=tol, max_step=max_step)
        exc = max(region.excursion(s) for s in traj.states)
        if exc > worst:
            worst, worst_start = exc, x0
    return InvarianceReport(
        region=region, n_samples=n_samples, horizon=float(horizon),
        max_excursion=float(worst), worst_start=tuple(float(v) for v in worst_start),
    )


def trajectory_to_csv(traj: Trajectory, times=None) -> str:
    """CSV rendering with header ``t,x1,...,xn`` and 17-significant-digit
    floats, diff-stable across runs."""
    if times is None:
        times = traj.times
        states = traj.states
    else:
        times = np.atleast_1d(np.asarray(times, dtype=float))
        states = np.atleast_2d(traj.eval(times))
    buf = io.StringIO()
    buf.write("t," + ",".join(f"x{i + 1}" for i in range(traj.model.n)) + "\n")
    for t, row in zip(times, states):
        cells = [format(t, ".17g")] + [format(v, ".17g") for v in row]
        buf.write(",".join(cells) + "\n")
    return buf.getvalue()
