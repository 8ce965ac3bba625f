"""Figure rendering for scenario report bundles.

Reports are JSON-first; these helpers additionally render the headline
evidence of a bundle to PNG files next to the delimited output: the
divergence-versus-bound curve for the binding sample of each property
verdict, and the converged orbit for entrainment verdicts.
"""

from __future__ import annotations

import math
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .measures import L1, L2, LINF, MeasureSpec
from .models import SystemModel, model_from_spec
from .simulate import pair_divergence

_RATE_PROPERTIES = ("contraction", "st", "so", "sost", "ne", "wc")


def _norm_from_describe(rec: dict) -> MeasureSpec:
    base = rec.get("base", L1)
    weight = rec.get("weight")
    return MeasureSpec(base, np.asarray(weight) if weight is not None else None)


def _bound_curve(params: dict, ts, t1, d0):
    tau = params.get("tau", 0.0)
    eps = params.get("eps")
    rate = params.get("c", params.get("ell", 0.0)) or 0.0
    amp = (1.0 + eps) if eps is not None else 1.0
    out = np.full_like(ts, np.nan)
    mask = ts >= t1 + tau
    out[mask] = amp * d0 * np.exp(-rate * (ts[mask] - tau - t1))
    return out


def render_divergence_figure(model: SystemModel, verdict: dict,
                             path: str) -> bool:
    """Plot the binding sample's divergence against the claimed bound."""
    sample = verdict.get("extras", {}).get("binding_sample") \
        or verdict.get("witness")
    if not sample or verdict["property"] not in _RATE_PROPERTIES:
        return False
    t1 = sample["t1"]
    t_end = max(sample["eval_time"], t1 + 1e-3)
    ts = np.linspace(t1, t_end, 200)
    norm = _norm_from_describe(verdict.get("norm", {}))
    div = pair_divergence(model, t1, sample["a"], sample["b"], ts, norm=norm)
    bound = _bound_curve(verdict.get("params", {}), ts, t1, sample["d0"])

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(div.times, div.distances, label="|x(t,a) - x(t,b)|")
    if np.any(np.isfinite(bound)):
        ax.plot(ts, bound, "--", label="claimed bound")
    ax.axvline(sample["eval_time"], color="gray", lw=0.6)
    ax.set_xlabel("t")
    ax.set_ylabel("distance")
    ax.set_title(f"{verdict['property']} [{verdict['status']}]")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return True


def render_orbit_figure(verdict: dict, path: str) -> bool:
    """Plot the converged periodic orbit carried by an entrainment verdict."""
    extras = verdict.get("extras", {})
    if "orbit" not in extras:
        return False
    ts = np.asarray(extras["orbit_times"])
    orbit = np.atleast_2d(np.asarray(extras["orbit"]))
    fig, ax = plt.subplots(figsize=(6, 4))
    for i in range(orbit.shape[1]):
        ax.plot(ts, orbit[:, i], label=f"x{i + 1}")
    ax.set_xlabel("phase within one period")
    ax.set_ylabel("state")
    ax.set_title(f"entrained orbit [{verdict['status']}]")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return True


def render_bundle_figures(bundle: dict, out_dir: str) -> list:
    """Render figures for one scenario bundle; returns the written paths."""
    name = bundle["scenario"]
    model = model_from_spec(bundle["model"], location=f"{name}.model")
    paths = []
    seen = {}
    for verdict in bundle["verdicts"]:
        prop = verdict["property"]
        seen[prop] = seen.get(prop, 0) + 1
        stem = f"{name}-{prop}" + (f"-{seen[prop]}" if seen[prop] > 1 else "")
        path = os.path.join(out_dir, stem + ".png")
        if prop == "entrain":
            if render_orbit_figure(verdict, path):
                paths.append(path)
        elif render_divergence_figure(model, verdict, path):
            paths.append(path)
    return paths
