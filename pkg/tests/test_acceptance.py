"""End-to-end acceptance suite.

Each test covers one acceptance criterion, prints a single PASS line,
and stays under a minute.  Scenario bundles are cached so every scenario
runs at most once per session.
"""

import math

import numpy as np
import pytest

from contrakit import (L1, L2, LINF, BioParams, MeasureSpec, PropertyQuery,
                       SamplePlan, SystemModel, bio_circuit, bio_equilibrium,
                       bio_jacobian, bio_measure_spec, bio_omega_r, box,
                       check_br, check_property, counterexample_system,
                       erf_system, integrate, measure, mu_limit_estimate,
                       positive_orthant_box, replay_witness, shifted_system,
                       sup_measure_over_region)
from contrakit.scenarios import (SCENARIO_NAMES, _plan_from_json,
                                 load_scenario, run_scenario)
from contrakit.verify import SOST, Witness

_BUNDLES = {}


def bundle(name):
    if name not in _BUNDLES:
        _BUNDLES[name] = run_scenario(name)
    return _BUNDLES[name]


def verdicts(name, prop):
    return [v for v in bundle(name)["verdicts"] if v["property"] == prop]


def ok(n, detail):
    print(f"ACCEPTANCE {n}: PASS ({detail})")


def test_acceptance_01_measure_limit_agreement():
    rng = np.random.default_rng(1)
    D = np.diag([1.0, 0.7, 2.0, 0.5, 1.3, 0.9, 1.1, 0.8])
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 9))
        A = (rng.random((n, n)) * 2.0 - 1.0) * 3.0
        B = (rng.random((n, n)) * 2.0 - 1.0) * 3.0
        for spec in (MeasureSpec(L1), MeasureSpec(L2), MeasureSpec(LINF),
                     MeasureSpec(L1, D[:n, :n])):
            gap = abs(measure(A, spec) - mu_limit_estimate(A, spec, 1e-6))
            worst = max(worst, gap)
            assert gap < 1e-4
            assert measure(A + B, spec) <= \
                measure(A, spec) + measure(B, spec) + 1e-9
            assert measure(2.5 * A, spec) == \
                pytest.approx(2.5 * measure(A, spec), abs=1e-9)
    ok(1, f"100 matrices, worst limit gap {worst:.2e}")


def test_acceptance_02_closed_form_oracles():
    worst = 0.0
    for factory in (erf_system, counterexample_system, shifted_system):
        model = factory()
        rng = np.random.default_rng(2)
        for _ in range(50):
            t1 = float(rng.random() * 10.0)
            a = model.domain.sample(rng, 1)[0]
            t_end = min(t1 + 10.0, 20.0)
            traj = integrate(model, t1, a, t_end)
            for t in np.linspace(t1, t_end, 5):
                exact = np.atleast_1d(model.closed_form(float(t), t1, a))
                gap = float(np.max(np.abs(traj.eval(float(t)) - exact)))
                worst = max(worst, gap)
                assert gap < 1e-7
    ok(2, f"3 systems x 50 starts, worst deviation {worst:.2e}")


def test_acceptance_03_transient_rates_certified():
    rate = lambda tau: (1.0 - math.exp(-tau * tau)) / 2.0
    for tau in (0.25, 1.0, 2.0):
        vs = [v for v in verdicts("erf-drift", "st")
              if v["params"].get("tau") == tau and "ell" in v["params"]]
        assert vs, f"no rate check at tau={tau}"
        for v in vs:
            assert v["status"] == "CERTIFIED"
            assert v["params"]["ell"] == pytest.approx(rate(tau), abs=1e-12)
    est = [v for v in verdicts("erf-drift", "st")
           if v["params"].get("tau") == 1.0 and "ell" not in v["params"]]
    assert est and est[0]["status"] == "CERTIFIED"
    assert est[0]["rate"] >= rate(1.0)
    model = erf_system()
    plan = SamplePlan(n_pairs=4, t1_grid=(0.0, 1.0, 5.0),
                      t2_offsets=(0.1, 1.0, 10.0), refinement_rounds=0)
    for tau in (0.25, 2.0):
        v = check_property(model, PropertyQuery("st", tau=tau, plan=plan))
        assert v.certified and v.estimated_rate >= rate(tau)
    ok(3, "st certified at tau 0.25/1/2; estimates dominate the rates")


def test_acceptance_04_no_uniform_rate_witnessed():
    falsified = {}
    for v in verdicts("draining-rate", "sost"):
        assert v["status"] == "FALSIFIED"
        w = v["witness"]
        assert w is not None and w["margin"] > w["slack"]
        falsified[v["params"]["ell"]] = v
    assert set(falsified) == {0.01, 0.1, 1.0}
    record = load_scenario("draining-rate")
    plan = _plan_from_json(record["plan"], "plan")
    v = falsified[0.01]
    w = v["witness"]
    witness = Witness(t1=w["t1"], t2=w["t2"], eval_time=w["eval_time"],
                      a=tuple(w["a"]), b=tuple(w["b"]), d0=w["d0"],
                      d=w["d"], margin=w["margin"], slack=w["slack"])
    q = PropertyQuery(SOST, tau=v["params"]["tau"], eps=v["params"]["eps"],
                      ell=v["params"]["ell"], plan=plan)
    model = counterexample_system()
    replayed = replay_witness(model, q, witness)
    assert replayed == pytest.approx(witness.margin, rel=0.1)
    worst_t2 = max(fv["witness"]["t2"] for fv in falsified.values())
    ok(4, f"falsified for ell 0.01/0.1/1, replay agrees, "
          f"largest witness t2 {worst_t2:g}")


def test_acceptance_05_overshoot_certified_strictness_falsified():
    want = [0.1, math.e - 1.0, 5.0]
    seen = set()
    for v in verdicts("idle-then-decay", "so"):
        assert v["status"] == "CERTIFIED"
        eps = v["params"]["eps"]
        assert v["params"]["ell"] == pytest.approx(
            min(math.log(1.0 + eps), 1.0), abs=1e-12)
        seen.add(eps)
    assert sorted(seen) == pytest.approx(want)
    wc = [v for v in verdicts("idle-then-decay", "wc")
          if v["params"].get("window") == [0.0, 1.0]]
    assert wc and wc[0]["status"] == "FALSIFIED"
    assert wc[0]["witness"]["margin"] == pytest.approx(0.0, abs=1e-9)
    ok(5, "so certified for the three eps; strict shrinkage on the idle "
          "window falsified with margin 0")


def test_acceptance_06_circuit_contractive_case():
    p = BioParams(2, (1.0, 1.0), 2.0)
    eps = 0.25
    model = bio_circuit(p)
    bound = sup_measure_over_region(model, bio_omega_r(p, 2.0),
                                    bio_measure_spec(p, eps), grid=21)
    assert bound.sup_measure <= -eps / 2.0 + 1e-12
    con = [v for v in verdicts("bio-contractive", "contraction")
           if v["params"].get("c") is not None]
    assert con and all(v["status"] == "CERTIFIED" for v in con)
    e = bio_equilibrium(p)
    golden = (math.sqrt(5.0) - 1.0) / 2.0
    assert np.max(np.abs(e - golden)) < 1e-10
    eq = verdicts("bio-contractive", "equilibrium")
    assert eq and eq[0]["status"] == "CERTIFIED"
    assert eq[0]["extras"]["max_final_distance"] < 1e-6
    ok(6, f"sup measure {bound.sup_measure:.4f} <= -eps/2, contraction "
          f"certified, trajectories reach the equilibrium")


def test_acceptance_07_circuit_boundary_case():
    con = verdicts("bio-boundary", "contraction")
    assert len(con) >= 2
    assert all(v["status"] == "FALSIFIED" for v in con)
    p = BioParams(2, (0.5, 0.5), 2.0)
    for x1 in np.linspace(0.0, 2.0, 9):
        assert abs(np.linalg.det(bio_jacobian(p, [float(x1), 0.0]))) < 1e-12
    nc = verdicts("bio-boundary", "nc")
    assert nc and nc[0]["status"] == "CERTIFIED"
    sost = verdicts("bio-boundary", "sost")
    assert sost and sost[0]["status"] == "CERTIFIED"
    assert sost[0]["params"].get("derived_from") == "nc"
    so = verdicts("bio-boundary", "so")
    assert so and so[0]["status"] == "CERTIFIED"
    st = verdicts("bio-boundary", "st")
    assert st and st[0]["status"] == "CERTIFIED"
    assert st[0]["params"].get("derived_from") == "ic"
    ok(7, "uniform contraction falsified (singular boundary Jacobian), "
          "nested pipeline recovers sost, so and st")


def test_acceptance_08_slab_velocity_floor():
    p = BioParams(2, (1.0, 1.0), 2.0)
    Delta = 0.05
    br = verdicts("bio-contractive", "br")
    assert br and br[0]["status"] == "CERTIFIED"
    k_hat = br[0]["extras"]["K_hat"]
    floor = 1.0 / p.k - p.alphas[0] * Delta - 1e-9
    assert k_hat >= floor
    decay = SystemModel(
        name="decay", n=1, f=lambda t, x: -x,
        jacobian=lambda t, x: np.array([[-1.0]]),
        domain=positive_orthant_box([1.0]), time_invariant=True)
    assert not check_br(decay, delta=0.1, Delta=0.1).certified
    ok(8, f"slab minimum {k_hat:.4f} >= {floor:.4f}; pure decay falsified")


def test_acceptance_09_entrainment():
    v = verdicts("entrain-linear", "entrain")[0]
    assert v["status"] == "CERTIFIED"
    period = v["params"]["period"]
    mark = v["params"]["n_periods"] * period
    times = np.asarray(v["extras"]["orbit_times"])
    orbit = np.asarray(v["extras"]["orbit"])[:, 0]
    exact = (np.sin(mark + times) - np.cos(mark + times)) / 2.0
    gap = float(np.max(np.abs(orbit - exact)))
    assert gap < 1e-6
    vb = verdicts("entrain-bio", "entrain")[0]
    assert vb["status"] == "CERTIFIED"
    assert vb["extras"]["period_map_residual"] < 1e-6
    ok(9, f"forced linear orbit matches closed form to {gap:.2e}; "
          f"periodic circuit entrains")


def test_acceptance_10_implication_audit_clean():
    inconsistencies = []
    for name in SCENARIO_NAMES:
        b = bundle(name)
        inconsistencies.extend(
            dict(item, scenario=name)
            for item in b["audit"]["inconsistencies"])
    assert inconsistencies == []
    # the deliberate non-implication: overshoot certified while strict
    # shrinkage on the idle window fails, and the audit accepts it
    so = verdicts("idle-then-decay", "so")
    wc = [v for v in verdicts("idle-then-decay", "wc")
          if v["params"].get("window") == [0.0, 1.0]]
    assert all(v["status"] == "CERTIFIED" for v in so)
    assert wc[0]["status"] == "FALSIFIED"
    assert bundle("idle-then-decay")["audit"]["consistent"]
    ok(10, "all scenario audits consistent, windowed non-implication intact")
