import math
import warnings

import numpy as np
import pytest

from contrakit import (MeasureSpec, ParameterError, RegionError,
                       StiffnessError, SystemModel, box, erf_system,
                       integrate, invariance_check, linear_decay_system,
                       pair_divergence, shifted_system, trajectory_to_csv)


def test_argument_validation():
    m = linear_decay_system()
    with pytest.raises(ParameterError):
        integrate(m, 0.0, [0.5], 1.0, tol=0.0)
    with pytest.raises(ParameterError):
        integrate(m, 1.0, [0.5], 0.0)
    with pytest.raises(ParameterError):
        integrate(m, 0.0, [0.5, 0.5], 1.0)
    with pytest.raises(ParameterError):
        integrate(m, 0.0, [2.0], 1.0)


def test_zero_length_horizon():
    m = linear_decay_system()
    traj = integrate(m, 1.0, [0.5], 1.0)
    assert traj.times.tolist() == [1.0]
    assert traj.eval(1.0)[0] == 0.5
    csv = trajectory_to_csv(traj)
    assert csv.splitlines() == ["t,x1", "1,0.5"]


def test_tolerance_scaling_never_hurts():
    m = erf_system()
    errors = []
    for tol in (1e-6, 1e-8, 1e-10):
        traj = integrate(m, 0.0, [0.5], 5.0, tol=tol)
        exact = m.closed_form(5.0, 0.0, [0.5])[0]
        errors.append(abs(traj.final_state()[0] - exact))
    assert errors[1] <= errors[0] + 1e-12
    assert errors[2] <= errors[1] + 1e-12


def test_semigroup_property():
    m = erf_system()
    tol = 1e-9
    a = [0.7]
    full = integrate(m, 0.0, a, 3.0, tol=tol)
    mid = integrate(m, 0.0, a, 1.3, tol=tol).final_state()
    rest = integrate(m, 1.3, mid, 3.0, tol=tol)
    assert abs(full.final_state()[0] - rest.final_state()[0]) <= 2.0 * 1e-8


def test_dense_output_midpoints():
    m = erf_system()
    tol = 1e-9
    traj = integrate(m, 0.0, [0.6], 4.0, tol=tol)
    mids = (traj.times[:-1] + traj.times[1:]) / 2.0
    for t in mids[::5]:
        direct = integrate(m, 0.0, [0.6], float(t), tol=tol).final_state()
        assert abs(traj.eval(float(t))[0] - direct[0]) <= 10.0 * 1e-8


def test_shifted_discontinuity_handled():
    m = shifted_system()
    traj = integrate(m, 0.0, [0.9], 2.0)
    assert abs(traj.final_state()[0] - 0.9 * math.exp(-2.0)) < 1e-8
    # constant on the idle window
    for t in (0.2, 0.5, 0.99):
        assert traj.eval(t)[0] == pytest.approx(0.9, abs=1e-12)


def test_eval_rejects_out_of_range():
    m = linear_decay_system()
    traj = integrate(m, 0.0, [0.5], 1.0)
    with pytest.raises(ParameterError):
        traj.eval(2.0)


def test_stiffness_error_carries_state():
    m = SystemModel(name="blowup", n=1, f=lambda t, x: x * x,
                    jacobian=lambda t, x: np.array([[2.0 * x[0]]]),
                    domain=box([0.0], [1e30]), time_invariant=True)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with pytest.raises(StiffnessError) as exc:
            integrate(m, 0.0, [1.0], 2.0)
    assert exc.value.t == pytest.approx(1.0, abs=1e-3)
    assert exc.value.state is not None


def test_domain_exit_flagged_not_fatal():
    m = SystemModel(name="drift", n=1, f=lambda t, x: np.ones_like(x),
                    jacobian=lambda t, x: np.zeros((1, 1)),
                    domain=box([0.0], [1.0]), time_invariant=True)
    traj = integrate(m, 0.0, [0.5], 1.0)
    assert traj.invariance_violation
    assert traj.max_excursion == pytest.approx(0.5, abs=1e-6)


def test_pair_divergence_basics():
    m = linear_decay_system()
    times = [0.5, 1.0, 2.0]
    same = pair_divergence(m, 0.0, [0.3], [0.3], times)
    assert np.all(same.distances == 0.0)
    div = pair_divergence(m, 0.0, [0.5], [-0.5], times)
    for t, d in zip(div.times, div.distances):
        assert d == pytest.approx(math.exp(-t), abs=1e-8)


def test_pair_divergence_weighted_norm():
    m = linear_decay_system()
    spec = MeasureSpec("l1", np.array([[2.0]]))
    div = pair_divergence(m, 0.0, [0.5], [-0.5], [1.0], norm=spec)
    assert div.distances[0] == pytest.approx(2.0 * math.exp(-1.0), abs=1e-8)


def test_invariance_check_linear_decay():
    m = linear_decay_system()
    rep = invariance_check(m, m.domain, n_samples=10, horizon=5.0)
    assert rep.max_excursion == 0.0
    with pytest.raises(RegionError):
        invariance_check(m, box([-2.0], [0.0]), 2, 1.0)


def test_csv_format():
    m = linear_decay_system()
    traj = integrate(m, 0.0, [1.0 / 3.0], 1.0)
    text = trajectory_to_csv(traj, times=[0.0, 0.5, 1.0])
    lines = text.splitlines()
    assert lines[0] == "t,x1"
    assert len(lines) == 4
    t, x = lines[1].split(",")
    # 17 significant digits round-trip exactly
    assert float(x) == 1.0 / 3.0
    assert "0.33333333333333331" == x
