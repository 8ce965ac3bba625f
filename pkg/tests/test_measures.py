import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from contrakit import (L1, L2, LINF, DimensionError, InvalidWeightError,
                       MeasureSpec, ParameterError, induced_norm, is_metzler,
                       measure, mu_inf, mu_limit_estimate, mu_one, mu_two,
                       mu_weighted, sup_measure_over_region, vector_norm)
from contrakit.domains import box
from contrakit.models import linear_decay_system, erf_system

ALL_SPECS = [MeasureSpec(L1), MeasureSpec(L2), MeasureSpec(LINF)]


def random_matrix(rng, n, scale=10.0):
    return (rng.random((n, n)) * 2.0 - 1.0) * scale


def matrices(max_n=6, scale=5.0):
    return st.integers(1, max_n).flatmap(
        lambda n: st.lists(
            st.floats(-scale, scale, allow_nan=False), min_size=n * n,
            max_size=n * n).map(lambda v: np.array(v).reshape(n, n)))


# closed-form values


def test_mu_one_values():
    assert mu_one(np.zeros((2, 2))) == 0.0
    assert mu_one(-np.eye(3)) == -1.0
    assert mu_one(np.array([[-2.0, 1.0], [1.0, -2.0]])) == -1.0


def test_mu_inf_values():
    assert mu_inf(np.zeros((2, 2))) == 0.0
    assert mu_inf(np.diag([-1.0, -3.0])) == -1.0
    assert mu_inf(np.array([[-2.0, 3.0], [0.0, -2.0]])) == 1.0


def test_mu_two_values():
    assert mu_two(np.diag([-1.0, -3.0])) == -1.0
    assert abs(mu_two(np.array([[0.0, 1.0], [-1.0, 0.0]]))) < 1e-14


def test_mu_two_matches_limit_on_random_5x5():
    rng = np.random.default_rng(7)
    A = random_matrix(rng, 5)
    est = mu_limit_estimate(A, MeasureSpec(L2), 1e-6)
    assert abs(mu_two(A) - est) < 1e-4


def test_is_metzler():
    assert is_metzler(-np.eye(2))
    assert is_metzler(np.array([[-1.0, 2.0], [3.0, -1.0]]))
    assert not is_metzler(np.array([[-1.0, -0.1], [0.0, -1.0]]))


def test_metzler_mu_one_equals_plain_column_sums():
    # for Metzler matrices the absolute values in the column sums are
    # redundant
    rng = np.random.default_rng(3)
    for _ in range(20):
        A = np.abs(random_matrix(rng, 4))
        np.fill_diagonal(A, rng.standard_normal(4))
        assert is_metzler(A)
        assert mu_one(A) == pytest.approx(float(np.max(np.sum(A, axis=0))))


def test_non_square_rejected():
    with pytest.raises(DimensionError):
        mu_one(np.zeros((2, 3)))
    with pytest.raises(DimensionError):
        mu_two(np.array([1.0, 2.0]))


def test_nonfinite_rejected():
    with pytest.raises(DimensionError):
        mu_one(np.array([[np.nan, 0.0], [0.0, 1.0]]))


# weighted measures


def test_identity_weight_equals_base():
    rng = np.random.default_rng(11)
    A = random_matrix(rng, 4)
    for base in (L1, L2, LINF):
        assert mu_weighted(A, MeasureSpec(base, np.eye(4))) == pytest.approx(
            measure(A, MeasureSpec(base)), abs=1e-12)


def test_weighted_bio_corner_value():
    # circuit Jacobian at x_n = 0 with n=2, k=2, alphas=(1,1) and the
    # diagonal weight at eps=0.1: max{-0.1, (0.25 - 0.9)/0.9} = -0.1
    J = np.array([[-1.0, 0.25], [1.0, -1.0]])
    D = np.diag([1.0, 0.9])
    assert mu_weighted(J, MeasureSpec(L1, D)) == pytest.approx(-0.1, abs=1e-12)


def test_singular_weight_rejected():
    with pytest.raises(InvalidWeightError):
        MeasureSpec(L1, np.array([[1.0, 0.0], [0.0, 0.0]]))


def test_ill_conditioned_weight_rejected():
    with pytest.raises(InvalidWeightError):
        MeasureSpec(L1, np.diag([1.0, 1e-14]))


def test_limit_estimate_values():
    assert mu_limit_estimate(np.zeros((3, 3)), MeasureSpec(L1), 0.7) == 0.0
    assert mu_limit_estimate(-np.eye(2), MeasureSpec(L1), 0.5) == \
        pytest.approx(-1.0)
    with pytest.raises(ParameterError):
        mu_limit_estimate(np.eye(2), MeasureSpec(L1), 0.0)


def test_limit_estimate_nonincreasing_in_eps():
    rng = np.random.default_rng(5)
    A = random_matrix(rng, 4)
    for spec in ALL_SPECS:
        prev = np.inf
        for eps in (1.0, 0.1, 0.01, 0.001):
            q = mu_limit_estimate(A, spec, eps)
            assert q <= prev + 1e-9
            prev = q


# property-based invariants


@settings(max_examples=60, deadline=None)
@given(matrices())
def test_subadditivity(A):
    rng = np.random.default_rng(A.shape[0])
    B = random_matrix(rng, A.shape[0])
    for spec in ALL_SPECS:
        assert measure(A + B, spec) <= \
            measure(A, spec) + measure(B, spec) + 1e-9


@settings(max_examples=60, deadline=None)
@given(matrices(), st.floats(0.0, 100.0, allow_nan=False))
def test_positive_homogeneity(A, c):
    for spec in ALL_SPECS:
        mu = measure(A, spec)
        scaled = measure(c * A, spec)
        assert scaled == pytest.approx(c * mu, rel=1e-12, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(matrices())
def test_spectral_sandwich(A):
    alpha = float(np.max(np.real(np.linalg.eigvals(A))))
    for spec in ALL_SPECS:
        assert -measure(-A, spec) <= alpha + 1e-8
        assert alpha <= measure(A, spec) + 1e-8


def test_limit_agreement_100_random_matrices():
    # moderate entries: the finite-eps quotient for L2 carries curvature
    # of order eps * |A|^2, so huge entries would need a smaller eps
    rng = np.random.default_rng(2024)
    D = np.diag([1.0, 0.7, 2.0, 0.5, 1.3, 0.9, 1.1, 0.8])
    for _ in range(100):
        n = int(rng.integers(1, 9))
        A = random_matrix(rng, n, scale=3.0)
        specs = ALL_SPECS + [MeasureSpec(L1, D[:n, :n])]
        for spec in specs:
            est = mu_limit_estimate(A, spec, 1e-6)
            assert abs(measure(A, spec) - est) < 1e-4


def test_limit_agreement_l1_large_entries():
    # the L1 quotient is exactly linear in eps once eps|A_jj| < 1, so it
    # matches the closed form even for entries in [-10, 10]
    rng = np.random.default_rng(77)
    for _ in range(50):
        A = random_matrix(rng, int(rng.integers(1, 9)), scale=10.0)
        est = mu_limit_estimate(A, MeasureSpec(L1), 1e-6)
        assert abs(mu_one(A) - est) < 1e-4


def test_vector_and_induced_norm_consistency():
    rng = np.random.default_rng(9)
    A = random_matrix(rng, 4)
    for spec in ALL_SPECS + [MeasureSpec(L1, np.diag([1.0, 2.0, 0.5, 1.5]))]:
        for _ in range(10):
            z = rng.standard_normal(4)
            assert vector_norm(A @ z, spec) <= \
                induced_norm(A, spec) * vector_norm(z, spec) + 1e-9


# region bounds


def test_sup_measure_linear_decay():
    model = linear_decay_system()
    bound = sup_measure_over_region(model, model.domain, MeasureSpec(L1))
    assert bound.sup_measure == pytest.approx(-1.0)
    assert model.domain.contains(np.asarray(bound.argmax_point))


def test_sup_measure_erf_includes_zero_time():
    model = erf_system()
    bound = sup_measure_over_region(
        model, box([-0.9], [0.9]), MeasureSpec(L1), t_samples=(0.0, 1.0, 2.0))
    assert bound.sup_measure == pytest.approx(0.0, abs=1e-12)
    assert bound.argmax_time == 0.0


def test_sup_measure_thread_count_invariance(monkeypatch):
    model = linear_decay_system()

    def run():
        return sup_measure_over_region(model, model.domain, MeasureSpec(L2),
                                       grid=21)
    monkeypatch.setenv("CONTRAKIT_THREADS", "1")
    one = run()
    monkeypatch.setenv("CONTRAKIT_THREADS", "4")
    four = run()
    assert one.sup_measure == four.sup_measure
    assert one.argmax_point == four.argmax_point
