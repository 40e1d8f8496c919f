import math
from fractions import Fraction

import numpy as np
import pytest
from scipy.special import rgamma

from rmtlab import formulas as F
from rmtlab.contour import ContourInfeasibleError
from rmtlab.oracle import exact_joint_moment
from rmtlab.process import ProcessSchedule


def test_single_particle_single_step_mean_is_half_for_any_theta():
    # Beta(theta*alpha, theta*M) mean with alpha = M = 1
    for theta in (0.5, 1.0, 2.0, 7.3):
        sch = ProcessSchedule.constant(1, 1, 1, 1)
        v = F.finite_moments_general_beta((1,), (1,), sch, theta)
        assert abs(v - 0.5) < 1e-9


def test_two_particle_mean():
    sch = ProcessSchedule.constant(2, 1, 2, 1)
    v = F.finite_moments_general_beta((1,), (1,), sch, 1.0)
    assert abs(v - 1.0) < 1e-9


def test_uniform_product_mean():
    sch = ProcessSchedule.constant(1, 1, 1, 2)
    v = F.finite_moments_general_beta((1,), (2,), sch, 1.0)
    assert abs(v - 0.25) < 1e-9


@pytest.mark.parametrize(
    "ks,ts",
    [((2,), (2,)), ((1, 1), (2, 1)), ((2, 1), (3, 1)), ((1, 2), (3, 2)), ((2, 2), (3, 2))],
)
def test_quadrature_matches_exact_oracle(ks, ts):
    theta = Fraction(2, 3)
    sch = ProcessSchedule.constant(2, Fraction(3, 2), 2, 3)
    v = F.finite_moments_general_beta(ks, ts, sch, theta)
    ex = float(exact_joint_moment(ks, ts, sch, theta))
    assert abs(v - ex) <= 1e-9 * abs(ex)


def test_batch_agrees_with_single_calls():
    sch = ProcessSchedule.constant(2, 1, 2, 3)
    pairs = [(t1, t2) for t1 in (1, 2, 3) for t2 in (1, 2, 3) if t1 >= t2]
    vals = F.finite_moments_general_beta_batch((2, 2), pairs, sch, 0.5)
    for ts, v in vals.items():
        single = F.finite_moments_general_beta((2, 2), ts, sch, 0.5)
        assert abs(v - single) <= 1e-9 * abs(single)


def test_observable_order_does_not_matter():
    sch = ProcessSchedule.constant(2, Fraction(3, 2), 1, 3)
    a = F.finite_moments_general_beta((2, 1), (1, 3), sch, 1.5)
    b = F.finite_moments_general_beta((1, 2), (3, 1), sch, 1.5)
    assert abs(a - b) <= 1e-10 * abs(a)


def test_infeasible_grid_cell_raises_documented_error():
    sch = ProcessSchedule.constant(1, 1, 1, 1)
    with pytest.raises(ContourInfeasibleError):
        F.finite_moments_general_beta((2, 2), (1, 1), sch, 0.5)


def test_invalid_requests_raise():
    sch = ProcessSchedule.constant(1, 1, 1, 2)
    with pytest.raises(ValueError):
        F.finite_moments_general_beta((1,), (1,), sch, -1.0)
    with pytest.raises(ValueError):
        F.finite_moments_general_beta((0,), (1,), sch, 1.0)
    with pytest.raises(ValueError):
        F.finite_moments_general_beta((1,), (5,), sch, 1.0)


@pytest.mark.parametrize("c", [0.3, 1.0, 2.5])
@pytest.mark.parametrize("t", [1, 2, 3])
def test_beta2_matches_gamma_ratio_closed_form(c, t):
    sch = ProcessSchedule.constant(1, 1.25, 2, 3)
    v = F.finite_moments_beta2((c,), (t,), sch)
    cf = F.beta2_single_particle_closed_form(c, t, sch)
    assert abs(v - cf) <= 1e-10 * abs(cf)


def test_beta2_rejects_real_m():
    sch = ProcessSchedule.constant(1, 1.0, 1.5, 1)
    with pytest.raises(ValueError):
        F.finite_moments_beta2((0.5,), (1,), sch)


def test_theta_one_routes_agree_single_observable():
    sch = ProcessSchedule.constant(2, 1.5, 2, 2)
    for k, t in ((1, 1), (2, 2)):
        a = F.finite_moments_general_beta((k,), (t,), sch, 1.0)
        b = F.finite_moments_beta2((float(k),), (t,), sch)
        assert abs(a - b) <= 1e-8 * abs(a)


def test_theta_one_routes_agree_joint():
    sch = ProcessSchedule.constant(2, 1.5, 2, 2)
    a = F.finite_moments_general_beta((1, 1), (2, 1), sch, 1.0)
    b = F.finite_moments_beta2((1.0, 1.0), (2, 1), sch)
    assert abs(a - b) <= 1e-8 * abs(a)


@pytest.mark.parametrize("c,t", [(0.3, 1), (1.0, 2), (2.5, 3)])
def test_ginibre_single_particle(c, t):
    v = F.ginibre_moments_beta2((c,), (t,), 1, rescale=False)
    cf = F.ginibre_single_particle_closed_form(c, t)
    assert abs(v - cf) <= 1e-10 * abs(cf)


def test_ginibre_rescale_divides_by_growth_scale():
    n, c, t = 3, 0.7, 2
    raw = F.ginibre_moments_beta2((c,), (t,), n, rescale=False)
    scaled = F.ginibre_moments_beta2((c,), (t,), n, rescale=True)
    assert abs(scaled - raw * n ** (-c * (t + 1))) <= 1e-10 * abs(scaled)


def test_interpolating_laplace_matches_residue_series():
    # independent re-derivation: sum_k (-1)^k/(k! Gamma(c-k)) x^k collapses to
    # (1-x)^(c-1)/Gamma(c); compare the closed form against the raw series
    for c, t_hat in ((0.3, 1.0), (0.8, 0.5), (1.7, 2.0)):
        x = math.exp(-t_hat * c)
        series = sum(
            (-1.0) ** k / math.factorial(k) * rgamma(c - k) * x**k for k in range(150)
        )
        expected = math.exp(-t_hat * c * (1.0 - c) / 2.0) * series / c
        got = F.interpolating_laplace(c, t_hat)
        assert abs(got - expected) <= 1e-12 * abs(expected)


def test_interpolating_laplace_joint_guard():
    with pytest.raises(ValueError):
        F.interpolating_laplace([1.0, 0.5], [2.0, 1.0])


def test_interpolating_laplace_joint_runs_for_generic_exponents():
    v = F.interpolating_laplace([0.7, 0.3], [2.0, 1.5])
    assert np.isfinite(v)


@pytest.mark.parametrize("theta", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("gamma", [0.3, 1.0, 2.5])
def test_local_first_moment_is_exactly_one(theta, gamma):
    v = F.local_moment_general_beta((1,), (gamma,), theta)
    assert abs(v - 1.0) < 1e-9


def test_local_second_moment_reduces_to_laplace_at_theta_one():
    for gamma in (0.8, 1.5):
        v = F.local_moment_general_beta((2,), (gamma,), 1.0)
        ref = F.interpolating_laplace(2.0, gamma)
        assert abs(v - ref) <= 1e-7 * abs(ref)


def test_limit_shape_first_moments():
    assert abs(F.limit_shape_moment(1, 1, (1.0,), (1.0,)) - 2.0 / 3.0) < 1e-10
    assert abs(F.limit_shape_moment(1, 1, (1.0,), (2.0,)) - 0.5) < 1e-10
    # M-hat = 0 step multiplies by the identity measure
    assert abs(F.limit_shape_moment(1, 1, (1.0,), (0.0,)) - 1.0) < 1e-10
    assert abs(F.limit_shape_moment(2, 1, (1.0,), (0.0,)) - 1.0) < 1e-10


def test_limit_shape_second_moment_single_step():
    # residue of (v(v-1)/((v+1)(v-2)))^2 at -1 worked out by hand
    assert abs(F.limit_shape_moment(2, 1, (1.0,), (1.0,)) - 14.0 / 27.0) < 1e-10


def test_limit_shape_free_multiplicative_convolution_identities():
    a, m = 1.0, 1.0
    m1 = F.limit_shape_moment(1, 1, (a,), (m,))
    m2 = F.limit_shape_moment(2, 1, (a,), (m,))
    m1_two = F.limit_shape_moment(1, 2, (a, a), (m, m))
    m2_two = F.limit_shape_moment(2, 2, (a, a), (m, m))
    # first moments multiply under free multiplicative convolution
    assert abs(m1_two - m1 * m1) < 1e-10
    # second-moment mixing rule for identical factors
    assert abs(m2_two - (2.0 * m2 * m1**2 - m1**4)) < 1e-10


def test_global_covariance_value_and_beta_scaling():
    cov = F.global_covariance(1, 1, 1, 1, (1.0,), (1.0,), 1.0)
    assert abs(cov - 4.0 / 81.0) < 1e-10
    cov_half = F.global_covariance(1, 1, 1, 1, (1.0,), (1.0,), 0.5)
    assert abs(cov_half / cov - 2.0) < 1e-9


def test_global_covariance_symmetric_in_arguments():
    args = ((1.0, 1.0), (1.0, 2.0))
    a = F.global_covariance(1, 2, 2, 1, *args, 1.0)
    b = F.global_covariance(2, 1, 1, 2, *args, 1.0)
    assert abs(a - b) <= 1e-10 * max(abs(a), 1.0)


def test_gamma_schedule_constant_steps():
    sch = ProcessSchedule.constant(1, 1, 1, 4)
    # each step contributes 1/1 - 1/2
    assert abs(F.gamma_schedule(sch, 2.0) - 1.0) < 1e-12
    assert abs(F.gamma_schedule(sch, 3.0) - 1.5) < 1e-12
    with pytest.raises(ValueError):
        F.gamma_schedule(sch, 5.0)


def test_edge_scale_factor_constant_steps():
    sch = ProcessSchedule.constant(1, 1, 1, 3)
    assert abs(F.edge_scale_factor(sch, 1) - 2.0) < 1e-12
    assert abs(F.edge_scale_factor(sch, 2) - 4.0) < 1e-12
