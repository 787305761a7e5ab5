#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
#  test_rcpe_core.py
#
#  Copyright © 2019-2020 The retrocost developers
#
#  This file is part of retrocost.
#
#  retrocost is free software; you can redistribute it and/or modify
#  it under the terms of the GNU General Public License as published by
#  the Free Software Foundation; either version 3 of the License, or
#  (at your option) any later version.
#
#  retrocost is distributed in the hope that it will be useful,
#  but WITHOUT ANY WARRANTY; without even the implied warranty of
#  MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
#  GNU General Public License for more details.
#
#  You should have received a copy of the GNU General Public License
#  along with retrocost; If not, see <http://www.gnu.org/licenses/>.

""" Estimator building blocks, RLS update and estimator step """

import numpy as np
import pytest
import scipy.linalg

from retrocost.estimation import rcpe_core
from retrocost.estimation.rcpe_core import (
    RcpeConfig,
    RcpeEstimator,
    RetrospectiveCost,
    apply_output_map,
    build_regressor,
    compute_pre_estimate,
    estimator_step,
    initial_state,
    make_permutation,
    rls_step,
    stack_history,
    subspace_residual,
    update_integrator)
from retrocost.harness.closed_loop import run_closed_loop
from retrocost.misc.extra import (
    ConfigurationError,
    DimensionError,
    DivergenceError,
    InvalidPermutationError,
    NumericalFailure)


def rows(*indices, size=3):
    eye = np.eye(size)
    return tuple(eye[i:i + 1] for i in indices)


def test_identity_permutation():
    np.testing.assert_array_equal(make_permutation((1, 2, 3)).matrix, np.eye(3))


def test_swap_permutation():
    np.testing.assert_array_equal(make_permutation((2, 1)).matrix, [[0, 1], [1, 0]])


def test_permutation_routes_components():
    o_p = make_permutation((2, 1, 3))
    nu_abs = np.array([0.8, 0.5, 1.0])
    np.testing.assert_array_equal(o_p.apply(nu_abs), [0.5, 0.8, 1.0])
    np.testing.assert_array_equal(o_p.matrix @ nu_abs, o_p.apply(nu_abs))


@pytest.mark.parametrize('p', [(1, 1, 3), (0, 1, 2), (1, 2, 4), ()])
def test_invalid_permutation(p):
    with pytest.raises(InvalidPermutationError):
        make_permutation(p)


def test_permutation_matrices_are_orthogonal():
    for p in [(1, 2, 3), (2, 1, 3), (3, 1, 2), (2, 3, 1)]:
        matrix = make_permutation(p).matrix
        np.testing.assert_array_equal(matrix.T @ matrix, np.eye(3))
        assert np.all(matrix.sum(axis=0) == 1) and np.all(matrix.sum(axis=1) == 1)


def test_update_integrator():
    np.testing.assert_array_equal(update_integrator([0.0], [0.0]), [0.0])
    np.testing.assert_array_equal(update_integrator([1.5], [-0.5]), [1.0])
    phi = np.zeros(1)
    for z in (1.0, 1.0, 1.0):
        phi = update_integrator(phi, [z])
    np.testing.assert_array_equal(phi, [3.0])
    with pytest.raises(DimensionError):
        update_integrator([0.0, 1.0], [1.0])


def test_build_regressor():
    np.testing.assert_array_equal(build_regressor([3.0], 2), [[3, 0], [0, 3]])
    np.testing.assert_array_equal(build_regressor([1.0, 2.0], 2), [[1, 2, 0, 0], [0, 0, 1, 2]])


def test_regressor_vec_identity(rng):
    gain = rng.standard_normal((2, 3))
    phi = rng.standard_normal(3)
    theta = gain.reshape(-1)
    np.testing.assert_allclose(build_regressor(phi, 2) @ theta, gain @ phi, rtol=0, atol=1e-14)
    np.testing.assert_array_equal(rcpe_core.gain_from_theta(theta, 2, 3), gain)


def test_compute_pre_estimate(rng):
    np.testing.assert_array_equal(compute_pre_estimate(build_regressor([2.0], 2), np.zeros(2)),
                                  [0.0, 0.0])
    np.testing.assert_allclose(compute_pre_estimate(build_regressor([2.0], 2), [0.5, -0.3]),
                               [1.0, -0.6])
    gain = rng.standard_normal((3, 2))
    phi = rng.standard_normal(2)
    np.testing.assert_allclose(compute_pre_estimate(build_regressor(phi, 3), gain.reshape(-1)),
                               gain @ phi, rtol=0, atol=1e-14)


def test_output_map_offset():
    cfg = RcpeConfig(filter_coeffs=(np.array([[1.0, 0.0]]), np.array([[0.0, 1.0]])),
                     permutation=(2, 1), mu_bar=[1.0, 0.01])
    np.testing.assert_array_equal(apply_output_map(np.zeros(2), cfg), [1.0, 0.01])


def test_output_map_permutation():
    cfg = RcpeConfig(filter_coeffs=rows(0, 1, 2), permutation=(2, 1, 3))
    np.testing.assert_array_equal(apply_output_map([-0.8, 0.5, 1.0], cfg), [0.5, 0.8, 1.0])


def test_output_map_scaling():
    cfg = RcpeConfig(filter_coeffs=rows(0, 1, 2), scaling=np.diag([1.0, 1.0, 1000.0]))
    np.testing.assert_allclose(apply_output_map([0.0, 0.0, 3e-4], cfg), [0.0, 0.0, 0.3])


def test_stack_history_ordering():
    cfg = RcpeConfig(filter_coeffs=rows(0, 1), permutation=(1, 2, 3))
    state = initial_state(cfg)
    phibar, vbar = stack_history(state)
    assert not phibar.any() and not vbar.any()

    phi_a = np.full((3, 3), 1.0)
    phi_b = np.full((3, 3), 2.0)
    state = state.replace(phi_history=np.stack((phi_a, phi_b)),
                          nu_history=np.array([[1.0, 1.0, 1.0], [2.0, 2.0, 2.0]]))
    phibar, vbar = stack_history(state)
    np.testing.assert_array_equal(phibar, np.vstack((phi_a, phi_b)))
    np.testing.assert_array_equal(vbar, [1, 1, 1, 2, 2, 2])


def test_stack_history_replays_run(rng):
    cfg = RcpeConfig(filter_coeffs=rows(0, 1, 2), lam=0.99, beta=10.0)
    state = initial_state(cfg)
    regressors = []
    for _ in range(5):
        regressors.append(build_regressor(state.phi, 3))
        state, _mu_hat = estimator_step(state, rng.standard_normal(1), cfg)
    phibar, _vbar = stack_history(state)
    np.testing.assert_array_equal(phibar, np.vstack(regressors[::-1][:3]))


def test_retrospective_error(rng):
    n_mat = np.hstack(rows(0, 1))
    z = np.array([0.7])
    theta = rng.standard_normal(3)
    phibar = rng.standard_normal((6, 3))
    vbar = phibar @ theta
    np.testing.assert_allclose(rcpe_core.retrospective_error(z, theta, phibar, vbar, n_mat), z)
    np.testing.assert_array_equal(
        rcpe_core.retrospective_error(z, theta, np.zeros((6, 3)), np.zeros(6), n_mat), z)


def test_retrospective_error_tap_sum(rng):
    coeffs = [rng.standard_normal((2, 3)) for _ in range(3)]
    phis = [rng.standard_normal((3, 6)) for _ in range(3)]
    nus = [rng.standard_normal(3) for _ in range(3)]
    theta = rng.standard_normal(6)
    z = rng.standard_normal(2)
    expected = z + sum(n_i @ (phi_i @ theta - nu_i) for n_i, phi_i, nu_i in zip(coeffs, phis, nus))
    result = rcpe_core.retrospective_error(z, theta, np.vstack(phis), np.concatenate(nus),
                                           np.hstack(coeffs))
    np.testing.assert_allclose(result, expected, rtol=0, atol=1e-13)


def test_rls_step_without_regressor_inflates_p():
    cfg = RcpeConfig(filter_coeffs=rows(0, 1, 2), lam=0.9, beta=2.0)
    state = initial_state(cfg).replace(theta=np.array([0.1, -0.2, 0.3]))
    new = rls_step(state, np.array([0.5]), cfg)
    np.testing.assert_array_equal(new.theta, state.theta)
    np.testing.assert_allclose(new.P, state.P / 0.9)


def test_rls_step_scalar_textbook():
    beta, theta0, phi, nu, z = 2.0, 0.3, 1.5, 0.4, 0.1
    cfg = RcpeConfig(filter_coeffs=(np.array([[1.0]]),), lam=1.0, beta=beta)
    state = initial_state(cfg).replace(theta=np.array([theta0]),
                                       phi_history=np.array([[[phi]]]),
                                       nu_history=np.array([[nu]]))
    new = rls_step(state, np.array([z]), cfg)

    p0 = 1.0 / beta
    gain = p0 * phi / (1.0 + phi * p0 * phi)
    target = nu - z
    np.testing.assert_allclose(new.theta, [theta0 + gain * (target - phi * theta0)], rtol=1e-12)
    np.testing.assert_allclose(new.P, [[p0 - gain * phi * p0]], rtol=1e-12)


def _random_rls_run(rng, lam):
    l_mu, l_y, n_f = (int(n) for n in rng.integers(1, 4, size=3))
    steps = int(rng.integers(1, 101))
    cfg = RcpeConfig(filter_coeffs=tuple(rng.standard_normal((l_y, l_mu)) for _ in range(n_f)),
                     lam=lam, beta=float(rng.uniform(0.5, 5.0)))
    state = initial_state(cfg)
    cost = RetrospectiveCost(cfg)
    for _ in range(steps):
        state = state.replace(phi_history=rng.standard_normal((n_f, l_mu, cfg.l_theta)),
                              nu_history=rng.standard_normal((n_f, l_mu)))
        z = rng.standard_normal(l_y)
        phibar, vbar = stack_history(state)
        cost.add(phibar, vbar, z)
        before = cost.cost(state.theta)
        state = rls_step(state, z, cfg)
        yield cfg, state, cost, before


@pytest.mark.parametrize('lam', [1.0, 0.999])
def test_rls_matches_batch_minimizer(rng, lam):
    for _run in range(100):
        for _cfg, state, cost, _before in _random_rls_run(rng, lam):
            expected = cost.minimizer()
            assert np.linalg.norm(state.theta - expected) <= 1e-8 * np.linalg.norm(expected)


def test_rls_cost_is_monotone_and_p_stays_positive(rng):
    for _run in range(40):
        for _cfg, state, cost, before in _random_rls_run(rng, 0.99):
            after = cost.cost(state.theta)
            assert after <= before + 1e-9 * max(abs(before), 1.0)
            assert np.max(np.abs(state.P - state.P.T)) <= 1e-10 * np.max(np.abs(state.P))
            scipy.linalg.cho_factor(state.P)


def test_rls_rejects_non_finite_input():
    cfg = RcpeConfig(filter_coeffs=rows(0, 1, 2))
    with pytest.raises(DivergenceError):
        rls_step(initial_state(cfg), np.array([np.nan]), cfg)


def test_rls_rejects_singular_gamma():
    # two identical output rows make N Phibar rank one; Gamma has eigenvalues lam and lam + 4
    cfg = RcpeConfig(filter_coeffs=(np.array([[1.0], [1.0]]),), lam=1e-20, beta=1.0)
    state = initial_state(cfg).replace(phi_history=np.array([[[1.0, 1.0]]]))
    with pytest.raises(NumericalFailure) as excinfo:
        rls_step(state.replace(step=7), np.array([1.0, -1.0]), cfg)
    assert excinfo.value.step == 7
    assert 'singular' in str(excinfo.value)


def test_rls_accepts_two_outputs_with_moderate_lambda():
    cfg = RcpeConfig(filter_coeffs=(np.array([[1.0], [1.0]]),), lam=0.5, beta=1.0)
    state = initial_state(cfg).replace(phi_history=np.array([[[1.0, 1.0]]]))
    new = rls_step(state, np.array([1.0, -1.0]), cfg)
    assert np.all(np.isfinite(new.theta))
    scipy.linalg.cho_factor(new.P)


@pytest.mark.parametrize('gamma, singular', [
    ([[1e-3]], False),
    ([[0.0]], True),
    ([[-1.0]], True),
    ([[2.0, 0.0], [0.0, 1.0]], False),
    ([[1.0, 0.0], [0.0, 1e-15]], True),
    ([[1.0, 1.0], [1.0, 1.0]], True),
])
def test_gamma_singular(gamma, singular):
    assert rcpe_core.gamma_singular(np.array(gamma)) == singular


def test_first_step_with_zero_error_returns_mu_bar():
    cfg = RcpeConfig(filter_coeffs=(np.array([[1.0, 0.0]]), np.array([[0.0, 1.0]])),
                     permutation=(2, 1), mu_bar=[1.0, 0.01])
    state, mu_hat = estimator_step(initial_state(cfg), np.zeros(1), cfg)
    np.testing.assert_array_equal(mu_hat, [1.0, 0.01])
    assert state.step == 1


def test_estimator_caches_pre_estimate(rng):
    cfg = RcpeConfig(filter_coeffs=rows(0, 2), lam=0.99, beta=5.0)
    estimator = RcpeEstimator(cfg)
    for _ in range(50):
        estimator.step(rng.standard_normal(1))
        expected = build_regressor(estimator.state.phi, 3) @ estimator.theta
        np.testing.assert_allclose(estimator.nu, expected, rtol=1e-12, atol=1e-14)
        np.testing.assert_array_equal(estimator.nu, rcpe_core.pre_estimate(estimator.state, cfg))


def test_initial_estimate_is_zero(low_order_rcpe):
    estimator = RcpeEstimator(low_order_rcpe)
    np.testing.assert_array_equal(estimator.mu_hat, np.zeros(3))
    np.testing.assert_array_equal(estimator.nu, np.zeros(3))


def _straight_line_estimates(zs, coeffs, lam, beta, perm):
    """ Direct transcription of the estimator equations with explicit inverses """
    l_y, l_mu = coeffs[0].shape
    n_f = len(coeffs)
    n_mat = np.hstack(coeffs)
    o_p = np.eye(l_mu)[[i - 1 for i in perm]]
    phi = np.zeros(l_y)
    theta = np.zeros(l_mu * l_y)
    p_mat = np.eye(l_mu * l_y) / beta
    regressors = []
    pre_estimates = []
    estimates = []
    for k, z in enumerate(zs):
        regressor = np.kron(np.eye(l_mu), phi.reshape(1, -1))
        nu = regressor @ theta
        if k > 0:
            blocks = [regressors[-i] if i <= len(regressors) else np.zeros_like(regressor)
                      for i in range(1, n_f + 1)]
            values = [pre_estimates[-i] if i <= len(pre_estimates) else np.zeros(l_mu)
                      for i in range(1, n_f + 1)]
            phibar = np.vstack(blocks)
            vbar = np.concatenate(values)
            x_mat = n_mat @ phibar
            gamma = lam * np.eye(l_y) + x_mat @ p_mat @ x_mat.T
            p_mat = (p_mat - p_mat @ x_mat.T @ np.linalg.inv(gamma) @ x_mat @ p_mat) / lam
            theta = theta - p_mat @ x_mat.T @ (x_mat @ theta + z - n_mat @ vbar)
        regressors.append(regressor)
        pre_estimates.append(nu)
        phi = phi + z
        nu_next = np.kron(np.eye(l_mu), phi.reshape(1, -1)) @ theta
        estimates.append(o_p @ np.abs(nu_next))
    return np.array(estimates)


def test_estimator_matches_straight_line_reference(rng):
    coeffs = rows(1, 0, 2)
    cfg = RcpeConfig(filter_coeffs=coeffs, lam=0.99, beta=10.0, permutation=(2, 1, 3))
    zs = [np.array([np.sin(0.3 * k) + 0.1 * rng.standard_normal()]) for k in range(60)]
    estimator = RcpeEstimator(cfg)
    trace = np.array([estimator.step(z) for z in zs])
    expected = _straight_line_estimates(zs, coeffs, 0.99, 10.0, (2, 1, 3))
    np.testing.assert_allclose(trace, expected, rtol=1e-9, atol=1e-12)


def test_subspace_residual_examples(rng):
    assert subspace_residual(np.zeros(3), rows(0)) == 0.0
    assert subspace_residual(rng.standard_normal(3), rows(0, 1, 2)) == pytest.approx(0.0, abs=1e-14)
    assert subspace_residual([0.0, 1.0, 0.0], rows(0)) == pytest.approx(1.0)


def test_pre_estimate_stays_in_filter_subspace(rng):
    coeffs = rows(0, 1)
    cfg = RcpeConfig(filter_coeffs=coeffs, lam=0.995, beta=3.0)
    state = initial_state(cfg)
    for _ in range(200):
        state, _mu_hat = estimator_step(state, rng.standard_normal(1), cfg)
        nu = rcpe_core.pre_estimate(state, cfg)
        assert subspace_residual(nu, coeffs) <= 1e-9 * (1.0 + np.linalg.norm(nu))


def test_pre_estimate_in_filter_subspace_closed_loop(low_order_experiment, low_order_rcpe):
    coeffs = rows(0, 1)
    cfg = low_order_experiment(horizon=300, rcpe=low_order_rcpe.replace(filter_coeffs=coeffs))
    for record in run_closed_loop(cfg):
        assert subspace_residual(record.nu, coeffs) <= 1e-9 * (1.0 + np.linalg.norm(record.nu))


def test_estimate_never_below_offset(rng):
    cfg = RcpeConfig(filter_coeffs=(np.array([[1.0, 0.0]]), np.array([[0.0, 1.0]])),
                     lam=0.999, beta=1.0, permutation=(2, 1), mu_bar=[1.0, 0.01])
    estimator = RcpeEstimator(cfg)
    for _ in range(100):
        mu_hat = estimator.step(rng.standard_normal(1))
        assert np.all(mu_hat - cfg.mu_bar >= 0.0)


def test_saturation_clips_estimate():
    cfg = RcpeConfig(filter_coeffs=(np.array([[1.0]]),), lam=1.0, beta=1e-3,
                     saturation=[0.5])
    estimator = RcpeEstimator(cfg)
    for _ in range(5):
        mu_hat = estimator.step(np.array([10.0]))
    assert mu_hat[0] == 0.5
    assert estimator.saturated
    estimator.reset()
    assert not estimator.saturated
    assert estimator.step_index == 0


def test_nearest_s_op():
    cfg = RcpeConfig(filter_coeffs=rows(0, 1, 2), permutation=(2, 1, 3))
    mu = np.array([0.5, 0.8, 1.0])
    nu = np.array([-0.7, 0.45, 0.0])
    np.testing.assert_allclose(rcpe_core.nearest_s_op(nu, mu, cfg), [-0.8, 0.5, 1.0])
    assert rcpe_core.s_op_distance([-0.8, 0.5, 1.0], mu, cfg) == pytest.approx(0.0)
    with pytest.raises(ValueError):
        rcpe_core.nearest_s_op(nu, -mu, cfg)


@pytest.mark.parametrize('changes', [
    dict(lam=0.0), dict(lam=1.5), dict(beta=0.0), dict(scaling=[1.0, -1.0, 1.0]),
    dict(filter_coeffs=(np.ones((1, 3)), np.ones((1, 2)))), dict(filter_coeffs=()),
    dict(r_theta=np.array([[1.0, 2.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])),
])
def test_invalid_config(changes):
    fields = dict(filter_coeffs=rows(0, 1, 2))
    fields.update(changes)
    with pytest.raises(ConfigurationError):
        RcpeConfig(**fields)


def test_permutation_length_must_match():
    with pytest.raises(InvalidPermutationError):
        RcpeConfig(filter_coeffs=rows(0, 1, 2), permutation=(2, 1))


def test_full_r_theta_sets_initial_p():
    r_theta = np.array([[2.0, 0.5], [0.5, 1.0]])
    cfg = RcpeConfig(filter_coeffs=(np.array([[1.0, 0.0]]),), r_theta=r_theta)
    np.testing.assert_allclose(initial_state(cfg).P @ r_theta, np.eye(2), atol=1e-14)
