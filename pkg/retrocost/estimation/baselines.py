#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
#  baselines.py
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

""" Traditional estimators used as comparison points

    batch_cost        J(mu) = sum (y_i - yhat_i)^T W_i (y_i - yhat_i)
    linear_rls        recursive least squares for y_k = phi_k mu
    fd_gradient       central-difference gradient of any cost closure
    gradient_descent  fixed-step descent on such a cost
    augment           state augmentation X = [x; mu] for external filters
"""

import concurrent.futures
import copy
import dataclasses
import logging

import numpy as np
import scipy.linalg

from retrocost.misc.extra import ConfigurationError, DimensionError, as_matrix, as_vector
from retrocost.models.system_model import SystemModel


@dataclasses.dataclass(frozen=True, eq=False)
class BatchCostConfig:
    """ weights is None (identity), one l_y x l_y matrix used at every step,
    or a sequence with one matrix per step """
    weights: object = None
    horizon: int = None

    def __post_init__(self):
        if self.weights is None:
            return
        weights = np.asarray(self.weights, dtype=float)
        if weights.ndim == 2:
            weights = weights[np.newaxis]
        if weights.ndim != 3 or weights.shape[1] != weights.shape[2]:
            raise DimensionError("weights must be square matrices")
        for i, w_i in enumerate(weights):
            if not np.allclose(w_i, w_i.T):
                raise ConfigurationError("W_{0} is not symmetric".format(i), key='weights')
            try:
                scipy.linalg.cho_factor(w_i)
            except np.linalg.LinAlgError:
                raise ConfigurationError("W_{0} is not positive definite".format(i), key='weights')
        object.__setattr__(self, 'weights', weights)

    def weight(self, i, l_y):
        if self.weights is None:
            return np.eye(l_y)
        if self.weights.shape[0] == 1:
            return self.weights[0]
        return self.weights[i]


def batch_cost(model, mu_hat, x0, u_seq, y_seq, cfg=None):
    """ Simulates the estimation model from x0 with mu_hat and accumulates the
    weighted output mismatch against y_seq """
    cfg = cfg or BatchCostConfig()
    y_seq = np.asarray(y_seq, dtype=float).reshape(len(y_seq), -1)
    horizon = y_seq.shape[0] if cfg.horizon is None else cfg.horizon
    if len(u_seq) < horizon or y_seq.shape[0] < horizon:
        raise DimensionError("u_seq and y_seq must hold {0} samples".format(horizon))
    if cfg.weights is not None and cfg.weights.shape[0] not in (1, horizon):
        raise DimensionError("expected {0} weight matrices, got {1}".format(
            horizon, cfg.weights.shape[0]))

    mu_hat = as_vector(mu_hat, model.l_mu, 'mu_hat')
    x = np.array(x0, dtype=float)
    cost = 0.0
    for i in range(horizon):
        err = y_seq[i] - model.output(x, u_seq[i], mu_hat)
        cost += float(err @ cfg.weight(i, model.l_y) @ err)
        if i + 1 < horizon:
            x = model.step(x, u_seq[i], mu_hat)
    return cost


def make_batch_cost(model, x0, u_seq, y_seq, cfg=None):
    """ Returns the closure mu_hat -> batch_cost(model, mu_hat, ...)

    Every call simulates a private copy of model, so the closure may be
    evaluated from several threads at once (see fd_gradient). """
    def cost(mu_hat):
        return batch_cost(copy.deepcopy(model), mu_hat, x0, u_seq, y_seq, cfg)
    return cost


@dataclasses.dataclass(frozen=True, eq=False)
class LinearRlsResult:
    mu: np.ndarray
    P: np.ndarray
    rank_deficient: bool
    samples: int


def linear_rls(phi_seq, y_seq, lam=1.0):
    """ Recursive least squares for y_k = phi_k mu with forgetting factor lam

    Samples are accumulated into the information matrix until it has full
    rank; the recursion starts from that exact solution, so with lam = 1 the
    result equals the normal-equations solution. When full rank is never
    reached the pseudoinverse solution is returned and rank_deficient is set. """
    if not 0.0 < lam <= 1.0:
        raise ConfigurationError("must lie in (0, 1], got {0}".format(lam), key='lambda')
    phis = [as_matrix(phi, name='phi') for phi in phi_seq]
    if not phis:
        raise DimensionError("at least one sample is needed")
    l_mu = phis[0].shape[1]
    ys = [as_vector(y, phi.shape[0], 'y') for phi, y in zip(phis, y_seq)]
    if len(ys) != len(phis):
        raise DimensionError("phi_seq and y_seq differ in length")

    info = np.zeros((l_mu, l_mu))
    rhs = np.zeros(l_mu)
    start = None
    for k, (phi, y) in enumerate(zip(phis, ys)):
        info = lam * info + phi.T @ phi
        rhs = lam * rhs + phi.T @ y
        if np.linalg.matrix_rank(info) == l_mu:
            start = k + 1
            break

    if start is None:
        logging.warning("Regressor sequence is not exciting: information matrix has rank %d of %d",
                        np.linalg.matrix_rank(info), l_mu)
        return LinearRlsResult(mu=np.linalg.pinv(info) @ rhs, P=np.linalg.pinv(info),
                               rank_deficient=True, samples=len(phis))

    P = np.linalg.inv(info)
    mu = P @ rhs
    for phi, y in zip(phis[start:], ys[start:]):
        PXt = P @ phi.T
        gamma = lam * np.eye(phi.shape[0]) + phi @ PXt
        gain = scipy.linalg.solve(gamma, PXt.T, assume_a='pos').T
        mu = mu + gain @ (y - phi @ mu)
        P = (P - gain @ PXt.T) / lam
        P = 0.5 * (P + P.T)

    return LinearRlsResult(mu=mu, P=P, rank_deficient=False, samples=len(phis))


def default_delta(mu_hat):
    """ 1e-6 relative to |mu_i| + 1 """
    return 1e-6 * (np.abs(mu_hat) + 1.0)


def fd_gradient(cost, mu_hat, delta=None, workers=1):
    """ Central-difference gradient [J(mu + d e_i) - J(mu - d e_i)] / 2d

    cost is evaluated exactly 2 l_mu times. With workers > 1 the evaluations
    run in a thread pool; cost must then be safe to call concurrently, which
    make_batch_cost guarantees by giving every evaluation its own model. """
    mu_hat = as_vector(mu_hat, name='mu_hat')
    l_mu = mu_hat.shape[0]
    delta = default_delta(mu_hat) if delta is None else np.broadcast_to(
        np.asarray(delta, dtype=float), (l_mu,))
    if np.any(delta <= 0.0):
        raise ConfigurationError("must be positive", key='delta')

    points = []
    for i in range(l_mu):
        step = np.zeros(l_mu)
        step[i] = delta[i]
        points.append(mu_hat + step)
        points.append(mu_hat - step)

    if workers > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as executor:
            values = list(executor.map(cost, points))
    else:
        values = [cost(point) for point in points]

    values = np.asarray(values, dtype=float).reshape(l_mu, 2)
    return (values[:, 0] - values[:, 1]) / (2.0 * delta)


@dataclasses.dataclass(frozen=True, eq=False)
class DescentResult:
    trajectory: np.ndarray      # (iterations + 1, l_mu)
    costs: np.ndarray           # J at every trajectory point
    converged: bool             # step norm fell below tol
    aborted: bool               # non-finite cost or gradient

    @property
    def mu(self):
        return self.trajectory[-1]

    @property
    def iterations(self):
        return self.trajectory.shape[0] - 1


def gradient_descent(cost, mu0, gamma, iters, delta=None, tol=1e-12, workers=1):
    """ mu(j) = mu(j-1) - gamma dJ/dmu(mu(j-1)), gradient by central differences

    The iteration steps against the gradient so J decreases. It stops after
    iters steps, when the step norm drops below tol, or when the cost stops
    being finite (the trajectory so far is returned). """
    if gamma < 0.0:
        raise ConfigurationError("must be nonnegative", key='gamma')
    mu = as_vector(mu0, name='mu0').copy()
    trajectory = [mu]
    costs = [cost(mu)]
    converged = False
    aborted = not np.isfinite(costs[0])

    for j in range(iters):
        if aborted:
            break
        grad = fd_gradient(cost, mu, delta, workers)
        if not np.all(np.isfinite(grad)):
            logging.warning("Non-finite gradient at iteration %d", j)
            aborted = True
            break
        step = gamma * grad
        mu = mu - step
        value = cost(mu)
        if not np.isfinite(value):
            logging.warning("Non-finite cost at iteration %d, stopping", j + 1)
            aborted = True
            break
        trajectory.append(mu)
        costs.append(value)
        if np.linalg.norm(step) < tol:
            converged = True
            break

    logging.debug("Gradient descent: %d iterations, J = %.6g", len(trajectory) - 1, costs[-1])
    return DescentResult(trajectory=np.array(trajectory), costs=np.array(costs),
                         converged=converged, aborted=aborted)


class AugmentedModel(SystemModel):
    """ X = [x; mu] with constant parameter block

        F(X, u) = [f(pi1 X, u, pi2 X); pi2 X]
        G(X, u) = g(pi1 X, u, pi2 X)

    The mu argument of step() and output() is ignored; the parameters are
    carried in the state. """

    PLANT_ID = None

    def __init__(self, model):
        super().__init__(l_x=model.l_x + model.l_mu, l_u=model.l_u, l_y=model.l_y, l_mu=model.l_mu)
        self.model = model
        self.PLANT_ID = "{0}+mu".format(model.PLANT_ID)

    @property
    def pi1(self):
        return np.eye(self.l_x)[:self.model.l_x]

    @property
    def pi2(self):
        return np.eye(self.l_x)[self.model.l_x:]

    def state_part(self, X):
        return np.asarray(X)[:self.model.l_x]

    def parameter_estimate(self, X):
        """ mu_hat = pi2 X """
        return np.asarray(X)[self.model.l_x:]

    def pack(self, x, mu):
        return np.concatenate((as_vector(x, self.model.l_x, 'x'), as_vector(mu, self.l_mu, 'mu')))

    def step(self, x, u, mu=None):
        params = self.parameter_estimate(x)
        return np.concatenate((self.model.step(self.state_part(x), u, params), params))

    def output(self, x, u, mu=None):
        return self.model.output(self.state_part(x), u, self.parameter_estimate(x))

    def input(self, k):
        return self.model.input(k)


def augment(model):
    """ Wraps model so that parameter estimation becomes state estimation """
    return AugmentedModel(model)
