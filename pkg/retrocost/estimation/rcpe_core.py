#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
#  rcpe_core.py
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

""" Retrospective cost parameter estimator

The estimator integrates the output error z, multiplies the integrator
state by an adaptive gain to form the pre-estimate nu, and maps nu to the
parameter estimate through mu_hat = mu_bar + O_p |M nu|. The gain is the
minimizer of a retrospective cost, updated by recursive least squares with
forgetting.

Shapes (l_mu parameters, l_y measurements, n_f filter taps):
    phi      (l_y,)                  integrator state
    theta    (l_theta,)              l_theta = l_mu * l_y, theta = R.reshape(-1)
    P        (l_theta, l_theta)
    Phi      (l_mu, l_theta)         I_{l_mu} kron phi^T
    Phibar   (n_f * l_mu, l_theta)   [Phi_{k-1}; ...; Phi_{k-n_f}]
    Vbar     (n_f * l_mu,)           [nu_{k-1}; ...; nu_{k-n_f}]
    N        (l_y, n_f * l_mu)       [N_1 ... N_{n_f}]
"""

import dataclasses
import logging
import math

import numpy as np
import scipy.linalg

from retrocost.misc.extra import (
    ConfigurationError,
    DimensionError,
    DivergenceError,
    InvalidPermutationError,
    NumericalFailure,
    all_finite,
    as_matrix,
    as_vector)

# Gamma_k is declared singular above this condition number
GAMMA_CONDITION_LIMIT = 1e14


@dataclasses.dataclass(frozen=True, eq=False)
class PermutationMatrix:
    """ O_p for p = (i_1, ..., i_l): row j is row i_j of the identity """
    p: tuple
    matrix: np.ndarray

    @property
    def index(self):
        """ Zero-based source index of every output row """
        return np.asarray(self.p, dtype=int) - 1

    def apply(self, vec):
        """ O_p @ vec without the matrix product """
        return np.asarray(vec)[self.index]


def make_permutation(p):
    """ Builds O_p, checking that p is a permutation of (1, ..., len(p)) """
    try:
        p = tuple(int(i) for i in p)
    except (TypeError, ValueError):
        raise InvalidPermutationError("permutation entries must be integers", key='permutation')

    size = len(p)
    if size == 0:
        raise InvalidPermutationError("empty permutation", key='permutation')
    if sorted(p) != list(range(1, size + 1)):
        raise InvalidPermutationError(
            "{0} is not a permutation of (1, ..., {1})".format(p, size), key='permutation')

    matrix = np.zeros((size, size))
    for row, col in enumerate(p):
        matrix[row, col - 1] = 1.0
    return PermutationMatrix(p=p, matrix=matrix)


@dataclasses.dataclass(frozen=True, eq=False)
class RcpeConfig:
    """ Estimator constants

    filter_coeffs  N_1 .. N_{n_f}, each l_y x l_mu
    lam            forgetting factor in (0, 1]
    beta           R_theta = beta I unless r_theta is given
    permutation    p, 1-based
    mu_bar         offset added to the output map (default 0)
    scaling        diagonal of M (default ones)
    r_theta        optional full symmetric positive definite R_theta
    saturation     optional per-component upper bounds on mu_hat (inf = none)
    """
    filter_coeffs: tuple
    lam: float = 1.0
    beta: float = 1.0
    permutation: tuple = None
    mu_bar: np.ndarray = None
    scaling: np.ndarray = None
    r_theta: np.ndarray = None
    saturation: np.ndarray = None
    # derived
    N: np.ndarray = dataclasses.field(init=False, repr=False)
    O_p: PermutationMatrix = dataclasses.field(init=False, repr=False)

    def __post_init__(self):
        if not self.filter_coeffs:
            raise ConfigurationError("at least one filter coefficient is needed",
                                     key='filter_coeffs')
        coeffs = tuple(as_matrix(n_i, name='N_{0}'.format(i + 1))
                       for i, n_i in enumerate(self.filter_coeffs))
        shape = coeffs[0].shape
        for i, n_i in enumerate(coeffs):
            if n_i.shape != shape:
                raise ConfigurationError(
                    "N_{0} has shape {1}, N_1 has shape {2}".format(i + 1, n_i.shape, shape),
                    key='filter_coeffs')
        l_y, l_mu = shape
        set_field = object.__setattr__
        set_field(self, 'filter_coeffs', coeffs)

        if not 0.0 < self.lam <= 1.0:
            raise ConfigurationError("must lie in (0, 1], got {0}".format(self.lam), key='lambda')
        if not self.beta > 0.0:
            raise ConfigurationError("must be positive, got {0}".format(self.beta), key='beta')

        permutation = self.permutation
        if permutation is None:
            permutation = tuple(range(1, l_mu + 1))
        o_p = make_permutation(permutation)
        if len(o_p.p) != l_mu:
            raise InvalidPermutationError(
                "length {0} does not match l_mu = {1}".format(len(o_p.p), l_mu),
                key='permutation')
        set_field(self, 'permutation', o_p.p)
        set_field(self, 'O_p', o_p)

        mu_bar = np.zeros(l_mu) if self.mu_bar is None else as_vector(self.mu_bar, l_mu, 'mu_bar')
        set_field(self, 'mu_bar', mu_bar)

        scaling = np.ones(l_mu) if self.scaling is None else self.scaling
        scaling = np.asarray(scaling, dtype=float)
        if scaling.ndim == 2:
            if np.any(scaling != np.diag(np.diag(scaling))):
                raise ConfigurationError("scaling matrix M must be diagonal", key='scaling')
            scaling = np.diag(scaling)
        scaling = as_vector(scaling, l_mu, 'scaling')
        if np.any(scaling <= 0.0):
            raise ConfigurationError("diagonal entries of M must be positive", key='scaling')
        set_field(self, 'scaling', scaling)

        if self.r_theta is not None:
            l_theta = l_mu * l_y
            r_theta = as_matrix(self.r_theta, (l_theta, l_theta), 'r_theta')
            if not np.allclose(r_theta, r_theta.T, rtol=0.0, atol=1e-12 * np.max(np.abs(r_theta))):
                raise ConfigurationError("R_theta must be symmetric", key='r_theta')
            try:
                scipy.linalg.cho_factor(r_theta)
            except np.linalg.LinAlgError:
                raise ConfigurationError("R_theta must be positive definite", key='r_theta')
            set_field(self, 'r_theta', r_theta)

        if self.saturation is not None:
            bounds = as_vector(self.saturation, l_mu, 'saturation')
            if np.any(bounds < mu_bar):
                raise ConfigurationError("bounds must not lie below mu_bar", key='saturation')
            set_field(self, 'saturation', bounds)

        set_field(self, 'N', stacked_filter(coeffs))

    @property
    def n_f(self):
        return len(self.filter_coeffs)

    @property
    def l_y(self):
        return self.filter_coeffs[0].shape[0]

    @property
    def l_mu(self):
        return self.filter_coeffs[0].shape[1]

    @property
    def l_theta(self):
        return self.l_mu * self.l_y

    def regularization(self):
        """ R_theta """
        if self.r_theta is not None:
            return self.r_theta
        return self.beta * np.eye(self.l_theta)

    def replace(self, **changes):
        """ Copy with some fields changed (derived fields are rebuilt) """
        fields = {f.name: getattr(self, f.name) for f in dataclasses.fields(self) if f.init}
        fields.update(changes)
        return RcpeConfig(**fields)


@dataclasses.dataclass(frozen=True, eq=False)
class EstimatorState:
    """ Everything that evolves inside the estimator at step k """
    phi: np.ndarray
    theta: np.ndarray
    P: np.ndarray
    phi_history: np.ndarray     # (n_f, l_mu, l_theta), row 0 is Phi_{k-1}
    nu_history: np.ndarray      # (n_f, l_mu), row 0 is nu_{k-1}
    step: int = 0
    nu: np.ndarray = None       # nu_k = Phi_k theta_k, kept by estimator_step

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


def initial_state(cfg):
    """ phi_0 = 0, theta_0 = 0, P_0 = R_theta^-1, zero-padded histories """
    if cfg.r_theta is None:
        p_0 = np.eye(cfg.l_theta) / cfg.beta
    else:
        p_0 = np.linalg.inv(cfg.r_theta)
        p_0 = 0.5 * (p_0 + p_0.T)
    return EstimatorState(
        phi=np.zeros(cfg.l_y),
        theta=np.zeros(cfg.l_theta),
        P=p_0,
        phi_history=np.zeros((cfg.n_f, cfg.l_mu, cfg.l_theta)),
        nu_history=np.zeros((cfg.n_f, cfg.l_mu)),
        step=0,
        nu=np.zeros(cfg.l_mu))


def stacked_filter(filter_coeffs):
    """ N = [N_1 ... N_{n_f}] """
    return np.hstack([as_matrix(n_i) for n_i in filter_coeffs])


def update_integrator(phi_prev, z_prev):
    """ phi_k = phi_{k-1} + z_{k-1} """
    phi_prev = as_vector(phi_prev, name='phi')
    z_prev = as_vector(z_prev, phi_prev.shape[0], 'z')
    return phi_prev + z_prev


def build_regressor(phi, l_mu):
    """ Phi = I_{l_mu} kron phi^T, so that Phi @ R.reshape(-1) == R @ phi """
    phi = as_vector(phi, name='phi')
    if l_mu < 1:
        raise DimensionError("l_mu must be positive")
    regressor = np.zeros((l_mu, l_mu, phi.shape[0]))
    regressor[np.arange(l_mu), np.arange(l_mu)] = phi
    return regressor.reshape(l_mu, l_mu * phi.shape[0])


def gain_from_theta(theta, l_mu, l_y):
    """ The adaptive integrator gain R (l_mu x l_y) represented by theta """
    return as_vector(theta, l_mu * l_y, 'theta').reshape(l_mu, l_y)


def gain_pre_estimate(theta, phi, l_mu):
    """ nu = R phi with R = gain_from_theta(theta), equal to Phi theta """
    phi = as_vector(phi, name='phi')
    return gain_from_theta(theta, l_mu, phi.shape[0]) @ phi


def compute_pre_estimate(Phi, theta):
    """ nu = Phi theta """
    Phi = as_matrix(Phi, name='Phi')
    theta = as_vector(theta, Phi.shape[1], 'theta')
    return Phi @ theta


def apply_output_map(nu, cfg):
    """ mu_hat = mu_bar + O_p |M nu| """
    nu = as_vector(nu, cfg.l_mu, 'nu')
    return cfg.mu_bar + cfg.O_p.apply(np.abs(cfg.scaling * nu))


def saturate(mu_hat, cfg):
    """ Clips mu_hat to the configured upper bounds; returns (mu_hat, clipped) """
    if cfg.saturation is None:
        return mu_hat, False
    clipped = bool(np.any(mu_hat > cfg.saturation))
    return np.minimum(mu_hat, cfg.saturation), clipped


def stack_history(state):
    """ (Phibar_k, Vbar_k) stacked from the most recent entry down """
    n_f, l_mu, l_theta = state.phi_history.shape
    return (state.phi_history.reshape(n_f * l_mu, l_theta),
            state.nu_history.reshape(n_f * l_mu))


def retrospective_error(z, theta_hat, Phibar, Vbar, N):
    """ z_hat_k(theta_hat) = z_k + N Phibar_k theta_hat - N Vbar_k """
    N = as_matrix(N, name='N')
    Phibar = as_matrix(Phibar, (N.shape[1], np.shape(Phibar)[-1]), 'Phibar')
    Vbar = as_vector(Vbar, N.shape[1], 'Vbar')
    theta_hat = as_vector(theta_hat, Phibar.shape[1], 'theta_hat')
    z = as_vector(z, N.shape[0], 'z')
    return z + N @ (Phibar @ theta_hat) - N @ Vbar


def gamma_singular(gamma):
    """ True when the symmetric Gamma_k is not safely invertible

    A 1 x 1 Gamma only has to be positive. Larger ones must also keep their
    condition number below GAMMA_CONDITION_LIMIT. """
    if gamma.shape[0] == 1:
        return not gamma[0, 0] > 0.0
    eigenvalues = np.linalg.eigvalsh(gamma)
    return not eigenvalues[0] > 0.0 or eigenvalues[-1] > GAMMA_CONDITION_LIMIT * eigenvalues[0]


def rls_step(state, z, cfg):
    """ One recursive minimization of the retrospective cost

        Gamma_k   = lam I + N Phibar P Phibar^T N^T
        P_{k+1}   = (P - P Phibar^T N^T Gamma_k^-1 N Phibar P) / lam
        theta_k+1 = theta_k - P_{k+1} Phibar^T N^T (N Phibar theta_k + z_k - N Vbar_k)
    """
    z = as_vector(z, cfg.l_y, 'z')
    Phibar, Vbar = stack_history(state)
    X = cfg.N @ Phibar
    residual = X @ state.theta + z - cfg.N @ Vbar
    # z, theta and the histories all reach X or residual; P was checked when produced
    if not all_finite(X, residual):
        raise DivergenceError("non-finite estimator input", step=state.step)

    PXt = state.P @ X.T
    gamma = cfg.lam * np.eye(cfg.l_y) + X @ PXt
    if gamma_singular(gamma):
        raise NumericalFailure("Gamma is numerically singular", step=state.step)
    try:
        factor = scipy.linalg.cho_factor(gamma)
    except np.linalg.LinAlgError:
        raise NumericalFailure("Gamma is not positive definite", step=state.step)

    P = (state.P - PXt @ scipy.linalg.cho_solve(factor, PXt.T)) / cfg.lam
    P = 0.5 * (P + P.T)
    theta = state.theta - P @ (X.T @ residual)

    if not all_finite(P, theta):
        raise DivergenceError("non-finite RLS update", step=state.step)

    return state.replace(theta=theta, P=P)


def estimator_step(state, z, cfg):
    """ Consumes z_k and returns (state at k + 1, mu_hat_{k+1})

    The retrospective cost at k = 0 has no data terms, so theta_1 = theta_0
    and P_1 = P_0; the recursion runs from k = 1 on. """
    z = as_vector(z, cfg.l_y, 'z')
    if not all_finite(z):
        raise DivergenceError("non-finite output error", step=state.step)

    Phi = build_regressor(state.phi, cfg.l_mu)
    nu = gain_pre_estimate(state.theta, state.phi, cfg.l_mu)

    if state.step > 0:
        state = rls_step(state, z, cfg)

    phi_next = update_integrator(state.phi, z)
    nu_next = gain_pre_estimate(state.theta, phi_next, cfg.l_mu)

    phi_history = np.concatenate((Phi[np.newaxis], state.phi_history[:-1]))
    nu_history = np.concatenate((nu[np.newaxis], state.nu_history[:-1]))

    state = state.replace(
        phi=phi_next,
        phi_history=phi_history,
        nu_history=nu_history,
        step=state.step + 1,
        nu=nu_next)
    return state, apply_output_map(nu_next, cfg)


def pre_estimate(state, cfg):
    """ nu_k of a state, recomputed from theta_k and phi_k """
    return gain_pre_estimate(state.theta, state.phi, cfg.l_mu)


def subspace_residual(nu, filter_coeffs):
    """ Norm of the part of nu orthogonal to the range of [N_1^T ... N_{n_f}^T] """
    nu = as_vector(nu, name='nu')
    span = np.hstack([as_matrix(n_i).T for n_i in filter_coeffs])
    if span.shape[0] != nu.shape[0]:
        raise DimensionError("filter coefficients have {0} columns, nu has length {1}".format(
            span.shape[0], nu.shape[0]))
    basis = scipy.linalg.orth(span)
    return float(np.linalg.norm(nu - basis @ (basis.T @ nu)))


def nearest_s_op(nu, mu, cfg):
    """ The element s of {s : mu_bar + O_p |M s| = mu} closest to nu """
    nu = as_vector(nu, cfg.l_mu, 'nu')
    shifted = as_vector(mu, cfg.l_mu, 'mu') - cfg.mu_bar
    if np.any(shifted < 0.0):
        raise ValueError("mu lies below mu_bar; no pre-estimate maps to it")
    magnitude = cfg.O_p.matrix.T @ shifted / cfg.scaling
    sign = np.where(nu < 0.0, -1.0, 1.0)
    return sign * magnitude


def s_op_distance(nu, mu, cfg):
    """ Distance from nu to the nearest element of S_Op """
    return float(np.linalg.norm(as_vector(nu, cfg.l_mu, 'nu') - nearest_s_op(nu, mu, cfg)))


class RetrospectiveCost(object):
    """ Batch form J_k(t) = t^T A_k t + 2 b_k^T t + c_k of the retrospective cost

    A_0 = R_theta and every add() multiplies the previous terms by lam, so
    the lam^k weights are never formed explicitly. """

    def __init__(self, cfg):
        self.cfg = cfg
        self.A = cfg.regularization().copy()
        self.b = np.zeros(cfg.l_theta)
        self.c = 0.0
        self.k = 0

    def add(self, Phibar, Vbar, z):
        """ Adds the retrospective error of step k + 1 """
        X = self.cfg.N @ Phibar
        offset = as_vector(z, self.cfg.l_y, 'z') - self.cfg.N @ Vbar
        lam = self.cfg.lam
        self.A = lam * self.A + X.T @ X
        self.b = lam * self.b + X.T @ offset
        self.c = lam * self.c + float(offset @ offset)
        self.k += 1

    def cost(self, theta_hat):
        theta_hat = as_vector(theta_hat, self.cfg.l_theta, 'theta_hat')
        return float(theta_hat @ self.A @ theta_hat + 2.0 * self.b @ theta_hat + self.c)

    def minimizer(self):
        """ -A_k^-1 b_k """
        factor = scipy.linalg.cho_factor(self.A)
        return -scipy.linalg.cho_solve(factor, self.b)


class RcpeEstimator(object):
    """ Stateful wrapper: feed z_k, read mu_hat_{k+1} """

    def __init__(self, cfg):
        self.cfg = cfg
        self.state = None
        self.mu_hat = None
        self.saturated = False
        self.reset()

    def reset(self):
        self.state = initial_state(self.cfg)
        self.mu_hat, self.saturated = saturate(apply_output_map(np.zeros(self.cfg.l_mu), self.cfg),
                                               self.cfg)

    @property
    def step_index(self):
        return self.state.step

    @property
    def theta(self):
        return self.state.theta

    @property
    def nu(self):
        return self.state.nu

    def step(self, z):
        """ Updates the estimator with z_k and returns mu_hat_{k+1} """
        was_saturated = self.saturated
        self.state, mu_hat = estimator_step(self.state, z, self.cfg)
        self.mu_hat, self.saturated = saturate(mu_hat, self.cfg)
        if self.saturated and not was_saturated:
            logging.warning("Estimate saturated at step %d: %s", self.state.step, self.mu_hat)
        return self.mu_hat


def default_filter(l_mu):
    """ N_i = e_i (rows of the identity), the one-measurement choice """
    return tuple(np.eye(l_mu)[i:i + 1] for i in range(l_mu))


def permutation_count(l_mu):
    return math.factorial(l_mu)
