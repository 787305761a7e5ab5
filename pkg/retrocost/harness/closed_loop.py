#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
#  closed_loop.py
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

""" Truth model, estimation model and estimator wired in closed loop """

import dataclasses
import logging
import time

import numpy as np

from retrocost.estimation import baselines
from retrocost.estimation.rcpe_core import RcpeEstimator
from retrocost.misc.extra import (
    ConfigurationError,
    NumericalFailure,
    as_vector)
from retrocost.models.system_model import create_plant

SWEEP_MODES = ('single', 'permutations', 'filter_signs')

CONVERGED = 'converged'
DIVERGED = 'diverged'


@dataclasses.dataclass(frozen=True, eq=False)
class ExperimentConfig:
    """ One closed-loop experiment

    x0 defaults to the plant's own initial state, x0_hat to zero. The
    Burgers fields (grid_points, dt, c_max, measure_index, stable_substeps)
    are ignored by other plants. stable_substeps only reaches the estimation
    model; the truth model always runs the fixed-dt scheme. """
    plant: str
    mu_true: np.ndarray
    rcpe: object
    horizon: int
    x0: np.ndarray = None
    x0_hat: np.ndarray = None
    sweep: str = 'single'
    z_max: float = 1e6
    eps_conv: float = 5e-2
    out: str = None
    seed: int = 0
    output_scale: float = 1.0
    warmup: int = 0
    keep_states: bool = False
    grid_points: int = 100
    dt: float = 1e-4
    c_max: float = 0.25
    measure_index: int = 87
    stable_substeps: bool = False
    gamma: float = 1e-4
    iterations: int = 200

    def __post_init__(self):
        set_field = object.__setattr__
        set_field(self, 'mu_true', as_vector(self.mu_true, self.rcpe.l_mu, 'mu'))
        if self.horizon <= self.rcpe.n_f:
            raise ConfigurationError(
                "must exceed the number of filter taps ({0})".format(self.rcpe.n_f),
                key='horizon')
        if not self.z_max > 0.0:
            raise ConfigurationError("must be positive", key='z_max')
        if not self.eps_conv > 0.0:
            raise ConfigurationError("must be positive", key='eps_conv')
        if self.sweep not in SWEEP_MODES:
            raise ConfigurationError(
                "'{0}' is not one of {1}".format(self.sweep, ', '.join(SWEEP_MODES)), key='sweep')
        if self.output_scale == 0.0 or not np.isfinite(self.output_scale):
            raise ConfigurationError("must be finite and nonzero", key='output_scale')
        if self.warmup < 0 or self.warmup >= self.horizon:
            raise ConfigurationError("must lie in [0, horizon)", key='warmup')

    @property
    def saturation(self):
        return self.rcpe.saturation

    def plant_kwargs(self):
        if self.plant == 'burgers':
            return dict(grid_points=self.grid_points, dt=self.dt, c_max=self.c_max,
                        measure_index=self.measure_index)
        return {}

    def make_plant(self):
        plant = create_plant(self.plant, **self.plant_kwargs())
        if plant.l_mu != self.rcpe.l_mu or plant.l_y != self.rcpe.l_y:
            raise ConfigurationError(
                "estimator dimensions (l_mu={0}, l_y={1}) do not match plant {2}".format(
                    self.rcpe.l_mu, self.rcpe.l_y, plant),
                key='filter_coeffs')
        return plant

    def make_model(self):
        """ The estimation model: the truth plant class, sub-stepped if asked """
        if self.plant == 'burgers' and self.stable_substeps:
            return create_plant(self.plant, stable_substeps=True, **self.plant_kwargs())
        return self.make_plant()

    def initial_states(self, plant):
        """ (x0, x0_hat) checked against the plant dimension """
        x0 = plant.initial_state() if self.x0 is None else self.x0
        x0_hat = np.zeros(plant.l_x) if self.x0_hat is None else self.x0_hat
        return as_vector(x0, plant.l_x, 'x0').copy(), as_vector(x0_hat, plant.l_x, 'x0_hat').copy()

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


@dataclasses.dataclass(frozen=True, eq=False)
class TimeSeriesRecord:
    """ One closed-loop step: the quantities in use at step k """
    k: int
    z: np.ndarray
    znorm: float
    nu: np.ndarray
    mu_hat: np.ndarray
    muerr: float
    theta: np.ndarray
    y: np.ndarray = None
    y_hat: np.ndarray = None
    diverged: bool = False
    saturated: bool = False
    error: str = None
    x: np.ndarray = None
    x_hat: np.ndarray = None


@dataclasses.dataclass(frozen=True)
class Verdict:
    verdict: str
    final_muerr: float
    diverge_step: int = None


def run_closed_loop(cfg):
    """ Runs truth model, estimation model and estimator for cfg.horizon steps

    At step k both models see u_k; the truth model uses mu and the estimation
    model uses mu_hat_k. z_k = s (yhat_k - y_k) with s = output_scale feeds the
    estimator, which returns mu_hat_{k+1}. The run stops at the first step
    whose |z_k| exceeds z_max or is not finite, or when a model or the
    estimator fails; that last record carries diverged = True. """
    plant = cfg.make_plant()
    model = cfg.make_model()
    x, x_hat = cfg.initial_states(plant)
    mu = cfg.mu_true
    estimator = RcpeEstimator(cfg.rcpe)
    mu_hat = estimator.mu_hat

    logging.info("Closed loop on %s: horizon %d, permutation %s",
                 plant.PLANT_ID, cfg.horizon, cfg.rcpe.permutation)
    start = time.monotonic()
    milestone = max(cfg.horizon // 10, 1)
    records = []

    for k in range(cfg.horizon):
        u = plant.input(k)
        y = plant.output(x, u, mu)
        y_hat = model.output(x_hat, u, mu_hat)
        z = cfg.output_scale * (y_hat - y)
        znorm = float(np.linalg.norm(z))

        record = TimeSeriesRecord(
            k=k, z=z, znorm=znorm, nu=estimator.nu, mu_hat=mu_hat,
            muerr=float(np.linalg.norm(mu_hat - mu)), theta=estimator.theta,
            y=y, y_hat=y_hat, saturated=estimator.saturated,
            x=x if cfg.keep_states else None,
            x_hat=x_hat if cfg.keep_states else None)

        # a non-finite z gives a non-finite norm
        if not np.isfinite(znorm) or znorm > cfg.z_max:
            logging.warning("Output error diverged at step %d (|z| = %.6g)", k, znorm)
            records.append(dataclasses.replace(record, diverged=True))
            break

        try:
            x = plant.step(x, u, mu)
            x_hat = model.step(x_hat, u, mu_hat)
            if k >= cfg.warmup:
                mu_hat = estimator.step(z)
        except NumericalFailure as err:
            logging.warning("Run stopped at step %d: %s", k, err)
            records.append(dataclasses.replace(record, diverged=True, error=str(err)))
            break

        records.append(record)
        if (k + 1) % milestone == 0:
            logging.debug("k = %d, |z| = %.6g, |mu_hat - mu| = %.6g", k + 1, znorm, record.muerr)

    logging.info("Closed loop finished after %d steps in %.2f s",
                 len(records), time.monotonic() - start)
    return records


def classify(records, cfg):
    """ converged when the run went the full horizon and ends within eps_conv of mu """
    if not records:
        return Verdict(DIVERGED, float('nan'), 0)
    last = records[-1]
    if last.diverged:
        return Verdict(DIVERGED, last.muerr, last.k)
    if last.muerr < cfg.eps_conv:
        return Verdict(CONVERGED, last.muerr)
    return Verdict(DIVERGED, last.muerr)


def simulate_truth(cfg, every=1):
    """ Runs only the truth plant; returns [(k, x_k, y_k)] for every k multiple of every """
    if every < 1:
        raise ConfigurationError("must be positive", key='every')
    plant = cfg.make_plant()
    x, _x_hat = cfg.initial_states(plant)
    snapshots = []
    for k in range(cfg.horizon + 1):
        u = plant.input(k)
        if k % every == 0:
            snapshots.append((k, x, plant.output(x, u, cfg.mu_true)))
        if k < cfg.horizon:
            x = plant.step(x, u, cfg.mu_true)
    return plant, snapshots


def run_baseline(cfg, mu0=None, delta=None, processes=1):
    """ Gradient descent on the batch cost of cfg's plant

    Truth data come from the truth model over cfg.horizon steps; the
    estimation model starts from the truth initial state (the batch cost
    assumes it known). Returns records in the closed-loop layout with
    k = iteration and znorm = sqrt(J); fields without a meaning are nan. """
    plant = cfg.make_plant()
    x0, _x0_hat = cfg.initial_states(plant)
    u_seq = [plant.input(k) for k in range(cfg.horizon)]
    _states, y_seq = plant.simulate(x0, cfg.mu_true, cfg.horizon, u_seq)
    cost = baselines.make_batch_cost(cfg.make_model(), x0, u_seq, y_seq)

    mu0 = cfg.rcpe.mu_bar if mu0 is None else as_vector(mu0, plant.l_mu, 'mu0')
    logging.info("Gradient descent on %s: gamma %.3g, %d iterations",
                 plant.PLANT_ID, cfg.gamma, cfg.iterations)
    result = baselines.gradient_descent(cost, mu0, cfg.gamma, cfg.iterations, delta=delta,
                                        workers=processes)
    if result.aborted:
        logging.warning("Gradient descent aborted after %d iterations", result.iterations)

    rcpe = cfg.rcpe
    blank_z = np.full(rcpe.l_y, np.nan)
    blank_nu = np.full(rcpe.l_mu, np.nan)
    blank_theta = np.full(rcpe.l_theta, np.nan)
    records = []
    last = result.iterations
    for j, (mu_j, cost_j) in enumerate(zip(result.trajectory, result.costs)):
        records.append(TimeSeriesRecord(
            k=j, z=blank_z, znorm=float(np.sqrt(cost_j)), nu=blank_nu, mu_hat=mu_j,
            muerr=float(np.linalg.norm(mu_j - cfg.mu_true)), theta=blank_theta,
            diverged=result.aborted and j == last))
    return records, result
