#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
#  conftest.py
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

""" Shared fixtures """

import numpy as np
import pytest

from retrocost.estimation.rcpe_core import RcpeConfig, default_filter
from retrocost.harness.closed_loop import ExperimentConfig
from retrocost.models.system_model import SystemModel


class RegressorModel(SystemModel):
    """ y_k = phi_k mu with the regressor row phi_k fed in as the input """

    PLANT_ID = 'regressor'

    def __init__(self, l_mu):
        super().__init__(l_x=1, l_u=l_mu, l_y=1, l_mu=l_mu)

    def step(self, x, u, mu):
        return x + 1.0

    def output(self, x, u, mu):
        return np.array([np.dot(u, mu)])


class ZeroModel(SystemModel):
    """ Scalar model whose output is always zero """

    PLANT_ID = 'zero'

    def __init__(self):
        super().__init__(l_x=1, l_u=1, l_y=1, l_mu=1)

    def step(self, x, u, mu):
        return np.array(x, dtype=float)

    def output(self, x, u, mu):
        return np.zeros(1)


@pytest.fixture
def low_order_rcpe():
    """ lambda = 0.9999, R_theta = 1e6 I, N_i = e_i, p = (2, 1, 3) """
    return RcpeConfig(filter_coeffs=default_filter(3), lam=0.9999, beta=1e6,
                      permutation=(2, 1, 3))


@pytest.fixture
def low_order_experiment(low_order_rcpe):
    def make(horizon=500, **changes):
        cfg = ExperimentConfig(plant='low_order', mu_true=np.array([0.5, 0.8, 1.0]),
                               rcpe=low_order_rcpe, horizon=horizon,
                               x0=np.array([10.0, 10.0]))
        return cfg.replace(**changes) if changes else cfg
    return make


@pytest.fixture
def burgers_experiment():
    def make(horizon=500, permutation=(2, 1), **changes):
        rcpe = RcpeConfig(filter_coeffs=(np.array([[1.0, 0.0]]), np.array([[0.0, 1.0]])),
                          lam=0.9999, beta=1e6, permutation=permutation,
                          mu_bar=np.array([1.0, 0.01]))
        cfg = ExperimentConfig(plant='burgers', mu_true=np.array([1.4, 0.3]), rcpe=rcpe,
                               horizon=horizon)
        return cfg.replace(**changes) if changes else cfg
    return make


@pytest.fixture
def rng():
    return np.random.default_rng(20200417)


@pytest.fixture
def regressor_model():
    return RegressorModel


@pytest.fixture
def zero_model():
    return ZeroModel()
