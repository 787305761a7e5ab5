#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
#  low_order.py
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

""" Rational second-order plant with three affinely entering parameters

    x1+ = x2
    x2+ = (mu1 + mu2 x2 + mu3 x1) / (1 + 0.6 x2 + 1.1 x1) + u
    y   = x1
"""

import math

import numpy as np

from retrocost.misc.extra import SingularDynamicsError, as_vector
from retrocost.models.system_model import SystemModel

CLASS_NAME = "LowOrderPlant"

TRUE_MU = (0.5, 0.8, 1.0)
INITIAL_STATE = (10.0, 10.0)

MULTISINE_PERIOD = 100
MULTISINE_HARMONICS = 15
MULTISINE_OFFSET = 2.0


def low_order_step(x, u, mu):
    """ Returns the next state of the plant """
    x1, x2 = x[0], x[1]
    den = 1.0 + 0.6 * x2 + 1.1 * x1
    if den == 0.0:
        raise SingularDynamicsError(
            "zero denominator at x = [{0!r}, {1!r}]".format(float(x1), float(x2)))
    num = mu[0] + mu[1] * x2 + mu[2] * x1
    return np.array([x2, num / den + u])


def multisine_input(k):
    """ u_k = 2 + sum_{i=1..15} sin(2 pi i k / 100)

    k is reduced modulo the period first, so the sequence is exactly periodic. """
    if k < 0:
        raise ValueError("k must be nonnegative")
    phase = 2.0 * math.pi * (k % MULTISINE_PERIOD) / MULTISINE_PERIOD
    return MULTISINE_OFFSET + math.fsum(
        math.sin(i * phase) for i in range(1, MULTISINE_HARMONICS + 1))


class LowOrderPlant(SystemModel):
    """ Two-state rational plant, scalar input, scalar output, three parameters """

    PLANT_ID = 'low_order'

    def __init__(self):
        super().__init__(l_x=2, l_u=1, l_y=1, l_mu=3)

    def step(self, x, u, mu):
        u = as_vector(u, 1, 'u')
        return low_order_step(x, u[0], mu)

    def output(self, x, u, mu):
        return np.array([x[0]])

    def input(self, k):
        return np.array([multisine_input(k)])

    def initial_state(self):
        return np.array(INITIAL_STATE)
