#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
#  burgers.py
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

""" Generalized viscous Burgers equation on [0, 1]

    u_t + mu1 (u^2 / 2)_x = (mu2 u_x)_x

Forward Euler in time, second-order upwind for the convective term and
second-order central differences for the viscous term. Grid points are
numbered 1..N in the docstrings (0..N-1 in the arrays). Points 1 and 2 are
pinned to zero, point N is forced with sin(5t) + 0.25 sin(10t).
"""

import dataclasses
import logging
import math

import numpy as np

from retrocost.misc.extra import (
    ConfigurationError,
    DivergenceError,
    StabilityError,
    as_vector)
from retrocost.models.system_model import SystemModel

CLASS_NAME = "BurgersPlant"

TRUE_MU = (1.4, 0.3)
GRID_POINTS = 100
TIME_STEP = 1e-4
COURANT_MAX = 0.25
MEASURE_INDEX = 87

# mu2 dt / dx^2 kept at or below this by the sub-stepping model
DIFFUSION_NUMBER_MAX = 0.4
MAX_SUBSTEPS = 1000


@dataclasses.dataclass(frozen=True, eq=False)
class BurgersGrid:
    """ Grid values at step k together with the discretization constants """
    u: np.ndarray
    dt: float
    c_max: float
    mu1: float
    mu2: float
    k: int = 0

    @property
    def n(self):
        return self.u.shape[0]

    @property
    def dx(self):
        return 1.0 / (self.n - 1)

    @property
    def t(self):
        return self.k * self.dt


def cfl_bound(dx, u_max, c_max):
    """ Strict upper bound c_max dx / |max u| on an admissible time step """
    u_max = abs(u_max)
    if u_max == 0.0:
        return math.inf
    return c_max * dx / u_max


def check_cfl(u, dt, dx, c_max, step=None):
    """ Raises StabilityError unless dt < c_max dx / max|u| """
    if not np.all(np.isfinite(u)):
        raise DivergenceError("non-finite grid values", step=step)
    u_max = float(np.max(np.abs(u)))
    bound = cfl_bound(dx, u_max, c_max)
    if not dt < bound:
        raise StabilityError("CFL condition violated", u_max, bound, step=step)
    return bound


def burgers_boundary(k, dt):
    """ Boundary values (u_1, u_2, u_N) at step k """
    if k < 0:
        raise ValueError("k must be nonnegative")
    t = dt * k
    return 0.0, 0.0, math.sin(5.0 * t) + 0.25 * math.sin(10.0 * t)


def advance(u, mu1, mu2, dt, dx, u_right):
    """ One explicit step of the stencil on points 3..N-1, boundaries reassigned """
    conv = mu1 * dt / (2.0 * dx)
    diff = mu2 * dt / (dx * dx)
    sq = u * u
    u_next = u.copy()
    u_next[2:-1] = (u[2:-1]
                    - conv * (1.5 * sq[2:-1] - 2.0 * sq[1:-2] + 0.5 * sq[:-3])
                    + diff * (u[3:] - 2.0 * u[2:-1] + u[1:-2]))
    u_next[0] = 0.0
    u_next[1] = 0.0
    u_next[-1] = u_right
    return u_next


def substep_count(u, mu2, dt, dx, c_max):
    """ Number of equal sub-steps that split dt into explicitly stable pieces

    Each piece keeps mu2 dt / dx^2 <= DIFFUSION_NUMBER_MAX and stays below
    half the CFL bound of the current grid, leaving room for u to grow
    inside the step. """
    limit = cfl_bound(dx, float(np.max(np.abs(u))), 0.5 * c_max)
    if mu2 > 0.0:
        limit = min(limit, DIFFUSION_NUMBER_MAX * dx * dx / mu2)
    if dt <= limit:
        return 1
    return int(math.ceil(dt / limit))


def advance_stable(u, mu1, mu2, dt, dx, c_max, u_right, step=None):
    """ Advances u by dt in substep_count() pieces, each CFL-checked

    The right boundary moves linearly from its current value to u_right. """
    if not np.all(np.isfinite(u)):
        raise DivergenceError("non-finite grid values", step=step)
    count = substep_count(u, mu2, dt, dx, c_max)
    if count > MAX_SUBSTEPS:
        raise StabilityError("mu2 = {0:.6g} needs {1} sub-steps".format(mu2, count),
                             float(np.max(np.abs(u))), dt / count, step=step)
    sub_dt = dt / count
    u_left = u[-1]
    for j in range(1, count + 1):
        check_cfl(u, sub_dt, dx, c_max, step=step)
        right = u_right if j == count else u_left + (u_right - u_left) * j / count
        u = advance(u, mu1, mu2, sub_dt, dx, right)
    return u


def burgers_step(grid):
    """ Advances the grid from step k to step k + 1 """
    check_cfl(grid.u, grid.dt, grid.dx, grid.c_max, step=grid.k)
    _left, _left2, right = burgers_boundary(grid.k + 1, grid.dt)
    u_next = advance(grid.u, grid.mu1, grid.mu2, grid.dt, grid.dx, right)
    return dataclasses.replace(grid, u=u_next, k=grid.k + 1)


def burgers_measure(grid, index=MEASURE_INDEX):
    """ Returns u at the 1-based grid point index """
    if grid.n < index:
        raise ConfigurationError(
            "grid has {0} points, measurement needs {1}".format(grid.n, index),
            key='grid_points')
    return float(grid.u[index - 1])


def initial_grid(n=GRID_POINTS, dt=TIME_STEP, c_max=COURANT_MAX, mu=TRUE_MU):
    """ Zero initial condition with the k = 0 boundary values """
    u = np.zeros(n)
    u[0], u[1], u[-1] = burgers_boundary(0, dt)
    return BurgersGrid(u=u, dt=dt, c_max=c_max, mu1=float(mu[0]), mu2=float(mu[1]), k=0)


class BurgersPlant(SystemModel):
    """ The discretized Burgers equation as a SystemModel

    The state is the whole grid. The input u_k is the right boundary value
    assigned by the step from k to k + 1, so truth and estimation models are
    forced identically. The output is the grid value at measure_index.

    With stable_substeps the step is split whenever the parameters passed in
    would make the fixed dt explicitly unstable (see advance_stable). At
    parameters the fixed dt already handles, both modes agree exactly.
    """

    PLANT_ID = 'burgers'

    def __init__(self, grid_points=GRID_POINTS, dt=TIME_STEP, c_max=COURANT_MAX,
                 measure_index=MEASURE_INDEX, stable_substeps=False):
        if grid_points < 4:
            raise ConfigurationError("at least 4 grid points are needed", key='grid_points')
        if measure_index < 1 or grid_points < measure_index:
            raise ConfigurationError(
                "grid has {0} points, measurement needs {1}".format(grid_points, measure_index),
                key='measure_index')
        if dt <= 0.0 or c_max <= 0.0:
            raise ConfigurationError("dt and c_max must be positive", key='dt')

        super().__init__(l_x=grid_points, l_u=1, l_y=1, l_mu=2)
        self.dt = dt
        self.c_max = c_max
        self.dx = 1.0 / (grid_points - 1)
        self.measure_index = measure_index
        self.stable_substeps = stable_substeps

        logging.debug(
            "Burgers grid: N=%d, dx=%.6g, dt=%.3g, C_max=%.3g, sub-steps %s",
            grid_points, self.dx, dt, c_max, 'on' if stable_substeps else 'off')

    def step(self, x, u, mu):
        u = as_vector(u, 1, 'u')
        if self.stable_substeps:
            return advance_stable(x, mu[0], mu[1], self.dt, self.dx, self.c_max, u[0])
        check_cfl(x, self.dt, self.dx, self.c_max)
        return advance(x, mu[0], mu[1], self.dt, self.dx, u[0])

    def output(self, x, u, mu):
        return np.array([x[self.measure_index - 1]])

    def input(self, k):
        return np.array([burgers_boundary(k + 1, self.dt)[2]])

    def initial_state(self):
        return initial_grid(self.l_x, self.dt, self.c_max).u

