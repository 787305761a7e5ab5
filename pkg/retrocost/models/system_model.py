#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
#  system_model.py
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

""" Discrete-time plant interface and plant discovery """

import importlib
import logging

import numpy as np

from retrocost.misc.extra import ConfigurationError

# Plant modules scanned by load_plants(). Each one defines CLASS_NAME.
_PLANT_MODULES = ['low_order', 'burgers']


class SystemModel(object):
    """ This is an abstract class. You need to use this as base

    A plant is the pair of maps x_{k+1} = f(x_k, u_k, mu) and
    y_k = g(x_k, u_k, mu). The same object serves as truth model (run with
    the true mu) and as estimation model (run with the current estimate).
    Both maps must be pure: no state is kept between calls.
    """

    PLANT_ID = None

    def __init__(self, l_x, l_u, l_y, l_mu):
        self.l_x = l_x
        self.l_u = l_u
        self.l_y = l_y
        self.l_mu = l_mu

    def step(self, x, u, mu):
        """ Returns the next state f(x, u, mu) """
        raise NotImplementedError("step is not implemented")

    def output(self, x, u, mu):
        """ Returns the measurement g(x, u, mu) """
        raise NotImplementedError("output is not implemented")

    def input(self, k):
        """ Returns the measured input u_k driving both truth and estimation models """
        return np.zeros(self.l_u)

    def initial_state(self):
        """ Default truth initial state """
        return np.zeros(self.l_x)

    def simulate(self, x0, mu, horizon, u_seq=None):
        """ Runs the plant for horizon steps

        Returns (states, outputs) with states of shape (horizon + 1, l_x) and
        outputs of shape (horizon, l_y); outputs[k] = g(x_k, u_k, mu). """
        x = np.array(x0, dtype=float)
        states = np.empty((horizon + 1, self.l_x))
        outputs = np.empty((horizon, self.l_y))
        states[0] = x
        for k in range(horizon):
            u = self.input(k) if u_seq is None else u_seq[k]
            outputs[k] = self.output(x, u, mu)
            x = self.step(x, u, mu)
            states[k + 1] = x
        return states, outputs

    def __str__(self):
        return "plant: {0}, l_x: {1}, l_u: {2}, l_y: {3}, l_mu: {4}".format(
            self.PLANT_ID,
            self.l_x,
            self.l_u,
            self.l_y,
            self.l_mu)


def load_plants():
    """ Returns a dict PLANT_ID -> plant class for every plant module found """
    plants = {}

    for name in _PLANT_MODULES:
        package = "retrocost.models." + name
        try:
            module = importlib.import_module(package)
            class_name = getattr(module, "CLASS_NAME")
            cls = getattr(module, class_name)
            plants[cls.PLANT_ID] = cls
        except ImportError as err:
            logging.error("Error importing %s : %s", package, err)
        except AttributeError as err:
            logging.error("Plant module %s does not define its class: %s", package, err)

    return plants


def create_plant(plant_id, **kwargs):
    """ Instantiates the plant registered as plant_id """
    plants = load_plants()
    try:
        cls = plants[plant_id]
    except KeyError:
        raise ConfigurationError(
            "unknown plant '{0}' (available: {1})".format(plant_id, ', '.join(sorted(plants))),
            key='plant')
    return cls(**kwargs)
