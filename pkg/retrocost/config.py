#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
#  config.py
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


""" Configuration module for retrocost

Settings are a flat dict. Each plant has its defaults below (mirrored in
dist/etc/<plant>.yml); a config file, the command line flags and repeated
--set KEY=VALUE overrides are applied on top, in that order.

Vectors are comma separated. Matrices are written row by row, rows
separated by ';' and filter taps by '|':

    filter_coeffs: 1 0 0 | 0 1 0 | 0 0 1
    r_theta: 1e6 0; 0 1e6
    saturation: 2.0, none, 5
"""

import logging
import os
import re

import numpy as np
import strictyaml as yaml

from retrocost.estimation.rcpe_core import RcpeConfig
from retrocost.harness.closed_loop import SWEEP_MODES, ExperimentConfig
from retrocost.misc.extra import ConfigurationError, DimensionError

SCHEMA = yaml.Map({
    yaml.Optional('plant'): yaml.Str(),
    yaml.Optional('mu'): yaml.CommaSeparated(yaml.Float()),
    yaml.Optional('x0'): yaml.CommaSeparated(yaml.Float()),
    yaml.Optional('x0_hat'): yaml.CommaSeparated(yaml.Float()),
    yaml.Optional('horizon'): yaml.Int(),
    yaml.Optional('filter_coeffs'): yaml.Str(),
    yaml.Optional('lambda'): yaml.Float(),
    yaml.Optional('beta'): yaml.Float(),
    yaml.Optional('r_theta'): yaml.Str(),
    yaml.Optional('permutation'): yaml.CommaSeparated(yaml.Int()),
    yaml.Optional('mu_bar'): yaml.CommaSeparated(yaml.Float()),
    yaml.Optional('scaling'): yaml.CommaSeparated(yaml.Float()),
    yaml.Optional('z_max'): yaml.Float(),
    yaml.Optional('saturation'): yaml.Str(),
    yaml.Optional('eps_conv'): yaml.Float(),
    yaml.Optional('sweep'): yaml.Enum(list(SWEEP_MODES)),
    yaml.Optional('out'): yaml.Str(),
    yaml.Optional('seed'): yaml.Int(),
    yaml.Optional('grid_points'): yaml.Int(),
    yaml.Optional('dt'): yaml.Float(),
    yaml.Optional('c_max'): yaml.Float(),
    yaml.Optional('measure_index'): yaml.Int(),
    yaml.Optional('stable_substeps'): yaml.Bool(),
    yaml.Optional('output_scale'): yaml.Float(),
    yaml.Optional('warmup'): yaml.Int(),
    yaml.Optional('gamma'): yaml.Float(),
    yaml.Optional('iterations'): yaml.Int(),
})

KEYS = (
    'beta', 'c_max', 'dt', 'eps_conv', 'filter_coeffs', 'gamma', 'grid_points', 'horizon',
    'iterations', 'lambda', 'measure_index', 'mu', 'mu_bar', 'out', 'output_scale',
    'permutation', 'plant', 'r_theta', 'saturation', 'scaling', 'seed', 'stable_substeps',
    'sweep', 'warmup', 'x0', 'x0_hat', 'z_max')

low_order_settings = {
    'beta': 1e6,
    'eps_conv': 5e-2,
    'filter_coeffs': '1 0 0 | 0 1 0 | 0 0 1',
    'gamma': 1e-4,
    'horizon': 200000,
    'iterations': 200,
    'lambda': 0.9999,
    'mu': [0.5, 0.8, 1.0],
    'out': 'results/low_order.csv',
    'output_scale': 1.0,
    'permutation': [2, 1, 3],
    'plant': 'low_order',
    'seed': 0,
    'sweep': 'single',
    'warmup': 0,
    'x0': [10.0, 10.0],
    'z_max': 1e6}

burgers_settings = {
    'beta': 1e6,
    'c_max': 0.25,
    'dt': 1e-4,
    'eps_conv': 5e-2,
    'filter_coeffs': '1 0 | 0 1',
    'gamma': 1e-2,
    'grid_points': 100,
    'horizon': 200000,
    'iterations': 50,
    'lambda': 0.9999,
    'measure_index': 87,
    'mu': [1.4, 0.3],
    'mu_bar': [1.0, 0.01],
    'out': 'results/burgers.csv',
    'output_scale': 1.0,
    'permutation': [2, 1],
    'plant': 'burgers',
    'seed': 0,
    'stable_substeps': True,
    'sweep': 'single',
    'warmup': 0,
    'z_max': 1e6}

DEFAULTS = {
    'low_order': low_order_settings,
    'burgers': burgers_settings}


class ConfigLoader:
    """ Loads one strictyaml experiment file into a flat dict """

    def __init__(self, path=None):
        self.path = path
        self.config = {}
        self.config_loaded = False

    def load_config(self):
        if self.config_loaded or self.path is None:
            return self.config

        if not os.path.exists(self.path):
            raise ConfigurationError("config file {0} not found".format(self.path), key='config')

        with open(self.path, 'r') as config_file:
            data = config_file.read()
        self.config.update(parse_document(data, self.path))
        self.config_loaded = True
        return self.config


def parse_document(text, label='<string>'):
    """ Validates a strictyaml document against SCHEMA """
    try:
        document = yaml.load(text, SCHEMA, label=label)
    except yaml.StrictYAMLError as err:
        raise ConfigurationError("{0}: {1}".format(label, str(err).strip()))
    return dict(document.data)


def parse_override(assignment):
    """ KEY=VALUE -> {KEY: parsed VALUE} """
    key, sep, value = assignment.partition('=')
    key = key.strip()
    if not sep or not key:
        raise ConfigurationError("expected KEY=VALUE, got '{0}'".format(assignment), key='set')
    if key not in KEYS:
        raise ConfigurationError("unknown key (valid keys: {0})".format(', '.join(KEYS)), key=key)
    return parse_document("{0}: {1}\n".format(key, value.strip()), label='--set ' + key)


def load_settings(plant=None, config_path=None, overrides=(), flags=None):
    """ Merges plant defaults, config file, flags and --set overrides """
    file_settings = ConfigLoader(config_path).load_config()
    set_settings = {}
    for assignment in overrides:
        set_settings.update(parse_override(assignment))
    flags = {key: value for key, value in (flags or {}).items() if value is not None}

    plant_id = (set_settings.get('plant') or plant or file_settings.get('plant')
                or 'low_order')
    if plant_id not in DEFAULTS:
        raise ConfigurationError(
            "unknown plant '{0}' (available: {1})".format(plant_id, ', '.join(sorted(DEFAULTS))),
            key='plant')

    settings = dict(DEFAULTS[plant_id])
    if file_settings.get('plant', plant_id) != plant_id:
        logging.warning("Config file is for plant %s, running %s",
                        file_settings['plant'], plant_id)
    settings.update(file_settings)
    settings.update(flags)
    settings.update(set_settings)
    settings['plant'] = plant_id

    for key in sorted(settings):
        logging.debug('%s: %s', key, settings[key])
    return settings


def parse_matrices(text, key):
    """ '1 0 0 | 0 1 0' -> (array([[1, 0, 0]]), array([[0, 1, 0]])) """
    taps = []
    try:
        for tap in str(text).split('|'):
            rows = [[float(value) for value in re.split(r'[\s,]+', row.strip()) if value]
                    for row in tap.split(';')]
            matrix = np.array(rows, dtype=float)
            if matrix.ndim != 2 or matrix.size == 0:
                raise ValueError("rows of unequal length")
            taps.append(matrix)
    except ValueError as err:
        raise ConfigurationError("cannot parse matrix '{0}': {1}".format(text, err), key=key)
    return tuple(taps)


def parse_saturation(text):
    """ '2.0, none, 5' -> [2.0, inf, 5.0] """
    bounds = []
    for value in str(text).split(','):
        value = value.strip().lower()
        if value in ('', 'none', 'inf'):
            bounds.append(np.inf)
            continue
        try:
            bounds.append(float(value))
        except ValueError:
            raise ConfigurationError("cannot parse bound '{0}'".format(value), key='saturation')
    return np.array(bounds)


def _optional_array(settings, key):
    value = settings.get(key)
    return None if value is None else np.array(value, dtype=float)


def build_rcpe(settings):
    r_theta = None
    if settings.get('r_theta'):
        matrices = parse_matrices(settings['r_theta'], 'r_theta')
        if len(matrices) != 1:
            raise ConfigurationError("expected a single matrix", key='r_theta')
        r_theta = matrices[0]

    saturation = None
    if settings.get('saturation'):
        saturation = parse_saturation(settings['saturation'])

    permutation = settings.get('permutation')
    return RcpeConfig(
        filter_coeffs=parse_matrices(settings['filter_coeffs'], 'filter_coeffs'),
        lam=float(settings['lambda']),
        beta=float(settings['beta']),
        permutation=None if permutation is None else tuple(permutation),
        mu_bar=_optional_array(settings, 'mu_bar'),
        scaling=_optional_array(settings, 'scaling'),
        r_theta=r_theta,
        saturation=saturation)


def build_experiment(settings):
    """ Turns merged settings into a validated ExperimentConfig """
    for key in ('plant', 'mu', 'horizon', 'filter_coeffs', 'lambda', 'beta'):
        if key not in settings:
            raise ConfigurationError("missing", key=key)
    try:
        rcpe = build_rcpe(settings)
        optional = {key: settings[key] for key in (
            'sweep', 'z_max', 'eps_conv', 'out', 'seed', 'output_scale', 'warmup',
            'grid_points', 'dt', 'c_max', 'measure_index', 'stable_substeps', 'gamma',
            'iterations')
            if key in settings}
        cfg = ExperimentConfig(
            plant=settings['plant'],
            mu_true=np.array(settings['mu'], dtype=float),
            rcpe=rcpe,
            horizon=int(settings['horizon']),
            x0=_optional_array(settings, 'x0'),
            x0_hat=_optional_array(settings, 'x0_hat'),
            **optional)
        # surfaces plant and dimension errors before any stepping
        cfg.initial_states(cfg.make_plant())
    except DimensionError as err:
        raise ConfigurationError(str(err))
    return cfg
