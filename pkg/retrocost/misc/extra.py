#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
#  extra.py
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

""" Error classes and small helpers shared by all retrocost modules """

import logging
import sys
import traceback

import numpy as np


class RcpeError(Exception):
    """ Base class of every error raised by retrocost """

    def __init__(self, message):
        """ Initialize exception class """
        super().__init__(message)
        self.message = str(message)

    def __repr__(self):
        return "{0}({1!r})".format(type(self).__name__, self.message)

    def __str__(self):
        return self.message


class ConfigurationError(RcpeError):
    """ Invalid experiment or estimator configuration """

    def __init__(self, message, key=None):
        if key is not None:
            message = "{0}: {1}".format(key, message)
        super().__init__(message)
        self.key = key


class InvalidPermutationError(ConfigurationError):
    """ The permutation tuple is not a permutation of (1, ..., l_mu) """


class DimensionError(RcpeError, ValueError):
    """ Array shapes do not conform """


class NumericalFailure(RcpeError):
    """ A numerical operation failed at a given step """

    def __init__(self, message, step=None):
        if step is not None:
            message = "step {0}: {1}".format(step, message)
        super().__init__(message)
        self.step = step


class DivergenceError(NumericalFailure):
    """ Non-finite values reached the estimator """


class SingularDynamicsError(NumericalFailure):
    """ A plant update divided by zero """


class StabilityError(NumericalFailure):
    """ The explicit time step violates the CFL bound """

    def __init__(self, message, u_max, bound, step=None):
        super().__init__(
            "{0} (max|u| = {1:.6g}, dt bound = {2:.6g})".format(message, u_max, bound),
            step=step)
        self.u_max = u_max
        self.bound = bound


class ExportError(RcpeError):
    """ A result file could not be written or read """

    def __init__(self, message, path=None):
        if path is not None:
            message = "{0}: {1}".format(path, message)
        super().__init__(message)
        self.path = path


def as_vector(value, length=None, name='vector'):
    """ Returns value as a 1-D float array, checking its length if given """
    vec = np.atleast_1d(np.asarray(value, dtype=float))
    if vec.ndim != 1:
        raise DimensionError("{0} must be one-dimensional, got shape {1}".format(name, vec.shape))
    if length is not None and vec.shape[0] != length:
        raise DimensionError(
            "{0} must have length {1}, got {2}".format(name, length, vec.shape[0]))
    return vec


def as_matrix(value, shape=None, name='matrix'):
    """ Returns value as a 2-D float array, checking its shape if given """
    mat = np.asarray(value, dtype=float)
    if mat.ndim == 1:
        mat = mat.reshape(1, -1)
    if mat.ndim != 2:
        raise DimensionError("{0} must be two-dimensional, got shape {1}".format(name, mat.shape))
    if shape is not None and mat.shape != tuple(shape):
        raise DimensionError(
            "{0} must have shape {1}, got {2}".format(name, tuple(shape), mat.shape))
    return mat


def all_finite(*arrays):
    """ True when every entry of every array is finite """
    return all(np.all(np.isfinite(arr)) for arr in arrays)


def format_float(value):
    """ Formats a float with 17 significant digits (exact round trip) """
    return '{0:.17g}'.format(float(value))


def log_exception_info():
    """ This function logs information about the exception that is currently
        being handled. The information returned is specific both to the current
        thread and to the current stack frame. """
    exc_type, exc_value, exc_traceback = sys.exc_info()
    trace = traceback.format_exception(exc_type, exc_value, exc_traceback)
    for line in trace:
        logging.debug(line.rstrip())
