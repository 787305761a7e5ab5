#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
#  sweep.py
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

""" Permutation and filter sign sweeps

Every case is an independent closed-loop run. With processes > 1 the cases
are spread over a multiprocessing pool; imap keeps the case order, so the
report does not depend on the number of processes.
"""

import dataclasses
import itertools
import logging
import multiprocessing

import numpy as np

from retrocost.estimation.rcpe_core import permutation_count, s_op_distance
from retrocost.harness.closed_loop import CONVERGED, classify, run_closed_loop
from retrocost.logging_utils import ContextFilter
from retrocost.misc.extra import ConfigurationError, log_exception_info

# Coefficient assignments for l_mu = 3, l_y = 1: the identity rows used as
# N_1, N_2, N_3 (0-based) and the permutation that pairs with them
COEFFICIENT_CASES = (
    ((0, 1, 2), (2, 1, 3)),
    ((0, 2, 1), (3, 1, 2)),
    ((1, 0, 2), (1, 2, 3)),
    ((1, 2, 0), (3, 2, 1)),
    ((2, 1, 0), (2, 3, 1)),
    ((2, 0, 1), (1, 3, 2)),
)

# l_mu = 6; a larger permutation sweep is refused
MAX_PERMUTATION_CASES = 720

# Signs (sigma_1, sigma_2, sigma_3) of the filters G_f1 .. G_f8
SIGN_PATTERNS = (
    (1, 1, 1),
    (-1, 1, 1),
    (1, -1, 1),
    (1, 1, -1),
    (-1, -1, 1),
    (1, -1, -1),
    (-1, 1, -1),
    (-1, -1, -1),
)


@dataclasses.dataclass(frozen=True, eq=False)
class SweepCase:
    case_id: str
    cfg: object
    permutation: tuple
    signs: tuple = None


@dataclasses.dataclass(frozen=True, eq=False)
class SweepResult:
    case_id: str
    permutation: tuple
    signs: tuple
    verdict: str
    final_muerr: float
    diverge_step: int = None
    nu_limit: np.ndarray = None
    s_op_distance: float = float('nan')
    error: str = None

    @property
    def converged(self):
        return self.verdict == CONVERGED


@dataclasses.dataclass(frozen=True, eq=False)
class SweepReport:
    mode: str
    results: tuple

    def __len__(self):
        return len(self.results)

    def __iter__(self):
        return iter(self.results)

    def converged(self):
        return [result for result in self.results if result.converged]

    def by_id(self, case_id):
        for result in self.results:
            if result.case_id == case_id:
                return result
        raise KeyError(case_id)


def permutation_case_id(permutation):
    return "p" + "-".join(str(i) for i in permutation)


def permutation_cases(cfg):
    """ One case per permutation of (1, ..., l_mu), in lexicographic order """
    count = permutation_count(cfg.rcpe.l_mu)
    if count > MAX_PERMUTATION_CASES:
        raise ConfigurationError(
            "l_mu = {0} gives {1} permutations, at most {2} are swept".format(
                cfg.rcpe.l_mu, count, MAX_PERMUTATION_CASES),
            key='sweep')
    cases = []
    for permutation in itertools.permutations(range(1, cfg.rcpe.l_mu + 1)):
        rcpe = cfg.rcpe.replace(permutation=permutation)
        cases.append(SweepCase(
            case_id=permutation_case_id(permutation),
            cfg=cfg.replace(rcpe=rcpe, sweep='single'),
            permutation=permutation))
    return cases


def filter_sign_cases(cfg):
    """ The 6 coefficient assignments times the 8 sign patterns """
    if cfg.rcpe.l_mu != 3 or cfg.rcpe.l_y != 1:
        raise ConfigurationError(
            "filter sign sweep needs l_mu = 3 and l_y = 1, got l_mu = {0}, l_y = {1}".format(
                cfg.rcpe.l_mu, cfg.rcpe.l_y),
            key='sweep')
    rows = np.eye(3)
    cases = []
    for case_no, (order, permutation) in enumerate(COEFFICIENT_CASES, start=1):
        for filter_no, signs in enumerate(SIGN_PATTERNS, start=1):
            coeffs = tuple(sign * rows[row:row + 1] for sign, row in zip(signs, order))
            rcpe = cfg.rcpe.replace(filter_coeffs=coeffs, permutation=permutation)
            cases.append(SweepCase(
                case_id="C{0}-G_f{1}".format(case_no, filter_no),
                cfg=cfg.replace(rcpe=rcpe, sweep='single'),
                permutation=permutation,
                signs=signs))
    return cases


def run_case(case):
    """ Runs one case and reduces its records to a SweepResult """
    ContextFilter().set_case(case.case_id)
    try:
        records = run_closed_loop(case.cfg)
    except Exception as err:
        # keep the remaining cases alive
        logging.error("Case %s failed: %s", case.case_id, err)
        log_exception_info()
        return SweepResult(case_id=case.case_id, permutation=case.permutation, signs=case.signs,
                           verdict='diverged', final_muerr=float('nan'), error=str(err))
    finally:
        ContextFilter().set_case(None)

    verdict = classify(records, case.cfg)
    nu_limit = records[-1].nu if records else None
    distance = float('nan')
    if nu_limit is not None and verdict.diverge_step is None:
        try:
            distance = s_op_distance(nu_limit, case.cfg.mu_true, case.cfg.rcpe)
        except ValueError as err:
            logging.debug("No S_Op distance for %s: %s", case.case_id, err)

    logging.info("Case %s: %s (|mu_hat - mu| = %.6g)",
                 case.case_id, verdict.verdict, verdict.final_muerr)
    return SweepResult(
        case_id=case.case_id, permutation=case.permutation, signs=case.signs,
        verdict=verdict.verdict, final_muerr=verdict.final_muerr,
        diverge_step=verdict.diverge_step, nu_limit=nu_limit, s_op_distance=distance,
        error=records[-1].error if records else None)


def run_cases(cases, processes=1):
    if processes > 1 and len(cases) > 1:
        with multiprocessing.Pool(processes=min(processes, len(cases))) as pool:
            return tuple(pool.imap(run_case, cases))
    return tuple(run_case(case) for case in cases)


def permutation_sweep(cfg, processes=1):
    """ Runs the closed loop once for every permutation of (1, ..., l_mu) """
    cases = permutation_cases(cfg)
    logging.info("Permutation sweep: %d cases", len(cases))
    report = SweepReport(mode='permutations', results=run_cases(cases, processes))
    logging.info("Permutation sweep: %d of %d converged", len(report.converged()), len(report))
    return report


def filter_sign_sweep(cfg, processes=1):
    """ Runs the 48 filter sign cases for a three-parameter, one-output plant """
    cases = filter_sign_cases(cfg)
    logging.info("Filter sign sweep: %d cases", len(cases))
    report = SweepReport(mode='filter_signs', results=run_cases(cases, processes))
    logging.info("Filter sign sweep: %d of %d converged", len(report.converged()), len(report))
    return report
