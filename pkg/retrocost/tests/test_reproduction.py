#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
#  test_reproduction.py
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

""" Full-length reference experiments (run with: pytest -m slow) """

import pytest

from retrocost import config
from retrocost.harness import sweep
from retrocost.harness.closed_loop import CONVERGED, DIVERGED, classify, run_closed_loop

pytestmark = pytest.mark.slow


def reference_experiment(plant, *overrides):
    return config.build_experiment(config.load_settings(plant=plant, overrides=overrides))


def test_low_order_converges_for_one_permutation_only():
    report = sweep.permutation_sweep(reference_experiment('low_order'), processes=3)
    verdicts = {result.case_id: result.verdict for result in report}
    assert verdicts.pop('p2-1-3') == CONVERGED
    assert set(verdicts.values()) == {DIVERGED}


def test_low_order_error_shrinks():
    cfg = reference_experiment('low_order')
    records = run_closed_loop(cfg)
    assert len(records) == cfg.horizon
    assert records[-1].muerr < records[len(records) // 10].muerr
    assert classify(records, cfg).verdict == CONVERGED


def test_every_filter_sign_converges():
    report = sweep.filter_sign_sweep(reference_experiment('low_order'), processes=4)
    assert len(report) == 48
    for result in report:
        assert result.verdict == CONVERGED, result.case_id
        assert result.s_op_distance < 5e-2, result.case_id


def test_burgers_permutations():
    report = sweep.permutation_sweep(reference_experiment('burgers'), processes=2)
    assert report.by_id('p2-1').diverge_step is None
    assert report.by_id('p2-1').verdict == CONVERGED
    assert report.by_id('p1-2').verdict == DIVERGED
    assert report.by_id('p2-1').s_op_distance < 5e-2
