#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
#  export.py
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

""" CSV output of runs, sweeps and plant snapshots

Floats are written with 17 significant digits, so parsing a file back
gives the exact values that were written.
"""

import csv
import logging
import os

from retrocost.harness.sweep import SweepReport
from retrocost.misc.extra import DimensionError, ExportError, format_float

SWEEP_COLUMNS = ('case_id', 'permutation', 'signs', 'verdict', 'final_muerr',
                 'diverge_step', 's_op_distance')


def record_columns(l_y, l_mu, l_theta):
    """ k, z_1..z_ly, znorm, nu_1.., muhat_1.., muerr, theta_1.., diverged """
    columns = ['k']
    columns += ['z_{0}'.format(i + 1) for i in range(l_y)]
    columns.append('znorm')
    columns += ['nu_{0}'.format(i + 1) for i in range(l_mu)]
    columns += ['muhat_{0}'.format(i + 1) for i in range(l_mu)]
    columns.append('muerr')
    columns += ['theta_{0}'.format(i + 1) for i in range(l_theta)]
    columns.append('diverged')
    return columns


def _floats(values):
    return [format_float(value) for value in values]


def record_row(record):
    row = [str(record.k)]
    row += _floats(record.z)
    row.append(format_float(record.znorm))
    row += _floats(record.nu)
    row += _floats(record.mu_hat)
    row.append(format_float(record.muerr))
    row += _floats(record.theta)
    row.append('1' if record.diverged else '0')
    return row


def sweep_row(result):
    return [
        result.case_id,
        ' '.join(str(i) for i in result.permutation),
        '' if result.signs is None else ' '.join('{0:+d}'.format(s) for s in result.signs),
        result.verdict,
        format_float(result.final_muerr),
        '' if result.diverge_step is None else str(result.diverge_step),
        format_float(result.s_op_distance)]


def _write(path, header, rows):
    directory = os.path.dirname(path)
    try:
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(path, 'w', newline='') as csv_file:
            writer = csv.writer(csv_file, lineterminator='\n')
            writer.writerow(header)
            count = 0
            for row in rows:
                writer.writerow(row)
                count += 1
    except OSError as err:
        raise ExportError(err.strerror or str(err), path=path)
    logging.info("Wrote %d rows to %s", count, path)


def export_csv(records, path, dims=None):
    """ Writes time series records (or a SweepReport) to path

    dims = (l_y, l_mu, l_theta) is needed only when records is empty. """
    if isinstance(records, SweepReport):
        return export_sweep_csv(records, path)
    records = list(records)
    if records:
        first = records[0]
        dims = (len(first.z), len(first.mu_hat), len(first.theta))
    elif dims is None:
        raise DimensionError("dims are needed to write the header of an empty record list")
    _write(path, record_columns(*dims), (record_row(record) for record in records))


def export_sweep_csv(report, path):
    _write(path, SWEEP_COLUMNS, (sweep_row(result) for result in report))


def grid_columns(plant, n_values):
    if hasattr(plant, 'dt'):
        return ['k', 't'] + ['u_{0}'.format(j + 1) for j in range(n_values)]
    return (['k'] + ['x_{0}'.format(j + 1) for j in range(plant.l_x)]
            + ['y_{0}'.format(j + 1) for j in range(plant.l_y)])


def export_grid_csv(plant, snapshots, path):
    """ Writes (k, x_k, y_k) snapshots: k, t, u_1..u_N for a gridded plant,
    k, x_1.., y_1.. for any other """
    gridded = hasattr(plant, 'dt')

    def rows():
        for k, x, y in snapshots:
            if gridded:
                yield [str(k), format_float(k * plant.dt)] + _floats(x)
            else:
                yield [str(k)] + _floats(x) + _floats(y)

    _write(path, grid_columns(plant, plant.l_x), rows())


def read_csv(path):
    """ Returns (header, rows) of a file written by this module """
    try:
        with open(path, newline='') as csv_file:
            reader = csv.reader(csv_file)
            header = next(reader)
            return header, [row for row in reader]
    except (OSError, StopIteration) as err:
        raise ExportError(str(err) or "empty file", path=path)
