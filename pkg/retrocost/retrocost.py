#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
#  retrocost.py
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

""" Main retrocost module: command line entry point

    python -m retrocost.retrocost run --plant low_order
    python -m retrocost.retrocost sweep-perms --plant burgers -j 2
    python -m retrocost.retrocost run --set permutation=1,2,3 --set horizon=5000
"""

import argparse
import logging
import logging.handlers
import sys

from retrocost import config
from retrocost import info
from retrocost.harness import closed_loop
from retrocost.harness import export
from retrocost.harness import sweep
from retrocost.logging_utils import ContextFilter
from retrocost.misc.extra import (
    ConfigurationError,
    ExportError,
    NumericalFailure,
    log_exception_info)

LOG_FILE = '/tmp/retrocost.log'

COMMANDS = ('run', 'sweep-perms', 'sweep-filters', 'baseline', 'simulate')


def setup_logging(cmd_line):
    """ Configure our logger """
    logger = logging.getLogger()

    logger.handlers = []

    if cmd_line.debug:
        log_level = logging.DEBUG
    else:
        log_level = logging.INFO

    logger.setLevel(log_level)

    context_filter = ContextFilter()

    # Log format
    log_format = ("%(asctime)s [%(levelname)s] [%(case_id)s] %(filename)s(%(lineno)d) "
                  "%(funcName)s(): %(message)s")
    formatter = logging.Formatter(
        fmt=log_format,
        datefmt="%Y-%m-%d %H:%M:%S")

    handlers = []

    # File logger
    log_file = cmd_line.log_file or LOG_FILE
    try:
        file_handler = logging.FileHandler(log_file, mode='w')
        handlers.append(file_handler)
    except PermissionError as permission_error:
        print("Can't open {0} : {1}".format(log_file, permission_error))

    # Stdout logger
    if cmd_line.verbose:
        handlers.append(logging.StreamHandler())

    for handler in handlers:
        handler.setLevel(log_level)
        handler.setFormatter(formatter)
        handler.addFilter(context_filter)
        logger.addHandler(handler)

    if cmd_line.log_server:
        # Socket logger
        socket_handler = logging.handlers.SocketHandler(
            cmd_line.log_server,
            logging.handlers.DEFAULT_TCP_LOGGING_PORT)
        socket_handler.addFilter(context_filter)
        logger.addHandler(socket_handler)
        logging.info("Sending retrocost logs to %s with id '%s'",
                     cmd_line.log_server, context_filter.run_id)

    return logger


def parse_options(argv=None):
    """ argparse http://docs.python.org/3/howto/argparse.html """

    desc = "retrocost v{0} - retrospective cost parameter estimation".format(
        info.RETROCOST_VERSION)
    parser = argparse.ArgumentParser(description=desc)

    parser.add_argument(
        "command",
        help="What to do: " + ", ".join(COMMANDS),
        choices=COMMANDS,
        nargs='?')
    parser.add_argument(
        "--plant",
        help="Plant to run (low_order or burgers)",
        nargs='?')
    parser.add_argument(
        "-c", "--config",
        help="Read experiment settings from a strictyaml file",
        nargs='?')
    parser.add_argument(
        "-o", "--out",
        help="Output CSV path",
        nargs='?')
    parser.add_argument(
        "--horizon",
        help="Number of closed-loop steps",
        type=int,
        nargs='?')
    parser.add_argument(
        "--seed",
        help="Random seed (all current experiments are deterministic)",
        type=int,
        nargs='?')
    parser.add_argument(
        "--set",
        help="Override one setting, KEY=VALUE (repeatable)",
        action='append',
        default=[],
        metavar="KEY=VALUE")
    parser.add_argument(
        "--every",
        help="simulate: write one snapshot every N steps",
        type=int,
        default=1)
    parser.add_argument(
        "-j", "--processes",
        help="Run sweep cases in N processes",
        type=int,
        default=1)
    parser.add_argument(
        "-d", "--debug",
        help="Sets retrocost log level to 'debug'",
        action="store_true")
    parser.add_argument(
        "-s", "--log-server",
        help="Also send log records to this host (logging SocketHandler)",
        nargs='?')
    parser.add_argument(
        "--log-file",
        help="Log file path (default {0})".format(LOG_FILE),
        nargs='?')
    parser.add_argument(
        "-v", "--verbose",
        help="Show logging messages to stdout",
        action="store_true")
    parser.add_argument(
        "-V", "--version",
        help="Show retrocost version and quit",
        action="store_true")

    return parser.parse_args(argv)


def experiment_from(cmd_line):
    flags = {'horizon': cmd_line.horizon, 'out': cmd_line.out, 'seed': cmd_line.seed}
    settings = config.load_settings(
        plant=cmd_line.plant,
        config_path=cmd_line.config,
        overrides=cmd_line.set,
        flags=flags)
    return config.build_experiment(settings)


def out_path(cfg, suffix):
    """ results/low_order.csv -> results/low_order-<suffix>.csv """
    path = cfg.out or "{0}.csv".format(cfg.plant)
    if not suffix:
        return path
    stem, dot, ext = path.rpartition('.')
    if not dot:
        return "{0}-{1}".format(path, suffix)
    return "{0}-{1}.{2}".format(stem, suffix, ext)


def run_command(cmd_line):
    """ Runs one subcommand; returns the process exit status """
    cfg = experiment_from(cmd_line)
    command = cmd_line.command
    if command == 'run' and cfg.sweep == 'permutations':
        command = 'sweep-perms'
    elif command == 'run' and cfg.sweep == 'filter_signs':
        command = 'sweep-filters'

    if command == 'run':
        records = closed_loop.run_closed_loop(cfg)
        rcpe = cfg.rcpe
        export.export_csv(records, out_path(cfg, ''), dims=(rcpe.l_y, rcpe.l_mu, rcpe.l_theta))
        verdict = closed_loop.classify(records, cfg)
        logging.info("Verdict: %s, |mu_hat - mu| = %.6g", verdict.verdict, verdict.final_muerr)
        if records and records[-1].error:
            logging.error("Run stopped: %s", records[-1].error)
            return info.EXIT_NUMERICAL_FAILURE
    elif command == 'sweep-perms':
        report = sweep.permutation_sweep(cfg, processes=cmd_line.processes)
        export.export_sweep_csv(report, out_path(cfg, 'perms'))
    elif command == 'sweep-filters':
        report = sweep.filter_sign_sweep(cfg, processes=cmd_line.processes)
        export.export_sweep_csv(report, out_path(cfg, 'filters'))
    elif command == 'baseline':
        records, result = closed_loop.run_baseline(cfg, processes=cmd_line.processes)
        export.export_csv(records, out_path(cfg, 'baseline'))
        if result.aborted:
            return info.EXIT_NUMERICAL_FAILURE
    elif command == 'simulate':
        plant, snapshots = closed_loop.simulate_truth(cfg, every=cmd_line.every)
        export.export_grid_csv(plant, snapshots, out_path(cfg, 'grid'))
    return info.EXIT_OK


def main(argv=None):
    """ Parses the command line, sets up logging and runs the command """
    cmd_line = parse_options(argv)

    if cmd_line.version:
        print("retrocost version {0}".format(info.RETROCOST_VERSION))
        return info.EXIT_OK

    if cmd_line.command is None:
        print("Nothing to do. Use one of: {0}".format(", ".join(COMMANDS)))
        return info.EXIT_CONFIG_ERROR

    setup_logging(cmd_line)
    logging.info("retrocost %s (%s)", info.RETROCOST_VERSION, info.RETROCOST_RELEASE_STAGE)

    try:
        return run_command(cmd_line)
    except ConfigurationError as err:
        logging.error("Configuration error: %s", err)
        print("Configuration error: {0}".format(err), file=sys.stderr)
        return info.EXIT_CONFIG_ERROR
    except NumericalFailure as err:
        logging.error("Numerical failure: %s", err)
        log_exception_info()
        print("Numerical failure: {0}".format(err), file=sys.stderr)
        return info.EXIT_NUMERICAL_FAILURE
    except ExportError as err:
        logging.error(err)
        print(err, file=sys.stderr)
        return info.EXIT_EXPORT_ERROR


if __name__ == '__main__':
    sys.exit(main())
