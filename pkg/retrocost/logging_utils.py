#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# logging_utils.py
#
# Copyright © 2019-2020 The retrocost developers
#
# This file is part of retrocost.
#
# retrocost is free software; you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation; either version 3 of the License, or
# (at your option) any later version.
#
# retrocost is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with retrocost; If not, see <http://www.gnu.org/licenses/>.

import logging
import uuid

from retrocost.info import RETROCOST_VERSION


class Singleton(type):
    _instance = None

    def __call__(cls, *args, **kwargs):
        if not cls._instance:
            cls._instance = super(Singleton, cls).__call__(*args, **kwargs)

        return cls._instance

    def __new__(mcs, *args, **kwargs):
        obj = super().__new__(mcs, *args, **kwargs)
        obj.run_id = None
        obj.case_id = '-'
        return obj


class ContextFilter(logging.Filter, metaclass=Singleton):
    """ Stamps every log record with the run id and the current sweep case """

    def __init__(self):
        super().__init__()

        if self.run_id is None:
            uid = str(uuid.uuid1()).split("-")
            self.run_id = uid[3] + "-" + uid[1] + "-" + uid[2] + "-" + uid[4]

    def filter(self, record):
        record.run_id = self.run_id
        record.case_id = self.case_id
        record.version = RETROCOST_VERSION
        return True

    def set_case(self, case_id):
        """ Sets the sweep case reported by subsequent records ('-' clears it) """
        self.case_id = case_id if case_id else '-'
