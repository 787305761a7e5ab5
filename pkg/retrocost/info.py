#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
#  info.py
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


""" Set some retrocost global constants """

RETROCOST_VERSION = "0.3.1"
RETROCOST_RELEASE_STAGE = "development"

EXIT_OK = 0
EXIT_EXPORT_ERROR = 1
EXIT_CONFIG_ERROR = 2
EXIT_NUMERICAL_FAILURE = 3

if __name__ == '__main__':
    print(RETROCOST_VERSION)
