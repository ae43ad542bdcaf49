#!/usr/bin/env python3
# -*- coding: utf-8 -*-
#
# ELDA - lightweight cache pollution attack detection for Named Data Networking.
#
# Released under the GNU Affero General Public License v3.0

import json
from pathlib import Path

_version_file = Path(__file__).resolve().parent.parent / "VERSION.json"


def _read_version():
    try:
        with open(_version_file.as_posix()) as f:
            version = json.load(f)
        return "{major}.{minor}.{hotfix}".format(**version)
    except (OSError, ValueError, KeyError):
        return "0.0.0"


__version__ = _read_version()
