# -*- coding: utf-8 -*-
#
"""
Reading and writing of the plain-text result files.
"""
import json
import os

import numpy

from .errors import ConfigError


def read_json(filename):
    try:
        with open(filename) as f:
            return json.load(f)
    except (IOError, OSError, ValueError) as e:
        raise ConfigError("Cannot read %r: %s" % (filename, e))


def write_json(filename, data):
    with open(filename, "w") as f:
        json.dump(data, f, indent=2, sort_keys=True, default=_to_builtin)
    return


def _to_builtin(obj):
    if isinstance(obj, numpy.ndarray):
        return obj.tolist()
    if isinstance(obj, numpy.generic):
        return obj.item()
    raise TypeError("%r is not JSON serializable" % (obj,))


def write_csv(filename, header, rows):
    """Rows may mix strings and numbers; floats keep full precision."""
    with open(filename, "w") as f:
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(
                ",".join(
                    "%.17g" % v if isinstance(v, (float, numpy.floating)) else str(v)
                    for v in row
                )
                + "\n"
            )
    return


def ensure_directory(path):
    if not os.path.isdir(path):
        os.makedirs(path)
    return path
