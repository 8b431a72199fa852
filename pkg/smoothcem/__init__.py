# -*- coding: utf-8 -*-
#
from . import contact
from . import errors
from . import fileio
from . import forward
from . import inverse
from . import linear_solvers
from . import mesh
from . import numerical_methods
from . import shapederiv
from . import study
from . import yaml

from .__about__ import (
    __author__,
    __author_email__,
    __license__,
    __version__,
    __status__,
)

__all__ = [
    "__author__",
    "__author_email__",
    "__license__",
    "__version__",
    "__status__",
    "contact",
    "errors",
    "fileio",
    "forward",
    "inverse",
    "linear_solvers",
    "mesh",
    "numerical_methods",
    "shapederiv",
    "study",
    "yaml",
]
