# -*- coding: utf-8 -*-
#
"""
Exceptions raised by smoothcem.

Configuration and contract violations derive from :class:`ValueError`,
numerical breakdowns from :class:`RuntimeError`, so callers that only know the
builtin hierarchy still catch them.
"""


class CemError(Exception):
    """Base class of all smoothcem errors."""


class ConfigError(CemError, ValueError):
    """Invalid input: the caller asked for something ill-defined."""


class AlignmentError(ConfigError):
    """An electrode end point does not lie on a mesh node."""


class LayoutError(ConfigError):
    """Electrodes overlap, touch, cross a corner, or are too few."""


class ParameterError(ConfigError):
    """A model parameter is out of its admissible range."""


class ContractError(ConfigError):
    """Arguments are individually valid but do not fit together."""


class DomainError(ConfigError):
    """An arclength lies outside of [0, 4)."""


class ElectrodeIndexError(ConfigError, IndexError):
    """Electrode index outside of 1, ..., M."""


class NumericalError(CemError, RuntimeError):
    """The computation broke down."""


class AssemblyError(NumericalError):
    """The finite element system could not be assembled."""


class SolverError(NumericalError):
    """The linear system is singular or the solver did not converge."""


class ConvergenceError(NumericalError):
    """An outer iteration (minimization, bracketing) failed."""
