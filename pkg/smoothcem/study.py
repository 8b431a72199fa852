# -*- coding: utf-8 -*-
#
"""
Comparison of the box and hat conductance models and convergence studies
against fine reference meshes.

All relative differences are taken over the common patterns
:math:`e_M - e_m`, m = 1, ..., M-1, with zero-mean electrode potentials:

.. math::
    d_U = \\frac{(\\sum_m \\|U^{(m)} - U^{(m)}_{ref}\\|^2)^{1/2}}
               {(\\sum_m \\|U^{(m)}_{ref}\\|^2)^{1/2}}.
"""
import logging
from multiprocessing.pool import ThreadPool

import numpy

from . import fileio
from .contact import make_profile
from .errors import ContractError, NumericalError, ParameterError
from .forward import Phantom, assemble, reference_patterns
from .mesh import build_mesh, get_layout
from .numerical_methods import fit_slope, golden_section
from .shapederiv import derivative_integrals

logger = logging.getLogger(__name__)


def _map(f, items, threads=1):
    """Ordered map, run on a thread pool if threads > 1."""
    items = list(items)
    if threads is None or threads <= 1 or len(items) < 2:
        return [f(item) for item in items]
    pool = ThreadPool(processes=min(threads, len(items)))
    try:
        return pool.map(f, items)
    finally:
        pool.close()
        pool.join()


def potentials(mesh, sigma, zeta, patterns=None):
    """Zero-mean electrode potentials, one row per pattern."""
    if patterns is None:
        patterns = reference_patterns(zeta.num_electrodes)
    return assemble(mesh, sigma, zeta).potentials(patterns)


def _relative(U, U_ref):
    return numpy.linalg.norm(U - U_ref) / numpy.linalg.norm(U_ref)


def relative_difference(mesh, sigma, zeta_box, zeta_hat, patterns=None):
    """d_U of the second profile's potentials against the first's."""
    if zeta_box.layout != zeta_hat.layout:
        raise ContractError("Both profiles must use the same electrodes.")
    U_ref = potentials(mesh, sigma, zeta_box, patterns)
    return _relative(potentials(mesh, sigma, zeta_hat, patterns), U_ref)


def ratio_grid(num=20, lo=1.0e-4, hi=10.0):
    """Logarithmic grid of ratios sigma / zeta_el in meters."""
    return numpy.logspace(numpy.log10(lo), numpy.log10(hi), num)


class DifferenceCurve(object):
    def __init__(self, ratios, values, level, models=("box", "hat")):
        self.ratios = numpy.asarray(ratios)
        self.values = numpy.asarray(values)
        self.level = level
        self.models = models
        return

    @property
    def failures(self):
        return self.ratios[numpy.isnan(self.values)]

    def peak(self):
        k = numpy.nanargmax(self.values)
        return self.ratios[k], self.values[k]

    def write_csv(self, filename):
        fileio.write_csv(filename, ["ratio", "d_U"], zip(self.ratios, self.values))
        return


def _guarded(f, label):
    """f, with numerical failures turned into NaN."""

    def g(x):
        try:
            return f(x)
        except NumericalError as e:
            logger.warning("%s failed at %g: %s", label, x, e)
            return numpy.nan

    return g


def difference_curve(mesh, ratios=None, sigma=1.0, threads=1):
    """d_U between box and equal-area hat over a range of sigma / zeta_el."""
    ratios = ratio_grid() if ratios is None else numpy.asarray(ratios)
    layout = mesh.layout

    def d(ratio):
        zeta_el = sigma / ratio
        return relative_difference(
            mesh,
            sigma,
            make_profile(layout, "box", zeta_el),
            make_profile(layout, "hat", zeta_el),
        )

    values = _map(_guarded(d, "Model difference"), ratios, threads)
    return DifferenceCurve(ratios, values, mesh.level)


def optimize_scaling(mesh, sigma, zeta_el, bracket=(0.1, 100.0), rtol=1.0e-4):
    """Hat parameter zeta' minimizing d_U against the box with height zeta_el.

    Golden-section search over log zeta' in bracket * zeta_el; the bracket is
    widened by a factor of ten on each side if the minimizer hits an end.
    Returns (zeta', d_U').
    """
    if not zeta_el > 0.0:
        raise ParameterError("Box height must be positive.")
    layout = mesh.layout
    U_ref = potentials(mesh, sigma, make_profile(layout, "box", zeta_el))

    def objective(log_zeta):
        zeta = make_profile(layout, "hat", numpy.exp(log_zeta))
        return _relative(potentials(mesh, sigma, zeta), U_ref)

    lo, hi = bracket
    tol = numpy.log1p(rtol)
    for attempt in range(2):
        result = golden_section(
            objective, numpy.log(lo * zeta_el), numpy.log(hi * zeta_el), tol=tol
        )
        if not result["boundary"]:
            break
        lo, hi = lo / 10.0, hi * 10.0
    else:
        logger.warning(
            "Optimal hat parameter for zeta_el = %g lies on the search bracket.", zeta_el
        )
    return numpy.exp(result["x"]), result["fun"]


class ScalingCurve(object):
    def __init__(self, zeta_el, zeta_prime, d_prime):
        self.zeta_el = numpy.asarray(zeta_el)
        self.zeta_prime = numpy.asarray(zeta_prime)
        self.d_prime = numpy.asarray(d_prime)
        return

    def write_csv(self, filename):
        fileio.write_csv(
            filename,
            ["zeta_el", "zeta_prime", "d_U_prime"],
            zip(self.zeta_el, self.zeta_prime, self.d_prime),
        )
        return


def scaling_curve(mesh, ratios=None, sigma=1.0, threads=1):
    ratios = ratio_grid() if ratios is None else numpy.asarray(ratios)
    zeta_el = sigma / ratios

    def opt(z):
        try:
            return optimize_scaling(mesh, sigma, z)
        except NumericalError as e:
            logger.warning("Scaling optimization failed at %g: %s", z, e)
            return numpy.nan, numpy.nan

    results = _map(opt, zeta_el, threads)
    return ScalingCurve(zeta_el, [r[0] for r in results], [r[1] for r in results])


def _slope_window(n):
    return min(4, n)


class RateTable(object):
    """Relative errors over mesh sizes, per model and element order."""

    def __init__(self):
        self.rows = []
        self.slopes = {}
        return

    def add(self, model, order, h, errors):
        h = numpy.asarray(h)
        errors = numpy.asarray(errors)
        for hk, ek in zip(h, errors):
            self.rows.append((model, order, hk, ek))
        w = _slope_window(len(h))
        self.slopes[(model, order)] = fit_slope(h[-w:], errors[-w:])
        return

    def errors(self, model, order):
        return numpy.array([r[3] for r in self.rows if r[:2] == (model, order)])

    def mesh_sizes(self, model, order):
        return numpy.array([r[2] for r in self.rows if r[:2] == (model, order)])

    def write_csv(self, filename):
        fileio.write_csv(
            filename,
            ["model", "order", "h", "error", "slope"],
            [r + (self.slopes[r[:2]],) for r in self.rows],
        )
        return


def _check_levels(levels, reference_level):
    if reference_level <= max(levels) + 1:
        raise ContractError(
            "Reference level %d must exceed the finest level %d by at least two."
            % (reference_level, max(levels))
        )
    return sorted(levels)


def convergence_study(
    layout, sigma, profiles, orders, levels, reference_level, patterns=None, threads=1
):
    """Relative U-errors against the reference solution of the same model and
    element order.

    :param profiles: dict mapping model names to conductance profiles.
    """
    levels = _check_levels(levels, reference_level)
    table = RateTable()
    for model, zeta in profiles.items():
        for order in orders:
            ref_mesh = build_mesh(reference_level, layout, order)
            U_ref = potentials(ref_mesh, sigma, zeta, patterns)

            def error(level):
                mesh = build_mesh(level, layout, order)
                return _relative(potentials(mesh, sigma, zeta, patterns), U_ref)

            errors = _map(error, levels, threads)
            table.add(model, order, [2.0 ** -k for k in levels], errors)
            logger.info(
                "%s, order %d: slope %.2f", model, order, table.slopes[(model, order)]
            )
    return table


class DerivativeRates(object):
    """delta_i over mesh sizes for the three boundary integrals."""

    def __init__(self):
        self.rows = []
        return

    def add(self, i, model, h, delta):
        self.rows.append((i, model, h, delta))
        return

    def deltas(self, i, model):
        return numpy.array([r[3] for r in self.rows if r[:2] == (i, model)])

    def write_csv(self, filename):
        fileio.write_csv(filename, ["i", "model", "h", "delta"], self.rows)
        return


def _lower_relative(A, A_ref):
    mask = numpy.tril(numpy.ones(A.shape, dtype=bool))
    return numpy.linalg.norm((A - A_ref)[mask]) / numpy.linalg.norm(A_ref[mask])


def derivative_convergence(
    layout, sigma, profiles, levels, reference_level, patterns=None, threads=1
):
    """Errors of the three boundary integrals (P1 elements) over pairs of
    patterns n <= m, relative to the reference mesh."""
    levels = _check_levels(levels, reference_level)
    rates = DerivativeRates()
    for model, zeta in profiles.items():
        if patterns is None:
            patterns = reference_patterns(zeta.num_electrodes)

        def integrals(level):
            mesh = build_mesh(level, layout, 1)
            solutions = assemble(mesh, sigma, zeta).solve_many(patterns)
            return derivative_integrals(solutions, zeta)

        ref = integrals(reference_level)
        for level, D in zip(levels, _map(integrals, levels, threads)):
            for i in (1, 2, 3):
                rates.add(i, model, 2.0 ** -level, _lower_relative(D[i], ref[i]))
    return rates


DEFAULT_PHANTOM = {
    "background": 1.0,
    "inclusions": [
        {"center": [0.3, 0.6], "radius": 0.15, "value": 2.0, "smoothing": 0.05},
        {"center": [0.65, 0.35], "radius": 0.2, "value": 0.5, "smoothing": 0.05},
    ],
}


def random_contacts(layout, kind, rng, lo=20.0, hi=250.0):
    """Profile with log-uniform random heights in [lo, hi]."""
    heights = numpy.exp(rng.uniform(numpy.log(lo), numpy.log(hi), layout.num_electrodes))
    return make_profile(layout, kind, heights)


def inhomogeneous_configuration(seed=0, phantom=None, layout="default12"):
    """Phantom conductivity and random box and hat contacts with equal heights.

    Returns (layout, sigma, profiles).
    """
    layout = get_layout(layout)
    phantom = Phantom.from_dict(DEFAULT_PHANTOM if phantom is None else phantom)
    box = random_contacts(layout, "box", numpy.random.RandomState(seed))
    hat = make_profile(layout, "hat", box.heights)
    return layout, phantom.field(), {"box": box, "hat": hat}
