# -*- coding: utf-8 -*-
"""
Collection of numerical algorithms.
"""
import logging

import numpy
import scipy.linalg
from scipy.constants import golden

from .errors import NumericalError

logger = logging.getLogger(__name__)


def levenberg_marquardt(
    residual,
    jacobian,
    x0,
    maxiter=50,
    damping0=None,
    damping_factor=10.0,
    max_damping=1.0e16,
    gradient_tol=1.0e-10,
    step_tol=1.0e-10,
    objective_tol=1.0e-14,
    decrease_tol=1.0e-14,
    objective_parts=None,
    debug=False,
    yaml_emitter=None,
):
    """Levenberg-Marquardt for min ||r(x)||^2.

    The damping is divided by ``damping_factor`` after accepted and multiplied
    by it after rejected steps; it starts at 1e-3 * trace(J^T J) / dim unless
    given. Iterations stop once both the actual and the predicted decrease of
    an accepted step fall below ``decrease_tol`` times the objective.
    ``objective_parts`` maps a residual to a dict of named terms that
    are recorded in the history.

    Returns a dict with ``x``, ``info`` (0: converged, 1: maximum number of
    iterations, 2: no further decrease possible), ``objective`` and
    ``history``.
    """
    x = numpy.array(x0, dtype=float)
    r = residual(x)
    f = numpy.dot(r, r)
    J = jacobian(x)
    dim = len(x)
    damping = 1.0e-3 * numpy.sum(J ** 2) / dim if damping0 is None else damping0
    if damping <= 0.0:
        damping = 1.0e-3

    def record(k, accepted):
        entry = {"iteration": k, "objective": f, "damping": damping, "accepted": accepted}
        if objective_parts is not None:
            entry.update(objective_parts(r))
        return entry

    history = [record(0, True)]

    if debug:
        from . import yaml

        if yaml_emitter is None:
            yaml_emitter = yaml.YamlEmitter()
            yaml_emitter.begin_doc()
        yaml_emitter.begin_seq()

    info = 1
    k = 0
    while k < maxiter:
        if f <= objective_tol:
            info = 0
            break
        g = J.T.dot(r)
        # cosine between the residual and the columns of J
        col_norms = numpy.sqrt(numpy.sum(J ** 2, axis=0))
        scale = numpy.where(col_norms > 0.0, col_norms, 1.0) * numpy.sqrt(f)
        if numpy.max(numpy.abs(g) / scale) <= gradient_tol:
            info = 0
            break

        JTJ = J.T.dot(J)
        while True:
            step = scipy.linalg.solve(
                JTJ + damping * numpy.eye(dim), -g, assume_a="pos"
            )
            x_new = x + step
            predicted = f - numpy.sum((r + J.dot(step)) ** 2)
            try:
                r_new = residual(x_new)
                f_new = numpy.dot(r_new, r_new)
            except NumericalError as e:
                logger.debug("Trial step failed: %s", e)
                f_new = numpy.inf
            accepted = f_new < f

            if debug:
                yaml_emitter.add_comment("LM step %d" % (k + 1))
                yaml_emitter.begin_map()
                yaml_emitter.add_key_value("objective", f)
                yaml_emitter.add_key_value("trial_objective", f_new)
                if objective_parts is not None and numpy.isfinite(f_new):
                    for key, value in sorted(objective_parts(r_new).items()):
                        yaml_emitter.add_key_value(key, value)
                yaml_emitter.add_key_value("damping", damping)
                yaml_emitter.add_key_value("accepted", accepted)
                yaml_emitter.end_map()

            if accepted:
                break
            damping *= damping_factor
            if damping > max_damping:
                break

        if not accepted:
            info = 2
            break

        k += 1
        decrease = f - f_new
        x = x_new
        r = r_new
        f_old, f = f, f_new
        damping /= damping_factor
        history.append(record(k, True))
        logger.debug("LM iteration %d: objective %.6e, damping %.3e", k, f, damping)

        if numpy.linalg.norm(step) <= step_tol * (numpy.linalg.norm(x) + step_tol):
            info = 0
            break
        if decrease <= decrease_tol * f_old and predicted <= decrease_tol * f_old:
            info = 0
            break
        J = jacobian(x)

    if debug:
        yaml_emitter.end_seq()
        if info != 0:
            yaml_emitter.add_comment(
                "Levenberg-Marquardt did not converge (objective = %g)" % f
            )

    return {"x": x, "info": info, "objective": f, "history": history}


def golden_section(f, a, b, tol=1.0e-4, maxiter=200):
    """Minimize a unimodal function on [a, b] to interval width tol.

    Returns a dict with ``x``, ``fun``, ``nfev`` and ``boundary``, the latter
    flagging a minimizer within tol of an end of the bracket.
    """
    invphi = 1.0 / golden
    lo, hi = a, b
    c = hi - invphi * (hi - lo)
    d = lo + invphi * (hi - lo)
    fc = f(c)
    fd = f(d)
    nfev = 2
    for _ in range(maxiter):
        if hi - lo <= tol:
            break
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - invphi * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + invphi * (hi - lo)
            fd = f(d)
        nfev += 1
    x, fx = (c, fc) if fc < fd else (d, fd)
    boundary = x - a <= tol or b - x <= tol
    return {"x": x, "fun": fx, "nfev": nfev, "boundary": boundary}


def fit_slope(h, errors):
    """Least-squares slope of log(errors) over log(h)."""
    return numpy.polyfit(numpy.log(h), numpy.log(errors), 1)[0]
