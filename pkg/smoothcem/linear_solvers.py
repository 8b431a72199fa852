# -*- coding: utf-8 -*-
#
"""
Solvers for the grounded, symmetric positive definite electrode systems.
"""
import logging

import krypy
import numpy
from scipy.sparse.linalg import splu

from .errors import ParameterError, SolverError

logger = logging.getLogger(__name__)


class DirectSolver(object):
    """Sparse LU factorization, computed once and reused for many right-hand
    sides.
    """

    def __init__(self, A, pivot_tol=1.0e-13):
        # From http://crd.lbl.gov/~xiaoye/SuperLU/faq.html#sym-problem:
        # SuperLU cannot take advantage of symmetry, but with a small diagonal
        # pivot threshold and an (A' + A)-based column permutation, pivoting
        # stays on the diagonal and U is equivalent to D*L'.
        try:
            self._lu = splu(
                A.tocsc(),
                options={"SymmetricMode": True},
                permc_spec="MMD_AT_PLUS_A",
                diag_pivot_thresh=0.0,
            )
        except RuntimeError as e:
            raise SolverError("Factorization failed: %s" % e)

        pivots = numpy.abs(self._lu.U.diagonal())
        if not numpy.all(numpy.isfinite(pivots)) or (
            pivots.min() <= pivot_tol * pivots.max()
        ):
            raise SolverError(
                "System is singular (pivot ratio %.3e)." % (pivots.min() / pivots.max())
            )
        self.shape = A.shape
        return

    def solve(self, b):
        return self._lu.solve(numpy.asarray(b, dtype=float))


class CgSolver(object):
    """Jacobi-preconditioned conjugate gradients from krypy."""

    def __init__(self, A, tol=1.0e-12, maxiter=None):
        self._A = A.tocsr()
        diag = self._A.diagonal()
        if numpy.any(diag <= 0.0):
            raise SolverError("System has a nonpositive diagonal entry.")
        n = A.shape[0]
        self._Minv = krypy.utils.LinearOperator(
            (n, n), float, dot=lambda x: x / diag.reshape((n, 1))
        )
        self.tol = tol
        self.maxiter = n if maxiter is None else maxiter
        self.shape = A.shape
        self.num_iterations = []
        return

    def _solve_one(self, b):
        if not numpy.any(b):
            return numpy.zeros(len(b))
        linear_system = krypy.linsys.LinearSystem(
            self._A,
            b.reshape((-1, 1)),
            M=self._Minv,
            self_adjoint=True,
            positive_definite=True,
        )
        try:
            out = krypy.linsys.Cg(linear_system, tol=self.tol, maxiter=self.maxiter)
        except krypy.utils.ConvergenceError as e:
            raise SolverError("CG did not converge: %s" % e)
        self.num_iterations.append(len(out.resnorms) - 1)
        return out.xk[:, 0]

    def solve(self, b):
        b = numpy.asarray(b, dtype=float)
        if b.ndim == 1:
            return self._solve_one(b)
        return numpy.column_stack([self._solve_one(b[:, k]) for k in range(b.shape[1])])


SOLVERS = {"direct": DirectSolver, "cg": CgSolver}


def factorize(A, solver="direct", **kwargs):
    if solver not in SOLVERS:
        raise ParameterError("Unknown linear solver %r." % solver)
    logger.debug("Setting up %s solver for %d unknowns.", solver, A.shape[0])
    return SOLVERS[solver](A, **kwargs)
