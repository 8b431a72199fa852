# -*- coding: utf-8 -*-
#
"""
Boundary integrals for the shape derivative of the electrode potentials.

With :math:`w = U - u` and :math:`\\tilde w = \\tilde U - \\tilde u`, the
derivative of :math:`U \\cdot \\tilde I` in direction h is

.. math::
    \\int_{\\partial\\Omega} h_\\nu \\zeta (\\zeta / \\sigma - \\kappa) w \\tilde w
      + \\int_{\\partial\\Omega} h_\\tau \\dot\\zeta w \\tilde w
      - \\int_{\\partial\\Omega} h_\\nu \\sigma\\,
        \\partial_\\tau u \\, \\partial_\\tau \\tilde u.

For the box model, :math:`\\dot\\zeta` has point masses at the electrode ends;
those are evaluated with the finite element trace.
"""
import logging
import os

import numpy

from .contact import make_profile
from .errors import ContractError, ParameterError
from .forward import BoundaryQuadrature, as_conductivity, assemble, boundary_flux
from .mesh import PERIMETER, SIDE_NORMALS, SIDE_TANGENTS, arclength_to_point, side_index

logger = logging.getLogger(__name__)


def _constant(value):
    return lambda s: numpy.full(numpy.shape(s), float(value))


class PerturbationField(object):
    """Normal and signed tangential components of a boundary perturbation,
    as functions of arclength."""

    def __init__(self, h_nu, h_tau):
        self.h_nu = h_nu
        self.h_tau = h_tau
        return

    @classmethod
    def constant(cls, nu=1.0, tau=1.0):
        return cls(_constant(nu), _constant(tau))

    @classmethod
    def zero(cls):
        return cls.constant(0.0, 0.0)

    @classmethod
    def translation(cls):
        """Slide everything along the boundary with unit speed."""
        return cls.constant(0.0, 1.0)

    @classmethod
    def from_vector_field(cls, h):
        """Components of a vector field h(x) on the boundary, with points
        stacked along the last axis."""

        def component(frames):
            def f(s):
                s = numpy.asarray(s, dtype=float)
                values = h(arclength_to_point(s))
                return numpy.sum(values * frames[side_index(s)], axis=-1)

            return f

        return cls(component(SIDE_NORMALS), component(SIDE_TANGENTS))

    @classmethod
    def dilation(cls):
        """h(x) = x - (1/2, 1/2) restricted to the boundary of the square."""
        return cls.from_vector_field(lambda x: x - 0.5)

    def __add__(self, other):
        return PerturbationField(
            lambda s: self.h_nu(s) + other.h_nu(s),
            lambda s: self.h_tau(s) + other.h_tau(s),
        )

    def __mul__(self, alpha):
        return PerturbationField(
            lambda s: alpha * self.h_nu(s), lambda s: alpha * self.h_tau(s)
        )

    __rmul__ = __mul__


class CurvatureField(object):
    """Curvature of the boundary; zero on the open sides of the square."""

    def __init__(self, kappa=None):
        self.kappa = _constant(0.0) if kappa is None else kappa
        return

    def __call__(self, s):
        return self.kappa(s)


def _check_same_mesh(solutions):
    mesh = solutions[0].mesh
    if any(sol.mesh is not mesh for sol in solutions[1:]):
        raise ContractError("Solutions live on different meshes.")
    return mesh


def _electrode_residuals(solutions, bq):
    """w = U - u at the quadrature points, one column per solution."""
    u = numpy.column_stack([sol.u for sol in solutions])
    U = numpy.column_stack([sol.U for sol in solutions])
    return U[bq.electrode] - bq.trace(u)


def _endpoint_residuals(solutions, zeta_dot):
    """w at the point masses of the conductance derivative."""
    if not zeta_dot.delta_part:
        return numpy.zeros(0), numpy.zeros(0), numpy.zeros((0, len(solutions)))
    pos, weight, electrode = [numpy.array(a) for a in zip(*zeta_dot.delta_part)]
    pos = numpy.mod(pos, PERIMETER)
    W = numpy.column_stack(
        [sol.U[electrode] - sol.trace(pos) for sol in solutions]
    )
    return pos, weight, W


def _npoints(mesh):
    return mesh.element_order + 2


class DerivativeIntegrals(object):
    """The matrices of the three boundary integrals over pairs of patterns."""

    def __init__(self, I1, I2, I3, patterns):
        self.I1 = I1
        self.I2 = I2
        self.I3 = I3
        self.patterns = patterns
        return

    def __getitem__(self, i):
        return [self.I1, self.I2, self.I3][i - 1]

    def asymmetry(self):
        return max(
            numpy.max(numpy.abs(A - A.T)) / max(numpy.max(numpy.abs(A)), 1.0e-300)
            for A in (self.I1, self.I2, self.I3)
        )

    def write_csv(self, directory, prefix=""):
        header = ",".join(pattern_label(p) for p in self.patterns)
        for i in (1, 2, 3):
            numpy.savetxt(
                os.path.join(directory, "%sI%d.csv" % (prefix, i)),
                self[i],
                delimiter=",",
                header=header,
                comments="",
            )
        return


def pattern_label(pattern):
    """``e8-e1`` for unit dipoles, the plain entries otherwise."""
    pattern = numpy.asarray(pattern)
    nz = numpy.flatnonzero(pattern)
    if len(nz) == 2 and sorted(pattern[nz]) == [-1.0, 1.0]:
        pos = nz[pattern[nz] > 0][0]
        neg = nz[pattern[nz] < 0][0]
        return "e%d-e%d" % (pos + 1, neg + 1)
    return " ".join("%g" % v for v in pattern)


def derivative_integrals(solutions, zeta, zeta_dot=None):
    """Matrices of

    .. math::
        \\int \\zeta^2 w_m w_n, \\quad
        \\int \\dot\\zeta w_m w_n, \\quad
        \\int \\partial_\\tau u_m \\partial_\\tau u_n

    for all pairs of the given solutions.
    """
    mesh = _check_same_mesh(solutions)
    if zeta_dot is None:
        zeta_dot = zeta.arclength_derivative()

    bq = BoundaryQuadrature(mesh, zeta, _npoints(mesh))
    W = _electrode_residuals(solutions, bq)
    I1 = W.T.dot((bq.weights * bq.zeta ** 2)[:, None] * W)
    I2 = W.T.dot((bq.weights * zeta_dot.slope(bq.s))[:, None] * W)
    _, weight, Wd = _endpoint_residuals(solutions, zeta_dot)
    I2 += Wd.T.dot(weight[:, None] * Wd)

    bq_all = BoundaryQuadrature(mesh, zeta, _npoints(mesh), support="all")
    T = bq_all.tangential_derivative(numpy.column_stack([sol.u for sol in solutions]))
    I3 = T.T.dot(bq_all.weights[:, None] * T)
    return DerivativeIntegrals(
        I1, I2, I3, numpy.array([sol.pattern for sol in solutions])
    )


def integral_I1(sol_m, sol_n, zeta):
    return derivative_integrals([sol_m, sol_n], zeta).I1[0, 1]


def integral_I2(sol_m, sol_n, zeta_dot):
    """Smooth part plus point masses at the electrode ends."""
    if zeta_dot.profile is None:
        raise ParameterError("Conductance derivative carries no profile.")
    return derivative_integrals([sol_m, sol_n], zeta_dot.profile, zeta_dot).I2[0, 1]


def integral_I3(sol_m, sol_n, zeta=None):
    """Tangential derivative term; it does not depend on the contacts, whose
    breakpoints only refine the quadrature."""
    mesh = _check_same_mesh([sol_m, sol_n])
    if zeta is None:
        zeta = make_profile(mesh.layout, "box", 1.0)
    bq = BoundaryQuadrature(mesh, zeta, _npoints(mesh), support="all")
    T = bq.tangential_derivative(numpy.column_stack([sol_m.u, sol_n.u]))
    return numpy.dot(bq.weights, T[:, 0] * T[:, 1])


def shape_derivative(
    sol_m,
    sol_n,
    zeta,
    zeta_dot=None,
    pert=None,
    kappa=None,
    sigma=1.0,
    form="symmetric",
):
    """Derivative of :math:`U \\cdot \\tilde I` in the direction ``pert``.

    ``form="flux"`` evaluates the first term through the boundary current
    density instead of :math:`\\zeta^2 / \\sigma`.
    """
    if form not in ("symmetric", "flux"):
        raise ParameterError("Unknown form %r." % form)
    mesh = _check_same_mesh([sol_m, sol_n])
    if zeta_dot is None:
        zeta_dot = zeta.arclength_derivative()
    if pert is None:
        pert = PerturbationField.constant()
    if kappa is None:
        kappa = CurvatureField()
    sigma = as_conductivity(sigma)

    bq = BoundaryQuadrature(mesh, zeta, _npoints(mesh))
    W = _electrode_residuals([sol_m, sol_n], bq)
    h_nu = pert.h_nu(bq.s)
    sigma_b = sigma.on_boundary(mesh, bq.edge, bq.xi)
    if form == "symmetric":
        first = bq.zeta * (bq.zeta / sigma_b - kappa(bq.s)) * W[:, 0] * W[:, 1]
    else:
        flux = boundary_flux(sol_m, zeta)(bq.s)
        first = (flux / sigma_b - kappa(bq.s) * W[:, 0]) * bq.zeta * W[:, 1]
    total = numpy.dot(bq.weights, h_nu * first)

    second = zeta_dot.slope(bq.s) * pert.h_tau(bq.s) * W[:, 0] * W[:, 1]
    total += numpy.dot(bq.weights, second)
    pos, weight, Wd = _endpoint_residuals([sol_m, sol_n], zeta_dot)
    if len(pos):
        total += numpy.sum(weight * pert.h_tau(pos) * Wd[:, 0] * Wd[:, 1])

    bq_all = BoundaryQuadrature(mesh, zeta, _npoints(mesh), support="all")
    T = bq_all.tangential_derivative(numpy.column_stack([sol_m.u, sol_n.u]))
    sigma_all = sigma.on_boundary(mesh, bq_all.edge, bq_all.xi)
    third = pert.h_nu(bq_all.s) * sigma_all * T[:, 0] * T[:, 1]
    total -= numpy.dot(bq_all.weights, third)
    return total


def _central_difference(mesh, sigma, zeta_plus, zeta_minus, pattern_m, pattern_n, eps):
    U_plus = assemble(mesh, sigma, zeta_plus).solve(pattern_m).U
    U_minus = assemble(mesh, sigma, zeta_minus).solve(pattern_m).U
    return numpy.dot(pattern_n, U_plus - U_minus) / (2 * eps)


def translation_difference(mesh, sigma, zeta, pattern_m, pattern_n, eps=1.0e-4):
    """Central difference of :math:`U \\cdot \\tilde I` when every electrode
    slides by eps along the boundary. Compare with
    ``shape_derivative(..., pert=PerturbationField.translation())``."""
    layout = zeta.layout
    return _central_difference(
        mesh,
        sigma,
        zeta.on_layout(layout.shifted(eps)),
        zeta.on_layout(layout.shifted(-eps)),
        pattern_m,
        pattern_n,
        eps,
    )


def dilation_difference(mesh, sigma, zeta, pattern_m, pattern_n, eps=1.0e-4):
    """Central difference for the square dilated about its centre.

    For constant conductivity in two dimensions, stretching the domain by
    1 + eps is equivalent to scaling the contact conductance by 1 + eps.
    Compare with ``shape_derivative(..., pert=PerturbationField.dilation())``.
    """
    return _central_difference(
        mesh,
        sigma,
        zeta.scaled(1.0 + eps),
        zeta.scaled(1.0 - eps),
        pattern_m,
        pattern_n,
        eps,
    )
