# -*- coding: utf-8 -*-
#
"""
Finite element solution of the (smoothened) complete electrode model.

The discrete sesquilinear form is

.. math::
    B((w,W),(v,V)) = \\int_\\Omega \\sigma \\nabla w \\cdot \\nabla v \\,dx
      + \\int_{\\partial\\Omega} \\zeta (W - w)(V - v) \\,dS,

with Lagrange elements of order one or two for the interior potential and the
electrode potentials expanded in a basis of zero-sum vectors.
"""
import json
import logging

import numpy
from scipy import sparse

from .errors import AssemblyError, ContractError, ParameterError
from .linear_solvers import factorize

logger = logging.getLogger(__name__)

# Symmetric rules on the triangle in barycentric coordinates: (points, weights)
# with weights summing to one. Degree 2 for linear, degree 4 for quadratic
# elements, exact for the stiffness integrands with a P1 conductivity.
_A1 = 0.445948490915965
_A2 = 0.091576213509771
TRIANGLE_RULES = {
    1: (
        numpy.array(
            [[2.0 / 3, 1.0 / 6, 1.0 / 6], [1.0 / 6, 2.0 / 3, 1.0 / 6], [1.0 / 6, 1.0 / 6, 2.0 / 3]]
        ),
        numpy.full(3, 1.0 / 3),
    ),
    2: (
        numpy.array(
            [
                [1 - 2 * _A1, _A1, _A1],
                [_A1, 1 - 2 * _A1, _A1],
                [_A1, _A1, 1 - 2 * _A1],
                [1 - 2 * _A2, _A2, _A2],
                [_A2, 1 - 2 * _A2, _A2],
                [_A2, _A2, 1 - 2 * _A2],
            ]
        ),
        numpy.array([0.223381589678011] * 3 + [0.109951743655322] * 3),
    ),
}

GROUNDINGS = ("zero-mean", "last")


class ConductivityField(object):
    """Isotropic conductivity, one of

       * ``constant``: a positive number,
       * ``nodal``: values at the vertices, linear on each triangle,
       * ``function``: a callable mapping points of shape (n, 2) to values,
         evaluated at the quadrature points.
    """

    def __init__(self, kind, value):
        if kind not in ("constant", "nodal", "function"):
            raise ParameterError("Unknown conductivity kind %r." % kind)
        if kind == "constant":
            value = float(value)
            if not value > 0.0:
                raise ParameterError("Conductivity must be positive.")
        elif kind == "nodal":
            value = numpy.array(value, dtype=float)
            if not numpy.all(value > 0.0):
                raise ParameterError("Conductivity must be positive.")
        self.kind = kind
        self.value = value
        return

    @classmethod
    def constant(cls, value):
        return cls("constant", value)

    @classmethod
    def nodal(cls, values):
        return cls("nodal", values)

    @classmethod
    def from_function(cls, f):
        return cls("function", f)

    def _check_mesh(self, mesh):
        if self.kind == "nodal" and len(self.value) != mesh.num_nodes:
            raise ContractError(
                "Nodal conductivity has %d values, mesh has %d nodes."
                % (len(self.value), mesh.num_nodes)
            )
        return

    def _positive(self, values):
        if not numpy.all(values > 0.0):
            raise ParameterError("Conductivity must be positive.")
        return values

    def at_nodes(self, mesh):
        self._check_mesh(mesh)
        if self.kind == "constant":
            return numpy.full(mesh.num_nodes, self.value)
        if self.kind == "nodal":
            return self.value
        return self._positive(numpy.asarray(self.value(mesh.nodes), dtype=float))

    def at_quadrature_points(self, mesh, bary):
        """Values of shape (num_triangles, num_points)."""
        self._check_mesh(mesh)
        T = len(mesh.triangles)
        if self.kind == "constant":
            return numpy.full((T, len(bary)), self.value)
        if self.kind == "nodal":
            return self.value[mesh.triangles].dot(bary.T)
        points = numpy.einsum("qa,tad->tqd", bary, mesh.nodes[mesh.triangles])
        values = numpy.asarray(self.value(points.reshape(-1, 2)), dtype=float)
        return self._positive(values.reshape(T, len(bary)))

    def on_boundary(self, mesh, edges, xi):
        """Values at the boundary points given by edge index and local
        coordinate."""
        self._check_mesh(mesh)
        if self.kind == "constant":
            return numpy.full(len(edges), self.value)
        ends = mesh.boundary_edges[edges]
        if self.kind == "nodal":
            return (1.0 - xi) * self.value[ends[:, 0]] + xi * self.value[ends[:, 1]]
        p = mesh.nodes[ends]
        points = (1.0 - xi)[:, None] * p[:, 0] + xi[:, None] * p[:, 1]
        return self._positive(numpy.asarray(self.value(points), dtype=float))

    def scaled(self, factor):
        if self.kind == "function":
            f = self.value
            return ConductivityField.from_function(lambda x: factor * f(x))
        return ConductivityField(self.kind, factor * self.value)

    def __repr__(self):
        return "ConductivityField(kind=%r)" % self.kind


class Phantom(object):
    """Background conductivity with circular inclusions.

    Inclusion edges are blended with a tanh of the given ``smoothing`` width,
    or sharp if it is zero.
    """

    def __init__(self, background, inclusions=()):
        self.background = float(background)
        self.inclusions = [dict(inc) for inc in inclusions]
        values = [self.background] + [inc["value"] for inc in self.inclusions]
        if min(values) <= 0.0:
            raise ParameterError("Phantom conductivities must be positive.")
        return

    def __call__(self, points):
        points = numpy.asarray(points, dtype=float)
        out = numpy.full(points.shape[:-1], self.background)
        for inc in self.inclusions:
            r = numpy.linalg.norm(points - numpy.asarray(inc["center"]), axis=-1)
            w = inc.get("smoothing", 0.0)
            if w > 0.0:
                blend = 0.5 * (1.0 - numpy.tanh((r - inc["radius"]) / w))
            else:
                blend = (r < inc["radius"]).astype(float)
            out += (inc["value"] - self.background) * blend
        return out

    def field(self):
        return ConductivityField.from_function(self)

    def to_dict(self):
        return {"background": self.background, "inclusions": self.inclusions}

    @classmethod
    def from_dict(cls, data):
        try:
            return cls(data["background"], data.get("inclusions", []))
        except (KeyError, TypeError) as e:
            raise ParameterError("Malformed phantom: %s" % e)


def as_conductivity(sigma):
    if isinstance(sigma, ConductivityField):
        return sigma
    return ConductivityField.constant(sigma)


def element_geometry(mesh):
    """Areas (T,) and barycentric gradients (T, 3, 2) of all triangles."""
    p = mesh.nodes[mesh.triangles]
    x = p[..., 0]
    y = p[..., 1]
    det = (x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0]) - (x[:, 2] - x[:, 0]) * (
        y[:, 1] - y[:, 0]
    )
    if numpy.any(det <= 0.0):
        raise AssemblyError(
            "%d degenerate or inverted triangles." % numpy.count_nonzero(det <= 0.0)
        )
    grad_lambda = numpy.empty((len(det), 3, 2))
    grad_lambda[:, 0, 0] = y[:, 1] - y[:, 2]
    grad_lambda[:, 0, 1] = x[:, 2] - x[:, 1]
    grad_lambda[:, 1, 0] = y[:, 2] - y[:, 0]
    grad_lambda[:, 1, 1] = x[:, 0] - x[:, 2]
    grad_lambda[:, 2, 0] = y[:, 0] - y[:, 1]
    grad_lambda[:, 2, 1] = x[:, 1] - x[:, 0]
    grad_lambda /= det[:, None, None]
    return 0.5 * det, grad_lambda


def basis_gradients(order, bary, grad_lambda):
    """Gradients of the local Lagrange basis at the given barycentric points,
    shape (T, Q, n_local, 2). Local order: vertices, then edges 01, 12, 20.
    """
    T = len(grad_lambda)
    Q = len(bary)
    if order == 1:
        return numpy.broadcast_to(grad_lambda[:, None], (T, Q, 3, 2))
    gl = grad_lambda[:, None]
    lam = bary[None, :, :, None]
    grads = numpy.empty((T, Q, 6, 2))
    for i in range(3):
        grads[:, :, i] = (4.0 * lam[:, :, i] - 1.0) * gl[:, :, i]
    for k, (i, j) in enumerate([(0, 1), (1, 2), (2, 0)]):
        grads[:, :, 3 + k] = 4.0 * (lam[:, :, i] * gl[:, :, j] + lam[:, :, j] * gl[:, :, i])
    return grads


def stiffness_matrix(mesh, sigma):
    """Sparse matrix of the volume term."""
    sigma = as_conductivity(sigma)
    order = mesh.element_order
    bary, weights = TRIANGLE_RULES[order]
    area, grad_lambda = element_geometry(mesh)
    sigma_q = sigma.at_quadrature_points(mesh, bary)
    if order == 1:
        # gradients are constant per triangle
        coeff = area * sigma_q.dot(weights)
        Ke = coeff[:, None, None] * numpy.einsum("tad,tbd->tab", grad_lambda, grad_lambda)
    else:
        grads = basis_gradients(order, bary, grad_lambda)
        coeff = area[:, None] * weights[None, :] * sigma_q
        Ke = numpy.einsum("tq,tqad,tqbd->tab", coeff, grads, grads)

    dofs = mesh.triangle_dofs
    n_loc = dofs.shape[1]
    rows = numpy.repeat(dofs, n_loc, axis=1).ravel()
    cols = numpy.tile(dofs, (1, n_loc)).ravel()
    return sparse.csr_matrix(
        (Ke.ravel(), (rows, cols)), shape=(mesh.num_dofs, mesh.num_dofs)
    )


def mass_matrix(mesh):
    """P1 mass matrix on the vertices."""
    area, _ = element_geometry(mesh)
    local = (numpy.ones((3, 3)) + numpy.eye(3)) / 12.0
    Me = area[:, None, None] * local[None]
    tri = mesh.triangles
    rows = numpy.repeat(tri, 3, axis=1).ravel()
    cols = numpy.tile(tri, (1, 3)).ravel()
    return sparse.csr_matrix(
        (Me.ravel(), (rows, cols)), shape=(mesh.num_nodes, mesh.num_nodes)
    )


def edge_basis(order, xi):
    """Values and d/dxi of the Lagrange basis on a boundary edge; columns are
    start, end (and midpoint for order two)."""
    if order == 1:
        values = numpy.column_stack([1.0 - xi, xi])
        derivs = numpy.column_stack([-numpy.ones_like(xi), numpy.ones_like(xi)])
    else:
        values = numpy.column_stack(
            [(1.0 - xi) * (1.0 - 2.0 * xi), xi * (2.0 * xi - 1.0), 4.0 * xi * (1.0 - xi)]
        )
        derivs = numpy.column_stack([4.0 * xi - 3.0, 4.0 * xi - 1.0, 4.0 - 8.0 * xi])
    return values, derivs


class BoundaryQuadrature(object):
    """Gauss points on the boundary edges, split at the breakpoints of a
    conductance profile so that piecewise polynomial integrands are
    integrated exactly.

    :param support: ``"electrodes"`` keeps only points where the profile may
        be nonzero, ``"all"`` covers the whole boundary.
    """

    def __init__(self, mesh, profile, npoints, support="electrodes"):
        xg, wg = numpy.polynomial.legendre.leggauss(npoints)
        xg = 0.5 * (xg + 1.0)
        wg = 0.5 * wg
        s0 = mesh.boundary_arcs[:, 0]
        lengths = mesh.boundary_lengths()
        num_edges = len(s0)

        if support == "all":
            candidates = numpy.ones(num_edges, dtype=bool)
        else:
            candidates = numpy.zeros(num_edges, dtype=bool)
            for a, b in profile.layout.arcs:
                candidates |= (s0 + lengths > a) & (s0 < b)

        cuts = {}
        bps = profile.breakpoints()
        bps = bps[bps < s0[-1] + lengths[-1]]
        for e, local in zip(*mesh.locate(bps)):
            if 1.0e-12 < local < 1.0 - 1.0e-12:
                cuts.setdefault(e, []).append(local)

        plain = numpy.flatnonzero(candidates)
        plain = plain[~numpy.isin(plain, list(cuts.keys()))]
        seg_edge = [plain]
        seg_lo = [numpy.zeros(len(plain))]
        seg_hi = [numpy.ones(len(plain))]
        for e in sorted(cuts):
            pts = numpy.concatenate([[0.0], numpy.sort(cuts[e]), [1.0]])
            seg_edge.append(numpy.full(len(pts) - 1, e))
            seg_lo.append(pts[:-1])
            seg_hi.append(pts[1:])
        seg_edge = numpy.concatenate(seg_edge).astype(int)
        seg_lo = numpy.concatenate(seg_lo)
        seg_hi = numpy.concatenate(seg_hi)

        edge = numpy.repeat(seg_edge, npoints)
        width = numpy.repeat(seg_hi - seg_lo, npoints)
        xi = numpy.repeat(seg_lo, npoints) + width * numpy.tile(xg, len(seg_edge))
        weights = width * numpy.tile(wg, len(seg_edge)) * lengths[edge]
        s = s0[edge] + xi * lengths[edge]

        electrode = profile.layout.electrode_at(s)
        if support != "all":
            keep = electrode >= 0
            edge, xi, weights, s, electrode = [
                a[keep] for a in (edge, xi, weights, s, electrode)
            ]

        self.mesh = mesh
        self.edge = edge
        self.xi = xi
        self.weights = weights
        self.s = s
        self.electrode = electrode
        self.zeta = profile(s)
        self.dofs = mesh.boundary_dofs[edge]
        self.values, derivs = edge_basis(mesh.element_order, xi)
        self.tangential = derivs / lengths[edge][:, None]
        return

    def __len__(self):
        return len(self.s)

    def trace(self, coeffs):
        """Values of finite element functions at the points; coeffs may carry
        a trailing axis."""
        return numpy.einsum("ql,ql...->q...", self.values, coeffs[self.dofs])

    def tangential_derivative(self, coeffs):
        return numpy.einsum("ql,ql...->q...", self.tangential, coeffs[self.dofs])


def ground_basis(M, grounding):
    """Columns spanning the admissible electrode potentials."""
    if grounding not in GROUNDINGS:
        raise ParameterError("Unknown grounding %r." % grounding)
    Q = numpy.zeros((M, M - 1))
    Q[: M - 1] = numpy.eye(M - 1)
    if grounding == "zero-mean":
        Q[M - 1] = -1.0
    return Q


def check_pattern(pattern, M):
    pattern = numpy.asarray(pattern, dtype=float)
    if pattern.shape[-1] != M:
        raise ContractError(
            "Current pattern has %d entries for %d electrodes." % (pattern.shape[-1], M)
        )
    scale = max(1.0, numpy.max(numpy.abs(pattern)) if pattern.size else 1.0)
    if numpy.any(numpy.abs(pattern.sum(axis=-1)) > 1.0e-12 * scale):
        raise ContractError("current pattern must be zero-mean")
    return pattern


class ForwardSolution(object):
    """Interior potential u and zero-mean electrode potentials U for one
    current pattern."""

    def __init__(self, mesh, u, U, pattern):
        self.mesh = mesh
        self.u = u
        self.U = U
        self.pattern = pattern
        self.grounding = "zero-mean"
        return

    def trace(self, s):
        """u at boundary arclengths."""
        edge, xi = self.mesh.locate(s)
        values, _ = edge_basis(self.mesh.element_order, numpy.atleast_1d(xi))
        coeffs = self.u[self.mesh.boundary_dofs[numpy.atleast_1d(edge)]]
        out = numpy.sum(values * coeffs, axis=1)
        return out if numpy.ndim(s) else out[0]

    def to_dict(self):
        return {
            "U": self.U.tolist(),
            "pattern": self.pattern.tolist(),
            "level": self.mesh.level,
            "order": self.mesh.element_order,
            "grounding": self.grounding,
        }

    def write_json(self, filename):
        with open(filename, "w") as f:
            json.dump(self.to_dict(), f, indent=2)
        return

    def write_csv(self, filename):
        n = self.mesh.num_nodes
        data = numpy.column_stack(
            [numpy.arange(n), self.mesh.nodes, self.u[:n]]
        )
        numpy.savetxt(
            filename, data, delimiter=",", header="node,x,y,u", comments="",
            fmt=["%d", "%.17g", "%.17g", "%.17g"],
        )
        return

    def write_vtu(self, filename):
        self.mesh.to_meshplex().write(
            filename, point_data={"u": self.u[: self.mesh.num_nodes]}
        )
        return


class ForwardSystem(object):
    """Assembled and factorized electrode system for one configuration.

    The factorization is shared by all current patterns.
    """

    def __init__(
        self, mesh, sigma, zeta, grounding="zero-mean", solver="direct", **solver_options
    ):
        sigma = as_conductivity(sigma)
        M = zeta.num_electrodes
        if M != mesh.layout.num_electrodes:
            raise ContractError(
                "Profile has %d electrodes, mesh layout %d." % (M, mesh.layout.num_electrodes)
            )
        n = mesh.num_dofs

        K = stiffness_matrix(mesh, sigma)
        bq = BoundaryQuadrature(mesh, zeta, mesh.element_order + 1)
        wz = bq.weights * bq.zeta
        n_loc = bq.dofs.shape[1]
        C_uu = sparse.csr_matrix(
            (
                (wz[:, None, None] * bq.values[:, :, None] * bq.values[:, None, :]).ravel(),
                (
                    numpy.repeat(bq.dofs, n_loc, axis=1).ravel(),
                    numpy.tile(bq.dofs, (1, n_loc)).ravel(),
                ),
            ),
            shape=(n, n),
        )
        C_uU = sparse.csr_matrix(
            (
                (wz[:, None] * bq.values).ravel(),
                (bq.dofs.ravel(), numpy.repeat(bq.electrode, n_loc)),
            ),
            shape=(n, M),
        )
        C_UU = numpy.bincount(bq.electrode, weights=wz, minlength=M)

        Q = ground_basis(M, grounding)
        coupling = C_uU.dot(sparse.csr_matrix(Q))
        A = sparse.bmat(
            [
                [K + C_uu, -coupling],
                [-coupling.T, sparse.csr_matrix(Q.T.dot(C_UU[:, None] * Q))],
            ]
        ).tocsc()

        self.mesh = mesh
        self.sigma = sigma
        self.zeta = zeta
        self.grounding = grounding
        self.num_electrodes = M
        self.matrix = A
        self.electrode_conductances = C_UU
        self._Q = Q
        self._solver = factorize(A, solver, **solver_options)
        logger.debug(
            "Assembled system with %d unknowns (%s grounding).", A.shape[0], grounding
        )
        return

    def _rhs(self, patterns):
        n = self.mesh.num_dofs
        b = numpy.zeros((n + self.num_electrodes - 1, len(patterns)))
        b[n:] = self._Q.T.dot(patterns.T)
        return b

    def solve_many(self, patterns):
        """Solutions for the rows of ``patterns`` with one batched solve."""
        patterns = numpy.atleast_2d(check_pattern(patterns, self.num_electrodes))
        x = self._solver.solve(self._rhs(patterns))
        x = x.reshape(x.shape[0], -1)
        n = self.mesh.num_dofs
        U = self._Q.dot(x[n:])
        shift = U.mean(axis=0)
        U -= shift
        u = x[:n] - shift
        return [
            ForwardSolution(self.mesh, u[:, k], U[:, k], patterns[k])
            for k in range(len(patterns))
        ]

    def solve(self, pattern):
        return self.solve_many(numpy.atleast_2d(pattern))[0]

    def potentials(self, patterns):
        """Electrode potentials, one row per pattern."""
        return numpy.array([sol.U for sol in self.solve_many(patterns)])


def assemble(mesh, sigma, zeta, grounding="zero-mean", solver="direct", **solver_options):
    return ForwardSystem(
        mesh, sigma, zeta, grounding=grounding, solver=solver, **solver_options
    )


def solve(system, pattern):
    return system.solve(pattern)


def basis_patterns(M):
    """Rows e_m - e_M, m = 1, ..., M-1."""
    P = numpy.eye(M)[: M - 1]
    P[:, M - 1] = -1.0
    return P


def reference_patterns(M):
    """Rows e_M - e_m, m = 1, ..., M-1, the common patterns of the studies."""
    return -basis_patterns(M)


class MeasurementMap(object):
    """Current-to-voltage matrix in the basis e_m - e_M of zero-sum currents;
    entry (n, m) is U_n - U_M for the pattern e_m - e_M."""

    basis = "e_m - e_M"

    def __init__(self, R):
        self.R = R
        return

    @property
    def num_electrodes(self):
        return len(self.R) + 1

    def asymmetry(self):
        return numpy.max(numpy.abs(self.R - self.R.T)) / numpy.max(numpy.abs(self.R))

    def potentials(self, pattern):
        """Zero-mean electrode potentials for a zero-sum current pattern."""
        pattern = check_pattern(pattern, self.num_electrodes)
        U = numpy.append(self.R.dot(pattern[:-1]), 0.0)
        return U - U.mean()


def measurement_map(mesh, sigma, zeta, **kwargs):
    system = assemble(mesh, sigma, zeta, **kwargs)
    M = system.num_electrodes
    U = system.potentials(basis_patterns(M))
    R = (U[:, : M - 1] - U[:, M - 1 :]).T
    return MeasurementMap(R)


class BoundaryFlux(object):
    """Normal current density on the boundary via the Robin condition
    :math:`\\nu\\cdot\\sigma\\nabla u = \\zeta (U - u)`; zero in the gaps."""

    def __init__(self, solution, zeta):
        self.solution = solution
        self.zeta = zeta
        return

    def __call__(self, s):
        s = numpy.asarray(s, dtype=float)
        m = self.zeta.layout.electrode_at(s)
        U = numpy.where(m >= 0, self.solution.U[numpy.maximum(m, 0)], 0.0)
        return self.zeta(s) * (U - self.solution.trace(s))

    def electrode_currents(self):
        mesh = self.solution.mesh
        bq = BoundaryQuadrature(mesh, self.zeta, mesh.element_order + 1)
        density = bq.zeta * (self.solution.U[bq.electrode] - bq.trace(self.solution.u))
        return numpy.bincount(
            bq.electrode, weights=bq.weights * density, minlength=self.zeta.num_electrodes
        )


def boundary_flux(solution, zeta):
    return BoundaryFlux(solution, zeta)
