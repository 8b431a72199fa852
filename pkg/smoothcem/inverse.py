# -*- coding: utf-8 -*-
#
"""
Estimation of conductivity and contact conductances from electrode data.

Parameters are logarithms of the nodal (or homogeneous) conductivity and of
the contact heights, so every iterate is admissible. Derivatives come from
the variational form,

.. math::
    \\frac{\\partial (U \\cdot \\tilde I)}{\\partial \\sigma_k}
      = -\\int_\\Omega \\varphi_k \\nabla u \\cdot \\nabla \\tilde u, \\qquad
    \\frac{\\partial (U \\cdot \\tilde I)}{\\partial p}
      = -\\int_{\\partial\\Omega} \\frac{\\partial\\zeta}{\\partial p}
        (U - u)(\\tilde U - \\tilde u),

where the adjoint solutions for the measurements are combinations of the
forward solutions for the basis patterns.
"""
import logging
import os

import numpy
import scipy.linalg
from scipy import sparse
from scipy.spatial.distance import cdist

from . import fileio
from .contact import make_profile
from .errors import ContractError, ParameterError
from .forward import (
    TRIANGLE_RULES,
    BoundaryQuadrature,
    ConductivityField,
    as_conductivity,
    assemble,
    basis_gradients,
    basis_patterns,
    check_pattern,
    element_geometry,
    mass_matrix,
)
from .mesh import build_mesh
from .numerical_methods import levenberg_marquardt

logger = logging.getLogger(__name__)

# SI defaults of the water tank experiments, for the unit square.
DEFAULT_SIGMA = 0.025
DEFAULT_CONTACTS = {"box": 100.0, "hat": 700.0, "custom": 100.0}
DEFAULT_NOISE_LEVEL = 2.0e-3
# 4 cm on a tank of perimeter 1.06 m, rescaled to perimeter 4
DEFAULT_CORRELATION_LENGTH = 0.04 * 4.0 / 1.06


def adjacent_patterns(M):
    """Rows e_m - e_{m+1}, m = 1, ..., M-1."""
    P = numpy.zeros((M - 1, M))
    k = numpy.arange(M - 1)
    P[k, k] = 1.0
    P[k, k + 1] = -1.0
    return P


class MeasurementFrame(object):
    """Electrode potentials for a set of current patterns, stacked pattern by
    pattern. Each pattern's potentials are shifted to zero mean."""

    def __init__(self, patterns, voltages, noise_std=0.0, seed=None, meta=None):
        patterns = numpy.atleast_2d(numpy.array(patterns, dtype=float))
        K, M = patterns.shape
        check_pattern(patterns, M)
        voltages = numpy.array(voltages, dtype=float).reshape(K, M)
        voltages -= voltages.mean(axis=1, keepdims=True)
        self.patterns = patterns
        self.voltages = voltages.ravel()
        self.noise_std = float(noise_std)
        self.seed = seed
        self.meta = {} if meta is None else dict(meta)
        return

    @property
    def num_patterns(self):
        return self.patterns.shape[0]

    @property
    def num_electrodes(self):
        return self.patterns.shape[1]

    def max_variation(self):
        return numpy.max(self.voltages) - numpy.min(self.voltages)

    def to_dict(self):
        return {
            "patterns": self.patterns.tolist(),
            "voltages": self.voltages.tolist(),
            "noise_std": self.noise_std,
            "seed": self.seed,
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, data):
        try:
            return cls(
                data["patterns"],
                data["voltages"],
                data.get("noise_std", 0.0),
                data.get("seed"),
                data.get("meta"),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ParameterError("Malformed measurement frame: %s" % e)

    def write_json(self, filename):
        fileio.write_json(filename, self.to_dict())
        return

    @classmethod
    def read_json(cls, filename):
        return cls.from_dict(fileio.read_json(filename))


class ParameterVector(object):
    """Log conductivity (one value or one per node) and log contact heights."""

    def __init__(self, log_sigma, log_zeta):
        self.log_sigma = numpy.atleast_1d(numpy.array(log_sigma, dtype=float))
        self.log_zeta = numpy.atleast_1d(numpy.array(log_zeta, dtype=float))
        return

    @classmethod
    def from_values(cls, sigma, zeta):
        sigma = numpy.atleast_1d(numpy.asarray(sigma, dtype=float))
        zeta = numpy.atleast_1d(numpy.asarray(zeta, dtype=float))
        if numpy.any(sigma <= 0.0) or numpy.any(zeta <= 0.0):
            raise ParameterError("Conductivities and contacts must be positive.")
        return cls(numpy.log(sigma), numpy.log(zeta))

    @classmethod
    def from_array(cls, x, num_sigma):
        return cls(x[:num_sigma], x[num_sigma:])

    @property
    def homogeneous(self):
        return len(self.log_sigma) == 1

    @property
    def sigma(self):
        return numpy.exp(self.log_sigma)

    @property
    def zeta(self):
        return numpy.exp(self.log_zeta)

    def to_array(self):
        return numpy.concatenate([self.log_sigma, self.log_zeta])

    def conductivity(self):
        if self.homogeneous:
            return ConductivityField.constant(self.sigma[0])
        return ConductivityField.nodal(self.sigma)

    def __len__(self):
        return len(self.log_sigma) + len(self.log_zeta)


class ForwardModel(object):
    """Maps parameter vectors to stacked electrode potentials on one mesh."""

    def __init__(self, mesh, kind, patterns, shapes=None):
        self.mesh = mesh
        self.kind = kind
        self.shapes = shapes
        self.patterns = numpy.atleast_2d(patterns)
        self.num_electrodes = self.patterns.shape[1]
        if mesh.layout.num_electrodes != self.num_electrodes:
            raise ContractError("Patterns do not match the number of electrodes.")
        self._cache = None
        return

    def profile(self, params):
        return make_profile(self.mesh.layout, self.kind, params.zeta, shapes=self.shapes)

    def _solve(self, params):
        key = params.to_array().tobytes()
        if self._cache is not None and self._cache[0] == key:
            return self._cache[1]
        if not params.homogeneous and len(params.log_sigma) != self.mesh.num_nodes:
            raise ContractError(
                "%d conductivity values for %d nodes."
                % (len(params.log_sigma), self.mesh.num_nodes)
            )
        zeta = self.profile(params)
        system = assemble(self.mesh, params.conductivity(), zeta)
        basis = system.solve_many(basis_patterns(self.num_electrodes))
        W_u = numpy.column_stack([sol.u for sol in basis])
        W_U = numpy.column_stack([sol.U for sol in basis])
        result = (zeta, W_u, W_U)
        self._cache = (key, result)
        return result

    def predict(self, params):
        _, _, W_U = self._solve(params)
        return W_U.dot(self.patterns[:, :-1].T).T.ravel()

    def jacobian(self, params):
        """Derivatives of the stacked potentials with respect to the log
        parameters, shape (K*M, len(params))."""
        zeta, W_u, W_U = self._solve(params)
        mesh = self.mesh
        M = self.num_electrodes
        K = len(self.patterns)
        # measuring U_j of a zero-mean U is the pattern e_j - 1/M
        measure = numpy.eye(M) - 1.0 / M
        fwd_u = W_u.dot(self.patterns[:, :-1].T)
        fwd_U = W_U.dot(self.patterns[:, :-1].T)
        adj_u = W_u.dot(measure[:, :-1].T)
        adj_U = W_U.dot(measure[:, :-1].T)

        # conductivity
        bary, weights = TRIANGLE_RULES[mesh.element_order]
        area, grad_lambda = element_geometry(mesh)
        grads = basis_gradients(mesh.element_order, bary, grad_lambda)
        dofs = mesh.triangle_dofs
        g_fwd = numpy.einsum("tqad,tak->tqdk", grads, fwd_u[dofs])
        g_adj = numpy.einsum("tqad,taj->tqdj", grads, adj_u[dofs])
        local = -numpy.einsum(
            "q,t,qa,tqdk,tqdj->takj", weights, area, bary, g_fwd, g_adj
        )
        T = len(mesh.triangles)
        scatter = sparse.csr_matrix(
            (numpy.ones(3 * T), (mesh.triangles.ravel(), numpy.arange(3 * T))),
            shape=(mesh.num_nodes, 3 * T),
        )
        d_sigma = scatter.dot(local.reshape(3 * T, K * M)).T
        if params.homogeneous:
            d_sigma = params.sigma[0] * d_sigma.sum(axis=1, keepdims=True)
        else:
            d_sigma = d_sigma * params.sigma[None, :]

        # contacts
        bq = BoundaryQuadrature(mesh, zeta, mesh.element_order + 1)
        w_fwd = fwd_U[bq.electrode] - bq.trace(fwd_u)
        w_adj = adj_U[bq.electrode] - bq.trace(adj_u)
        d_zeta = numpy.empty((K * M, M))
        for m in range(M):
            mask = bq.electrode == m
            shape = zeta.shape_values(bq.s[mask], m)
            d = -numpy.einsum(
                "q,qk,qj->kj", bq.weights[mask] * shape, w_fwd[mask], w_adj[mask]
            )
            d_zeta[:, m] = params.zeta[m] * d.ravel()
        return numpy.hstack([d_sigma, d_zeta])


def _forward_frame(mesh, sigma, zeta, patterns):
    system = assemble(mesh, sigma, zeta)
    return system.potentials(patterns).ravel()


def _noisy_frame(clean, patterns, noise_level, seed, meta):
    std = noise_level * (numpy.max(clean) - numpy.min(clean))
    rng = numpy.random.RandomState(seed)
    noisy = clean + rng.normal(0.0, 1.0, len(clean)) * std
    return MeasurementFrame(patterns, noisy, noise_std=std, seed=seed, meta=meta)


def synthesize_data(
    sigma,
    zeta,
    fine_level,
    noise_level=DEFAULT_NOISE_LEVEL,
    seed=0,
    patterns=None,
    reconstruction_level=None,
    order=1,
):
    """Synthetic frame from a forward solve on a fine mesh plus Gaussian noise
    with standard deviation noise_level times the maximal variation of the
    data.

    If ``reconstruction_level`` is given, the data mesh must be at least two
    levels finer.
    """
    if reconstruction_level is not None and fine_level < reconstruction_level + 2:
        raise ContractError(
            "Data level %d must exceed the reconstruction level %d by two."
            % (fine_level, reconstruction_level)
        )
    if patterns is None:
        patterns = adjacent_patterns(zeta.num_electrodes)
    mesh = build_mesh(fine_level, zeta.layout, order)
    clean = _forward_frame(mesh, as_conductivity(sigma), zeta, patterns)
    meta = {
        "fine_level": fine_level,
        "order": order,
        "kind": zeta.kind,
        "noise_level": noise_level,
    }
    return _noisy_frame(clean, patterns, noise_level, seed, meta)


def simulate_frame(mesh, sigma, zeta, patterns=None, noise_level=0.0, seed=0):
    """Frame computed on the given mesh itself."""
    if patterns is None:
        patterns = adjacent_patterns(zeta.num_electrodes)
    clean = _forward_frame(mesh, as_conductivity(sigma), zeta, patterns)
    meta = {
        "fine_level": mesh.level,
        "order": mesh.element_order,
        "kind": zeta.kind,
        "noise_level": noise_level,
    }
    return _noisy_frame(clean, patterns, noise_level, seed, meta)


def jacobian(params, frame, mesh, kind="hat", shapes=None):
    return ForwardModel(mesh, kind, frame.patterns, shapes).jacobian(params)


class PriorModel(object):
    """Gaussian random field for the conductivity with squared-exponential
    covariance."""

    def __init__(
        self,
        mean=DEFAULT_SIGMA,
        std=DEFAULT_SIGMA,
        correlation_length=DEFAULT_CORRELATION_LENGTH,
        jitter=1.0e-8,
    ):
        if min(mean, std, correlation_length) <= 0.0 or jitter < 0.0:
            raise ParameterError("Prior parameters must be positive.")
        self.mean = mean
        self.std = std
        self.correlation_length = correlation_length
        self.jitter = jitter
        return

    def covariance(self, nodes):
        d2 = cdist(nodes, nodes, "sqeuclidean")
        C = self.std ** 2 * numpy.exp(-d2 / (2 * self.correlation_length ** 2))
        C[numpy.diag_indices_from(C)] += self.jitter * self.std ** 2
        return C

    def whitener(self, nodes, noise_std):
        """G = noise_std * L^{-1} with C = L L^T, so that
        G^T G = noise_std^2 C^{-1}."""
        L = scipy.linalg.cholesky(self.covariance(nodes), lower=True)
        return noise_std * scipy.linalg.solve_triangular(
            L, numpy.eye(len(L)), lower=True
        )

    def to_dict(self):
        return {
            "mean": self.mean,
            "std": self.std,
            "correlation_length": self.correlation_length,
            "jitter": self.jitter,
        }

    @classmethod
    def from_dict(cls, data):
        unknown = set(data) - {"mean", "std", "correlation_length", "jitter"}
        if unknown:
            raise ParameterError("Unknown prior keys %s." % sorted(unknown))
        return cls(**data)


class LMConfig(object):
    def __init__(
        self,
        damping0=None,
        damping_factor=10.0,
        maxiter=50,
        gradient_tol=1.0e-8,
        step_tol=1.0e-10,
        decrease_tol=1.0e-10,
    ):
        values = [damping_factor, maxiter, gradient_tol, step_tol, decrease_tol]
        if damping0 is not None:
            values.append(damping0)
        if min(values) <= 0:
            raise ParameterError("Levenberg-Marquardt settings must be positive.")
        self.damping0 = damping0
        self.damping_factor = damping_factor
        self.maxiter = maxiter
        self.gradient_tol = gradient_tol
        self.step_tol = step_tol
        self.decrease_tol = decrease_tol
        return

    def kwargs(self):
        return {
            "damping0": self.damping0,
            "damping_factor": self.damping_factor,
            "maxiter": self.maxiter,
            "gradient_tol": self.gradient_tol,
            "step_tol": self.step_tol,
            "decrease_tol": self.decrease_tol,
        }


def _discrepancies(prediction, frame):
    misfit = numpy.linalg.norm(prediction - frame.voltages)
    relative = misfit / numpy.linalg.norm(frame.voltages)
    by_variation = misfit / (numpy.sqrt(len(frame.voltages)) * frame.max_variation())
    return relative, by_variation


class ReconstructionResult(object):
    """Outcome of a fit: parameters, discrepancies and iteration history."""

    def __init__(self, mesh, kind, params, history, info, prediction, frame):
        self.mesh = mesh
        self.kind = kind
        self.params = params
        self.history = history
        self.info = info
        self.converged = info == 0
        self.relative_discrepancy, self.variation_discrepancy = _discrepancies(
            prediction, frame
        )
        return

    @property
    def sigma(self):
        return self.params.sigma

    @property
    def zeta(self):
        return self.params.zeta

    def nodal_sigma(self):
        if self.params.homogeneous:
            return numpy.full(self.mesh.num_nodes, self.sigma[0])
        return self.sigma

    def contacts(self):
        return {
            "kind": self.kind,
            "heights": self.zeta.tolist(),
            "sigma": self.sigma[0] if self.params.homogeneous else None,
            "relative_discrepancy": self.relative_discrepancy,
            "variation_discrepancy": self.variation_discrepancy,
            "converged": self.converged,
        }

    def write(self, directory, prefix=""):
        fileio.write_csv(
            os.path.join(directory, prefix + "sigma.csv"),
            ["x", "y", "sigma"],
            zip(self.mesh.nodes[:, 0], self.mesh.nodes[:, 1], self.nodal_sigma()),
        )
        fileio.write_json(os.path.join(directory, prefix + "contacts.json"), self.contacts())
        fileio.write_csv(
            os.path.join(directory, prefix + "iterations.csv"),
            ["iter", "data_misfit", "prior_term", "lambda"],
            [
                (h["iteration"], h["data_misfit"], h["prior_term"], h["damping"])
                for h in self.history
            ],
        )
        return


def fit_homogeneous(
    frame,
    layout,
    level,
    sigma0=DEFAULT_SIGMA,
    zeta0=None,
    kind="hat",
    order=1,
    shapes=None,
    config=None,
    debug=False,
):
    """Least-squares fit of one conductivity and M contact heights."""
    config = LMConfig() if config is None else config
    if zeta0 is None:
        zeta0 = DEFAULT_CONTACTS[kind]
    mesh = build_mesh(level, layout, order)
    model = ForwardModel(mesh, kind, frame.patterns, shapes)
    M = layout.num_electrodes
    x0 = ParameterVector.from_values(sigma0, numpy.broadcast_to(zeta0, (M,))).to_array()

    def residual(x):
        return model.predict(ParameterVector.from_array(x, 1)) - frame.voltages

    def jac(x):
        return model.jacobian(ParameterVector.from_array(x, 1))

    def parts(r):
        return {"data_misfit": numpy.dot(r, r), "prior_term": 0.0}

    out = levenberg_marquardt(
        residual, jac, x0, objective_parts=parts, debug=debug, **config.kwargs()
    )
    params = ParameterVector.from_array(out["x"], 1)
    result = ReconstructionResult(
        mesh, kind, params, out["history"], out["info"], model.predict(params), frame
    )
    logger.info(
        "Homogeneous fit: sigma = %.6e, relative discrepancy %.3e",
        result.sigma[0],
        result.relative_discrepancy,
    )
    return result


def reconstruct_map(
    frame,
    layout,
    level,
    prior=None,
    sigma0=DEFAULT_SIGMA,
    zeta0=None,
    kind="hat",
    order=1,
    shapes=None,
    config=None,
    debug=False,
    G=None,
):
    """MAP estimate of the nodal conductivity and the contacts.

    Minimizes ||U(y) - data||^2 + ||G (sigma - prior.mean)||^2, the contacts
    being unregularized.
    """
    prior = PriorModel() if prior is None else prior
    config = LMConfig() if config is None else config
    if zeta0 is None:
        zeta0 = DEFAULT_CONTACTS[kind]
    mesh = build_mesh(level, layout, order)
    N = mesh.num_nodes
    M = layout.num_electrodes
    noise_std = frame.noise_std
    if noise_std <= 0.0:
        noise_std = DEFAULT_NOISE_LEVEL * frame.max_variation()
    if G is None:
        G = prior.whitener(mesh.nodes, noise_std)
    if G.shape != (N, N):
        raise ContractError("Prior has dimension %d, mesh %d nodes." % (G.shape[1], N))

    model = ForwardModel(mesh, kind, frame.patterns, shapes)
    sigma_init = numpy.broadcast_to(sigma0, (N,))
    x0 = ParameterVector.from_values(sigma_init, numpy.broadcast_to(zeta0, (M,))).to_array()
    L = len(frame.voltages)

    def residual(x):
        params = ParameterVector.from_array(x, N)
        return numpy.concatenate(
            [model.predict(params) - frame.voltages, G.dot(params.sigma - prior.mean)]
        )

    def jac(x):
        params = ParameterVector.from_array(x, N)
        J = model.jacobian(params)
        prior_block = numpy.hstack([G * params.sigma[None, :], numpy.zeros((N, M))])
        return numpy.vstack([J, prior_block])

    def parts(r):
        return {
            "data_misfit": numpy.dot(r[:L], r[:L]),
            "prior_term": numpy.dot(r[L:], r[L:]),
        }

    out = levenberg_marquardt(
        residual, jac, x0, objective_parts=parts, debug=debug, **config.kwargs()
    )
    params = ParameterVector.from_array(out["x"], N)
    result = ReconstructionResult(
        mesh, kind, params, out["history"], out["info"], model.predict(params), frame
    )
    logger.info(
        "MAP estimate after %d iterations, relative discrepancy %.3e",
        len(out["history"]) - 1,
        result.relative_discrepancy,
    )
    return result


def relative_l2_distance(mesh, sigma_a, sigma_b):
    """||a - b|| / ||b|| in L2 for nodal P1 functions."""
    Mm = mass_matrix(mesh)
    d = numpy.asarray(sigma_a) - numpy.asarray(sigma_b)
    return numpy.sqrt(d.dot(Mm.dot(d)) / numpy.dot(sigma_b, Mm.dot(sigma_b)))
