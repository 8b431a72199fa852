# -*- coding: utf-8 -*-
#
import numpy
import pytest

from smoothcem import errors, inverse
from smoothcem.contact import make_profile
from smoothcem.forward import Phantom
from smoothcem.mesh import build_mesh, get_layout
from smoothcem.inverse import MeasurementFrame, ParameterVector


def _setup(level=3, order=1, kind="hat"):
    layout = get_layout("default8")
    mesh = build_mesh(level, layout, order)
    rng = numpy.random.RandomState(0)
    heights = rng.uniform(20.0, 50.0, 8)
    return layout, mesh, heights


@pytest.mark.parametrize("kind", ["box", "hat"])
@pytest.mark.parametrize("order", [1, 2])
@pytest.mark.parametrize("homogeneous", [True, False])
def test_jacobian(kind, order, homogeneous):
    layout, mesh, heights = _setup(3, order, kind)
    patterns = inverse.adjacent_patterns(8)
    model = inverse.ForwardModel(mesh, kind, patterns)
    if homogeneous:
        sigma = 1.3
    else:
        rng = numpy.random.RandomState(1)
        sigma = rng.uniform(0.7, 1.3, mesh.num_nodes)
    params = ParameterVector.from_values(sigma, heights)
    J = model.jacobian(params)
    assert J.shape == (7 * 8, len(params))

    # central differences in the log parameters
    x = params.to_array()
    num_sigma = len(params.log_sigma)
    eps = 1.0e-6
    J_fd = numpy.empty_like(J)
    for i in range(len(x)):
        e = numpy.zeros(len(x))
        e[i] = eps
        plus = model.predict(ParameterVector.from_array(x + e, num_sigma))
        minus = model.predict(ParameterVector.from_array(x - e, num_sigma))
        J_fd[:, i] = (plus - minus) / (2 * eps)
    tol = 1.0e-5 * numpy.max(numpy.abs(J))
    assert numpy.max(numpy.abs(J - J_fd)) < tol
    return


def test_homogeneous_column():
    _, mesh, heights = _setup()
    patterns = inverse.adjacent_patterns(8)
    model = inverse.ForwardModel(mesh, "hat", patterns)
    J_h = model.jacobian(ParameterVector.from_values(0.8, heights))
    J_n = model.jacobian(
        ParameterVector.from_values(numpy.full(mesh.num_nodes, 0.8), heights)
    )
    tol = 1.0e-10 * numpy.max(numpy.abs(J_h))
    assert numpy.max(numpy.abs(J_h[:, 0] - J_n[:, : mesh.num_nodes].sum(axis=1))) < tol
    assert numpy.max(numpy.abs(J_h[:, 1:] - J_n[:, mesh.num_nodes :])) < tol

    with pytest.raises(errors.ContractError):
        model.predict(ParameterVector.from_values(numpy.ones(5), heights))
    return


def test_zero_current_frame():
    layout, mesh, heights = _setup()
    frame = MeasurementFrame(numpy.zeros((2, 8)), numpy.zeros(16))
    J = inverse.jacobian(ParameterVector.from_values(1.0, heights), frame, mesh)
    assert numpy.all(J == 0.0)
    return


@pytest.mark.parametrize("kind", ["box", "hat"])
def test_fit_homogeneous(kind):
    layout, mesh, heights = _setup(3, 1, kind)
    zeta = make_profile(layout, kind, heights)
    frame = inverse.simulate_frame(mesh, 1.3, zeta)

    result = inverse.fit_homogeneous(frame, layout, 3, sigma0=1.0, zeta0=30.0, kind=kind)
    assert result.converged
    assert abs(result.sigma[0] - 1.3) < 1.0e-6 * 1.3
    assert numpy.max(numpy.abs(result.zeta - heights) / heights) < 1.0e-3
    assert result.relative_discrepancy < 1.0e-6
    objectives = [h["objective"] for h in result.history]
    assert all(b <= a for a, b in zip(objectives[:-1], objectives[1:]))

    # starting at the truth
    result = inverse.fit_homogeneous(
        frame, layout, 3, sigma0=1.3, zeta0=heights, kind=kind
    )
    assert result.converged
    assert len(result.history) <= 3
    return


def test_result_files(tmpdir):
    layout, mesh, heights = _setup()
    frame = inverse.simulate_frame(mesh, 1.0, make_profile(layout, "hat", heights))
    result = inverse.fit_homogeneous(
        frame, layout, 3, sigma0=1.0, zeta0=30.0, config=inverse.LMConfig(maxiter=3)
    )
    assert numpy.all(result.nodal_sigma() == result.sigma[0])
    result.write(str(tmpdir))
    with open(str(tmpdir.join("iterations.csv"))) as f:
        lines = f.read().splitlines()
    assert lines[0] == "iter,data_misfit,prior_term,lambda"
    assert len(lines) == len(result.history) + 1
    table = numpy.loadtxt(str(tmpdir.join("sigma.csv")), delimiter=",", skiprows=1)
    assert table.shape == (mesh.num_nodes, 3)
    assert tmpdir.join("contacts.json").check()

    with pytest.raises(errors.ParameterError):
        inverse.LMConfig(maxiter=0)
    with pytest.raises(errors.ParameterError):
        inverse.LMConfig(decrease_tol=0.0)
    return


def test_synthesize_data():
    layout = get_layout("default8")
    zeta = make_profile(layout, "hat", 40.0)
    a = inverse.synthesize_data(1.0, zeta, 5, noise_level=1.0e-2, seed=7)
    b = inverse.synthesize_data(1.0, zeta, 5, noise_level=1.0e-2, seed=7)
    c = inverse.synthesize_data(1.0, zeta, 5, noise_level=1.0e-2, seed=8)
    assert numpy.all(a.voltages == b.voltages)
    assert numpy.any(a.voltages != c.voltages)
    assert a.num_patterns == 7
    assert a.meta["fine_level"] == 5
    assert abs(a.noise_std - 1.0e-2 * (a.max_variation())) < 0.1 * a.noise_std

    with pytest.raises(errors.ContractError):
        inverse.synthesize_data(1.0, zeta, 4, reconstruction_level=3)
    return


def test_frame():
    patterns = inverse.adjacent_patterns(8)
    voltages = numpy.random.RandomState(0).normal(size=(7, 8))
    a = MeasurementFrame(patterns, voltages)
    b = MeasurementFrame(patterns, voltages + 5.0)
    # potentials are only defined up to a constant per pattern
    assert numpy.allclose(a.voltages, b.voltages, rtol=0.0, atol=1.0e-13)
    assert numpy.allclose(a.voltages.reshape(7, 8).sum(axis=1), 0.0, atol=1.0e-13)

    with pytest.raises(errors.ContractError):
        MeasurementFrame(numpy.eye(8)[:2], numpy.zeros(16))
    with pytest.raises(errors.ParameterError):
        MeasurementFrame.from_dict({"voltages": []})
    return


def test_frame_json(tmpdir):
    layout, mesh, heights = _setup()
    frame = inverse.simulate_frame(
        mesh, 1.0, make_profile(layout, "box", heights), noise_level=1.0e-3, seed=2
    )
    filename = str(tmpdir.join("frame.json"))
    frame.write_json(filename)
    other = MeasurementFrame.read_json(filename)
    assert numpy.all(other.patterns == frame.patterns)
    assert numpy.allclose(other.voltages, frame.voltages, rtol=1.0e-14, atol=1.0e-16)
    assert other.seed == 2
    assert other.noise_std == frame.noise_std
    return


def test_prior():
    layout = get_layout("default8")
    mesh = build_mesh(3, layout)
    prior = inverse.PriorModel()
    C = prior.covariance(mesh.nodes)
    assert numpy.max(numpy.abs(C - C.T)) == 0.0
    G = prior.whitener(mesh.nodes, 1.0e-3)
    assert numpy.allclose(G.dot(C).dot(G.T), 1.0e-6 * numpy.eye(mesh.num_nodes), atol=1.0e-9)
    # lower triangular
    assert numpy.all(numpy.triu(G, 1) == 0.0)

    other = inverse.PriorModel.from_dict(prior.to_dict())
    assert other.correlation_length == prior.correlation_length
    with pytest.raises(errors.ParameterError):
        inverse.PriorModel.from_dict({"range": 1.0})
    with pytest.raises(errors.ParameterError):
        inverse.PriorModel(std=0.0)
    return


def test_reconstruct_map():
    layout = get_layout("default8")
    sigma = inverse.DEFAULT_SIGMA
    zeta = make_profile(layout, "hat", inverse.DEFAULT_CONTACTS["hat"])
    frame = inverse.synthesize_data(sigma, zeta, 5, noise_level=1.0e-3, seed=0)
    result = inverse.reconstruct_map(
        frame, layout, 3, config=inverse.LMConfig(maxiter=4)
    )
    assert len(result.sigma) == result.mesh.num_nodes
    assert numpy.all(result.sigma > 0.0)
    assert numpy.all(result.zeta > 0.0)
    objectives = [h["objective"] for h in result.history]
    assert all(b <= a for a, b in zip(objectives[:-1], objectives[1:]))
    for h in result.history:
        assert abs(h["data_misfit"] + h["prior_term"] - h["objective"]) < 1.0e-10 * h["objective"]

    with pytest.raises(errors.ContractError):
        inverse.reconstruct_map(frame, layout, 3, G=numpy.eye(5))
    return


def test_relative_l2_distance():
    mesh = build_mesh(3, get_layout("default8"))
    a = numpy.full(mesh.num_nodes, 2.0)
    b = numpy.ones(mesh.num_nodes)
    assert inverse.relative_l2_distance(mesh, b, b) == 0.0
    assert abs(inverse.relative_l2_distance(mesh, a, b) - 1.0) < 1.0e-12
    return


def _disk_frame(kind, seed=0):
    layout = get_layout("default16")
    sigma = inverse.DEFAULT_SIGMA
    disk = Phantom(sigma, [{"center": [0.4, 0.6], "radius": 0.15, "value": 0.1 * sigma}])
    zeta = make_profile(layout, kind, inverse.DEFAULT_CONTACTS[kind])
    frame = inverse.synthesize_data(
        disk.field(), zeta, 7, seed=seed, reconstruction_level=5
    )
    return layout, frame


def test_disk_reconstruction():
    results = {}
    for kind in ["box", "hat"]:
        layout, frame = _disk_frame(kind)
        results[kind] = inverse.reconstruct_map(frame, layout, 5, kind=kind)
        assert results[kind].converged

    mesh = results["hat"].mesh
    inside = numpy.linalg.norm(mesh.nodes - [0.4, 0.6], axis=1) < 0.15
    for result in results.values():
        assert numpy.min(result.sigma[inside]) < 0.3 * inverse.DEFAULT_SIGMA
    distance = inverse.relative_l2_distance(
        mesh, results["box"].sigma, results["hat"].sigma
    )
    assert distance < 0.05
    return


def test_initial_contacts_do_not_matter():
    layout, frame = _disk_frame("hat")
    config = inverse.LMConfig(maxiter=100, decrease_tol=1.0e-14)
    fits = [
        inverse.fit_homogeneous(frame, layout, 5, zeta0=zeta0, kind="hat", config=config)
        for zeta0 in [200.0, 700.0, 2000.0]
    ]
    ref = fits[1]
    for fit in fits:
        assert abs(fit.sigma[0] - ref.sigma[0]) < 1.0e-4 * ref.sigma[0]
        assert numpy.max(numpy.abs(fit.zeta - ref.zeta) / ref.zeta) < 1.0e-4
    return
