# -*- coding: utf-8 -*-
#
import io

import numpy
import pytest

from smoothcem import numerical_methods, yaml


def test_golden_section():
    tol = 1.0e-6
    out = numerical_methods.golden_section(lambda x: (x - 1.3) ** 2, 0.0, 3.0, tol=tol)
    assert abs(out["x"] - 1.3) < tol
    assert not out["boundary"]
    assert out["nfev"] > 2

    # monotone functions end up at the bracket
    out = numerical_methods.golden_section(lambda x: x, 0.0, 1.0, tol=tol)
    assert out["boundary"]
    assert out["x"] < tol
    return


@pytest.mark.parametrize("rate", [1.0, 2.0, 3.0])
def test_fit_slope(rate):
    h = numpy.array([1.0 / 8, 1.0 / 16, 1.0 / 32, 1.0 / 64])
    assert abs(numerical_methods.fit_slope(h, 3.0 * h ** rate) - rate) < 1.0e-12
    return


def test_lm_linear():
    A = numpy.array([[2.0, 1.0], [1.0, 3.0], [0.0, 1.0]])
    x_true = numpy.array([0.5, -1.5])
    b = A.dot(x_true)
    out = numerical_methods.levenberg_marquardt(
        lambda x: A.dot(x) - b, lambda x: A, numpy.zeros(2), maxiter=100
    )
    assert out["info"] == 0
    assert numpy.linalg.norm(out["x"] - x_true) < 1.0e-6
    return


def test_lm_stalled_decrease():
    # inconsistent system, the objective stays positive
    A = numpy.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    b = numpy.array([1.0, 1.0, 0.0])
    out = numerical_methods.levenberg_marquardt(
        lambda x: A.dot(x) - b,
        lambda x: A,
        numpy.zeros(2),
        maxiter=100,
        gradient_tol=0.0,
        step_tol=0.0,
        decrease_tol=1.0e-8,
    )
    assert out["info"] == 0
    assert len(out["history"]) < 100
    assert numpy.linalg.norm(out["x"] - [1.0 / 3.0, 1.0 / 3.0]) < 1.0e-3
    assert abs(out["objective"] - 4.0 / 3.0) < 1.0e-5
    return


def test_lm_rosenbrock():
    def residual(x):
        return numpy.array([10.0 * (x[1] - x[0] ** 2), 1.0 - x[0]])

    def jacobian(x):
        return numpy.array([[-20.0 * x[0], 10.0], [-1.0, 0.0]])

    out = numerical_methods.levenberg_marquardt(
        residual,
        jacobian,
        [-1.2, 1.0],
        maxiter=200,
        objective_parts=lambda r: {"first": r[0] ** 2},
    )
    assert out["info"] == 0
    assert numpy.linalg.norm(out["x"] - [1.0, 1.0]) < 1.0e-6

    objectives = [entry["objective"] for entry in out["history"]]
    assert all(b <= a for a, b in zip(objectives[:-1], objectives[1:]))
    assert "first" in out["history"][-1]
    assert out["history"][0]["iteration"] == 0
    return


def test_lm_trace():
    stream = io.StringIO()
    emitter = yaml.YamlEmitter(stream)
    emitter.begin_doc()
    numerical_methods.levenberg_marquardt(
        lambda x: x - 1.0,
        lambda x: numpy.eye(2),
        numpy.zeros(2),
        maxiter=5,
        debug=True,
        yaml_emitter=emitter,
    )
    text = stream.getvalue()
    assert text.startswith("---")
    assert "# LM step 1" in text
    assert "accepted: True" in text
    return


def test_yaml_emitter():
    stream = io.StringIO()
    emitter = yaml.YamlEmitter(stream)
    emitter.begin_doc()
    emitter.begin_map()
    emitter.add_key_value("a", numpy.float64(0.5))
    emitter.end_map()
    assert stream.getvalue() == "---\na: 0.5\n"

    stream = io.StringIO()
    emitter = yaml.YamlEmitter(stream)
    emitter.begin_seq()
    emitter.add_item(numpy.array([1, 2]))
    emitter.end_seq()
    assert stream.getvalue() == "- [1, 2]\n"

    with pytest.raises(ValueError):
        emitter.add_item(1)
    with pytest.raises(ValueError):
        emitter.end_map()
    return
