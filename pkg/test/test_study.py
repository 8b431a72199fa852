# -*- coding: utf-8 -*-
#
import numpy
import pytest

from smoothcem import errors, study
from smoothcem.contact import make_profile
from smoothcem.mesh import build_mesh, get_layout


def test_same_model_has_no_difference():
    layout = get_layout("default8")
    mesh = build_mesh(4, layout)
    hat = make_profile(layout, "hat", 20.0)
    assert study.relative_difference(mesh, 1.0, hat, hat) == 0.0
    with pytest.raises(errors.ContractError):
        study.relative_difference(
            mesh, 1.0, hat, make_profile(get_layout("default16"), "hat", 20.0)
        )
    return


@pytest.mark.parametrize("ratio", [1.0e-3, 5.0e-2, 1.0])
def test_ratio_invariance(ratio):
    # only sigma / zeta_el matters
    layout = get_layout("default8")
    mesh = build_mesh(4, layout)

    def d(sigma):
        zeta_el = sigma / ratio
        return study.relative_difference(
            mesh,
            sigma,
            make_profile(layout, "box", zeta_el),
            make_profile(layout, "hat", zeta_el),
        )

    a = d(1.0)
    b = d(10.0)
    assert a > 0.0
    assert abs(a - b) < 1.0e-8 * a
    return


def test_difference_curve(tmpdir):
    mesh = build_mesh(4, get_layout("default8"))
    ratios = study.ratio_grid(num=4, lo=1.0e-3, hi=1.0)
    assert abs(ratios[0] - 1.0e-3) < 1.0e-15
    assert abs(ratios[-1] - 1.0) < 1.0e-12

    serial = study.difference_curve(mesh, ratios, threads=1)
    parallel = study.difference_curve(mesh, ratios, threads=2)
    assert numpy.allclose(serial.values, parallel.values, rtol=1.0e-12, atol=0.0)
    assert len(serial.failures) == 0
    ratio, value = serial.peak()
    assert value == numpy.max(serial.values)

    filename = str(tmpdir.join("difference.csv"))
    serial.write_csv(filename)
    with open(filename) as f:
        assert f.readline().strip() == "ratio,d_U"
    A = numpy.loadtxt(filename, delimiter=",", skiprows=1)
    assert numpy.all(A[:, 1] == serial.values)
    return


def test_optimize_scaling():
    layout = get_layout("default8")
    mesh = build_mesh(4, layout)
    zeta_el = 20.0
    d_equal = study.relative_difference(
        mesh,
        1.0,
        make_profile(layout, "box", zeta_el),
        make_profile(layout, "hat", zeta_el),
    )
    zeta_prime, d_prime = study.optimize_scaling(mesh, 1.0, zeta_el)
    assert zeta_prime > 0.0
    assert d_prime <= d_equal * (1.0 + 1.0e-6)
    with pytest.raises(errors.ParameterError):
        study.optimize_scaling(mesh, 1.0, 0.0)
    return


def test_scaling_curve(tmpdir):
    mesh = build_mesh(3, get_layout("default8"))
    curve = study.scaling_curve(mesh, [1.0e-2, 1.0e-1])
    assert numpy.allclose(curve.zeta_el, [100.0, 10.0])
    assert numpy.all(curve.d_prime >= 0.0)
    filename = str(tmpdir.join("scaling.csv"))
    curve.write_csv(filename)
    with open(filename) as f:
        assert f.readline().strip() == "zeta_el,zeta_prime,d_U_prime"
    return


def test_convergence_study(tmpdir):
    layout = get_layout("default8")
    profiles = {"hat": make_profile(layout, "hat", 20.0)}
    with pytest.raises(errors.ContractError):
        study.convergence_study(layout, 1.0, profiles, [1], [3, 4], 5)

    table = study.convergence_study(layout, 1.0, profiles, [1, 2], [3, 4], 6)
    for order in [1, 2]:
        e = table.errors("hat", order)
        assert len(e) == 2
        assert e[1] < e[0]
        assert table.slopes[("hat", order)] > 0.0
        assert numpy.allclose(table.mesh_sizes("hat", order), [0.125, 0.0625])

    filename = str(tmpdir.join("rates.csv"))
    table.write_csv(filename)
    with open(filename) as f:
        lines = f.read().splitlines()
    assert lines[0] == "model,order,h,error,slope"
    assert len(lines) == 5
    assert lines[1].startswith("hat,1,0.125,")
    return


def test_derivative_convergence(tmpdir):
    layout = get_layout("default8")
    profiles = {
        "box": make_profile(layout, "box", 20.0),
        "hat": make_profile(layout, "hat", 20.0),
    }
    rates = study.derivative_convergence(layout, 1.0, profiles, [3, 4], 6, threads=2)
    for model in ["box", "hat"]:
        for i in [1, 2, 3]:
            deltas = rates.deltas(i, model)
            assert len(deltas) == 2
            assert numpy.all(numpy.isfinite(deltas))
    assert rates.deltas(1, "hat")[1] < rates.deltas(1, "hat")[0]

    filename = str(tmpdir.join("deriv.csv"))
    rates.write_csv(filename)
    with open(filename) as f:
        assert f.readline().strip() == "i,model,h,delta"
    return


def test_inhomogeneous_configuration():
    layout, sigma, profiles = study.inhomogeneous_configuration(seed=3)
    assert layout.num_electrodes == 12
    box, hat = profiles["box"], profiles["hat"]
    assert numpy.all(box.heights == hat.heights)
    assert numpy.all(box.heights >= 20.0)
    assert numpy.all(box.heights <= 250.0)

    _, _, again = study.inhomogeneous_configuration(seed=3)
    assert numpy.all(again["box"].heights == box.heights)
    _, _, other = study.inhomogeneous_configuration(seed=4)
    assert numpy.any(other["box"].heights != box.heights)

    # the electrodes of the 12-electrode layout need level 4 or finer
    mesh = build_mesh(4, layout)
    values = sigma.at_nodes(mesh)
    assert numpy.all(values > 0.0)
    assert numpy.max(values) > 1.5
    assert numpy.min(values) < 0.75
    return


def test_difference_peak():
    # equal-area hats differ from boxes by about 9% at the worst ratio
    mesh = build_mesh(8, get_layout("default8"))
    curve = study.difference_curve(mesh, threads=2)
    ratio, peak = curve.peak()
    assert abs(peak - 0.09) < 0.03
    assert 0.05 / 3.0 < ratio < 0.05 * 3.0
    return


def test_scaling_peak():
    mesh = build_mesh(7, get_layout("default8"))
    curve = study.scaling_curve(mesh, threads=2)
    d = curve.d_prime
    assert numpy.all(numpy.isfinite(d))
    k = numpy.argmax(d)
    assert 2.9e-3 < d[k] < 8.7e-3
    ratio = 1.0 / curve.zeta_el[k]
    assert 0.05 / 3.0 < ratio < 0.05 * 3.0
    # decreasing toward both ends of the sweep
    assert numpy.all(numpy.diff(d[:5]) > 0.0)
    assert numpy.all(numpy.diff(d[-5:]) < 0.0)
    return


def _default_profiles(layout, sigma=1.0):
    return {
        "box": make_profile(layout, "box", sigma / 50.0e-3),
        "hat": make_profile(layout, "hat", sigma / 30.0e-3),
    }


def test_rates_first_order():
    layout = get_layout("default8")
    table = study.convergence_study(
        layout, 1.0, _default_profiles(layout), [1], [5, 6, 7, 8], 10, threads=2
    )
    box = table.slopes[("box", 1)]
    hat = table.slopes[("hat", 1)]
    assert 1.6 <= box <= 2.1
    assert 1.7 <= hat <= 2.2
    assert hat >= box
    for model in ["box", "hat"]:
        assert numpy.all(numpy.diff(table.errors(model, 1)[-3:]) < 0.0)
    return


def test_rates_second_order():
    # only the hat model gains from quadratic elements
    layout = get_layout("default8")
    table = study.convergence_study(
        layout, 1.0, _default_profiles(layout), [2], [3, 4, 5, 6], 9, threads=2
    )
    assert 1.7 <= table.slopes[("box", 2)] <= 2.3
    assert 2.6 <= table.slopes[("hat", 2)] <= 3.2
    return


def test_rates_inhomogeneous():
    layout, sigma, profiles = study.inhomogeneous_configuration(seed=0)
    table = study.convergence_study(
        layout, sigma, {"hat": profiles["hat"]}, [1], [5, 6, 7, 8], 10, threads=2
    )
    assert 1.7 <= table.slopes[("hat", 1)] <= 2.2
    return


def test_near_shunt_errors_are_larger():
    layout = get_layout("default8")
    tables = {}
    for ratio in [4.0e-3, 50.0e-3]:
        profiles = {
            "box": make_profile(layout, "box", 1.0 / ratio),
            "hat": make_profile(layout, "hat", 1.0 / ratio),
        }
        tables[ratio] = study.convergence_study(
            layout, 1.0, profiles, [1, 2], [3, 4, 5], 7
        )
    for model in ["box", "hat"]:
        for order in [1, 2]:
            low = tables[4.0e-3].errors(model, order)
            high = tables[50.0e-3].errors(model, order)
            assert numpy.all(low > high)
    return


def test_hat_derivatives_are_more_accurate():
    layout = get_layout("default8")
    rates = study.derivative_convergence(
        layout, 1.0, _default_profiles(layout), [3, 4, 5, 6, 7], 9, threads=2
    )
    for i in [1, 2, 3]:
        # the two coarsest levels are exempt
        assert numpy.all(rates.deltas(i, "hat")[2:] < rates.deltas(i, "box")[2:])
    return
