# -*- coding: utf-8 -*-
#
import json

import numpy

from smoothcem import cli


def _read(directory, name):
    with open(str(directory.join(name))) as f:
        return json.load(f)


def test_mesh(tmpdir):
    assert cli.main(["-o", str(tmpdir), "mesh", "--level", "3"]) == 0
    assert len(_read(tmpdir, "mesh.json")["nodes"]) == 81
    config = _read(tmpdir, "config.json")
    assert config["level"] == 3
    assert config["command"] == "mesh"
    return


def test_config_errors(tmpdir):
    out = str(tmpdir)
    assert cli.main(["-o", out, "mesh", "--layout", str(tmpdir.join("none.json"))]) == 2
    assert cli.main(["--config", str(tmpdir.join("none.json")), "-o", out, "mesh"]) == 2
    # currents must sum to zero
    assert cli.main(["-o", out, "forward", "--level", "3", "-I", "1,0,0,0,0,0,0,0"]) == 2
    return


def test_forward_replay(tmpdir):
    first = tmpdir.mkdir("first")
    second = tmpdir.mkdir("second")
    argv = ["-o", str(first), "forward", "--level", "4", "--kind", "box", "--zeta", "30"]
    assert cli.main(argv + ["-I", "1,-1,0,0,2,0,-2,0"]) == 0
    sol = _read(first, "solution.json")
    assert len(sol["U"]) == 8
    R = numpy.loadtxt(str(first.join("measurement_map.csv")), delimiter=",")
    assert R.shape == (7, 7)

    config = str(first.join("config.json"))
    assert cli.main(["--config", config, "-o", str(second), "forward"]) == 0
    assert _read(second, "solution.json") == sol
    assert _read(second, "config.json")["zeta"] == 30.0
    return


def test_study_difference(tmpdir):
    argv = ["-o", str(tmpdir), "study", "difference", "--level", "4", "--num-ratios", "3"]
    assert cli.main(argv) == 0
    A = numpy.loadtxt(str(tmpdir.join("difference_curve.csv")), delimiter=",", skiprows=1)
    assert A.shape == (3, 2)
    assert numpy.all(A[:, 1] > 0.0)
    return


def test_run_options_after_subcommand(tmpdir):
    before = tmpdir.mkdir("before")
    after = tmpdir.mkdir("after")
    synth = ["synth", "--layout", "default8", "--level", "3", "--fine-level", "5"]
    assert cli.main(["-o", str(before), "--seed", "7"] + synth) == 0
    assert cli.main(["-o", str(after)] + synth + ["--seed", "7", "--threads", "2"]) == 0
    assert _read(after, "config.json")["seed"] == 7
    assert _read(after, "config.json")["threads"] == 2
    assert _read(after, "frame.json")["seed"] == 7
    assert _read(after, "frame.json") == _read(before, "frame.json")

    # the global value survives a leaf without the option
    assert _read(before, "config.json")["seed"] == 7
    return


def test_synth_and_invert(tmpdir):
    out = str(tmpdir)
    mesh_args = ["--layout", "default8", "--level", "3"]
    assert cli.main(["-o", out, "synth", "--fine-level", "5"] + mesh_args) == 0
    frame = _read(tmpdir, "frame.json")
    assert len(frame["patterns"]) == 7
    assert frame["noise_std"] > 0.0

    data = str(tmpdir.join("frame.json"))
    argv = ["-o", out, "invert", "homogeneous", "--data", data, "--maxiter", "5"]
    assert cli.main(argv + mesh_args) == 0
    result = _read(tmpdir, "homogeneous.json")
    assert result["sigma"] > 0.0
    assert len(result["heights"]) == 8
    assert tmpdir.join("iterations.csv").check()

    # the data mesh must be two levels finer
    assert cli.main(["-o", out, "synth", "--fine-level", "4"] + mesh_args) == 2
    return
