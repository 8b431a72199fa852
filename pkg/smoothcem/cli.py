# -*- coding: utf-8 -*-
#
"""
Command line interface.

Every command writes its resolved options to ``config.json`` in the output
directory; ``--config config.json`` replays them.
"""
import argparse
import logging
import os
import sys

import numpy

from . import fileio, forward, inverse, study
from .__about__ import __version__
from .contact import ConductanceProfile, make_profile
from .errors import ConfigError, NumericalError
from .mesh import LAYOUTS, build_mesh, get_layout
from .shapederiv import pattern_label

logger = logging.getLogger(__name__)

GLOBAL_OPTIONS = ("output_dir", "seed", "threads", "verbose")

DISK_PHANTOM = {
    "background": inverse.DEFAULT_SIGMA,
    "inclusions": [
        {"center": [0.4, 0.6], "radius": 0.15, "value": 0.1 * inverse.DEFAULT_SIGMA}
    ],
}


def _int_list(string):
    return [int(v) for v in string.split(",")]


def _str_list(string):
    return string.split(",")


def _float_list(string):
    return [float(v) for v in string.split(",")]


def _conductivity(args):
    if getattr(args, "phantom", None):
        return forward.Phantom.from_dict(fileio.read_json(args.phantom)).field()
    return forward.ConductivityField.constant(args.sigma)


def _profile(args, layout):
    if getattr(args, "contacts", None):
        return ConductanceProfile.from_dict(fileio.read_json(args.contacts))
    zeta = args.zeta
    if zeta is None:
        zeta = inverse.DEFAULT_CONTACTS[args.kind]
    return make_profile(layout, args.kind, zeta)


def _output(args, name):
    return os.path.join(args.output_dir, name)


def cmd_mesh(args):
    mesh = build_mesh(args.level, get_layout(args.layout), args.order)
    mesh.write_json(_output(args, "mesh.json"))
    logger.info("Wrote %r.", mesh)
    return


def cmd_forward(args):
    zeta = _profile(args, get_layout(args.layout))
    mesh = build_mesh(args.level, zeta.layout, args.order)
    sigma = _conductivity(args)
    M = zeta.num_electrodes
    if args.pattern is None:
        pattern = forward.reference_patterns(M)[0]
    else:
        pattern = numpy.array(args.pattern)

    system = forward.assemble(
        mesh, sigma, zeta, grounding=args.grounding, solver=args.solver
    )
    sol = system.solve(pattern)
    sol.write_json(_output(args, "solution.json"))
    sol.write_csv(_output(args, "solution.csv"))
    if args.vtu:
        sol.write_vtu(_output(args, "solution.vtu"))

    R = forward.measurement_map(mesh, sigma, zeta, solver=args.solver)
    numpy.savetxt(_output(args, "measurement_map.csv"), R.R, delimiter=",")
    logger.info("U = %s", sol.U)
    logger.info("Reciprocity: relative asymmetry %.3e", R.asymmetry())
    currents = forward.boundary_flux(sol, zeta).electrode_currents()
    logger.info("Current recovery error %.3e", numpy.max(numpy.abs(currents - pattern)))
    return


def _study_ratios(args):
    return study.ratio_grid(args.num_ratios, args.ratio_min, args.ratio_max)


def cmd_study(args):
    inhomogeneous = getattr(args, "inhomogeneous", False)
    if args.layout is None:
        args.layout = "default12" if inhomogeneous else "default8"
    layout = get_layout(args.layout)
    if args.study == "difference":
        mesh = build_mesh(args.level, layout)
        curve = study.difference_curve(mesh, _study_ratios(args), args.sigma, args.threads)
        curve.write_csv(_output(args, "difference_curve.csv"))
        ratio, peak = curve.peak()
        logger.info("Peak d_U = %.4e at sigma/zeta = %.3e", peak, ratio)
    elif args.study == "scaling":
        mesh = build_mesh(args.level, layout)
        curve = study.scaling_curve(mesh, _study_ratios(args), args.sigma, args.threads)
        curve.write_csv(_output(args, "scaling_curve.csv"))
    else:
        if args.inhomogeneous:
            phantom = fileio.read_json(args.phantom) if args.phantom else None
            layout, sigma, profiles = study.inhomogeneous_configuration(
                args.seed, phantom, args.layout
            )
        else:
            sigma = args.sigma
            profiles = {
                "box": make_profile(layout, "box", sigma / args.ratio),
                "hat": make_profile(layout, "hat", sigma / args.hat_ratio),
            }
        profiles = {m: profiles[m] for m in args.models}
        if args.study == "rates":
            table = study.convergence_study(
                layout, sigma, profiles, args.orders, args.levels,
                args.reference_level, threads=args.threads,
            )
            table.write_csv(_output(args, "rates.csv"))
            for (model, order), slope in sorted(table.slopes.items()):
                logger.info("%s P%d: slope %.3f", model, order, slope)
        else:
            rates = study.derivative_convergence(
                layout, sigma, profiles, args.levels, args.reference_level,
                threads=args.threads,
            )
            rates.write_csv(_output(args, "deriv_rates.csv"))
    return


def cmd_synth(args):
    layout = get_layout(args.layout)
    phantom = fileio.read_json(args.phantom) if args.phantom else DISK_PHANTOM
    zeta = _profile(args, layout)
    frame = inverse.synthesize_data(
        forward.Phantom.from_dict(phantom).field(),
        zeta,
        args.fine_level,
        noise_level=args.noise_level,
        seed=args.seed,
        reconstruction_level=args.level,
    )
    frame.write_json(_output(args, "frame.json"))
    logger.info(
        "%d patterns, noise std %.3e", frame.num_patterns, frame.noise_std
    )
    logger.debug("Patterns: %s", [pattern_label(p) for p in frame.patterns])
    return


def cmd_invert(args):
    frame = inverse.MeasurementFrame.read_json(args.data)
    layout = get_layout(args.layout)
    config = inverse.LMConfig(maxiter=args.maxiter)
    if args.invert == "homogeneous":
        result = inverse.fit_homogeneous(
            frame, layout, args.level, sigma0=args.sigma0, zeta0=args.zeta0,
            kind=args.kind, config=config, debug=args.debug,
        )
        fileio.write_json(_output(args, "homogeneous.json"), result.contacts())
    else:
        prior = inverse.PriorModel()
        if args.prior:
            prior = inverse.PriorModel.from_dict(fileio.read_json(args.prior))
        result = inverse.reconstruct_map(
            frame, layout, args.level, prior=prior, sigma0=args.sigma0,
            zeta0=args.zeta0, kind=args.kind, config=config, debug=args.debug,
        )
    result.write(args.output_dir)
    logger.info(
        "Relative discrepancy %.4e (%.4e of the maximal variation)",
        result.relative_discrepancy,
        result.variation_discrepancy,
    )
    if not result.converged:
        logger.warning("Levenberg-Marquardt did not converge.")
    return


def _add_mesh_args(parser, level):
    parser.add_argument(
        "--level", "-l", type=int, default=level,
        help="refinement level, 2**level + 1 nodes per side (default: %d)" % level,
    )
    parser.add_argument(
        "--layout", default="default8",
        help="electrode layout, one of %s or a JSON file (default: default8)"
        % ", ".join(sorted(LAYOUTS)),
    )
    return


def _add_contact_args(parser):
    parser.add_argument(
        "--kind", "-k", choices=["box", "hat"], default="hat",
        help="contact conductance model (default: hat)",
    )
    parser.add_argument(
        "--zeta", "-z", type=float, default=None,
        help="box height or hat half-height (default: per model)",
    )
    parser.add_argument(
        "--contacts", default=None, help="JSON file with a full conductance profile"
    )
    return


def _add_run_args(parser):
    # accepted after the subcommand too; absent values keep the global ones
    parser.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    parser.add_argument("--threads", "-t", type=int, default=argparse.SUPPRESS)
    return


def _add_ratio_args(parser):
    parser.add_argument("--sigma", type=float, default=1.0)
    parser.add_argument("--num-ratios", type=int, default=20)
    parser.add_argument("--ratio-min", type=float, default=1.0e-4)
    parser.add_argument("--ratio-max", type=float, default=10.0)
    return


def _parse_input_arguments(argv=None):
    """Parse input arguments, with defaults from ``--config`` if given."""
    parser = argparse.ArgumentParser(
        description="Smoothened complete electrode model on the unit square."
    )
    parser.add_argument(
        "--version", action="version", version="%(prog)s " + __version__
    )
    parser.add_argument(
        "--output-dir", "-o",
        default=os.environ.get("SMOOTHCEM_OUTPUT_DIR", "."),
        help="directory for all results (default: $SMOOTHCEM_OUTPUT_DIR or .)",
    )
    parser.add_argument("--seed", type=int, default=0, help="random seed (default: 0)")
    parser.add_argument(
        "--threads", "-t", type=int, default=1, help="worker threads (default: 1)"
    )
    parser.add_argument("--config", default=None, help="JSON file with defaults")
    parser.add_argument("--verbose", "-v", action="count", default=0)

    subparsers = parser.add_subparsers(dest="command")
    subparsers.required = True
    leaves = []

    p = subparsers.add_parser("mesh", help="write a triangulation")
    _add_mesh_args(p, 3)
    p.add_argument("--order", type=int, choices=[1, 2], default=1)
    p.set_defaults(func=cmd_mesh)
    leaves.append(p)

    p = subparsers.add_parser("forward", help="solve for one current pattern")
    _add_mesh_args(p, 7)
    _add_contact_args(p)
    p.add_argument("--order", type=int, choices=[1, 2], default=1)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--phantom", default=None, help="JSON conductivity phantom")
    p.add_argument(
        "--pattern", "-I", type=_float_list, default=None,
        help="comma-separated zero-sum currents (default: e_M - e_1)",
    )
    p.add_argument(
        "--grounding", choices=list(forward.GROUNDINGS), default="zero-mean"
    )
    p.add_argument("--solver", choices=["direct", "cg"], default="direct")
    p.add_argument("--vtu", action="store_true", help="also write solution.vtu")
    p.set_defaults(func=cmd_forward)
    leaves.append(p)

    p = subparsers.add_parser("study", help="model comparison and convergence")
    study_parsers = p.add_subparsers(dest="study")
    study_parsers.required = True
    for name in ["difference", "scaling"]:
        q = study_parsers.add_parser(name)
        _add_mesh_args(q, 8)
        _add_ratio_args(q)
        q.set_defaults(func=cmd_study)
        leaves.append(q)
    for name in ["rates", "deriv"]:
        q = study_parsers.add_parser(name)
        q.add_argument(
            "--layout", default=None,
            help="electrode layout (default: default8, default12 if inhomogeneous)",
        )
        q.add_argument(
            "--levels", type=_int_list, default=[5, 6, 7, 8],
            help="mesh levels (default: 5,6,7,8)",
        )
        q.add_argument("--reference-level", type=int, default=10)
        q.add_argument("--models", type=_str_list, default=["box", "hat"])
        q.add_argument("--orders", type=_int_list, default=[1, 2])
        q.add_argument("--sigma", type=float, default=1.0)
        q.add_argument(
            "--ratio", type=float, default=50.0e-3, help="sigma / box height"
        )
        q.add_argument(
            "--hat-ratio", type=float, default=30.0e-3, help="sigma / hat half-height"
        )
        q.add_argument(
            "--inhomogeneous", action="store_true",
            help="phantom conductivity with random contacts",
        )
        q.add_argument("--phantom", default=None)
        q.set_defaults(func=cmd_study)
        leaves.append(q)

    p = subparsers.add_parser("synth", help="synthetic measurement frame")
    _add_mesh_args(p, 5)
    _add_contact_args(p)
    p.add_argument("--fine-level", type=int, default=7)
    p.add_argument("--phantom", default=None)
    p.add_argument("--noise-level", type=float, default=inverse.DEFAULT_NOISE_LEVEL)
    p.set_defaults(func=cmd_synth, layout="default16")
    leaves.append(p)

    p = subparsers.add_parser("invert", help="fit parameters to a frame")
    invert_parsers = p.add_subparsers(dest="invert")
    invert_parsers.required = True
    for name in ["homogeneous", "map"]:
        q = invert_parsers.add_parser(name)
        _add_mesh_args(q, 5)
        q.add_argument("--data", required=True, help="frame JSON")
        q.add_argument("--kind", "-k", choices=["box", "hat"], default="hat")
        q.add_argument("--sigma0", type=float, default=inverse.DEFAULT_SIGMA)
        q.add_argument("--zeta0", type=float, default=None)
        q.add_argument("--maxiter", type=int, default=50)
        q.add_argument("--debug", action="store_true", help="YAML iteration trace")
        if name == "map":
            q.add_argument("--prior", default=None, help="prior JSON")
        q.set_defaults(func=cmd_invert, layout="default16")
        leaves.append(q)

    for leaf in leaves:
        _add_run_args(leaf)

    pre, _ = parser.parse_known_args(argv)
    if pre.config is not None:
        defaults = fileio.read_json(pre.config)
        for key in ("command", "study", "invert", "config"):
            defaults.pop(key, None)
        parser.set_defaults(**defaults)
        # subparser defaults overwrite the parent namespace
        local = {k: v for k, v in defaults.items() if k not in GLOBAL_OPTIONS}
        for leaf in leaves:
            leaf.set_defaults(**local)
    return parser.parse_args(argv)


def _echo_config(args):
    config = {k: v for k, v in vars(args).items() if k not in ("func", "config")}
    fileio.write_json(os.path.join(args.output_dir, "config.json"), config)
    return


def main(argv=None):
    try:
        args = _parse_input_arguments(argv)
    except ConfigError as e:
        sys.stderr.write("error: %s\n" % e)
        return 2
    logging.basicConfig(
        level=[logging.WARNING, logging.INFO, logging.DEBUG][min(args.verbose, 2)],
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        fileio.ensure_directory(args.output_dir)
        _echo_config(args)
        args.func(args)
    except ConfigError as e:
        sys.stderr.write("error: %s\n" % e)
        return 2
    except NumericalError as e:
        sys.stderr.write("numerical failure: %s\n" % e)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
