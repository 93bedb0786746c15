import argparse
import datetime
import logging
import sys

import numpy as np
import pandas as pd

import harness
from correlators import Method, count_rate, g3_connected
from errors import TriplesError
from scattering import reflection, transmission


def _common():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="INI file with [ensemble], [method], [grid], ... sections")
    common.add_argument("--method", choices=[m.value for m in Method], default=None)
    common.add_argument("--out", default=None, help="output directory")
    common.add_argument("--threads", type=int, default=None)
    common.add_argument("--loop", choices=harness.LOOP_FLAGS, default=None)
    common.add_argument("--log", default="triples.log", help="log file")
    return common


def build_parser():
    common = _common()
    parser = argparse.ArgumentParser(
        prog="triples",
        description="Connected three-photon correlations of light transmitted through a chiral atomic chain",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    scatter = commands.add_parser("scatter", parents=[common], help="single-photon t_k and r_k table")
    scatter.add_argument("--k-min", type=float, default=-5.0)
    scatter.add_argument("--k-max", type=float, default=5.0)
    scatter.add_argument("--points", type=int, default=21)

    commands.add_parser("grid", parents=[common], help="diagrammatic g_c3 grid")
    commands.add_parser("oracle", parents=[common], help="master-equation g_c3 grid")
    commands.add_parser("compare", parents=[common], help="oracle versus diagrammatic epsilon")
    commands.add_parser("countrate", parents=[common], help="rate of connected photon triples")

    sweep = commands.add_parser("sweep", parents=[common], help="scenarios along one parameter axis")
    sweep.add_argument("--axis", choices=list(harness.SWEEP_AXES), required=True)
    sweep.add_argument("--values", nargs="*", default=[])
    return parser


def _overrides(args, method=None):
    return {
        ("method", "method"): method or args.method,
        ("method", "loop"): args.loop,
        ("method", "threads"): args.threads,
        ("output", "directory"): args.out,
    }


def scatter_table(params, k_min, k_max, points):
    k = np.linspace(k_min, k_max, points)
    t = transmission(k, params)
    r = reflection(k, params)
    return pd.DataFrame(
        {
            "k": k,
            "t_real": t.real,
            "t_imag": t.imag,
            "r_real": r.real,
            "r_imag": r.imag,
            "unitarity": np.abs(t) ** 2 + np.abs(r) ** 2,
        }
    )


def run(args):
    fixed = {
        "scatter": Method.DIAGRAMMATIC.value,
        "grid": Method.DIAGRAMMATIC.value,
        "countrate": Method.DIAGRAMMATIC.value,
        "oracle": Method.ORACLE.value,
        "compare": Method.BOTH.value,
    }.get(args.command)
    config = harness.load_config(args.config, _overrides(args, fixed))

    if args.command == "scatter":
        table = scatter_table(config.params, args.k_min, args.k_max, args.points)
        config.out_dir.mkdir(parents=True, exist_ok=True)
        table.to_csv(config.out_dir / f"{config.name}_scatter.csv", index=False)
        print(table.to_string(index=False))
    elif args.command in ("grid", "oracle", "compare"):
        result = harness.run_scenario(config)
        for path in result.files:
            print(path)
        if result.report is not None:
            print(f"epsilon = {result.report.epsilon:.6f}, max deviation = {result.report.max_deviation:.6f}")
    elif args.command == "countrate":
        wave = harness.wavefield_for(config)
        rate = count_rate(config.params, config.gamma_tot_hz, config.window, field=wave)
        origin = g3_connected(0.0, 0.0, 0.0, config.params, wave)
        print(f"g_c3(0,0,0) = {origin:.6g}, S = {rate:.6g} Hz")
    elif args.command == "sweep":
        table = harness.sweep(config, args.axis, args.values, threads=config.threads)
        print(table.to_string(index=False))
    return 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        filename=args.log,
        format="%(levelname)s: %(message)s",
        encoding="utf-8",
        level=logging.INFO,
    )
    logging.info(f"New triples session ({args.command})\n{datetime.datetime.now()}")
    try:
        return run(args)
    except TriplesError as error:
        logging.error(f"{type(error).__name__}: {error}")
        print(f"error: {error}", file=sys.stderr)
        return error.exit_code


if __name__ == "__main__":
    sys.exit(main())
