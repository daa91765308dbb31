'''
Command line: ``mudsim run``, ``mudsim sweep`` and ``mudsim bound``.

Settings are layered: defaults, then ``--preset``, then the JSON
``--config`` file, then explicit flags.
'''

import argparse
import json
import logging
import sys

from . import __version__
from .errors import ConfigInvalid, MudsimError
from .harness import (DETECTORS, FORMATS, PRESETS, SimConfig, emit_report, preset_config,
                      run_simulation, single_user_config, sweep)

LOGGER = logging.getLogger(__name__)

# flag destination -> SimConfig field
FLAG_FIELDS = {
    "users": "users", "gain": "gain", "ebn0_db": "ebn0_db", "iters": "iterations",
    "frames": "frames", "info_bits": "info_bits", "seed": "seed", "detector": "detector",
    "t_threshold": "t_threshold", "pmax": "p_max", "pmin": "p_min", "plist": "p_list",
    "constellation": "constellation", "spreading": "spreading", "floor": "floor",
    "rho_margin": "rho_margin", "format": "format", "out": "output",
}


def _number_list(text, kind=float):
    try:
        return [kind(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError("Expected a comma separated list of %ss: %s" % (kind.__name__, text))


def _int_list(text):
    return _number_list(text, int)


def _add_run_flags(parser):
    parser.add_argument("--preset", choices=sorted(PRESETS))
    parser.add_argument("--extended", action="store_true",
                        help="long-running point of the preset")
    parser.add_argument("--config", metavar="FILE", help="JSON configuration file")
    parser.add_argument("--users", type=int)
    parser.add_argument("--gain", type=int, help="spreading gain L")
    parser.add_argument("--ebn0-db", dest="ebn0_db", type=float)
    parser.add_argument("--iters", type=int)
    parser.add_argument("--frames", type=int)
    parser.add_argument("--info-bits", dest="info_bits", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--detector", choices=DETECTORS)
    parser.add_argument("--t-threshold", dest="t_threshold", type=float,
                        help="threshold in multiples of N0")
    parser.add_argument("--pmax", type=int)
    parser.add_argument("--pmin", type=int)
    parser.add_argument("--plist", type=int)
    parser.add_argument("--constellation", choices=("bpsk", "qpsk", "8psk", "16qam"))
    parser.add_argument("--spreading", choices=("frame", "symbol"))
    parser.add_argument("--floor", type=float)
    parser.add_argument("--rho-margin", dest="rho_margin", type=float)
    parser.add_argument("--terminated", action="store_true", default=None)
    parser.add_argument("--max-log", dest="max_log", action="store_true", default=None)
    parser.add_argument("--format", choices=FORMATS)
    parser.add_argument("--out", help="report path, stdout when omitted")
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--progress", action="store_true")
    parser.add_argument("-v", "--verbose", action="count", default=0)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mudsim", description="Iterative multiuser detection Monte-Carlo simulator")
    parser.add_argument("--version", action="version", version="%(prog)s " + __version__)
    sub = parser.add_subparsers(dest="command", required=True)
    _add_run_flags(sub.add_parser("run", help="simulate one operating point"))
    p = sub.add_parser("sweep", help="simulate a grid of user counts and Eb/N0 values")
    _add_run_flags(p)
    p.add_argument("--users-list", dest="users_list", type=_int_list)
    p.add_argument("--ebn0-list", dest="ebn0_list", type=_number_list)
    _add_run_flags(sub.add_parser("bound", help="simulate the single-user bound"))
    return parser


def load_config(args):
    '''
    Layer preset, config file and flags into a validated SimConfig.
    '''
    if args.extended and not args.preset:
        raise ConfigInvalid("--extended needs a --preset")
    config = preset_config(args.preset, args.extended) if args.preset else SimConfig()
    if args.config:
        with open(args.config) as fp:
            try:
                data = json.load(fp)
            except ValueError as ex:
                raise ConfigInvalid("Configuration file %s is not valid JSON: %s" % (args.config, ex))
        if not isinstance(data, dict):
            raise ConfigInvalid("Configuration file must hold a JSON object")
        config = SimConfig.from_dict(data, base=config)
    flags = {field: getattr(args, dest) for dest, field in FLAG_FIELDS.items()
             if getattr(args, dest) is not None}
    for name in ("terminated", "max_log"):
        if getattr(args, name):
            flags[name] = True
    if "p_min" in flags:
        flags["pmin_schedule"] = False
    config = SimConfig.from_dict(flags, base=config)
    return config.validate()


def _setup_logging(verbose):
    level = logging.WARNING
    if verbose == 1:
        level = logging.INFO
    elif verbose > 1:
        level = logging.DEBUG
    logging.basicConfig(level=level, format="%(asctime)s %(name)s %(levelname)s %(message)s")


def main(argv=None):
    args = build_parser().parse_args(argv)
    _setup_logging(args.verbose)
    try:
        config = load_config(args)
        if args.command == "sweep":
            users = args.users_list or None
            report = sweep(config, users, args.ebn0_list, args.workers, args.progress)
        elif args.command == "bound":
            report = run_simulation(single_user_config(config), args.workers, args.progress,
                                    verbose=args.verbose > 0)
        else:
            report = run_simulation(config, args.workers, args.progress, verbose=args.verbose > 0)
        emit_report(report, config.format, config.output)
    except MudsimError as ex:
        print("mudsim: " + str(ex), file=sys.stderr)
        return 2
    except OSError as ex:
        print("mudsim: " + str(ex), file=sys.stderr)
        return 1
    return 0
