# This file is part of desgn, distributed energy system design for LV feeders
#
# This program is free software: you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with this program.  If not, see <http://www.gnu.org/licenses/>.

"""The ``desgn`` command line.

Exit status: 0 on success, 2 for configuration and input errors, 3 when a
stage cannot produce a result, 4 when an iterative stage ends unconverged
(products are still written).
"""

import argparse
from pathlib import Path
import sys

from desgn import __version__
from desgn.core import Error, Msg
from desgn.dfs import load_report
from desgn.recipes import RECIPES
from desgn.ui.frame import Frame, FrameSet

_COMPONENT = "desgn"
_LEVELS = {level.name.lower(): level for level in Msg.SeverityLevel}


def _absolute(value):
    return str(Path(value).resolve())


def build_parser():
    parser = argparse.ArgumentParser(prog="desgn", description="Distributed energy system design on LV feeders")
    parser.add_argument("--version", action="version", version=f"desgn {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--log-level", choices=list(_LEVELS), default="info", help="terminal message level")
    common.add_argument("--log-file", help="also write messages at --log-level into this file")
    sub = parser.add_subparsers(dest="recipe", required=True)

    for name, text in (("central", "solve the whole feeder at once"), ("distributed", "solve by ADMM over partitions")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--config", required=True, help="run configuration (JSON)")
        p.add_argument("--out", help="product directory (default: the configured output)")
        p.add_argument("--seed", type=int, help="override the configured seed")
        p.add_argument("--dump-lp", help="write each load's siting LP into this directory")

    p = sub.add_parser("validate", parents=[common], help="power-flow validation of a report")
    p.add_argument("--report", required=True, help="report.json of a run")
    p.add_argument("--network", required=True, help="feeder directory")
    p.add_argument("--out", default=".", help="product directory")
    p.add_argument("--v-max", type=float, help="upper voltage limit (default: the report's)")
    p.add_argument("--v-min", type=float, help="lower voltage limit (default: the report's)")

    p = sub.add_parser("partition", parents=[common], help="balanced feeder partitioning")
    p.add_argument("--network", required=True, help="feeder directory")
    p.add_argument("-k", type=int, required=True, help="number of groups")
    p.add_argument("--timings", help="timing_samples.csv for the solve-time regression")
    p.add_argument("--out", default=".", help="product directory")
    p.add_argument("--max-buses", type=int, default=0, help="bus cap per group, 0 for none")
    p.add_argument("--close-hops", type=int, default=2, help="branches within which loads stay together")
    return parser


def _inputs(args):
    """Input frames and recipe settings of the parsed command line."""
    frames = FrameSet()
    settings = {}
    group = Frame.FrameGroup.INPUT
    if args.recipe in ("central", "distributed"):
        frames.append(Frame(args.config, tag="CONFIG", group=group, frameType=Frame.FrameType.JSON))
        if args.out:
            settings["output"] = _absolute(args.out)
        if args.seed is not None:
            settings["seed"] = args.seed
        if args.dump_lp:
            settings["dump_lp"] = _absolute(args.dump_lp)
    elif args.recipe == "validate":
        frames.append(Frame(args.report, tag="REPORT", group=group, frameType=Frame.FrameType.JSON))
        frames.append(Frame(args.network, tag="NETWORK", group=group, frameType=Frame.FrameType.DIRECTORY))
        settings["output"] = _absolute(args.out)
        if args.v_max is not None:
            settings["limits.v_max"] = args.v_max
        if args.v_min is not None:
            settings["limits.v_min"] = args.v_min
    else:
        frames.append(Frame(args.network, tag="NETWORK", group=group, frameType=Frame.FrameType.DIRECTORY))
        if args.timings:
            frames.append(Frame(args.timings, tag="TIMINGS", group=group, frameType=Frame.FrameType.CSV))
        settings.update(output=_absolute(args.out), k=args.k, max_buses=args.max_buses, close_hops=args.close_hops)
    return frames, settings


def _unconverged(recipe, products):
    """What ended unconverged: stage names, or power-flow timepoints for validate."""
    frame = products.find("REPORT", required=False)
    if frame is None:
        return []
    report = load_report(frame.file)
    if recipe == "validate":
        return [f"timepoint {t}" for t in (report.violations or {}).get("unconverged_timepoints", [])]
    return [f"stage {s.stage}" for s in report.stages if not s.converged]


def main(argv=None):
    args = build_parser().parse_args(argv)
    Msg.set_config(level=_LEVELS[args.log_level], domain="desgn")
    if args.log_file:
        Msg.start_file(_LEVELS[args.log_level], args.log_file)
    try:
        recipe = RECIPES[args.recipe]()
        frames, settings = _inputs(args)
        Msg.info(_COMPONENT, f"running {recipe.name} {recipe.version}")
        products = recipe.run(frames, settings)
        for frame in products:
            Msg.debug(_COMPONENT, f"product {frame.tag}: {frame.file}")
        unconverged = _unconverged(args.recipe, products)
        if unconverged:
            Msg.warning(_COMPONENT, f"no convergence: {', '.join(unconverged)}")
            return 4
        return 0
    except Error as err:
        Msg.error(_COMPONENT, str(err))
        return err.exit_code
    finally:
        Msg.stop_file()


if __name__ == "__main__":
    sys.exit(main())
