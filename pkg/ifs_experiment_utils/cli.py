import argparse
import sys

from ifs_experiment_utils.config import load_config
from ifs_experiment_utils.errors import IfsExperimentError
from ifs_experiment_utils.ifs_core import BUILTIN_SYSTEMS
from ifs_experiment_utils.tasks import run_task

SUBCOMMANDS = {
    "sample": "sample",
    "check-separation": "separation",
    "verify-relations": "relations",
    "approx": "approx",
    "report": "report",
}


def _add_common_args(parser):
    parser.add_argument("--config", help="JSON or YAML configuration file")
    parser.add_argument(
        "--builtin", choices=sorted(BUILTIN_SYSTEMS), help="Builtin system name"
    )
    parser.add_argument("--seed", type=int, help="Random seed")
    parser.add_argument("--samples", type=int, help="Chaos-game sample size N")
    parser.add_argument("--level", type=int, help="Level k")
    parser.add_argument("--levels", help="Level range A..B")
    parser.add_argument("--function", help="Multiplier function, e.g. 'x**2'")
    parser.add_argument("--mode", help="collocation or average")
    parser.add_argument("--out", help="Output directory")


def parse_args(argv=None):
    parser = argparse.ArgumentParser(
        description="Experiments on IFS measures and their Cuntz-algebra operators"
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in SUBCOMMANDS:
        _add_common_args(subparsers.add_parser(command))

    if argv is None and len(sys.argv) == 1:
        parser.print_help()

    return parser.parse_args(argv)


def main(argv=None):
    """Exit code 0 iff every acceptance check of the task passed."""
    args = parse_args(argv)
    overrides = {
        key: getattr(args, key)
        for key in (
            "builtin",
            "seed",
            "samples",
            "level",
            "levels",
            "function",
            "mode",
            "out",
        )
    }
    try:
        config = load_config(args.config, overrides)
        report = run_task(config, SUBCOMMANDS[args.command])
    except IfsExperimentError as e:
        print(f"Error: {e}", file=sys.stderr)
        return 2
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
