import argparse
import os
import sys
from pathlib import Path

from omegaconf import OmegaConf

from ifs_experiment_utils.config import build_run_config, merge_layers
from ifs_experiment_utils.errors import IfsExperimentError
from ifs_experiment_utils.tasks import run_task
from ifs_experiment_utils.utils import generate_configs


def parse_args():
    parser = argparse.ArgumentParser(description="Sweep runner")

    parser.add_argument("--conf", help="Yaml sweep file", required=True)
    parser.add_argument(
        "--varying_param_key", help="Run only this key of varying_params"
    )

    if len(sys.argv) == 1:
        parser.print_help()

    return parser.parse_args()


def main(exp_conf, varying_param_key):
    """Runs every grid point of one varying key; returns the pass flag per run."""
    varying = OmegaConf.to_container(exp_conf["varying_params"][varying_param_key])
    if varying.pop("skip", False):
        print(f"Skipping {varying_param_key}")
        return []

    static = OmegaConf.to_container(exp_conf["static_params"])
    proj_dir = static.pop("proj_dir", "exps")
    task_name = varying.pop("task", static.pop("task", "report"))
    grid = varying.pop("grid", {})

    results = []
    for rep_no, point in enumerate(generate_configs(grid)):
        rep_dir = os.path.join(proj_dir, varying_param_key, str(rep_no))
        print(f"Going to run {task_name} for {varying_param_key} with {point}")
        conf = merge_layers(static, varying, point, {"out": rep_dir})
        report = run_task(build_run_config(conf), task_name)
        results.append(report.passed)
    return results


if __name__ == "__main__":
    args = parse_args()
    exp_conf = OmegaConf.load(Path(args.conf))

    keys = exp_conf["varying_params"]
    if args.varying_param_key:
        keys = [args.varying_param_key]
    all_passed = True
    for varying_param_key in keys:
        try:
            all_passed &= all(main(exp_conf, varying_param_key))
        except IfsExperimentError as e:
            print(f"{varying_param_key} failed: {e}")
            all_passed = False

    sys.exit(0 if all_passed else 1)
