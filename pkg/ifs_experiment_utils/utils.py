import itertools
import re
from time import time

from ifs_experiment_utils.errors import ConfigValidationError


def _interpolate_values(start, end, step):
    if isinstance(start, int) and isinstance(end, int) and isinstance(step, int):
        return list(range(start, end + 1, step))
    n_steps = int(round((end - start) / step))
    return [round(start + i * step, 10) for i in range(n_steps + 1)]


def generate_configs(params):
    """
    Expands a mapping of parameters into the cartesian grid of configs.
    List values are taken as they are, {init, end, step} dicts are interpolated
    and scalars are held fixed.
    :param params:
    :return: list of dicts, one per grid point
    """
    param_names = list(params.keys())
    param_values = []

    for param_name in param_names:
        param_data = params[param_name]

        if isinstance(param_data, dict) and "init" in param_data:
            init_value = param_data["init"]
            end_value = param_data["end"]
            step_value = param_data.get("step", 1)

            if isinstance(init_value, (int, float)):
                param_values.append(
                    _interpolate_values(init_value, end_value, step_value)
                )
            elif isinstance(init_value, list) and all(
                isinstance(v, (int, float)) for v in init_value
            ):
                interpolated_values = _interpolate_values(
                    init_value[0], end_value[0], step_value
                )
                param_values.append(
                    [
                        [val, val + init_value[1] - init_value[0]]
                        for val in interpolated_values
                    ]
                )
        elif isinstance(param_data, list):
            param_values.append(param_data)
        else:
            param_values.append([param_data])

    configs = list(itertools.product(*param_values))

    result = []
    for config_values in configs:
        config = dict(zip(param_names, config_values))
        result.append(config)

    return result


_LEVEL_RANGE = re.compile(r"^\s*(\d+)\s*\.\.\s*(\d+)\s*$")


def parse_level_range(levels_str):
    """Parses 'A..B' into the inclusive pair (A, B)."""
    match = _LEVEL_RANGE.match(str(levels_str))
    if match is None:
        raise ConfigValidationError(
            f"level range must look like 'A..B', got '{levels_str}'", "levels"
        )
    k_min, k_max = int(match.group(1)), int(match.group(2))
    if k_min > k_max:
        raise ConfigValidationError(
            f"level range needs k_min <= k_max, got {k_min}..{k_max}", "levels"
        )
    return k_min, k_max


class Stopwatch:
    def __init__(self):
        self.t0 = time()

    def elapsed(self):
        return time() - self.t0
