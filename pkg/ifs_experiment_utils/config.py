"""
Run configuration: a structured OmegaConf schema merged from three layers,
builtin system (lowest), config file, command-line overrides (highest).
"""
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import yaml
from omegaconf import MISSING, DictConfig, OmegaConf
from omegaconf.errors import OmegaConfBaseException

from ifs_experiment_utils.approx import (
    DEFAULT_LEVEL_OFFSET,
    DEFAULT_SAMPLES_PER_CELL,
    ContinuousFunctionSpec,
)
from ifs_experiment_utils.errors import (
    ConfigParseError,
    ConfigValidationError,
    IfsExperimentError,
)
from ifs_experiment_utils.expressions import parse_function
from ifs_experiment_utils.ifs_core import (
    BUILTIN_SYSTEMS,
    IfsSystem,
    affine_system,
    builtin_system,
    check_point,
)
from ifs_experiment_utils.measure import DEFAULT_BURN_IN, SelfSimilarWeights
from ifs_experiment_utils.opspace import DEFAULT_SIZE_BUDGET, MODES, check_level
from ifs_experiment_utils.utils import parse_level_range

SYSTEM_KEYS = ("n", "dimension", "maps", "box")


@dataclass
class MapConf:
    A: List[List[float]] = MISSING
    b: List[float] = MISSING


@dataclass
class BoxConf:
    lo: List[float] = MISSING
    hi: List[float] = MISSING


@dataclass
class RunConf:
    builtin: Optional[str] = None
    name: Optional[str] = None
    n: Optional[int] = None
    dimension: Optional[int] = None
    maps: Optional[List[MapConf]] = None
    box: Optional[BoxConf] = None
    weights: Optional[List[float]] = None
    function: Optional[str] = None
    seed: int = 0
    samples: int = 100000
    burn_in: int = DEFAULT_BURN_IN
    level: int = 3
    levels: str = "1..8"
    x0: Optional[List[float]] = None
    samples_per_cell: int = DEFAULT_SAMPLES_PER_CELL
    mode: str = "collocation"
    mc_samples: int = 10000
    level_offset: int = DEFAULT_LEVEL_OFFSET
    size_budget: int = DEFAULT_SIZE_BUDGET
    out: str = "out"


@dataclass(frozen=True, eq=False)
class RunConfig:
    ifs: IfsSystem
    weights: SelfSimilarWeights
    function: ContinuousFunctionSpec
    seed: int
    samples: int
    burn_in: int
    level: int
    levels: Tuple[int, int]
    x0: Any
    samples_per_cell: int
    mode: str
    mc_samples: int
    level_offset: int
    size_budget: int
    out: Path
    echo: Dict = field(default_factory=dict)


def _load_file(path):
    try:
        return OmegaConf.load(Path(path))
    except FileNotFoundError as e:
        raise ConfigParseError(f"config file '{path}' does not exist") from e
    except (yaml.YAMLError, OmegaConfBaseException) as e:
        raise ConfigParseError(f"cannot parse config file '{path}': {e}") from e


def _builtin_layer(name):
    if name is None:
        return OmegaConf.create({})
    if name not in BUILTIN_SYSTEMS:
        raise ConfigValidationError(
            f"unknown builtin system '{name}', expected one of {sorted(BUILTIN_SYSTEMS)}",
            "builtin",
        )
    system = builtin_system(name).to_dict()
    return OmegaConf.create({key: system[key] for key in SYSTEM_KEYS})


def merge_layers(*layers) -> DictConfig:
    """Schema, then the layers in increasing priority; unknown keys are rejected."""
    layers = [
        OmegaConf.create(layer) if isinstance(layer, dict) else layer
        for layer in layers
    ]
    builtin = None
    for layer in layers:
        builtin = layer.get("builtin") or builtin
    try:
        return OmegaConf.merge(
            OmegaConf.structured(RunConf), _builtin_layer(builtin), *layers
        )
    except OmegaConfBaseException as e:
        message = getattr(e, "msg", None) or str(e)
        raise ConfigValidationError(message, e.full_key or None) from e


def _wrap(key_path, build, *args):
    try:
        return build(*args)
    except ConfigValidationError:
        raise
    except IfsExperimentError as e:
        raise ConfigValidationError(str(e), key_path) from e


def _build_system(conf: DictConfig) -> IfsSystem:
    if conf.maps is None or conf.box is None:
        raise ConfigValidationError(
            "give either a builtin system name or maps and box", "maps"
        )
    if conf.n is not None and conf.n != len(conf.maps):
        raise ConfigValidationError(
            f"n = {conf.n} but {len(conf.maps)} maps are given", "n"
        )
    dimension = len(conf.box.lo)
    if conf.dimension is not None and conf.dimension != dimension:
        raise ConfigValidationError(
            f"dimension = {conf.dimension} but the box has dimension {dimension}",
            "dimension",
        )
    name = conf.name or conf.builtin or "custom"
    maps = OmegaConf.to_container(conf.maps)
    box = OmegaConf.to_container(conf.box)
    return _wrap(
        "maps",
        affine_system,
        [m["A"] for m in maps],
        [m["b"] for m in maps],
        box["lo"],
        box["hi"],
        name,
    )


def _require(condition, message, key_path):
    if not condition:
        raise ConfigValidationError(message, key_path)


def build_run_config(conf: DictConfig) -> RunConfig:
    """Validates a merged config against every module precondition."""
    ifs = _build_system(conf)
    if conf.weights is None:
        weights = SelfSimilarWeights.hutchinson(ifs.n)
    else:
        _require(
            len(conf.weights) == ifs.n,
            f"got {len(conf.weights)} weights for {ifs.n} maps",
            "weights",
        )
        weights = _wrap("weights", SelfSimilarWeights, tuple(conf.weights))
    function_text = conf.function or ("x" if ifs.dimension == 1 else "x0")
    function = _wrap(
        "function", parse_function, function_text, ifs.dimension, ifs.ambient_box
    )
    _require(conf.samples >= 1, f"samples must be >= 1, got {conf.samples}", "samples")
    _require(
        conf.burn_in >= 0, f"burn_in must be >= 0, got {conf.burn_in}", "burn_in"
    )
    _require(conf.seed >= 0, f"seed must be >= 0, got {conf.seed}", "seed")
    _require(
        conf.samples_per_cell >= 1,
        f"samples_per_cell must be >= 1, got {conf.samples_per_cell}",
        "samples_per_cell",
    )
    _require(
        conf.mc_samples >= 1,
        f"mc_samples must be >= 1, got {conf.mc_samples}",
        "mc_samples",
    )
    _require(
        conf.level_offset >= 0,
        f"level_offset must be >= 0, got {conf.level_offset}",
        "level_offset",
    )
    _require(
        conf.mode in MODES, f"mode must be one of {MODES}, got '{conf.mode}'", "mode"
    )
    _require(conf.level >= 0, f"level must be >= 0, got {conf.level}", "level")
    _wrap("level", check_level, ifs.n, conf.level + 1, conf.size_budget)
    levels = parse_level_range(conf.levels)
    _wrap("levels", check_level, ifs.n, levels[1], conf.size_budget)
    x0 = ifs.ambient_box.center if conf.x0 is None else list(conf.x0)
    x0 = _wrap("x0", check_point, ifs, x0)
    return RunConfig(
        ifs=ifs,
        weights=weights,
        function=function,
        seed=conf.seed,
        samples=conf.samples,
        burn_in=conf.burn_in,
        level=conf.level,
        levels=levels,
        x0=x0,
        samples_per_cell=conf.samples_per_cell,
        mode=conf.mode,
        mc_samples=conf.mc_samples,
        level_offset=conf.level_offset,
        size_budget=conf.size_budget,
        out=Path(conf.out),
        echo=OmegaConf.to_container(conf),
    )


def load_config(path=None, overrides=None) -> RunConfig:
    """
    Loads a JSON or YAML config file, applies the overrides dict (e.g. the
    command-line flags) and validates the result.
    """
    layers = []
    if path is not None:
        layers.append(_load_file(path))
    layers.append({k: v for k, v in (overrides or {}).items() if v is not None})
    return build_run_config(merge_layers(*layers))
