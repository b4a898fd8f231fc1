"""Experiment configuration: per-subcommand parameter defaults, an optional key=value file, and flags.

Later sources win: defaults < config file < command-line flags.
"""
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from dataclasses_json import dataclass_json
from loguru import logger
from omegaconf import OmegaConf
from omegaconf.errors import OmegaConfBaseException

from rigidity_lab.errors import ConfigError

DEFAULT_TOLERANCE = 1e-10
COMMON_KEYS = ("seed", "tol", "out")

SUBCOMMAND_PARAMETERS: Dict[str, Dict[str, Any]] = {
    "barycenter-suite": {
        "models": "S2,H2,SPD2,H2xH2",
        "instances": 1000,
        "atoms": 4,
        "equivariance_instances": 200,
        "family_instances": 200,
        "family_radius": 0.1,
        "tilt_levels": "0.2,0.1,0.05,0.025",
        "tilt_instances": 20,
    },
    "derivative-suite": {
        "models": "S2,H2,SPD2,H2xH2",
        "instances": 500,
        "atoms": 4,
        "radius": 0.1,
        "relative_error": 1e-4,
        "step": 1e-5,
    },
    "iwasawa-suite": {
        "elements": 10_000,
        "bound": 1e-12,
    },
    "chamber-suite": {
        "points": 1000,
        "pairs": 10_000,
        "horizon": 10.0,
        "round_trip_bound": 1e-10,
        "drift_bound": 1e-10,
    },
    "expansion": {
        "lam": 1.1,
        "max_word_length": 6,
        "perturbation": 1e-3,
        "mismatch": 0.05,
        "denjoy_points": 64,
    },
    "denjoy": {
        "rotation": 2.399963229728653,
        "points": 20_001,
        "schedule": "inverse-square",
        "total": 0.5,
        "iterations": 10_000,
        "residual_bound": 1e-8,
    },
    "rho-alpha": {
        "alphas": "0,0.5,1,2",
        "trials": 1000,
        "residual_bound": 1e-9,
        "grid": 24,
    },
    "collapse-witness": {
        "alpha": 1.0,
        "iterations": 50,
        "thetas": "0.3,0.6",
        "limit_bound": 1e-6,
    },
    "f-tilde": {
        "amplitudes": "0.02,0.01,0.005",
        "samples": 200,
        "tilt_samples": 50,
        "chart_radius": 0.5,
        "leaf_radius": 1.0,
        "residual_bound": 1e-8,
    },
    "quasiflat": {
        "levels": "1.0,1.01,1.02,1.05",
        "window": 10.0,
        "n": 100,
        "identity_window": 5.0,
        "identity_pairs": 1000,
    },
    "coarse-intersect": {
        "radii": "2,4,8",
        "window": 10.0,
        "n": 100,
        "shift": 2.0,
        "angle": 1.5707963267948966,
    },
}


@dataclass_json
@dataclass
class ExperimentConfig:
    subcommand: str
    seed: int = 0
    out: str = "out"
    tol: float = DEFAULT_TOLERANCE
    quiet: bool = False
    csv: bool = False
    parameters: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.subcommand not in SUBCOMMAND_PARAMETERS:
            raise ConfigError(f"unknown subcommand {self.subcommand}; expected one of {list(SUBCOMMAND_PARAMETERS)}")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ConfigError(f"seed must be an unsigned integer, got {self.seed}")
        unknown = sorted(set(self.parameters) - set(SUBCOMMAND_PARAMETERS[self.subcommand]))
        if unknown:
            raise ConfigError(f"unknown parameter(s) for {self.subcommand}: {', '.join(unknown)}")

    def get(self, key: str) -> Any:
        if key in self.parameters:
            return self.parameters[key]
        return SUBCOMMAND_PARAMETERS[self.subcommand][key]

    def floats(self, key: str) -> List[float]:
        return as_floats(self.get(key), key)

    def resolved(self) -> Dict[str, Any]:
        out = dict(SUBCOMMAND_PARAMETERS[self.subcommand])
        out.update(self.parameters)
        return out


def as_floats(value: Any, key: str = "value") -> List[float]:
    if isinstance(value, (list, tuple)):
        items = list(value)
    else:
        items = [v for v in str(value).split(",") if v.strip()]
    try:
        return [float(v) for v in items]
    except ValueError as e:
        raise ConfigError(f"{key} must be a comma-separated list of numbers, got {value!r}") from e


def coerce(key: str, value: Any, default: Any) -> Any:
    """Convert a file or flag value to the type of the parameter's default."""
    try:
        if isinstance(default, bool):
            if isinstance(value, str):
                return value.strip().lower() in ("1", "true", "yes")
            return bool(value)
        if isinstance(default, int):
            if isinstance(value, float) and not value.is_integer():
                raise ValueError(value)
            return int(value)
        if isinstance(default, float):
            return float(value)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"parameter {key} expects a {type(default).__name__}, got {value!r}") from e
    if isinstance(value, (list, tuple)):
        return ",".join(str(v) for v in value)
    return str(value)


def load_parameter_file(path: str) -> Dict[str, Any]:
    """Read key=value lines; blank lines and lines starting with # are skipped."""
    logger.info(f"<= {path}")
    try:
        with open(path, encoding='utf-8') as f:
            lines = [line.strip() for line in f]
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e}") from e
    dotlist = [line for line in lines if line and not line.startswith("#")]
    for line in dotlist:
        if "=" not in line:
            raise ConfigError(f"config line {line!r} in {path} is not of the form key=value")
    try:
        return OmegaConf.to_container(OmegaConf.from_dotlist(dotlist), resolve=True)
    except OmegaConfBaseException as e:
        raise ConfigError(f"cannot parse config file {path}: {e}") from e


def build_config(subcommand: str, flags: Dict[str, Any], file_values: Optional[Dict[str, Any]] = None,
                 quiet: bool = False, csv: bool = False) -> ExperimentConfig:
    """Merge file values and explicit flags over the subcommand defaults."""
    defaults = SUBCOMMAND_PARAMETERS.get(subcommand)
    if defaults is None:
        raise ConfigError(f"unknown subcommand {subcommand}")
    common = {"seed": 0, "tol": DEFAULT_TOLERANCE, "out": "out"}
    parameters: Dict[str, Any] = {}
    for source in (file_values or {}, flags):
        for key, value in source.items():
            key = key.replace("-", "_")
            if key in COMMON_KEYS:
                common[key] = coerce(key, value, {"seed": 0, "tol": 0.0, "out": ""}[key])
            elif key in defaults:
                parameters[key] = coerce(key, value, defaults[key])
            else:
                raise ConfigError(f"unknown parameter {key} for {subcommand}; "
                                  f"expected one of {sorted(defaults) + list(COMMON_KEYS)}")
    return ExperimentConfig(subcommand, common["seed"], common["out"], common["tol"], quiet, csv, parameters)
