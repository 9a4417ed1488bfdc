"""INI experiment configuration.

Every key is optional. Defaults give the reference protocol: 100 nodes per
layer, Adam lr 0.001, 70 episodes of 30 steps, layer cap 15, initial layer 5.
"""

from __future__ import annotations

import configparser
from dataclasses import asdict, dataclass, field, fields, replace

from .env import EnvConfig
from .fmodel import FModel
from .rl import RLConfig
from .surrogate import SurrogateEnv

DEFAULT_SWEEP = (1, 4, 7, 9, 11, 13, 14, 15)
DEFAULT_TARGETS = (3, 10, 50, 60, 100)


@dataclass(frozen=True)
class DataConfig:
    dataset: str = "boston"  # bundled name ("boston", "iris") or a CSV path
    target: str = "MEDV"
    has_header: bool = True
    top_k: int = 100
    valid_start: int = 100
    normalize: bool = True


@dataclass(frozen=True)
class RunConfig:
    episodes: int = 70
    steps: int = 30
    init_layer: str = "5"  # an integer, or "fmodel"
    fmodel_steps: int = 50
    init_sweep: tuple = DEFAULT_SWEEP
    validation_episodes: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.episodes < 1:
            raise ValueError("run.episodes must be >= 1")
        if self.steps < 0:
            raise ValueError("run.steps must be >= 0")
        if self.fmodel_steps < 1:
            raise ValueError("run.fmodel_steps must be >= 1")
        if self.init_layer != "fmodel" and not str(self.init_layer).isdigit():
            raise ValueError("run.init_layer must be an integer or 'fmodel'")


@dataclass(frozen=True)
class SurrogateConfig:
    family: str = "monotone_decreasing"
    c: float = 1.0
    l_star: int = 7
    b: float = 0.1
    eta: float = 0.0
    episodes: int = 30
    seeds: int = 20
    init_layer: int = 5

    def env(self, layer_max, seed=0):
        return SurrogateEnv(self.family, self.c, self.l_star, self.b, self.eta, layer_max, seed)


@dataclass(frozen=True)
class FModelConfig:
    datasets: tuple = ("boston",)
    targets: tuple = DEFAULT_TARGETS
    epochs: int = 300
    test_fraction: float = 0.2
    normalize: bool = True
    row_fill: str = "tile"
    lr: float = 1e-3
    channels: tuple = (8, 16, 32)
    hidden: tuple = (64, 16)
    conv_activation: str = "relu"

    def build(self, seed):
        return FModel(seed=seed, lr=self.lr, channels=self.channels, hidden=self.hidden,
                      conv_activation=self.conv_activation)


@dataclass(frozen=True)
class ExperimentConfig:
    data: DataConfig = field(default_factory=DataConfig)
    env: EnvConfig = field(default_factory=EnvConfig)
    rl: RLConfig = field(default_factory=RLConfig)
    run: RunConfig = field(default_factory=RunConfig)
    surrogate: SurrogateConfig = field(default_factory=SurrogateConfig)
    fmodel: FModelConfig = field(default_factory=FModelConfig)

    def with_seed(self, seed):
        return replace(self, run=replace(self.run, seed=int(seed)))

    def with_dataset(self, path):
        return replace(self, data=replace(self.data, dataset=str(path)))


SECTIONS = ("data", "env", "rl", "run", "surrogate", "fmodel")
# child seeds come from run.seed; see depthtune.seeding
HIDDEN_KEYS = {("env", "seed")}


def _parse(value, default, name):
    if isinstance(default, bool):
        low = value.strip().lower()
        if low not in ("true", "false", "1", "0", "yes", "no"):
            raise ValueError(f"{name}: expected a boolean, got {value!r}")
        return low in ("true", "1", "yes")
    if isinstance(default, tuple):
        items = [v.strip() for v in value.split(",") if v.strip()]
        if default and isinstance(default[0], int):
            return tuple(int(v) for v in items)
        return tuple(items)
    if default is None:
        return float(value) if value.strip() else None
    if isinstance(default, int):
        return int(value)
    if isinstance(default, float):
        return float(value)
    return value.strip()


def _format(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    if value is None:
        return ""
    return str(value)


def load_config(path=None, text=None):
    """Read an INI file (or string); unknown sections or keys are errors."""
    parser = configparser.ConfigParser(interpolation=None)
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    elif text is not None:
        parser.read_string(text)
    base = ExperimentConfig()
    parts = {}
    for section in parser.sections():
        if section not in SECTIONS:
            raise ValueError(f"unknown config section [{section}]")
    for section in SECTIONS:
        current = getattr(base, section)
        known = {f.name: getattr(current, f.name) for f in fields(current)
                 if (section, f.name) not in HIDDEN_KEYS}
        updates = {}
        if parser.has_section(section):
            for key, raw in parser.items(section):
                if key not in known:
                    raise ValueError(f"unknown config key {section}.{key}")
                updates[key] = _parse(raw, known[key], f"{section}.{key}")
        parts[section] = replace(current, **updates)
    return ExperimentConfig(**parts)


def dump_config(cfg):
    lines = []
    for section in SECTIONS:
        lines.append(f"[{section}]")
        lines += [f"{k} = {_format(v)}" for k, v in asdict(getattr(cfg, section)).items()
                  if (section, k) not in HIDDEN_KEYS]
        lines.append("")
    return "\n".join(lines)
