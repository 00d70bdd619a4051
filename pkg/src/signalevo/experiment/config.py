"""Experiment configuration: one INI file drives a whole campaign.

The ``[defaults]`` section holds the common evolution parameters (every
NEAT knob can be overridden there); ``[experiment]`` holds the task,
protocol and bookkeeping choices. Round trips through
:meth:`ExperimentConfig.save` / :meth:`ExperimentConfig.load` are
stable.
"""

import configparser
import dataclasses
from dataclasses import dataclass, field, fields
from pathlib import Path

from ..errors import ConfigError, ContractError
from ..neat.config import NeatConfig
from ..tasks import Setting

ALL_SETTINGS = ("regression-unlimited", "regression-limited", "classification-unlimited", "classification-limited")


@dataclass
class ExperimentConfig:
    name: str = "experiment"
    setting: str = "regression-unlimited"
    vocab_size: int = 5
    noise_sigma: float = 0.0
    trials_per_concept: int = 1
    run_count: int = 20
    base_seed: int = 1000
    max_generations: int = 10000
    reset_after: int = 50
    snapshot: bool = False
    out_dir: str = "runs"

    # zero-shot protocol (|V| stays vocab_size; training subsets below)
    zero_shot_sizes: tuple = ()
    zero_shot_concepts: tuple = ()

    # referential game
    referential: bool = False
    object_count: int = 5
    object_seed: int = 97531

    # sweep lists for the table-reproducing subcommands
    settings: tuple = ALL_SETTINGS
    noise_sigmas: tuple = (0.1, 0.2, 0.5, 1.0)

    neat: NeatConfig = field(default_factory=NeatConfig)

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.vocab_size < 1:
            raise ConfigError("vocab_size must be >= 1")
        if self.noise_sigma < 0:
            raise ConfigError("noise_sigma must be >= 0")
        if self.trials_per_concept < 1:
            raise ConfigError("trials_per_concept must be >= 1")
        if self.run_count < 1:
            raise ConfigError("run_count must be >= 1")
        if self.max_generations < 1:
            raise ConfigError("max_generations must be >= 1")
        if self.referential and (self.zero_shot_sizes or self.zero_shot_concepts):
            raise ConfigError("referential and zero-shot protocols are mutually exclusive in one run")
        if self.referential and not 1 <= self.object_count <= 8:
            raise ConfigError("object_count must lie in 1..8")
        try:
            for label in (self.setting, *self.settings):
                Setting.from_label(label)
        except ContractError as exc:
            raise ConfigError(str(exc)) from exc
        for i in self.zero_shot_concepts:
            if not 1 <= i <= self.vocab_size:
                raise ConfigError(f"zero-shot concept {i} outside 1..{self.vocab_size}")
        for s in self.zero_shot_sizes:
            if not 1 <= s <= self.vocab_size:
                raise ConfigError(f"zero-shot subset size {s} outside 1..{self.vocab_size}")
        self.neat.validate()
        return self

    def replace(self, **kwargs):
        cfg = dataclasses.replace(self, **kwargs)
        return cfg.validate()

    @staticmethod
    def _parse_scalar(kind, raw):
        if kind is bool:
            lowered = raw.strip().lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ConfigError(f"not a boolean: {raw!r}")
        return kind(raw)

    @classmethod
    def load(cls, path):
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        parser = configparser.ConfigParser()
        try:
            parser.read(path)
        except configparser.Error as exc:
            raise ConfigError(f"malformed config {path}: {exc}") from exc

        kwargs = {}
        exp_fields = {f.name: f for f in fields(cls) if f.name != "neat"}
        if parser.has_section("experiment"):
            for key, raw in parser.items("experiment"):
                f = exp_fields.get(key)
                if f is None:
                    raise ConfigError(f"unknown experiment option {key!r}")
                if f.name in ("zero_shot_sizes", "zero_shot_concepts"):
                    kwargs[key] = tuple(int(x) for x in raw.split(",") if x.strip()) if raw.strip() else ()
                elif f.name == "settings":
                    kwargs[key] = tuple(x.strip() for x in raw.split(",") if x.strip())
                elif f.name == "noise_sigmas":
                    kwargs[key] = tuple(float(x) for x in raw.split(",") if x.strip())
                else:
                    kwargs[key] = cls._parse_scalar(type(f.default), raw)

        neat_kwargs = {}
        neat_fields = {f.name: f for f in fields(NeatConfig)}
        if parser.has_section("defaults"):
            for key, raw in parser.items("defaults"):
                f = neat_fields.get(key)
                if f is None:
                    raise ConfigError(f"unknown defaults option {key!r}")
                neat_kwargs[key] = cls._parse_scalar(type(f.default), raw)
        try:
            return cls(neat=NeatConfig(**neat_kwargs), **kwargs)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def save(self, path):
        parser = configparser.ConfigParser()
        parser["experiment"] = {}
        for f in fields(self):
            if f.name == "neat":
                continue
            value = getattr(self, f.name)
            if isinstance(value, tuple):
                value = ",".join(str(v) for v in value)
            parser["experiment"][f.name] = str(value)
        parser["defaults"] = {f.name: str(getattr(self.neat, f.name)) for f in fields(NeatConfig)}
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as fh:
            parser.write(fh)
        return path

    def setting_obj(self, label=None):
        return Setting.from_label(label or self.setting)

    def neat_for(self, activation):
        return dataclasses.replace(self.neat, default_activation=activation)


def evenly_spaced_concepts(vocab_size, subset_size):
    """Training subset spread over the vocabulary: floor(1 + k*|V|/size)."""
    if not 1 <= subset_size <= vocab_size:
        raise ConfigError(f"subset size {subset_size} outside 1..{vocab_size}")
    picks = sorted({1 + int(k * vocab_size / subset_size) for k in range(subset_size)})
    if len(picks) != subset_size:
        raise ConfigError(f"cannot spread {subset_size} concepts over 1..{vocab_size}")
    return tuple(picks)
