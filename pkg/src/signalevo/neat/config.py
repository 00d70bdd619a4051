"""Evolution hyperparameters for one NEAT population."""

from dataclasses import dataclass, fields

from ..errors import ConfigError
from ..ctrnn import IDENTITY, SIGMOID


@dataclass
class NeatConfig:
    """Knobs for genome initialization, variation, speciation and reproduction.

    Defaults mirror the common parameter table of the reproduced
    experiments; the remaining values are standard NEAT choices and can
    all be overridden from the experiment config file.
    """

    population_size: int = 20
    conn_add_prob: float = 0.5
    conn_delete_prob: float = 0.5
    node_add_prob: float = 0.2
    node_delete_prob: float = 0.2
    elitism_species: int = 1
    elitism_individual: int = 1
    stagnation_generations: int = 50
    reset_on_extinction: bool = True
    recurrent_allowed: bool = True

    compatibility_threshold: float = 3.0
    disjoint_coefficient: float = 1.0
    weight_coefficient: float = 0.5

    # biases are treated exactly like weights
    weight_init_mean: float = 0.0
    weight_init_stdev: float = 1.0
    weight_min: float = -30.0
    weight_max: float = 30.0
    weight_mutate_rate: float = 0.8
    weight_mutate_power: float = 0.5
    weight_replace_rate: float = 0.1

    tau_init: float = 1.0
    tau_mutate_rate: float = 0.1
    tau_mutate_power: float = 0.2
    tau_floor: float = 1.0

    survival_threshold: float = 0.2
    crossover_rate: float = 0.75
    disabled_inherit_prob: float = 0.75

    default_activation: str = SIGMOID

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.population_size < 2:
            raise ConfigError("population_size must be at least 2")
        for f in fields(self):
            if f.name.endswith(("_prob", "_rate", "prob")) or f.name == "survival_threshold":
                v = getattr(self, f.name)
                if not 0.0 <= v <= 1.0:
                    raise ConfigError(f"{f.name}={v} outside [0, 1]")
        if self.default_activation not in (IDENTITY, SIGMOID):
            raise ConfigError(f"unknown activation {self.default_activation!r}")
        if self.tau_floor < 1.0:
            raise ConfigError("tau_floor must be >= 1 (unit-step Euler stability)")
        return self
