"""Speciation, explicit fitness sharing and generational reproduction."""

import math
from dataclasses import dataclass, field
from itertools import count

from ..errors import ContractError, ExtinctionError
from .genome import compatibility_distance, crossover, mutate, new_genome, InnovationRegistry


@dataclass
class Species:
    key: int
    representative: "Genome"
    members: list = field(default_factory=list)
    best_fitness: float = None
    best_fitness_history: list = field(default_factory=list)
    generations_since_improvement: int = 0


def initial_population(config, io_shape, rng, registry=None, key_iter=None):
    """Minimal fully connected genomes, ``population_size`` of them."""
    if key_iter is None:
        key_iter = count(1)
    if registry is None:
        registry = InnovationRegistry(node_id_start=sum(io_shape))
    genomes = [
        new_genome(next(key_iter), io_shape, config, registry, rng)
        for _ in range(config.population_size)
    ]
    return genomes, registry


def speciate(genomes, previous_species, config, key_iter=None):
    """Partition genomes into species by representative distance.

    Each genome joins the first species whose representative lies within
    the compatibility threshold, else founds a new one. Species that end
    up empty are dropped; surviving species refresh their representative
    to the member closest to the old one.
    """
    if key_iter is None:
        key_iter = count(1 + max((s.key for s in previous_species), default=0))
    species = [s for s in sorted(previous_species, key=lambda s: s.key)]
    for s in species:
        s.members = []
    for genome in genomes:
        for s in species:
            if compatibility_distance(genome, s.representative, config) < config.compatibility_threshold:
                s.members.append(genome)
                break
        else:
            species.append(Species(key=next(key_iter), representative=genome.copy(), members=[genome]))
    species = [s for s in species if s.members]
    for s in species:
        closest = min(s.members, key=lambda g: (compatibility_distance(g, s.representative, config), g.key))
        s.representative = closest.copy()
    return species


def _allocate_offspring(weights, total):
    """Largest-remainder allocation of ``total`` slots, at least one each."""
    n = len(weights)
    if n > total:
        raise ContractError(f"{n} species cannot share {total} offspring slots")
    base = [1] * n
    spare = total - n
    wsum = sum(weights)
    if wsum <= 0:
        weights = [1.0] * n
        wsum = float(n)
    quotas = [w / wsum * spare for w in weights]
    taken = [math.floor(q) for q in quotas]
    leftover = spare - sum(taken)
    order = sorted(range(n), key=lambda i: (-(quotas[i] - taken[i]), i))
    for i in order[:leftover]:
        taken[i] += 1
    return [b + t for b, t in zip(base, taken)]


class Population:
    """One NEAT population evolving under a task-assigned fitness.

    The caller owns the evaluation loop: assign a fitness to every
    genome, then call :meth:`reproduce` to advance one generation.
    """

    def __init__(self, config, io_shape, rng):
        self.config = config
        self.io_shape = tuple(io_shape)
        self.rng = rng
        n_in, n_out = self.io_shape
        self.registry = InnovationRegistry(node_id_start=n_in + n_out)
        self._genome_keys = count(1)
        self._species_keys = count(1)
        self.generation = 0
        self.genomes = []
        self.species = []
        self._spawn()

    def _spawn(self):
        self.genomes, _ = initial_population(self.config, self.io_shape, self.rng, self.registry, self._genome_keys)
        self.species = speciate(self.genomes, [], self.config, self._species_keys)

    def reset(self):
        """Fresh random population; innovation history is kept."""
        self._spawn()

    def assign_fitness(self, fitness_by_key):
        for g in self.genomes:
            if g.key not in fitness_by_key:
                raise ContractError(f"missing fitness for genome {g.key}")
            g.fitness = float(fitness_by_key[g.key])

    def best(self):
        return max(self.genomes, key=lambda g: (g.fitness, -g.key))

    def _update_stagnation(self):
        for s in self.species:
            current = max(g.fitness for g in s.members)
            s.best_fitness_history.append(current)
            if s.best_fitness is None or current > s.best_fitness:
                s.best_fitness = current
                s.generations_since_improvement = 0
            else:
                s.generations_since_improvement += 1

    def reproduce(self):
        """Advance one generation; returns the new genome list.

        Species stagnant for ``stagnation_generations`` are removed (the
        top ``elitism_species`` by best member fitness are exempt); the
        per-species elite survives verbatim; remaining slots are filled
        by crossover/mutation among each species' top survivors. If all
        species die the population is re-seeded from scratch.
        """
        if any(g.fitness is None for g in self.genomes):
            raise ContractError("reproduce before all genomes were evaluated")
        cfg = self.config
        self._update_stagnation()

        ranked = sorted(self.species, key=lambda s: (-max(g.fitness for g in s.members), s.key))
        protected = {s.key for s in ranked[: cfg.elitism_species]}
        survivors = [
            s for s in ranked
            if s.key in protected or s.generations_since_improvement < cfg.stagnation_generations
        ]
        if not survivors:
            if not cfg.reset_on_extinction:
                raise ExtinctionError("all species stagnant")
            self.generation += 1
            self._spawn()
            return self.genomes
        survivors.sort(key=lambda s: s.key)

        all_fitness = [g.fitness for s in survivors for g in s.members]
        f_min, f_max = min(all_fitness), max(all_fitness)
        f_range = max(1.0, f_max - f_min)
        weights = [
            sum((g.fitness - f_min) / f_range for g in s.members) / len(s.members)
            for s in survivors
        ]
        if len(survivors) > cfg.population_size:
            keep = sorted(range(len(survivors)), key=lambda i: (-weights[i], survivors[i].key))
            keep = sorted(keep[: cfg.population_size])
            survivors = [survivors[i] for i in keep]
            weights = [weights[i] for i in keep]
        spawn_counts = _allocate_offspring(weights, cfg.population_size)

        next_genomes = []
        for s, spawn in zip(survivors, spawn_counts):
            members = sorted(s.members, key=lambda g: (-g.fitness, g.key))
            elites = members[: min(cfg.elitism_individual, spawn)]
            next_genomes.extend(elites)
            spawn -= len(elites)
            pool = members[: max(1, math.ceil(cfg.survival_threshold * len(members)))]
            for _ in range(spawn):
                p1 = pool[int(self.rng.integers(len(pool)))]
                if self.rng.random() < cfg.crossover_rate:
                    p2 = pool[int(self.rng.integers(len(pool)))]
                    child = crossover(p1, p2, cfg, self.rng, key=next(self._genome_keys))
                else:
                    child = p1.copy(key=next(self._genome_keys))
                child.fitness = None
                mutate(child, cfg, self.registry, self.rng)
                next_genomes.append(child)

        self.genomes = next_genomes
        self.species = speciate(self.genomes, survivors, self.config, self._species_keys)
        self.generation += 1
        return self.genomes
