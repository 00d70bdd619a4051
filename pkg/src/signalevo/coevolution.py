"""Two NEAT populations evolved in lock-step against a shared task.

Every generation evaluates the full Cartesian product of sender and
receiver genomes; each genome's fitness is the maximum over the pairs it
took part in. The run stops at the first zero-fitness pair or at the
generation budget, and both populations are re-seeded whenever the best
pair fitness observed since the last reset fails to improve for
``reset_after`` consecutive generations.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .analysis import SignalingSystem
from .errors import ContractError
from .neat.population import Population
from .tasks import clean_signals, evaluate_matrix


@dataclass
class Pair:
    sender: "Genome"
    receiver: "Genome"
    fitness: float = None
    setting: "Setting" = None


@dataclass
class GenerationRecord:
    generation: int
    best_fitness: float
    species_senders: int
    species_receivers: int
    reset: bool = False


@dataclass
class CoevolutionResult:
    best_pair: Pair
    generations_to_converge: int = None
    records: list = field(default_factory=list)
    reset_events: list = field(default_factory=list)
    final_signaling_system: SignalingSystem = None
    snapshots: list = field(default_factory=list)

    @property
    def converged(self):
        return self.generations_to_converge is not None

    @property
    def fitness_history(self):
        return [r.best_fitness for r in self.records]


def evaluate_generation(senders, receivers, task, generation=1, seed=0, workers=1):
    """Evaluate all |S| x |R| pairs once.

    Returns the pair-fitness matrix plus per-genome fitness maps keyed by
    genome key (each genome's fitness is its best pair fitness).
    """
    if not senders or not receivers:
        raise ContractError("both populations must be non-empty")
    matrix = evaluate_matrix(task, senders, receivers, generation, seed, workers)
    sender_fitness = {g.key: float(f) for g, f in zip(senders, matrix.max(axis=1))}
    receiver_fitness = {g.key: float(f) for g, f in zip(receivers, matrix.max(axis=0))}
    return matrix, sender_fitness, receiver_fitness


def extract_signaling_system(best_pair, task, provenance=""):
    """Noise-free signal the sender emits for each concept, in order."""
    signals = clean_signals(task, best_pair.sender)
    return SignalingSystem(vocab_size=signals.shape[0], signals=list(signals), provenance=provenance)


def run_coevolution(
    task,
    sender_config,
    receiver_config,
    seed,
    max_generations=10000,
    reset_after=50,
    workers=1,
    snapshot=False,
    provenance="",
):
    """Alternate evaluation and reproduction until convergence or budget.

    Deterministic for a given seed, including under parallel pair
    evaluation: the two populations draw from streams (seed, 0) and
    (seed, 1), and per-pair noise is keyed by (seed, generation, sender,
    receiver).
    """
    senders = Population(sender_config, task.sender_io, np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, 0)))))
    receivers = Population(receiver_config, task.receiver_io, np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, 1)))))

    result = CoevolutionResult(best_pair=None)
    best_since_reset = -math.inf
    stagnant = 0

    for generation in range(1, max_generations + 1):
        matrix, sender_fitness, receiver_fitness = evaluate_generation(
            senders.genomes, receivers.genomes, task, generation, seed, workers
        )
        senders.assign_fitness(sender_fitness)
        receivers.assign_fitness(receiver_fitness)

        si, ri = np.unravel_index(int(np.argmax(matrix)), matrix.shape)
        gen_best = float(matrix[si, ri])
        if result.best_pair is None or gen_best > result.best_pair.fitness:
            result.best_pair = Pair(
                sender=senders.genomes[si].copy(),
                receiver=receivers.genomes[ri].copy(),
                fitness=gen_best,
                setting=task.setting,
            )
        record = GenerationRecord(generation, gen_best, len(senders.species), len(receivers.species))
        result.records.append(record)
        if snapshot:
            gen_pair = Pair(senders.genomes[si], receivers.genomes[ri], gen_best, task.setting)
            result.snapshots.append((generation, extract_signaling_system(gen_pair, task, provenance)))

        if gen_best > best_since_reset:
            best_since_reset = gen_best
            stagnant = 0
        else:
            stagnant += 1

        if gen_best == 0.0:
            result.generations_to_converge = generation
            break
        if generation == max_generations:
            break
        if stagnant >= reset_after:
            record.reset = True
            result.reset_events.append(generation)
            senders.reset()
            receivers.reset()
            best_since_reset = -math.inf
            stagnant = 0
        else:
            senders.reproduce()
            receivers.reproduce()

    result.final_signaling_system = extract_signaling_system(result.best_pair, task, provenance)
    return result
