"""Co-evolution of CTRNN sender/receiver agents into symbolic signaling
systems, with constellation and cluster analysis of what evolved."""

from .analysis import (
    ClusteringReport,
    ConstellationReport,
    SignalingSystem,
    chebyshev,
    cluster_signaling_systems,
    constellation_2d,
    extract_clusters_xi,
    gram_schmidt,
    medoid,
    nn_classify,
    optics,
    system_vector,
)
from .coevolution import CoevolutionResult, Pair, evaluate_generation, extract_signaling_system, run_coevolution
from .ctrnn import Network, NetworkEnsemble, compile_network
from .neat.config import NeatConfig
from .neat.genome import Genome, InnovationRegistry, compatibility_distance, crossover, mutate, new_genome
from .neat.population import Population, Species, initial_population, speciate
from .tasks import (
    Channel,
    ObjectSet,
    ReferentialTask,
    Setting,
    SymbolicTask,
    Vocabulary,
    decode,
    encode_concept,
    noise_test,
    pair_fitness_referential,
    pair_fitness_symbolic,
    sample_objects,
    transmit,
    zero_shot_score,
)

__version__ = "0.1.0"
