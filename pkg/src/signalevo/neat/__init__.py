from .config import NeatConfig
from .genome import ConnectionGene, Genome, InnovationRegistry, NodeGene, compatibility_distance, crossover, mutate, new_genome
from .population import Population, Species, initial_population, speciate
