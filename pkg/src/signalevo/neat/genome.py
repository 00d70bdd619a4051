"""Genomes with historical markings, and the variation operators over them.

Node ids are laid out as inputs 0..n_in-1, outputs n_in..n_in+n_out-1,
hidden nodes from there up. Connection genes are keyed by innovation id;
a per-run registry guarantees that the same (source, target) edge gets
the same innovation id wherever it is rediscovered, and that parallel
splits of the same connection produce the same hidden-node id.
"""

import threading
from dataclasses import dataclass
from itertools import count

import numpy as np

from ..ctrnn import HIDDEN, INPUT, OUTPUT, IDENTITY
from ..errors import ContractError, StructuralError


@dataclass
class NodeGene:
    id: int
    bias: float
    time_constant: float
    activation: str
    kind: str


@dataclass
class ConnectionGene:
    innovation: int
    source: int
    target: int
    weight: float
    enabled: bool = True


class InnovationRegistry:
    """Run-global allocator of innovation ids and split-node ids.

    Id allocation is the only shared state touched from reproduction;
    lookups are serialized so concurrent reproduce calls stay consistent.
    """

    def __init__(self, node_id_start=0):
        self._lock = threading.Lock()
        self._connections = {}
        self._innovation_counter = count(0)
        self._splits = {}
        self._node_counter = count(node_id_start)

    def connection_id(self, source, target):
        with self._lock:
            key = (source, target)
            inn = self._connections.get(key)
            if inn is None:
                inn = next(self._innovation_counter)
                self._connections[key] = inn
            return inn

    def node_id_for_split(self, connection_innovation, taken_ids):
        """Hidden-node id for splitting a connection.

        Reuses the id registered for this connection's split so parallel
        identical splits align, unless that id already exists in the
        genome, in which case a fresh unregistered id is returned.
        """
        with self._lock:
            nid = self._splits.get(connection_innovation)
            if nid is None:
                nid = next(self._node_counter)
                self._splits[connection_innovation] = nid
            elif nid in taken_ids:
                nid = next(self._node_counter)
            return nid

    def innovation_map(self):
        """innovation -> (source, target); a function by construction."""
        with self._lock:
            return {inn: edge for edge, inn in self._connections.items()}


@dataclass
class Genome:
    key: int
    nodes: dict
    connections: dict
    fitness: float = None

    def copy(self, key=None):
        return Genome(
            key=self.key if key is None else key,
            nodes={
                nid: NodeGene(g.id, g.bias, g.time_constant, g.activation, g.kind)
                for nid, g in self.nodes.items()
            },
            connections={
                inn: ConnectionGene(c.innovation, c.source, c.target, c.weight, c.enabled)
                for inn, c in self.connections.items()
            },
            fitness=self.fitness,
        )

    def hidden_ids(self):
        return sorted(nid for nid, g in self.nodes.items() if g.kind == HIDDEN)

    def edges(self):
        return {(c.source, c.target) for c in self.connections.values()}

    def validate(self):
        edges = set()
        for inn, c in self.connections.items():
            if inn != c.innovation:
                raise StructuralError(f"connection keyed {inn} carries innovation {c.innovation}")
            if c.source not in self.nodes or c.target not in self.nodes:
                raise StructuralError(f"connection {c.source}->{c.target} has a dangling endpoint")
            if (c.source, c.target) in edges:
                raise StructuralError(f"duplicate edge {(c.source, c.target)}")
            edges.add((c.source, c.target))
        for nid, g in self.nodes.items():
            if nid != g.id:
                raise StructuralError(f"node keyed {nid} carries id {g.id}")
        return self


def _init_weight(config, rng):
    return float(
        min(config.weight_max, max(config.weight_min, rng.normal(config.weight_init_mean, config.weight_init_stdev)))
    )


def new_genome(key, io_shape, config, registry, rng):
    """Minimal genome: inputs and outputs only, fully connected input->output."""
    n_in, n_out = io_shape
    nodes = {}
    for i in range(n_in):
        nodes[i] = NodeGene(id=i, bias=0.0, time_constant=1.0, activation=IDENTITY, kind=INPUT)
    for o in range(n_in, n_in + n_out):
        nodes[o] = NodeGene(
            id=o,
            bias=_init_weight(config, rng),
            time_constant=config.tau_init,
            activation=config.default_activation,
            kind=OUTPUT,
        )
    connections = {}
    for i in range(n_in):
        for o in range(n_in, n_in + n_out):
            inn = registry.connection_id(i, o)
            connections[inn] = ConnectionGene(
                innovation=inn, source=i, target=o, weight=_init_weight(config, rng), enabled=True
            )
    return Genome(key=key, nodes=nodes, connections=connections)


def _creates_cycle(connections, source, target):
    """Would adding source->target close a directed cycle (or self-loop)?"""
    if source == target:
        return True
    adjacency = {}
    for c in connections.values():
        adjacency.setdefault(c.source, []).append(c.target)
    stack, seen = [target], set()
    while stack:
        node = stack.pop()
        if node == source:
            return True
        if node in seen:
            continue
        seen.add(node)
        stack.extend(adjacency.get(node, ()))
    return False


def _mutate_value(value, u, z, rate, power, replace_rate, init_mean, init_stdev, lo, hi):
    """Perturb-or-replace one parameter using pre-drawn randoms."""
    if u < rate:
        value = value + z * power
    elif u < rate + replace_rate:
        value = init_mean + z * init_stdev
    if value < lo:
        return lo
    if value > hi:
        return hi
    return value


def _mutate_add_node(genome, config, registry, rng):
    if not genome.connections:
        return
    conns = sorted(genome.connections.values(), key=lambda c: c.innovation)
    conn = conns[int(rng.integers(len(conns)))]
    conn.enabled = False
    nid = registry.node_id_for_split(conn.innovation, genome.nodes.keys())
    genome.nodes[nid] = NodeGene(
        id=nid,
        bias=_init_weight(config, rng),
        time_constant=config.tau_init,
        activation=config.default_activation,
        kind=HIDDEN,
    )
    inn_a = registry.connection_id(conn.source, nid)
    genome.connections[inn_a] = ConnectionGene(inn_a, conn.source, nid, 1.0, True)
    inn_b = registry.connection_id(nid, conn.target)
    genome.connections[inn_b] = ConnectionGene(inn_b, nid, conn.target, conn.weight, True)


def _mutate_delete_node(genome, config, registry, rng):
    hidden = genome.hidden_ids()
    if not hidden:
        return
    nid = hidden[int(rng.integers(len(hidden)))]
    del genome.nodes[nid]
    for inn in [inn for inn, c in genome.connections.items() if nid in (c.source, c.target)]:
        del genome.connections[inn]


def _mutate_add_connection(genome, config, registry, rng):
    node_ids = sorted(genome.nodes)
    targets = [nid for nid in node_ids if genome.nodes[nid].kind != INPUT]
    source = node_ids[int(rng.integers(len(node_ids)))]
    target = targets[int(rng.integers(len(targets)))]
    if (source, target) in genome.edges():
        return
    if not config.recurrent_allowed and _creates_cycle(genome.connections, source, target):
        return
    inn = registry.connection_id(source, target)
    genome.connections[inn] = ConnectionGene(inn, source, target, _init_weight(config, rng), True)


def _mutate_delete_connection(genome, config, registry, rng):
    if not genome.connections:
        return
    inns = sorted(genome.connections)
    del genome.connections[inns[int(rng.integers(len(inns)))]]


def mutate(genome, config, registry, rng):
    """Structural mutations at their configured rates, then parameter noise.

    Mutates in place and returns the genome. Inapplicable structural
    mutations (e.g. node deletion with no hidden nodes) are skipped.
    """
    structural = rng.random(4)
    if structural[0] < config.node_add_prob:
        _mutate_add_node(genome, config, registry, rng)
    if structural[1] < config.node_delete_prob:
        _mutate_delete_node(genome, config, registry, rng)
    if structural[2] < config.conn_add_prob:
        _mutate_add_connection(genome, config, registry, rng)
    if structural[3] < config.conn_delete_prob:
        _mutate_delete_connection(genome, config, registry, rng)

    nodes = [genome.nodes[nid] for nid in sorted(genome.nodes) if genome.nodes[nid].kind != INPUT]
    conns = [genome.connections[inn] for inn in sorted(genome.connections)]
    nb = len(nodes)
    us = rng.random(2 * nb + len(conns)).tolist()
    zs = rng.standard_normal(2 * nb + len(conns)).tolist()
    w_rate, w_power = config.weight_mutate_rate, config.weight_mutate_power
    w_replace, w_mean, w_stdev = config.weight_replace_rate, config.weight_init_mean, config.weight_init_stdev
    w_lo, w_hi = config.weight_min, config.weight_max
    for k, node in enumerate(nodes):
        node.bias = _mutate_value(
            node.bias, us[k], zs[k], w_rate, w_power, w_replace, w_mean, w_stdev, w_lo, w_hi
        )
        node.time_constant = _mutate_value(
            node.time_constant, us[nb + k], zs[nb + k],
            config.tau_mutate_rate, config.tau_mutate_power, 0.0,
            config.tau_init, 0.0, config.tau_floor, float("inf"),
        )
    for k, conn in enumerate(conns, start=2 * nb):
        conn.weight = _mutate_value(conn.weight, us[k], zs[k], w_rate, w_power, w_replace, w_mean, w_stdev, w_lo, w_hi)
    if __debug__:
        genome.validate()
    return genome


def crossover(parent_a, parent_b, config, rng, key=0):
    """Recombine two evaluated parents.

    Matching genes (same innovation) are picked randomly from either
    parent; disjoint and excess genes come from the fitter parent, or
    from both when fitness ties. A gene disabled in either parent is
    disabled in the child with probability ``disabled_inherit_prob``.
    """
    if parent_a.fitness is None or parent_b.fitness is None:
        raise ContractError("crossover requires evaluated parents")
    if parent_a.fitness > parent_b.fitness:
        primary, secondary, union = parent_a, parent_b, False
    elif parent_b.fitness > parent_a.fitness:
        primary, secondary, union = parent_b, parent_a, False
    else:
        primary, secondary, union = parent_a, parent_b, True

    innovations = sorted(set(primary.connections) | set(secondary.connections)) if union else sorted(primary.connections)
    node_ids = sorted(set(primary.nodes) | set(secondary.nodes)) if union else sorted(primary.nodes)
    # two pre-drawn uniforms per connection (pick, re-disable), one per node
    draws = rng.random(2 * len(innovations) + len(node_ids))

    connections = {}
    edges = set()
    for k, inn in enumerate(innovations):
        in_a = primary.connections.get(inn)
        in_b = secondary.connections.get(inn)
        if in_a is not None and in_b is not None:
            pick = in_a if draws[2 * k] < 0.5 else in_b
            disabled_somewhere = not (in_a.enabled and in_b.enabled)
        else:
            pick = in_a if in_a is not None else in_b
            disabled_somewhere = not pick.enabled
        if (pick.source, pick.target) in edges:
            # de-duplicate by edge; only possible across foreign registries
            continue
        edges.add((pick.source, pick.target))
        enabled = not (disabled_somewhere and draws[2 * k + 1] < config.disabled_inherit_prob)
        connections[inn] = ConnectionGene(pick.innovation, pick.source, pick.target, pick.weight, enabled)

    nodes = {}
    base = 2 * len(innovations)
    for k, nid in enumerate(node_ids):
        in_a = primary.nodes.get(nid)
        in_b = secondary.nodes.get(nid)
        if in_a is not None and in_b is not None:
            pick = in_a if draws[base + k] < 0.5 else in_b
        else:
            pick = in_a if in_a is not None else in_b
        nodes[nid] = NodeGene(pick.id, pick.bias, pick.time_constant, pick.activation, pick.kind)

    child = Genome(key=key, nodes=nodes, connections=connections)
    if __debug__:
        child.validate()
    return child


def compatibility_distance(a, b, config):
    """c1 * (disjoint + excess)/N + c3 * mean |weight difference| of matches."""
    inns_a, inns_b = set(a.connections), set(b.connections)
    matching = inns_a & inns_b
    mismatched = len(inns_a ^ inns_b)
    n = max(len(inns_a), len(inns_b), 1)
    if matching:
        wdiff = sum(abs(a.connections[i].weight - b.connections[i].weight) for i in sorted(matching)) / len(matching)
    else:
        wdiff = 0.0
    return config.disjoint_coefficient * mismatched / n + config.weight_coefficient * wdiff
