"""Continuous-time recurrent networks compiled from genomes.

Each neuron carries a potential y_i that evolves by forward Euler with a
fixed unit step:

    y_i <- y_i + (1 / tau_i) * (-y_i + f_i(bias_i + sum_j w_ij * y_j))

where the sum runs over incoming connections and all reads use the
pre-step state (synchronous update). Input neurons are clamped to the
externally supplied values and never integrated. Potentials start at 0
and are clamped to +-1e6 before a non-finite check.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, NumericOverflowError, StructuralError

IDENTITY = "identity"
SIGMOID = "sigmoid"

INPUT = "input"
HIDDEN = "hidden"
OUTPUT = "output"

RAW = "raw"
SOFTMAX = "softmax"

POTENTIAL_LIMIT = 1e6


def sigmoid(x):
    """Plain logistic 1/(1+e^-x); argument clipped to keep exp finite."""
    return 1.0 / (1.0 + np.exp(-np.clip(x, -500.0, 500.0)))


def softmax(v, axis=-1):
    """Shift-stable softmax along ``axis``."""
    shifted = v - np.max(v, axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=axis, keepdims=True)


@dataclass(frozen=True)
class Neuron:
    id: int
    bias: float = 0.0
    time_constant: float = 1.0
    activation: str = IDENTITY
    kind: str = HIDDEN


@dataclass(frozen=True)
class Connection:
    source: int
    target: int
    weight: float


@dataclass
class Network:
    """A compiled, stateful CTRNN.

    ``state`` has shape (batch, n); independent episodes can be stepped
    side by side. The default batch is 1 and scalar-style inputs/outputs
    (1-D arrays) are accepted for it.
    """

    neurons: list
    connections: list
    output_mode: str = RAW
    state: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        ids = [n.id for n in self.neurons]
        if len(set(ids)) != len(ids):
            raise StructuralError("duplicate neuron ids")
        index = {nid: i for i, nid in enumerate(ids)}
        n = len(self.neurons)

        self._index = index
        self._bias = np.array([n_.bias for n_ in self.neurons], dtype=float)
        tau = np.array([n_.time_constant for n_ in self.neurons], dtype=float)
        if np.any(tau < 1.0):
            bad = self.neurons[int(np.argmin(tau))]
            raise StructuralError(f"time constant {bad.time_constant} < 1 at neuron {bad.id}")
        self._sig = np.array([n_.activation == SIGMOID for n_ in self.neurons])
        self._input_idx = np.array([i for i, n_ in enumerate(self.neurons) if n_.kind == INPUT], dtype=int)
        self._output_idx = np.array([i for i, n_ in enumerate(self.neurons) if n_.kind == OUTPUT], dtype=int)
        # inputs are clamped, so their integration gain is zero
        gain = 1.0 / tau
        gain[self._input_idx] = 0.0
        self._gain = gain

        w = np.zeros((n, n), dtype=float)
        for c in self.connections:
            if c.source not in index or c.target not in index:
                raise StructuralError(f"connection {c.source}->{c.target} has a dangling endpoint")
            w[index[c.target], index[c.source]] = c.weight
        self._weights = w
        self._weights_in = np.ascontiguousarray(w.T)
        self.state = np.zeros((1, n), dtype=float)

    @property
    def num_inputs(self):
        return len(self._input_idx)

    @property
    def num_outputs(self):
        return len(self._output_idx)

    def reset(self, batch=1):
        """Zero all potentials; ``batch`` independent episodes afterwards."""
        self.state = np.zeros((batch, len(self.neurons)), dtype=float)
        return self

    def outputs(self):
        """Current output potentials, softmax-normalized in softmax mode."""
        out = self.state[:, self._output_idx]
        if self.output_mode == SOFTMAX:
            out = softmax(out, axis=1)
        return out[0] if out.shape[0] == 1 else out

    def step(self, external_inputs):
        """Advance one Euler step with clamped inputs; returns output potentials."""
        ext = np.asarray(external_inputs, dtype=float)
        squeeze = ext.ndim == 1
        if squeeze:
            ext = ext[None, :]
        if ext.shape != (self.state.shape[0], len(self._input_idx)):
            raise ContractError(
                f"expected inputs of shape ({self.state.shape[0]}, {len(self._input_idx)}), got {ext.shape}"
            )
        y = self.state
        y[:, self._input_idx] = ext
        incoming = self._bias + y @ self._weights_in
        activated = np.where(self._sig, sigmoid(incoming), incoming)
        y = y + self._gain * (activated - y)
        np.clip(y, -POTENTIAL_LIMIT, POTENTIAL_LIMIT, out=y)
        if not np.isfinite(y).all():
            col = int(np.argwhere(~np.isfinite(y))[0, 1])
            raise NumericOverflowError(self.neurons[col].id)
        self.state = y
        out = y[:, self._output_idx]
        if self.output_mode == SOFTMAX:
            out = softmax(out, axis=1)
        return out[0] if squeeze else out

    def activate_window(self, input_sequence, window, fresh=True):
        """Step once per timestep and collect the outputs.

        ``window`` must equal the sequence length; the network is reset
        first unless ``fresh`` is False.
        """
        if len(input_sequence) != window:
            raise ContractError(f"input sequence has length {len(input_sequence)}, window is {window}")
        if fresh:
            self.reset(self.state.shape[0])
        return [self.step(x) for x in input_sequence]


def compile_network(genome, output_mode=RAW):
    """Build a runnable network from a genome; disabled genes are skipped."""
    neurons = [
        Neuron(id=g.id, bias=g.bias, time_constant=g.time_constant, activation=g.activation, kind=g.kind)
        for g in sorted(genome.nodes.values(), key=lambda g: g.id)
    ]
    connections = [
        Connection(source=c.source, target=c.target, weight=c.weight)
        for c in genome.connections.values()
        if c.enabled
    ]
    return Network(neurons=neurons, connections=connections, output_mode=output_mode)


class NetworkEnsemble:
    """Stack of same-shaped networks stepped together.

    All member networks must share input/output counts and output mode;
    internal sizes may differ and are zero-padded to the widest member
    (padded slots have zero gain and no connections, so they stay 0).
    Used by the co-evolution harness to evaluate a whole population's
    episodes in a handful of array operations per timestep. Unlike
    :meth:`Network.step`, stepping computes no outputs and defers the
    non-finite guard to :meth:`check_finite`; potentials are still
    clamped every step, so trajectories match the single-network path.
    """

    def __init__(self, networks):
        if not networks:
            raise ContractError("empty ensemble")
        members = []
        for net in networks:
            if not (np.array_equal(net._input_idx, np.arange(net.num_inputs))
                    and np.array_equal(net._output_idx, np.arange(net.num_inputs, net.num_inputs + net.num_outputs))):
                raise ContractError("ensemble members must have contiguous input/output columns")
            members.append((net._bias, net._gain, net._sig, net._weights_in, net.num_inputs, net.num_outputs, net.output_mode))
        self._build(members)

    @classmethod
    def from_genomes(cls, genomes, output_mode=RAW):
        """Compile genomes straight into the stacked arrays.

        Equivalent to stacking ``compile_network`` results but without
        per-network object overhead; disabled genes are skipped and the
        structural checks of compilation still apply.
        """
        self = cls.__new__(cls)
        members = []
        for genome in genomes:
            ids = sorted(genome.nodes)
            index = {nid: i for i, nid in enumerate(ids)}
            n = len(ids)
            bias = np.empty(n)
            gain = np.empty(n)
            sig = np.empty(n, dtype=bool)
            n_in = n_out = 0
            for i, nid in enumerate(ids):
                g = genome.nodes[nid]
                if g.time_constant < 1.0:
                    raise StructuralError(f"time constant {g.time_constant} < 1 at neuron {nid}")
                bias[i] = g.bias
                sig[i] = g.activation == SIGMOID
                if g.kind == INPUT:
                    gain[i] = 0.0
                    n_in += 1
                else:
                    gain[i] = 1.0 / g.time_constant
                    n_out += g.kind == OUTPUT
            w_in = np.zeros((n, n))
            for c in genome.connections.values():
                if not c.enabled:
                    continue
                if c.source not in index or c.target not in index:
                    raise StructuralError(f"connection {c.source}->{c.target} has a dangling endpoint")
                w_in[index[c.source], index[c.target]] = c.weight
            members.append((bias, gain, sig, w_in, n_in, n_out, output_mode))
        self._build(members)
        return self

    def _build(self, members):
        n_in, n_out, mode = members[0][4], members[0][5], members[0][6]
        if any(m[4] != n_in or m[5] != n_out or m[6] != mode for m in members):
            raise ContractError("ensemble members must share io shape and output mode")
        self.num_inputs = n_in
        self.num_outputs = n_out
        self.output_mode = mode
        k = len(members)
        width = max(len(m[0]) for m in members)
        self._k = k
        self._width = width
        self._bias = np.zeros((k, 1, width))
        self._gain = np.zeros((k, 1, width))
        self._sig = np.zeros((k, 1, width), dtype=bool)
        self._weights_in = np.zeros((k, width, width))
        integrated = np.zeros((k, width), dtype=bool)
        for i, (bias, gain, sig, w_in, *_rest) in enumerate(members):
            m = len(bias)
            self._bias[i, 0, :m] = bias
            self._gain[i, 0, :m] = gain
            self._sig[i, 0, :m] = sig
            self._weights_in[i, :m, :m] = w_in
            integrated[i, :m] = gain > 0
        live = self._sig[:, 0, :][integrated]
        # gain zeroes out inputs and padding, so a population whose live
        # neurons share one activation can skip the per-neuron select
        self._homogeneous = None if (live.any() and not live.all()) else bool(live.all())
        self.state = np.zeros((k, 1, width))
        self._incoming = np.empty_like(self.state)

    def reset(self, batch=1):
        self.state = np.zeros((self._k, batch, self._width))
        self._incoming = np.empty_like(self.state)
        return self

    def step(self, external_inputs):
        """Advance all members one step with clamped inputs.

        ``external_inputs`` is (k, batch, n_in), or (batch, n_in) to feed
        every member the same episodes.
        """
        y = self.state
        y[:, :, : self.num_inputs] = external_inputs
        z = np.matmul(y, self._weights_in, out=self._incoming)
        z += self._bias
        if self._homogeneous is None:
            activated = np.where(self._sig, sigmoid(z), z)
        elif self._homogeneous:
            np.clip(z, -500.0, 500.0, out=z)
            np.negative(z, out=z)
            np.exp(z, out=z)
            z += 1.0
            activated = np.reciprocal(z, out=z)
        else:
            activated = z
        activated -= y
        activated *= self._gain
        y += activated
        np.clip(y, -POTENTIAL_LIMIT, POTENTIAL_LIMIT, out=y)

    def check_finite(self):
        if not np.isfinite(self.state).all():
            raise NumericOverflowError(int(np.argwhere(~np.isfinite(self.state))[0, 2]))

    def outputs(self):
        out = self.state[:, :, self.num_inputs : self.num_inputs + self.num_outputs]
        if self.output_mode == SOFTMAX:
            out = softmax(out, axis=2)
        return out
