"""Communication tasks: concept encoding, the four decoding/amplitude
settings, the noisy channel, zero-shot scoring and the referential game.

Concepts are 1-based: concept i of a size-|V| vocabulary is encoded as
the feature i/|V|, so features lie in (0, 1]. The sender holds its input
constant over the whole time window; the receiver consumes the sampled
(and possibly noise-corrupted) signal one sample per step and its
decision is read after the final step.
"""

from dataclasses import dataclass
from itertools import product

import numpy as np
from numpy.random import Generator, PCG64, SeedSequence

from .ctrnn import IDENTITY, RAW, SIGMOID, SOFTMAX, NetworkEnsemble, compile_network
from .errors import ContractError

REGRESSION = "regression"
CLASSIFICATION = "classification"
LIMITED = "limited"
UNLIMITED = "unlimited"

TIME_WINDOW = 10


@dataclass(frozen=True)
class Vocabulary:
    size: int

    def __post_init__(self):
        if self.size < 1:
            raise ContractError("vocabulary size must be >= 1")

    @property
    def features(self):
        return np.arange(1, self.size + 1) / self.size

    def feature(self, i):
        if not 1 <= i <= self.size:
            raise ContractError(f"concept index {i} outside 1..{self.size}")
        return i / self.size


def encode_concept(i, vocab):
    """Feature i/|V| of concept i (1-based)."""
    return vocab.feature(i)


@dataclass(frozen=True)
class Setting:
    decoding: str
    amplitude: str

    def __post_init__(self):
        if self.decoding not in (REGRESSION, CLASSIFICATION):
            raise ContractError(f"unknown decoding {self.decoding!r}")
        if self.amplitude not in (LIMITED, UNLIMITED):
            raise ContractError(f"unknown amplitude {self.amplitude!r}")

    @property
    def sender_activation(self):
        return IDENTITY if self.amplitude == UNLIMITED else SIGMOID

    @property
    def receiver_activation(self):
        return IDENTITY if self.decoding == REGRESSION else SIGMOID

    @property
    def receiver_output_mode(self):
        return RAW if self.decoding == REGRESSION else SOFTMAX

    def receiver_outputs(self, vocab_size):
        return 1 if self.decoding == REGRESSION else vocab_size

    @property
    def label(self):
        return f"{self.decoding}-{self.amplitude}"

    @classmethod
    def from_label(cls, label):
        try:
            decoding, amplitude = label.split("-")
        except ValueError:
            raise ContractError(f"setting label must look like 'regression-unlimited', got {label!r}") from None
        return cls(decoding, amplitude)


SETTINGS = tuple(Setting(d, a) for d, a in product((REGRESSION, CLASSIFICATION), (UNLIMITED, LIMITED)))


@dataclass(frozen=True)
class Channel:
    sigma: float = 0.0
    window: int = TIME_WINDOW

    def __post_init__(self):
        if self.sigma < 0:
            raise ContractError("sigma must be >= 0")


@dataclass(frozen=True)
class ObjectSet:
    objects: tuple

    def __post_init__(self):
        if len(set(self.objects)) != len(self.objects):
            raise ContractError("objects must be distinct")

    @property
    def features(self):
        return np.array(self.objects, dtype=float)

    def __len__(self):
        return len(self.objects)


def sample_objects(count, rng):
    """``count`` distinct random binary triples (all 8 when count is 8)."""
    triples = [tuple(int(b) for b in f"{k:03b}") for k in range(8)]
    if not 1 <= count <= 8:
        raise ContractError(f"object count {count} outside 1..8")
    picked = rng.permutation(8)[:count]
    return ObjectSet(tuple(triples[i] for i in picked))


def pair_rng(seed, generation, sender_key, receiver_key):
    """Per-pair noise stream; a pure function of its identifying tuple."""
    return Generator(PCG64(SeedSequence((seed, generation, sender_key, receiver_key))))


def transmit(sender, input_features, channel, rng=None):
    """Drive the sender with a constant input and sample its output.

    Returns the ``channel.window`` output samples with independent
    Gaussian(0, sigma^2) noise per sample; sigma = 0 is a bit-exact
    pass-through and draws nothing from ``rng``.
    """
    features = np.asarray(input_features, dtype=float)
    if sender.num_outputs != 1:
        raise ContractError("senders emit a 1-D signal (one output neuron)")
    sender.reset()
    samples = np.array([sender.step(features)[0] for _ in range(channel.window)])
    if channel.sigma > 0:
        samples = samples + rng.normal(0.0, channel.sigma, size=channel.window)
    return samples


def decode(receiver, signal, setting, vocab_size):
    """Feed the signal one sample per step; read the decision after the last.

    Regression: nearest feature i/|V| to the single output (ties to the
    lower concept). Classification: argmax over the |V| softmax outputs
    (ties to the lower index). Returns a 1-based concept index.
    """
    receiver.reset()
    for sample in signal:
        out = receiver.step([sample])
    if setting.decoding == REGRESSION:
        features = np.arange(1, vocab_size + 1) / vocab_size
        return int(np.argmin(np.abs(out[0] - features))) + 1
    return int(np.argmax(out)) + 1


def _compiled_pair(pair, setting):
    sender = compile_network(pair.sender, RAW)
    receiver = compile_network(pair.receiver, setting.receiver_output_mode)
    return sender, receiver


def pair_fitness_symbolic(pair, vocab, setting, channel, trials, rng, concepts=None):
    """Eq.-style mismatch count: 0 iff every episode succeeded.

    Each concept is communicated ``trials`` times (noise fresh per
    episode); fitness is minus the number of mismatches, in
    [-trials*|concepts|, 0].
    """
    if trials < 1:
        raise ContractError("trials must be >= 1")
    sender, receiver = _compiled_pair(pair, setting)
    concepts = range(1, vocab.size + 1) if concepts is None else concepts
    mismatches = 0
    for i in concepts:
        feature = [vocab.feature(i)]
        for _ in range(trials):
            signal = transmit(sender, feature, channel, rng)
            if decode(receiver, signal, setting, vocab.size) != i:
                mismatches += 1
    return float(-mismatches)


def zero_shot_score(pair, vocab, training_subset):
    """Concepts of the whole vocabulary communicated correctly, noise-free.

    ``training_subset`` documents which concepts fitness saw during
    evolution; the count includes them.
    """
    setting = pair.setting if hasattr(pair, "setting") else None
    if setting is None:
        raise ContractError("pair must carry its setting for zero-shot scoring")
    sender, receiver = _compiled_pair(pair, setting)
    channel = Channel(0.0)
    correct = 0
    for i in range(1, vocab.size + 1):
        signal = transmit(sender, [vocab.feature(i)], channel)
        correct += decode(receiver, signal, setting, vocab.size) == i
    return correct


def noise_test(pair, vocab, setting, sigma, rng):
    """Success count over 100 fresh-noise episodes (100/|V| per concept)."""
    if 100 % vocab.size:
        raise ContractError(f"|V|={vocab.size} does not divide the 100 test cases")
    trials = 100 // vocab.size
    sender, receiver = _compiled_pair(pair, setting)
    channel = Channel(sigma)
    successes = 0
    for i in range(1, vocab.size + 1):
        feature = [vocab.feature(i)]
        for _ in range(trials):
            signal = transmit(sender, feature, channel, rng)
            successes += decode(receiver, signal, setting, vocab.size) == i
    return successes


def pair_fitness_referential(pair, objects, setting, channel, rng):
    """Referential-game fitness: minus the count of wrongly picked objects."""
    sender, receiver = _compiled_pair(pair, setting)
    n = len(objects)
    mismatches = 0
    for position, obj in enumerate(objects.objects, start=1):
        signal = transmit(sender, obj, channel, rng)
        if decode(receiver, signal, setting, n) != position:
            mismatches += 1
    return float(-mismatches)


class SymbolicTask:
    """Symbolic communication over a shared vocabulary.

    ``concepts`` restricts fitness evaluation to a training subset (the
    zero-shot protocol); decoding always spans the full vocabulary.
    """

    def __init__(self, vocab, setting, channel=None, trials=1, concepts=None):
        self.vocab = vocab
        self.setting = setting
        self.channel = channel or Channel(0.0)
        self.trials = trials
        if concepts is not None:
            concepts = tuple(concepts)
            for i in concepts:
                vocab.feature(i)
            if not concepts:
                raise ContractError("empty training subset")
        self.concepts = concepts or tuple(range(1, vocab.size + 1))

    @property
    def sender_io(self):
        return (1, 1)

    @property
    def receiver_io(self):
        return (1, self.setting.receiver_outputs(self.vocab.size))

    @property
    def max_mismatches(self):
        return self.trials * len(self.concepts)

    def episode_inputs(self):
        return np.array([[self.vocab.feature(i)] for i in self.concepts])

    def episode_targets(self):
        return np.array(self.concepts, dtype=int)

    def decode_candidates(self):
        return self.vocab.features

    def pair_fitness(self, pair, rng):
        return pair_fitness_symbolic(pair, self.vocab, self.setting, self.channel, self.trials, rng, self.concepts)


class ReferentialTask:
    """Referential game over an ordered object collection."""

    def __init__(self, objects, setting, channel=None):
        self.objects = objects
        self.setting = setting
        self.channel = channel or Channel(0.0)
        self.trials = 1

    @property
    def vocab_size(self):
        return len(self.objects)

    @property
    def sender_io(self):
        return (len(self.objects.objects[0]), 1)

    @property
    def receiver_io(self):
        return (1, self.setting.receiver_outputs(len(self.objects)))

    @property
    def max_mismatches(self):
        return len(self.objects)

    def episode_inputs(self):
        return self.objects.features

    def episode_targets(self):
        return np.arange(1, len(self.objects) + 1)

    def decode_candidates(self):
        n = len(self.objects)
        return np.arange(1, n + 1) / n

    def pair_fitness(self, pair, rng):
        return pair_fitness_referential(pair, self.objects, self.setting, self.channel, rng)


def clean_signals(task, sender_genome):
    """Noise-free signal per episode input, as an (episodes, window) array."""
    sender = compile_network(sender_genome, RAW)
    channel = Channel(0.0, task.channel.window)
    return np.array([transmit(sender, feats, channel) for feats in task.episode_inputs()])


def evaluate_matrix(task, senders, receivers, generation, seed, workers=1):
    """Fitness of every sender x receiver pair as an (S, R) array.

    Episodes are evaluated in batch per population; the per-pair noise
    streams are derived from (seed, generation, sender key, receiver
    key), so results do not depend on evaluation order or ``workers``.
    """
    setting = task.setting
    window = task.channel.window
    sigma = task.channel.sigma
    inputs = task.episode_inputs()
    targets = task.episode_targets()
    n_episodes = len(targets)
    trials = task.trials if sigma > 0 else 1

    sender_ens = NetworkEnsemble.from_genomes(senders, RAW)
    sender_ens.reset(batch=n_episodes)
    steps = []
    for _ in range(window):
        sender_ens.step(inputs)
        steps.append(sender_ens.outputs()[:, :, 0])
    sender_ens.check_finite()
    # (S, episodes, window) noise-free signals
    clean = np.stack(steps, axis=2)

    n_s, n_r = len(senders), len(receivers)
    batch = n_episodes * trials
    if sigma > 0:
        tiled = np.repeat(clean, trials, axis=1)  # episode-major, trial-minor
        noisy = np.empty((n_r, n_s, batch, window))
        for si, sg in enumerate(senders):
            for ri, rg in enumerate(receivers):
                rng = pair_rng(seed, generation, sg.key, rg.key)
                noise = rng.normal(0.0, sigma, size=(batch, window))
                noisy[ri, si] = tiled[si] + noise
        signals = noisy.reshape(n_r, n_s * batch, window)
    else:
        signals = np.broadcast_to(clean.reshape(1, n_s * batch, window), (n_r, n_s * batch, window))

    def decode_block(block_genomes, block_signals):
        ens = NetworkEnsemble.from_genomes(block_genomes, setting.receiver_output_mode)
        ens.reset(batch=block_signals.shape[1])
        for t in range(window):
            ens.step(block_signals[:, :, t : t + 1])
        ens.check_finite()
        out = ens.outputs()
        if setting.decoding == REGRESSION:
            decoded = np.argmin(np.abs(out[:, :, 0:1] - task.decode_candidates()), axis=2) + 1
        else:
            decoded = np.argmax(out, axis=2) + 1
        return decoded  # (r_block, n_s * batch)

    if workers > 1 and n_r > 1:
        from concurrent.futures import ThreadPoolExecutor

        chunks = np.array_split(np.arange(n_r), min(workers, n_r))
        decoded = np.empty((n_r, n_s * batch), dtype=int)
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            futures = [
                pool.submit(decode_block, [receivers[i] for i in chunk], signals[chunk])
                for chunk in chunks
            ]
            for chunk, fut in zip(chunks, futures):
                decoded[chunk] = fut.result()
    else:
        decoded = decode_block(receivers, signals)

    tiled_targets = np.repeat(targets, trials)
    mism = (decoded.reshape(n_r, n_s, batch) != tiled_targets).sum(axis=2)
    if sigma <= 0 and task.trials > 1:
        mism = mism * task.trials
    return 0.0 - mism.T.astype(float)  # +0.0 keeps perfect scores at exactly 0.0
