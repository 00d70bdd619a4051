"""Concept encoding, transmit/decode, fitness and protocol scoring."""

import numpy as np
import pytest
from scipy import stats

from signalevo.coevolution import Pair
from signalevo.ctrnn import IDENTITY, RAW, SIGMOID, compile_network
from signalevo.errors import ContractError
from signalevo.neat.config import NeatConfig
from signalevo.neat.genome import InnovationRegistry, new_genome
from signalevo.tasks import (
    Channel,
    ObjectSet,
    ReferentialTask,
    Setting,
    SymbolicTask,
    Vocabulary,
    decode,
    encode_concept,
    evaluate_matrix,
    noise_test,
    pair_fitness_referential,
    pair_fitness_symbolic,
    pair_rng,
    sample_objects,
    transmit,
    zero_shot_score,
)

REG_UNL = Setting("regression", "unlimited")
REG_LIM = Setting("regression", "limited")
CLS_UNL = Setting("classification", "unlimited")


def random_genome(io, seed, activation):
    cfg = NeatConfig(default_activation=activation)
    registry = InnovationRegistry(node_id_start=sum(io))
    return new_genome(seed, io, cfg, registry, np.random.default_rng(seed))


def random_pair(seed, setting, vocab_size, sender_inputs=1):
    sender = random_genome((sender_inputs, 1), seed, setting.sender_activation)
    receiver = random_genome((1, setting.receiver_outputs(vocab_size)), seed + 1, setting.receiver_activation)
    return Pair(sender, receiver, setting=setting)


def test_encode_concept_values():
    v = Vocabulary(5)
    assert encode_concept(1, v) == pytest.approx(0.2)
    assert encode_concept(5, v) == pytest.approx(1.0)
    with pytest.raises(ContractError):
        encode_concept(0, v)
    with pytest.raises(ContractError):
        encode_concept(6, v)


def test_features_strictly_increasing_in_unit_interval():
    for size in (1, 2, 5, 10, 17):
        f = Vocabulary(size).features
        assert np.all(np.diff(f) > 0)
        assert np.all(f > 0) and np.all(f <= 1.0)


def test_transmit_sigma_zero_is_pure_and_noiseless():
    sender = compile_network(random_genome((1, 1), 3, IDENTITY), RAW)
    channel = Channel(0.0)
    a = transmit(sender, [0.4], channel)
    b = transmit(sender, [0.4], channel)
    assert np.array_equal(a, b)
    assert len(a) == 10


def test_transmit_noise_distribution_ks():
    # samplewise difference noisy - clean ~ Normal(0, sigma^2) over 1e5 draws
    sender = compile_network(random_genome((1, 1), 4, IDENTITY), RAW)
    sigma = 0.1
    clean = transmit(sender, [0.6], Channel(0.0))
    rng = np.random.default_rng(2024)
    diffs = np.concatenate(
        [transmit(sender, [0.6], Channel(sigma), rng) - clean for _ in range(10_000)]
    )
    assert len(diffs) == 100_000
    _, p = stats.kstest(diffs / sigma, "norm")
    assert p > 0.01


def test_limited_sender_samples_in_unit_interval():
    sender = compile_network(random_genome((1, 1), 5, SIGMOID), RAW)
    signal = transmit(sender, [0.8], Channel(0.0))
    assert np.all(signal > 0.0) and np.all(signal < 1.0)


def test_decode_regression_nearest_and_tie_break():
    class Fixed:
        num_outputs = 1

        def __init__(self, value):
            self.value = value

        def reset(self):
            pass

        def step(self, x):
            return np.array([self.value])

    assert decode(Fixed(0.63), np.zeros(10), REG_UNL, 5) == 3
    assert decode(Fixed(0.5), np.zeros(10), REG_UNL, 5) == 2  # tie to lower concept
    assert decode(Fixed(-3.0), np.zeros(10), REG_UNL, 5) == 1
    assert decode(Fixed(9.0), np.zeros(10), REG_UNL, 5) == 5


def test_decode_classification_argmax_and_tie_break():
    class Fixed:
        def __init__(self, vec):
            self.vec = np.array(vec)

        def reset(self):
            pass

        def step(self, x):
            return self.vec

    assert decode(Fixed([0.1, 0.7, 0.2]), np.zeros(10), CLS_UNL, 3) == 2
    assert decode(Fixed([0.4, 0.4, 0.1]), np.zeros(10), CLS_UNL, 3) == 1  # tie to lower index


def test_classification_decode_shift_invariant():
    # adding a constant to all receiver output potentials never changes the decision
    pair = random_pair(11, CLS_UNL, 5)
    receiver = compile_network(pair.receiver, CLS_UNL.receiver_output_mode)
    signal = np.linspace(0.1, 1.0, 10)
    base = decode(receiver, signal, CLS_UNL, 5)
    receiver.reset()
    for s in signal:
        receiver.step([s])
    shifted = receiver.state[0, receiver._output_idx] + 123.45
    from signalevo.ctrnn import softmax

    assert int(np.argmax(softmax(shifted))) + 1 == base


def test_pair_fitness_bounds_and_perfect_zero():
    vocab = Vocabulary(5)
    for seed in range(12):
        pair = random_pair(100 + seed, REG_UNL, 5)
        f = pair_fitness_symbolic(pair, vocab, REG_UNL, Channel(0.0), 1, np.random.default_rng(0))
        assert -5.0 <= f <= 0.0
        f3 = pair_fitness_symbolic(pair, vocab, REG_UNL, Channel(0.0), 3, np.random.default_rng(0))
        assert -15.0 <= f3 <= 0.0
        assert f3 == 3 * f  # noiseless episodes repeat identically


def test_pair_fitness_counts_mismatches():
    vocab = Vocabulary(5)

    # transcript-level oracle: recount mismatches episode by episode
    def recount(pair, trials, sigma, seed):
        sender = compile_network(pair.sender, RAW)
        receiver = compile_network(pair.receiver, REG_UNL.receiver_output_mode)
        rng = np.random.default_rng()  # unused at sigma=0
        rng = pair_rng(seed, 1, pair.sender.key, pair.receiver.key)
        channel = Channel(sigma)
        mism = 0
        for i in range(1, 6):
            for _ in range(trials):
                got = decode(receiver, transmit(sender, [vocab.feature(i)], channel, rng), REG_UNL, 5)
                mism += got != i
        return -float(mism)

    for seed in range(15):
        pair = random_pair(200 + seed, REG_UNL, 5)
        rng = pair_rng(999, 1, pair.sender.key, pair.receiver.key)
        direct = pair_fitness_symbolic(pair, vocab, REG_UNL, Channel(0.3), 3, rng)
        assert direct == recount(pair, 3, 0.3, 999)


def test_zero_shot_score_counts_over_full_vocabulary():
    vocab = Vocabulary(10)
    pair = random_pair(42, REG_UNL, 10)
    score = zero_shot_score(pair, vocab, (1, 3, 5, 7, 9))
    sender = compile_network(pair.sender, RAW)
    receiver = compile_network(pair.receiver, RAW)
    manual = sum(
        decode(receiver, transmit(sender, [vocab.feature(i)], Channel(0.0)), REG_UNL, 10) == i
        for i in range(1, 11)
    )
    assert score == manual
    assert 0 <= score <= 10


def test_noise_test_sigma_zero_perfect_pair_scores_100():
    # a hand-built perfect pair: sender emits i/5, receiver echoes it
    from signalevo.neat.genome import ConnectionGene, Genome, NodeGene
    from signalevo.ctrnn import INPUT, OUTPUT

    def echo_genome(key):
        nodes = {
            0: NodeGene(0, 0.0, 1.0, IDENTITY, INPUT),
            1: NodeGene(1, 0.0, 1.0, IDENTITY, OUTPUT),
        }
        conns = {0: ConnectionGene(0, 0, 1, 1.0, True)}
        return Genome(key=key, nodes=nodes, connections=conns)

    pair = Pair(echo_genome(1), echo_genome(2), setting=REG_UNL)
    vocab = Vocabulary(5)
    assert pair_fitness_symbolic(pair, vocab, REG_UNL, Channel(0.0), 1, np.random.default_rng(0)) == 0.0
    assert noise_test(pair, vocab, REG_UNL, 0.0, np.random.default_rng(1)) == 100
    assert zero_shot_score(pair, vocab, (1, 2, 3)) == 5


def test_noise_test_rejects_non_divisible_vocab():
    pair = random_pair(1, REG_UNL, 3)
    with pytest.raises(ContractError):
        noise_test(pair, Vocabulary(3), REG_UNL, 0.1, np.random.default_rng(0))


def test_sample_objects_exhaustive_and_distinct():
    rng = np.random.default_rng(8)
    full = sample_objects(8, rng)
    assert sorted(full.objects) == [tuple(int(b) for b in f"{k:03b}") for k in range(8)]
    three = sample_objects(3, np.random.default_rng(9))
    assert len(set(three.objects)) == 3
    same = sample_objects(3, np.random.default_rng(9))
    assert three.objects == same.objects
    with pytest.raises(ContractError):
        sample_objects(9, rng)


def test_object_set_rejects_duplicates():
    with pytest.raises(ContractError):
        ObjectSet(((0, 0, 1), (0, 0, 1)))


def test_referential_fitness_bounds_and_recount():
    objects = sample_objects(5, np.random.default_rng(3))
    for seed in range(10):
        sender = random_genome((3, 1), 300 + seed, IDENTITY)
        receiver = random_genome((1, 1), 400 + seed, IDENTITY)
        pair = Pair(sender, receiver, setting=REG_UNL)
        f = pair_fitness_referential(pair, objects, REG_UNL, Channel(0.0), np.random.default_rng(0))
        assert -5.0 <= f <= 0.0
        s_net = compile_network(sender, RAW)
        r_net = compile_network(receiver, RAW)
        manual = 0
        for pos, obj in enumerate(objects.objects, start=1):
            got = decode(r_net, transmit(s_net, obj, Channel(0.0)), REG_UNL, 5)
            manual += got != pos
        assert f == -float(manual)


def test_evaluate_matrix_agrees_with_pair_fitness_noisefree():
    task = SymbolicTask(Vocabulary(4), REG_LIM, Channel(0.0), trials=2)
    senders = [random_genome((1, 1), 500 + k, SIGMOID) for k in range(6)]
    receivers = [random_genome((1, 1), 600 + k, IDENTITY) for k in range(5)]
    matrix = evaluate_matrix(task, senders, receivers, generation=1, seed=7)
    assert matrix.shape == (6, 5)
    for i, s in enumerate(senders):
        for j, r in enumerate(receivers):
            rng = pair_rng(7, 1, s.key, r.key)
            assert matrix[i, j] == task.pair_fitness(Pair(s, r), rng)


def test_evaluate_matrix_agrees_with_pair_fitness_noisy():
    task = SymbolicTask(Vocabulary(5), CLS_UNL, Channel(0.25), trials=3)
    senders = [random_genome((1, 1), 700 + k, IDENTITY) for k in range(5)]
    receivers = [random_genome((1, 5), 800 + k, SIGMOID) for k in range(4)]
    matrix = evaluate_matrix(task, senders, receivers, generation=9, seed=21)
    for i, s in enumerate(senders):
        for j, r in enumerate(receivers):
            rng = pair_rng(21, 9, s.key, r.key)
            assert matrix[i, j] == task.pair_fitness(Pair(s, r), rng)


def test_evaluate_matrix_referential_agrees_with_pair_fitness():
    objects = sample_objects(5, np.random.default_rng(1))
    task = ReferentialTask(objects, REG_UNL, Channel(0.0))
    senders = [random_genome((3, 1), 900 + k, IDENTITY) for k in range(4)]
    receivers = [random_genome((1, 1), 950 + k, IDENTITY) for k in range(4)]
    matrix = evaluate_matrix(task, senders, receivers, generation=2, seed=5)
    for i, s in enumerate(senders):
        for j, r in enumerate(receivers):
            rng = pair_rng(5, 2, s.key, r.key)
            assert matrix[i, j] == task.pair_fitness(Pair(s, r), rng)


def test_evaluate_matrix_worker_count_does_not_change_results():
    task = SymbolicTask(Vocabulary(5), CLS_UNL, Channel(0.4), trials=1)
    senders = [random_genome((1, 1), 310 + k, IDENTITY) for k in range(8)]
    receivers = [random_genome((1, 5), 320 + k, SIGMOID) for k in range(8)]
    serial = evaluate_matrix(task, senders, receivers, generation=3, seed=11, workers=1)
    threaded = evaluate_matrix(task, senders, receivers, generation=3, seed=11, workers=4)
    assert np.array_equal(serial, threaded)


def test_training_subset_restricts_fitness_episodes():
    vocab = Vocabulary(10)
    task = SymbolicTask(vocab, REG_UNL, Channel(0.0), trials=1, concepts=(1, 3, 5, 7, 9))
    assert task.max_mismatches == 5
    pair = random_pair(77, REG_UNL, 10)
    f = task.pair_fitness(pair, np.random.default_rng(0))
    assert -5.0 <= f <= 0.0


def test_generator_chunked_draws_match_sequential_draws():
    # evaluate_matrix draws per-pair noise in one call; the slow path
    # draws per episode -- both must see the same stream
    a = pair_rng(5, 2, 3, 4).normal(0.0, 1.0, size=(7, 10))
    rng = pair_rng(5, 2, 3, 4)
    b = np.stack([rng.normal(0.0, 1.0, size=10) for _ in range(7)])
    assert np.array_equal(a, b)


def test_setting_labels_round_trip():
    for s in (REG_UNL, REG_LIM, CLS_UNL):
        assert Setting.from_label(s.label) == s
    with pytest.raises(ContractError):
        Setting.from_label("nonsense")
    with pytest.raises(ContractError):
        Setting("ridge", "unlimited")
