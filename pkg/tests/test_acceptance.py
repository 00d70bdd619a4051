"""Acceptance gate: one pass/fail line per criterion (run with -s to watch).

The statistical criteria evolve real campaigns through the same archive
pipeline the CLI uses; campaign fixtures are session-scoped and shared
across criteria. On one core the full gate takes tens of minutes; run
it with PYTHONOPTIMIZE=1 to skip the per-mutation debug validation.
"""

import math
import statistics
import subprocess
import sys

import numpy as np
import pytest

from signalevo.analysis import chebyshev, extract_clusters_xi, gram_schmidt, optics, cluster_signaling_systems
from signalevo.coevolution import Pair
from signalevo.ctrnn import IDENTITY, RAW, SIGMOID, Connection, Network, Neuron, compile_network
from signalevo.experiment.campaign import run_campaign
from signalevo.experiment.config import ExperimentConfig
from signalevo.neat.config import NeatConfig
from signalevo.neat.genome import InnovationRegistry, new_genome
from signalevo.tasks import (
    Channel,
    Setting,
    Vocabulary,
    decode,
    noise_test,
    pair_fitness_symbolic,
    pair_rng,
    sample_objects,
    transmit,
    zero_shot_score,
)
from oracles import brute_optics, brute_xi_labels, lstsq_residual, scalar_euler

RUNS = 20


def report(num, ok, detail):
    line = f"[criterion {num:02d}] {'PASS' if ok else 'FAIL'} - {detail}"
    print(line)
    return line


@pytest.fixture(scope="session")
def outdir(tmp_path_factory):
    return tmp_path_factory.mktemp("acceptance")


def campaign(outdir, name, setting, vocab, seed, budget=10_000, sigma=0.0, trials=1, concepts=None, objects=None):
    config = ExperimentConfig(
        name=name,
        setting=setting,
        vocab_size=vocab,
        noise_sigma=sigma,
        trials_per_concept=trials,
        run_count=RUNS,
        base_seed=seed,
        max_generations=budget,
        out_dir=str(outdir),
    )
    overrides = {}
    if concepts is not None:
        overrides["concepts"] = concepts
    if objects is not None:
        overrides["objects"] = objects
    print(f"\n[campaign] {name}: {RUNS} runs, budget {budget} ...")
    archives = run_campaign(config, overrides=overrides or None)
    done = sum(a.converged for a in archives)
    print(f"[campaign] {name}: {done}/{RUNS} converged")
    return archives


def convergence_generations(archives, cap=None):
    """Per-run generations to converge; non-converged runs count as budget."""
    out = []
    for a in archives:
        g = a.info["generations_to_converge"] if a.converged else a.records[-1]["generation"]
        out.append(min(g, cap) if cap else g)
    return out


# ---- session campaign fixtures -------------------------------------------


@pytest.fixture(scope="session")
def symbolic60(outdir):
    return {
        "regression-unlimited": campaign(outdir, "acc_ru5", "regression-unlimited", 5, 61000),
        "regression-limited": campaign(outdir, "acc_rl5", "regression-limited", 5, 61100),
        "classification-unlimited": campaign(outdir, "acc_cu5", "classification-unlimited", 5, 61200),
    }


@pytest.fixture(scope="session")
def v4_campaigns(outdir):
    return {
        "regression-unlimited": campaign(outdir, "acc_ru4", "regression-unlimited", 4, 61300, budget=2000),
        "classification-unlimited": campaign(outdir, "acc_cu4", "classification-unlimited", 4, 61400, budget=2000),
    }


@pytest.fixture(scope="session")
def class_limited5(outdir):
    return campaign(outdir, "acc_cl5", "classification-limited", 5, 61500)


@pytest.fixture(scope="session")
def zero_shot_runs(outdir):
    subset = (1, 3, 5, 7, 9)
    return subset, {
        "regression-unlimited": campaign(outdir, "acc_zs_ru", "regression-unlimited", 10, 61600, concepts=subset),
        "classification-unlimited": campaign(outdir, "acc_zs_cu", "classification-unlimited", 10, 61700, concepts=subset),
    }


@pytest.fixture(scope="session")
def noise_runs(outdir):
    runs = {}
    for label, sigma, seed in (
        ("regression-unlimited", 0.1, 61800),
        ("regression-unlimited", 0.5, 61810),
        ("classification-unlimited", 0.1, 61820),
        ("classification-unlimited", 0.5, 61830),
    ):
        short = "ru" if label.startswith("regression") else "cu"
        runs[(label, sigma)] = campaign(outdir, f"acc_noise_{short}_{sigma:g}", label, 5, seed, sigma=sigma)
    return runs


@pytest.fixture(scope="session")
def noisy_reglim3(outdir):
    return campaign(outdir, "acc_noise_rl3", "regression-limited", 5, 61900, sigma=0.1, trials=3)


@pytest.fixture(scope="session")
def referential_runs(outdir):
    objs3 = sample_objects(3, np.random.default_rng((97531, 3)))
    objs8 = sample_objects(8, np.random.default_rng((97531, 8)))
    return {
        ("regression-unlimited", 3): campaign(outdir, "acc_ref_ru3", "regression-unlimited", 5, 62000, objects=objs3),
        ("classification-unlimited", 3): campaign(outdir, "acc_ref_cu3", "classification-unlimited", 5, 62100, objects=objs3),
        ("regression-unlimited", 8): campaign(outdir, "acc_ref_ru8", "regression-unlimited", 5, 62200, objects=objs8),
    }


# ---- deterministic property/oracle criteria --------------------------------


def test_criterion_01_ctrnn_euler_oracle():
    fixtures = [
        ([Neuron(0, kind="input"), Neuron(1, 0.0, 1.0, SIGMOID, "output")], [Connection(0, 1, 1.0)], [1.0]),
        ([Neuron(0, kind="input"), Neuron(1, 0.25, 2.0, IDENTITY, "output")], [Connection(0, 1, 1.0), Connection(1, 1, 0.5)], [1.0]),
        (
            [Neuron(0, kind="input"), Neuron(2, -0.5, 1.0, SIGMOID, "hidden"), Neuron(1, 0.1, 4.0, IDENTITY, "output")],
            [Connection(0, 2, 2.0), Connection(2, 1, -1.5), Connection(1, 2, 0.75)],
            [0.5],
        ),
    ]
    worst = 0.0
    for neurons, connections, inputs in fixtures:
        expected = scalar_euler(neurons, connections, inputs, 5)
        net = Network(list(neurons), list(connections))
        for want in expected:
            got = net.step(inputs)
            worst = max(worst, abs(got[0] - want[0]))
    ok = worst <= 1e-12
    assert ok, report(1, ok, f"max |trajectory - oracle| = {worst:.2e} > 1e-12")
    report(1, ok, f"3 fixture networks, 5 steps, max deviation {worst:.2e} <= 1e-12")


def test_criterion_02_gram_schmidt_oracle():
    rng = np.random.default_rng(202)
    checked = 0
    for trial in range(1000):
        signals = list(rng.normal(size=(5, 10)))
        if trial % 3 == 0:  # exercise the zero-vector rule from both sides
            signals[2] = 0.4 * signals[0] - 0.9 * signals[1] + rng.normal(size=10) * 1e-6
            signals[3] = 0.2 * signals[0] + 0.1 * signals[1] + rng.normal(size=10) * 1e-3
        report_ = gram_schmidt(signals)
        nonzero = [phi for phi in report_.bases if phi.any()]
        for i, a in enumerate(nonzero):
            assert abs(np.linalg.norm(a) - 1.0) <= 1e-10, report(2, False, "unit norm violated")
            for b in nonzero[i + 1 :]:
                assert abs(float(a @ b)) <= 1e-8, report(2, False, "orthogonality violated")
        for k, (s, coords) in enumerate(zip(signals, report_.coordinates)):
            rebuilt = sum(c * phi for c, phi in zip(coords, nonzero))
            err = np.linalg.norm(s - rebuilt)
            if report_.bases[k].any():
                assert err <= 1e-6, report(2, False, f"kept signal reconstructs to {err:.2e} > 1e-6")
            else:
                # zeroed under the 1e-4 rule: error is its sub-threshold residual
                assert err <= 1e-4, report(2, False, f"zeroed signal residual {err:.2e} > 1e-4")
        for k in range(1, 5):
            expected_zero = lstsq_residual(signals[:k], signals[k]) < 1e-4
            got_zero = not report_.bases[k].any()
            assert got_zero == expected_zero, report(2, False, f"zero-vector rule mismatch at trial {trial}")
            checked += 1
    report(2, True, f"1000 signal sets: orthonormal (1e-8), reconstructing (1e-6), {checked} zero-rule checks match lstsq oracle")


def test_criterion_03_fitness_recount_oracle():
    rng = np.random.default_rng(33)
    episodes_checked = 0
    for k in range(170):
        setting = Setting("regression" if k % 2 else "classification", "unlimited" if k % 3 else "limited")
        vocab = Vocabulary(int(rng.integers(2, 7)))
        trials = int(rng.integers(1, 4))
        sigma = float(rng.choice([0.0, 0.1, 0.5]))
        cfg_s = NeatConfig(default_activation=setting.sender_activation)
        cfg_r = NeatConfig(default_activation=setting.receiver_activation)
        reg = InnovationRegistry(node_id_start=2)
        sender = new_genome(1, (1, 1), cfg_s, reg, np.random.default_rng(1000 + k))
        reg_r = InnovationRegistry(node_id_start=1 + setting.receiver_outputs(vocab.size))
        receiver = new_genome(2, (1, setting.receiver_outputs(vocab.size)), cfg_r, reg_r, np.random.default_rng(2000 + k))
        pair = Pair(sender, receiver, setting=setting)

        fitness = pair_fitness_symbolic(pair, vocab, setting, Channel(sigma), trials, pair_rng(9, 1, 1, 2))
        # independent transcript: replay episodes, record (sent, received), recount
        s_net = compile_network(sender, RAW)
        r_net = compile_network(receiver, setting.receiver_output_mode)
        replay_rng = pair_rng(9, 1, 1, 2)
        transcript = []
        for concept in range(1, vocab.size + 1):
            for _ in range(trials):
                signal = transmit(s_net, [vocab.feature(concept)], Channel(sigma), replay_rng)
                transcript.append((concept, decode(r_net, signal, setting, vocab.size)))
        recount = -sum(sent != got for sent, got in transcript)
        episodes_checked += len(transcript)
        assert fitness == recount, report(3, False, f"fitness {fitness} != recount {recount}")
        assert -trials * vocab.size <= fitness <= 0.0, report(3, False, "fitness out of bounds")
    assert episodes_checked >= 1000
    report(3, True, f"{episodes_checked} episodes recounted across 170 random transcripts; bounds hold")


def test_criterion_04_max_over_pairs():
    rng = np.random.default_rng(4)
    for _ in range(300):
        s, r = int(rng.integers(1, 21)), int(rng.integers(1, 21))
        matrix = -rng.integers(0, 11, size=(s, r)).astype(float)
        sender_fit = matrix.max(axis=1)
        receiver_fit = matrix.max(axis=0)
        for i in range(s):
            assert sender_fit[i] == max(matrix[i, j] for j in range(r)), report(4, False, "row max mismatch")
        for j in range(r):
            assert receiver_fit[j] == max(matrix[i, j] for i in range(s)), report(4, False, "column max mismatch")
    report(4, True, "300 random fitness matrices up to 20x20: genome fitness = max over its pairs")


def test_criterion_05_optics_xi_oracle():
    rng = np.random.default_rng(55)
    blob = np.vstack(
        [np.random.default_rng(42).normal(0.0, 0.3, size=(10, 2)), np.random.default_rng(43).normal(10.0, 0.3, size=(10, 2))]
    )
    fixtures = [blob] + [rng.normal(size=(int(rng.integers(8, 51)), int(rng.integers(2, 5)))) for _ in range(8)]
    for pts in fixtures:
        ordering, reachability, core = optics(pts, min_samples=4)
        b_ord, b_reach, b_core = brute_optics(pts, 4, chebyshev)
        assert list(ordering) == b_ord, report(5, False, "ordering mismatch")
        assert np.allclose(core, b_core), report(5, False, "core distance mismatch")
        assert all(
            (math.isinf(x) and math.isinf(y)) or abs(x - y) <= 1e-12 for x, y in zip(reachability, b_reach)
        ), report(5, False, "reachability mismatch")
        mine = extract_clusters_xi(ordering, reachability, xi=0.1, min_samples=4)
        ref = brute_xi_labels(list(ordering), list(reachability), 0.1, 4)
        assert np.array_equal(mine, ref), report(5, False, "xi labels mismatch")
    ordering, reachability, _ = optics(blob, min_samples=4)
    labels = extract_clusters_xi(ordering, reachability, xi=0.1, min_samples=4)
    n_clusters = len(set(labels) - {-1})
    assert n_clusters == 2, report(5, False, f"two-blob fixture gave {n_clusters} clusters")
    report(5, True, f"{len(fixtures)} fixtures match the brute-force oracle; two-blob fixture -> exactly 2 clusters")


def test_criterion_06_parallel_determinism(tmp_path):
    config = tmp_path / "det.ini"
    config.write_text(
        "[experiment]\nname = det\nsetting = regression-unlimited\nvocab_size = 3\n"
        "noise_sigma = 0.25\ntrials_per_concept = 2\nrun_count = 3\nbase_seed = 4242\n"
        "max_generations = 60\nout_dir = OUT\n"
    )
    outputs = {}
    for workers in (1, 8):
        out = tmp_path / f"p{workers}"
        proc = subprocess.run(
            [sys.executable, "-m", "signalevo", "evolve", "--config", str(config), "--out", str(out), "--parallel", str(workers)],
            capture_output=True,
            text=True,
            cwd=tmp_path,
        )
        assert proc.returncode == 0, proc.stderr
        outputs[workers] = {
            p.relative_to(out): p.read_bytes()
            for p in sorted(out.rglob("*.csv"))
        }
    same = outputs[1] == outputs[8]
    assert same, report(6, False, "fitness/signals CSVs differ between --parallel 1 and --parallel 8")
    n = len(outputs[1])
    report(6, True, f"evolve --parallel 1 vs 8: {n} CSV files byte-identical (noisy task, 3 runs)")


# ---- statistical criteria ---------------------------------------------------


def test_criterion_07_elitism_monotonicity(symbolic60):
    violations = []
    for a in symbolic60["regression-unlimited"]:
        resets = {r["generation"] for r in a.records if r["reset"]}
        prev = None
        for rec in a.records:
            if prev is not None and rec["best_fitness"] < prev:
                violations.append((a.info["run_id"], rec["generation"]))
            prev = None if rec["generation"] in resets else rec["best_fitness"]
    ok = not violations
    assert ok, report(7, ok, f"best-pair fitness decreased without reset at {violations[:3]}")
    report(7, ok, f"all {RUNS} noise-free regression-unlimited runs non-decreasing between resets")


def test_criterion_08_convergence_regression_unlimited(symbolic60):
    archives = symbolic60["regression-unlimited"]
    converged = sum(a.converged for a in archives)
    med = statistics.median(convergence_generations(archives))
    ok = converged >= 18 and med <= 200
    assert ok, report(8, ok, f"{converged}/20 converged, median {med} generations")
    report(8, ok, f"{converged}/20 converged to zero fitness, median {med} generations (<= 200)")


def test_criterion_09_complexity_ordering(symbolic60, v4_campaigns):
    med = lambda arch: statistics.median(convergence_generations(arch, cap=2000))
    ru4 = med(v4_campaigns["regression-unlimited"])
    cu4 = med(v4_campaigns["classification-unlimited"])
    ru5 = med(symbolic60["regression-unlimited"])
    rl5 = med(symbolic60["regression-limited"])
    ok = ru4 < cu4 and ru5 < rl5
    assert ok, report(9, ok, f"medians: ru4 {ru4} vs cu4 {cu4}; ru5 {ru5} vs rl5 {rl5}")
    report(9, ok, f"median generations: regression {ru4} < classification {cu4} (|V|=4); unlimited {ru5} < limited {rl5} (|V|=5)")


def test_criterion_10_classification_limited_non_convergence(class_limited5):
    failed = sum(not a.converged for a in class_limited5)
    ok = failed >= 18
    assert ok, report(10, ok, f"only {failed}/20 runs failed to converge within 10000 generations")
    report(10, ok, f"{failed}/20 classification-limited |V|=5 runs hit the 10000-generation budget without zero fitness")


def test_criterion_11_zero_shot(zero_shot_runs):
    subset, campaigns = zero_shot_runs
    vocab = Vocabulary(10)
    means = {}
    for label, archives in campaigns.items():
        scores = [zero_shot_score(a.best_pair, vocab, subset) for a in archives if a.converged]
        means[label] = statistics.mean(scores) if scores else float("nan")
    ru, cu = means["regression-unlimited"], means["classification-unlimited"]
    ok = ru >= 6.0 and 4.5 <= cu <= 5.5
    assert ok, report(11, ok, f"means: regression-unlimited {ru:.2f}, classification-unlimited {cu:.2f}")
    report(11, ok, f"zero-shot |V|=10, |V_T|=5: regression-unlimited mean {ru:.2f} >= 6.0; classification-unlimited {cu:.2f} in [4.5, 5.5]")


def test_criterion_12_noise_ordering(noise_runs):
    means = {}
    for (label, sigma), archives in noise_runs.items():
        successes = []
        for a in archives:
            if not a.converged:
                continue
            rng = np.random.default_rng((a.info["seed"], 424242))
            successes.append(noise_test(a.best_pair, Vocabulary(5), a.best_pair.setting, sigma, rng))
        means[(label, sigma)] = statistics.mean(successes) if successes else float("nan")
    c01 = means[("classification-unlimited", 0.1)]
    c05 = means[("classification-unlimited", 0.5)]
    r01 = means[("regression-unlimited", 0.1)]
    r05 = means[("regression-unlimited", 0.5)]
    ok = c01 >= r01 and c05 >= r05 and c01 >= 80.0
    assert ok, report(12, ok, f"success/100: class {c01:.1f}/{c05:.1f} vs regr {r01:.1f}/{r05:.1f}")
    report(12, ok, f"success/100: classification {c01:.1f} >= regression {r01:.1f} at sigma 0.1; {c05:.1f} >= {r05:.1f} at 0.5; classification sigma 0.1 >= 80")


def test_criterion_13_referential(referential_runs):
    conv3_ru = sum(a.converged for a in referential_runs[("regression-unlimited", 3)])
    conv3_cu = sum(a.converged for a in referential_runs[("classification-unlimited", 3)])
    fail8 = sum(not a.converged for a in referential_runs[("regression-unlimited", 8)])
    ok = conv3_ru >= 15 and conv3_cu >= 15 and fail8 >= 18
    assert ok, report(13, ok, f"3 objects: ru {conv3_ru}/20, cu {conv3_cu}/20 converged; 8 objects: {fail8}/20 non-converged")
    report(13, ok, f"3 objects converge (ru {conv3_ru}/20, cu {conv3_cu}/20 >= 15); 8 objects non-convergence {fail8}/20 >= 18")


def test_criterion_14_constellation_dimension(symbolic60, noisy_reglim3):
    dims = []
    for label, archives in symbolic60.items():
        for a in archives:
            if a.converged:
                dims.append((label, gram_schmidt(a.system.signals).dimension))
    ratios = []
    for a in noisy_reglim3:
        if not a.converged:
            continue
        rep = gram_schmidt(a.system.signals)
        dims.append(("noisy regression-limited", rep.dimension))
        phi1 = sorted(c[0] for c in rep.coordinates)
        spacing = np.diff(phi1)
        ratios.append(float(spacing.min() / spacing.max()))
    spacing_median = statistics.median(ratios) if ratios else float("nan")
    offenders = [(label, d) for label, d in dims if d > 2]
    ok = not offenders and spacing_median >= 0.5
    distribution = {d: sum(1 for _, dd in dims if dd == d) for d in sorted({d for _, d in dims})}
    assert ok, report(
        14,
        ok,
        f"dimension distribution {distribution}, {len(offenders)} converged systems exceed 2; "
        f"noise-evolved spacing ratio median {spacing_median:.2f}",
    )
    report(14, ok, f"all converged systems spanned <= 2 dimensions {distribution}; noisy spacing ratio median {spacing_median:.2f} >= 0.5")


def test_criterion_15_cluster_shares(symbolic60):
    systems = [a.system for archives in symbolic60.values() for a in archives]
    assert len(systems) == 60
    _, shares = cluster_signaling_systems(systems, min_samples=4, xi=0.1)
    largest = max(shares.values()) if shares else 0.0
    ok = largest > 0.35
    assert ok, report(15, ok, f"cluster shares {shares} - largest {largest:.1%} <= 35%")
    pretty = {k: f"{v:.1%}" for k, v in sorted(shares.items())}
    report(15, ok, f"largest cluster holds {largest:.1%} of 60 systems (> 35%); shares {pretty}")
