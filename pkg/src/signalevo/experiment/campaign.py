"""Campaign orchestration: multi-run evolution, the table-reproducing
protocols, and batch analysis of archives.

Campaign runs are independent: run k uses seed base_seed + k and owns
its archive directory, so running them across worker processes changes
nothing about the outputs. The zero-shot and noise protocols follow the
reported experimental recipe: |V| = 10 with evenly spaced training
subsets for zero-shot; |V| = 5 under noise except
classification-limited, which uses |V| = 4 (the 100 test episodes split
as 20 or 25 trials per concept).
"""

import csv
import json
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from ..analysis import cluster_signaling_systems, constellation_2d, gram_schmidt
from ..coevolution import run_coevolution
from ..errors import ContractError, DegenerateSignalError
from ..tasks import Channel, ReferentialTask, Setting, SymbolicTask, Vocabulary, noise_test, sample_objects, zero_shot_score
from .archive import load_run, save_run
from .config import evenly_spaced_concepts
from . import plots

NOISE_TEST_TAG = 424242


def build_task(config, setting_label=None, concepts=None, sigma=None, trials=None, objects=None, vocab_size=None):
    """Assemble the task a run evolves against."""
    setting = Setting.from_label(setting_label or config.setting)
    channel = Channel(config.noise_sigma if sigma is None else sigma)
    if config.referential or objects is not None:
        if objects is None:
            rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((config.object_seed, config.object_count))))
            objects = sample_objects(config.object_count, rng)
        return ReferentialTask(objects, setting, channel)
    vocab = Vocabulary(vocab_size or config.vocab_size)
    return SymbolicTask(vocab, setting, channel, trials or config.trials_per_concept, concepts)


def run_single(config, run_index, out_dir, overrides=None, workers=1):
    """Execute one run and archive it; returns the archive directory."""
    overrides = overrides or {}
    task = build_task(config, **overrides)
    setting = task.setting
    seed = config.base_seed + run_index
    run_id = f"{config.name}/run_{run_index:03d}"
    result = run_coevolution(
        task,
        config.neat_for(setting.sender_activation),
        config.neat_for(setting.receiver_activation),
        seed=seed,
        max_generations=overrides.get("max_generations", config.max_generations),
        reset_after=config.reset_after,
        workers=workers,
        snapshot=config.snapshot,
        provenance=run_id,
    )
    info = {
        "run_id": run_id,
        "run_index": run_index,
        "seed": seed,
        "setting": setting.label,
        "vocab_size": task.vocab.size if isinstance(task, SymbolicTask) else task.vocab_size,
        "noise_sigma": task.channel.sigma,
        "trials": task.trials,
        "referential": isinstance(task, ReferentialTask),
        "objects": list(map(list, task.objects.objects)) if isinstance(task, ReferentialTask) else None,
        "concepts": list(task.concepts) if isinstance(task, SymbolicTask) else None,
    }
    return save_run(Path(out_dir) / f"run_{run_index:03d}", result, info, config_snapshot=config)


def _campaign_worker(args):
    config, run_index, out_dir, overrides = args
    return str(run_single(config, run_index, out_dir, overrides))


def run_campaign(config, out_dir=None, runs=None, parallel=1, overrides=None):
    """Run ``runs`` seeds of one experiment; returns loaded archives in order."""
    runs = runs or config.run_count
    out = Path(out_dir or config.out_dir) / config.name
    jobs = [(config, k, str(out), overrides) for k in range(runs)]
    if parallel > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            dirs = list(pool.map(_campaign_worker, jobs))
    else:
        dirs = [_campaign_worker(j) for j in jobs]
    archives = [load_run(d) for d in dirs]
    write_fitness_trend(archives, out)
    return archives


def campaign_summary(archives):
    converged = [a.info["generations_to_converge"] for a in archives if a.converged]
    return {
        "runs": len(archives),
        "converged": len(converged),
        "convergence_rate": len(converged) / len(archives),
        "mean_generations": statistics.mean(converged) if converged else None,
        "median_generations": statistics.median(converged) if converged else None,
    }


def write_fitness_trend(archives, out_dir):
    """Mean best fitness per generation over a campaign's runs.

    Converged runs hold their zero fitness after stopping, mirroring
    run-averaged fitness-trend figures.
    """
    horizon = max(a.records[-1]["generation"] for a in archives)
    rows = []
    means = []
    for g in range(1, horizon + 1):
        values = []
        for a in archives:
            recs = a.records
            values.append(recs[g - 1]["best_fitness"] if g <= len(recs) else recs[-1]["best_fitness"])
        mean = statistics.mean(values)
        means.append(mean)
        rows.append([g, repr(mean)])
    out = Path(out_dir)
    _write_table(out / "fitness_trend.csv", ["generation", "mean_best_fitness"], rows)
    plots.line_plot(
        [(list(range(1, horizon + 1)), means)],
        out / "fitness_trend.svg",
        title="best-pair fitness, averaged over runs",
        xlabel="generation",
        ylabel="fitness",
    )
    return out / "fitness_trend.csv"


def _mean_std(values):
    if not values:
        return "NA", "NA"
    mean = statistics.mean(values)
    std = statistics.pstdev(values) if len(values) > 1 else 0.0
    return f"{mean:.2f}", f"{std:.2f}"


def _write_table(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    return path


def zero_shot_protocol(config, out_dir=None, runs=None, parallel=1):
    """Evolve on V_T, score on all of V; one row per (setting, |V_T|).

    Rows show mean +- std of correctly communicated concepts over the
    converged runs, "NA" when no run converged.
    """
    out = Path(out_dir or config.out_dir)
    sizes = config.zero_shot_sizes or (3, 5, 7)
    rows = []
    for label in config.settings:
        for size in sizes:
            concepts = config.zero_shot_concepts or evenly_spaced_concepts(config.vocab_size, size)
            if len(concepts) != size:
                raise ContractError(f"explicit zero-shot concepts have size {len(concepts)}, expected {size}")
            sub = config.replace(name=f"{config.name}_{label}_vt{size}")
            archives = run_campaign(sub, out, runs, parallel, overrides={"setting_label": label, "concepts": concepts})
            scores = [
                zero_shot_score(a.best_pair, Vocabulary(config.vocab_size), concepts)
                for a in archives
                if a.converged
            ]
            mean, std = _mean_std(scores)
            rows.append([label, size, len(archives), len(scores), mean, std])
    return _write_table(out / "zero_shot.csv", ["setting", "vt_size", "runs", "converged", "mean_correct", "std_correct"], rows)


def noise_protocol(config, out_dir=None, runs=None, parallel=1):
    """Evolve under each sigma, then test 100 fresh-noise episodes per run."""
    out = Path(out_dir or config.out_dir)
    rows = []
    for label in config.settings:
        vocab_size = 4 if label == "classification-limited" and config.vocab_size == 5 else config.vocab_size
        for sigma in config.noise_sigmas:
            sub = config.replace(name=f"{config.name}_{label}_sigma{sigma:g}")
            archives = run_campaign(
                sub, out, runs, parallel,
                overrides={"setting_label": label, "sigma": sigma, "vocab_size": vocab_size},
            )
            successes = []
            for a in archives:
                if not a.converged:
                    continue
                rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((a.info["seed"], NOISE_TEST_TAG))))
                successes.append(noise_test(a.best_pair, Vocabulary(vocab_size), a.best_pair.setting, sigma, rng))
            mean, std = _mean_std(successes)
            rows.append([label, sigma, config.trials_per_concept, len(archives), len(successes), mean, std])
    return _write_table(
        out / "noise.csv",
        ["setting", "sigma", "trials", "runs", "converged", "mean_success", "std_success"],
        rows,
    )


def referential_protocol(config, out_dir=None, runs=None, parallel=1, object_counts=(3, 5, 8)):
    """Convergence of the referential game per (setting, object count)."""
    out = Path(out_dir or config.out_dir)
    rows = []
    for label in config.settings:
        for count in object_counts:
            rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((config.object_seed, count))))
            objects = sample_objects(count, rng)  # fixed once for all runs
            sub = config.replace(name=f"{config.name}_{label}_n{count}")
            archives = run_campaign(sub, out, runs, parallel, overrides={"setting_label": label, "objects": objects})
            summary = campaign_summary(archives)
            rows.append([
                label,
                count,
                summary["runs"],
                summary["converged"],
                f"{summary['convergence_rate']:.2f}",
                "NA" if summary["mean_generations"] is None else f"{summary['mean_generations']:.1f}",
            ])
    return _write_table(
        out / "referential.csv",
        ["setting", "objects", "runs", "converged", "convergence_rate", "mean_generations"],
        rows,
    )


def constellation_outputs(archive, out_dir):
    """Constellation CSV + SVG plots for one archive; returns its dimension."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = gram_schmidt(archive.system.signals)
    truncated = report.dimension > 2
    if truncated:
        print(f"warning: {archive.info['run_id']} spans {report.dimension} dimensions; plane coordinates truncated")
        nonzero = [phi for phi in report.bases if phi.any()]
        points = [(float(s @ nonzero[0]), float(s @ nonzero[1])) for s in archive.system.signals]
    else:
        points = constellation_2d(archive.system, report)
    rows = [[i + 1, repr(x), repr(y)] for i, (x, y) in enumerate(points)]
    _write_table(out / "constellation.csv", ["concept", "x", "y"], rows)

    window = len(archive.system.signals[0])
    xs = list(range(window))
    plots.line_plot(
        [(xs, list(map(float, s))) for s in archive.system.signals],
        out / "signals.svg",
        title=f"signals ({archive.info['run_id']})",
        xlabel="sample",
        ylabel="amplitude",
        labels=[f"concept {i + 1}" for i in range(len(archive.system.signals))],
    )
    plots.scatter_plot(
        points,
        out / "constellation.svg",
        title=f"constellation ({archive.info['run_id']})",
        xlabel="phi1",
        ylabel="phi2",
        labels=[str(i + 1) for i in range(len(points))],
    )

    if archive.snapshots:
        rows = []
        for generation, system in archive.snapshots:
            try:
                series = gram_schmidt(system.signals)
            except DegenerateSignalError:
                continue
            nz = [phi for phi in series.bases if phi.any()]
            phi2 = nz[1] if len(nz) > 1 else np.zeros_like(nz[0])
            for i, s in enumerate(system.signals):
                rows.append([generation, i + 1, repr(float(s @ nz[0])), repr(float(s @ phi2))])
        _write_table(out / "constellation_series.csv", ["generation", "concept", "x", "y"], rows)
    return report.dimension, truncated


def analyze_archives(directories, out_dir, min_samples=4, xi=0.1):
    """Constellations per archive plus cross-archive density clustering.

    Mixed vocabulary sizes skip the clustering stage with a warning;
    constellation outputs are still emitted.
    """
    archives = [load_run(d) for d in sorted(str(d) for d in directories)]
    if not archives:
        raise ContractError("no archives matched")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    dimension_rows = []
    for k, archive in enumerate(archives):
        sub = out / f"archive_{k:03d}"
        try:
            dimension, truncated = constellation_outputs(archive, sub)
        except DegenerateSignalError:
            print(f"warning: {archive.info['run_id']} has a (near-)zero first signal; constellation skipped")
            dimension, truncated = "NA", False
        dimension_rows.append([k, archive.info["run_id"], int(archive.converged), dimension, int(truncated)])
    _write_table(out / "dimensions.csv", ["system_id", "run_id", "converged", "dimension", "truncated"], dimension_rows)

    summary = {"archives": len(archives), "clustered": False}
    sizes = {a.system.vocab_size for a in archives}
    if len(sizes) > 1:
        print(f"warning: mixed vocabulary sizes {sorted(sizes)}; clustering skipped")
    elif len(archives) == 1:
        print("single archive; clustering skipped")
    else:
        systems = [a.system for a in archives]
        report, shares = cluster_signaling_systems(systems, min_samples=min_samples, xi=xi)
        _write_table(
            out / "clusters.csv",
            ["system_id", "run_id", "label", "is_medoid"],
            [
                [k, archives[k].info["run_id"], int(report.labels[k]), int(k in report.medoids.values())]
                for k in range(len(archives))
            ],
        )
        _write_table(
            out / "reachability.csv",
            ["position", "system_id", "reachability"],
            [[pos, int(p), repr(float(r))] for pos, (p, r) in enumerate(zip(report.ordering, report.reachability))],
        )
        _write_table(
            out / "cluster_shares.csv",
            ["label", "share"],
            [[label, repr(share)] for label, share in sorted(shares.items())],
        )
        finite = [r if math.isfinite(r) else 0.0 for r in report.reachability]
        plots.line_plot(
            [(list(range(len(finite))), finite)],
            out / "reachability.svg",
            title="reachability plot (infinite shown as 0)",
            xlabel="ordering position",
            ylabel="reachability",
        )
        window = len(archives[0].system.signals[0])
        medoid_rows, mean_rows = [], []
        for label, sys_idx in sorted(report.medoids.items()):
            medoid_system = archives[sys_idx].system
            members = [i for i in range(len(archives)) if report.labels[i] == label]
            stacked = np.stack([np.stack(archives[i].system.signals) for i in members])
            mean_wave = stacked.mean(axis=0)
            for c in range(medoid_system.vocab_size):
                medoid_rows.append([label, c + 1] + [repr(float(v)) for v in medoid_system.signals[c]])
                mean_rows.append([label, c + 1] + [repr(float(v)) for v in mean_wave[c]])
            plots.line_plot(
                [(list(range(window)), list(map(float, s))) for s in medoid_system.signals],
                out / f"central_signals_{label}.svg",
                title=f"central signals, cluster {label} ({archives[sys_idx].info['run_id']})",
                xlabel="sample",
                ylabel="amplitude",
            )
        header = ["label", "concept"] + [f"t{k}" for k in range(window)]
        _write_table(out / "central_signals.csv", header, medoid_rows)
        _write_table(out / "cluster_mean_signals.csv", header, mean_rows)
        summary.update(
            clustered=True,
            clusters=len(report.medoids),
            noise=int((report.labels == -1).sum()),
            shares={str(k): v for k, v in shares.items()},
        )
    (out / "analysis.json").write_text(json.dumps(summary, indent=1))
    return summary
