"""Run archives: everything a finished run leaves on disk.

A run directory is self-contained: config snapshot, per-generation
fitness CSV, the best sender/receiver genome records, and the final
signaling system (plus per-generation snapshots when enabled). Loading
an archive back reproduces analysis bit-for-bit; floats are written with
``repr`` so CSV round trips are lossless.

CSV schemas:

- fitness.csv:   generation,best_fitness,species_s,species_r,reset
- signals.csv:   concept,t0..t9 (one row per concept, final system)
- snapshots.csv: generation,concept,t0..t9
"""

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..analysis import SignalingSystem
from ..coevolution import Pair
from ..errors import SerializationError
from ..neat.genome import ConnectionGene, Genome, NodeGene

GENOME_FORMAT_VERSION = 1

FITNESS_HEADER = ["generation", "best_fitness", "species_s", "species_r", "reset"]


def serialize_genome(genome):
    """Versioned, field-ordered JSON record; lossless round trip."""
    record = {
        "version": GENOME_FORMAT_VERSION,
        "key": genome.key,
        "fitness": genome.fitness,
        "nodes": [
            {
                "id": g.id,
                "bias": g.bias,
                "time_constant": g.time_constant,
                "activation": g.activation,
                "kind": g.kind,
            }
            for _, g in sorted(genome.nodes.items())
        ],
        "connections": [
            {
                "innovation": c.innovation,
                "source": c.source,
                "target": c.target,
                "weight": c.weight,
                "enabled": c.enabled,
            }
            for _, c in sorted(genome.connections.items())
        ],
    }
    return json.dumps(record, indent=1)


def deserialize_genome(text):
    try:
        record = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SerializationError(f"malformed genome record: {exc}") from exc
    version = record.get("version")
    if version != GENOME_FORMAT_VERSION:
        raise SerializationError(f"unsupported genome record version {version!r}")
    try:
        nodes = {
            n["id"]: NodeGene(n["id"], n["bias"], n["time_constant"], n["activation"], n["kind"])
            for n in record["nodes"]
        }
        connections = {
            c["innovation"]: ConnectionGene(c["innovation"], c["source"], c["target"], c["weight"], c["enabled"])
            for c in record["connections"]
        }
        genome = Genome(key=record["key"], nodes=nodes, connections=connections, fitness=record["fitness"])
    except (KeyError, TypeError) as exc:
        raise SerializationError(f"malformed genome record: {exc}") from exc
    return genome.validate()


def _signal_header(window):
    return ["concept"] + [f"t{k}" for k in range(window)]


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


@dataclass
class RunArchive:
    directory: Path
    info: dict
    system: SignalingSystem
    best_pair: Pair
    records: list = None
    snapshots: list = None

    @property
    def converged(self):
        return self.info["converged"]

    @property
    def setting_label(self):
        return self.info["setting"]


def save_run(directory, result, info, config_snapshot=None):
    """Persist one finished run; returns the directory."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    info = dict(info)
    info["converged"] = result.converged
    info["generations_to_converge"] = result.generations_to_converge
    info["best_fitness"] = result.best_pair.fitness
    info["reset_events"] = list(result.reset_events)
    (directory / "run.json").write_text(json.dumps(info, indent=1))
    if config_snapshot is not None:
        config_snapshot.save(directory / "config.ini")

    _write_csv(
        directory / "fitness.csv",
        FITNESS_HEADER,
        [
            [r.generation, repr(r.best_fitness), r.species_senders, r.species_receivers, int(r.reset)]
            for r in result.records
        ],
    )

    system = result.final_signaling_system
    window = len(system.signals[0])
    _write_csv(
        directory / "signals.csv",
        _signal_header(window),
        [[i + 1] + [repr(float(v)) for v in s] for i, s in enumerate(system.signals)],
    )
    if result.snapshots:
        rows = []
        for generation, snap in result.snapshots:
            for i, s in enumerate(snap.signals):
                rows.append([generation, i + 1] + [repr(float(v)) for v in s])
        _write_csv(directory / "snapshots.csv", ["generation"] + _signal_header(window), rows)

    (directory / "best_sender.json").write_text(serialize_genome(result.best_pair.sender))
    (directory / "best_receiver.json").write_text(serialize_genome(result.best_pair.receiver))
    return directory


def load_run(directory):
    """Reload an archive; analysis re-run on it reproduces identical reports."""
    directory = Path(directory)
    info_path = directory / "run.json"
    if not info_path.is_file():
        raise SerializationError(f"not a run archive: {directory}")
    info = json.loads(info_path.read_text())

    header, rows = _read_csv(directory / "signals.csv")
    signals = [np.array([float(v) for v in row[1:]]) for row in rows]
    system = SignalingSystem(vocab_size=len(signals), signals=signals, provenance=info.get("run_id", str(directory)))

    from ..tasks import Setting  # local import to keep module load light

    pair = Pair(
        sender=deserialize_genome((directory / "best_sender.json").read_text()),
        receiver=deserialize_genome((directory / "best_receiver.json").read_text()),
        fitness=info["best_fitness"],
        setting=Setting.from_label(info["setting"]),
    )

    records = None
    if (directory / "fitness.csv").is_file():
        _, fit_rows = _read_csv(directory / "fitness.csv")
        records = [
            {
                "generation": int(r[0]),
                "best_fitness": float(r[1]),
                "species_s": int(r[2]),
                "species_r": int(r[3]),
                "reset": bool(int(r[4])),
            }
            for r in fit_rows
        ]

    snapshots = None
    snap_path = directory / "snapshots.csv"
    if snap_path.is_file():
        _, snap_rows = _read_csv(snap_path)
        by_generation = {}
        for row in snap_rows:
            by_generation.setdefault(int(row[0]), []).append(np.array([float(v) for v in row[2:]]))
        snapshots = [
            (gen, SignalingSystem(vocab_size=len(sigs), signals=sigs, provenance=f"gen{gen}"))
            for gen, sigs in sorted(by_generation.items())
        ]

    return RunArchive(directory=directory, info=info, system=system, best_pair=pair, records=records, snapshots=snapshots)
