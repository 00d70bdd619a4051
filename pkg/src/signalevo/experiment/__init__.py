from .archive import RunArchive, deserialize_genome, load_run, save_run, serialize_genome
from .campaign import analyze_archives, build_task, campaign_summary, noise_protocol, referential_protocol, run_campaign, run_single, zero_shot_protocol
from .config import ExperimentConfig, evenly_spaced_concepts
