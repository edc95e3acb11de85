"""
Sample data generator for the diffusion maps toolkit.
Writes every named dataset preset into the data directory.
"""
import argparse
import logging

from dmaps.config import get_settings
from dmaps.export import ResultExporter
from dmaps.pipeline import generate_dataset
from dmaps.presets import dataset_presets, get_preset

logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)


def generate_sample_data(out_dir: str, seed: int = 0, names=None, n_jobs: int = 1):
    """Generate preset datasets (all of them unless names are given)"""
    exporter = ResultExporter(out_dir)
    for name in names or dataset_presets():
        preset = get_preset(name)
        dataset = generate_dataset(preset["kind"], preset["params"], seed=seed, n_jobs=n_jobs)
        exporter.export_dataset(dataset, name)
        logger.info(f"{name}: {dataset.m} rows")


if __name__ == "__main__":
    settings = get_settings()
    parser = argparse.ArgumentParser(description="Write the preset datasets")
    parser.add_argument("--out", default=settings.data_dir)
    parser.add_argument("--seed", type=int, default=settings.seed)
    parser.add_argument("--n-jobs", type=int, default=settings.n_jobs)
    parser.add_argument("names", nargs="*", help="preset names (default: all dataset presets)")
    args = parser.parse_args()
    generate_sample_data(args.out, seed=args.seed, names=args.names, n_jobs=args.n_jobs)
