"""Synthetic data, metrics, file formats and the Picard-O / FastICA benchmark."""

from .data import DatasetSpec, gen_synthetic
from .metrics import amari_index
from .runner import RunRecord, run_benchmark

__all__ = ["DatasetSpec", "RunRecord", "amari_index", "gen_synthetic", "run_benchmark"]
