"""Dataset generation, training and evaluation."""

from chanest.pipeline.dataset import Dataset, draw_frame, generate_dataset, pack_complex, snr_grid
from chanest.pipeline.evaluate import EvalReport, EvalRow, evaluate, generalization_suite
from chanest.pipeline.train import EpochStats, TrainConfig, TrainResult, split_indices, train

__all__ = [
    "Dataset",
    "EpochStats",
    "EvalReport",
    "EvalRow",
    "TrainConfig",
    "TrainResult",
    "draw_frame",
    "evaluate",
    "generalization_suite",
    "generate_dataset",
    "pack_complex",
    "snr_grid",
    "split_indices",
    "train",
]
