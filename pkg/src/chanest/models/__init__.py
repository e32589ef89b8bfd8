"""Neural channel estimators built on the tensor core."""

from dataclasses import dataclass

import numpy as np

from chanest.models.builders import (
    OUT_SHAPE,
    build_interpolation_resnet,
    build_model,
    build_reesnet,
    reesnet_stride,
)
from chanest.models.checkpoint import load_checkpoint, save_checkpoint
from chanest.models.graph import (
    Layer,
    ModelSpec,
    check_weights,
    count_parameters,
    forward,
    infer,
    init_weights,
    to_complex,
    zero_weights,
)
from chanest.models.pruning import count_nonzero, count_prunable, prune_magnitude


@dataclass(frozen=True)
class NeuralEstimator:
    """Adapter giving a trained network the estimator call signature."""

    spec: ModelSpec
    weights: dict
    name: str = "nn"

    def __call__(self, obs, noise=None) -> np.ndarray:
        return to_complex(infer(self.spec, self.weights, obs.packed_real()))


__all__ = [
    "OUT_SHAPE",
    "Layer",
    "ModelSpec",
    "NeuralEstimator",
    "build_interpolation_resnet",
    "build_model",
    "build_reesnet",
    "check_weights",
    "count_nonzero",
    "count_parameters",
    "count_prunable",
    "forward",
    "infer",
    "init_weights",
    "load_checkpoint",
    "prune_magnitude",
    "reesnet_stride",
    "save_checkpoint",
    "to_complex",
    "zero_weights",
]
