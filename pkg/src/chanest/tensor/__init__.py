"""Small reverse-mode autodiff core covering the layers the estimators use."""

from chanest.tensor.autograd import Tensor
from chanest.tensor.ops import (
    add_n,
    bilinear_resize,
    conv2d,
    interpolation_matrix,
    mse_loss,
    relu,
    same_padding,
    transposed_conv2d,
)
from chanest.tensor.optim import AdamState, LrSchedule, adam_step

__all__ = [
    "Tensor",
    "AdamState",
    "LrSchedule",
    "adam_step",
    "add_n",
    "bilinear_resize",
    "conv2d",
    "interpolation_matrix",
    "mse_loss",
    "relu",
    "same_padding",
    "transposed_conv2d",
]
