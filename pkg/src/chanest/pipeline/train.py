"""Minibatch Adam training of a network on a pilot/channel dataset."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from chanest._rng import child_seeds
from chanest.errors import NumericalError, ParameterError, ShapeError
from chanest.models import ModelSpec, check_weights, forward, infer, init_weights
from chanest.pipeline.dataset import Dataset
from chanest.tensor import AdamState, LrSchedule, Tensor, adam_step, mse_loss

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer and data-split settings. Defaults are the reference training setup."""

    max_epochs: int = 100
    schedule: LrSchedule = field(default_factory=LrSchedule)
    minibatch: int = 128
    l2: float = 0.001
    validation_fraction: float = 0.05
    seed: int = 0
    dtype: str = "float64"

    def __post_init__(self):
        if self.max_epochs < 1:
            raise ParameterError(f"max_epochs must be >= 1, got {self.max_epochs}")
        if self.minibatch < 1:
            raise ParameterError(f"minibatch must be >= 1, got {self.minibatch}")
        if self.l2 < 0:
            raise ParameterError(f"l2 must be non-negative, got {self.l2}")
        if not 0 <= self.validation_fraction < 1:
            raise ParameterError(f"validation_fraction must lie in [0, 1), got {self.validation_fraction}")
        if self.dtype not in ("float32", "float64"):
            raise ParameterError(f"dtype must be float32 or float64, got {self.dtype!r}")


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    rate: float
    train_mse: float
    val_mse: float


@dataclass
class TrainResult:
    weights: dict[str, np.ndarray]
    history: list[EpochStats]
    batch_losses: list[np.ndarray]  # per epoch, loss of every minibatch in order
    train_index: np.ndarray
    val_index: np.ndarray

    def loss_csv(self) -> str:
        lines = ["epoch,rate,train_mse,val_mse"]
        lines += [f"{s.epoch},{s.rate!r},{s.train_mse!r},{s.val_mse!r}" for s in self.history]
        return "\n".join(lines) + "\n"


def split_indices(n: int, fraction: float, seed) -> tuple[np.ndarray, np.ndarray]:
    """Disjoint (train, validation) index sets; validation holds ``round(fraction * n)`` records."""
    order = np.random.default_rng(seed).permutation(n)
    n_val = int(round(fraction * n))
    return np.sort(order[n_val:]), np.sort(order[:n_val])


def _validation_mse(spec, weights, data: Dataset, index: np.ndarray, batch: int) -> float:
    if len(index) == 0:
        return float("nan")
    pred = infer(spec, weights, data.inputs[index], batch_size=batch)
    return float(np.mean((pred - data.labels[index]) ** 2))


def train(spec: ModelSpec, data: Dataset, config: TrainConfig = TrainConfig(),
          initial_weights: Mapping[str, np.ndarray] | None = None,
          mask: Mapping[str, np.ndarray] | None = None,
          on_epoch: Callable[[EpochStats], None] | None = None) -> TrainResult:
    """Fit ``spec`` to ``data`` by minimizing the elementwise MSE.

    Parameters
    ----------
    initial_weights
        Starting point; defaults to a seeded He-uniform initialization.
    mask
        Boolean keep-mask per parameter. Masked entries are held at zero,
        which is how a pruned network is fine-tuned.
    on_epoch
        Called with the statistics of every finished epoch.

    Raises
    ------
    NumericalError
        If a minibatch loss is not finite; the message names the epoch and batch.
    """
    if data.input_shape != tuple(spec.in_shape) or data.label_shape != tuple(spec.out_shape):
        raise ShapeError(f"dataset does not fit {spec.name}", data.input_shape + data.label_shape,
                         tuple(spec.in_shape) + tuple(spec.out_shape))
    if len(data) < 2:
        raise ParameterError(f"need at least 2 records to train, got {len(data)}")
    dtype = np.dtype(config.dtype)
    split_seed, init_seed, shuffle_seed = child_seeds(config.seed, 3)
    train_idx, val_idx = split_indices(len(data), config.validation_fraction, split_seed)

    if initial_weights is None:
        weights = init_weights(spec, init_seed, dtype)
    else:
        check_weights(spec, initial_weights)
        weights = {k: np.asarray(v, dtype=dtype).copy() for k, v in initial_weights.items()}
    names = list(weights)
    keep = None
    if mask is not None:
        keep = [np.asarray(mask[n], dtype=bool) for n in names]
        for n, k in zip(names, keep):
            weights[n] = np.where(k, weights[n], 0).astype(dtype)

    inputs = data.inputs.astype(dtype, copy=False)
    labels = data.labels.astype(dtype, copy=False)
    state = AdamState.zeros_like([weights[n] for n in names])
    shuffle = np.random.default_rng(shuffle_seed)
    history, batch_losses = [], []
    for epoch in range(config.max_epochs):
        rate = config.schedule.rate(epoch)
        order = shuffle.permutation(train_idx)
        losses, sizes = [], []
        for b, start in enumerate(range(0, len(order), config.minibatch)):
            idx = np.sort(order[start:start + config.minibatch])
            params = {n: Tensor(weights[n], requires_grad=True) for n in names}
            loss = mse_loss(forward(spec, params, inputs[idx]), labels[idx])
            value = loss.item()
            if not np.isfinite(value):
                raise NumericalError(f"non-finite training loss {value} at epoch {epoch}, batch {b}")
            loss.backward()
            new, state = adam_step([weights[n] for n in names], [params[n].grad for n in names],
                                   state, rate, config.l2)
            if keep is not None:
                new = [np.where(k, p, 0).astype(dtype) for k, p in zip(keep, new)]
            weights = dict(zip(names, new))
            losses.append(value)
            sizes.append(len(idx))
        batch_losses.append(np.array(losses))
        val = _validation_mse(spec, weights, data, val_idx, max(config.minibatch, 256))
        stats = EpochStats(epoch, rate, float(np.average(losses, weights=sizes)), val)
        log.info("epoch %d rate %.2e train_mse %.6g val_mse %.6g", epoch, rate, stats.train_mse, stats.val_mse)
        history.append(stats)
        if on_epoch is not None:
            on_epoch(stats)
    return TrainResult(weights, history, batch_losses, train_idx, val_idx)
