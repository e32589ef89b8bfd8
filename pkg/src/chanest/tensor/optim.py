"""Adam optimizer and step-decay learning-rate schedule."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from chanest.errors import ParameterError, ShapeError


@dataclass(frozen=True)
class LrSchedule:
    """Piecewise-constant rate that drops by ``drop_factor`` every ``drop_period`` epochs."""

    initial_rate: float = 0.001
    drop_period: int = 20
    drop_factor: float = 0.5

    def __post_init__(self):
        if self.initial_rate <= 0:
            raise ParameterError(f"initial_rate must be positive, got {self.initial_rate}")
        if self.drop_period < 1:
            raise ParameterError(f"drop_period must be >= 1, got {self.drop_period}")
        if not 0 < self.drop_factor <= 1:
            raise ParameterError(f"drop_factor must lie in (0, 1], got {self.drop_factor}")

    def rate(self, epoch: int) -> float:
        """Learning rate for a 0-based epoch index."""
        return self.initial_rate * self.drop_factor ** (epoch // self.drop_period)


@dataclass(frozen=True)
class AdamState:
    first_moment: tuple[np.ndarray, ...]
    second_moment: tuple[np.ndarray, ...]
    step_count: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def zeros_like(cls, params: Sequence[np.ndarray], **hyper) -> AdamState:
        return cls(
            first_moment=tuple(np.zeros_like(p) for p in params),
            second_moment=tuple(np.zeros_like(p) for p in params),
            **hyper,
        )


def adam_step(params: Sequence[np.ndarray], grads: Sequence[np.ndarray], state: AdamState,
              rate: float, l2: float = 0.0) -> tuple[list[np.ndarray], AdamState]:
    """One bias-corrected Adam update with classic (coupled) L2 regularization.

    ``l2 * theta`` is added to each gradient before the moments are updated.
    Returns new parameter arrays and a new state; inputs are left untouched.
    """
    if rate <= 0:
        raise ParameterError(f"rate must be positive, got {rate}")
    if not len(params) == len(grads) == len(state.first_moment):
        raise ShapeError("parameter, gradient and moment lists differ in length",
                         (len(params),), (len(grads),), (len(state.first_moment),))
    b1, b2, eps = state.beta1, state.beta2, state.epsilon
    t = state.step_count + 1
    corr1 = 1.0 - b1 ** t
    corr2 = 1.0 - b2 ** t

    new_params, new_m, new_v = [], [], []
    for p, g, m, v in zip(params, grads, state.first_moment, state.second_moment):
        if p.shape != g.shape or p.shape != m.shape:
            raise ShapeError("adam_step operand shapes differ", p.shape, g.shape, m.shape)
        g = g + l2 * p if l2 else g
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * (g * g)
        m_hat = m / corr1
        v_hat = v / corr2
        new_params.append(p - rate * m_hat / (np.sqrt(v_hat) + eps))
        new_m.append(m)
        new_v.append(v)
    return new_params, replace(state, first_moment=tuple(new_m), second_moment=tuple(new_v), step_count=t)
