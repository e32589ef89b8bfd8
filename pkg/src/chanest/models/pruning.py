"""Global magnitude pruning of convolution kernels."""

from __future__ import annotations

import math
from typing import Mapping

import numpy as np

from chanest.errors import ParameterError


def prunable(name: str) -> bool:
    return name.endswith(".kernel")


def prune_magnitude(weights: Mapping[str, np.ndarray], rate: float):
    """Zero the ``floor(rate * W)`` smallest-magnitude kernel weights across all layers.

    Biases are never pruned.  Ties are broken by position (layer order, then
    row-major), so a higher rate always prunes a superset.

    Returns ``(pruned_weights, mask)`` where ``mask[name]`` is True for kept
    entries and covers every parameter.
    """
    if not 0 <= rate < 1:
        raise ParameterError(f"pruning rate must lie in [0, 1), got {rate}")
    names = [n for n in weights if prunable(n)]
    flat = np.concatenate([np.abs(np.ravel(weights[n])) for n in names]) if names else np.zeros(0)
    n_prune = math.floor(rate * flat.size)
    keep = np.ones(flat.size, dtype=bool)
    keep[np.argsort(flat, kind="stable")[:n_prune]] = False

    pruned, mask = {}, {}
    offset = 0
    for name, w in weights.items():
        w = np.asarray(w)
        if prunable(name):
            m = keep[offset:offset + w.size].reshape(w.shape)
            offset += w.size
            pruned[name] = np.where(m, w, 0).astype(w.dtype)
        else:
            m = np.ones(w.shape, dtype=bool)
            pruned[name] = w.copy()
        mask[name] = m
    return pruned, mask


def count_prunable(weights: Mapping[str, np.ndarray]) -> int:
    return int(sum(np.size(w) for n, w in weights.items() if prunable(n)))


def count_nonzero(weights: Mapping[str, np.ndarray]) -> int:
    return int(sum(np.count_nonzero(w) for w in weights.values()))
