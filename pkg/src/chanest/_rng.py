"""Seed handling shared by every stochastic function."""

import numpy as np


def as_rng(seed) -> np.random.Generator:
    """Accept an int, SeedSequence, Generator or None and return a Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def child_seeds(seed, n: int) -> list[np.random.SeedSequence]:
    """``n`` independent child sequences of ``seed`` (counter-based split)."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return ss.spawn(n)


def keyed_seed(master: int, *keys: int) -> int:
    """Deterministic 64-bit seed for ``(master, *keys)``."""
    ss = np.random.SeedSequence([int(master), *(int(k) for k in keys)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])
