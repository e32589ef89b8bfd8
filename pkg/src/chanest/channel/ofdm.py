"""OFDM numerology, pilot patterns, frame construction and (de)modulation."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from chanest._rng import as_rng
from chanest.errors import FramingError, ParameterError, ShapeError


@dataclass(frozen=True)
class OfdmConfig:
    n_subcarriers: int = 72
    n_symbols: int = 14
    fft_size: int = 128
    cp_length: int = 16
    subcarrier_spacing: float = 15e3
    carrier_frequency: float = 2.1e9

    def __post_init__(self):
        if self.n_subcarriers > self.fft_size - 1:
            raise ParameterError("n_subcarriers must leave the DC bin free inside the FFT")
        if self.n_subcarriers % 2:
            raise ParameterError("n_subcarriers must be even (split around DC)")

    @property
    def sample_rate(self) -> float:
        return self.fft_size * self.subcarrier_spacing

    @property
    def bandwidth(self) -> float:
        return self.n_subcarriers * self.subcarrier_spacing

    @property
    def symbol_samples(self) -> int:
        return self.fft_size + self.cp_length

    @property
    def symbol_duration(self) -> float:
        return self.symbol_samples / self.sample_rate

    @property
    def frame_samples(self) -> int:
        return self.n_symbols * self.symbol_samples

    @property
    def grid_shape(self) -> tuple[int, int]:
        return self.n_subcarriers, self.n_symbols

    @cached_property
    def used_bins(self) -> np.ndarray:
        """FFT bin of each used subcarrier, lowest frequency first, DC skipped."""
        half = self.n_subcarriers // 2
        k = np.concatenate([np.arange(-half, 0), np.arange(1, half + 1)])
        return k % self.fft_size


@dataclass(frozen=True)
class PilotPattern:
    """Pilot positions, 1-based as in resource-grid diagrams.

    ``pilot_subcarriers[i]`` lists the pilot subcarriers of the OFDM symbol
    ``pilot_symbols[i]``.  Every pilot symbol carries the same number of pilots
    so the LS observation packs into a dense ``(P_sc, P_sym)`` array.
    """

    name: str
    pilot_symbols: tuple[int, ...]
    pilot_subcarriers: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if len(self.pilot_symbols) != len(self.pilot_subcarriers):
            raise ParameterError("one subcarrier list is required per pilot symbol")
        counts = {len(sc) for sc in self.pilot_subcarriers}
        if len(counts) != 1:
            raise ParameterError("all pilot symbols must carry the same number of pilots")
        for sc in self.pilot_subcarriers:
            if len(set(sc)) != len(sc):
                raise ParameterError("duplicate pilot subcarrier within a symbol")

    @property
    def n_pilot_symbols(self) -> int:
        return len(self.pilot_symbols)

    @property
    def n_pilot_subcarriers(self) -> int:
        return len(self.pilot_subcarriers[0])

    @property
    def n_pilots(self) -> int:
        return self.n_pilot_symbols * self.n_pilot_subcarriers

    @property
    def shape(self) -> tuple[int, int]:
        return self.n_pilot_subcarriers, self.n_pilot_symbols

    @property
    def symbol_index(self) -> np.ndarray:
        return np.asarray(self.pilot_symbols) - 1

    @property
    def subcarrier_index(self) -> np.ndarray:
        """(P_sc, P_sym) zero-based subcarrier of each packed pilot."""
        return np.asarray(self.pilot_subcarriers).T - 1

    def validate(self, config: OfdmConfig) -> None:
        if min(self.pilot_symbols) < 1 or max(self.pilot_symbols) > config.n_symbols:
            raise ParameterError(f"{self.name}: pilot symbol outside 1..{config.n_symbols}")
        sc = np.asarray(self.pilot_subcarriers)
        if sc.min() < 1 or sc.max() > config.n_subcarriers:
            raise ParameterError(f"{self.name}: pilot subcarrier outside 1..{config.n_subcarriers}")

    def extract(self, grid: np.ndarray) -> np.ndarray:
        """Gather pilot-position entries of ``(..., N_f, N_t)`` into ``(..., P_sc, P_sym)``."""
        return grid[..., self.subcarrier_index, self.symbol_index[None, :]]

    def mask(self, config: OfdmConfig) -> np.ndarray:
        m = np.zeros(config.grid_shape, dtype=bool)
        m[self.subcarrier_index, self.symbol_index[None, :]] = True
        return m


def _spaced(start: int, step: int, count: int) -> tuple[int, ...]:
    return tuple(range(start, start + step * count, step))


DEFAULT_PATTERN = PilotPattern(
    "default",
    pilot_symbols=(1, 13),
    pilot_subcarriers=(_spaced(1, 3, 24), _spaced(2, 3, 24)),
)

ALTERNATE_PATTERN = PilotPattern(
    "alternate",
    pilot_symbols=(1, 5, 9, 13),
    pilot_subcarriers=tuple(_spaced(s, 6, 12) for s in (1, 2, 4, 6)),
)

_PATTERNS = {p.name: p for p in (DEFAULT_PATTERN, ALTERNATE_PATTERN)}


def pilot_pattern(name: str) -> PilotPattern:
    try:
        return _PATTERNS[name.lower()]
    except (KeyError, AttributeError):
        raise ParameterError(f"unknown pilot pattern {name!r}; valid names: {', '.join(_PATTERNS)}") from None


def qpsk(rng: np.random.Generator, size) -> np.ndarray:
    """Unit-power QPSK symbols."""
    bits = rng.integers(0, 2, size=(2, *np.atleast_1d(size)))
    return ((1 - 2 * bits[0]) + 1j * (1 - 2 * bits[1])) / np.sqrt(2)


def build_frame(pattern: PilotPattern, config: OfdmConfig = OfdmConfig(), seed=None) -> np.ndarray:
    """Transmitted grid X: QPSK on data symbols, QPSK pilots and zeros on pilot symbols."""
    pattern.validate(config)
    rng = as_rng(seed)
    x = qpsk(rng, config.grid_shape).reshape(config.grid_shape)
    x[:, pattern.symbol_index] = 0
    pilots = qpsk(rng, pattern.shape).reshape(pattern.shape)
    x[pattern.subcarrier_index, pattern.symbol_index[None, :]] = pilots
    return x


def ofdm_modulate(grid: np.ndarray, config: OfdmConfig = OfdmConfig()) -> np.ndarray:
    """Map ``(..., N_f, N_t)`` grids to CP-prefixed time samples ``(..., N_t * (fft + cp))``."""
    grid = np.asarray(grid)
    if grid.shape[-2:] != config.grid_shape:
        raise ShapeError("grid does not match the OFDM configuration", grid.shape, config.grid_shape)
    lead = grid.shape[:-2]
    freq = np.zeros((*lead, config.n_symbols, config.fft_size), dtype=complex)
    freq[..., config.used_bins] = np.swapaxes(grid, -1, -2)
    time = np.fft.ifft(freq, axis=-1, norm="ortho")
    with_cp = np.concatenate([time[..., -config.cp_length:], time], axis=-1)
    return with_cp.reshape(*lead, config.frame_samples)


def ofdm_demodulate(samples: np.ndarray, config: OfdmConfig = OfdmConfig()) -> np.ndarray:
    """Drop each CP, FFT, and keep the used bins: ``(..., N_t * (fft + cp))`` -> ``(..., N_f, N_t)``."""
    samples = np.asarray(samples)
    if samples.shape[-1] != config.frame_samples:
        raise FramingError(f"expected {config.frame_samples} samples per frame, got {samples.shape[-1]}")
    lead = samples.shape[:-1]
    blocks = samples.reshape(*lead, config.n_symbols, config.symbol_samples)[..., config.cp_length:]
    freq = np.fft.fft(blocks, axis=-1, norm="ortho")
    return np.swapaxes(freq[..., config.used_bins], -1, -2)
