"""Rayleigh tapped-delay-line fading with a Jakes Doppler spectrum."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from chanest._rng import as_rng
from chanest.channel.ofdm import OfdmConfig
from chanest.channel.pdp import PowerDelayProfile
from chanest.errors import ParameterError

N_SINUSOIDS = 64


@dataclass(frozen=True)
class ChannelRealization:
    """Per-OFDM-symbol complex tap gains, shape ``(n_symbols, n_taps)``."""

    tap_gains: np.ndarray
    pdp: PowerDelayProfile
    max_doppler_hz: float

    @property
    def n_symbols(self) -> int:
        return self.tap_gains.shape[0]

    def quantized_taps(self, config: OfdmConfig = OfdmConfig()) -> np.ndarray:
        """Sample-spaced impulse response per symbol ``(n_symbols, max_delay + 1)``.

        Taps that round onto the same sample are summed.
        """
        idx = self.pdp.quantized_delays(config.sample_rate)
        taps = np.zeros((self.n_symbols, idx.max() + 1), dtype=complex)
        np.add.at(taps, (slice(None), idx), self.tap_gains)
        return taps

    def max_delay_samples(self, config: OfdmConfig = OfdmConfig()) -> int:
        return int(self.pdp.quantized_delays(config.sample_rate).max())

    def exceeds_cp(self, config: OfdmConfig = OfdmConfig()) -> bool:
        return self.max_delay_samples(config) >= config.cp_length


def generate_channel(pdp: PowerDelayProfile, max_doppler_hz: float, n_symbols: int = 14,
                     seed=None, config: OfdmConfig = OfdmConfig()) -> ChannelRealization:
    """Draw one fading realization sampled once per OFDM symbol.

    Each tap is a sum of ``N_SINUSOIDS`` unit phasors with random arrival
    angles and phases, so the ensemble autocorrelation of a tap is
    ``P_l * J0(2 pi f_d tau)`` for any lag.
    """
    if max_doppler_hz < 0:
        raise ParameterError(f"max_doppler_hz must be >= 0, got {max_doppler_hz}")
    if n_symbols < 1:
        raise ParameterError(f"n_symbols must be >= 1, got {n_symbols}")
    rng = as_rng(seed)
    angles = rng.uniform(0.0, 2 * np.pi, size=(pdp.n_taps, N_SINUSOIDS))
    phases = rng.uniform(0.0, 2 * np.pi, size=(pdp.n_taps, N_SINUSOIDS))
    t = np.arange(n_symbols) * config.symbol_duration
    doppler = 2 * np.pi * max_doppler_hz * np.cos(angles)  # taps, sinusoids
    arg = t[:, None, None] * doppler[None] + phases[None]
    gains = np.exp(1j * arg).sum(axis=-1) / np.sqrt(N_SINUSOIDS)
    gains *= np.sqrt(pdp.powers)[None, :]
    return ChannelRealization(gains, pdp, float(max_doppler_hz))
