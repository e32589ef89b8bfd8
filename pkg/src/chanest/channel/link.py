"""Time-domain link: multipath convolution, AWGN, and the true frequency response."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from chanest._rng import as_rng
from chanest.channel.fading import ChannelRealization
from chanest.channel.ofdm import OfdmConfig
from chanest.errors import FramingError


class CyclicPrefixWarning(UserWarning):
    """The channel delay spread reaches past the cyclic prefix."""


@dataclass(frozen=True)
class NoiseConfig:
    """Noise level relative to the unit-power frequency-domain constellation.

    ``snr_db = inf`` disables noise.
    """

    snr_db: float
    sigma_x_sq: float = 1.0

    @property
    def sigma_n_sq(self) -> float:
        if math.isinf(self.snr_db) and self.snr_db > 0:
            return 0.0
        return self.sigma_x_sq * 10.0 ** (-self.snr_db / 10.0)

    @property
    def noiseless(self) -> bool:
        return self.sigma_n_sq == 0.0


def apply_channel(samples: np.ndarray, realization: ChannelRealization,
                  config: OfdmConfig = OfdmConfig()) -> np.ndarray:
    """Convolve each OFDM symbol block with that symbol's sampled impulse response.

    The tail of a block spills into the next block's cyclic prefix, as a
    physical linear convolution would.  A ``CyclicPrefixWarning`` is issued
    when the quantized delay spread is at least the CP length.
    """
    samples = np.asarray(samples, dtype=complex)
    if samples.shape[-1] != config.frame_samples:
        raise FramingError(f"expected {config.frame_samples} samples per frame, got {samples.shape[-1]}")
    if realization.n_symbols != config.n_symbols:
        raise FramingError(f"realization has {realization.n_symbols} symbols, frame has {config.n_symbols}")
    if realization.exceeds_cp(config):
        warnings.warn(
            f"{realization.pdp.name}: delay spread {realization.max_delay_samples(config)} samples "
            f">= CP {config.cp_length}; Y = H * X no longer holds",
            CyclicPrefixWarning,
            stacklevel=2,
        )
    taps = realization.quantized_taps(config)
    blocks = samples.reshape(*samples.shape[:-1], config.n_symbols, config.symbol_samples)
    out = np.zeros_like(samples)
    n = samples.shape[-1]
    for lag in range(taps.shape[1]):
        if not np.any(taps[:, lag]):
            continue
        contrib = (blocks * taps[:, lag, None]).reshape(samples.shape)
        out[..., lag:] += contrib[..., :n - lag]
    return out


def add_awgn(samples: np.ndarray, noise: NoiseConfig, seed=None) -> np.ndarray:
    """Add circular complex Gaussian noise of variance ``sigma_n_sq`` per sample.

    With the orthonormal FFT this is also the noise variance per subcarrier.
    """
    samples = np.asarray(samples, dtype=complex)
    if noise.noiseless:
        return samples.copy()
    rng = as_rng(seed)
    scale = np.sqrt(noise.sigma_n_sq / 2.0)
    w = rng.standard_normal((2, *samples.shape))
    return samples + scale * (w[0] + 1j * w[1])


def true_frequency_response(realization: ChannelRealization,
                            config: OfdmConfig = OfdmConfig()) -> np.ndarray:
    """Per-symbol DFT of the quantized taps on the used bins, shape ``(N_f, N_t)``."""
    taps = realization.quantized_taps(config)
    lags = np.arange(taps.shape[1])
    phase = np.exp(-2j * np.pi * np.outer(config.used_bins, lags) / config.fft_size)
    return phase @ taps.T
