"""One complete transmission: channel draw, frame, link and ground truth."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from chanest._rng import child_seeds
from chanest.channel.fading import generate_channel
from chanest.channel.link import NoiseConfig, add_awgn, apply_channel, true_frequency_response
from chanest.channel.ofdm import OfdmConfig, PilotPattern, build_frame, ofdm_demodulate, ofdm_modulate
from chanest.channel.pdp import PowerDelayProfile


@dataclass(frozen=True)
class FrameSample:
    h: np.ndarray  # true response, (N_f, N_t)
    x: np.ndarray  # transmitted grid
    y: np.ndarray  # received grid
    snr_db: float
    doppler_hz: float


def simulate_frame(pdp: PowerDelayProfile, pattern: PilotPattern, snr_db: float, doppler_hz: float,
                   seed, config: OfdmConfig = OfdmConfig()) -> FrameSample:
    """Run the link for one frame.

    The channel, the transmitted symbols and the noise use independent
    streams split from ``seed``, so changing ``snr_db`` leaves ``h`` and ``x``
    bit-identical.
    """
    ch_seed, tx_seed, noise_seed = child_seeds(seed, 3)
    realization = generate_channel(pdp, doppler_hz, config.n_symbols, seed=ch_seed, config=config)
    x = build_frame(pattern, config, seed=tx_seed)
    rx = apply_channel(ofdm_modulate(x, config), realization, config)
    rx = add_awgn(rx, NoiseConfig(snr_db), seed=noise_seed)
    return FrameSample(
        h=true_frequency_response(realization, config),
        x=x,
        y=ofdm_demodulate(rx, config),
        snr_db=float(snr_db),
        doppler_hz=float(doppler_hz),
    )
