"""3GPP fading channels, OFDM framing and the baseband link."""

from chanest.channel.fading import ChannelRealization, generate_channel
from chanest.channel.frame import FrameSample, simulate_frame
from chanest.channel.link import (
    CyclicPrefixWarning,
    NoiseConfig,
    add_awgn,
    apply_channel,
    true_frequency_response,
)
from chanest.channel.ofdm import (
    ALTERNATE_PATTERN,
    DEFAULT_PATTERN,
    OfdmConfig,
    PilotPattern,
    build_frame,
    ofdm_demodulate,
    ofdm_modulate,
    pilot_pattern,
)
from chanest.channel.pdp import (
    PDP_NAMES,
    PowerDelayProfile,
    dump_pdp_table,
    load_pdp_table,
    standard_pdp,
)

__all__ = [
    "ALTERNATE_PATTERN",
    "DEFAULT_PATTERN",
    "PDP_NAMES",
    "ChannelRealization",
    "CyclicPrefixWarning",
    "FrameSample",
    "NoiseConfig",
    "OfdmConfig",
    "PilotPattern",
    "PowerDelayProfile",
    "add_awgn",
    "apply_channel",
    "build_frame",
    "dump_pdp_table",
    "generate_channel",
    "load_pdp_table",
    "ofdm_demodulate",
    "ofdm_modulate",
    "pilot_pattern",
    "simulate_frame",
    "standard_pdp",
    "true_frequency_response",
]
