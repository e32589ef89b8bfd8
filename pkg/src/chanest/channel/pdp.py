"""3GPP extended power-delay profiles (TS 36.104 Annex B.2)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from chanest.errors import ParameterError


@dataclass(frozen=True)
class PowerDelayProfile:
    """Tap table of a tapped-delay-line channel.

    ``tap_powers_db`` keeps the table as published; ``powers`` is the linear
    power of each tap normalized to unit total.
    """

    name: str
    tap_delays: tuple[float, ...]  # seconds
    tap_powers_db: tuple[float, ...]

    def __post_init__(self):
        delays = np.asarray(self.tap_delays, dtype=float)
        if len(self.tap_delays) != len(self.tap_powers_db) or not self.tap_delays:
            raise ParameterError(f"{self.name}: delays and powers must be non-empty and equally long")
        if delays[0] != 0 or np.any(np.diff(delays) <= 0):
            raise ParameterError(f"{self.name}: delays must start at 0 and strictly increase")

    @property
    def n_taps(self) -> int:
        return len(self.tap_delays)

    @property
    def delays(self) -> np.ndarray:
        return np.asarray(self.tap_delays, dtype=float)

    @property
    def powers(self) -> np.ndarray:
        lin = 10.0 ** (np.asarray(self.tap_powers_db, dtype=float) / 10.0)
        return lin / lin.sum()

    def quantized_delays(self, sample_rate: float) -> np.ndarray:
        """Tap delays rounded to the nearest sample index."""
        return np.rint(self.delays * sample_rate).astype(int)


def _ns(*values):
    return tuple(v * 1e-9 for v in values)


_REGISTRY = {
    "EPA": PowerDelayProfile(
        "EPA",
        _ns(0, 30, 70, 90, 110, 190, 410),
        (0.0, -1.0, -2.0, -3.0, -8.0, -17.2, -20.8),
    ),
    "EVA": PowerDelayProfile(
        "EVA",
        _ns(0, 30, 150, 310, 370, 710, 1090, 1730, 2510),
        (0.0, -1.5, -1.4, -3.6, -0.6, -9.1, -7.0, -12.0, -16.9),
    ),
    "ETU": PowerDelayProfile(
        "ETU",
        _ns(0, 50, 120, 200, 230, 500, 1600, 2300, 5000),
        (-1.0, -1.0, -1.0, 0.0, 0.0, 0.0, -3.0, -5.0, -7.0),
    ),
}

PDP_NAMES = tuple(_REGISTRY)


def standard_pdp(name: str) -> PowerDelayProfile:
    try:
        return _REGISTRY[name.upper()]
    except (KeyError, AttributeError):
        raise ParameterError(f"unknown channel model {name!r}; valid names: {', '.join(PDP_NAMES)}") from None


def dump_pdp_table(profiles) -> str:
    """Serialize profiles as ``name delays_ns powers_db`` lines."""
    lines = ["# name delays_ns powers_db"]
    for p in profiles:
        delays = ",".join(f"{d * 1e9:g}" for d in p.tap_delays)
        powers = ",".join(f"{x:g}" for x in p.tap_powers_db)
        lines.append(f"{p.name} {delays} {powers}")
    return "\n".join(lines) + "\n"


def load_pdp_table(text: str) -> dict[str, PowerDelayProfile]:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ParameterError(f"line {lineno}: expected 'name delays_ns powers_db', got {raw!r}")
        name, delays, powers = parts
        try:
            d = tuple(float(v) * 1e-9 for v in delays.split(","))
            p = tuple(float(v) for v in powers.split(","))
        except ValueError as exc:
            raise ParameterError(f"line {lineno}: {exc}") from None
        out[name] = PowerDelayProfile(name, d, p)
    return out
