"""Least-squares and linear-MMSE pilot channel estimators.

All estimators are linear maps applied along the pilot axes, so every
function here accepts a leading batch of frames.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from chanest._rng import as_rng, child_seeds
from chanest.channel.fading import generate_channel
from chanest.channel.link import NoiseConfig, true_frequency_response
from chanest.channel.ofdm import OfdmConfig, PilotPattern
from chanest.channel.pdp import PowerDelayProfile
from chanest.errors import NumericalError, ParameterError, ShapeError, UnsupportedPatternError

MAX_DOPPLER_HZ = 97.0


@dataclass(frozen=True)
class PilotObservation:
    """LS channel values at the pilots, packed ``(..., P_sc, P_sym)``."""

    h_ls: np.ndarray
    pattern: PilotPattern

    def __post_init__(self):
        if self.h_ls.shape[-2:] != self.pattern.shape:
            raise ShapeError("observation does not match its pilot pattern", self.h_ls.shape, self.pattern.shape)

    def packed_real(self) -> np.ndarray:
        """Real/imaginary parts as the last axis: ``(..., P_sc, P_sym, 2)``."""
        return np.stack([self.h_ls.real, self.h_ls.imag], axis=-1)


def ls_estimate(y_pilot: np.ndarray, x_pilot: np.ndarray, pattern: PilotPattern) -> PilotObservation:
    """Per-pilot division of received by transmitted values."""
    y_pilot, x_pilot = np.asarray(y_pilot), np.asarray(x_pilot)
    if np.any(x_pilot == 0):
        raise ZeroDivisionError("pilot symbol with value 0")
    return PilotObservation(y_pilot / x_pilot, pattern)


def observe(y: np.ndarray, x: np.ndarray, pattern: PilotPattern) -> PilotObservation:
    """LS observation from full received and transmitted grids."""
    return ls_estimate(pattern.extract(y), pattern.extract(x), pattern)


def linear_weights(known: np.ndarray, query: np.ndarray) -> np.ndarray:
    """Weights ``(len(query), len(known))`` of piecewise-linear interpolation.

    Queries outside ``[min(known), max(known)]`` take the nearest known value.
    """
    known = np.asarray(known, dtype=float)
    query = np.asarray(query, dtype=float)
    order = np.argsort(known)
    ks = known[order]
    w = np.zeros((len(query), len(known)))
    rows = np.arange(len(query))
    q = np.clip(query, ks[0], ks[-1])
    hi = np.clip(np.searchsorted(ks, q, side="right"), 1, len(ks) - 1)
    lo = hi - 1
    frac = (q - ks[lo]) / (ks[hi] - ks[lo])
    w[rows, order[lo]] = 1.0 - frac
    w[rows, order[hi]] += frac
    return w


def _check_interpolable(pattern: PilotPattern) -> None:
    if pattern.n_pilot_symbols < 2:
        raise UnsupportedPatternError(f"{pattern.name}: time interpolation needs >= 2 pilot symbols")
    if pattern.n_pilot_subcarriers < 2:
        raise UnsupportedPatternError(f"{pattern.name}: frequency interpolation needs >= 2 pilots per symbol")


def time_weights(pattern: PilotPattern, config: OfdmConfig) -> np.ndarray:
    return linear_weights(pattern.symbol_index, np.arange(config.n_symbols))


def interpolate_full(obs: PilotObservation, config: OfdmConfig = OfdmConfig()) -> np.ndarray:
    """Frequency-then-time linear interpolation of the LS values to the full grid."""
    pattern = obs.pattern
    _check_interpolable(pattern)
    sc = pattern.subcarrier_index
    all_sc = np.arange(config.n_subcarriers)
    freq = np.stack(
        [obs.h_ls[..., :, j] @ linear_weights(sc[:, j], all_sc).T for j in range(pattern.n_pilot_symbols)],
        axis=-1,
    )
    return freq @ time_weights(pattern, config).T


@dataclass(frozen=True)
class CorrelationSet:
    """Frequency correlation ``E{H H^H}`` of the channel at pilot symbols.

    The pilot-restricted matrices of the MMSE filter are slices of ``r_hh``.
    """

    r_hh: np.ndarray  # (N_f, N_f)
    channel: str = ""
    n_realizations: int = 0
    seed: int | None = None

    def r_hhp(self, pilot_subcarriers: np.ndarray) -> np.ndarray:
        return self.r_hh[:, pilot_subcarriers]

    def r_hphp(self, pilot_subcarriers: np.ndarray) -> np.ndarray:
        return self.r_hh[np.ix_(pilot_subcarriers, pilot_subcarriers)]

    def save(self, path) -> None:
        np.savez(path, r_hh=self.r_hh, channel=self.channel, n_realizations=self.n_realizations,
                 seed=-1 if self.seed is None else self.seed)

    @classmethod
    def load(cls, path) -> CorrelationSet:
        with np.load(path) as z:
            seed = int(z["seed"])
            return cls(z["r_hh"], str(z["channel"]), int(z["n_realizations"]), None if seed < 0 else seed)


def estimate_correlations(pdp: PowerDelayProfile, pattern: PilotPattern, n_realizations: int = 10_000,
                          seed=None, config: OfdmConfig = OfdmConfig(),
                          max_doppler_hz: float = MAX_DOPPLER_HZ) -> CorrelationSet:
    """Ensemble average of ``H H^H`` over noise-free channel draws.

    ``H`` is the true response at every pilot symbol position of ``pattern``,
    so the average also runs over those positions.
    """
    if n_realizations < 100:
        raise ParameterError(f"need at least 100 realizations, got {n_realizations}")
    rng = as_rng(seed)
    acc = np.zeros((config.n_subcarriers, config.n_subcarriers), dtype=complex)
    for ch_seed in child_seeds(int(rng.integers(2**63)), n_realizations):
        ch_rng = np.random.default_rng(ch_seed)
        doppler = ch_rng.uniform(0.0, max_doppler_hz)
        h = true_frequency_response(generate_channel(pdp, doppler, config.n_symbols, ch_rng, config), config)
        hp = h[:, pattern.symbol_index]
        acc += hp @ hp.conj().T
    r = acc / (n_realizations * pattern.n_pilot_symbols)
    r = 0.5 * (r + r.conj().T)
    return CorrelationSet(r, pdp.name, n_realizations, seed if isinstance(seed, int) else None)


def mmse_filter(r_hhp: np.ndarray, r_hphp: np.ndarray, noise_ratio: float) -> np.ndarray:
    """``R_HHp (R_HpHp + noise_ratio * I)^-1``."""
    reg = r_hphp + noise_ratio * np.eye(r_hphp.shape[0])
    if np.linalg.cond(reg) > 1e12:
        raise NumericalError("regularized pilot autocorrelation is singular")
    # W = R_HHp reg^-1  <=>  reg^H W^H = R_HHp^H, and reg is Hermitian
    return np.linalg.solve(reg, r_hhp.conj().T).conj().T


def mmse_estimate(obs: PilotObservation, corr: CorrelationSet, noise: NoiseConfig,
                  config: OfdmConfig = OfdmConfig()) -> np.ndarray:
    """Linear MMSE in frequency at each pilot symbol, then linear in time."""
    pattern = obs.pattern
    if pattern.n_pilot_symbols < 2:
        raise UnsupportedPatternError(f"{pattern.name}: time interpolation needs >= 2 pilot symbols")
    if corr.r_hh.shape != (config.n_subcarriers, config.n_subcarriers):
        raise ShapeError("correlation set does not match the grid", corr.r_hh.shape, config.grid_shape)
    ratio = noise.sigma_n_sq / noise.sigma_x_sq
    sc = pattern.subcarrier_index
    freq = np.stack(
        [obs.h_ls[..., :, j] @ mmse_filter(corr.r_hhp(sc[:, j]), corr.r_hphp(sc[:, j]), ratio).T
         for j in range(pattern.n_pilot_symbols)],
        axis=-1,
    )
    return freq @ time_weights(pattern, config).T


def mse_metric(estimate: np.ndarray, truth: np.ndarray):
    """Mean squared error over the last two (grid) axes; one value per frame."""
    estimate, truth = np.asarray(estimate), np.asarray(truth)
    if estimate.shape != truth.shape:
        raise ShapeError("estimate and truth differ in shape", estimate.shape, truth.shape)
    err = np.abs(estimate - truth) ** 2
    return err.mean(axis=(-2, -1))


@dataclass(frozen=True)
class LSEstimator:
    name: str = "ls"
    config: OfdmConfig = field(default_factory=OfdmConfig)

    def __call__(self, obs: PilotObservation, noise: NoiseConfig) -> np.ndarray:
        return interpolate_full(obs, self.config)


@dataclass(frozen=True)
class MMSEEstimator:
    corr: CorrelationSet
    name: str = "mmse"
    config: OfdmConfig = field(default_factory=OfdmConfig)

    def __call__(self, obs: PilotObservation, noise: NoiseConfig) -> np.ndarray:
        return mmse_estimate(obs, self.corr, noise, self.config)
