"""Paired Monte-Carlo comparison of channel estimators over an SNR grid."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from chanest._rng import keyed_seed
from chanest.channel import NoiseConfig, OfdmConfig, PilotPattern, PowerDelayProfile
from chanest.errors import ArtifactError, ParameterError
from chanest.estimators import PilotObservation, mse_metric, observe
from chanest.pipeline.dataset import MAX_DOPPLER_HZ, draw_frame

COLUMNS = ("estimator", "channel", "pattern", "snr_db", "mse", "frames")

Estimator = Callable[[PilotObservation, NoiseConfig], np.ndarray]


@dataclass(frozen=True)
class EvalRow:
    estimator: str
    channel: str
    pattern: str
    snr_db: float
    mse: float
    frames: int


@dataclass
class EvalReport:
    rows: list[EvalRow] = field(default_factory=list)

    def mse(self, estimator: str, snr_db: float) -> float:
        for r in self.rows:
            if r.estimator == estimator and r.snr_db == snr_db:
                return r.mse
        raise KeyError((estimator, snr_db))

    def curve(self, estimator: str) -> tuple[np.ndarray, np.ndarray]:
        rows = [r for r in self.rows if r.estimator == estimator]
        return np.array([r.snr_db for r in rows]), np.array([r.mse for r in rows])

    @property
    def estimators(self) -> list[str]:
        return list(dict.fromkeys(r.estimator for r in self.rows))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(COLUMNS)
        for r in self.rows:
            writer.writerow([r.estimator, r.channel, r.pattern, repr(r.snr_db), repr(r.mse), r.frames])
        return buf.getvalue()

    def save(self, path) -> None:
        try:
            Path(path).write_text(self.to_csv())
        except OSError as exc:
            raise ArtifactError(f"cannot write report {path}: {exc}") from None

    @classmethod
    def from_csv(cls, text: str) -> EvalReport:
        reader = csv.DictReader(io.StringIO(text))
        if tuple(reader.fieldnames or ()) != COLUMNS:
            raise ArtifactError(f"report columns must be {','.join(COLUMNS)}, got {reader.fieldnames}")
        return cls([EvalRow(d["estimator"], d["channel"], d["pattern"], float(d["snr_db"]),
                            float(d["mse"]), int(d["frames"])) for d in reader])


def _snr_key(snr_db: float) -> int:
    # centi-dB, shifted so the SeedSequence entropy stays non-negative; 0 marks the noise-free case
    if np.isinf(snr_db):
        return 0
    return int(round(snr_db * 100)) + 1_000_000


def evaluate(estimators: Sequence[Estimator], pdp: PowerDelayProfile, pattern: PilotPattern,
             snr_db_values: Iterable[float], n_frames: int, seed: int = 0,
             max_doppler_hz: float = MAX_DOPPLER_HZ, config: OfdmConfig = OfdmConfig()) -> EvalReport:
    """Mean per-frame MSE of every estimator at every SNR.

    All estimators see exactly the same frames. The frames at a given SNR
    depend only on ``seed`` and that SNR, so adding grid points never
    changes existing rows.

    Parameters
    ----------
    estimators
        Callables ``(obs, noise) -> (..., N_f, N_t)`` carrying a ``name`` attribute.
    """
    if n_frames < 1:
        raise ParameterError(f"n_frames must be >= 1, got {n_frames}")
    names = [e.name for e in estimators]
    if len(set(names)) != len(names):
        raise ParameterError(f"estimator names must be unique, got {names}")
    rows = []
    for snr in snr_db_values:
        snr = float(snr)
        frames = [draw_frame(pdp, pattern, snr, keyed_seed(seed, _snr_key(snr), i), max_doppler_hz, config)
                  for i in range(n_frames)]
        truth = np.stack([f.h for f in frames])
        obs = observe(np.stack([f.y for f in frames]), np.stack([f.x for f in frames]), pattern)
        noise = NoiseConfig(snr)
        for est in estimators:
            mse = float(np.mean(mse_metric(est(obs, noise), truth)))
            rows.append(EvalRow(est.name, pdp.name, pattern.name, snr, mse, n_frames))
    return EvalReport(rows)


def generalization_suite(estimators: Sequence[Estimator], pdps: Sequence[PowerDelayProfile], pattern: PilotPattern,
                         snr_db_values: Iterable[float], n_frames: int, seed: int = 0,
                         max_doppler_hz: float = MAX_DOPPLER_HZ,
                         config: OfdmConfig = OfdmConfig()) -> dict[str, EvalReport]:
    """One report per channel model, each evaluated with the same seed."""
    snr_db_values = list(snr_db_values)
    return {pdp.name: evaluate(estimators, pdp, pattern, snr_db_values, n_frames, seed, max_doppler_hz, config)
            for pdp in pdps}
