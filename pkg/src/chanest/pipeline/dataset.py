"""Training datasets of (LS pilot observation, true channel) pairs.

File layout (little-endian)::

    b"CEDS0001"
    u16 len, pattern name | u16 len, channel name
    u32 record_count
    u32 rank, u32 extents  (input shape)
    u32 rank, u32 extents  (label shape)
    u8  float32 flag (1: values are f32, 0: f64)
    records: f64 snr_db, f64 doppler_hz, u64 seed, input values, label values
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from chanest._rng import keyed_seed
from chanest.channel import OfdmConfig, PilotPattern, PowerDelayProfile, simulate_frame
from chanest.channel.frame import FrameSample
from chanest.errors import ArtifactError, ParameterError
from chanest.estimators import observe

MAGIC = b"CEDS0001"
MAX_DOPPLER_HZ = 97.0


def draw_frame(pdp: PowerDelayProfile, pattern: PilotPattern, snr_db: float, record_seed: int,
               max_doppler_hz: float = MAX_DOPPLER_HZ, config: OfdmConfig = OfdmConfig()) -> FrameSample:
    """Frame for one record: Doppler uniform in ``[0, max_doppler_hz]``, everything keyed on ``record_seed``."""
    doppler_seed, frame_seed = np.random.SeedSequence(record_seed).spawn(2)
    doppler = np.random.default_rng(doppler_seed).uniform(0.0, max_doppler_hz)
    return simulate_frame(pdp, pattern, snr_db, doppler, frame_seed, config)


def pack_complex(grid: np.ndarray) -> np.ndarray:
    return np.stack([grid.real, grid.imag], axis=-1)


def snr_grid(snr_min: float, snr_max: float, step: float = 1.0) -> np.ndarray:
    if step <= 0 or snr_max < snr_min:
        raise ParameterError(f"invalid SNR grid {snr_min}:{step}:{snr_max}")
    n = int(np.floor((snr_max - snr_min) / step + 1e-9)) + 1
    return snr_min + step * np.arange(n)


@dataclass
class Dataset:
    pattern: str
    channel: str
    inputs: np.ndarray  # (R, P_sc, P_sym, 2)
    labels: np.ndarray  # (R, N_f, N_t, 2)
    snr_db: np.ndarray
    doppler_hz: np.ndarray
    seeds: np.ndarray  # uint64
    float32: bool = True

    def __len__(self):
        return len(self.inputs)

    @property
    def input_shape(self) -> tuple[int, ...]:
        return tuple(self.inputs.shape[1:])

    @property
    def label_shape(self) -> tuple[int, ...]:
        return tuple(self.labels.shape[1:])

    def _record_dtype(self):
        v = "<f4" if self.float32 else "<f8"
        return np.dtype([("snr_db", "<f8"), ("doppler_hz", "<f8"), ("seed", "<u8"),
                         ("input", v, self.input_shape), ("label", v, self.label_shape)])

    def to_bytes(self) -> bytes:
        head = [MAGIC]
        for text in (self.pattern, self.channel):
            raw = text.encode("utf-8")
            head.append(struct.pack("<H", len(raw)) + raw)
        head.append(struct.pack("<I", len(self)))
        for shape in (self.input_shape, self.label_shape):
            head.append(struct.pack(f"<I{len(shape)}I", len(shape), *shape))
        head.append(struct.pack("<B", int(self.float32)))
        rec = np.zeros(len(self), dtype=self._record_dtype())
        rec["snr_db"], rec["doppler_hz"], rec["seed"] = self.snr_db, self.doppler_hz, self.seeds
        rec["input"], rec["label"] = self.inputs, self.labels
        return b"".join(head) + rec.tobytes()

    def save(self, path) -> None:
        path = Path(path)
        try:
            path.write_bytes(self.to_bytes())
        except OSError as exc:
            raise ArtifactError(f"cannot write dataset {path}: {exc}") from None

    @classmethod
    def load(cls, path) -> Dataset:
        path = Path(path)
        try:
            buf = path.read_bytes()
        except OSError as exc:
            raise ArtifactError(f"cannot read dataset {path}: {exc}") from None
        if buf[:8] != MAGIC:
            raise ArtifactError(f"{path}: not a dataset file (bad magic)")
        try:
            pos = 8
            names = []
            for _ in range(2):
                (n,) = struct.unpack_from("<H", buf, pos)
                names.append(buf[pos + 2:pos + 2 + n].decode("utf-8"))
                pos += 2 + n
            (count,) = struct.unpack_from("<I", buf, pos)
            pos += 4
            shapes = []
            for _ in range(2):
                (rank,) = struct.unpack_from("<I", buf, pos)
                shapes.append(struct.unpack_from(f"<{rank}I", buf, pos + 4))
                pos += 4 + 4 * rank
            (f32,) = struct.unpack_from("<B", buf, pos)
            pos += 1
        except struct.error as exc:
            raise ArtifactError(f"{path}: truncated header ({exc})") from None
        shell = cls(names[0], names[1], np.zeros((0, *shapes[0])), np.zeros((0, *shapes[1])),
                    np.zeros(0), np.zeros(0), np.zeros(0, np.uint64), bool(f32))
        dtype = shell._record_dtype()
        if len(buf) - pos != count * dtype.itemsize:
            raise ArtifactError(f"{path}: expected {count} records, found {len(buf) - pos} payload bytes")
        rec = np.frombuffer(buf, dtype=dtype, count=count, offset=pos)
        return cls(names[0], names[1], rec["input"].copy(), rec["label"].copy(), rec["snr_db"].copy(),
                   rec["doppler_hz"].copy(), rec["seed"].copy(), bool(f32))


def generate_dataset(pdp: PowerDelayProfile, pattern: PilotPattern, snr_db_values, n_per_snr: int,
                     seed: int = 0, max_doppler_hz: float = MAX_DOPPLER_HZ,
                     config: OfdmConfig = OfdmConfig(), float32: bool = True) -> Dataset:
    """``n_per_snr`` records at every SNR, ordered by SNR.

    Record ``r`` is fully determined by ``(seed, r)`` and its SNR.
    """
    snr_db_values = np.asarray(snr_db_values, dtype=float)
    if n_per_snr < 1:
        raise ParameterError(f"n_per_snr must be >= 1, got {n_per_snr}")
    total = len(snr_db_values) * n_per_snr
    inputs = np.empty((total, *pattern.shape, 2))
    labels = np.empty((total, *config.grid_shape, 2))
    snrs, dopplers = np.empty(total), np.empty(total)
    seeds = np.empty(total, dtype=np.uint64)
    for r in range(total):
        snr = snr_db_values[r // n_per_snr]
        rs = keyed_seed(seed, r)
        frame = draw_frame(pdp, pattern, snr, rs, max_doppler_hz, config)
        inputs[r] = observe(frame.y, frame.x, pattern).packed_real()
        labels[r] = pack_complex(frame.h)
        snrs[r], dopplers[r], seeds[r] = snr, frame.doppler_hz, rs
    dtype = np.float32 if float32 else np.float64
    return Dataset(pattern.name, pdp.name, inputs.astype(dtype), labels.astype(dtype),
                   snrs, dopplers, seeds, float32)
