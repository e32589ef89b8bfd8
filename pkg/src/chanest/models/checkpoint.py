"""Binary weight checkpoints.

Layout (little-endian)::

    b"CEWT0001"
    u32 layer_count
    per layer: u32 name_len, name (utf-8), u32 rank, u32 extents[rank], f32 data[prod(extents)]
    u8  has_mask
    if has_mask, per layer in the same order: packed bits (LSB first), ceil(size / 8) bytes
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Mapping

import numpy as np

from chanest.errors import ArtifactError

MAGIC = b"CEWT0001"


def save_checkpoint(path, weights: Mapping[str, np.ndarray], mask: Mapping[str, np.ndarray] | None = None) -> None:
    parts = [MAGIC, struct.pack("<I", len(weights))]
    for name, w in weights.items():
        w = np.asarray(w)
        encoded = name.encode("utf-8")
        parts.append(struct.pack("<I", len(encoded)) + encoded)
        parts.append(struct.pack(f"<I{w.ndim}I", w.ndim, *w.shape))
        parts.append(np.ascontiguousarray(w, dtype="<f4").tobytes())
    if mask is None:
        parts.append(b"\x00")
    else:
        parts.append(b"\x01")
        for name in weights:
            parts.append(np.packbits(np.asarray(mask[name], dtype=bool).ravel(), bitorder="little").tobytes())
    Path(path).write_bytes(b"".join(parts))


def load_checkpoint(path, dtype=np.float64):
    """Return ``(weights, mask_or_None)``; weights are cast to ``dtype``."""
    path = Path(path)
    if not path.is_file():
        raise ArtifactError(f"checkpoint not found: {path}")
    buf = path.read_bytes()
    if buf[:8] != MAGIC:
        raise ArtifactError(f"{path}: not a weight checkpoint (bad magic)")
    try:
        pos = 8
        (count,) = struct.unpack_from("<I", buf, pos)
        pos += 4
        weights = {}
        for _ in range(count):
            (n,) = struct.unpack_from("<I", buf, pos)
            pos += 4
            name = buf[pos:pos + n].decode("utf-8")
            pos += n
            (rank,) = struct.unpack_from("<I", buf, pos)
            pos += 4
            shape = struct.unpack_from(f"<{rank}I", buf, pos)
            pos += 4 * rank
            size = int(np.prod(shape))
            data = np.frombuffer(buf, dtype="<f4", count=size, offset=pos)
            pos += 4 * size
            weights[name] = data.reshape(shape).astype(dtype)
        has_mask = buf[pos]
        pos += 1
        mask = None
        if has_mask:
            mask = {}
            for name, w in weights.items():
                nbytes = (w.size + 7) // 8
                bits = np.unpackbits(np.frombuffer(buf, np.uint8, nbytes, pos), count=w.size, bitorder="little")
                pos += nbytes
                mask[name] = bits.astype(bool).reshape(w.shape)
    except (struct.error, ValueError, IndexError) as exc:
        raise ArtifactError(f"{path}: truncated or corrupt checkpoint ({exc})") from None
    if pos != len(buf):
        raise ArtifactError(f"{path}: {len(buf) - pos} trailing bytes")
    return weights, mask
