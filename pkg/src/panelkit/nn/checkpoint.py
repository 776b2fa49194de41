"""Binary checkpoint files.

Layout (all integers little-endian):

    magic            4 bytes   b"PTCK"
    record count     uint32
    per record:
        name length  uint32
        name         UTF-8 bytes
        rank         uint32
        dims         rank x uint32
        payload      prod(dims) x float64 little-endian
"""

from __future__ import annotations

import struct

import numpy as np

from ..errors import CheckpointMismatch

MAGIC = b"PTCK"


def save_arrays(path, arrays):
    """Write an ordered mapping of name -> float64 ndarray."""
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(arrays)))
        for name in sorted(arrays):
            # note: ascontiguousarray would promote 0-d arrays to shape (1,)
            arr = np.asarray(arrays[name], dtype=np.float64)
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<I", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<I", arr.ndim))
            for d in arr.shape:
                fh.write(struct.pack("<I", d))
            fh.write(arr.astype("<f8").tobytes())


def load_arrays(path):
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != MAGIC:
        raise CheckpointMismatch(f"bad magic in {path}")
    off = 4
    (count,) = struct.unpack_from("<I", blob, off)
    off += 4
    out = {}
    try:
        for _ in range(count):
            (nlen,) = struct.unpack_from("<I", blob, off)
            off += 4
            name = blob[off : off + nlen].decode("utf-8")
            off += nlen
            (rank,) = struct.unpack_from("<I", blob, off)
            off += 4
            dims = struct.unpack_from(f"<{rank}I", blob, off)
            off += 4 * rank
            n = int(np.prod(dims)) if rank else 1
            arr = np.frombuffer(blob, dtype="<f8", count=n, offset=off).reshape(dims)
            off += 8 * n
            out[name] = arr.astype(np.float64)
    except (struct.error, ValueError) as exc:
        raise CheckpointMismatch(f"truncated checkpoint {path}: {exc}") from exc
    return out
