"""
Binary sample dumps.

Layout, all little-endian::

    offset  size  field
    0       4     magic: b"IMDR" (real float64) or b"IMDC" (complex, re/im interleaved)
    4       4     uint32 sample count
    8       8     float64 sample rate (GSa/s; symbol rate in GBd for weight dumps)
    16      8*n   float64 samples (16*n for complex)

Each dump has a plain-text sidecar ``<file>.meta.txt`` of ``key = value``
lines.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

__all__ = ["HEADER", "write_samples", "read_samples", "read_meta"]

HEADER = struct.Struct("<4sId")
MAGIC_REAL = b"IMDR"
MAGIC_COMPLEX = b"IMDC"


def _meta_path(path: Path) -> Path:
    return path.with_name(path.name + ".meta.txt")


def write_samples(path, samples, sample_rate: float, meta=None) -> Path:
    path = Path(path)
    x = np.asarray(samples)
    cplx = np.iscomplexobj(x)
    data = x.astype("<c16" if cplx else "<f8")
    with open(path, "wb") as fh:
        fh.write(HEADER.pack(MAGIC_COMPLEX if cplx else MAGIC_REAL, data.size, float(sample_rate)))
        fh.write(data.tobytes())
    lines = {
        "format": "imddsim-samples",
        "dtype": "complex128" if cplx else "float64",
        "byte_order": "little",
        "count": data.size,
        "sample_rate": repr(float(sample_rate)),
    }
    lines.update(meta or {})
    _meta_path(path).write_text("".join(f"{k} = {v}\n" for k, v in lines.items()))
    return path


def read_samples(path):
    """Return ``(samples, sample_rate)``."""
    raw = Path(path).read_bytes()
    magic, count, rate = HEADER.unpack_from(raw)
    if magic == MAGIC_REAL:
        dt = "<f8"
    elif magic == MAGIC_COMPLEX:
        dt = "<c16"
    else:
        raise ValueError(f"{path}: not a sample dump (magic {magic!r})")
    x = np.frombuffer(raw, dtype=dt, count=count, offset=HEADER.size)
    return x.astype(dt[1:]), rate


def read_meta(path) -> dict:
    out = {}
    for line in _meta_path(Path(path)).read_text().splitlines():
        if "=" in line:
            k, v = line.split("=", 1)
            out[k.strip()] = v.strip()
    return out
