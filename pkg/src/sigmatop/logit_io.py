"""Binary logit file format and per-row target CSVs.

Layout: 16-byte little-endian header (magic "QRTL", u32 version=1, u32 B,
u32 V) followed by B*V float32 values row-major. Masked outputs use the same
format; -inf is representable on disk but rejected by input validation.
"""
from __future__ import annotations

import csv
import struct

import numpy as np

from .core import LogitBatch, TruncTargets

MAGIC = b"QRTL"
VERSION = 1
_HEADER = struct.Struct("<4sIII")


def write_logits(batch: LogitBatch, path) -> None:
    values = np.ascontiguousarray(batch.values, dtype="<f4")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, batch.batch_size,
                              batch.vocab_size))
        fh.write(values.tobytes())


def read_logits(path) -> LogitBatch:
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) != _HEADER.size:
            raise ValueError(f"{path}: truncated header")
        magic, version, b, v = _HEADER.unpack(header)
        if magic != MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}")
        if version != VERSION:
            raise ValueError(f"{path}: unsupported version {version}")
        data = fh.read()
    expected = b * v * 4
    if len(data) != expected:
        raise ValueError(f"{path}: expected {expected} payload bytes, "
                         f"got {len(data)}")
    values = np.frombuffer(data, dtype="<f4").reshape(b, v)
    return LogitBatch(values.copy())


def write_targets_csv(targets: TruncTargets, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["row", "k", "p"])
        for i in range(targets.k.shape[0]):
            w.writerow([i, int(targets.k[i]), repr(float(targets.p[i]))])


def read_targets_csv(path) -> TruncTargets:
    """Rows must be 0..B-1 in order under a `row,k,p` header."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip() for c in rows[0]] != ["row", "k", "p"]:
        raise ValueError(f"{path}: expected header 'row,k,p'")
    ks, ps = [], []
    for i, rec in enumerate(rows[1:]):
        if len(rec) != 3:
            raise ValueError(f"{path}: line {i + 2}: expected 3 columns")
        if int(rec[0]) != i:
            raise ValueError(f"{path}: line {i + 2}: rows must be "
                             f"consecutive from 0, got {rec[0]}")
        ks.append(int(rec[1]))
        ps.append(float(rec[2]))
    return TruncTargets(np.array(ks, dtype=np.int64),
                        np.array(ps, dtype=np.float64))
