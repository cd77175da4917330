"""Flat binary and CSV serialization of grid fields.

Binary layout (little endian)::

    magic  b"CXKF"
    u16    format version
    u16    dim  (complex dimension, 0 for a one-dimensional profile)
    u32    m    (points per axis)
    u8     1 if complex samples else 0
    u8     number of trailing component axes k
    u32*k  trailing component sizes
    f8[]   row-major samples (real, imag interleaved when complex)
"""
import csv
import struct

import numpy as np

MAGIC = b"CXKF"
VERSION = 1


def save_field(path, values, dim, m):
    values = np.asarray(values)
    base = (m,) * (2 * dim) if dim else (m,)
    if values.shape[: len(base)] != base:
        raise ValueError(f"field shape {values.shape} does not start with grid shape {base}")
    trailing = values.shape[len(base):]
    is_complex = np.iscomplexobj(values)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<HHIBB", VERSION, dim, m, int(is_complex), len(trailing)))
        fh.write(struct.pack(f"<{len(trailing)}I", *trailing))
        data = values.astype(np.complex128 if is_complex else np.float64)
        fh.write(np.ascontiguousarray(data).view(np.float64).astype("<f8").tobytes())


def load_field(path):
    """Return ``(values, dim, m)``."""
    with open(path, "rb") as fh:
        if fh.read(4) != MAGIC:
            raise ValueError(f"{path}: not a field file")
        version, dim, m, is_complex, k = struct.unpack("<HHIBB", fh.read(10))
        if version != VERSION:
            raise ValueError(f"{path}: unsupported version {version}")
        trailing = struct.unpack(f"<{k}I", fh.read(4 * k))
        raw = np.frombuffer(fh.read(), dtype="<f8")
    base = (m,) * (2 * dim) if dim else (m,)
    shape = base + tuple(trailing)
    if is_complex:
        values = raw.view(np.complex128)
    else:
        values = raw.astype(np.float64)
    return values.reshape(shape).copy(), dim, m


def export_csv(path, columns):
    """Write a dict of equal-length 1-D arrays as CSV columns."""
    names = list(columns)
    arrays = [np.ravel(columns[k]) for k in names]
    if len({a.size for a in arrays}) > 1:
        raise ValueError("columns have different lengths")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for row in zip(*arrays):
            w.writerow([repr(float(x)) if np.isrealobj(x) else repr(complex(x)) for x in row])
