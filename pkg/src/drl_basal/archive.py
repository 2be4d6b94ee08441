"""Deterministic single-file container for JSON metadata plus numpy arrays.

Layout::

    b"DRLBASAL"  magic
    uint32 LE    format version
    uint64 LE    header length in bytes
    header       UTF-8 JSON (sorted keys): {"meta": ..., "arrays": [[name, dtype, shape], ...]}
    payload      arrays in header order, C-contiguous little-endian bytes

No timestamps or platform data are written, so identical content always
produces identical bytes.
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .exceptions import CheckpointError

MAGIC = b"DRLBASAL"
VERSION = 1


def dumps(meta: dict, arrays: dict) -> bytes:
    specs, chunks = [], []
    for name, arr in arrays.items():
        a = np.asarray(arr)
        dt = a.dtype.newbyteorder("<") if a.dtype.byteorder == ">" else a.dtype
        a = np.ascontiguousarray(a, dtype=dt)
        specs.append([name, a.dtype.str, list(a.shape)])
        chunks.append(a.tobytes())
    header = json.dumps({"meta": meta, "arrays": specs}, sort_keys=True,
                        separators=(",", ":")).encode("utf-8")
    return MAGIC + struct.pack("<IQ", VERSION, len(header)) + header + b"".join(chunks)


def loads(data: bytes):
    if data[:8] != MAGIC:
        raise CheckpointError("not a checkpoint file (bad magic)")
    version, hlen = struct.unpack("<IQ", data[8:20])
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    header = json.loads(data[20:20 + hlen].decode("utf-8"))
    pos = 20 + hlen
    arrays = {}
    for name, dtype, shape in header["arrays"]:
        dt = np.dtype(dtype)
        n = dt.itemsize * int(np.prod(shape, dtype=np.int64))
        if pos + n > len(data):
            raise CheckpointError(f"truncated payload for {name}")
        arrays[name] = np.frombuffer(data[pos:pos + n], dtype=dt).reshape(shape).copy()
        pos += n
    if pos != len(data):
        raise CheckpointError("trailing bytes after payload")
    return header["meta"], arrays


def save(path, meta: dict, arrays: dict) -> None:
    Path(path).write_bytes(dumps(meta, arrays))


def load(path):
    return loads(Path(path).read_bytes())
