"""Named-array checkpoint files: text header plus binary payload.

Layout (header is ASCII, one declaration per line)::

    STGIB-CKPT 1
    meta <nbytes>
    <meta JSON bytes>
    arrays <count>
    <name> <dtype> <dim0,dim1,...> <nbytes>
    ...
    DATA
    <raw little-endian array bytes, concatenated in declaration order>

``meta`` is an arbitrary JSON document (model configuration, build
dimensions, provenance). Arrays are stored C-contiguous.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import CheckpointError

MAGIC = b"STGIB-CKPT"
VERSION = 1


def save_checkpoint(path, arrays: dict[str, np.ndarray], meta: dict | None = None):
    """Write named arrays (and an optional JSON meta block) to ``path``."""
    path = Path(path)
    meta_bytes = json.dumps(meta or {}).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC + b" %d\n" % VERSION)
        fh.write(b"meta %d\n" % len(meta_bytes))
        fh.write(meta_bytes + b"\n")
        fh.write(b"arrays %d\n" % len(arrays))
        payload = []
        for name, arr in arrays.items():
            if any(ch.isspace() for ch in name):
                raise ValueError(f"array name {name!r} must not contain whitespace")
            a = np.asarray(arr)
            # ascontiguousarray promotes 0-d to 1-d; keep the true shape
            shape = ",".join(str(s) for s in a.shape) or "-"
            a = np.ascontiguousarray(a)
            fh.write(f"{name} {a.dtype.str} {shape} {a.nbytes}\n".encode("ascii"))
            payload.append(a.tobytes())
        fh.write(b"DATA\n")
        for chunk in payload:
            fh.write(chunk)


def load_checkpoint(path) -> tuple[dict[str, np.ndarray], dict]:
    """Read a checkpoint; returns (arrays, meta).

    Raises
    ------
    CheckpointError
        On a bad magic line, unsupported version, or truncated payload.
    """
    path = Path(path)
    with open(path, "rb") as fh:
        first = fh.readline().strip()
        parts = first.split()
        if len(parts) != 2 or parts[0] != MAGIC:
            raise CheckpointError(f"{path}: not a checkpoint file (bad magic line)")
        try:
            version = int(parts[1])
        except ValueError:
            raise CheckpointError(f"{path}: malformed version field") from None
        if version != VERSION:
            raise CheckpointError(
                f"{path}: unsupported checkpoint version {version} (expected {VERSION})"
            )
        try:
            tag, nbytes = fh.readline().split()
            if tag != b"meta":
                raise ValueError
            meta = json.loads(fh.read(int(nbytes)).decode("utf-8"))
            fh.readline()  # trailing newline after meta block
            tag, count = fh.readline().split()
            if tag != b"arrays":
                raise ValueError
            decls = []
            for _ in range(int(count)):
                name, dtype, shape, size = fh.readline().decode("ascii").split()
                dims = () if shape == "-" else tuple(int(s) for s in shape.split(","))
                decls.append((name, dtype, dims, int(size)))
            if fh.readline().strip() != b"DATA":
                raise ValueError
        except (ValueError, json.JSONDecodeError) as exc:
            raise CheckpointError(f"{path}: corrupted header ({exc})") from None
        arrays = {}
        for name, dtype, dims, size in decls:
            raw = fh.read(size)
            if len(raw) != size:
                raise CheckpointError(f"{path}: truncated payload for array {name!r}")
            arrays[name] = np.frombuffer(raw, dtype=np.dtype(dtype)).reshape(dims).copy()
    return arrays, meta
