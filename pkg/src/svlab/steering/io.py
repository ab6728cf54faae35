"""Steering-vector files: a JSON-lines sidecar plus a binary tensor blob.

The blob is ``b"SVSV"``, a u32 version, then one length-prefixed,
checksummed tensor section per stored array, using the same tensor encoding
as model files. Each sidecar line describes one vector and names its
tensors by blob index::

    {"kind": "icv", "tensors": {"slices": 0}, "strength": 0.1, ...}
    {"kind": "fv", "tensors": {"vector": 1}, "head_set": [[1, 3], ...], ...}
"""

from __future__ import annotations

import io
import json
import os
import struct
from pathlib import Path
from typing import Sequence

import numpy as np

from ..core.io import decode_tensor, encode_tensor, read_section, write_section
from ..errors import FormatError, VersionError
from .vectors import FunctionVector, InContextVector

BLOB_MAGIC = b"SVSV"
BLOB_VERSION = 1


def blob_path(sidecar: str | Path) -> Path:
    return Path(sidecar).with_suffix(".bin")


def _atomic_write(path: Path, data: bytes) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def save_vectors(vectors: Sequence[InContextVector | FunctionVector], sidecar: str | Path) -> None:
    sidecar = Path(sidecar)
    blob = io.BytesIO()
    blob.write(BLOB_MAGIC + struct.pack("<I", BLOB_VERSION))
    lines = []
    n = 0
    for vec in vectors:
        if isinstance(vec, InContextVector):
            write_section(blob, encode_tensor("slices", vec.slices))
            rec = {
                "kind": "icv",
                "tensors": {"slices": n},
                "strength": vec.strength,
                "n_demos": vec.n_demos,
                "demo_style": vec.demo_style,
                "renormalize": vec.renormalize,
                "source_task": vec.source_task,
                "metadata": vec.metadata,
            }
        elif isinstance(vec, FunctionVector):
            write_section(blob, encode_tensor("vector", vec.vector))
            rec = {
                "kind": "fv",
                "tensors": {"vector": n},
                "head_set": [list(h) for h in vec.head_set],
                "target_layers": list(vec.target_layers),
                "source_task": vec.source_task,
                "metadata": vec.metadata,
            }
        else:
            raise TypeError(f"cannot serialize {type(vec).__name__}")
        n += 1
        lines.append(json.dumps(rec, sort_keys=True))
    _atomic_write(blob_path(sidecar), blob.getvalue())
    _atomic_write(sidecar, ("\n".join(lines) + "\n").encode("utf-8"))


def _read_blob(path: Path) -> list:
    buf = path.read_bytes()
    if len(buf) < 8:
        raise FormatError("truncated vector blob", 0)
    if buf[:4] != BLOB_MAGIC:
        raise FormatError(f"bad magic {buf[:4]!r}, expected {BLOB_MAGIC!r}", 0)
    (version,) = struct.unpack_from("<I", buf, 4)
    if version > BLOB_VERSION:
        raise VersionError(version, BLOB_VERSION)
    offset, tensors = 8, []
    while offset < len(buf):
        payload, nxt = read_section(buf, offset)
        tensors.append(decode_tensor(payload, offset + 8)[1])
        offset = nxt
    return tensors


def load_vectors(sidecar: str | Path) -> list:
    sidecar = Path(sidecar)
    tensors = _read_blob(blob_path(sidecar))
    out = []
    for lineno, line in enumerate(sidecar.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            kind = rec["kind"]
            idx = rec["tensors"]
            if kind == "icv":
                out.append(InContextVector(
                    slices=tensors[idx["slices"]],
                    strength=float(rec["strength"]),
                    n_demos=int(rec["n_demos"]),
                    demo_style=rec["demo_style"],
                    renormalize=bool(rec["renormalize"]),
                    source_task=rec["source_task"],
                    metadata=rec.get("metadata", {}),
                ))
            elif kind == "fv":
                out.append(FunctionVector(
                    vector=tensors[idx["vector"]],
                    head_set=tuple(tuple(h) for h in rec["head_set"]),
                    target_layers=tuple(rec["target_layers"]),
                    source_task=rec["source_task"],
                    metadata=rec.get("metadata", {}),
                ))
            else:
                raise KeyError(f"unknown kind {kind!r}")
        except (json.JSONDecodeError, KeyError, IndexError, TypeError, ValueError) as exc:
            raise FormatError(f"{sidecar}:{lineno}: bad vector record ({exc})") from None
    return out


def save_vector(vec, sidecar: str | Path) -> None:
    save_vectors([vec], sidecar)


def load_vector(sidecar: str | Path):
    vecs = load_vectors(sidecar)
    if len(vecs) != 1:
        raise FormatError(f"{sidecar} holds {len(vecs)} vectors, expected 1")
    return vecs[0]


def vector_equal(a, b) -> bool:
    """Structural equality including exact tensor contents."""
    if type(a) is not type(b):
        return False
    if isinstance(a, InContextVector):
        return (np.array_equal(a.slices, b.slices) and a.strength == b.strength and a.n_demos == b.n_demos
                and a.demo_style == b.demo_style and a.renormalize == b.renormalize
                and a.source_task == b.source_task)
    return (np.array_equal(a.vector, b.vector) and tuple(map(tuple, a.head_set)) == tuple(map(tuple, b.head_set))
            and tuple(a.target_layers) == tuple(b.target_layers) and a.source_task == b.source_task)
