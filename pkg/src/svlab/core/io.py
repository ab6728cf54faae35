"""Binary model files.

Layout (all integers little-endian)::

    b"SVLM"  u32 version
    section: config JSON            (UTF-8)
    section: vocabulary JSON list   (UTF-8)
    section: metadata JSON          (UTF-8)
    section: tensor, repeated in ``param_names(config)`` order

    section  := u64 payload_length, payload, u32 crc32(payload)
    tensor   := u32 name_length, name (UTF-8), u32 ndim, u32 dims[ndim],
                float32 data (C order)

The tensor encoding (``encode_tensor`` / ``decode_tensor``) is shared with
steering-vector blobs.
"""

from __future__ import annotations

import io
import json
import os
import struct
import zlib
from pathlib import Path

import numpy as np

from ..errors import FormatError, VersionError
from .config import ModelConfig
from .model import ModelBundle, param_names, param_shapes
from .tokenizer import Tokenizer

MAGIC = b"SVLM"
VERSION = 1


def encode_tensor(name: str, arr: np.ndarray) -> bytes:
    arr = np.ascontiguousarray(arr, dtype="<f4")
    nb = name.encode("utf-8")
    head = struct.pack("<I", len(nb)) + nb + struct.pack("<I", arr.ndim)
    head += struct.pack(f"<{arr.ndim}I", *arr.shape)
    return head + arr.tobytes()


def decode_tensor(payload: bytes, offset: int = 0) -> tuple[str, np.ndarray]:
    try:
        (n,) = struct.unpack_from("<I", payload, 0)
        name = payload[4:4 + n].decode("utf-8")
        pos = 4 + n
        (ndim,) = struct.unpack_from("<I", payload, pos)
        pos += 4
        dims = struct.unpack_from(f"<{ndim}I", payload, pos)
        pos += 4 * ndim
    except (struct.error, UnicodeDecodeError) as exc:
        raise FormatError(f"bad tensor header ({exc})", offset) from None
    count = int(np.prod(dims)) if dims else 1
    if len(payload) - pos != 4 * count:
        raise FormatError(f"tensor {name!r} data has {len(payload) - pos} bytes, expected {4 * count}", offset + pos)
    arr = np.frombuffer(payload, dtype="<f4", count=count, offset=pos).reshape(dims)
    return name, arr.astype(np.float32)


def write_section(fh, payload: bytes) -> None:
    fh.write(struct.pack("<Q", len(payload)))
    fh.write(payload)
    fh.write(struct.pack("<I", zlib.crc32(payload)))


def read_section(buf: bytes, offset: int) -> tuple[bytes, int]:
    if offset + 8 > len(buf):
        raise FormatError("truncated file: missing section length", offset)
    (n,) = struct.unpack_from("<Q", buf, offset)
    start = offset + 8
    end = start + n
    if end + 4 > len(buf):
        raise FormatError(f"truncated file: section declares {n} bytes", offset)
    payload = buf[start:end]
    (crc,) = struct.unpack_from("<I", buf, end)
    if zlib.crc32(payload) != crc:
        raise FormatError("section checksum mismatch", offset)
    return payload, end + 4


def model_to_bytes(model: ModelBundle) -> bytes:
    out = io.BytesIO()
    out.write(MAGIC)
    out.write(struct.pack("<I", VERSION))
    write_section(out, json.dumps(model.config.to_dict(), sort_keys=True).encode("utf-8"))
    write_section(out, json.dumps(model.tokenizer.vocabulary).encode("utf-8"))
    write_section(out, json.dumps(model.metadata, sort_keys=True, default=str).encode("utf-8"))
    for name in param_names(model.config):
        write_section(out, encode_tensor(name, model.params[name]))
    return out.getvalue()


def save_model(model: ModelBundle, path: str | Path) -> None:
    path = Path(path)
    data = model_to_bytes(model)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def _json_section(buf: bytes, offset: int, what: str):
    payload, nxt = read_section(buf, offset)
    try:
        return json.loads(payload.decode("utf-8")), nxt
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"bad {what} section ({exc})", offset) from None


def model_from_bytes(buf: bytes) -> ModelBundle:
    if len(buf) < 8:
        raise FormatError("truncated file: no header", 0)
    if buf[:4] != MAGIC:
        raise FormatError(f"bad magic {buf[:4]!r}, expected {MAGIC!r}", 0)
    (version,) = struct.unpack_from("<I", buf, 4)
    if version > VERSION:
        raise VersionError(version, VERSION)
    if version < 1:
        raise FormatError(f"bad version {version}", 4)
    offset = 8
    cfg_dict, offset_next = _json_section(buf, offset, "config")
    try:
        cfg = ModelConfig.from_dict(cfg_dict)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"invalid config ({exc})", offset) from None
    offset = offset_next
    vocab, offset_next = _json_section(buf, offset, "vocabulary")
    try:
        tok = Tokenizer(vocab)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"invalid vocabulary ({exc})", offset) from None
    if len(tok) != cfg.vocab_size:
        raise FormatError(f"vocabulary has {len(tok)} tokens, config says {cfg.vocab_size}", offset)
    offset = offset_next
    meta, offset = _json_section(buf, offset, "metadata")
    shapes = param_shapes(cfg)
    params = {}
    for expected in param_names(cfg):
        payload, nxt = read_section(buf, offset)
        name, arr = decode_tensor(payload, offset + 8)
        if name != expected:
            raise FormatError(f"expected tensor {expected!r}, found {name!r}", offset)
        if arr.shape != shapes[name]:
            raise FormatError(f"tensor {name!r} has shape {arr.shape}, expected {shapes[name]}", offset)
        params[name] = arr
        offset = nxt
    if offset != len(buf):
        raise FormatError(f"{len(buf) - offset} trailing bytes", offset)
    return ModelBundle(cfg, params, tok, meta)


def load_model(path: str | Path) -> ModelBundle:
    with open(path, "rb") as fh:
        return model_from_bytes(fh.read())
