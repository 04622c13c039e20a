"""Binary checkpoint format.

Layout (all integers little-endian)::

    b"MADT" | u32 version | u32 tensor count
    per tensor: u16 name length | UTF-8 name | u8 ndim | u64 dims[ndim]
                | float32 row-major payload
    u32 CRC32 of everything between the header and the CRC

Model parameters are stored alongside optimizer tensors named
``adam.m.<param>``, ``adam.v.<param>`` and ``adam.step``.
"""
import struct
import zlib
from collections import OrderedDict

import numpy as np

from .exceptions import CorruptCheckpointError
from .params import ParameterSet

MAGIC = b"MADT"
VERSION = 1
_HEADER = struct.Struct("<4sII")


def save_checkpoint(path, params, optimizer_state=None):
    tensors = OrderedDict(params.items())
    if optimizer_state is not None:
        tensors.update(optimizer_state.tensors())
    body = bytearray()
    for name, value in tensors.items():
        encoded = name.encode("utf-8")
        arr = np.ascontiguousarray(value, dtype="<f4")
        body += struct.pack("<H", len(encoded)) + encoded
        body += struct.pack("<B", arr.ndim)
        body += struct.pack(f"<{arr.ndim}Q", *arr.shape)
        body += arr.tobytes()
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, len(tensors)))
        fh.write(body)
        fh.write(struct.pack("<I", zlib.crc32(body)))


def read_tensors(path):
    """All tensors of a checkpoint as float32 arrays, in file order."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size + 4:
        raise CorruptCheckpointError(f"{path}: file too short")
    magic, version, count = _HEADER.unpack_from(raw, 0)
    if magic != MAGIC:
        raise CorruptCheckpointError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise CorruptCheckpointError(f"{path}: unsupported version {version}")
    body = raw[_HEADER.size:-4]
    (crc,) = struct.unpack_from("<I", raw, len(raw) - 4)
    tensors = OrderedDict()
    pos = 0
    try:
        for _ in range(count):
            (name_len,) = struct.unpack_from("<H", body, pos)
            pos += 2
            name = bytes(body[pos:pos + name_len]).decode("utf-8")
            pos += name_len
            (ndim,) = struct.unpack_from("<B", body, pos)
            pos += 1
            shape = struct.unpack_from(f"<{ndim}Q", body, pos)
            pos += 8 * ndim
            n_bytes = 4 * int(np.prod(shape, dtype=np.int64))
            if pos + n_bytes > len(body):
                raise CorruptCheckpointError(f"{path}: truncated payload for {name}")
            tensors[name] = np.frombuffer(body, dtype="<f4", count=n_bytes // 4, offset=pos).reshape(shape).copy()
            pos += n_bytes
    except (struct.error, UnicodeDecodeError) as exc:
        raise CorruptCheckpointError(f"{path}: malformed tensor record ({exc})") from exc
    if pos != len(body):
        raise CorruptCheckpointError(f"{path}: {len(body) - pos} unexpected trailing bytes")
    if zlib.crc32(body) != crc:
        raise CorruptCheckpointError(f"{path}: CRC mismatch")
    return tensors


def load_checkpoint(path):
    """Return ``(params, optimizer_tensors)``; params are float32."""
    tensors = read_tensors(path)
    params = ParameterSet((k, v) for k, v in tensors.items() if not k.startswith("adam."))
    optimizer = OrderedDict((k, v) for k, v in tensors.items() if k.startswith("adam."))
    return params, optimizer
