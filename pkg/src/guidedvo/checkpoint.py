"""Binary checkpoint persistence for parameters and optimizer state.

Layout (all integers little-endian):

    magic  8 bytes  b"GVOCKPT1"
    u32    entry count
    entry: u16 name length, UTF-8 name,
           u8 dtype code (0 = float32, 1 = float64),
           u8 ndim, u32 per dimension,
           raw little-endian values

Parameter entries are namespaced ``param/<name>`` (trainable) or
``frozen/<name>``; Adam state rides along as ``adam/m/<name>``,
``adam/v/<name>`` and the scalar ``adam/step``. Loading reproduces every
tensor bit-exactly. Writes go to a temp file that is renamed into place,
so a crash never leaves a half-written checkpoint behind.
"""

from __future__ import annotations

import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .optim import AdamState
from .params import ParamSet
from .tensor import Tensor

__all__ = ["CheckpointError", "save_checkpoint", "load_checkpoint"]

MAGIC = b"GVOCKPT1"
_DTYPE_CODES = {np.dtype(np.float32): 0, np.dtype(np.float64): 1}
_CODE_DTYPES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}


class CheckpointError(ValueError):
    """Corrupt or truncated checkpoint file."""


def _pack_entry(name: str, data: np.ndarray) -> bytes:
    code = _DTYPE_CODES.get(data.dtype)
    if code is None:
        raise CheckpointError(f"entry {name!r} has unsupported dtype {data.dtype}")
    encoded = name.encode("utf-8")
    if len(encoded) > 0xFFFF:
        raise CheckpointError(f"entry name too long: {name!r}")
    parts = [struct.pack("<H", len(encoded)), encoded, struct.pack("<BB", code, data.ndim)]
    for dim in data.shape:
        parts.append(struct.pack("<I", dim))
    parts.append(np.ascontiguousarray(data, dtype=_CODE_DTYPES[code]).tobytes())
    return b"".join(parts)


def save_checkpoint(params: ParamSet, state: AdamState | None, path) -> None:
    entries: list[tuple[str, np.ndarray]] = []
    for name, tensor in params.items():
        prefix = "param" if params.is_trainable(name) else "frozen"
        entries.append((f"{prefix}/{name}", tensor.data))
    if state is not None:
        for name, arr in state.m.items():
            entries.append((f"adam/m/{name}", arr))
        for name, arr in state.v.items():
            entries.append((f"adam/v/{name}", arr))
        entries.append(("adam/step", np.array(float(state.step), dtype=np.float64)))

    blob = [MAGIC, struct.pack("<I", len(entries))]
    blob.extend(_pack_entry(name, data) for name, data in entries)
    payload = b"".join(blob)

    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.off = 0

    def take(self, n: int, what: str) -> bytes:
        if self.off + n > len(self.buf):
            raise CheckpointError(
                f"truncated checkpoint: needed {n} bytes for {what} at byte {self.off}, "
                f"file has {len(self.buf)}"
            )
        out = self.buf[self.off : self.off + n]
        self.off += n
        return out

    def u16(self, what: str) -> int:
        return struct.unpack("<H", self.take(2, what))[0]

    def u32(self, what: str) -> int:
        return struct.unpack("<I", self.take(4, what))[0]

    def u8(self, what: str) -> int:
        return self.take(1, what)[0]


def load_checkpoint(path) -> tuple[ParamSet, AdamState | None]:
    """Rebuild (params, optimizer state); state is None when absent."""
    try:
        buf = Path(path).read_bytes()
    except OSError as exc:
        raise CheckpointError(f"{path}: {exc}") from exc
    r = _Reader(buf)
    magic = r.take(len(MAGIC), "magic")
    if magic != MAGIC:
        raise CheckpointError(f"bad magic {magic!r} at byte 0, expected {MAGIC!r}")
    count = r.u32("entry count")

    raw: dict[str, np.ndarray] = {}
    order: list[str] = []
    for index in range(count):
        name_len = r.u16(f"name length of entry {index}")
        start = r.off
        try:
            name = r.take(name_len, f"name of entry {index}").decode("utf-8")
        except UnicodeDecodeError as exc:
            raise CheckpointError(f"entry {index} name is not UTF-8 at byte {start}") from exc
        code = r.u8(f"dtype of {name!r}")
        if code not in _CODE_DTYPES:
            raise CheckpointError(f"unknown dtype code {code} for {name!r} at byte {r.off - 1}")
        ndim = r.u8(f"ndim of {name!r}")
        shape = tuple(r.u32(f"dim {d} of {name!r}") for d in range(ndim))
        dtype = _CODE_DTYPES[code]
        n_values = int(np.prod(shape, dtype=np.int64)) if shape else 1
        data = r.take(n_values * dtype.itemsize, f"values of {name!r}")
        arr = np.frombuffer(data, dtype=dtype).reshape(shape).copy()
        if name in raw:
            raise CheckpointError(f"duplicate entry {name!r}")
        raw[name] = arr
        order.append(name)
    if r.off != len(buf):
        raise CheckpointError(f"{len(buf) - r.off} trailing bytes at byte {r.off}")

    params = ParamSet()
    m: dict[str, np.ndarray] = {}
    v: dict[str, np.ndarray] = {}
    step = None
    for name in order:
        arr = raw[name]
        if name.startswith("param/"):
            params.add(name[len("param/") :], Tensor(arr), trainable=True)
        elif name.startswith("frozen/"):
            params.add(name[len("frozen/") :], Tensor(arr), trainable=False)
        elif name.startswith("adam/m/"):
            m[name[len("adam/m/") :]] = arr
        elif name.startswith("adam/v/"):
            v[name[len("adam/v/") :]] = arr
        elif name == "adam/step":
            step = int(arr)
        else:
            raise CheckpointError(f"unrecognized entry namespace: {name!r}")
    state = None
    if step is not None or m or v:
        if step is None:
            raise CheckpointError("optimizer moments present but adam/step missing")
        state = AdamState(m, v, step)
    return params, state
