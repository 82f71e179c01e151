"""Canonical binary and JSON codecs driven by dataclass annotations.

Supported field types: ``Scalar`` (32 bytes, canonical), ``int`` (u64),
``bool``, ``bytes``, ``str``, ``Point`` (32 bytes compressed), ``IntEnum``
(one byte), ``Optional[X]``, ``list[X]`` / ``tuple[X, ...]`` and nested
dataclasses. The JSON form mirrors the binary one with hex strings for
scalars, points and bytes.
"""

from __future__ import annotations

import dataclasses
import enum
import hashlib
import struct
import types
import typing
from functools import lru_cache

from .jubjub import (
    EncodingError,
    Point,
    Scalar,
    decode_point,
    decode_scalar,
    encode_point,
    encode_scalar,
)

ENVELOPE_MAGIC = b"PHX"
ENVELOPE_VERSION = 1


@lru_cache(maxsize=None)
def _hints(cls) -> tuple[tuple[str, object], ...]:
    hints = typing.get_type_hints(cls)
    return tuple((f.name, hints[f.name]) for f in dataclasses.fields(cls))


def _optional_arg(tp):
    args = [a for a in typing.get_args(tp) if a is not type(None)]
    return args[0]


def _is_optional(tp) -> bool:
    return typing.get_origin(tp) in (typing.Union, types.UnionType) and type(None) in typing.get_args(tp)


def _seq_arg(tp):
    return typing.get_args(tp)[0]


def _is_seq(tp) -> bool:
    return typing.get_origin(tp) in (list, tuple)


# -- binary -----------------------------------------------------------------

def _write(out: bytearray, tp, value) -> None:
    if tp is Scalar:
        out += encode_scalar(value)
    elif tp is Point:
        out += encode_point(value)
    elif tp is bool:
        out += b"\x01" if value else b"\x00"
    elif isinstance(tp, type) and issubclass(tp, enum.IntEnum):
        out += struct.pack("<B", int(value))
    elif tp is int:
        if value < 0:
            raise EncodingError("negative integers are not encodable")
        out += struct.pack("<Q", value)
    elif tp is bytes:
        out += struct.pack("<I", len(value)) + value
    elif tp is str:
        raw = value.encode()
        out += struct.pack("<I", len(raw)) + raw
    elif _is_optional(tp):
        if value is None:
            out += b"\x00"
        else:
            out += b"\x01"
            _write(out, _optional_arg(tp), value)
    elif _is_seq(tp):
        item_tp = _seq_arg(tp)
        out += struct.pack("<I", len(value))
        for item in value:
            _write(out, item_tp, item)
    elif dataclasses.is_dataclass(tp):
        for name, ftp in _hints(tp):
            _write(out, ftp, getattr(value, name))
    else:
        raise TypeError(f"no codec for {tp!r}")


class _Reader:
    def __init__(self, data: bytes, trusted: bool):
        self.data = memoryview(data)
        self.off = 0
        self.trusted = trusted

    def take(self, n: int) -> bytes:
        if self.off + n > len(self.data):
            raise EncodingError("truncated input")
        chunk = bytes(self.data[self.off:self.off + n])
        self.off += n
        return chunk

    def read(self, tp):
        if tp is Scalar:
            return decode_scalar(self.take(32))
        if tp is Point:
            return decode_point(self.take(32), check_subgroup=not self.trusted)
        if tp is bool:
            b = self.take(1)
            if b not in (b"\x00", b"\x01"):
                raise EncodingError("non-canonical boolean")
            return b == b"\x01"
        if isinstance(tp, type) and issubclass(tp, enum.IntEnum):
            try:
                return tp(self.take(1)[0])
            except ValueError as exc:
                raise EncodingError(str(exc)) from exc
        if tp is int:
            return struct.unpack("<Q", self.take(8))[0]
        if tp is bytes:
            (n,) = struct.unpack("<I", self.take(4))
            return self.take(n)
        if tp is str:
            (n,) = struct.unpack("<I", self.take(4))
            return self.take(n).decode()
        if _is_optional(tp):
            flag = self.take(1)
            if flag == b"\x00":
                return None
            if flag != b"\x01":
                raise EncodingError("non-canonical option flag")
            return self.read(_optional_arg(tp))
        if _is_seq(tp):
            (n,) = struct.unpack("<I", self.take(4))
            items = [self.read(_seq_arg(tp)) for _ in range(n)]
            return tuple(items) if typing.get_origin(tp) is tuple else items
        if dataclasses.is_dataclass(tp):
            return tp(**{name: self.read(ftp) for name, ftp in _hints(tp)})
        raise TypeError(f"no codec for {tp!r}")


def encode(obj, tp=None) -> bytes:
    out = bytearray()
    _write(out, tp or type(obj), obj)
    return bytes(out)


def decode(tp, data: bytes, trusted: bool = False):
    reader = _Reader(data, trusted)
    value = reader.read(tp)
    if reader.off != len(data):
        raise EncodingError("trailing bytes after value")
    return value


def envelope(kind: str, obj) -> bytes:
    """Versioned, kind-tagged binary envelope."""
    tag = kind.encode()
    return ENVELOPE_MAGIC + bytes([ENVELOPE_VERSION, len(tag)]) + tag + encode(obj)


def open_envelope(kind: str, tp, data: bytes, trusted: bool = False):
    if data[:3] != ENVELOPE_MAGIC:
        raise EncodingError("missing envelope magic")
    if len(data) < 5 or data[3] != ENVELOPE_VERSION:
        raise EncodingError("unsupported envelope version")
    n = data[4]
    if data[5:5 + n] != kind.encode():
        raise EncodingError(f"envelope does not hold a {kind}")
    return decode(tp, data[5 + n:], trusted)


def digest(data: bytes) -> bytes:
    return hashlib.blake2b(data, digest_size=32).digest()


# -- JSON -------------------------------------------------------------------

def to_json(obj, tp=None):
    tp = tp or type(obj)
    if tp is Scalar:
        return encode_scalar(obj).hex()
    if tp is Point:
        return encode_point(obj).hex()
    if tp is bool:
        return bool(obj)
    if isinstance(tp, type) and issubclass(tp, enum.IntEnum):
        return int(obj)
    if tp is int or tp is str:
        return obj
    if tp is bytes:
        return obj.hex()
    if _is_optional(tp):
        return None if obj is None else to_json(obj, _optional_arg(tp))
    if _is_seq(tp):
        return [to_json(x, _seq_arg(tp)) for x in obj]
    if dataclasses.is_dataclass(tp):
        return {name: to_json(getattr(obj, name), ftp) for name, ftp in _hints(tp)}
    raise TypeError(f"no codec for {tp!r}")


def from_json(tp, doc, trusted: bool = False):
    if tp is Scalar:
        return decode_scalar(bytes.fromhex(doc))
    if tp is Point:
        return decode_point(bytes.fromhex(doc), check_subgroup=not trusted)
    if tp is bool:
        return bool(doc)
    if isinstance(tp, type) and issubclass(tp, enum.IntEnum):
        return tp(doc)
    if tp is int or tp is str:
        return tp(doc)
    if tp is bytes:
        return bytes.fromhex(doc)
    if _is_optional(tp):
        return None if doc is None else from_json(_optional_arg(tp), doc, trusted)
    if _is_seq(tp):
        items = [from_json(_seq_arg(tp), x, trusted) for x in doc]
        return tuple(items) if typing.get_origin(tp) is tuple else items
    if dataclasses.is_dataclass(tp):
        unknown = set(doc) - {name for name, _ in _hints(tp)}
        if unknown:
            raise EncodingError(f"unknown fields {sorted(unknown)}")
        return tp(**{name: from_json(ftp, doc[name], trusted) for name, ftp in _hints(tp)})
    raise TypeError(f"no codec for {tp!r}")
