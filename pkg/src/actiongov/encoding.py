"""Deterministic byte encoding and digests.

This is the bit-exact contract every hashed object in the system rides on:

* UTF-8 text, JSON-compatible object/array syntax, no insignificant whitespace.
* Map keys sorted lexicographically by Unicode code point.
* Strings minimally escaped (`"` `\\` and control characters only); all other
  characters are emitted as literal UTF-8.
* Integers in base 10; floats in shortest round-trip decimal form; booleans as
  `true`/`false`. NaN and infinities are rejected.
* `None` is not encodable: null values are elided by normalization before
  anything reaches the encoder.

Encoded bytes are valid JSON, so decoding uses a plain JSON parser; equality
of encodings is equality of values.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from typing import Any

__all__ = ["CanonicalDigest", "encode_value", "encode_map", "digest_of", "ZERO_DIGEST"]

_ESCAPES = {
    '"': '\\"',
    "\\": "\\\\",
    "\b": "\\b",
    "\f": "\\f",
    "\n": "\\n",
    "\r": "\\r",
    "\t": "\\t",
}


@dataclass(frozen=True)
class CanonicalDigest:
    """SHA-256 digest of a canonical byte encoding."""

    bytes: bytes

    def __post_init__(self) -> None:
        if len(self.bytes) != 32:
            raise ValueError("digest must be exactly 32 bytes")

    @property
    def hex(self) -> str:
        return self.bytes.hex()

    @classmethod
    def from_hex(cls, hx: str) -> "CanonicalDigest":
        return cls(bytes.fromhex(hx))

    def __str__(self) -> str:  # pragma: no cover - repr convenience
        return self.hex


ZERO_DIGEST = CanonicalDigest(b"\x00" * 32)


def _encode_string(s: str, out: list[str]) -> None:
    out.append('"')
    for ch in s:
        esc = _ESCAPES.get(ch)
        if esc is not None:
            out.append(esc)
        elif ord(ch) < 0x20:
            out.append(f"\\u{ord(ch):04x}")
        else:
            out.append(ch)
    out.append('"')


def _encode(value: Any, out: list[str]) -> None:
    if value is True:
        out.append("true")
    elif value is False:
        out.append("false")
    elif isinstance(value, int):
        out.append(str(value))
    elif isinstance(value, float):
        if math.isnan(value) or math.isinf(value):
            raise ValueError("non-finite numbers are not encodable")
        out.append(repr(value))
    elif isinstance(value, str):
        _encode_string(value, out)
    elif isinstance(value, (list, tuple)):
        out.append("[")
        for i, item in enumerate(value):
            if i:
                out.append(",")
            _encode(item, out)
        out.append("]")
    elif isinstance(value, dict):
        out.append("{")
        for i, key in enumerate(sorted(value)):
            if not isinstance(key, str):
                raise TypeError("map keys must be strings")
            if i:
                out.append(",")
            _encode_string(key, out)
            out.append(":")
            _encode(value[key], out)
        out.append("}")
    else:
        raise TypeError(f"value of type {type(value).__name__} is not encodable")


def encode_value(value: Any) -> bytes:
    """Encode any supported value tree to canonical bytes."""
    out: list[str] = []
    _encode(value, out)
    return "".join(out).encode("utf-8")


def encode_map(entries: dict[str, Any]) -> bytes:
    """Encode a string-keyed map; identical content yields identical bytes."""
    if not isinstance(entries, dict):
        raise TypeError("entries must be a dict")
    return encode_value(entries)


def digest_of(data: bytes) -> CanonicalDigest:
    return CanonicalDigest(hashlib.sha256(data).digest())


def decode_bytes(data: bytes) -> Any:
    """Parse canonical bytes back into a value tree (encodings are JSON)."""
    return json.loads(data.decode("utf-8"))
