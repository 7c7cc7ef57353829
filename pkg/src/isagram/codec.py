"""Binary-to-text codecs: Base16, Base32, Base64 (RFC 4648) and Base85.

Base85 here is the btoa/Ascii85 offset-33 scheme without the ``z``
zero-group shortcut and without ``<~ ~>`` framing: every 4-byte group is
read as a big-endian 32-bit integer and written as five base-85 digits
(character = digit + 33); a final partial group of n bytes is zero-padded
and emitted as n+1 characters.  The stdlib ``a85encode`` folds zero groups
to ``z``, so that variant is implemented by hand.
"""

from __future__ import annotations

import base64
import binascii
from dataclasses import dataclass


class DecodeError(ValueError):
    """Input text is not a valid encoding output."""


@dataclass(frozen=True)
class Encoding:
    name: str
    alphabet: str
    group_in_bytes: int
    group_out_chars: int
    uses_padding: bool


BASE16 = Encoding("base16", "0123456789ABCDEF", 1, 2, False)
BASE32 = Encoding("base32", "ABCDEFGHIJKLMNOPQRSTUVWXYZ234567", 5, 8, True)
BASE64 = Encoding(
    "base64",
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/",
    3,
    4,
    True,
)
BASE85 = Encoding("base85", "".join(chr(33 + i) for i in range(85)), 4, 5, False)

ENCODINGS = {e.name: e for e in (BASE16, BASE32, BASE64, BASE85)}


def get_encoding(name: str) -> Encoding:
    key = name.lower()
    if key.isdigit():
        key = "base" + key
    if key not in ENCODINGS:
        raise KeyError(f"unknown encoding {name!r}; expected one of {sorted(ENCODINGS)}")
    return ENCODINGS[key]


_B85_POW = (85 ** 4, 85 ** 3, 85 ** 2, 85, 1)


def _b85_encode(payload: bytes) -> str:
    out = []
    for i in range(0, len(payload), 4):
        group = payload[i : i + 4]
        n = len(group)
        value = int.from_bytes(group + b"\x00" * (4 - n), "big")
        chars = [chr(33 + (value // p) % 85) for p in _B85_POW]
        out.append("".join(chars[: n + 1]))
    return "".join(out)


def _b85_decode(text: str) -> bytes:
    out = bytearray()
    for i in range(0, len(text), 5):
        group = text[i : i + 5]
        n = len(group)
        if n == 1:
            raise DecodeError("base85: trailing single character has no decoding")
        digits = []
        for ch in group:
            d = ord(ch) - 33
            if not 0 <= d < 85:
                raise DecodeError(f"base85: character {ch!r} outside alphabet")
            digits.append(d)
        digits += [84] * (5 - n)  # pad partial group with 'u' (max digit)
        value = 0
        for d in digits:
            value = value * 85 + d
        if value > 0xFFFFFFFF:
            raise DecodeError("base85: group decodes above 2**32 - 1")
        out += value.to_bytes(4, "big")[: n - 1] if n < 5 else value.to_bytes(4, "big")
    return bytes(out)


def encode(kind: Encoding, payload: bytes) -> str:
    """Encode raw bytes to text; Base16 output is uppercase."""
    if kind.name == "base16":
        return base64.b16encode(payload).decode("ascii")
    if kind.name == "base32":
        return base64.b32encode(payload).decode("ascii")
    if kind.name == "base64":
        return base64.b64encode(payload).decode("ascii")
    return _b85_encode(payload)


def decode(kind: Encoding, text: str) -> bytes:
    """Inverse of encode.  Base16 accepts either letter case.

    Raises DecodeError for characters outside the alphabet, malformed
    padding, or base85 groups above 2**32 - 1.
    """
    try:
        if kind.name == "base16":
            return base64.b16decode(text, casefold=True)
        if kind.name == "base32":
            _check_padding(kind, text, invalid_tail=(1, 3, 6))
            return base64.b32decode(text)
        if kind.name == "base64":
            _check_padding(kind, text, invalid_tail=(1,))
            return base64.b64decode(text, validate=True)
        return _b85_decode(text)
    except binascii.Error as exc:
        raise DecodeError(f"{kind.name}: {exc}") from exc


def _check_padding(kind: Encoding, text: str, invalid_tail: tuple[int, ...]) -> None:
    body = text.rstrip("=")
    if "=" in body:
        raise DecodeError(f"{kind.name}: padding character inside data")
    if len(text) % kind.group_out_chars != 0:
        raise DecodeError(f"{kind.name}: length {len(text)} not a multiple of {kind.group_out_chars}")
    if len(body) % kind.group_out_chars in invalid_tail:
        raise DecodeError(f"{kind.name}: malformed padding")


def strip_padding(kind: Encoding, text: str) -> str:
    """Drop trailing ``=`` padding.  Base85 legitimately uses '=' as a digit,
    so only the padded encodings are touched."""
    if kind.uses_padding:
        return text.rstrip("=")
    return text
