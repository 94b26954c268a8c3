"""Bit strings, bit readers and the universal integer codes.

Codewords are plain ``str`` objects over the alphabet ``{'0', '1'}``.  That
keeps concatenation, comparison and prefix tests trivial; packing to bytes
happens only at file boundaries (MSB first, zero padded).
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "BitString",
    "BitReader",
    "CodeError",
    "StreamExhausted",
    "MalformedCodeword",
    "elias_gamma_plus",
    "elias_delta_plus",
    "elias_delta_signed",
    "delta_signed_length",
    "delta_signed_length_array",
    "gamma_plus_length",
    "fixed_binary",
    "decode_gamma_plus",
    "decode_delta_plus",
    "decode_delta_signed",
    "decode_fixed",
    "pack_bits",
    "unpack_bits",
]

BitString = str

DEFAULT_ZERO_CAP = 64


class CodeError(ValueError):
    """Base class for codeword errors; ``offset`` is the bit position."""

    def __init__(self, message, offset=None):
        self.detail = message
        if offset is not None:
            message = f"{message} (bit offset {offset})"
        super().__init__(message)
        self.offset = offset


class StreamExhausted(CodeError):
    pass


class MalformedCodeword(CodeError):
    pass


class BitReader:
    """Sequential reader over a bit string.

    Reading past the end raises :class:`StreamExhausted`; there is no
    implicit zero fill.
    """

    def __init__(self, source, zero_cap=DEFAULT_ZERO_CAP):
        if isinstance(source, (bytes, bytearray, memoryview)):
            source = unpack_bits(bytes(source))
        if any(c not in "01" for c in source):
            raise ValueError("bit string may only contain '0' and '1'")
        self.bits = source
        self.pos = 0
        self.zero_cap = zero_cap

    def __len__(self):
        return len(self.bits)

    @property
    def remaining(self):
        return len(self.bits) - self.pos

    def at_end(self):
        return self.pos >= len(self.bits)

    def only_padding_left(self):
        """True when the unread tail is fewer than 8 zero bits."""
        tail = self.bits[self.pos:]
        return len(tail) < 8 and "1" not in tail

    def read_bit(self):
        if self.pos >= len(self.bits):
            raise StreamExhausted("unexpected end of bit stream", self.pos)
        b = self.bits[self.pos]
        self.pos += 1
        return 1 if b == "1" else 0

    def read(self, count):
        """Read ``count`` bits and return them as a bit string."""
        if count < 0:
            raise ValueError("count must be non-negative")
        end = self.pos + count
        if end > len(self.bits):
            raise StreamExhausted(
                f"needed {count} bits, {self.remaining} available", self.pos
            )
        out = self.bits[self.pos:end]
        self.pos = end
        return out

    def count_zeros(self):
        """Consume a run of zeros up to and including the terminating one."""
        start = self.pos
        idx = self.bits.find("1", start, start + self.zero_cap + 1)
        if idx < 0:
            if len(self.bits) - start <= self.zero_cap:
                raise StreamExhausted("unterminated zero run", start)
            raise MalformedCodeword(
                f"more than {self.zero_cap} leading zeros", start
            )
        self.pos = idx + 1
        return idx - start


def _floor_log2(m):
    return m.bit_length() - 1


def elias_gamma_plus(k):
    """Elias gamma code of a positive integer: N zeros then the N+1 bit binary."""
    k = int(k)
    if k < 1:
        raise ValueError(f"gamma code needs k >= 1, got {k}")
    body = bin(k)[2:]
    return "0" * (len(body) - 1) + body


def elias_delta_plus(k):
    k = int(k)
    if k < 1:
        raise ValueError(f"delta code needs k >= 1, got {k}")
    body = bin(k)[2:]
    return elias_gamma_plus(len(body)) + body[1:]


def elias_delta_signed(k):
    """Signed Elias delta: non-positive k maps to 1-2k, positive k to 2k."""
    k = int(k)
    return elias_delta_plus(1 - 2 * k if k <= 0 else 2 * k)


def gamma_plus_length(k):
    return 2 * _floor_log2(int(k)) + 1


def delta_signed_length(k):
    """Length of ``elias_delta_signed(k)``, computed with exact integer logs."""
    m = _floor_log2(2 * abs(int(k)) + 1)
    return m + 2 * _floor_log2(m + 1) + 1


def _floor_log2_array(m):
    # frexp is exact for integers below 2**53
    m = np.asarray(m, dtype=np.int64)
    if m.size and (m.min() < 1 or m.max() >= 2**53):
        raise ValueError("floor_log2 needs 1 <= m < 2**53")
    _, e = np.frexp(m.astype(np.float64))
    return e.astype(np.int64) - 1


def delta_signed_length_array(k):
    """Vectorised :func:`delta_signed_length` over an integer array."""
    k = np.asarray(k, dtype=np.int64)
    m = _floor_log2_array(2 * np.abs(k) + 1)
    return m + 2 * _floor_log2_array(m + 1) + 1


def fixed_binary(i, k):
    i, k = int(i), int(k)
    if k < 0:
        raise ValueError("width must be non-negative")
    if not 0 <= i < (1 << k):
        raise ValueError(f"{i} does not fit in {k} bits")
    return format(i, "b").zfill(k) if k else ""


def decode_gamma_plus(r: BitReader) -> int:
    start = r.pos
    n = r.count_zeros()
    try:
        tail = r.read(n)
    except StreamExhausted:
        raise StreamExhausted("truncated gamma codeword", start) from None
    return int("1" + tail, 2)


def decode_delta_plus(r: BitReader) -> int:
    start = r.pos
    nbits = decode_gamma_plus(r)
    if nbits - 1 > r.zero_cap:
        raise MalformedCodeword("delta length field out of range", start)
    try:
        tail = r.read(nbits - 1)
    except StreamExhausted:
        raise StreamExhausted("truncated delta codeword", start) from None
    return int("1" + tail, 2)


def decode_delta_signed(r: BitReader) -> int:
    m = decode_delta_plus(r)
    return m // 2 if m % 2 == 0 else (1 - m) // 2


def decode_fixed(r: BitReader, k: int) -> int:
    if k == 0:
        return 0
    return int(r.read(k), 2)


def pack_bits(bits: str) -> bytes:
    """Pack a bit string MSB first, zero padding the final byte."""
    pad = (-len(bits)) % 8
    bits = bits + "0" * pad
    return int(bits, 2).to_bytes(len(bits) // 8, "big") if bits else b""


def unpack_bits(data: bytes) -> str:
    if not data:
        return ""
    return format(int.from_bytes(data, "big"), "b").zfill(8 * len(data))
