"""Encoders and decoders for the dyadic schemes, plus the stream file format.

Two wire formats share one cube model:

* ``Unbounded``: signed delta codes of ``k, v_1, ..., v_n``.
* ``Bounded``: gamma code of ``k+1`` then ``n`` fixed ``k``-bit fields; only
  valid for cubes inside ``[0,1]^n``.

The decoder never needs the level ``z`` drawn by the encoder, the codeword
already names the cube.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .codes import (
    BitReader,
    CodeError,
    MalformedCodeword,
    StreamExhausted,
    decode_delta_signed,
    decode_fixed,
    decode_gamma_plus,
    elias_delta_signed,
    elias_gamma_plus,
    fixed_binary,
    pack_bits,
    unpack_bits,
)
from .densities import Density, UniformDensity
from .dyadic import Cube, DepthExhausted, locate_batch, start_level
from .regions import Region

__all__ = [
    "Variant",
    "SchemeConfig",
    "Codeword",
    "Encoded",
    "Decoded",
    "serialize",
    "serialize_unbounded",
    "serialize_bounded",
    "parse",
    "encode_uniform",
    "encode_density",
    "encode_batch",
    "decode",
    "decode_stream",
    "write_stream",
    "read_stream",
    "StreamFormatError",
    "MAGIC",
]

MAGIC = b"UDCS"
VERSION = 1
HEADER = struct.Struct(">4sBBB")


class Variant(enum.IntEnum):
    UNBOUNDED = 0
    BOUNDED = 1

    @classmethod
    def parse(cls, s):
        if isinstance(s, cls):
            return s
        try:
            return cls[str(s).upper()]
        except KeyError:
            raise ValueError(f"unknown variant {s!r}") from None


@dataclass(frozen=True)
class SchemeConfig:
    variant: Variant = Variant.UNBOUNDED
    n: int = 1
    k_max: int = 40
    decode_zero_cap: int = 64
    max_retries: int = 100

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant.parse(self.variant))
        if self.n < 1:
            raise ValueError("dimension must be >= 1")
        if self.k_max < 1:
            raise ValueError("k_max must be >= 1")


@dataclass(frozen=True)
class Codeword:
    cube: Cube
    bits: str

    def __len__(self):
        return len(self.bits)


@dataclass
class Encoded:
    bits: str
    cube: Cube
    x_internal: np.ndarray
    retries: int = 0


@dataclass
class Decoded:
    x: np.ndarray
    cube: Cube
    nbits: int


def serialize_unbounded(c: Cube) -> str:
    return elias_delta_signed(c.k) + "".join(elias_delta_signed(a) for a in c.v)


def serialize_bounded(c: Cube) -> str:
    if c.k < 0:
        raise ValueError(f"bounded scheme needs k >= 0, got {c.k}")
    # fixed_binary raises for v outside [0, 2^k)
    return elias_gamma_plus(c.k + 1) + "".join(fixed_binary(a, c.k) for a in c.v)


def serialize(c: Cube, cfg: SchemeConfig) -> str:
    if c.n != cfg.n:
        raise ValueError(f"cube has dimension {c.n}, scheme expects {cfg.n}")
    if cfg.variant == Variant.BOUNDED:
        return serialize_bounded(c)
    return serialize_unbounded(c)


def parse(r: BitReader, cfg: SchemeConfig) -> Cube:
    """Read one codeword from ``r``; errors carry the bit offset."""
    start = r.pos
    try:
        if cfg.variant == Variant.BOUNDED:
            k = decode_gamma_plus(r) - 1
            if k > cfg.k_max + 64:
                raise MalformedCodeword(f"level {k} out of range", start)
            v = tuple(decode_fixed(r, k) for _ in range(cfg.n))
        else:
            k = decode_delta_signed(r)
            v = tuple(decode_delta_signed(r) for _ in range(cfg.n))
    except StreamExhausted as e:
        raise StreamExhausted(f"truncated codeword: {e.detail}", start) from None
    return Cube(k, v)


def _sample_cube(c: Cube, rng) -> np.ndarray:
    lo = np.ldexp(np.array(c.v, dtype=float), -c.k)
    return lo + np.ldexp(rng.random(c.n), -c.k)


def decode(bits, cfg: SchemeConfig, rng=None) -> Decoded:
    """Decode the first codeword; ``x`` is uniform on the named cube."""
    rng = np.random.default_rng(rng)
    r = bits if isinstance(bits, BitReader) else BitReader(bits, cfg.decode_zero_cap)
    start = r.pos
    c = parse(r, cfg)
    return Decoded(_sample_cube(c, rng), c, r.pos - start)


def decode_stream(bits, cfg: SchemeConfig, rng=None) -> list[Decoded]:
    """Decode concatenated codewords until only byte padding remains."""
    rng = np.random.default_rng(rng)
    r = bits if isinstance(bits, BitReader) else BitReader(bits, cfg.decode_zero_cap)
    out = []
    while not r.at_end() and not r.only_padding_left():
        out.append(decode(r, cfg, rng))
    return out


def _check_bounded(f: Density, cfg: SchemeConfig):
    if cfg.variant != Variant.BOUNDED:
        return
    lo, hi = f.support_box.arrays()
    if np.any(lo < 0) or np.any(hi > 1):
        raise ValueError("bounded scheme needs support inside [0,1]^n")


def encode_batch(f: Density, cfg: SchemeConfig, size: int, rng=None):
    """Vectorised encoder: returns ``(k, v, x, retries)`` arrays.

    Rows whose point location runs past ``k_max`` are redrawn, at most
    ``cfg.max_retries`` times, and counted in ``retries``.
    """
    rng = np.random.default_rng(rng)
    if f.n != cfg.n:
        raise ValueError(f"density has dimension {f.n}, scheme expects {cfg.n}")
    _check_bounded(f, cfg)
    k_start = start_level(f.support_box)
    if cfg.variant == Variant.BOUNDED:
        k_start = max(k_start, 0)
    ks = np.zeros(size, dtype=np.int64)
    vs = np.zeros((size, cfg.n), dtype=np.int64)
    xs = np.zeros((size, cfg.n))
    todo = np.arange(size)
    retries = 0
    for _ in range(cfg.max_retries + 1):
        x = np.asarray(f.sample(len(todo), rng), dtype=float).reshape(len(todo), cfg.n)
        z = f.pdf(x) * (1.0 - rng.random(len(todo)))
        k, v, ok = locate_batch(x, z, f, k_max=cfg.k_max, k_start=k_start)
        done = todo[ok]
        ks[done], vs[done], xs[done] = k[ok], v[ok], x[ok]
        todo = todo[~ok]
        if len(todo) == 0:
            return ks, vs, xs, retries
        retries += len(todo)
    raise DepthExhausted(
        f"{len(todo)} samples still unresolved at level {cfg.k_max} "
        f"after {cfg.max_retries} retries"
    )


def encode_density(f: Density, cfg: SchemeConfig, rng=None) -> Encoded:
    ks, vs, xs, retries = encode_batch(f, cfg, 1, rng)
    c = Cube(int(ks[0]), tuple(vs[0]))
    return Encoded(serialize(c, cfg), c, xs[0], retries)


def encode_uniform(r: Region, cfg: SchemeConfig, rng=None) -> Encoded:
    return encode_density(UniformDensity(r), cfg, rng)


# stream files -------------------------------------------------------------


class StreamFormatError(CodeError):
    pass


def write_stream(path, codewords: Iterable[str], cfg: SchemeConfig):
    bits = "".join(codewords)
    header = HEADER.pack(MAGIC, VERSION, int(cfg.variant), cfg.n)
    with open(path, "wb") as fh:
        fh.write(header + pack_bits(bits))


def read_stream(path, k_max=40, decode_zero_cap=64):
    """Return ``(cfg, bits)`` from a stream file written by :func:`write_stream`."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < HEADER.size:
        raise StreamFormatError("file shorter than header", 0)
    magic, version, variant, n = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise StreamFormatError(f"bad magic {magic!r}", 0)
    if version != VERSION:
        raise StreamFormatError(f"unsupported version {version}", 32)
    try:
        variant = Variant(variant)
    except ValueError:
        raise StreamFormatError(f"unknown variant {variant}", 40) from None
    if n < 1:
        raise StreamFormatError("dimension must be >= 1", 48)
    cfg = SchemeConfig(variant, n, k_max, decode_zero_cap)
    return cfg, unpack_bits(data[HEADER.size:])
