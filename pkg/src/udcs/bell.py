"""Classical simulation of Bell-state correlations with one-way communication.

Alice draws ``y_A`` uniformly, then sends a codeword for a point ``X`` on the
circle with density ``max(y_A cos(x - theta_A), 0) / 2``.  Bob outputs
``-sgn(cos(X - theta_B))``.  Working on the unit interval, ``y_A = -1`` is a
phase shift by one half, so both cases use the bounded scheme on
``pi * max(cos(2 pi (u - phase)), 0)``.

When the support wraps around ``u = 0`` the density can optionally be split
into its two unimodal pieces; one leading bit then says which piece the
codeword belongs to.  Both pieces live in the same coordinates, so Bob
does not need that bit to decode; it only costs one bit on those rounds.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .analysis import bound_thm3, codeword_lengths, expected_length
from .codec import SchemeConfig, Variant, decode, encode_batch, serialize
from .codes import BitReader
from .densities import ClippedCosine, RestrictedDensity, builtin_bell_unit
from .dyadic import Cube

__all__ = [
    "BellRound",
    "unit_phase",
    "alice_round",
    "bob_round",
    "bob_output",
    "correlation_experiment",
    "SweepRow",
    "length_sweep",
    "write_sweep_csv",
    "bell_bound",
]

TWO_PI = 2.0 * math.pi
BELL_CFG = SchemeConfig(Variant.BOUNDED, 1, 40)


@dataclass
class BellRound:
    theta_A: float
    theta_B: float
    y_A: int
    y_B: int
    bits_used: int


@dataclass
class AliceMessage:
    y_A: int
    codeword: str
    cube: Cube
    split: bool


def unit_phase(theta_A, y_A):
    """Phase on the unit interval: ``theta_A / 2 pi``, plus one half if ``y_A = -1``."""
    return (np.asarray(theta_A) / TWO_PI + (1 - np.asarray(y_A)) / 4.0) % 1.0


def _pieces(f: ClippedCosine):
    return [(p, RestrictedDensity(f, a, b, mass=p)) for p, a, b in f.pieces()]


def _encode_one(f: ClippedCosine, rng, split, cfg):
    if split and f.wraps:
        (p0, f0), (_, f1) = _pieces(f)
        idx = 0 if rng.random() < p0 else 1
        k, v, _, _ = encode_batch((f0, f1)[idx], cfg, 1, rng)
        c = Cube(int(k[0]), tuple(v[0]))
        return str(idx) + serialize(c, cfg), c
    k, v, _, _ = encode_batch(f, cfg, 1, rng)
    c = Cube(int(k[0]), tuple(v[0]))
    return serialize(c, cfg), c


def alice_round(theta_A, rng=None, split=False, cfg=BELL_CFG) -> AliceMessage:
    rng = np.random.default_rng(rng)
    y_A = 1 if rng.random() < 0.5 else -1
    f = builtin_bell_unit(float(unit_phase(theta_A, y_A)))
    bits, c = _encode_one(f, rng, split, cfg)
    return AliceMessage(y_A, bits, c, split and f.wraps)


def bob_output(x_unit, theta_B):
    """``-sgn(cos(2 pi x - theta_B))`` with ``sgn(0) = +1``."""
    c = np.cos(TWO_PI * np.asarray(x_unit, dtype=float) - theta_B)
    return np.where(c >= 0, -1, 1)


def bob_round(codeword, theta_B, rng=None, split=False, cfg=BELL_CFG) -> int:
    """Decode Alice's codeword and return ``y_B``.

    With ``split`` the first bit is a piece selector.  It is read and
    dropped, since the cube coordinates do not depend on it.
    """
    rng = np.random.default_rng(rng)
    r = BitReader(codeword, cfg.decode_zero_cap)
    if split:
        r.read_bit()
    d = decode(r, cfg, rng)
    return int(bob_output(d.x[0], theta_B))


def _encode_many(f: ClippedCosine, size, rng, split, cfg):
    """Vectorised Alice for one density: ``(k, v, extra_bits)``."""
    if not (split and f.wraps):
        k, v, _, _ = encode_batch(f, cfg, size, rng)
        return k, v, np.zeros(size, dtype=np.int64)
    (p0, f0), (_, f1) = _pieces(f)
    first = rng.random(size) < p0
    k = np.zeros(size, dtype=np.int64)
    v = np.zeros((size, 1), dtype=np.int64)
    for mask, g in ((first, f0), (~first, f1)):
        if mask.any():
            k[mask], v[mask], _, _ = encode_batch(g, cfg, int(mask.sum()), rng)
    return k, v, np.ones(size, dtype=np.int64)


def correlation_experiment(theta_A, theta_B, rounds=10**5, rng=None, split=False,
                           through_bits=True, cfg=BELL_CFG):
    """Estimate ``E[y_A y_B]`` and the marginals over ``rounds`` rounds.

    With ``through_bits`` every codeword is serialised and Bob decodes the
    bit string, otherwise Bob samples straight from the encoder's cubes.
    """
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    rng = np.random.default_rng(rng)
    y_A = np.where(rng.random(rounds) < 0.5, 1, -1)
    k = np.zeros(rounds, dtype=np.int64)
    v = np.zeros((rounds, 1), dtype=np.int64)
    extra = np.zeros(rounds, dtype=np.int64)
    for ya in (1, -1):
        m = y_A == ya
        if m.any():
            f = builtin_bell_unit(float(unit_phase(theta_A, ya)))
            k[m], v[m], extra[m] = _encode_many(f, int(m.sum()), rng, split, cfg)
    if through_bits:
        stream = "".join(serialize(Cube(kk, (vv,)), cfg) for kk, vv in zip(k.tolist(), v[:, 0].tolist()))
        r = BitReader(stream, cfg.decode_zero_cap)
        x = np.empty(rounds)
        for i in range(rounds):
            d = decode(r, cfg, rng)
            if d.cube.k != k[i] or d.cube.v[0] != v[i, 0]:
                raise AssertionError(f"round {i}: decoded cube differs from sent cube")
            x[i] = d.x[0]
    else:
        x = np.ldexp(v[:, 0] + rng.random(rounds), -k)
    y_B = bob_output(x, theta_B)
    prod = y_A * y_B
    bits = codeword_lengths(k, v, Variant.BOUNDED) + extra
    return {
        "theta_A": float(theta_A),
        "theta_B": float(theta_B),
        "rounds": int(rounds),
        "estimate": float(prod.mean()),
        "stderr": float(prod.std(ddof=1) / math.sqrt(rounds)) if rounds > 1 else 0.0,
        "target": -math.cos(theta_A - theta_B),
        "p_yA_plus": float((y_A == 1).mean()),
        "p_yB_plus": float((y_B == 1).mean()),
        "mean_bits": float(bits.mean()),
        "max_bits": int(bits.max()),
    }


@dataclass
class SweepRow:
    theta: float
    mean_length_lower: float
    mean_length_upper: float
    mean_length: float
    wraps: bool
    with_split_penalty: float


def length_sweep(thetas, k_max=17):
    """Enumerated bounded-scheme E[L] for ``builtin_bell_unit(theta)``.

    ``with_split_penalty`` adds the selector bit on wrapped supports.  The
    cut between pieces sits where the density is zero, so the pieces'
    decompositions are exactly the decomposition of the whole density and
    the penalty is exactly one bit there.
    """
    rows = []
    for t in np.asarray(thetas, dtype=float):
        f = builtin_bell_unit(float(t))
        rep = expected_length(f, Variant.BOUNDED, k_max)
        rows.append(SweepRow(float(t), rep.mean_length_lower, rep.mean_length_upper,
                             rep.mean_length, bool(f.wraps),
                             rep.mean_length_upper + (1.0 if f.wraps else 0.0)))
    return rows


def write_sweep_csv(rows, path_or_file):
    fields = ["theta", "mean_length_lower", "mean_length_upper", "mean_length",
              "wraps", "with_split_penalty"]
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        w = csv.writer(fh)
        w.writerow(fields)
        for r in rows:
            w.writerow([repr(r.theta), repr(r.mean_length_lower), repr(r.mean_length_upper),
                        repr(r.mean_length), int(r.wraps), repr(r.with_split_penalty)])
    finally:
        if own:
            fh.close()


def bell_bound():
    """Bounded-scheme bound at ``log sup f = log pi`` plus the one-bit split penalty."""
    return bound_thm3(1, math.log2(math.pi)) + 1.0
