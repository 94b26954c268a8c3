"""Dyadic cubes, decomposition membership, point location and enumeration.

Enumeration is breadth first and vectorised: each level holds the integer
corners ``v`` of the cubes still undecided, and the next level is their
``2^n`` children.  For a density the probability that the superlevel-set
scheme picks cube ``c`` is

    2^{-nk} * max(0, inf_c f - inf_parent(c) f),

because ``c`` is in the decomposition of ``{f >= z}`` exactly for
``z`` in ``(inf_parent, inf_c]``.  Everything a cube's descendants can still
receive is ``mass(c) - 2^{-nk} inf_c f``; that quantity drives pruning and
the truncation residual.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .densities import Density, UniformDensity
from .regions import AxisBox, Cls, Region, RegionError

__all__ = [
    "Cube",
    "MassAtom",
    "AtomBatch",
    "Decomposition",
    "DepthExhausted",
    "cube_box",
    "start_level",
    "in_decomposition",
    "locate",
    "locate_batch",
    "enumerate_uniform",
    "enumerate_density",
]


@dataclass(frozen=True, order=True)
class Cube:
    k: int
    v: tuple

    def __post_init__(self):
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "v", tuple(int(a) for a in np.atleast_1d(self.v)))

    @property
    def n(self):
        return len(self.v)

    @property
    def side(self):
        return math.ldexp(1.0, -self.k)

    def parent(self):
        return Cube(self.k - 1, tuple(a // 2 for a in self.v))

    def children(self):
        return [Cube(self.k + 1, tuple(2 * a + b for a, b in zip(self.v, bits)))
                for bits in itertools.product((0, 1), repeat=self.n)]


@dataclass(frozen=True)
class MassAtom:
    cube: Cube
    mass: float


class DepthExhausted(RuntimeError):
    """Point location hit the depth cap; ``cube`` is the deepest one tried."""

    def __init__(self, message, cube=None):
        super().__init__(message)
        self.cube = cube


def cube_box(c: Cube) -> AxisBox:
    lo = [math.ldexp(a, -c.k) for a in c.v]
    hi = [math.ldexp(a + 1, -c.k) for a in c.v]
    return AxisBox(lo, hi)


def _boxes(v, k):
    return np.ldexp(v.astype(float), -k), np.ldexp((v + 1).astype(float), -k)


def start_level(box: AxisBox) -> int:
    """Coarsest level searched: its cubes are wider than the bounding box."""
    width = max(box.widths)
    if not math.isfinite(width):
        raise RegionError("unbounded support box")
    if width <= 0:
        raise RegionError("degenerate support box")
    return math.floor(-math.log2(width)) - 1


def _root_cubes(box: AxisBox, k):
    ranges = []
    for a, b in zip(box.lower, box.upper):
        lo = math.floor(math.ldexp(a, k))
        hi = max(math.ceil(math.ldexp(b, k)) - 1, lo)
        ranges.append(np.arange(lo, hi + 1, dtype=np.int64))
    return np.array(list(itertools.product(*ranges)), dtype=np.int64).reshape(
        -1, box.n
    )


def in_decomposition(c: Cube, r: Region) -> bool:
    """Is ``c`` one of the maximal dyadic cubes of ``r``?"""
    if r.classify_cube(cube_box(c)) != Cls.INSIDE:
        return False
    return r.classify_cube(cube_box(c.parent())) != Cls.INSIDE


def _as_density(target):
    if isinstance(target, Density):
        return target
    if isinstance(target, Region):
        return UniformDensity(target)
    raise TypeError(f"expected Region or Density, got {type(target).__name__}")


def locate_batch(x, z, f: Density, k_max=40, k_start=None):
    """Vectorised point location in the decomposition of ``{f >= z}``.

    Returns ``(k, v, ok)``; rows with ``ok`` false never became Inside by
    level ``k_max`` and carry the deepest cube tried.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    z = np.asarray(z, dtype=float).reshape(-1)
    m, n = x.shape
    if k_start is None:
        k_start = start_level(f.support_box)
    ks = np.full(m, k_max, dtype=np.int64)
    vs = np.zeros((m, n), dtype=np.int64)
    todo = np.arange(m)
    for k in range(k_start, k_max + 1):
        if len(todo) == 0:
            break
        v = np.floor(np.ldexp(x[todo], k)).astype(np.int64)
        lo, hi = _boxes(v, k)
        hit = f.cube_inf(lo, hi) >= z[todo]
        done = todo[hit]
        ks[done] = k
        vs[done] = v[hit]
        vs[todo[~hit]] = v[~hit]
        todo = todo[~hit]
    ok = np.ones(m, dtype=bool)
    ok[todo] = False
    return ks, vs, ok


def locate(x, r, k_max=40, z=None) -> Cube:
    """Decomposition cube of a region (or of a density's level set) holding x.

    ``r`` may be a :class:`Region`, in which case the decomposition of the
    region itself is searched, or a :class:`Density` together with a level
    ``z``.  Half-open cubes break ties on shared faces.
    """
    f = _as_density(r)
    if z is None:
        if not isinstance(r, Region):
            raise ValueError("a level z is required for a density")
        z = f.sup_f
    x = np.asarray(x, dtype=float).reshape(1, -1)
    ks, vs, ok = locate_batch(x, [z], f, k_max=k_max)
    cube = Cube(int(ks[0]), tuple(vs[0]))
    if not ok[0]:
        raise DepthExhausted(f"no decomposition cube up to level {k_max}", cube)
    return cube


@dataclass
class AtomBatch:
    """Atoms of one level: ``v`` has shape ``(m, n)``."""

    k: int
    v: np.ndarray
    mass: np.ndarray

    def __len__(self):
        return len(self.mass)


@dataclass
class Decomposition:
    n: int
    k_start: int
    k_max: int
    batches: list = field(default_factory=list)
    residual: float = 0.0
    residual_bound: float = 0.0
    pruned: float = 0.0
    frontier_mass: float = 0.0
    outside_mass: float = 0.0
    frontier_count: int = 0
    exact_residual: bool = True
    # sum of all descendant mass bounds; equals residual for exact densities

    @property
    def total_mass(self):
        return float(sum(b.mass.sum() for b in self.batches))

    @property
    def atom_count(self):
        return sum(len(b) for b in self.batches)

    def atoms(self) -> Iterator[MassAtom]:
        for b in self.batches:
            for v, m in zip(b.v, b.mass):
                yield MassAtom(Cube(b.k, tuple(v)), float(m))

    def as_dict(self):
        return {MassAtom(a.cube, 0).cube: a.mass for a in self.atoms()}

    def arrays(self):
        """Concatenated ``(k, v, mass)`` over all levels."""
        if not self.batches:
            return (np.zeros(0, np.int64), np.zeros((0, self.n), np.int64),
                    np.zeros(0))
        k = np.concatenate([np.full(len(b), b.k, np.int64) for b in self.batches])
        v = np.concatenate([b.v for b in self.batches])
        m = np.concatenate([b.mass for b in self.batches])
        return k, v, m

    def to_csv(self, fh, lengths=None):
        """Write ``k, v1..vn, mass[, length]`` rows; ``lengths`` aligns with :meth:`arrays`."""
        import csv

        k, v, m = self.arrays()
        w = csv.writer(fh)
        head = ["k"] + [f"v{i + 1}" for i in range(self.n)] + ["mass"]
        w.writerow(head + (["length"] if lengths is not None else []))
        for i in range(len(m)):
            row = [int(k[i])] + [int(a) for a in v[i]] + [format(float(m[i]), ".17g")]
            if lengths is not None:
                row.append(int(lengths[i]))
            w.writerow(row)


def enumerate_density(f: Density, k_max=20, prune_tol=1e-15, k_start=None,
                      chunk=1 << 21) -> Decomposition:
    """All atoms ``(cube, mass)`` of the superlevel-set scheme up to ``k_max``.

    A cube whose descendants can receive at most ``prune_tol`` is not
    refined further; that mass is added to the residual, never dropped.
    """
    if not math.isfinite(f.sup_f):
        raise ValueError("density must be bounded")
    n = f.n
    if k_start is None:
        k_start = start_level(f.support_box)
    if k_max < k_start:
        raise ValueError("k_max below the starting level")
    dec = Decomposition(n=n, k_start=k_start, k_max=k_max,
                        exact_residual=f.exact_mass)
    offs = np.array(list(itertools.product((0, 1), repeat=n)), dtype=np.int64)

    v = _root_cubes(f.support_box, k_start)
    inf_parent = np.zeros(len(v))
    if f.exact_mass:
        lo, hi = _boxes(v, k_start)
        dec.outside_mass = max(0.0, 1.0 - float(f.cube_mass(lo, hi).sum()))

    k = k_start
    while len(v):
        vol = math.ldexp(1.0, -n * k)
        next_v, next_inf = [], []
        atoms_v, atoms_m = [], []
        for s in range(0, len(v), chunk):
            vc = v[s:s + chunk]
            lo, hi = _boxes(vc, k)
            inf = f.cube_inf(lo, hi)
            mass = vol * np.maximum(inf - inf_parent[s:s + chunk], 0.0)
            hit = mass > 0
            if hit.any():
                atoms_v.append(vc[hit])
                atoms_m.append(mass[hit])
            desc = np.maximum(f.cube_mass(lo, hi) - vol * inf, 0.0)
            if k == k_max:
                dec.frontier_mass += float(desc.sum())
                dec.frontier_count += int(np.count_nonzero(desc > 0))
                continue
            keep = desc > prune_tol
            dec.pruned += float(desc[~keep].sum())
            if keep.any():
                kv = vc[keep]
                next_v.append((2 * kv[:, None, :] + offs[None]).reshape(-1, n))
                next_inf.append(np.repeat(inf[keep], len(offs)))
        if atoms_v:
            dec.batches.append(AtomBatch(k, np.concatenate(atoms_v),
                                         np.concatenate(atoms_m)))
        if k == k_max or not next_v:
            break
        v = np.concatenate(next_v)
        inf_parent = np.concatenate(next_inf)
        k += 1

    bound = dec.pruned + dec.frontier_mass + dec.outside_mass
    dec.residual_bound = bound
    if f.exact_mass:
        dec.residual = bound
    else:
        dec.residual = max(0.0, 1.0 - dec.total_mass)
    return dec


def enumerate_uniform(r: Region, k_max=16, **kw) -> Decomposition:
    """Decomposition of a region into maximal dyadic cubes, masses ``2^{-nk}/V``."""
    return enumerate_density(UniformDensity(r), k_max=k_max, **kw)
