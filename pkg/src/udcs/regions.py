"""Geometric oracles for bounded sets in R^n.

A region answers one question that everything else is built on: given a
closed axis-aligned box, is it inside the set, outside it (up to measure
zero) or straddling its boundary?  Classification is vectorised over stacks
of boxes, ``lower`` and ``upper`` both of shape ``(m, n)``.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from enum import IntEnum

import numpy as np
from scipy import integrate, optimize
from scipy.special import gammaln

__all__ = [
    "Cls",
    "AxisBox",
    "Region",
    "Box",
    "Ellipsoid",
    "PredicateRegion",
    "ErodedRegion",
    "RegionError",
    "VolumeEstimate",
    "volume",
    "eroded_volume",
    "eroded_volume_generic",
    "erosion_entropy",
    "sample_uniform",
    "mean_inf_norm",
    "lemma1_check",
]

LOG2E = 1.0 / math.log(2.0)


class Cls(IntEnum):
    OUTSIDE = 0
    INSIDE = 1
    STRADDLES = 2


class RegionError(ValueError):
    pass


@dataclass(frozen=True)
class AxisBox:
    lower: tuple
    upper: tuple

    def __post_init__(self):
        lo = tuple(float(a) for a in np.atleast_1d(self.lower))
        hi = tuple(float(b) for b in np.atleast_1d(self.upper))
        if len(lo) != len(hi):
            raise ValueError("lower/upper dimension mismatch")
        if any(a > b for a, b in zip(lo, hi)):
            raise ValueError(f"empty box {lo} > {hi}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def n(self):
        return len(self.lower)

    @property
    def widths(self):
        return tuple(b - a for a, b in zip(self.lower, self.upper))

    @property
    def volume(self):
        return float(np.prod(self.widths))

    def arrays(self):
        return np.array([self.lower]), np.array([self.upper])


def _as_boxes(lower, upper):
    lower = np.atleast_2d(np.asarray(lower, dtype=float))
    upper = np.atleast_2d(np.asarray(upper, dtype=float))
    return lower, upper


class Region:
    """Base class.  Subclasses implement :meth:`classify` and :meth:`contains`."""

    n: int
    orthogonally_convex = False

    @property
    def bounding_box(self) -> AxisBox:
        raise NotImplementedError

    def classify(self, lower, upper):
        raise NotImplementedError

    def contains(self, x):
        raise NotImplementedError

    def classify_cube(self, box: AxisBox) -> Cls:
        lo, hi = box.arrays()
        return Cls(int(self.classify(lo, hi)[0]))

    def exact_volume(self):
        """Closed-form volume, or None when only an estimate is available."""
        return None

    def eroded_volume(self, s):
        return eroded_volume_generic(self, s).value

    def translated(self, c):
        raise NotImplementedError


class Box(Region):
    orthogonally_convex = True

    def __init__(self, lower, upper):
        self.box = AxisBox(lower, upper)
        self.n = self.box.n
        self._lo = np.array(self.box.lower)
        self._hi = np.array(self.box.upper)

    def __repr__(self):
        return f"Box({list(self.box.lower)}, {list(self.box.upper)})"

    @property
    def bounding_box(self):
        return self.box

    def classify(self, lower, upper):
        lower, upper = _as_boxes(lower, upper)
        inside = np.all((lower >= self._lo) & (upper <= self._hi), axis=1)
        outside = np.any((upper <= self._lo) | (lower >= self._hi), axis=1)
        out = np.full(len(lower), Cls.STRADDLES, dtype=np.int8)
        out[outside] = Cls.OUTSIDE
        out[inside] = Cls.INSIDE
        return out

    def contains(self, x):
        x = np.atleast_2d(x)
        return np.all((x >= self._lo) & (x <= self._hi), axis=1)

    def exact_volume(self):
        return self.box.volume

    def eroded_volume(self, s):
        return float(np.prod(np.maximum(np.array(self.box.widths) - s, 0.0)))

    def translated(self, c):
        c = np.asarray(c, dtype=float)
        return Box(self._lo + c, self._hi + c)


class Ellipsoid(Region):
    """Open ellipsoid ``{x : (x - c)^T K (x - c) < 1}``.

    A closed box is Inside iff every corner satisfies the strict inequality
    (convexity).  It is Outside iff the minimum of the quadratic over the box
    is at least 1; that minimum is found exactly by checking the stationary
    point of every face.
    """

    orthogonally_convex = True

    def __init__(self, K, center=None):
        K = np.atleast_2d(np.asarray(K, dtype=float))
        if K.shape[0] != K.shape[1]:
            raise ValueError("K must be square")
        if not np.allclose(K, K.T):
            raise ValueError("K must be symmetric")
        if np.linalg.eigvalsh(K).min() <= 0:
            raise ValueError("K must be positive definite")
        self.K = K
        self.n = K.shape[0]
        self.center = np.zeros(self.n) if center is None else np.asarray(center, float)
        half = np.sqrt(np.diag(np.linalg.inv(K)))
        self._box = AxisBox(self.center - half, self.center + half)
        self._faces = self._face_table()

    def __repr__(self):
        return f"Ellipsoid(K={self.K.tolist()}, center={self.center.tolist()})"

    def _face_table(self):
        # pattern entries: -1 lower bound, +1 upper bound, 0 free coordinate
        K = self.K
        faces = []
        for pat in itertools.product((-1, 0, 1), repeat=self.n):
            pat = np.array(pat)
            free = np.flatnonzero(pat == 0)
            fixed = np.flatnonzero(pat != 0)
            if len(free):
                Kff_inv = np.linalg.inv(K[np.ix_(free, free)])
                solve = -Kff_inv @ K[np.ix_(free, fixed)]
                schur = K[np.ix_(fixed, fixed)] - K[np.ix_(fixed, free)] @ Kff_inv @ K[
                    np.ix_(free, fixed)
                ]
            else:
                solve = np.zeros((0, len(fixed)))
                schur = K
            faces.append((pat, free, fixed, solve, schur))
        return faces

    @property
    def bounding_box(self):
        return self._box

    def quad(self, x):
        y = np.atleast_2d(x) - self.center
        return np.einsum("mi,ij,mj->m", y, self.K, y)

    def contains(self, x):
        return self.quad(x) < 1.0

    def box_min(self, lower, upper):
        lower, upper = _as_boxes(lower, upper)
        lo = lower - self.center
        hi = upper - self.center
        best = np.full(len(lo), np.inf)
        for pat, free, fixed, solve, schur in self._faces:
            xg = np.where(pat[fixed] < 0, lo[:, fixed], hi[:, fixed])
            val = np.einsum("mi,ij,mj->m", xg, schur, xg)
            if len(free):
                yf = xg @ solve.T
                ok = np.all((yf >= lo[:, free]) & (yf <= hi[:, free]), axis=1)
                val = np.where(ok, val, np.inf)
            np.minimum(best, val, out=best)
        return best

    def corner_max(self, lower, upper):
        lower, upper = _as_boxes(lower, upper)
        lo = lower - self.center
        hi = upper - self.center
        worst = np.full(len(lo), -np.inf)
        for pat in itertools.product((0, 1), repeat=self.n):
            x = np.where(np.array(pat, bool), hi, lo)
            np.maximum(worst, np.einsum("mi,ij,mj->m", x, self.K, x), out=worst)
        return worst

    def classify(self, lower, upper):
        out = np.full(len(np.atleast_2d(lower)), Cls.STRADDLES, dtype=np.int8)
        out[self.box_min(lower, upper) >= 1.0] = Cls.OUTSIDE
        out[self.corner_max(lower, upper) < 1.0] = Cls.INSIDE
        return out

    def exact_volume(self):
        n = self.n
        unit_ball = math.exp(0.5 * n * math.log(math.pi) - gammaln(0.5 * n + 1))
        return unit_ball / math.sqrt(np.linalg.det(self.K))

    def eroded_volume(self, s):
        if self.n == 1:
            return max(2.0 / math.sqrt(self.K[0, 0]) - s, 0.0)
        if self.n == 2:
            return _ellipse_eroded_area(self.K, s)
        return eroded_volume_generic(self, s).value

    def translated(self, c):
        return Ellipsoid(self.K, self.center + np.asarray(c, float))


def _ellipse_eroded_area(K, s):
    # slice along x1: at abscissa t the eroded set is the x2-range where the
    # square [t, t+s] x [y, y+s] has all four corners inside (convexity)
    k11, k12, k22 = K[0, 0], K[0, 1], K[1, 1]
    det = k11 * k22 - k12 * k12
    R = math.sqrt(k22 / det)
    if s >= 2 * R:
        return 0.0

    def chord(t):
        root = math.sqrt(max(k22 - det * t * t, 0.0))
        return (-k12 * t - root) / k22, (-k12 * t + root) / k22

    def g(t):
        lo1, hi1 = chord(t)
        lo2, hi2 = chord(t + s)
        return max(min(hi1, hi2) - s - max(lo1, lo2), 0.0)

    # kinks where the chord ends at t and t+s cross
    a, b = -R, R - s
    pts = []
    for end in (0, 1):
        def diff(t, end=end):
            return chord(t)[end] - chord(t + s)[end]
        if diff(a) * diff(b) < 0:
            pts.append(optimize.brentq(diff, a, b, xtol=1e-14))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, _ = integrate.quad(g, a, b, points=sorted(pts) or None, limit=400,
                                epsabs=1e-13, epsrel=1e-11)
    return val


class PredicateRegion(Region):
    """User region given by a membership predicate.

    Without an explicit ``classifier`` a box is certified Inside only for
    orthogonally convex sets (then corners inside implies box inside); it is
    certified Outside only when it misses the bounding box.  Regions that are
    not orthogonally convex and have no classifier are refused.
    """

    def __init__(self, member, bbox: AxisBox, orthogonally_convex=False,
                 classifier=None, volume=None):
        self.member = member
        self._box = bbox
        self.n = bbox.n
        self.orthogonally_convex = orthogonally_convex
        self.classifier = classifier
        self._volume = volume

    @property
    def bounding_box(self):
        return self._box

    def contains(self, x):
        return np.asarray(self.member(np.atleast_2d(x)), dtype=bool)

    def classify(self, lower, upper):
        lower, upper = _as_boxes(lower, upper)
        if self.classifier is not None:
            return np.asarray(self.classifier(lower, upper), dtype=np.int8)
        if not self.orthogonally_convex:
            raise RegionError(
                "no sound cube classifier for a region that is not orthogonally convex"
            )
        ok = np.ones(len(lower), dtype=bool)
        for pat in itertools.product((0, 1), repeat=self.n):
            ok &= self.contains(np.where(np.array(pat, bool), upper, lower))
        out = np.full(len(lower), Cls.STRADDLES, dtype=np.int8)
        out[ok] = Cls.INSIDE
        bb = Box(self._box.lower, self._box.upper).classify(lower, upper)
        out[bb == Cls.OUTSIDE] = Cls.OUTSIDE
        return out

    def exact_volume(self):
        return self._volume


class ErodedRegion(Region):
    """``A ⊖ [0, s]^n`` built on the classifier of ``A``.

    Every point of a box ``[l, u]`` is in the erosion iff ``[l, u + s]`` is
    inside ``A``; no point (up to measure zero) is when ``u - l < s`` and the
    common core ``[u, l + s]`` is outside ``A``.
    """

    def __init__(self, base: Region, s):
        if s <= 0:
            raise ValueError("side must be positive")
        self.base = base
        self.s = float(s)
        self.n = base.n
        bb = base.bounding_box
        self._box = AxisBox(bb.lower, np.maximum(np.array(bb.upper) - s, bb.lower))

    @property
    def bounding_box(self):
        return self._box

    def contains(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return self.base.classify(x, x + self.s) == Cls.INSIDE

    def classify(self, lower, upper):
        lower, upper = _as_boxes(lower, upper)
        s = self.s
        out = np.full(len(lower), Cls.STRADDLES, dtype=np.int8)
        inside = self.base.classify(lower, upper + s) == Cls.INSIDE
        thin = np.all(upper - lower < s, axis=1)
        core_out = np.zeros(len(lower), dtype=bool)
        if thin.any():
            core_out[thin] = (
                self.base.classify(upper[thin], lower[thin] + s) == Cls.OUTSIDE
            )
        out[core_out] = Cls.OUTSIDE
        # the erosion lies inside the shrunken bounding box
        bb = self._box
        out[np.any((upper <= bb.lower) | (lower >= bb.upper), axis=1)] = Cls.OUTSIDE
        out[inside] = Cls.INSIDE
        return out


@dataclass(frozen=True)
class VolumeEstimate:
    value: float
    lower: float
    upper: float


def _dyadic_volume(region: Region, resolution: float, max_cells=4_000_000):
    bb = region.bounding_box
    n = region.n
    width = max(bb.widths)
    if not np.isfinite(width):
        raise RegionError("unbounded bounding box")
    if width == 0:
        return VolumeEstimate(0.0, 0.0, 0.0)
    k = math.floor(-math.log2(width)) - 1
    ranges = [np.arange(math.floor(a * 2.0**k), math.ceil(b * 2.0**k) + 1)
              for a, b in zip(bb.lower, bb.upper)]
    v = np.array(list(itertools.product(*ranges)), dtype=np.int64).reshape(-1, n)
    offs = np.array(list(itertools.product((0, 1), repeat=n)), dtype=np.int64)
    inside = 0.0
    k_stop = math.ceil(-math.log2(resolution))
    while True:
        lo = np.ldexp(v.astype(float), -k)
        hi = np.ldexp((v + 1).astype(float), -k)
        cls = region.classify(lo, hi)
        cell = 2.0 ** (-n * k)
        inside += np.count_nonzero(cls == Cls.INSIDE) * cell
        v = v[cls == Cls.STRADDLES]
        if k >= k_stop or len(v) == 0 or len(v) * 2**n > max_cells:
            # midpoint rule on the undecided cells for the point estimate
            hit = 0
            if len(v):
                hit = np.count_nonzero(region.contains(np.ldexp(v + 0.5, -k)))
            return VolumeEstimate(inside + hit * cell, inside,
                                  inside + len(v) * cell)
        v = (2 * v[:, None, :] + offs[None]).reshape(-1, n)
        k += 1


def volume(region: Region, resolution=2.0**-12) -> VolumeEstimate:
    """Volume of a region: exact when a closed form exists, else bracketed."""
    if not np.all(np.isfinite(region.bounding_box.widths)):
        raise RegionError("unbounded bounding box")
    exact = region.exact_volume()
    if exact is not None:
        return VolumeEstimate(exact, exact, exact)
    return _dyadic_volume(region, resolution)


def eroded_volume_generic(region: Region, s, resolution=2.0**-12) -> VolumeEstimate:
    """Volume of ``A ⊖ [0, s]^n`` through the region's cube classifier only."""
    return _dyadic_volume(ErodedRegion(region, s), resolution)


def eroded_volume(region: Region, s) -> float:
    if s <= 0:
        raise ValueError("side must be positive")
    return region.eroded_volume(s)


def _trapezoid(fun, a, b, steps):
    t = np.linspace(a, b, steps + 1)
    y = np.array([fun(ti) for ti in t])
    return float(integrate.trapezoid(y, t))


def erosion_entropy(region: Region, t_lo=None, t_hi=30.0, steps=4096):
    """Erosion entropy by the unit hypercube, in bits.

    Returns ``(value, error)`` where the error is the change under step
    halving.  The indicator jump at ``t = 0`` is kept on a grid node.
    """
    vol = volume(region).value
    if vol <= 0:
        raise RegionError("erosion entropy needs positive volume")
    if t_lo is None:
        t_lo = -math.log2(max(region.bounding_box.widths)) - 2.0
    t_lo = min(t_lo, 0.0)

    cache = {}

    def frac(t):
        if t not in cache:
            cache[t] = region.eroded_volume(2.0 ** (-t)) / vol
        return cache[t]

    def left(t):
        return -frac(t)

    def right(t):
        return 1.0 - frac(t)

    span = t_hi - t_lo
    n_left = max(2, int(round(steps * (-t_lo) / span)) // 2 * 2)
    n_right = max(2, (steps - n_left) // 2 * 2)

    def total(nl, nr):
        val = _trapezoid(right, 0.0, t_hi, nr)
        if t_lo < 0:
            val += _trapezoid(left, t_lo, 0.0, nl)
        # tail beyond t_hi decays like 2^-t
        return val + right(t_hi) * LOG2E

    fine = total(n_left, n_right)
    coarse = total(n_left // 2, n_right // 2)
    return fine, abs(fine - coarse)


def sample_uniform(region: Region, size, rng, batch=None):
    """Rejection sampler from the bounding box."""
    bb = region.bounding_box
    lo, hi = np.array(bb.lower), np.array(bb.upper)
    out = []
    got = 0
    tried = 0
    batch = batch or max(1024, 2 * size)
    while got < size:
        x = rng.uniform(lo, hi, size=(batch, region.n))
        keep = x[region.contains(x)]
        tried += batch
        out.append(keep)
        got += len(keep)
        if tried >= 10**6 and got / tried < 1e-6:
            raise RegionError("rejection sampling acceptance below 1e-6")
    return np.concatenate(out)[:size]


def mean_inf_norm(region: Region, xhat=None, samples=200_000, rng=None):
    """Monte Carlo ``E||X - xhat||_inf`` for X uniform on the region.

    Returns ``(mean, stderr)``.
    """
    rng = np.random.default_rng(rng)
    xhat = np.zeros(region.n) if xhat is None else np.asarray(xhat, float)
    x = sample_uniform(region, samples, rng)
    d = np.max(np.abs(x - xhat), axis=1)
    return float(d.mean()), float(d.std(ddof=1) / math.sqrt(len(d)))


def lemma1_check(region: Region, mean_norm=None, samples=200_000, rng=None,
                 tol=1e-3):
    """Both sides of the erosion-entropy versus mean-norm inequality."""
    if not region.orthogonally_convex:
        raise RegionError("inequality applies to orthogonally convex sets only")
    n = region.n
    h, err = erosion_entropy(region)
    if mean_norm is None:
        mean_norm, _ = mean_inf_norm(region, samples=samples, rng=rng)
    vol = volume(region).value
    norm_term = (n - 1) * math.log2(mean_norm) if n > 1 else 0.0
    rhs = norm_term - math.log2(vol) + 4 * n
    return {"lhs": h, "lhs_error": err, "rhs": rhs, "holds": bool(h <= rhs + tol)}
