"""Probability densities with exact infima over closed boxes.

The decomposition of a density into superlevel sets only needs, for each
dyadic cube, the infimum of the density over that cube (is the cube inside
``{f >= z}``?) and the probability mass of the cube.  Built-in densities
provide both in closed form, vectorised over stacks of boxes.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate
from scipy.special import ndtr

from .regions import AxisBox, Box, Cls, Region, RegionError, erosion_entropy
from .regions import sample_uniform, volume

__all__ = [
    "Density",
    "Gaussian1D",
    "ShiftedExponential",
    "ClippedCosine",
    "UniformDensity",
    "RestrictedDensity",
    "SuperlevelRegion",
    "builtin_gaussian1d",
    "builtin_shifted_exponential",
    "builtin_bell_cosine",
    "builtin_bell_unit",
    "builtin_uniform_on",
    "LevelTable",
    "level_density_and_entropy",
    "expected_level_erosion_entropy",
]

LOG2E = 1.0 / math.log(2.0)
SQRT2PI = math.sqrt(2.0 * math.pi)


def _col(lower, upper):
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if lower.ndim == 2:
        lower, upper = lower[:, 0], upper[:, 0]
    return np.atleast_1d(lower), np.atleast_1d(upper)


class Density:
    """Interface shared by all densities.

    ``cube_mass`` returns the exact integral over each box when
    ``exact_mass`` is true and an upper bound otherwise.
    """

    n = 1
    sup_f: float
    support_box: AxisBox
    exact_mass = True
    orthogonally_concave = True

    def pdf(self, x):
        raise NotImplementedError

    def cube_inf(self, lower, upper):
        raise NotImplementedError

    def cube_sup(self, lower, upper):
        raise NotImplementedError

    def cube_mass(self, lower, upper):
        raise NotImplementedError

    def sample(self, size, rng):
        raise NotImplementedError

    def level_volume(self, z):
        """Volume of ``{f >= z}`` for an array of levels."""
        raise NotImplementedError

    def level_intervals(self, z):
        """Superlevel set at a scalar level as a list of intervals (1D only)."""
        raise NotImplementedError

    def mean_inf_norm(self, xhat=0.0):
        """``E|X - xhat|`` by quadrature (1D densities)."""
        lo, hi = self.support_box.lower[0], self.support_box.upper[0]
        pts = [p for p in (xhat, *self._breakpoints()) if lo < p < hi]
        val, _ = integrate.quad(
            lambda t: abs(t - xhat) * float(self.pdf(np.array([[t]]))[0]),
            lo, hi, points=pts or None, limit=400,
        )
        return val


class Gaussian1D(Density):
    """Standard normal.  Enumeration treats ``[-8, 8]`` as the support box."""

    def __init__(self):
        self.sup_f = 1.0 / SQRT2PI
        self.support_box = AxisBox([-8.0], [8.0])

    def __repr__(self):
        return "Gaussian1D()"

    def _f(self, t):
        return np.exp(-0.5 * t * t) / SQRT2PI

    def pdf(self, x):
        return self._f(np.asarray(x, dtype=float).reshape(-1))

    def cube_inf(self, lower, upper):
        lo, hi = _col(lower, upper)
        return self._f(np.maximum(np.abs(lo), np.abs(hi)))

    def cube_sup(self, lower, upper):
        lo, hi = _col(lower, upper)
        near = np.where((lo <= 0) & (hi >= 0), 0.0, np.minimum(np.abs(lo), np.abs(hi)))
        return self._f(near)

    def cube_mass(self, lower, upper):
        lo, hi = _col(lower, upper)
        # evaluate on the left tail side to keep absolute accuracy
        right = lo >= 0
        return np.where(right, ndtr(-lo) - ndtr(-hi), ndtr(hi) - ndtr(lo))

    def cdf(self, x):
        return ndtr(np.asarray(x, dtype=float))

    def sample(self, size, rng):
        return rng.standard_normal((size, 1))

    def level_volume(self, z):
        z = np.asarray(z, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            r2 = -2.0 * np.log(z * SQRT2PI)
        return np.where(z <= self.sup_f, 2.0 * np.sqrt(np.maximum(r2, 0.0)), 0.0)

    def level_intervals(self, z):
        half = float(self.level_volume(z)) / 2
        return [(-half, half)] if half > 0 else []

    def mean_inf_norm(self, xhat=0.0):
        if xhat == 0.0:
            return math.sqrt(2.0 / math.pi)
        return super().mean_inf_norm(xhat)

    def _breakpoints(self):
        return (0.0,)


class ShiftedExponential(Density):
    """``exp(-(x - a))`` on ``[a, inf)``; support box ``[a, a + 48]``."""

    def __init__(self, a):
        if a < 0:
            raise ValueError(f"shift must be non-negative, got {a}")
        self.a = float(a)
        self.sup_f = 1.0
        self.support_box = AxisBox([self.a], [self.a + 48.0])

    def __repr__(self):
        return f"ShiftedExponential(a={self.a})"

    def pdf(self, x):
        t = np.asarray(x, dtype=float).reshape(-1) - self.a
        return np.where(t >= 0, np.exp(-np.maximum(t, 0.0)), 0.0)

    def cube_inf(self, lower, upper):
        lo, hi = _col(lower, upper)
        return np.where(lo < self.a, 0.0, np.exp(-(hi - self.a)))

    def cube_sup(self, lower, upper):
        lo, hi = _col(lower, upper)
        return np.where(hi < self.a, 0.0, np.exp(-np.maximum(lo - self.a, 0.0)))

    def cube_mass(self, lower, upper):
        lo, hi = _col(lower, upper)
        lo = np.maximum(lo - self.a, 0.0)
        hi = np.maximum(hi - self.a, 0.0)
        # exp(-lo) - exp(-hi) without cancellation for short boxes
        return np.exp(-lo) * -np.expm1(-(hi - lo))

    def cdf(self, x):
        t = np.maximum(np.asarray(x, dtype=float) - self.a, 0.0)
        return -np.expm1(-t)

    def sample(self, size, rng):
        return self.a + rng.standard_exponential((size, 1))

    def level_volume(self, z):
        z = np.asarray(z, dtype=float)
        with np.errstate(divide="ignore"):
            return np.where((z > 0) & (z <= 1.0), -np.log(np.clip(z, 1e-300, 1)), 0.0)

    def level_intervals(self, z):
        L = float(self.level_volume(z))
        return [(self.a, self.a + L)] if L > 0 else []

    def mean_inf_norm(self, xhat=0.0):
        if xhat <= self.a:
            return self.a + 1.0 - xhat
        return super().mean_inf_norm(xhat)

    def _breakpoints(self):
        return (self.a,)


class ClippedCosine(Density):
    """``(pi / P) * max(cos(2 pi (x - phase) / P), 0)`` on ``[0, P]``.

    With ``P = 1`` this is the unit-interval Bell density (peak ``pi``); with
    ``P = 2 pi`` it is ``max(cos(x - phase), 0) / 2``.  The support is an arc
    of length ``P / 2`` centred on the phase and may wrap around the ends of
    the domain.
    """

    def __init__(self, period, phase):
        self.period = float(period)
        self.phase = float(phase) % self.period
        self.amp = math.pi / self.period
        self.sup_f = self.amp
        self.support_box = AxisBox([0.0], [self.period])
        P, c = self.period, self.phase
        self.wraps = not (P / 4 <= c <= 3 * P / 4)
        # wrapped support is two pieces, each unimodal
        self.orthogonally_concave = not self.wraps

    def __repr__(self):
        return f"ClippedCosine(period={self.period!r}, phase={self.phase!r})"

    def _cos(self, x):
        return np.cos(2.0 * np.pi * (x - self.phase) / self.period)

    def pdf(self, x):
        x = np.asarray(x, dtype=float).reshape(-1)
        inside = (x >= 0) & (x <= self.period)
        return np.where(inside, self.amp * np.maximum(self._cos(x), 0.0), 0.0)

    def _contains_point(self, lo, hi, p):
        # does [lo, hi] contain a point congruent to p modulo the period
        P = self.period
        first = p + P * np.ceil((lo - p) / P)
        return first <= hi

    def cube_inf(self, lower, upper):
        lo, hi = _col(lower, upper)
        P = self.period
        trough = self._contains_point(lo, hi, self.phase + P / 2)
        m = np.minimum(self._cos(lo), self._cos(hi))
        val = self.amp * np.maximum(m, 0.0)
        bad = (lo < 0) | (hi > P) | trough | (hi - lo >= P / 2)
        return np.where(bad, 0.0, val)

    def cube_sup(self, lower, upper):
        lo, hi = _col(lower, upper)
        P = self.period
        lo_c, hi_c = np.maximum(lo, 0.0), np.minimum(hi, P)
        crest = self._contains_point(lo_c, hi_c, self.phase)
        m = np.maximum(self._cos(lo_c), self._cos(hi_c))
        val = np.where(crest, self.amp, self.amp * np.maximum(m, 0.0))
        return np.where(hi_c < lo_c, 0.0, val)

    def _antiderivative(self, x):
        # integral of pdf from phase - P/4 (start of a positive lobe)
        P = self.period
        w = x - self.phase + P / 4
        q = np.floor(w / P)
        r = (w - q * P) * (2.0 * np.pi / P)
        within = np.where(r <= np.pi, 1.0 - np.cos(r), 2.0)
        return 0.5 * (2.0 * q + within)

    def cube_mass(self, lower, upper):
        lo, hi = _col(lower, upper)
        lo = np.clip(lo, 0.0, self.period)
        hi = np.clip(hi, 0.0, self.period)
        return np.maximum(self._antiderivative(hi) - self._antiderivative(lo), 0.0)

    def cdf(self, x):
        x = np.clip(np.asarray(x, dtype=float), 0.0, self.period)
        return self._antiderivative(x) - self._antiderivative(0.0)

    def sample(self, size, rng):
        t = np.arcsin(2.0 * rng.random(size) - 1.0) * self.period / (2.0 * np.pi)
        return ((self.phase + t) % self.period).reshape(-1, 1)

    def level_volume(self, z):
        z = np.asarray(z, dtype=float)
        ratio = np.clip(z / self.amp, 0.0, 1.0)
        return np.where(z <= self.amp, self.period * np.arccos(ratio) / np.pi, 0.0)

    def level_intervals(self, z):
        half = float(self.level_volume(z)) / 2
        if half <= 0:
            return []
        a, b, P = self.phase - half, self.phase + half, self.period
        if a < 0:
            return [(0.0, b), (a + P, P)]
        if b > P:
            return [(0.0, b - P), (a, P)]
        return [(a, b)]

    def pieces(self):
        """Orthogonally concave pieces as ``(probability, lo, hi)``."""
        P, c = self.period, self.phase
        if not self.wraps:
            return [(1.0, c - P / 4, c + P / 4)]
        edge = (c + P / 4) % P if c < P / 4 else (c - P / 4) % P
        lo_mass = float(self.cdf(edge))
        return [(lo_mass, 0.0, edge), (1.0 - lo_mass, edge, P)]

    def _breakpoints(self):
        P = self.period
        return ((self.phase + P / 4) % P, (self.phase - P / 4) % P, self.phase)


class RestrictedDensity(Density):
    """A 1D density conditioned on an interval ``[a, b]`` of its support."""

    def __init__(self, base: Density, a, b, mass=None):
        self.base, self.a, self.b = base, float(a), float(b)
        lo, hi = np.array([[self.a]]), np.array([[self.b]])
        self.mass = float(base.cube_mass(lo, hi)[0]) if mass is None else float(mass)
        if not self.mass > 0:
            raise ValueError("piece carries no mass")
        self.sup_f = base.sup_f / self.mass
        self.support_box = AxisBox([self.a], [self.b])
        self.exact_mass = base.exact_mass

    def __repr__(self):
        return f"RestrictedDensity({self.base!r}, {self.a!r}, {self.b!r})"

    def pdf(self, x):
        x = np.asarray(x, dtype=float).reshape(-1)
        inside = (x >= self.a) & (x <= self.b)
        return np.where(inside, self.base.pdf(x) / self.mass, 0.0)

    def cube_inf(self, lower, upper):
        lo, hi = _col(lower, upper)
        inside = (lo >= self.a) & (hi <= self.b)
        return np.where(inside, self.base.cube_inf(lo, hi) / self.mass, 0.0)

    def cube_sup(self, lower, upper):
        lo, hi = _col(lower, upper)
        lo_c, hi_c = np.maximum(lo, self.a), np.minimum(hi, self.b)
        val = self.base.cube_sup(lo_c, np.maximum(hi_c, lo_c)) / self.mass
        return np.where(hi_c < lo_c, 0.0, val)

    def cube_mass(self, lower, upper):
        lo, hi = _col(lower, upper)
        lo_c, hi_c = np.maximum(lo, self.a), np.minimum(hi, self.b)
        val = self.base.cube_mass(lo_c, np.maximum(hi_c, lo_c)) / self.mass
        return np.where(hi_c <= lo_c, 0.0, val)

    def sample(self, size, rng):
        out = np.empty(0)
        while len(out) < size:
            x = self.base.sample(max(2 * (size - len(out)), 64), rng).reshape(-1)
            out = np.concatenate([out, x[(x >= self.a) & (x <= self.b)]])
        return out[:size].reshape(-1, 1)


class UniformDensity(Density):
    """Uniform density on a region; ``cube_inf`` comes from the classifier."""

    exact_mass = False

    def __init__(self, region: Region):
        vol = volume(region).value
        if not 0 < vol < math.inf:
            raise RegionError(f"uniform density needs 0 < volume < inf, got {vol}")
        self.region = region
        self.n = region.n
        self.vol = vol
        self.sup_f = 1.0 / vol
        self.support_box = region.bounding_box
        self.orthogonally_concave = region.orthogonally_convex

    def __repr__(self):
        return f"UniformDensity({self.region!r})"

    def pdf(self, x):
        return np.where(self.region.contains(np.atleast_2d(x)), self.sup_f, 0.0)

    def cube_inf(self, lower, upper):
        cls = self.region.classify(lower, upper)
        return np.where(cls == Cls.INSIDE, self.sup_f, 0.0)

    def cube_sup(self, lower, upper):
        cls = self.region.classify(lower, upper)
        return np.where(cls == Cls.OUTSIDE, 0.0, self.sup_f)

    def cube_mass(self, lower, upper):
        lower = np.atleast_2d(lower)
        upper = np.atleast_2d(upper)
        cls = self.region.classify(lower, upper)
        vol = np.prod(upper - lower, axis=1)
        return np.where(cls == Cls.OUTSIDE, 0.0, vol * self.sup_f)

    def sample(self, size, rng):
        return sample_uniform(self.region, size, rng)

    def level_volume(self, z):
        z = np.asarray(z, dtype=float)
        return np.where((z > 0) & (z <= self.sup_f), self.vol, 0.0)

    def level_intervals(self, z):
        if self.n != 1 or not isinstance(self.region, Box):
            raise NotImplementedError
        if 0 < z <= self.sup_f:
            return [(self.region.box.lower[0], self.region.box.upper[0])]
        return []

    def cdf(self, x):
        if self.n != 1 or not isinstance(self.region, Box):
            raise NotImplementedError("closed-form cdf only for 1D boxes")
        lo, hi = self.region.box.lower[0], self.region.box.upper[0]
        return np.clip((np.asarray(x, dtype=float) - lo) / (hi - lo), 0.0, 1.0)

    def mean_inf_norm(self, xhat=None, samples=400_000, rng=12345):
        from .regions import mean_inf_norm

        if self.n == 1 and isinstance(self.region, Box):
            xh = 0.0 if xhat is None else float(np.ravel(xhat)[0])
            lo, hi = self.region.box.lower[0], self.region.box.upper[0]
            # E|U - xh| for U uniform on [lo, hi]
            a, b = lo - xh, hi - xh
            if a >= 0 or b <= 0:
                return abs(a + b) / 2
            return (a * a + b * b) / (2 * (b - a))
        return mean_inf_norm(self.region, xhat, samples=samples, rng=rng)[0]


class SuperlevelRegion(Region):
    """``{x : f(x) >= z}`` as a region."""

    def __init__(self, f: Density, z):
        if z <= 0:
            raise ValueError("level must be positive")
        self.f = f
        self.z = float(z)
        self.n = f.n
        self.orthogonally_convex = f.orthogonally_concave

    @property
    def bounding_box(self):
        return self.f.support_box

    def contains(self, x):
        return self.f.pdf(x) >= self.z

    def classify(self, lower, upper):
        inf = self.f.cube_inf(lower, upper)
        sup = self.f.cube_sup(lower, upper)
        out = np.full(len(inf), Cls.STRADDLES, dtype=np.int8)
        out[sup < self.z] = Cls.OUTSIDE
        out[inf >= self.z] = Cls.INSIDE
        return out

    def exact_volume(self):
        return float(self.f.level_volume(self.z))

    def eroded_volume(self, s):
        try:
            ivs = self.f.level_intervals(self.z)
        except NotImplementedError:
            return super().eroded_volume(s)
        return float(sum(max(b - a - s, 0.0) for a, b in ivs))


def builtin_gaussian1d():
    return Gaussian1D()


def builtin_shifted_exponential(a):
    return ShiftedExponential(a)


def builtin_bell_cosine(theta, y_A):
    """``max(y_A cos(x - theta), 0) / 2`` on ``[0, 2 pi]``.

    ``y_A = -1`` flips the sign of the cosine, i.e. shifts the phase by pi.
    """
    if y_A not in (1, -1):
        raise ValueError("y_A must be +1 or -1")
    return ClippedCosine(2.0 * math.pi, theta + (0.0 if y_A == 1 else math.pi))


def builtin_bell_unit(theta):
    return ClippedCosine(1.0, theta)


def builtin_uniform_on(region: Region):
    return UniformDensity(region)


class LevelTable:
    """Tabulated ``f_Z(z) = V(L_z^+(f))`` on a midpoint grid."""

    def __init__(self, z, fz, dz, h, h_err, total):
        self.z = z
        self.fz = fz
        self.dz = dz
        self.h = h
        self.h_err = h_err
        self.total = total

    def __repr__(self):
        return f"LevelTable(h={self.h:.6g}, err={self.h_err:.2g}, total={self.total:.8f})"


def _level_entropy(f: Density, steps):
    dz = f.sup_f / steps
    z = (np.arange(steps) + 0.5) * dz
    fz = np.asarray(f.level_volume(z), dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        integrand = np.where(fz > 0, -fz * np.log2(fz), 0.0)
    return z, fz, dz, float(integrand.sum() * dz), float(fz.sum() * dz)


def level_density_and_entropy(f: Density, z_steps=100_000) -> LevelTable:
    """Differential entropy (bits) of the level variable Z with density f_Z.

    Midpoint rule on a uniform grid over ``(0, sup f]``; the error estimate is
    the change under step halving.
    """
    if not math.isfinite(f.sup_f):
        raise ValueError("density must be bounded")
    z, fz, dz, h, total = _level_entropy(f, z_steps)
    _, _, _, h_half, _ = _level_entropy(f, max(z_steps // 2, 1))
    if not math.isfinite(h) or abs(total - 1.0) > 1e-3:
        raise ArithmeticError(f"level density integrates to {total}, expected 1")
    return LevelTable(z, fz, dz, h, abs(h - h_half), total)


def _interval_union_erosion_entropy(ivs):
    lengths = np.array([b - a for a, b in ivs if b > a])
    L = lengths.sum()
    return LOG2E - float(np.sum(lengths / L * np.log2(lengths)))


def expected_level_erosion_entropy(f: Density, z_steps=20_000):
    """``E_Z[h(L_Z^+(f))]`` with Z distributed as f_Z.

    Closed form per level for 1D densities whose level sets are finite unions
    of intervals; for uniform densities every level set is the same region.
    """
    if isinstance(f, UniformDensity):
        return erosion_entropy(f.region)[0]
    dz = f.sup_f / z_steps
    z = (np.arange(z_steps) + 0.5) * dz
    fz = np.asarray(f.level_volume(z), dtype=float)
    h = np.empty_like(z)
    for i, zi in enumerate(z):
        ivs = f.level_intervals(zi)
        h[i] = _interval_union_erosion_entropy(ivs) if ivs else 0.0
    return float(np.sum(fz * h) * dz)
