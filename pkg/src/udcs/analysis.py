"""Expected lengths, codeword entropy, closed-form bounds, implied distribution.

All logs are base 2.  Length reductions run over the atom arrays produced by
:func:`udcs.dyadic.enumerate_density`; nothing is materialised per cube
beyond those arrays.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .codec import SchemeConfig, Variant, encode_batch
from .codes import delta_signed_length, delta_signed_length_array
from .densities import Density
from .dyadic import Decomposition, enumerate_density

__all__ = [
    "LengthReport",
    "codeword_lengths",
    "length_report",
    "expected_length",
    "mc_expected_length",
    "ell_delta",
    "bound_thm1",
    "bound_cor1",
    "bound_thm2",
    "bound_cor2",
    "bound_thm3",
    "bound_app2",
    "ImpliedDistribution",
    "implied_distribution",
    "RelativeEntropy",
    "CoverageError",
    "relative_entropy_lb",
    "loglog_slope",
    "applicable_bounds",
]

LOG2E = math.log2(math.e)


def _floor_log2_arr(m):
    _, e = np.frexp(np.asarray(m, dtype=np.float64))
    return e.astype(np.int64) - 1


def codeword_lengths(k, v, variant) -> np.ndarray:
    """Codeword lengths for arrays of cubes (``v`` has shape ``(m, n)``)."""
    variant = Variant.parse(variant)
    k = np.asarray(k, dtype=np.int64)
    v = np.atleast_2d(np.asarray(v, dtype=np.int64))
    if variant == Variant.BOUNDED:
        if np.any(k < 0):
            raise ValueError("bounded scheme needs k >= 0")
        return v.shape[1] * k + 2 * _floor_log2_arr(k + 1) + 1
    return delta_signed_length_array(k) + delta_signed_length_array(v).sum(axis=1)


@dataclass
class LengthReport:
    mean_length_lower: float
    mean_length_upper: float
    mean_length: float  # normalised over the covered mass
    entropy_HW: float
    atom_count: int
    residual_mass: float
    residual_bound: float
    covered_mass: float
    k_max: int
    variant: str

    def to_json(self):
        return json.dumps(asdict(self))


def _far_length(dec: Decomposition, f: Density, variant):
    k = dec.k_max
    lo, hi = (np.ravel(a) for a in f.support_box.arrays())
    far = np.maximum(np.abs(np.floor(np.ldexp(lo, k))), np.abs(np.floor(np.ldexp(hi, k))))
    return int(codeword_lengths([k], far[None].astype(np.int64), variant)[0])


def length_report(dec: Decomposition, f: Density, variant) -> LengthReport:
    """E[L] and H(W) from an enumeration.

    The lower bracket gives the residual mass zero length; the upper one
    gives it the length of a depth ``k_max`` codeword at the far corner of
    the support box.
    """
    variant = Variant.parse(variant)
    k, v, m = dec.arrays()
    L = codeword_lengths(k, v, variant)
    M = float(m.sum())
    if M <= 0:
        raise ValueError("enumeration produced no mass")
    s = float((m * L).sum())
    p = m / M
    H = float(-(p * np.log2(p)).sum())
    R = dec.residual
    return LengthReport(
        mean_length_lower=s,
        mean_length_upper=s + R * _far_length(dec, f, variant),
        mean_length=s / M,
        entropy_HW=H,
        atom_count=int(len(m)),
        residual_mass=R,
        residual_bound=dec.residual_bound,
        covered_mass=M,
        k_max=dec.k_max,
        variant=variant.name.lower(),
    )


def expected_length(f: Density, variant="unbounded", k_max=20, **kw) -> LengthReport:
    variant = Variant.parse(variant)
    if variant == Variant.BOUNDED:
        kw.setdefault("k_start", 0)
    dec = enumerate_density(f, k_max=k_max, **kw)
    return length_report(dec, f, variant)


def mc_expected_length(f: Density, variant="unbounded", rounds=10**5, rng=None,
                       k_max=40, batch=1 << 20):
    """Monte Carlo mean codeword length with its standard error."""
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    rng = np.random.default_rng(rng)
    cfg = SchemeConfig(variant, f.n, k_max)
    tot = tot2 = 0.0
    done = 0
    while done < rounds:
        b = min(batch, rounds - done)
        k, v, _, _ = encode_batch(f, cfg, b, rng)
        L = codeword_lengths(k, v, cfg.variant).astype(float)
        tot += L.sum()
        tot2 += (L * L).sum()
        done += b
    mean = tot / rounds
    var = max(tot2 / rounds - mean * mean, 0.0)
    return {"mean": mean, "stderr": math.sqrt(var / rounds) if rounds > 1 else 0.0}


# bounds ------------------------------------------------------------------


def ell_delta(t):
    if not t > 0:
        raise ValueError(f"ell_delta needs t > 0, got {t}")
    return t + 2 * math.log2(t)


def bound_thm1(n, h, mean_norm):
    """Uniform scheme bound from erosion entropy ``h`` and ``E||X||_inf``."""
    lm = math.log2(mean_norm)
    return n * ell_delta(h + lm + 8) + ell_delta(math.log2(h + 2 * max(lm, 0) + 9) + 2)


def bound_cor1(n, r, xhat_norm, volume):
    """Uniform scheme bound from volume and spread ``r = E||X - xhat||_inf``.

    The second term uses ``max{r, 0}`` exactly as the statement prints it.
    """
    lr, lv = math.log2(r), math.log2(volume)
    a = (n - 1) * lr + math.log2(xhat_norm + r) - lv + 4 * n + 8
    b = (n - 1) * lr + 2 * max(r, 0) - lv + 4 * n + 9
    return n * ell_delta(a) + ell_delta(math.log2(b) + 2)


def bound_thm2(n, EZh, mean_norm):
    lm = math.log2(mean_norm)
    return n * ell_delta(EZh + lm + 8) + ell_delta(math.log2(EZh + 2 * max(lm, 0) + 10) + 2)


def bound_cor2(n, r, xhat_norm, hZ):
    """``hZ`` may be h(Z) or log sup f (the weaker form)."""
    lr = math.log2(r)
    a = (n - 1) * lr + math.log2(xhat_norm + r) + hZ + 4 * n + 8
    b = (n - 1) * lr + 2 * max(lr, 0) + hZ + 4 * n + 10
    return n * ell_delta(a) + ell_delta(math.log2(b) + 2)


def bound_thm3(n, hZ):
    """Bounded-scheme bound; ``hZ`` may be h(Z) or log sup f."""
    c = hZ + math.log2(n) + LOG2E
    if c + 3 <= 0:
        raise ValueError("log argument must be positive")
    return n * (c + 2) + 2 * math.log2(c + 3) + 1


def bound_app2(a):
    if a < 0:
        raise ValueError("a must be >= 0")
    t = math.log2(a + 1)
    return t + 2 * math.log2(t + 12) + 23


# implied distribution -----------------------------------------------------


def _kraft_v_sum(v_max):
    """``sum_{|v| <= v_max} 2^{-L(v)}`` grouped by codeword length."""
    total = 0.0
    m = 0
    while True:
        # |v| with floor(log(2|v|+1)) == m
        a = (1 << m) // 2  # ceil((2^m - 1)/2)
        b = ((1 << (m + 1)) - 2) // 2
        if a > v_max:
            break
        b = min(b, v_max)
        count = (b - a + 1) * (1 if a == 0 else 2)
        if a == 0:
            count = 2 * (b - a + 1) - 1
        total += count * 2.0 ** -(m + 2 * (m + 1).bit_length() - 2 + 1)
        m += 1
    return total


@dataclass
class ImpliedDistribution:
    """Truncated implied density: codewords with ``k in [k_lo, k_hi]``.

    Unbounded tables also cap ``||v||_inf <= v_max``.  Dropping codewords
    only lowers the normaliser, so ``normalizer`` is a lower estimate of
    the full Kraft sum.
    """

    variant: Variant
    n: int
    k_lo: int
    k_hi: int
    v_max: int
    normalizer: float

    def _level_weight(self, k, v):
        L = codeword_lengths(np.full(len(v), k), v, self.variant)
        return np.ldexp(1.0, self.n * k) * np.exp2(-L.astype(float))

    def unnormalized_pdf(self, x):
        """``sum_w 2^{-L(w)} * (uniform density on the cube of w)`` at x."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.zeros(len(x))
        for k in range(self.k_lo, self.k_hi + 1):
            # range test in floating point, before the int cast can overflow
            vf = np.floor(np.ldexp(x, k))
            if self.variant == Variant.BOUNDED:
                ok = np.all((vf >= 0) & (vf < 2.0**k) & (vf <= self.v_max), axis=1)
            else:
                ok = np.all(np.abs(vf) <= self.v_max, axis=1)
            if ok.any():
                out[ok] += self._level_weight(k, vf[ok].astype(np.int64))
        return out

    def pdf(self, x):
        return self.unnormalized_pdf(x) / self.normalizer


def implied_distribution(variant="unbounded", n=1, k_lo=-10, k_hi=30,
                         v_max=2**20) -> ImpliedDistribution:
    variant = Variant.parse(variant)
    if v_max >= 2**52:
        raise ValueError("v_max must be below 2**52")
    if k_hi < k_lo:
        raise ValueError("empty level range")
    Z = 0.0
    if variant == Variant.BOUNDED:
        for k in range(max(k_lo, 0), k_hi + 1):
            cnt = min(1 << k, v_max + 1)
            Z += (cnt / (1 << k)) ** n * 2.0 ** -(2 * ((k + 1).bit_length() - 1) + 1)
    else:
        sv = _kraft_v_sum(v_max) ** n
        for k in range(k_lo, k_hi + 1):
            Z += 2.0 ** -delta_signed_length(k) * sv
    if Z <= 0:
        raise ValueError("empty truncation range")
    return ImpliedDistribution(variant, n, k_lo, k_hi, v_max, Z)


class CoverageError(ValueError):
    pass


@dataclass
class RelativeEntropy:
    D: float  # D(f || p_Im) with the truncated normaliser
    D_unnormalized: float  # D(f || sum_w 2^{-L(w)} p_w) = D - log Z
    stderr: float
    leakage: float
    normalizer: float


def relative_entropy_lb(f: Density, imp: ImpliedDistribution, samples=400_000,
                        rng=0, max_leakage=1e-3) -> RelativeEntropy:
    """Monte Carlo estimate of ``D(f || f_Im)`` in bits.

    Samples where the truncated table is zero are counted as leakage; more
    than ``max_leakage`` of them raises :class:`CoverageError`.  The
    unnormalised value is an upper estimate of the untruncated one (the
    table only drops terms), which is what makes it a safe check against a
    measured mean length.
    """
    if f.n != imp.n:
        raise ValueError("dimension mismatch")
    rng = np.random.default_rng(rng)
    x = np.asarray(f.sample(samples, rng), dtype=float).reshape(samples, f.n)
    q = imp.unnormalized_pdf(x)
    p = f.pdf(x)
    good = (q > 0) & (p > 0)
    leak = 1.0 - good.mean()
    if leak > max_leakage:
        raise CoverageError(f"table misses {leak:.3g} of the mass")
    t = np.log2(p[good]) - np.log2(q[good])
    Du = float(t.mean())
    se = float(t.std(ddof=1) / math.sqrt(good.sum())) if good.sum() > 1 else 0.0
    return RelativeEntropy(Du + math.log2(imp.normalizer), Du, se, float(leak),
                           imp.normalizer)


def loglog_slope(imp: ImpliedDistribution, lo=2.0**5, hi=2.0**15, points=400,
                 log_factor=False):
    """Least-squares slope of log f_Im against log x along the first axis.

    With ``log_factor`` the fitted quantity is ``f_Im(x) (log x)^{2n}``,
    which removes the logarithmic part of the predicted decay, so the
    slope should then sit near ``-n``.
    """
    xs = np.exp2(np.linspace(math.log2(lo), math.log2(hi), points))
    pts = np.zeros((points, imp.n))
    pts[:, 0] = xs
    y = imp.pdf(pts)
    ok = y > 0
    if log_factor:
        y = y * np.log2(xs) ** (2 * imp.n)
    return float(np.polyfit(np.log2(xs[ok]), np.log2(y[ok]), 1)[0])


# which bounds apply -------------------------------------------------------


def _support_in_unit_cube(f: Density):
    lo, hi = f.support_box.arrays()
    return bool(np.all(lo >= 0) and np.all(hi <= 1))


def applicable_bounds(f: Density, variant="unbounded", rng=12345):
    """Every closed-form bound that applies to ``f`` under ``variant``.

    Returns ``{name: {"value": bits, "inputs": {...}}}``; bounds whose
    hypotheses fail are listed with ``"value": None`` and a reason.
    Bounds that take a centre are evaluated at ``xhat = 0``.
    """
    from .densities import (ClippedCosine, ShiftedExponential, UniformDensity,
                            expected_level_erosion_entropy, level_density_and_entropy)
    from .regions import erosion_entropy

    variant = Variant.parse(variant)
    n = f.n
    out = {}

    def skip(name, why):
        out[name] = {"value": None, "reason": why}

    log_sup = math.log2(f.sup_f)
    hz = level_density_and_entropy(f).h
    if variant == Variant.BOUNDED:
        if not _support_in_unit_cube(f):
            skip("thm3", "support not inside the unit cube")
        elif f.orthogonally_concave:
            out["thm3"] = {"value": bound_thm3(n, hz), "inputs": {"hZ": hz}}
            out["thm3_sup"] = {"value": bound_thm3(n, log_sup), "inputs": {"log_sup_f": log_sup}}
        elif isinstance(f, ClippedCosine):
            # two unimodal pieces, one selector bit
            out["thm3_two_piece"] = {"value": bound_thm3(n, log_sup) + 1.0,
                                     "inputs": {"log_sup_f": log_sup, "penalty": 1.0}}
        else:
            skip("thm3", "density not orthogonally concave")
        return out

    if isinstance(f, UniformDensity):
        mean_norm = f.mean_inf_norm(None, rng=rng)
        h = erosion_entropy(f.region)[0]
        out["thm1"] = {"value": bound_thm1(n, h, mean_norm),
                       "inputs": {"h": h, "mean_norm": mean_norm}}
        if f.region.orthogonally_convex:
            out["cor1"] = {"value": bound_cor1(n, mean_norm, 0.0, f.vol),
                           "inputs": {"r": mean_norm, "xhat_norm": 0.0, "volume": f.vol}}
        else:
            skip("cor1", "region not orthogonally convex")
        EZh = h
    else:
        mean_norm = f.mean_inf_norm(0.0)
        try:
            EZh = expected_level_erosion_entropy(f)
        except NotImplementedError:
            EZh = None
    if EZh is not None:
        out["thm2"] = {"value": bound_thm2(n, EZh, mean_norm),
                       "inputs": {"EZh": EZh, "mean_norm": mean_norm}}
    else:
        skip("thm2", "level-set erosion entropy unavailable")
    if f.orthogonally_concave:
        out["cor2"] = {"value": bound_cor2(n, mean_norm, 0.0, hz),
                       "inputs": {"r": mean_norm, "xhat_norm": 0.0, "hZ": hz}}
        out["cor2_sup"] = {"value": bound_cor2(n, mean_norm, 0.0, log_sup),
                           "inputs": {"r": mean_norm, "xhat_norm": 0.0, "log_sup_f": log_sup}}
    else:
        skip("cor2", "density not orthogonally concave")
    if isinstance(f, ShiftedExponential):
        out["app2"] = {"value": bound_app2(f.a), "inputs": {"a": f.a}}
    return out
