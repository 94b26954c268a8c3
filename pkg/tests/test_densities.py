import math

import numpy as np
import pytest
from scipy import integrate
from scipy.stats import kstest

from udcs.densities import (RestrictedDensity, SuperlevelRegion, builtin_bell_cosine,
                            builtin_bell_unit, builtin_gaussian1d,
                            builtin_shifted_exponential, builtin_uniform_on,
                            expected_level_erosion_entropy, level_density_and_entropy)
from udcs.regions import Box, Cls, erosion_entropy

from conftest import builtin_cases

V_ELL = math.pi / math.sqrt(4 / 3)


def ev(f, x):
    return float(f.pdf(np.array([[x]]))[0])


def inf(f, a, b):
    return float(f.cube_inf(np.array([[a]]), np.array([[b]]))[0])


def test_gaussian_examples():
    g = builtin_gaussian1d()
    assert ev(g, 0) == pytest.approx(0.39894, abs=1e-5)
    assert inf(g, 1, 2) == pytest.approx(0.05399, abs=1e-5)
    assert inf(g, -1, 1) == pytest.approx(0.24197, abs=1e-5)
    assert g.sup_f == pytest.approx(1 / math.sqrt(2 * math.pi))


def test_exponential_examples():
    for a in (0.0, 3.0):
        f = builtin_shifted_exponential(a)
        assert ev(f, a) == 1.0
        assert inf(f, a + 1, a + 2) == pytest.approx(math.exp(-2))
        assert inf(f, a - 1, a + 1) == 0.0
    with pytest.raises(ValueError):
        builtin_shifted_exponential(-1)


def test_bell_cosine_examples():
    f = builtin_bell_cosine(0.0, 1)
    assert ev(f, 0) == pytest.approx(0.5)
    assert ev(f, math.pi) == pytest.approx(0.0, abs=1e-15)
    assert ev(builtin_bell_cosine(0.0, -1), math.pi) == pytest.approx(0.5)
    assert f.sup_f == 0.5
    for ya in (1, -1):
        tot, _ = integrate.quad(lambda x: ev(builtin_bell_cosine(0.4, ya), x), 0, 2 * math.pi,
                                points=[0.4 + math.pi / 2, 0.4 + 1.5 * math.pi], limit=200)
        assert tot == pytest.approx(1.0, abs=1e-9)


def test_bell_unit_examples():
    f = builtin_bell_unit(0.5)
    assert ev(f, 0.5) == pytest.approx(math.pi)
    assert ev(f, 0.3) == pytest.approx(math.pi * math.cos(0.4 * math.pi), abs=1e-4)
    assert builtin_bell_unit(0.0).wraps and not f.wraps
    for t in (0.0, 0.1, 0.37, 0.5, 0.9):
        assert float(builtin_bell_unit(t).cube_mass([[0.0]], [[1.0]])[0]) == pytest.approx(1.0, abs=1e-12)


def test_uniform_examples(ellipse):
    sq = builtin_uniform_on(Box([0, 0], [1, 1]))
    assert float(sq.pdf([[0.2, 0.9]])[0]) == 1.0
    assert float(sq.cube_inf([[0, 0]], [[2, 2]])[0]) == 0.0
    e = builtin_uniform_on(ellipse)
    assert float(e.pdf([[0.0, 0.0]])[0]) == pytest.approx(1 / V_ELL, abs=1e-4)


@pytest.mark.parametrize("name,f,variant", builtin_cases())
def test_cube_inf_sound(name, f, variant, rng):
    lo0, hi0 = f.support_box.lower[0], min(f.support_box.upper[0], f.support_box.lower[0] + 12)
    lo = rng.uniform(lo0 - 0.5, hi0, 2000)
    hi = lo + rng.uniform(1e-4, 1.0, 2000)
    ci = f.cube_inf(lo[:, None], hi[:, None])
    cs = f.cube_sup(lo[:, None], hi[:, None])
    for _ in range(5):
        x = lo + rng.random(2000) * (hi - lo)
        p = f.pdf(x[:, None])
        assert np.all(ci <= p + 1e-12)
        assert np.all(cs >= p - 1e-12)


@pytest.mark.parametrize("name,f,variant", builtin_cases())
def test_cube_inf_attained(name, f, variant, rng):
    # the infimum is reached at an endpoint or at a critical point in the box
    lo = rng.uniform(f.support_box.lower[0], f.support_box.lower[0] + 3, 300)
    hi = lo + rng.uniform(1e-3, 0.5, 300)
    ci = f.cube_inf(lo[:, None], hi[:, None])
    grid = lo[:, None] + np.linspace(0, 1, 2001)[None] * (hi - lo)[:, None]
    brute = f.pdf(grid.reshape(-1, 1)).reshape(grid.shape).min(axis=1)
    if name.startswith(("unit", "interval")):
        assert np.all(ci <= brute + 1e-12)
    else:
        assert np.allclose(ci, brute, atol=1e-9)


@pytest.mark.parametrize("name,f,variant", builtin_cases())
def test_cube_mass_quadrature(name, f, variant):
    if not f.exact_mass:
        return
    for a, b in [(f.support_box.lower[0] - 1, f.support_box.lower[0] + 0.3),
                 (f.support_box.lower[0] + 0.2, f.support_box.lower[0] + 0.45)]:
        q, _ = integrate.quad(lambda t: ev(f, t), a, b, limit=200)
        assert float(f.cube_mass([[a]], [[b]])[0]) == pytest.approx(q, abs=1e-9)


@pytest.mark.parametrize("name,f,variant", builtin_cases())
def test_sampler_ks(name, f, variant, rng):
    x = f.sample(100_000, rng).reshape(-1)
    assert kstest(x, lambda t: f.cdf(t)).statistic < 0.01


def test_level_entropy_examples(ellipse):
    t = level_density_and_entropy(builtin_uniform_on(Box([0, 0], [1, 1])))
    assert t.h == pytest.approx(0.0, abs=1e-9)
    t = level_density_and_entropy(builtin_uniform_on(ellipse))
    assert t.h == pytest.approx(-math.log2(V_ELL), abs=1e-4)
    t = level_density_and_entropy(builtin_bell_unit(0.5))
    assert t.h <= math.log2(math.pi)
    assert abs(t.total - 1) < 1e-3


def test_superlevel_region():
    g = builtin_gaussian1d()
    r = SuperlevelRegion(g, 0.2)
    half = math.sqrt(-2 * math.log(0.2 * math.sqrt(2 * math.pi)))
    assert r.classify_cube(Box([-1], [1]).bounding_box) == Cls.INSIDE
    assert r.classify_cube(Box([half + 0.01], [3]).bounding_box) == Cls.OUTSIDE
    zs = np.linspace(0.001, g.sup_f, 50)
    vols = g.level_volume(zs)
    assert np.all(np.diff(vols) <= 1e-12)
    assert float(g.level_volume(0.2)) == pytest.approx(2 * half)


def test_expected_level_erosion_entropy():
    sq = builtin_uniform_on(Box([0], [1]))
    assert expected_level_erosion_entropy(sq) == pytest.approx(erosion_entropy(Box([0], [1]))[0], abs=1e-6)
    # single interval level sets: E_Z[log e - log V(L_Z)] = log e + h(Z)
    f = builtin_bell_unit(0.5)
    want = math.log2(math.e) + level_density_and_entropy(f).h
    assert expected_level_erosion_entropy(f) == pytest.approx(want, abs=2e-3)


def test_restricted_pieces():
    f = builtin_bell_unit(0.1)
    (p0, a0, b0), (p1, a1, b1) = f.pieces()
    assert p0 + p1 == pytest.approx(1.0)
    g = RestrictedDensity(f, a0, b0)
    assert g.mass == pytest.approx(p0)
    assert float(g.cube_mass([[a0]], [[b0]])[0]) == pytest.approx(1.0)
    assert float(g.cube_inf([[a0 - 0.01]], [[0.1]])[0]) == 0.0
