import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate as sp_integrate
from scipy import stats
from scipy.optimize import minimize_scalar

from cramerstab.distributions import (
    atoms,
    gaussian_mixture,
    grid_law,
    matched_normal,
    mixture,
    normal,
    point_mass,
    scale_shift,
    standardized,
    uniform,
)
from cramerstab.metrics import (
    METRICS,
    entropic_distance,
    entropy_functional,
    kolmogorov,
    levy,
    tv,
    tv_finite_collections,
    uniform_deviation,
    uniform_deviation_value,
    w1,
)
from cramerstab.numerics import DomainError, std_normal_pdf

SQ3 = math.sqrt(3.0)
LEVY_ROOT = float(mpmath.findroot(lambda h: mpmath.ncdf(h) + h - 1, 0.36))


def brute_levy(f, g, lo=-12.0, hi=12.0, n=200_001):
    """Levy distance by scanning the defining inequalities on a dense grid.

    Both inequalities are checked through one-sided limits, at grid points,
    at the atoms of F and at the atoms of G translated by h.
    """
    base = np.concatenate([np.linspace(lo, hi, n), f.atom_locations])

    def ok(h):
        x1 = np.concatenate([base, g.atom_locations + h])
        x2 = np.concatenate([base, g.atom_locations - h])
        return (np.all(g.cdf_left(x1 - h) - h <= f.cdf_left(x1) + 1e-12)
                and np.all(f.cdf(x2) <= g.cdf(x2 + h) + h + 1e-12))

    a, b = 0.0, 1.0
    while b - a > 1e-8:
        m = 0.5 * (a + b)
        a, b = (a, m) if ok(m) else (m, b)
    return b


PAIRS = [
    (normal(), normal(1.0, 1.0)),
    (atoms([(-1, 0.5), (1, 0.5)]), normal()),
    (uniform(-SQ3, SQ3), gaussian_mixture([(-1, 0.5, 0.5), (1, 0.5, 0.5)])),
    (mixture([(0.3, point_mass(0.2)), (0.7, normal(0, 2))]), normal(0.5, 0.7)),
    (grid_law(-1, 0.5, [0, 1, 3, 2, 1]), uniform(-0.5, 1.5)),
]


class TestKolmogorov:
    def test_identical(self):
        assert kolmogorov(normal(), normal()).value == 0.0

    def test_shifted_normals(self):
        v = kolmogorov(normal(), normal(1.0, 1.0))
        assert v.value == pytest.approx(2 * stats.norm.cdf(0.5) - 1, abs=1e-12)
        assert v.value == pytest.approx(0.3829, abs=1e-4)

    def test_disjoint_atoms(self):
        assert kolmogorov(point_mass(0), point_mass(1)).value == 1.0

    def test_atom_against_normal(self):
        assert kolmogorov(point_mass(0), normal()).value == pytest.approx(0.5, abs=1e-12)


class TestLevy:
    def test_identical(self):
        d = gaussian_mixture([(0, 1, 0.5), (2, 0.3, 0.5)])
        assert levy(d, d).value == pytest.approx(0.0, abs=1e-9)

    def test_atom_against_normal(self):
        v = levy(point_mass(0), normal())
        assert v.value == pytest.approx(LEVY_ROOT, abs=1e-8)
        assert v.method == "bisection"

    def test_unit_separated_atoms(self):
        # G(x - h) - h <= F(x) at x just below 1 forces h >= 1
        assert levy(point_mass(0), point_mass(1)).value == pytest.approx(1.0, abs=1e-9)
        assert brute_levy(point_mass(0), point_mass(1)) == pytest.approx(1.0, abs=1e-6)

    def test_close_atoms(self):
        assert levy(point_mass(0), point_mass(0.3)).value == pytest.approx(0.3, abs=1e-8)

    @pytest.mark.parametrize("k", range(len(PAIRS)))
    def test_against_brute_force(self, k):
        f, g = PAIRS[k]
        assert levy(f, g).value == pytest.approx(brute_levy(f, g), abs=2e-6)


class TestW1:
    def test_atoms(self):
        assert w1(point_mass(0), point_mass(2.5)).value == pytest.approx(2.5, abs=1e-9)

    def test_identical(self):
        assert w1(normal(), normal()).value == pytest.approx(0.0, abs=1e-12)

    def test_shifted_normals(self):
        assert w1(normal(), normal(1.0, 1.0)).value == pytest.approx(1.0, abs=1e-8)

    def test_against_scipy(self):
        f, g = uniform(-1, 1), uniform(0, 3)
        ref = sp_integrate.quad(lambda x: abs(stats.uniform(-1, 2).cdf(x) - stats.uniform(0, 3).cdf(x)), -1, 3,
                                points=[0, 1])[0]
        assert w1(f, g).value == pytest.approx(ref, abs=1e-9)


class TestTV:
    def test_disjoint_atoms(self):
        assert tv(point_mass(0), point_mass(1)).value == 2.0

    def test_identical(self):
        assert tv(normal(), normal()).value == 0.0

    def test_scale_pair(self):
        ref = sp_integrate.quad(lambda x: abs(stats.norm.pdf(x) - stats.norm.pdf(x, 0, 2)), -40, 40,
                                points=[-1.5, 1.5], epsabs=1e-13)[0]
        v = tv(normal(), normal(0, 2))
        assert v.value == pytest.approx(ref, abs=1e-9)
        assert v.value == pytest.approx(tv_finite_collections(normal(), normal(0, 2), 2000), abs=1e-3)

    def test_mixed_atoms(self):
        f = mixture([(0.5, point_mass(0.0)), (0.5, normal())])
        assert tv(f, normal()).value == pytest.approx(1.0, abs=1e-9)


class TestEntropic:
    @pytest.mark.parametrize("a,s", [(0, 1), (3, 0.2), (-1, 5)])
    def test_normal_vanishes(self, a, s):
        v = entropic_distance(normal(a, s))
        assert v.value == pytest.approx(0.0, abs=1e-8)
        assert v.centering == pytest.approx((a, s))

    def test_uniform(self):
        ref = 0.5 * math.log(2 * math.pi * math.e) - math.log(2 * SQ3)
        v = entropic_distance(uniform(-SQ3, SQ3))
        assert v.value == pytest.approx(ref, abs=1e-10)
        assert v.value == pytest.approx(0.1765, abs=1e-3)

    def test_atoms_infinite(self):
        assert entropic_distance(atoms([(-1, 0.5), (1, 0.5)])).value == math.inf

    def test_degenerate(self):
        with pytest.raises(DomainError):
            entropic_distance(point_mass(1.0))

    def test_mixture_against_scipy(self):
        d = gaussian_mixture([(-1, 0.5, 0.5), (1, 0.5, 0.5)])
        s = math.sqrt(d.variance)
        kl = sp_integrate.quad(lambda x: d.pdf(x) * math.log(d.pdf(x) / stats.norm.pdf(x, 0, s)), -8, 8,
                               epsabs=1e-13, limit=400)[0]
        assert entropic_distance(d).value == pytest.approx(kl, abs=1e-9)

    @pytest.mark.parametrize("lam", [0.5, 2.0])
    @pytest.mark.parametrize("c", [-1.0, 1.0])
    def test_affine_invariance(self, lam, c):
        d = gaussian_mixture([(-1, 0.5, 0.3), (1, 0.7, 0.7)])
        assert entropic_distance(scale_shift(d, lam, c)).value == pytest.approx(entropic_distance(d).value, abs=1e-6)


class TestUniformDeviation:
    def test_normal(self):
        assert uniform_deviation(normal(0, 1.7)) == pytest.approx(0.0, abs=1e-12)

    def test_scaling(self):
        d = gaussian_mixture([(-1, 0.5, 0.5), (1, 0.5, 0.5)])
        assert uniform_deviation(scale_shift(d, 2.0)) == pytest.approx(uniform_deviation(d) / 2, abs=1e-9)

    def test_two_methods(self):
        d = gaussian_mixture([(-1, 0.5, 0.5), (1, 0.5, 0.5)])
        v = math.sqrt(d.variance)
        gap = lambda x: d.pdf(x) - stats.norm.pdf(x, 0, v)
        xs = np.linspace(-8, 8, 1_600_001)
        dense = float(np.max(gap(xs)))
        assert uniform_deviation(d) == pytest.approx(dense, abs=1e-6)
        # golden-section polish around the grid argmax
        k = int(np.argmax(gap(xs)))
        res = minimize_scalar(lambda t: -gap(np.array([t]))[0], bracket=(xs[k - 1], xs[k], xs[k + 1]),
                              method="golden", tol=1e-12)
        assert uniform_deviation(d) == pytest.approx(-res.fun, abs=1e-9)

    def test_atoms_rejected(self):
        with pytest.raises(DomainError):
            uniform_deviation_value(atoms([(0, 0.5), (1, 0.5)]))


class TestEntropyFunctional:
    def test_constant(self):
        assert entropy_functional(lambda x: 2.0 + 0 * x, normal()) == pytest.approx(0.0, abs=1e-10)

    def test_equals_entropic_distance(self):
        d = gaussian_mixture([(-0.8, 0.6, 0.5), (0.8, 0.6, 0.5)])
        d = standardized(d)
        f = lambda x: d.pdf(x) / std_normal_pdf(x)
        assert entropy_functional(f, normal()) == pytest.approx(entropic_distance(d).value, abs=1e-6)

    def test_homogeneity(self):
        d = standardized(gaussian_mixture([(-0.8, 0.6, 0.5), (0.8, 0.6, 0.5)]))
        f = lambda x: d.pdf(x) / std_normal_pdf(x)
        e1 = entropy_functional(f, normal())
        e3 = entropy_functional(lambda x: 3 * f(x), normal())
        assert e3 == pytest.approx(3 * e1, abs=1e-8)


def _random_law(seed):
    rng = np.random.default_rng(seed)
    comps = [(rng.normal(), rng.uniform(0.3, 1.5), rng.uniform(0.2, 1)) for _ in range(rng.integers(1, 4))]
    d = gaussian_mixture(comps)
    if rng.uniform() < 0.4:
        d = mixture([(0.7, d), (0.3, point_mass(float(np.round(rng.normal(), 2))))])
    return d


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000), st.integers(0, 10_000))
def test_chain_and_symmetry(s1, s2):
    f, g = _random_law(s1), _random_law(s2)
    L, K, T = levy(f, g), kolmogorov(f, g), tv(f, g)
    slack = 3 * (L.err_estimate + K.err_estimate + T.err_estimate) + 1e-12
    assert 0 <= L.value <= K.value + slack
    assert K.value <= 0.5 * T.value + slack
    assert 0.5 * T.value <= 1 + slack
    for name in METRICS:
        a, b = METRICS[name](f, g), METRICS[name](g, f)
        assert a.value == pytest.approx(b.value, abs=3 * (a.err_estimate + b.err_estimate) + 1e-12)


@pytest.mark.parametrize("name", sorted(METRICS))
def test_triangle_inequality(name):
    metric = METRICS[name]
    for k in range(20):
        f, g, h = _random_law(3 * k), _random_law(3 * k + 1), _random_law(3 * k + 2)
        a, b, c = metric(f, h), metric(f, g), metric(g, h)
        assert a.value <= b.value + c.value + 3 * (a.err_estimate + b.err_estimate + c.err_estimate) + 1e-12


@pytest.mark.parametrize("seed", range(4))
def test_pinsker(seed):
    d = _random_law(seed)
    if d.has_atoms:
        d = standardized(gaussian_mixture([(-1, 0.4, 0.4), (0.7, 0.9, 0.6)]))
    assert entropic_distance(d).value >= 0.5 * tv(d, matched_normal(d)).value ** 2
