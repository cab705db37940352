import math

import numpy as np
import pytest
from scipy import stats

from cramerstab.distributions import (
    GaussianMixtureDensity,
    atoms,
    convolve,
    gaussian_mixture,
    grid_law,
    mixture,
    normal,
    point_mass,
    truncate,
    uniform,
)
from cramerstab.metrics import kolmogorov, levy, tv, w1
from cramerstab.numerics import DomainError
from cramerstab.regularize import RegularizationParams, regularize, regularized_density_gap

TWO_POINT = atoms([(-1.0, 0.5), (1.0, 0.5)])
LAWS = [
    TWO_POINT,
    uniform(-math.sqrt(3), math.sqrt(3)),
    gaussian_mixture([(-1, 0.5, 0.3), (1, 0.8, 0.7)]),
    mixture([(0.4, point_mass(0.5)), (0.6, grid_law(-1, 0.5, [0, 1, 3, 2, 1]))]),
    truncate(gaussian_mixture([(-1, 0.6, 0.5), (1.2, 0.6, 0.5)]), 0.05).truncated,
]
PAIRS = [(LAWS[i], LAWS[j]) for i, j in [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]]
XS = np.linspace(-6, 6, 200)


class TestParams:
    def test_range(self):
        with pytest.raises(DomainError):
            RegularizationParams(0.0)
        with pytest.raises(DomainError):
            RegularizationParams(1.5)
        assert RegularizationParams(1.5, allow_large=True).sigma == 1.5

    def test_derived_levels(self):
        p = RegularizationParams(0.5)
        assert p.reg_sigma1 == pytest.approx(math.sqrt(1.25))
        assert p.reg_sigma2 == pytest.approx(math.sqrt(1.5))


class TestRegularize:
    def test_atom_gives_normal(self):
        r = regularize(point_mass(0.0), 1.0)
        np.testing.assert_allclose(r.pdf(XS), stats.norm.pdf(XS), atol=1e-15)

    def test_two_point_density(self):
        r = regularize(TWO_POINT, 0.5)
        assert isinstance(r.continuous_part, GaussianMixtureDensity)
        assert r.pdf(np.array([0.0]))[0] == pytest.approx(stats.norm.pdf(1.0, 0, 0.5), abs=1e-15)
        assert r.pdf(np.array([0.0]))[0] == pytest.approx(0.10798, abs=1e-5)

    def test_normal_stability(self):
        r = regularize(normal(0, 1.3), 0.6)
        assert r.continuous_part.components == ((0.0, math.hypot(1.3, 0.6), 1.0),)

    @pytest.mark.parametrize("k", range(len(LAWS)))
    def test_moments(self, k):
        d = LAWS[k]
        r = regularize(d, 0.5)
        assert r.variance == pytest.approx(d.variance + 0.25, abs=1e-8)
        assert r.mean == pytest.approx(d.mean, abs=1e-9)

    @pytest.mark.parametrize("k", range(len(LAWS)))
    def test_semigroup(self, k):
        d = LAWS[k]
        twice = regularize(regularize(d, 0.3), 0.4)
        once = regularize(d, 0.5)
        np.testing.assert_allclose(twice.cdf(XS), once.cdf(XS), atol=1e-6)

    @pytest.mark.parametrize("k", range(len(PAIRS)))
    def test_commutes_with_convolution(self, k):
        f, g = PAIRS[k]
        s = 0.5
        left = convolve(regularize(f, s), regularize(g, s))
        right = regularize(convolve(f, g), s * math.sqrt(2))
        np.testing.assert_allclose(left.cdf(XS), right.cdf(XS), atol=1e-6)


class TestDensityGap:
    def test_identical(self):
        assert regularized_density_gap(LAWS[2], LAWS[2], 0.5) == 0.0

    def test_unit_atoms(self):
        # sup |phi(x) - phi(x - 1)| sits at x = 1/2 + sqrt(1 + 1/4)... solved numerically here
        xs = np.linspace(-8, 9, 3_400_001)
        dense = float(np.max(np.abs(stats.norm.pdf(xs) - stats.norm.pdf(xs - 1))))
        gap = regularized_density_gap(point_mass(0), point_mass(1), 1.0)
        assert gap == pytest.approx(dense, abs=1e-9)
        assert gap == pytest.approx(0.2229430, abs=1e-6)

    @pytest.mark.parametrize("k", range(len(PAIRS)))
    @pytest.mark.parametrize("sigma", [0.25, 0.5, 1.0])
    def test_smoothed_gap_bounds(self, k, sigma):
        f, g = PAIRS[k]
        gap = regularized_density_gap(f, g, sigma)
        assert gap <= kolmogorov(f, g).value / sigma + 1e-9
        lv = levy(f, g)
        assert gap <= lv.value / sigma * (1 + 1 / (2 * sigma)) + 1e-8
        assert tv(regularize(f, sigma), regularize(g, sigma)).value <= w1(f, g).value / sigma + 1e-8
