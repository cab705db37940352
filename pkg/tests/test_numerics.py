import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cramerstab.numerics import (
    DEFAULT_TOLERANCES,
    BracketError,
    DomainError,
    NumericalError,
    Tolerances,
    bisect_monotone,
    grid_sup,
    integrate,
    normal_partial_moments,
    refine_max,
    smallest_feasible,
    std_normal_cdf,
    std_normal_pdf,
    std_normal_quantile,
    std_normal_sf,
)

mpmath.mp.dps = 40


def mp_cdf(x):
    return float(mpmath.ncdf(x))


class TestTolerances:
    def test_defaults(self):
        t = DEFAULT_TOLERANCES
        assert (t.quad_abs_tol, t.root_tol, t.sup_grid_points, t.tail_cutoff) == (1e-10, 1e-9, 20001, 1e-12)

    @pytest.mark.parametrize("kw", [{"quad_abs_tol": 0.0}, {"root_tol": -1.0}, {"tail_cutoff": 0.0},
                                    {"sup_grid_points": 999}, {"sup_grid_points": 1000.5}])
    def test_invalid(self, kw):
        with pytest.raises(DomainError):
            Tolerances(**kw)

    def test_coarsened(self):
        c = DEFAULT_TOLERANCES.coarsened(2)
        assert c.sup_grid_points == 10001
        assert c.quad_abs_tol == pytest.approx(4e-10)
        assert DEFAULT_TOLERANCES.coarsened(1) is DEFAULT_TOLERANCES


class TestNormal:
    def test_pdf_values(self):
        assert std_normal_pdf(0.0) == pytest.approx(0.3989422804, abs=1e-10)
        assert std_normal_pdf(2.0) == pytest.approx(float(mpmath.npdf(2)), rel=1e-14)
        assert float(std_normal_pdf(2.0)) == pytest.approx(0.05399, abs=1e-5)

    def test_cdf_values(self):
        assert std_normal_cdf(0.0) == 0.5
        assert std_normal_cdf(-1.0) == pytest.approx(0.15866, abs=1e-5)
        assert std_normal_cdf(3.0) == pytest.approx(0.99865, abs=1e-5)
        xs = np.linspace(-5, 5, 101)
        ref = np.array([mp_cdf(x) for x in xs])
        np.testing.assert_allclose(std_normal_cdf(xs), ref, rtol=4e-15)
        xs = np.linspace(-20, -5, 61)
        ref = np.array([mp_cdf(x) for x in xs])
        np.testing.assert_allclose(std_normal_cdf(xs), ref, rtol=1e-13)

    def test_sf_tail(self):
        assert std_normal_sf(20.0) == pytest.approx(float(mpmath.ncdf(-20)), rel=1e-12)

    def test_quantile(self):
        assert std_normal_quantile(0.5) == 0.0
        assert std_normal_quantile(std_normal_cdf(1.3)) == pytest.approx(1.3, abs=1e-9)
        assert std_normal_quantile(0.15866) == pytest.approx(-1.0, abs=1e-4)
        with pytest.raises(DomainError):
            std_normal_quantile(1.5)

    def test_cdf_monotone_and_symmetric(self):
        xs = np.linspace(-8, 8, 4001)
        c = std_normal_cdf(xs)
        assert np.all(np.diff(c) >= 0)
        np.testing.assert_allclose(c + std_normal_cdf(-xs), 1.0, atol=1e-12)

    def test_derivative_is_pdf(self):
        rng = np.random.default_rng(3)
        xs = rng.uniform(-5, 5, 100)
        h = 1e-5
        fd = (std_normal_cdf(xs + h) - std_normal_cdf(xs - h)) / (2 * h)
        np.testing.assert_allclose(fd, std_normal_pdf(xs), atol=1e-6)

    def test_quantile_roundtrip(self):
        xs = np.linspace(-6, 6, 301)
        np.testing.assert_allclose(std_normal_quantile(std_normal_cdf(xs)), xs, atol=1e-8)

    def test_partial_moments_against_quadrature(self):
        mass, m1, m2 = normal_partial_moments(0.3, 1.7, -0.5, 2.0)
        f = lambda x: mpmath.npdf(x, 0.3, 1.7)
        assert mass == pytest.approx(float(mpmath.quad(f, [-0.5, 2.0])), abs=1e-14)
        assert m1 == pytest.approx(float(mpmath.quad(lambda x: x * f(x), [-0.5, 2.0])), abs=1e-14)
        assert m2 == pytest.approx(float(mpmath.quad(lambda x: x * x * f(x), [-0.5, 2.0])), abs=1e-14)


class TestIntegrate:
    def test_linear(self):
        v, err = integrate(lambda x: x, 0.0, 1.0)
        assert v == pytest.approx(0.5, abs=1e-14)
        assert err >= 0

    def test_normalisation(self):
        v, _ = integrate(std_normal_pdf, -10, 10, 1e-12)
        assert v == pytest.approx(1.0, abs=1e-10)

    def test_second_moment(self):
        v, _ = integrate(lambda x: x * x * std_normal_pdf(x), -10, 10, 1e-12)
        assert v == pytest.approx(1.0, abs=1e-8)

    def test_kink_breakpoints(self):
        f = lambda x: np.abs(x - 0.3)
        v, _ = integrate(f, -1, 1, 1e-12, breakpoints=[0.3])
        assert v == pytest.approx(0.5 * 1.3**2 + 0.5 * 0.7**2, abs=1e-13)

    def test_budget_exhausted(self):
        with pytest.raises(NumericalError) as info:
            integrate(lambda x: np.sin(1.0 / np.maximum(np.abs(x), 1e-300)), 1e-9, 1.0, 1e-14, max_intervals=200)
        assert info.value.partial is not None

    @settings(max_examples=40, deadline=None)
    @given(a=st.floats(-5, 0), b=st.floats(0, 3), c=st.floats(3, 6))
    def test_additive(self, a, b, c):
        f = lambda x: np.exp(-x * x / 3) * (1 + np.cos(x))
        left, e1 = integrate(f, a, b, 1e-11)
        right, e2 = integrate(f, b, c, 1e-11)
        whole, e3 = integrate(f, a, c, 1e-11)
        assert abs(left + right - whole) <= 10 * (e1 + e2 + e3) + 1e-11


class TestRoots:
    def test_levy_root_equation(self):
        # 1 - Phi(h) = h, the same root as Phi(h) + h = 1
        h = bisect_monotone(lambda t: (1 - std_normal_cdf(t)) - t, 0.0, 1.0, 1e-12)
        ref = float(mpmath.findroot(lambda t: mpmath.ncdf(t) + t - 1, 0.35))
        assert h == pytest.approx(ref, abs=1e-11)
        assert h == pytest.approx(0.359580452, abs=1e-9)

    def test_linear_root(self):
        assert bisect_monotone(lambda x: x - 0.5, 0.0, 1.0) == pytest.approx(0.5, abs=1e-9)

    def test_degenerate_alpha(self):
        for alpha in (1e-2, 1e-4, 1e-8):
            h = bisect_monotone(lambda t: std_normal_cdf(t / alpha) + t - 1, 0.0, 1.0, 1e-12)
            assert h < 10 * alpha

    def test_bracket_error(self):
        with pytest.raises(BracketError):
            bisect_monotone(lambda x: x + 1, 0.0, 1.0)

    def test_smallest_feasible(self):
        x = smallest_feasible(lambda t: t >= 0.3, 0.0, 1.0, 1e-10)
        assert 0.3 <= x <= 0.3 + 1e-10

    def test_refine_max(self):
        x, v = refine_max(lambda t: -(t - 0.7) ** 2 + 2, 0.0, 1.0)
        assert x == pytest.approx(0.7, abs=1e-6)
        assert v == pytest.approx(2.0, abs=1e-12)

    def test_grid_sup_refines_off_grid_peak(self):
        pts = np.linspace(-3, 3, 1001)
        best, raw, arg = grid_sup(lambda x: np.exp(-(x - 0.12345) ** 2), pts)
        assert best == pytest.approx(1.0, abs=1e-12)
        assert raw <= best
        assert arg == pytest.approx(0.12345, abs=1e-5)
