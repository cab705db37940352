"""Special functions, adaptive quadrature and root finding.

Everything here is vectorised over numpy arrays where that makes sense and
is pure: no function keeps state between calls.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Iterable

import numpy as np
from scipy import special
from scipy.optimize import minimize_scalar

SQRT2PI = math.sqrt(2.0 * math.pi)
INV_SQRT2PI = 1.0 / SQRT2PI


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class BracketError(ValueError):
    """The root-finding bracket does not contain a sign change."""


class NumericalError(RuntimeError):
    """A numerical routine did not reach its tolerance.

    The best value obtained so far is kept in ``partial``.
    """

    def __init__(self, message, partial=None, err_estimate=None):
        super().__init__(message)
        self.partial = partial
        self.err_estimate = err_estimate


@dataclass(frozen=True)
class Tolerances:
    """Numerical accuracy settings shared by every module."""

    quad_abs_tol: float = 1e-10
    root_tol: float = 1e-9
    sup_grid_points: int = 20001
    tail_cutoff: float = 1e-12

    def __post_init__(self):
        for name in ("quad_abs_tol", "root_tol", "tail_cutoff"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise DomainError(f"{name} must be strictly positive, got {value!r}")
        if int(self.sup_grid_points) != self.sup_grid_points or self.sup_grid_points < 1000:
            raise DomainError(
                f"sup_grid_points must be an integer >= 1000, got {self.sup_grid_points!r}"
            )

    def coarsened(self, factor: int) -> "Tolerances":
        """Tolerances ``factor`` times coarser (grid points divided, quad tol multiplied
        by ``factor**2`` to match Simpson's convergence order)."""
        if factor == 1:
            return self
        points = max(1001, (self.sup_grid_points - 1) // factor + 1)
        return replace(
            self,
            quad_abs_tol=self.quad_abs_tol * factor**2,
            root_tol=self.root_tol * factor,
            sup_grid_points=points,
        )

    def as_dict(self) -> dict:
        return {
            "quad_abs_tol": self.quad_abs_tol,
            "root_tol": self.root_tol,
            "sup_grid_points": int(self.sup_grid_points),
            "tail_cutoff": self.tail_cutoff,
        }


DEFAULT_TOLERANCES = Tolerances()


# ---------------------------------------------------------------------------
# Standard normal law
# ---------------------------------------------------------------------------

def std_normal_pdf(x):
    """Density of N(0, 1)."""
    x = np.asarray(x, dtype=float)
    out = INV_SQRT2PI * np.exp(-0.5 * x * x)
    return out if out.ndim else float(out)


def std_normal_cdf(x):
    """Distribution function of N(0, 1).

    Evaluated through the complementary error function (Cephes ``ndtr``),
    so the lower tail does not cancel. Measured against 40-digit mpmath the
    relative error is below 4e-15 on [-5, 5] and below 1e-13 down to -20.
    """
    out = special.ndtr(np.asarray(x, dtype=float))
    return out if np.ndim(out) else float(out)


def std_normal_sf(x):
    """Upper tail 1 - Phi(x), accurate for large positive x."""
    out = special.ndtr(-np.asarray(x, dtype=float))
    return out if np.ndim(out) else float(out)


def std_normal_quantile(p):
    """Inverse of :func:`std_normal_cdf`.

    Starts from ``ndtri`` and applies one Newton step, which brings the
    residual ``|Phi(x) - p|`` to rounding level.
    """
    p_arr = np.asarray(p, dtype=float)
    if np.any(~((p_arr > 0) & (p_arr < 1))):
        raise DomainError(f"quantile requires 0 < p < 1, got {p!r}")
    x = special.ndtri(p_arr)
    x = x - (special.ndtr(x) - p_arr) / (INV_SQRT2PI * np.exp(-0.5 * x * x))
    return x if x.ndim else float(x)


def normal_cdf_diff(lo, hi):
    """Phi(hi) - Phi(lo) for lo <= hi without cancellation in either tail."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    upper = lo > 0
    out = np.where(upper, special.ndtr(-lo) - special.ndtr(-hi), special.ndtr(hi) - special.ndtr(lo))
    return out


def normal_partial_moments(mean, sd, lo, hi):
    """Integrals of ``x**k`` against N(mean, sd^2) over [lo, hi], k = 0, 1, 2.

    All arguments broadcast; infinite limits are allowed.
    """
    mean = np.asarray(mean, dtype=float)
    sd = np.asarray(sd, dtype=float)
    a = (np.asarray(lo, dtype=float) - mean) / sd
    b = (np.asarray(hi, dtype=float) - mean) / sd
    mass = normal_cdf_diff(a, b)
    pa = np.where(np.isfinite(a), INV_SQRT2PI * np.exp(-0.5 * np.where(np.isfinite(a), a, 0.0) ** 2), 0.0)
    pb = np.where(np.isfinite(b), INV_SQRT2PI * np.exp(-0.5 * np.where(np.isfinite(b), b, 0.0) ** 2), 0.0)
    m1 = mean * mass + sd * (pa - pb)
    # (mean + lo) * pa with lo = -inf must read as 0
    ta = np.where(pa > 0, (mean + np.where(np.isfinite(a), lo, 0.0)) * pa, 0.0)
    tb = np.where(pb > 0, (mean + np.where(np.isfinite(b), hi, 0.0)) * pb, 0.0)
    m2 = (mean**2 + sd**2) * mass + sd * (ta - tb)
    return mass, m1, m2


def gaussian_tail_z(tail: float) -> float:
    """z such that P(|Z| > z) <= tail for Z ~ N(0, 1)."""
    return float(-special.ndtri(0.5 * tail))


# ---------------------------------------------------------------------------
# Quadrature
# ---------------------------------------------------------------------------

def integrate(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    tol: float = 1e-10,
    *,
    breakpoints: Iterable[float] = (),
    min_intervals: int = 16,
    max_intervals: int = 400_000,
):
    """Adaptive Simpson quadrature of a vectorised integrand.

    The interval is first split at ``breakpoints`` (kinks and jumps of the
    integrand belong there) and into at least ``min_intervals`` pieces.
    Every active piece is then refined by interval halving until the
    Simpson/half-Simpson difference meets its share of ``tol``; accepted
    pieces get the Richardson-extrapolated value.

    Returns
    -------
    (value, err_estimate)

    Raises
    ------
    NumericalError
        When more than ``max_intervals`` pieces would be needed. The partial
        sum is attached to the exception.
    """
    if not tol > 0:
        raise DomainError("tol must be positive")
    if b < a:
        raise DomainError(f"integrate requires a <= b, got [{a}, {b}]")
    if a == b:
        return 0.0, 0.0
    width = b - a
    edges = np.unique(np.concatenate([[a, b], [x for x in breakpoints if a < x < b]]))
    lo, hi = edges[:-1], edges[1:]
    while lo.size < min_intervals:
        k = max(2, int(math.ceil(min_intervals / lo.size)))
        t = np.linspace(0.0, 1.0, k + 1)
        pts = lo[:, None] + (hi - lo)[:, None] * t[None, :]
        lo, hi = pts[:, :-1].ravel(), pts[:, 1:].ravel()

    total = 0.0
    err_total = 0.0
    min_width = width * 1e-13
    while lo.size:
        if lo.size > max_intervals:
            raise NumericalError(
                f"adaptive quadrature exceeded {max_intervals} intervals on [{a}, {b}]",
                partial=total,
                err_estimate=err_total,
            )
        h = hi - lo
        x = lo[:, None] + h[:, None] * np.array([0.0, 0.25, 0.5, 0.75, 1.0])[None, :]
        y = np.asarray(f(x.ravel()), dtype=float).reshape(x.shape)
        s1 = h / 6.0 * (y[:, 0] + 4.0 * y[:, 2] + y[:, 4])
        s2 = h / 12.0 * (y[:, 0] + 4.0 * y[:, 1] + 2.0 * y[:, 2] + 4.0 * y[:, 3] + y[:, 4])
        diff = np.abs(s2 - s1) / 15.0
        done = (diff <= tol * h / width) | (h <= min_width)
        if np.any(~np.isfinite(s2)):
            raise NumericalError("non-finite integrand value", partial=total, err_estimate=err_total)
        total += float(np.sum(s2[done] + (s2[done] - s1[done]) / 15.0))
        err_total += float(np.sum(diff[done]))
        mid = 0.5 * (lo + hi)
        keep = ~done
        lo = np.concatenate([lo[keep], mid[keep]])
        hi = np.concatenate([mid[keep], hi[keep]])
    return total, err_total


def gauss_legendre_nodes(n: int):
    return np.polynomial.legendre.leggauss(n)


# ---------------------------------------------------------------------------
# Root finding and one-dimensional maximisation
# ---------------------------------------------------------------------------

def bisect_monotone(g: Callable[[float], float], lo: float, hi: float, tol: float = 1e-9) -> float:
    """Root of a monotone function by bisection.

    The bracket ``[lo, hi]`` must carry a sign change. Iteration stops once
    the bracket is narrower than ``tol``; its midpoint is returned.
    """
    if not tol > 0:
        raise DomainError("tol must be positive")
    glo, ghi = g(lo), g(hi)
    if glo == 0:
        return lo
    if ghi == 0:
        return hi
    if (glo > 0) == (ghi > 0):
        raise BracketError(f"g({lo})={glo!r} and g({hi})={ghi!r} have the same sign")
    rising = ghi > 0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if gm == 0:
            return mid
        if (gm > 0) == rising:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def smallest_feasible(feasible: Callable[[float], bool], lo: float, hi: float, tol: float) -> float:
    """Smallest point of ``[lo, hi]`` where a monotone predicate turns true.

    ``feasible(hi)`` is assumed true. Returns the right end of the final
    bracket, which is always a feasible point.
    """
    if feasible(lo):
        return lo
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return hi


def refine_max(fn: Callable[[float], float], lo: float, hi: float, xtol: float = 1e-11):
    """Local maximum of a scalar function on ``[lo, hi]`` (bounded Brent search).

    Returns ``(x, fn(x))``.
    """
    if hi <= lo:
        return lo, fn(lo)
    res = minimize_scalar(lambda t: -fn(t), bounds=(lo, hi), method="bounded",
                          options={"xatol": xtol, "maxiter": 200})
    return float(res.x), float(-res.fun)


def grid_sup(fn_vec: Callable[[np.ndarray], np.ndarray], points: np.ndarray, refine: int = 3,
             continuous: bool = True):
    """Supremum of a vectorised function over sample points.

    The best ``refine`` sample points are polished by a bounded scalar search
    between their neighbours. Returns ``(sup, grid_sup, argmax)``; the gap
    between the refined and raw values serves as an error indicator.
    """
    points = np.unique(np.asarray(points, dtype=float))
    values = np.asarray(fn_vec(points), dtype=float)
    i_best = int(np.argmax(values))
    raw = float(values[i_best])
    best, arg = raw, float(points[i_best])
    if continuous and refine > 0 and points.size >= 3:
        order = np.argsort(values)[::-1][:refine]
        for i in order:
            lo = points[max(i - 1, 0)]
            hi = points[min(i + 1, points.size - 1)]
            x, val = refine_max(lambda t: float(fn_vec(np.array([t]))[0]), lo, hi)
            if val > best:
                best, arg = val, x
    return best, raw, arg
