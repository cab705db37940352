"""Distances between laws and distances to normality.

Conventions: the total variation is the variation of the signed measure
F - G, so it ranges over [0, 2]; the entropic distance compares a law with
the normal law of the same mean and variance.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .distributions import Distribution
from .numerics import (
    DEFAULT_TOLERANCES,
    SQRT2PI,
    DomainError,
    Tolerances,
    grid_sup,
    integrate,
    smallest_feasible,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class MetricValue:
    value: float
    err_estimate: float
    method: str

    def as_dict(self) -> dict:
        return {"value": self.value, "err_estimate": self.err_estimate, "method": self.method}


@dataclass(frozen=True)
class EntropicValue:
    """D(X) together with the centring (a, sigma) of the reference normal."""

    value: float
    a: float
    sigma: float
    err_estimate: float = 0.0

    @property
    def centering(self) -> tuple[float, float]:
        return self.a, self.sigma

    def as_dict(self) -> dict:
        return {"value": self.value, "err_estimate": self.err_estimate,
                "method": "quadrature" if math.isfinite(self.value) else "atoms",
                "centering": {"a": self.a, "sigma": self.sigma}}


# ---------------------------------------------------------------------------
# evaluation points
# ---------------------------------------------------------------------------

def _union_window(f: Distribution, g: Distribution, tol: Tolerances) -> tuple[float, float]:
    a1, b1 = f.window(tol)
    a2, b2 = g.window(tol)
    return min(a1, a2), max(b1, b2)


def _candidate_points(f: Distribution, g: Distribution, tol: Tolerances, pad: float = 0.0) -> np.ndarray:
    lo, hi = _union_window(f, g, tol)
    lo, hi = lo - pad, hi + pad
    if hi <= lo:
        lo, hi = lo - 1.0, hi + 1.0
    grid = np.linspace(lo, hi, tol.sup_grid_points)
    pts = np.concatenate([grid, f.breakpoints(tol), g.breakpoints(tol)])
    return np.unique(pts)


# ---------------------------------------------------------------------------
# classical metrics
# ---------------------------------------------------------------------------

def kolmogorov(f: Distribution, g: Distribution, tol: Tolerances = DEFAULT_TOLERANCES) -> MetricValue:
    """sup_x |F(x) - G(x)|, checking right values and left limits at every candidate."""
    pts = _candidate_points(f, g, tol)
    fr, fl = f.cdf_both(pts)
    gr, gl = g.cdf_both(pts)
    right, left = np.abs(fr - gr), np.abs(fl - gl)
    raw = float(max(right.max(), left.max()))
    # polish between samples: only the continuous parts move there
    best, _, _ = grid_sup(lambda x: np.abs(f.cdf(x) - g.cdf(x)), pts, refine=3)
    value = min(max(raw, best), 1.0)
    return MetricValue(value, (value - raw) + 1e-12, "grid-sup")


def _levy_gap(f: Distribution, g: Distribution, h: float, pts: np.ndarray) -> float:
    """sup_x (F(x) - G(x + h)), including left limits at jumps."""
    fr, fl = f.cdf_both(pts)
    gr, gl = g.cdf_both(pts + h)
    return float(max((fr - gr).max(), (fl - gl).max()))


def levy(f: Distribution, g: Distribution, tol: Tolerances = DEFAULT_TOLERANCES) -> MetricValue:
    """Smallest h with G(x-h) - h <= F(x) <= G(x+h) + h for all x.

    Bisection on h in [0, 1] over a monotone feasibility predicate.
    """
    base = _candidate_points(f, g, tol)
    jumps = np.concatenate([f.atom_locations, g.atom_locations,
                            f.breakpoints(tol), g.breakpoints(tol)])

    def points(h):
        return np.unique(np.concatenate([base, jumps - h]))

    def gaps(h):
        pts = points(h)
        return _levy_gap(f, g, h, pts), _levy_gap(g, f, h, pts)

    def feasible(h):
        g1, g2 = gaps(h)
        return max(g1, g2) <= h

    # L <= ||F - G|| narrows the initial bracket
    upper = min(1.0, kolmogorov(f, g, tol).value + tol.root_tol)
    h = smallest_feasible(feasible, 0.0, upper, tol.root_tol) if feasible(upper) else \
        smallest_feasible(feasible, upper, 1.0, tol.root_tol)
    # error indicator: how much refinement between samples raises the gaps
    pts = points(h)
    g1, g2 = gaps(h)
    r1, _, _ = grid_sup(lambda x: f.cdf(x) - g.cdf(x + h), pts, refine=2)
    r2, _, _ = grid_sup(lambda x: g.cdf(x) - f.cdf(x + h), pts, refine=2)
    sup_err = max(r1 - g1, r2 - g2, 0.0)
    return MetricValue(h, tol.root_tol + sup_err, "bisection")


def _tail_allowance(d: Distribution, tol: Tolerances) -> float:
    # integral of the neglected tails of 1 - F and F beyond the window
    return 2.0 * tol.tail_cutoff * (1.0 + abs(d.mean) + d.sd)


def w1(f: Distribution, g: Distribution, tol: Tolerances = DEFAULT_TOLERANCES) -> MetricValue:
    """Integral of |F - G| over the line."""
    if not f.atoms and not g.atoms and f.continuous_part == g.continuous_part:
        return MetricValue(0.0, 0.0, "quadrature")
    lo, hi = _union_window(f, g, tol)
    if hi <= lo:
        return MetricValue(0.0, 0.0, "quadrature")
    breaks = np.concatenate([f.breakpoints(tol), g.breakpoints(tol)])
    value, err = integrate(lambda x: np.abs(f.cdf(x) - g.cdf(x)), lo, hi, tol.quad_abs_tol, breakpoints=breaks)
    err += _tail_allowance(f, tol) + _tail_allowance(g, tol)
    return MetricValue(max(value, 0.0), err, "quadrature")


def tv(f: Distribution, g: Distribution, tol: Tolerances = DEFAULT_TOLERANCES) -> MetricValue:
    """Total variation of F - G: atom differences plus the L1 distance of the densities."""
    weights: dict[float, float] = {}
    for x, w in f.atoms:
        weights[x] = weights.get(x, 0.0) + w
    for x, w in g.atoms:
        weights[x] = weights.get(x, 0.0) - w
    atom_part = sum(abs(w) for w in weights.values())
    value, err = atom_part, 0.0
    if f.continuous_part is not None or g.continuous_part is not None:
        if f.continuous_part == g.continuous_part:
            value += abs(f.continuous_weight - g.continuous_weight)
        else:
            lo, hi = _union_window(f, g, tol)
            breaks = np.concatenate([f.breakpoints(tol), g.breakpoints(tol)])
            dens, err = integrate(lambda x: np.abs(f.pdf(x) - g.pdf(x)), lo, hi, tol.quad_abs_tol,
                                  breakpoints=breaks)
            value += dens
            err += 2.0 * tol.tail_cutoff
    return MetricValue(min(max(value, 0.0), 2.0), err, "signed-measure")


def tv_finite_collections(f: Distribution, g: Distribution, n_collections: int = 10_000,
                          seed: int = 0, size: int = 400) -> float:
    """Lower approximation of the TV from its definition as a sup over finite collections.

    Each collection is a set of disjoint intervals (y_k, x_k] drawn at random
    inside the union window; the value is the best sum of
    |(F - G)(x_k) - (F - G)(y_k)|. A final deterministic collection follows
    the sign changes of p - q on a fine grid.
    """
    tol = DEFAULT_TOLERANCES
    lo, hi = _union_window(f, g, tol)
    grid = np.linspace(lo, hi, 200_001)
    diff = f.cdf(grid) - g.cdf(grid)
    rng = np.random.Generator(np.random.Philox(seed))
    best = 0.0
    for _ in range(n_collections):
        idx = np.sort(rng.choice(grid.size, size=size, replace=False))
        vals = diff[idx]
        best = max(best, float(np.sum(np.abs(np.diff(vals)))))
    # the collection following the monotone pieces of F - G
    d = np.diff(diff)
    turns = np.flatnonzero(np.sign(d[1:]) != np.sign(d[:-1])) + 1
    idx = np.unique(np.concatenate([[0], turns, [grid.size - 1]]))
    best = max(best, float(np.sum(np.abs(np.diff(diff[idx])))))
    return best


# ---------------------------------------------------------------------------
# distances to normality
# ---------------------------------------------------------------------------

def entropic_distance(d: Distribution, tol: Tolerances = DEFAULT_TOLERANCES) -> EntropicValue:
    """KL divergence from the law of X to the normal law with the same mean and variance.

    Infinite when X has atoms. Computed as ``log(sigma sqrt(2 pi e)) + int p log p``.
    """
    m = d.moments()
    if not m.variance > 0:
        raise DomainError("entropic distance needs a non-degenerate law (Var > 0)")
    a, sigma = m.mean, math.sqrt(m.variance)
    if d.has_atoms:
        return EntropicValue(math.inf, a, sigma, 0.0)
    part = d.continuous_part
    lo, hi = part.support(tol.tail_cutoff)

    def integrand(x):
        p = part.pdf(x)
        safe = np.where(p > 1e-300, p, 1.0)
        return np.where(p > 1e-300, p * np.log(safe), 0.0)

    neg_h, err = integrate(integrand, lo, hi, tol.quad_abs_tol, breakpoints=part.breakpoints(tol.tail_cutoff))
    value = math.log(sigma * SQRT2PI) + 0.5 + neg_h
    # variance error feeds the closed-form term; the tail window costs ~tail_cutoff * log
    err += 1e-12 + tol.tail_cutoff * (1.0 + abs(math.log(tol.tail_cutoff)))
    if value < 0:
        if value < -10 * err:
            log.warning("entropic distance came out negative (%.3g) beyond its error estimate", value)
        value = 0.0
    return EntropicValue(value, a, sigma, err)


def _deviation(d: Distribution, tol: Tolerances):
    if d.has_atoms or d.continuous_part is None:
        raise DomainError("uniform deviation needs a purely continuous law")
    m = d.moments()
    if not m.variance > 0:
        raise DomainError("uniform deviation needs Var > 0")
    v = math.sqrt(m.variance)
    part = d.continuous_part
    lo, hi = part.support(tol.tail_cutoff)
    lo, hi = min(lo, m.mean - 8 * v), max(hi, m.mean + 8 * v)
    pts = np.unique(np.concatenate([np.linspace(lo, hi, tol.sup_grid_points), part.breakpoints(tol.tail_cutoff)]))

    def gap(x):
        z = (x - m.mean) / v
        return part.pdf(x) - np.exp(-0.5 * z * z) / (v * SQRT2PI)

    return grid_sup(gap, pts, refine=5)


def uniform_deviation_value(d: Distribution, tol: Tolerances = DEFAULT_TOLERANCES) -> MetricValue:
    """Delta(X) = ess sup (p - phi_v) with details; the normal is centred at the mean."""
    best, raw, _ = _deviation(d, tol)
    method = "grid-sup+refine"
    if best < 0:
        log.info("uniform deviation %.3g clamped to 0", best)
        method += ",clamped"
        best = 0.0
    return MetricValue(best, max(best - raw, 0.0) + 1e-12, method)


def uniform_deviation(d: Distribution, tol: Tolerances = DEFAULT_TOLERANCES) -> float:
    return uniform_deviation_value(d, tol).value


def _expect_unbounded(g: Callable[[np.ndarray], np.ndarray], mu: Distribution, tol: Tolerances) -> float:
    """E_mu g with the quadrature range widened until the added tails are negligible.

    ``g`` may grow fast enough that the usual tail cut-off of ``mu`` loses
    mass, so each side is extended by the current width until a new slab
    contributes less than ``quad_abs_tol``.
    """
    value, _ = mu.expect(g, tol)
    part = mu.continuous_part
    if part is None or mu.continuous_weight == 0:
        return value
    a, b = part.support(tol.tail_cutoff)

    def weighted(x):
        with np.errstate(all="ignore"):
            v = np.asarray(g(x), dtype=float) * part.pdf(x)
        return np.where(np.isfinite(v), v, 0.0)

    for _ in range(6):
        w = b - a
        left, _ = integrate(weighted, a - w, a, tol.quad_abs_tol)
        right, _ = integrate(weighted, b, b + w, tol.quad_abs_tol)
        value += mu.continuous_weight * (left + right)
        a, b = a - w, b + w
        if abs(left) + abs(right) < tol.quad_abs_tol:
            break
    return value


def entropy_functional(f: Callable[[np.ndarray], np.ndarray], mu: Distribution,
                       tol: Tolerances = DEFAULT_TOLERANCES) -> float:
    """Ent_mu(f) = E f log f - E f log E f for a non-negative function f."""
    def fval(x):
        return np.asarray(f(x), dtype=float)

    def flogf(x):
        v = fval(x)
        safe = np.where(v > 0, v, 1.0)
        return np.where(v > 0, v * np.log(safe), 0.0)

    ef = _expect_unbounded(fval, mu, tol)
    if not ef > 0:
        raise DomainError("E f must be positive")
    eflogf = _expect_unbounded(flogf, mu, tol)
    return max(eflogf - ef * math.log(ef), 0.0)


METRICS = {
    "levy": levy,
    "kolmogorov": kolmogorov,
    "w1": w1,
    "tv": tv,
}
