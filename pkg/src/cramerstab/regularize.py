"""Gaussian regularisation X_sigma = X + sigma Z."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import Distribution, GaussianMixtureDensity, GridDensity, _combine_parts, gridify
from .numerics import DEFAULT_TOLERANCES, DomainError, Tolerances, grid_sup


@dataclass(frozen=True)
class RegularizationParams:
    """Smoothing level; values above 1 need ``allow_large`` (flagged in reports)."""

    sigma: float
    allow_large: bool = False

    def __post_init__(self):
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise DomainError(f"sigma must be positive, got {self.sigma!r}")
        if self.sigma > 1 and not self.allow_large:
            raise DomainError(f"sigma = {self.sigma} exceeds 1; pass allow_large to override")

    @property
    def reg_sigma1(self) -> float:
        """sqrt(1 + sigma^2)."""
        return math.sqrt(1.0 + self.sigma**2)

    @property
    def reg_sigma2(self) -> float:
        """sqrt(1 + 2 sigma^2)."""
        return math.sqrt(1.0 + 2.0 * self.sigma**2)


def _as_params(params) -> RegularizationParams:
    if isinstance(params, RegularizationParams):
        return params
    return RegularizationParams(float(params))


def regularize(d: Distribution, params, tol: Tolerances = DEFAULT_TOLERANCES) -> Distribution:
    """Law of X + sigma Z with Z ~ N(0, 1) independent of X.

    Atoms become Gaussian components, mixture components widen to
    sqrt(sd^2 + sigma^2), and grid parts gain sigma in their kernel; all
    three are exact.
    """
    sigma = _as_params(params).sigma
    pieces = []
    if d.atoms:
        comps = tuple((x, sigma, w) for x, w in d.atoms)
        total = sum(w for _, w in d.atoms)
        pieces.append((total, GaussianMixtureDensity(tuple((m, s, w / total) for m, s, w in comps))))
    part = d.continuous_part
    diag = {}
    if part is not None and d.continuous_weight > 0:
        if part.window is not None:
            # a clipped part has no closed form once smoothed
            part = gridify(part, tol)
            diag["resampled"] = True
        pieces.append((d.continuous_weight, part.smoothed(sigma)))
    new_part, cw, extra = _combine_parts(pieces, tol)
    diag.update(extra)
    out = Distribution((), new_part, 1.0)
    return out.with_diagnostics(**diag) if diag else out


def regularized_density_gap(f: Distribution, g: Distribution, params,
                            tol: Tolerances = DEFAULT_TOLERANCES) -> float:
    """sup_x |p_sigma(x) - q_sigma(x)| for the regularised densities."""
    sigma = _as_params(params).sigma
    fs, gs = regularize(f, sigma, tol), regularize(g, sigma, tol)
    a1, b1 = fs.window(tol)
    a2, b2 = gs.window(tol)
    pts = np.concatenate([np.linspace(min(a1, a2), max(b1, b2), tol.sup_grid_points),
                          f.atom_locations, g.atom_locations])
    best, _, _ = grid_sup(lambda x: np.abs(fs.pdf(x) - gs.pdf(x)), pts, refine=5)
    return best
