"""One-dimensional laws made of atoms plus one absolutely continuous part.

Two kinds of continuous part exist:

* :class:`GaussianMixtureDensity` -- finite normal mixtures, handled in
  closed form.
* :class:`GridDensity` -- a piecewise-linear density on uniform knots,
  optionally smoothed by a Gaussian-mixture kernel. The kernel keeps
  Gaussian regularisation of grid laws exact (the smoothed density and its
  distribution function have closed forms in terms of Phi and phi).

Both accept a ``window``: the part is then restricted to the window and
renormalised. Truncation produces such windowed parts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from scipy.special import logsumexp, ndtr

from .numerics import (
    DEFAULT_TOLERANCES,
    INV_SQRT2PI,
    DomainError,
    Tolerances,
    gaussian_tail_z,
    integrate,
    normal_cdf_diff,
    normal_partial_moments,
)

WEIGHT_TOL = 1e-12
GRID_MASS_TOL = 1e-9
# Knot budget when a density has to be resampled onto a grid.
GRID_TARGET_KNOTS = 4096
_CHUNK = 2_000_000


def _phi(t):
    return INV_SQRT2PI * np.exp(-0.5 * t * t)


def _int_cdf(w):
    """Antiderivative of Phi."""
    return w * ndtr(w) + _phi(w)


def _int_x_cdf(w):
    """Antiderivative of w * Phi(w)."""
    return 0.5 * ((w * w - 1.0) * ndtr(w) + w * _phi(w))


def _chunked(fn, x, width):
    """Apply ``fn`` to slices of ``x`` so that ``len(slice) * width`` stays bounded."""
    step = max(1, _CHUNK // max(width, 1))
    if x.size <= step:
        return fn(x)
    return np.concatenate([fn(x[i:i + step]) for i in range(0, x.size, step)])


# ---------------------------------------------------------------------------
# Continuous parts
# ---------------------------------------------------------------------------

class _WindowedPart:
    """Shared window (restriction + renormalisation) logic."""

    window: tuple[float, float] | None

    @cached_property
    def window_mass(self) -> float:
        if self.window is None:
            return 1.0
        lo, hi = self.window
        return float(self._raw_cdf(np.array([hi]))[0] - self._raw_cdf(np.array([lo]))[0])

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        flat = x.ravel()
        p = self._raw_pdf(flat)
        if self.window is not None:
            lo, hi = self.window
            p = np.where((flat >= lo) & (flat <= hi), p / self.window_mass, 0.0)
        return p.reshape(x.shape)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        flat = x.ravel()
        if self.window is None:
            c = self._raw_cdf(flat)
        else:
            lo, hi = self.window
            base = self._raw_cdf(np.array([lo]))[0]
            c = (self._raw_cdf(np.clip(flat, lo, hi)) - base) / self.window_mass
            c = np.where(flat < lo, 0.0, np.where(flat >= hi, 1.0, c))
        return np.clip(c, 0.0, 1.0).reshape(x.shape)

    def support(self, tail: float) -> tuple[float, float]:
        lo, hi = self._raw_support(tail)
        if self.window is not None:
            lo, hi = max(lo, self.window[0]), min(hi, self.window[1])
        return lo, hi

    def breakpoints(self, tail: float) -> np.ndarray:
        pts = self._raw_breakpoints(tail)
        if self.window is not None:
            lo, hi = self.window
            pts = np.concatenate([pts[(pts > lo) & (pts < hi)], [lo, hi]])
        return np.unique(pts)

    def partial_moment(self, k: int, lo: float, hi: float, tol: Tolerances = DEFAULT_TOLERANCES) -> float:
        """Integral of ``x**k * p(x)`` over ``[lo, hi]``."""
        if self.window is not None:
            lo, hi = max(lo, self.window[0]), min(hi, self.window[1])
            if lo >= hi:
                return 0.0
            return self._raw_partial(k, lo, hi, tol) / self.window_mass
        if lo >= hi:
            return 0.0
        return self._raw_partial(k, lo, hi, tol)

    @property
    def is_windowed(self) -> bool:
        return self.window is not None

    def restricted(self, lo: float, hi: float):
        if self.window is not None:
            lo, hi = max(lo, self.window[0]), min(hi, self.window[1])
        return replace(self, window=(float(lo), float(hi)))

    def affine(self, lam: float, shift: float):
        """Density of ``lam * X + shift``."""
        part = self._raw_affine(lam, shift)
        if self.window is not None:
            a, b = sorted((lam * self.window[0] + shift, lam * self.window[1] + shift))
            part = replace(part, window=(a, b))
        return part

    def mean_and_second_moment(self, tol: Tolerances = DEFAULT_TOLERANCES) -> tuple[float, float]:
        return (self.partial_moment(1, -math.inf, math.inf, tol),
                self.partial_moment(2, -math.inf, math.inf, tol))


@dataclass(frozen=True)
class GaussianMixtureDensity(_WindowedPart):
    """Finite mixture of normal densities: tuples ``(mean, sd, weight)``."""

    components: tuple[tuple[float, float, float], ...]
    window: tuple[float, float] | None = None

    def __post_init__(self):
        comps = tuple((float(m), float(s), float(w)) for m, s, w in self.components)
        object.__setattr__(self, "components", comps)
        if not comps:
            raise DomainError("a Gaussian mixture needs at least one component")
        for m, s, w in comps:
            if not (math.isfinite(m) and s > 0 and math.isfinite(s) and w >= 0):
                raise DomainError(f"invalid mixture component (mean={m}, sd={s}, weight={w})")
        total = sum(w for _, _, w in comps)
        if abs(total - 1.0) > WEIGHT_TOL:
            raise DomainError(f"mixture weights sum to {total!r}, not 1")

    @cached_property
    def _arrays(self):
        arr = np.array(self.components, dtype=float)
        return arr[:, 0], arr[:, 1], arr[:, 2]

    def _raw_pdf(self, x):
        m, s, w = self._arrays
        z = (x[:, None] - m[None, :]) / s[None, :]
        return (_phi(z) * (w / s)[None, :]).sum(axis=1)

    def log_pdf(self, x):
        m, s, w = self._arrays
        x = np.asarray(x, dtype=float)
        z = (x.ravel()[:, None] - m[None, :]) / s[None, :]
        with np.errstate(divide="ignore"):
            logc = -0.5 * z * z + np.log(w / s * INV_SQRT2PI)[None, :]
        out = logsumexp(logc, axis=1)
        if self.window is not None:
            lo, hi = self.window
            flat = x.ravel()
            out = np.where((flat >= lo) & (flat <= hi), out - math.log(self.window_mass), -np.inf)
        return out.reshape(x.shape)

    def _raw_cdf(self, x):
        m, s, w = self._arrays
        z = (x[:, None] - m[None, :]) / s[None, :]
        return (ndtr(z) * w[None, :]).sum(axis=1)

    def _raw_partial(self, k, lo, hi, tol):
        m, s, w = self._arrays
        moments = normal_partial_moments(m, s, lo, hi)
        return float(np.sum(w * moments[k]))

    def _raw_support(self, tail):
        m, s, _ = self._arrays
        z = gaussian_tail_z(tail)
        return float(np.min(m - z * s)), float(np.max(m + z * s))

    def _raw_breakpoints(self, tail):
        m, s, _ = self._arrays
        return np.concatenate([m, m - s, m + s, m - 3 * s, m + 3 * s])

    def _raw_affine(self, lam, shift):
        return GaussianMixtureDensity(
            tuple((lam * m + shift, abs(lam) * s, w) for m, s, w in self.components))

    def smoothed(self, sigma: float) -> "GaussianMixtureDensity":
        return GaussianMixtureDensity(
            tuple((m, math.hypot(s, sigma), w) for m, s, w in self.components))

    def shifted(self, c: float) -> "GaussianMixtureDensity":
        return self.affine(1.0, c)


@dataclass(frozen=True)
class GridDensity(_WindowedPart):
    """Piecewise-linear density on the knots ``x0 + i * step``.

    The density vanishes outside ``[x0, x0 + (n-1) * step]`` and takes the
    knot values on the closed interval, so a non-zero end value is a jump.
    ``kernel`` is a Gaussian mixture ``(mean, sd, weight)`` the grid density
    is convolved with; ``sd == 0`` entries are plain translations. The
    default kernel is the identity.
    """

    x0: float
    step: float
    values: tuple[float, ...]
    kernel: tuple[tuple[float, float, float], ...] = ((0.0, 0.0, 1.0),)
    window: tuple[float, float] | None = None

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "x0", float(self.x0))
        object.__setattr__(self, "step", float(self.step))
        kernel = tuple((float(m), float(s), float(w)) for m, s, w in self.kernel)
        object.__setattr__(self, "kernel", kernel)
        if len(values) < 3:
            raise DomainError("a grid density needs at least 3 knots")
        if not (self.step > 0 and math.isfinite(self.step) and math.isfinite(self.x0)):
            raise DomainError(f"invalid grid geometry x0={self.x0}, step={self.step}")
        if any(not (v >= 0 and math.isfinite(v)) for v in values):
            raise DomainError("grid values must be finite and non-negative")
        mass = self.step * (sum(values) - 0.5 * (values[0] + values[-1]))
        if abs(mass - 1.0) > GRID_MASS_TOL:
            raise DomainError(f"grid density integrates to {mass!r}, not 1")
        if not kernel or any(s < 0 or w < 0 or not math.isfinite(m) for m, s, w in kernel):
            raise DomainError("invalid grid kernel")
        if abs(sum(w for _, _, w in kernel) - 1.0) > WEIGHT_TOL:
            raise DomainError("grid kernel weights must sum to 1")

    @classmethod
    def from_values(cls, x0: float, step: float, values, **kwargs) -> "GridDensity":
        """Build a grid density, rescaling ``values`` to unit trapezoidal mass."""
        v = np.clip(np.asarray(values, dtype=float), 0.0, None)
        mass = step * (v.sum() - 0.5 * (v[0] + v[-1]))
        if not mass > 0:
            raise DomainError("grid values carry no mass")
        return cls(x0, step, tuple(v / mass), **kwargs)

    # -- plain (unsmoothed) grid helpers ------------------------------------

    @cached_property
    def knots(self) -> np.ndarray:
        return self.x0 + self.step * np.arange(len(self.values))

    @cached_property
    def _v(self) -> np.ndarray:
        v = np.asarray(self.values)
        mass = self.step * (v.sum() - 0.5 * (v[0] + v[-1]))
        return v / mass

    @cached_property
    def _cum(self) -> np.ndarray:
        v = self._v
        return np.concatenate([[0.0], np.cumsum(0.5 * self.step * (v[:-1] + v[1:]))])

    @property
    def plain(self) -> "GridDensity":
        return GridDensity(self.x0, self.step, self.values)

    @property
    def is_plain(self) -> bool:
        return self.kernel == ((0.0, 0.0, 1.0),) and self.window is None

    @property
    def end(self) -> float:
        return self.x0 + self.step * (len(self.values) - 1)

    def _plain_pdf(self, x):
        xs, v = self.knots, self._v
        return np.where((x >= xs[0]) & (x <= xs[-1]), np.interp(x, xs, v), 0.0)

    def _plain_cdf(self, x):
        xs, v, cum = self.knots, self._v, self._cum
        n = len(xs)
        idx = np.clip(np.searchsorted(xs, x, side="right") - 1, 0, n - 2)
        dx = np.clip(x - xs[idx], 0.0, self.step)
        slope = (v[idx + 1] - v[idx]) / self.step
        c = cum[idx] + v[idx] * dx + 0.5 * slope * dx * dx
        return np.where(x < xs[0], 0.0, np.where(x >= xs[-1], 1.0, c))

    def _plain_partial(self, k, lo, hi):
        """Exact integral of x**k p(x) over [lo, hi] (two-point Gauss is exact)."""
        xs, v = self.knots, self._v
        a = np.clip(xs[:-1], lo, hi)
        b = np.clip(xs[1:], lo, hi)
        keep = b > a
        if not np.any(keep):
            return 0.0
        a, b = a[keep], b[keep]
        half, mid = 0.5 * (b - a), 0.5 * (a + b)
        total = 0.0
        for node in (-1.0 / math.sqrt(3.0), 1.0 / math.sqrt(3.0)):
            x = mid + half * node
            total += float(np.sum(half * x**k * np.interp(x, xs, v)))
        return total

    # -- smoothed segments ---------------------------------------------------

    @cached_property
    def _segments(self):
        xs, v = self.knots, self._v
        a, b = xs[:-1], xs[1:]
        beta = (v[1:] - v[:-1]) / self.step
        centre = 0.5 * (a + b)
        pc = 0.5 * (v[:-1] + v[1:])
        mass = self.step * pc
        return a, b, beta, centre, pc, mass

    def _lattice_index(self, u):
        """Integer knot offsets of ``u`` when every point sits on the grid lattice, else None."""
        if u.size < 64:
            return None
        t = (u - self.x0) / self.step
        k = np.rint(t)
        if np.max(np.abs(t - k)) > 1e-9 or k.max() - k.min() > 400_000:
            return None
        return k.astype(np.int64)

    def _smoothed_pdf_lattice(self, k, s):
        # on the lattice, segment j contributes v_j L((k - j) h) + v_{j+1} R((k - j) h)
        h, v = self.step, self._v
        nseg = v.size - 1
        dmin, dmax = int(k.min()) - (nseg - 1), int(k.max())
        z = h * np.arange(dmin, dmax + 1)
        ta, tb = -z / s, (h - z) / s
        mass, slope = normal_cdf_diff(ta, tb), s * (_phi(ta) - _phi(tb))
        # L(z) = int_0^h (1 - t/h) phi_s(z - t) dt, R(z) = int_0^h (t/h) phi_s(z - t) dt
        right = ((z - 0.5 * h) * mass + slope) / h + 0.5 * mass
        left = mass - right
        conv = np.convolve(v[:-1], left) + np.convolve(v[1:], right)
        return conv[k - dmin]

    def _smoothed_pdf(self, u, s):
        k = self._lattice_index(u)
        if k is not None:
            return self._smoothed_pdf_lattice(k, s)
        a, b, beta, centre, pc, _ = self._segments

        def block(uu):
            A = pc[None, :] + beta[None, :] * (uu[:, None] - centre[None, :])
            ta = (a[None, :] - uu[:, None]) / s
            tb = (b[None, :] - uu[:, None]) / s
            val = A * normal_cdf_diff(ta, tb) + beta[None, :] * s * (_phi(ta) - _phi(tb))
            return val.sum(axis=1)

        return _chunked(block, u, a.size)

    def _smoothed_cdf(self, u, s):
        a, b, beta, centre, pc, mass = self._segments

        def block(uu):
            uu2 = uu[:, None]
            A = pc[None, :] + beta[None, :] * (uu2 - centre[None, :])
            left = uu2 <= centre[None, :]
            wa, wb = (uu2 - a[None, :]) / s, (uu2 - b[None, :]) / s
            lower = s * A * (_int_cdf(wa) - _int_cdf(wb)) - beta * s * s * (_int_x_cdf(wa) - _int_x_cdf(wb))
            upper = mass[None, :] - (s * A * (_int_cdf(-wb) - _int_cdf(-wa))
                                     + beta * s * s * (_int_x_cdf(-wb) - _int_x_cdf(-wa)))
            return np.where(left, lower, upper).sum(axis=1)

        return _chunked(block, u, a.size)

    # -- part interface ------------------------------------------------------

    def _raw_pdf(self, x):
        out = np.zeros_like(x)
        for m, s, w in self.kernel:
            out += w * (self._plain_pdf(x - m) if s == 0 else self._smoothed_pdf(x - m, s))
        return out

    def _raw_cdf(self, x):
        out = np.zeros_like(x)
        for m, s, w in self.kernel:
            out += w * (self._plain_cdf(x - m) if s == 0 else self._smoothed_cdf(x - m, s))
        return out

    def _raw_partial(self, k, lo, hi, tol):
        if not (math.isfinite(lo) or math.isfinite(hi)):
            # full line: moments of (plain grid) + (independent kernel draw)
            p1 = self._plain_partial(1, -math.inf, math.inf)
            p2 = self._plain_partial(2, -math.inf, math.inf)
            km = sum(w * m for m, _, w in self.kernel)
            k2 = sum(w * (m * m + s * s) for m, s, w in self.kernel)
            return [1.0, p1 + km, p2 + 2.0 * p1 * km + k2][k]
        total = 0.0
        for m, s, w in self.kernel:
            if s == 0:
                # shift: int_{lo-m}^{hi-m} (y + m)^k p(y) dy
                a, b = lo - m, hi - m
                mom = [self._plain_partial(j, a, b) for j in range(k + 1)]
                total += w * sum(math.comb(k, j) * mom[j] * m ** (k - j) for j in range(k + 1))
            else:
                slo, shi = self._component_support(m, s, tol.tail_cutoff)
                a, b = max(lo, slo), min(hi, shi)
                if a < b:
                    val, _ = integrate(lambda t: t**k * self._smoothed_pdf(t - m, s), a, b,
                                       tol.quad_abs_tol, breakpoints=self._component_breaks(m, s, a, b))
                    total += w * val
        return total

    def _component_support(self, m, s, tail):
        z = gaussian_tail_z(tail)
        return self.x0 + m - z * s, self.end + m + z * s

    def _component_breaks(self, m, s, lo, hi):
        if s == 0 or s < 4 * self.step:
            pts = self.knots + m
        else:
            pts = np.arange(self.x0 + m - 8 * s, self.end + m + 8 * s, 0.5 * s)
        return pts[(pts > lo) & (pts < hi)]

    def _raw_support(self, tail):
        z = gaussian_tail_z(tail)
        lo = min(self.x0 + m - z * s for m, s, _ in self.kernel)
        hi = max(self.end + m + z * s for m, s, _ in self.kernel)
        return lo, hi

    def _raw_breakpoints(self, tail):
        lo, hi = self._raw_support(tail)
        return np.unique(np.concatenate([self._component_breaks(m, s, lo, hi) for m, s, _ in self.kernel]
                                        + [np.array([lo, hi])]))

    def _raw_affine(self, lam, shift):
        if lam == 0:
            raise DomainError("scale factor must be non-zero")
        v = np.asarray(self.values) / abs(lam)
        if lam > 0:
            x0 = lam * self.x0 + shift
        else:
            x0 = lam * self.end + shift
            v = v[::-1]
        kernel = tuple((lam * m, abs(lam) * s, w) for m, s, w in self.kernel)
        return GridDensity.from_values(x0, abs(lam) * self.step, v, kernel=kernel)

    def shifted(self, c: float) -> "GridDensity":
        """Translate through the kernel so that the grid base is unchanged."""
        kernel = tuple((m + c, s, w) for m, s, w in self.kernel)
        win = None if self.window is None else (self.window[0] + c, self.window[1] + c)
        return replace(self, kernel=kernel, window=win)

    def smoothed(self, sigma: float) -> "GridDensity":
        kernel = tuple((m, math.hypot(s, sigma), w) for m, s, w in self.kernel)
        return replace(self, kernel=kernel)

    def log_pdf(self, x):
        p = self.pdf(x)
        with np.errstate(divide="ignore"):
            return np.where(p > 1e-300, np.log(np.maximum(p, 1e-300)), -np.inf)


ContinuousPart = GridDensity | GaussianMixtureDensity


# ---------------------------------------------------------------------------
# Distribution
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MomentSummary:
    mean: float
    variance: float
    second_moment: float


@dataclass(frozen=True)
class Distribution:
    """A law on the line: atoms ``(location, weight)`` plus a continuous part.

    ``diagnostics`` records numerical side effects (renormalisation drift,
    resampling) of the operations that produced the law.
    """

    atoms: tuple[tuple[float, float], ...] = ()
    continuous_part: ContinuousPart | None = None
    continuous_weight: float = 0.0
    diagnostics: tuple[tuple[str, object], ...] = field(default=(), compare=False)

    def __post_init__(self):
        atoms = tuple((float(x), float(w)) for x, w in self.atoms)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "continuous_weight", float(self.continuous_weight))
        locs = [x for x, _ in atoms]
        if any(not math.isfinite(x) for x in locs):
            raise DomainError("atom locations must be finite")
        if any(b <= a for a, b in zip(locs, locs[1:])):
            raise DomainError("atom locations must be strictly increasing")
        if any(not (0 <= w <= 1) for _, w in atoms) or not (0 <= self.continuous_weight <= 1):
            raise DomainError("weights must lie in [0, 1]")
        if self.continuous_part is None and self.continuous_weight != 0:
            raise DomainError("continuous_weight must be 0 without a continuous part")
        total = sum(w for _, w in atoms) + self.continuous_weight
        if abs(total - 1.0) > WEIGHT_TOL:
            raise DomainError(f"total mass is {total!r}, not 1")

    # -- structure -----------------------------------------------------------

    @cached_property
    def atom_locations(self) -> np.ndarray:
        return np.array([x for x, _ in self.atoms], dtype=float)

    @cached_property
    def atom_weights(self) -> np.ndarray:
        return np.array([w for _, w in self.atoms], dtype=float)

    @property
    def has_atoms(self) -> bool:
        return any(w > 0 for _, w in self.atoms)

    @property
    def is_continuous(self) -> bool:
        return not self.has_atoms and self.continuous_part is not None

    def window(self, tol: Tolerances = DEFAULT_TOLERANCES) -> tuple[float, float]:
        """Interval outside which the law puts mass below ``tol.tail_cutoff``."""
        lo, hi = math.inf, -math.inf
        if self.atoms:
            lo, hi = float(self.atom_locations.min()), float(self.atom_locations.max())
        if self.continuous_part is not None and self.continuous_weight > 0:
            a, b = self.continuous_part.support(tol.tail_cutoff)
            lo, hi = min(lo, a), max(hi, b)
        return lo, hi

    def breakpoints(self, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
        pts = [self.atom_locations]
        if self.continuous_part is not None and self.continuous_weight > 0:
            pts.append(self.continuous_part.breakpoints(tol.tail_cutoff))
        return np.unique(np.concatenate(pts))

    # -- evaluation ----------------------------------------------------------

    def pdf(self, x):
        """Density of the continuous part, scaled by its weight (atoms excluded)."""
        x = np.asarray(x, dtype=float)
        if self.continuous_part is None:
            return np.zeros_like(x)
        return self.continuous_weight * self.continuous_part.pdf(x)

    def log_pdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.continuous_part is None or self.continuous_weight == 0:
            return np.full_like(x, -np.inf)
        return math.log(self.continuous_weight) + self.continuous_part.log_pdf(x)

    def _atom_mass(self, x, strict: bool):
        if not self.atoms:
            return np.zeros_like(x)
        locs, w = self.atom_locations, np.concatenate([[0.0], np.cumsum(self.atom_weights)])
        side = "left" if strict else "right"
        return w[np.searchsorted(locs, x, side=side)]

    def cdf(self, x):
        """Right-continuous distribution function."""
        x = np.asarray(x, dtype=float)
        out = self._atom_mass(x, strict=False)
        if self.continuous_part is not None and self.continuous_weight > 0:
            out = out + self.continuous_weight * self.continuous_part.cdf(x)
        out = np.where(x == np.inf, 1.0, np.where(x == -np.inf, 0.0, out))
        return np.clip(out, 0.0, 1.0)

    def cdf_left(self, x):
        """Left limit F(x-)."""
        x = np.asarray(x, dtype=float)
        out = self._atom_mass(x, strict=True)
        if self.continuous_part is not None and self.continuous_weight > 0:
            out = out + self.continuous_weight * self.continuous_part.cdf(x)
        out = np.where(x == np.inf, 1.0, np.where(x == -np.inf, 0.0, out))
        return np.clip(out, 0.0, 1.0)

    def cdf_both(self, x):
        """``(F(x), F(x-))`` sharing one evaluation of the continuous part."""
        x = np.asarray(x, dtype=float)
        cont = 0.0
        if self.continuous_part is not None and self.continuous_weight > 0:
            cont = self.continuous_weight * self.continuous_part.cdf(x)
        right = self._atom_mass(x, strict=False) + cont
        left = self._atom_mass(x, strict=True) + cont
        for arr in (right, left):
            arr[x == np.inf] = 1.0
            arr[x == -np.inf] = 0.0
        return np.clip(right, 0.0, 1.0), np.clip(left, 0.0, 1.0)

    def partial_moment(self, k: int, lo: float, hi: float, tol: Tolerances = DEFAULT_TOLERANCES) -> float:
        """Integral of x**k dF over the closed interval [lo, hi]."""
        locs, w = self.atom_locations, self.atom_weights
        inside = (locs >= lo) & (locs <= hi)
        total = float(np.sum(w[inside] * locs[inside] ** k))
        if self.continuous_part is not None and self.continuous_weight > 0:
            total += self.continuous_weight * self.continuous_part.partial_moment(k, lo, hi, tol)
        return total

    def expect(self, g: Callable[[np.ndarray], np.ndarray], tol: Tolerances = DEFAULT_TOLERANCES,
               lo: float = -math.inf, hi: float = math.inf):
        """``E g(X)`` restricted to [lo, hi]: atoms summed, continuous part by quadrature.

        Returns ``(value, err_estimate)``.
        """
        locs, w = self.atom_locations, self.atom_weights
        inside = (locs >= lo) & (locs <= hi)
        value = float(np.sum(w[inside] * g(locs[inside]))) if np.any(inside) else 0.0
        err = 0.0
        if self.continuous_part is not None and self.continuous_weight > 0:
            a, b = self.continuous_part.support(tol.tail_cutoff)
            a, b = max(a, lo), min(b, hi)
            if a < b:
                part = self.continuous_part
                val, e = integrate(lambda x: g(x) * part.pdf(x), a, b, tol.quad_abs_tol,
                                   breakpoints=part.breakpoints(tol.tail_cutoff))
                value += self.continuous_weight * val
                err += self.continuous_weight * e
        return value, err

    @cached_property
    def _moments(self) -> MomentSummary:
        m1 = self.partial_moment(1, -math.inf, math.inf)
        m2 = self.partial_moment(2, -math.inf, math.inf)
        return MomentSummary(mean=m1, variance=max(m2 - m1 * m1, 0.0), second_moment=m2)

    def moments(self) -> MomentSummary:
        return self._moments

    @property
    def mean(self) -> float:
        return self._moments.mean

    @property
    def variance(self) -> float:
        return self._moments.variance

    @property
    def sd(self) -> float:
        return math.sqrt(self._moments.variance)

    def median(self, tol: Tolerances = DEFAULT_TOLERANCES) -> float:
        """Midpoint of the median interval {x : F(x-) <= 1/2 <= F(x)}."""
        lo_q = self.quantile(0.5, tol, upper=False)
        hi_q = self.quantile(0.5, tol, upper=True)
        return 0.5 * (lo_q + hi_q)

    def quantile(self, p: float, tol: Tolerances = DEFAULT_TOLERANCES, upper: bool = False) -> float:
        """``inf{x: F(x) >= p}`` (or ``sup{x: F(x-) <= p}`` when ``upper``)."""
        if not 0 < p < 1:
            raise DomainError("quantile level must lie in (0, 1)")
        lo, hi = self.window(tol)
        lo, hi = lo - 1.0, hi + 1.0
        if upper:
            test = lambda x: float(self.cdf_left(np.array([x]))[0]) > p
        else:
            test = lambda x: float(self.cdf(np.array([x]))[0]) >= p
        for x in self.atom_locations:
            # exact answers at atoms
            left = float(self.cdf_left(np.array([x]))[0])
            right = float(self.cdf(np.array([x]))[0])
            if (not upper and left < p <= right) or (upper and left <= p < right):
                return float(x)
        while hi - lo > tol.root_tol * max(1.0, abs(lo), abs(hi)):
            mid = 0.5 * (lo + hi)
            if test(mid):
                hi = mid
            else:
                lo = mid
        return 0.5 * (lo + hi)

    def with_diagnostics(self, **items) -> "Distribution":
        diag = dict(self.diagnostics)
        diag.update(items)
        return replace(self, diagnostics=tuple(sorted(diag.items())))


@dataclass(frozen=True)
class TruncationSummary:
    eps: float
    big_n: float
    a1: float
    sigma1_sq: float
    truncated: Distribution


# ---------------------------------------------------------------------------
# Constructors
# ---------------------------------------------------------------------------

def point_mass(x: float = 0.0) -> Distribution:
    return Distribution(atoms=((x, 1.0),))


def atoms(pairs: Sequence[tuple[float, float]]) -> Distribution:
    merged = _merge_atoms(pairs)
    total = sum(w for _, w in merged)
    return Distribution(atoms=tuple((x, w / total) for x, w in merged))


def normal(mean: float = 0.0, sd: float = 1.0) -> Distribution:
    """N(mean, sd^2); ``sd == 0`` gives the point mass at ``mean``."""
    if sd < 0:
        raise DomainError("sd must be non-negative")
    if sd == 0:
        return point_mass(mean)
    return Distribution(continuous_part=GaussianMixtureDensity(((mean, sd, 1.0),)), continuous_weight=1.0)


def gaussian_mixture(components: Sequence[tuple[float, float, float]]) -> Distribution:
    total = sum(w for _, _, w in components)
    comps = tuple((m, s, w / total) for m, s, w in components)
    return Distribution(continuous_part=GaussianMixtureDensity(comps), continuous_weight=1.0)


def uniform(lo: float, hi: float, knots: int = 3) -> Distribution:
    if not hi > lo:
        raise DomainError("uniform needs lo < hi")
    step = (hi - lo) / (knots - 1)
    grid = GridDensity.from_values(lo, step, np.ones(knots))
    return Distribution(continuous_part=grid, continuous_weight=1.0)


def grid_law(x0: float, step: float, values) -> Distribution:
    return Distribution(continuous_part=GridDensity.from_values(x0, step, values), continuous_weight=1.0)


def matched_normal(d: Distribution) -> Distribution:
    """Normal law with the mean and variance of ``d``."""
    return normal(d.mean, d.sd)


def _merge_atoms(pairs):
    merged: dict[float, float] = {}
    for x, w in pairs:
        if w > 0:
            merged[float(x)] = merged.get(float(x), 0.0) + float(w)
    return sorted(merged.items())


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def moments(d: Distribution) -> MomentSummary:
    return d.moments()


def cdf(d: Distribution, x):
    out = d.cdf(x)
    return out if np.ndim(out) else float(out)


def cdf_left(d: Distribution, x):
    out = d.cdf_left(x)
    return out if np.ndim(out) else float(out)


def quadratic_tail(d: Distribution, t: float, tol: Tolerances = DEFAULT_TOLERANCES) -> float:
    """Second-moment mass on the closed set {|x| >= t}."""
    if t < 0:
        raise DomainError("t must be non-negative")
    if t == 0:
        return d.moments().second_moment
    locs, w = d.atom_locations, d.atom_weights
    out = float(np.sum(w[np.abs(locs) >= t] * locs[np.abs(locs) >= t] ** 2))
    part = d.continuous_part
    if part is not None and d.continuous_weight > 0:
        out += d.continuous_weight * (part.partial_moment(2, -math.inf, -t, tol)
                                      + part.partial_moment(2, t, math.inf, tol))
    return out


def big_n(eps: float) -> float:
    """Truncation level 1 + sqrt(2 log(1/eps))."""
    if not 0 < eps < 1:
        raise DomainError(f"eps must lie in (0, 1), got {eps!r}")
    return 1.0 + math.sqrt(2.0 * math.log(1.0 / eps))


def truncate(d: Distribution, eps: float, tol: Tolerances = DEFAULT_TOLERANCES) -> TruncationSummary:
    """Keep X on |X| <= N(eps) and send the remaining mass to an atom at 0.

    Atoms sitting exactly at +-N are kept (closed interval).
    """
    n = big_n(eps)
    kept = [(x, w) for x, w in d.atoms if abs(x) <= n]
    moved = sum(w for x, w in d.atoms if abs(x) > n)
    a1 = sum(w * x for x, w in kept)
    m2 = sum(w * x * x for x, w in kept)
    part, cw = d.continuous_part, d.continuous_weight
    new_part, new_cw = None, 0.0
    if part is not None and cw > 0:
        mass_in = part.partial_moment(0, -n, n, tol)
        a1 += cw * part.partial_moment(1, -n, n, tol)
        m2 += cw * part.partial_moment(2, -n, n, tol)
        lo, hi = _raw_extent(part)
        if lo >= -n and hi <= n:
            new_part, new_cw = part, cw
        elif mass_in > 0:
            new_part, new_cw = part.restricted(-n, n), cw * mass_in
            moved += cw * (1.0 - mass_in)
        else:
            moved += cw
    if moved > 0:
        kept.append((0.0, moved))
    kept = _merge_atoms(kept)
    # fix rounding so the weights add to one exactly
    total = sum(w for _, w in kept) + new_cw
    if kept:
        x_last, w_last = kept[-1]
        kept[-1] = (x_last, w_last + (1.0 - total))
    elif new_part is not None:
        new_cw = 1.0
    truncated = Distribution(tuple(kept), new_part, new_cw if new_part is not None else 0.0)
    return TruncationSummary(eps=eps, big_n=n, a1=a1, sigma1_sq=max(m2 - a1 * a1, 0.0), truncated=truncated)


def _raw_extent(part: ContinuousPart) -> tuple[float, float]:
    """Exact support of a part (infinite whenever Gaussian tails are involved)."""
    if part.window is not None:
        lo, hi = part.window
    else:
        lo, hi = -math.inf, math.inf
    if isinstance(part, GridDensity) and all(s == 0 for _, s, _ in part.kernel):
        lo = max(lo, part.x0 + min(m for m, _, _ in part.kernel))
        hi = min(hi, part.end + max(m for m, _, _ in part.kernel))
    return lo, hi


def scale_shift(d: Distribution, lam: float, shift: float = 0.0) -> Distribution:
    """Law of ``lam * X + shift``."""
    if lam == 0 or not math.isfinite(lam):
        raise DomainError("scale factor must be finite and non-zero")
    new_atoms = sorted((lam * x + shift, w) for x, w in d.atoms)
    part = None if d.continuous_part is None else d.continuous_part.affine(lam, shift)
    return Distribution(tuple(new_atoms), part, d.continuous_weight, d.diagnostics)


def standardized(d: Distribution, target_var: float = 1.0) -> Distribution:
    """Shift to mean zero and rescale to variance ``target_var``."""
    var = d.variance
    if not var > 0:
        raise DomainError("cannot standardise a degenerate law")
    lam = math.sqrt(target_var / var)
    return scale_shift(d, lam, -lam * d.mean)


def gridify(part: ContinuousPart, tol: Tolerances = DEFAULT_TOLERANCES,
            knots: int = GRID_TARGET_KNOTS) -> GridDensity:
    """Resample a continuous part onto a plain piecewise-linear grid.

    The grid spans the part's support window, so window edges fall on the
    end knots and jumps there are preserved.
    """
    lo, hi = part.support(tol.tail_cutoff)
    xs = np.linspace(lo, hi, knots)
    step = (hi - lo) / (knots - 1)
    target = [part.partial_moment(k, -math.inf, math.inf, tol) for k in range(3)]
    return GridDensity.from_values(lo, step, _moment_matched(lo, step, part.pdf(xs), target))


def _interpolant_moments(x0: float, step: float, n: int) -> np.ndarray:
    """Rows k = 0, 1, 2 of the moments of the hat basis on a grid (half hats at the ends)."""
    c = x0 + step * np.arange(n)
    h = step
    w = np.empty((3, n))
    w[0] = h
    w[1] = h * c
    w[2] = h * (c * c + h * h / 6.0)
    for i, sgn in ((0, 1.0), (n - 1, -1.0)):
        w[0, i] = h / 2.0
        w[1, i] = h * (c[i] / 2.0 + sgn * h / 6.0)
        w[2, i] = h * (c[i] ** 2 / 2.0 + sgn * c[i] * h / 3.0 + h * h / 12.0)
    return w


def _moment_matched(x0: float, step: float, vals, target) -> np.ndarray:
    """Knot values tilted by a quadratic so the interpolant has the target moments.

    Linear interpolation of sampled densities shifts low moments by O(step^2);
    multiplying the samples by ``1 + b0 + b1 x + b2 x^2`` with the ``b`` chosen
    from a 3x3 solve restores mass, mean and second moment exactly.
    """
    vals = np.asarray(vals, dtype=float)
    n = vals.size
    x = x0 + step * np.arange(n)
    w = _interpolant_moments(x0, step, n)
    base = w @ vals
    basis = np.stack([vals, vals * x, vals * x * x], axis=1)
    try:
        b = np.linalg.solve(w @ basis, np.asarray(target, dtype=float) - base)
    except np.linalg.LinAlgError:
        return vals
    out = vals + basis @ b
    if np.any(out < 0) or not np.all(np.isfinite(out)):
        return vals
    return out


def _grid_mass_drift(values, step) -> float:
    v = np.asarray(values)
    return float(step * (v.sum() - 0.5 * (v[0] + v[-1])) - 1.0)


_HAT_HAT = {-1: 1 / 6, 0: 2 / 3, 1: 1 / 6}
_LEFT_HAT = {-1: 1 / 6, 0: 1 / 3}
_RIGHT_HAT = {0: 1 / 3, 1: 1 / 6}


def _lattice_convolve(pv: np.ndarray, qv: np.ndarray, h: float) -> np.ndarray:
    """Exact knot values of the convolution of two piecewise-linear densities on step h.

    Each density is a sum of hat functions whose end hats are cut in half;
    hat-hat, half-hat and half-half convolutions have closed-form lattice
    values. Returns values at indices 0 .. n + m relative to x0_p + x0_q.
    """
    n, m = pv.size - 1, qv.size - 1
    out = np.zeros(n + m + 3)  # indices -1 .. n + m + 1

    def add(kernel, coef, shift):
        for off, w in kernel.items():
            start = shift + off + 1
            out[start:start + coef.size] += w * coef

    add(_HAT_HAT, np.convolve(pv, qv), 0)
    add(_LEFT_HAT, -pv[0] * qv, 0)
    add(_RIGHT_HAT, -pv[n] * qv, n)
    add(_LEFT_HAT, -qv[0] * pv, 0)
    add(_RIGHT_HAT, -qv[m] * pv, m)
    add({-1: 1 / 6}, np.array([pv[0] * qv[0]]), 0)
    add({0: 1 / 3}, np.array([pv[0] * qv[m]]), m)
    add({0: 1 / 3}, np.array([pv[n] * qv[0]]), n)
    add({1: 1 / 6}, np.array([pv[n] * qv[m]]), n + m)
    return h * out[1:-1]


def _resampled(g: GridDensity, start: float, step: float, n: int) -> GridDensity:
    """``g`` sampled on a new lattice, tilted so its first three moments are kept."""
    xs = start + step * np.arange(n)
    vals = np.interp(xs, g.knots, np.asarray(g._v), left=0.0, right=0.0)
    target = [g.partial_moment(k, g.x0, g.end) for k in range(3)]
    return GridDensity.from_values(start, step, _moment_matched(start, step, vals, target))


def _common_lattice(p: GridDensity, q: GridDensity):
    """Re-express two plain grids on one step, or None when that would smear a jump.

    The coarser grid is refined by an integer factor, which is exact. The
    finer grid is resampled onto the slightly smaller step, anchored at the
    end where it jumps; both of its ends jumping is left to the caller.
    """
    coarse, fine = (p, q) if p.step >= q.step else (q, p)
    segs = len(coarse.values) - 1
    n = segs * max(1, math.ceil(coarse.step / fine.step - 1e-9))
    h = (coarse.end - coarse.x0) / n
    fv = np.asarray(fine._v)
    small = 1e-9 * float(np.max(fv))
    width = fine.end - fine.x0
    m = math.ceil(width / h - 1e-9)
    if fv[-1] <= small:
        start = fine.x0
    elif fv[0] <= small:
        start = fine.end - m * h
    else:
        return None
    coarse_r = _resampled(coarse, coarse.x0, h, n + 1)
    fine_r = _resampled(fine, start, h, m + 1)
    return (coarse_r, fine_r) if coarse is p else (fine_r, coarse_r)


def _convolve_plain_grids(p: GridDensity, q: GridDensity, knots: int = GRID_TARGET_KNOTS):
    """Density of the sum of two independent plain grid laws, sampled on a new grid.

    Knot values are exact. With a common step they come from the lattice
    formula; otherwise each knot is integrated over merged breakpoints, where
    the integrand is a product of two linear functions and two-point Gauss is
    exact. Returns ``(grid, drift)`` where ``drift`` is the trapezoidal mass
    error before renormalisation.
    """
    lo, hi = p.x0 + q.x0, p.end + q.end
    pv, qv = np.asarray(p._v), np.asarray(q._v)
    mp = [p.partial_moment(k, p.x0, p.end) for k in range(3)]
    mq = [q.partial_moment(k, q.x0, q.end) for k in range(3)]
    target = [mp[0] * mq[0], mp[1] * mq[0] + mp[0] * mq[1], mp[2] * mq[0] + 2 * mp[1] * mq[1] + mp[0] * mq[2]]
    if not math.isclose(p.step, q.step, rel_tol=1e-12):
        aligned = _common_lattice(p, q)
        if aligned is not None:
            p, q = aligned
            pv, qv = np.asarray(p._v), np.asarray(q._v)
            lo = p.x0 + q.x0
    if math.isclose(p.step, q.step, rel_tol=1e-12):
        vals = np.clip(_lattice_convolve(pv, qv, p.step), 0.0, None)
        drift = _grid_mass_drift(vals, p.step)
        return GridDensity.from_values(lo, p.step, _moment_matched(lo, p.step, vals, target)), drift
    step = min(p.step, q.step, (hi - lo) / (knots - 1))
    n = int(round((hi - lo) / step)) + 1
    step = (hi - lo) / (n - 1)
    xs = lo + step * np.arange(n)
    pk, qk = p.knots, q.knots
    g_nodes = np.array([-1.0, 1.0]) / math.sqrt(3.0)
    vals = np.empty(n)
    for i, x in enumerate(xs):
        a, b = max(p.x0, x - q.end), min(p.end, x - q.x0)
        if b <= a:
            vals[i] = 0.0
            continue
        bp = np.concatenate([[a, b], pk[(pk > a) & (pk < b)], (x - qk)[((x - qk) > a) & ((x - qk) < b)]])
        bp = np.unique(bp)
        half, mid = 0.5 * np.diff(bp), 0.5 * (bp[1:] + bp[:-1])
        y = mid[:, None] + half[:, None] * g_nodes[None, :]
        f = np.interp(y, pk, pv) * np.interp(x - y, qk, qv)
        vals[i] = float(np.sum(half[:, None] * f))
    drift = _grid_mass_drift(vals, step)
    return GridDensity.from_values(lo, step, _moment_matched(lo, step, vals, target)), drift


def _kernel_product(k1, k2):
    return tuple((m1 + m2, math.hypot(s1, s2), w1 * w2) for m1, s1, w1 in k1 for m2, s2, w2 in k2)


def _compact_kernel(kernel):
    merged: dict[tuple[float, float], float] = {}
    for m, s, w in kernel:
        if w > 0:
            merged[(m, s)] = merged.get((m, s), 0.0) + w
    total = sum(merged.values())
    return tuple((m, s, w / total) for (m, s), w in sorted(merged.items()))


def _convolve_parts(p: ContinuousPart, q: ContinuousPart, tol: Tolerances):
    """Continuous part of the sum of independent continuous parts; returns (part, diagnostics)."""
    diag = {}
    if p.is_windowed:
        p, diag["resampled"] = gridify(p, tol), True
    if q.is_windowed:
        q, diag["resampled"] = gridify(q, tol), True
    if isinstance(p, GaussianMixtureDensity) and isinstance(q, GaussianMixtureDensity):
        comps = _kernel_product(p.components, q.components)
        return GaussianMixtureDensity(_compact_kernel(comps)), diag
    if isinstance(p, GaussianMixtureDensity):
        p, q = q, p
    if isinstance(q, GaussianMixtureDensity):
        return replace(p, kernel=_compact_kernel(_kernel_product(p.kernel, q.components))), diag
    base, drift = _convolve_plain_grids(p.plain, q.plain)
    diag["renormalization_drift"] = drift
    kernel = _compact_kernel(_kernel_product(p.kernel, q.kernel))
    return replace(base, kernel=kernel), diag


def _shift_part(part: ContinuousPart, c: float) -> ContinuousPart:
    if isinstance(part, GridDensity) and part.window is None:
        return part.shifted(c)
    return part.affine(1.0, c)


def _combine_parts(pieces, tol: Tolerances):
    """Merge weighted continuous parts into one; returns (part, weight, diagnostics)."""
    pieces = [(w, p) for w, p in pieces if w > 0]
    if not pieces:
        return None, 0.0, {}
    total = sum(w for w, _ in pieces)
    if len(pieces) == 1:
        return pieces[0][1], total, {}
    parts = [p for _, p in pieces]
    if all(isinstance(p, GaussianMixtureDensity) and p.window is None for p in parts):
        comps = [(m, s, w * cw / total) for cw, p in pieces for m, s, w in p.components]
        return GaussianMixtureDensity(_compact_kernel(comps)), total, {}
    if all(isinstance(p, GridDensity) and p.window is None for p in parts):
        base = parts[0].plain
        if all(p.plain == base for p in parts):
            kernel = [(m, s, w * cw / total) for cw, p in pieces for m, s, w in p.kernel]
            return replace(base, kernel=_compact_kernel(kernel)), total, {}
    # heterogeneous pieces: resample their weighted sum onto one grid
    lo = min(p.support(tol.tail_cutoff)[0] for p in parts)
    hi = max(p.support(tol.tail_cutoff)[1] for p in parts)
    step = (hi - lo) / (GRID_TARGET_KNOTS - 1)
    lattice = [p for p in parts if isinstance(p, GridDensity) and p.window is None
               and p.step <= step and len(p.values) > GRID_TARGET_KNOTS // 4]
    if lattice and (hi - lo) / lattice[0].step < 4 * GRID_TARGET_KNOTS:
        # sample on a fine grid piece's own lattice, where its smoothed density is cheap
        step, x0 = lattice[0].step, lattice[0].x0
        lo = x0 + step * math.floor((lo - x0) / step)
        xs = lo + step * np.arange(math.ceil((hi - lo) / step) + 1)
    else:
        xs = np.linspace(lo, hi, GRID_TARGET_KNOTS)
    vals = sum(cw / total * p.pdf(xs) for cw, p in pieces)
    target = [sum(cw / total * p.partial_moment(k, -math.inf, math.inf, tol) for cw, p in pieces) for k in range(3)]
    vals = _moment_matched(lo, step, vals, target)
    drift = _grid_mass_drift(vals, step)
    return GridDensity.from_values(lo, step, vals), total, {"resampled": True, "renormalization_drift": drift}


def convolve(d1: Distribution, d2: Distribution, tol: Tolerances = DEFAULT_TOLERANCES) -> Distribution:
    """Law of X + Y for independent X ~ d1, Y ~ d2.

    Exact for atoms, Gaussian mixtures and grid laws convolved with either;
    two grid parts are convolved numerically onto a new grid.
    """
    new_atoms = _merge_atoms([(x + y, w * v) for x, w in d1.atoms for y, v in d2.atoms])
    pieces = []
    diag: dict = {}
    c1, c2 = d1.continuous_part, d2.continuous_part
    if c2 is not None:
        pieces += [(w * d2.continuous_weight, _shift_part(c2, x)) for x, w in d1.atoms]
    if c1 is not None:
        pieces += [(w * d1.continuous_weight, _shift_part(c1, y)) for y, w in d2.atoms]
    if c1 is not None and c2 is not None:
        part, d = _convolve_parts(c1, c2, tol)
        diag.update(d)
        pieces.append((d1.continuous_weight * d2.continuous_weight, part))
    part, cw, d = _combine_parts(pieces, tol)
    diag.update(d)
    new_atoms, cw = _renormalise(new_atoms, cw)
    out = Distribution(tuple(new_atoms), part, cw if part is not None else 0.0)
    return out.with_diagnostics(**diag) if diag else out


def _renormalise(atom_list, cw):
    total = sum(w for _, w in atom_list) + cw
    if abs(total - 1.0) <= 1e-9:
        scale = 1.0 / total
        atom_list = [(x, w * scale) for x, w in atom_list]
        cw = cw * scale
        # absorb the last rounding bit
        rest = 1.0 - (sum(w for _, w in atom_list) + cw)
        if cw > 0:
            cw += rest
        elif atom_list:
            atom_list[-1] = (atom_list[-1][0], atom_list[-1][1] + rest)
    return atom_list, cw


def mixture(parts: Sequence[tuple[float, Distribution]], tol: Tolerances = DEFAULT_TOLERANCES) -> Distribution:
    """Mixture of laws with the given weights."""
    total = sum(w for w, _ in parts)
    new_atoms = _merge_atoms([(x, w / total * v) for w, d in parts for x, v in d.atoms])
    pieces = [(w / total * d.continuous_weight, d.continuous_part) for w, d in parts
              if d.continuous_part is not None]
    part, cw, diag = _combine_parts(pieces, tol)
    new_atoms, cw = _renormalise(new_atoms, cw)
    out = Distribution(tuple(new_atoms), part, cw if part is not None else 0.0)
    return out.with_diagnostics(**diag) if diag else out
