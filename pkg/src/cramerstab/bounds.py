"""Catalogue of stability inequalities and their evaluation.

Every entry compares a left-hand side with a right-hand side computed from
one law, a pair of laws (compared, or summed as independent variables) or
plain scalars. Entries whose constant is explicit get a pass/fail verdict.
For entries stated with an unspecified absolute constant C ("constant
mode"), C is set to 1 and the report carries the ratio that C would have to
reach on the given input.

Ratio conventions
-----------------
* upper bounds ``lhs <= E + C * R``: ratio = (lhs - E) / R.
* lower bounds ``lhs >= exp(-C * A)`` (P102, T11): ratio = log(1/lhs) / A,
  the smallest C for which the inequality holds; rhs is reported at C = 1.
* P91/P92 carry the constant on the left (``c * L <= R``); ratio = L / R,
  i.e. 1/c.
* 0/0 reads as 0, x/0 with x > 0 as +inf.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from .distributions import (
    Distribution,
    big_n,
    convolve,
    normal,
    point_mass,
    quadratic_tail,
    scale_shift,
    truncate,
)
from .metrics import (
    entropic_distance,
    kolmogorov,
    levy,
    tv,
    uniform_deviation_value,
    w1,
)
from .numerics import DEFAULT_TOLERANCES, DomainError, SQRT2PI, Tolerances, std_normal_cdf
from .regularize import RegularizationParams, regularize, regularized_density_gap

EPS0 = 0.25 - float(std_normal_cdf(-1.0))
EPS1 = math.exp(-1.0 / (3.0 - 2.0 * math.sqrt(2.0)))
ERR_FACTOR = 3.0
# moment conditions are accepted within this slack
MOMENT_TOL = 1e-8


class CatalogueError(KeyError):
    """Unknown bound identifier."""

    def __init__(self, bound_id, valid):
        super().__init__(f"unknown bound id {bound_id!r}; valid ids: {', '.join(valid)}")
        self.bound_id = bound_id
        self.valid = list(valid)

    def __str__(self):
        return self.args[0]


class PreconditionError(ValueError):
    """An input does not meet a catalogue requirement; ``requirement`` is its exact string."""

    def __init__(self, requirement: str, detail: str = ""):
        super().__init__(requirement if not detail else f"{requirement} ({detail})")
        self.requirement = requirement


# ---------------------------------------------------------------------------
# scalar helpers
# ---------------------------------------------------------------------------

def m_fn(sigma: float, eps: float) -> float:
    """m(sigma, eps) = min(1/sqrt(sigma), log log(e^e / eps))."""
    if not sigma > 0:
        raise DomainError("m_fn needs sigma > 0")
    if not 0 < eps <= 1:
        raise DomainError("m_fn needs 0 < eps <= 1")
    return min(1.0 / math.sqrt(sigma), math.log(math.e + math.log(1.0 / eps)))


def r_fn(t: float) -> float:
    """R(t) = sqrt(t log(2/t)) on (0, 2]."""
    if not 0 < t <= 2:
        raise DomainError("r_fn needs 0 < t <= 2")
    return math.sqrt(t * math.log(2.0 / t))


# ---------------------------------------------------------------------------
# values with propagated error
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Est:
    """A value with an absolute error estimate, combined to first order."""

    value: float
    err: float = 0.0

    @staticmethod
    def of(x) -> "Est":
        if isinstance(x, Est):
            return x
        if hasattr(x, "err_estimate"):
            return Est(float(x.value), float(x.err_estimate))
        return Est(float(x), 0.0)

    def __add__(self, other):
        o = Est.of(other)
        return Est(self.value + o.value, self.err + o.err)

    __radd__ = __add__

    def __sub__(self, other):
        o = Est.of(other)
        return Est(self.value - o.value, self.err + o.err)

    def __rsub__(self, other):
        return Est.of(other) - self

    def __mul__(self, other):
        o = Est.of(other)
        err = _safe_mul(abs(self.value), o.err) + _safe_mul(abs(o.value), self.err)
        return Est(self.value * o.value if not (_zero_inf(self.value, o.value)) else 0.0, err)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = Est.of(other)
        if o.value == 0:
            return Est(math.inf if self.value > 0 else 0.0, math.inf if self.value > 0 else 0.0)
        value = self.value / o.value
        err = self.err / abs(o.value) + _safe_mul(abs(value), o.err / abs(o.value))
        return Est(value, err)

    def __rtruediv__(self, other):
        return Est.of(other) / self

    def __neg__(self):
        return Est(-self.value, self.err)

    def __pow__(self, p: float):
        if self.value == 0:
            return Est(0.0, self.err**p if p < 1 else 0.0)
        value = self.value**p
        return Est(value, _safe_mul(abs(p * self.value ** (p - 1)), self.err))

    def sqrt(self):
        if self.value <= 0:
            return Est(0.0, math.sqrt(self.err))
        return Est(math.sqrt(self.value), self.err / (2 * math.sqrt(self.value)))

    def log(self):
        if self.value <= 0:
            return Est(-math.inf, math.inf)
        return Est(math.log(self.value), self.err / self.value)

    def exp(self):
        v = math.exp(self.value) if self.value < 700 else math.inf
        return Est(v, _safe_mul(v, self.err))


def _zero_inf(a, b):
    return (a == 0 and math.isinf(b)) or (b == 0 and math.isinf(a))


def _safe_mul(a, b):
    if a == 0 or b == 0:
        return 0.0
    return a * b


def _ratio(num: float, den: float) -> float:
    if math.isnan(num) or math.isnan(den):
        return math.nan
    if math.isinf(num) and math.isinf(den):
        return math.nan
    if den == 0:
        if num == 0:
            return 0.0
        return math.inf if num > 0 else -math.inf
    return num / den


def _log15(x: Est) -> Est:
    return x.log() ** 1.5


# ---------------------------------------------------------------------------
# memoised metric evaluations (all pure)
# ---------------------------------------------------------------------------

@lru_cache(maxsize=8192)
def _cached(name: str, args: tuple, tol: Tolerances):
    if name == "D":
        return entropic_distance(args[0], tol)
    if name == "Delta":
        return uniform_deviation_value(args[0], tol)
    if name == "K":
        return kolmogorov(args[0], args[1], tol)
    if name == "L":
        return levy(args[0], args[1], tol)
    if name == "W1":
        return w1(args[0], args[1], tol)
    if name == "TV":
        return tv(args[0], args[1], tol)
    if name == "conv":
        return convolve(args[0], args[1], tol)
    if name == "reg":
        return regularize(args[0], RegularizationParams(args[1], allow_large=True), tol)
    if name == "gap":
        return regularized_density_gap(args[0], args[1], RegularizationParams(args[2], allow_large=True), tol)
    if name == "trunc":
        return truncate(args[0], args[1], tol)
    raise KeyError(name)


def clear_cache() -> None:
    _cached.cache_clear()


class Ctx:
    """Evaluation context: the (transformed) inputs and memoised metric helpers."""

    def __init__(self, inputs: "BoundInputs", x, y, tol: Tolerances):
        self.inputs = inputs
        self.x = x
        self.y = y
        self.tol = tol
        self.details: dict = {}

    def D(self, d) -> Est:
        v = _cached("D", (d,), self.tol)
        return Est(v.value, v.err_estimate)

    def Delta(self, d, requirement: str) -> Est:
        try:
            v = _cached("Delta", (d,), self.tol)
        except DomainError as exc:
            raise PreconditionError(requirement, str(exc)) from exc
        return Est(v.value, v.err_estimate)

    def metric(self, name, f, g) -> Est:
        return Est.of(_cached(name, (f, g), self.tol))

    def conv(self, f, g) -> Distribution:
        return _cached("conv", (f, g), self.tol)

    def reg(self, d, sigma) -> Distribution:
        return _cached("reg", (d, float(sigma)), self.tol)

    def gap(self, f, g, sigma) -> Est:
        return Est(_cached("gap", (f, g, float(sigma)), self.tol), 1e-10)

    def trunc(self, d, eps):
        return _cached("trunc", (d, float(eps)), self.tol)

    def sigma(self, requirement: str = "0<σ≤1") -> float:
        s = self.inputs.sigma
        if s is None:
            raise PreconditionError(requirement, "sigma not supplied")
        if not s > 0 or (s > 1 and not self.inputs.allow_large_sigma):
            raise PreconditionError(requirement, f"sigma={s}")
        return float(s)

    def t(self) -> float:
        if self.inputs.t is None:
            raise PreconditionError("T given", "T not supplied")
        if self.inputs.t < 0:
            raise PreconditionError("T≥0", f"T={self.inputs.t}")
        return float(self.inputs.t)

    def use_eps(self, actual: Est, requirement: str) -> Est:
        """The hypothesis level: the supplied eps if any (must dominate the data), else the data value."""
        supplied = self.inputs.eps
        if supplied is None:
            return actual
        if supplied < actual.value - actual.err:
            raise PreconditionError(requirement, f"supplied eps={supplied} is below the actual {actual.value:.6g}")
        return Est(float(supplied), 0.0)


# ---------------------------------------------------------------------------
# catalogue types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundSpec:
    id: str
    statement: str
    requires: tuple[str, ...]
    constant_mode: bool
    arity: str  # "law" | "metric_pair" | "sum_pair" | "scalars"
    evaluator: Callable[[Ctx], dict] = field(repr=False, compare=False)
    direction: str = "upper"
    params: tuple[str, ...] = ()
    standardize: str | None = None  # None | "joint" | "each" | "center" | "median"


@dataclass(frozen=True)
class BoundInputs:
    x: Distribution | None = None
    y: Distribution | None = None
    t: float | None = None
    sigma: float | None = None
    eps: float | None = None
    a: float | None = None
    v: float | None = None
    label: str = ""
    allow_large_sigma: bool = False


@dataclass
class BoundCheckReport:
    bound_id: str
    input_descriptor: str
    lhs: float | None
    rhs: float | None
    ratio: float | None
    satisfied: bool | None
    err_budget: float
    constant_mode: bool
    direction: str
    status: str = "evaluated"  # "evaluated" | "skipped" | "error"
    reason: str = ""
    details: dict = field(default_factory=dict)
    transform: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "bound_id": self.bound_id,
            "input_descriptor": self.input_descriptor,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "ratio": self.ratio,
            "satisfied": self.satisfied,
            "err_budget": self.err_budget,
            "constant_mode": self.constant_mode,
            "direction": self.direction,
            "status": self.status,
            "reason": self.reason,
            "details": self.details,
            "transform": self.transform,
        }


# ---------------------------------------------------------------------------
# requirement checks and standardisation
# ---------------------------------------------------------------------------

def _need_x(ctx: Ctx) -> Distribution:
    if ctx.x is None:
        raise PreconditionError("X given", "law X not supplied")
    return ctx.x


def _need_pair(ctx: Ctx):
    if ctx.x is None or ctx.y is None:
        raise PreconditionError("X and Y given", "a pair of laws is required")
    return ctx.x, ctx.y


def _check_mean_zero(d: Distribution, name="mean zero"):
    if abs(d.mean) > MOMENT_TOL * (1.0 + d.sd):
        raise PreconditionError(name, f"mean={d.mean:.3g}")


def _check_unit_var(d: Distribution, name="Var(X)=1"):
    if abs(d.variance - 1.0) > MOMENT_TOL:
        raise PreconditionError(name, f"Var={d.variance:.12g}")


def _check_density(d: Distribution, name="X has a density"):
    if d.has_atoms or d.continuous_part is None:
        raise PreconditionError(name)


def _standardize(spec: BoundSpec, x, y):
    """Apply the entry's normalisation; returns (x, y, transform record)."""
    mode = spec.standardize
    if mode is None or x is None:
        return x, y, {}
    if mode == "center":
        mx = x.mean
        return scale_shift(x, 1.0, -mx), y, {"kind": "center", "shift_x": -mx}
    if mode == "median":
        m = x.median()
        return (scale_shift(x, 1.0, -m), None if y is None else scale_shift(y, 1.0, m),
                {"kind": "median", "shift_x": -m, "shift_y": m,
                 "note": "median-zero form only; bounded medians are not used"})
    if y is None:
        raise PreconditionError("X and Y given", "a pair of laws is required")
    if mode == "joint":
        total = x.variance + y.variance
        if not total > 0:
            raise PreconditionError("Var(X+Y)=1", "degenerate pair")
        lam = 1.0 / math.sqrt(total)
        return (scale_shift(x, lam, -lam * x.mean), scale_shift(y, lam, -lam * y.mean),
                {"kind": "joint", "scale": lam, "shift_x": -lam * x.mean, "shift_y": -lam * y.mean})
    if mode == "each":
        if not (x.variance > 0 and y.variance > 0):
            raise PreconditionError("Var(X)=Var(Y)=1", "degenerate marginal")
        lx, ly = 1.0 / x.sd, 1.0 / y.sd
        return (scale_shift(x, lx, -lx * x.mean), scale_shift(y, ly, -ly * y.mean),
                {"kind": "each", "scale_x": lx, "scale_y": ly, "shift_x": -lx * x.mean, "shift_y": -ly * y.mean})
    raise ValueError(mode)


def _is_identity(transform: dict) -> bool:
    checks = []
    for k, v in transform.items():
        if k.startswith("scale"):
            checks.append(abs(v - 1.0) < 1e-15)
        elif k.startswith("shift"):
            checks.append(v == 0.0)
    return all(checks)


def _normal(a: float, s: float) -> Distribution:
    return point_mass(a) if s == 0 else normal(a, s)


# ---------------------------------------------------------------------------
# evaluators
# ---------------------------------------------------------------------------

def _pinsker(ctx):
    x = _need_x(ctx)
    if not x.variance > 0:
        raise PreconditionError("Var(X)>0")
    t = ctx.metric("TV", x, _normal(x.mean, x.sd))
    return {"lhs": 0.5 * t**2, "rhs": ctx.D(x)}


def _epi(ctx):
    x, y = _need_pair(ctx)
    s = ctx.conv(x, y)
    rhs = _var_times_d(ctx, x) + _var_times_d(ctx, y)
    return {"lhs": ctx.D(s), "rhs": rhs}


def _var_times_d(ctx, d) -> Est:
    if d.variance == 0:
        return Est(0.0)
    return Est(d.variance) * ctx.D(d)


def _chain(ctx):
    f, g = _need_pair(ctx)
    L, K, T = ctx.metric("L", f, g), ctx.metric("K", f, g), ctx.metric("TV", f, g)
    links = [("0<=L", Est(0.0), L), ("L<=K", L, K), ("K<=TV/2", K, 0.5 * T), ("TV/2<=1", 0.5 * T, Est(1.0))]
    worst = max(links[1:], key=lambda l: _ratio(l[1].value, l[2].value))
    ok = all(lo.value <= hi.value + ERR_FACTOR * (lo.err + hi.err) for _, lo, hi in links)
    ctx.details.update({"levy": L.value, "kolmogorov": K.value, "tv": T.value, "worst_link": worst[0]})
    return {"lhs": worst[1], "rhs": worst[2], "satisfied": ok,
            "err": sum(e.err for e in (L, K, T))}


def _moment_b(f, g) -> float:
    return math.sqrt(max(f.moments().second_moment, g.moments().second_moment))


def _a11(ctx):
    f, g = _need_pair(ctx)
    return {"lhs": ctx.metric("L", f, g), "rhs": ctx.metric("W1", f, g).sqrt()}


def _a12a(ctx):
    f, g = _need_pair(ctx)
    B = _moment_b(f, g)
    L = ctx.metric("L", f, g)
    ctx.details["B"] = B
    return {"lhs": ctx.metric("W1", f, g), "rhs": 2 * L + 4 * B * L.sqrt()}


def _a12b(ctx):
    f, g = _need_pair(ctx)
    B = _moment_b(f, g)
    ctx.details["B"] = B
    return {"lhs": ctx.metric("W1", f, g), "rhs": 4 * B * ctx.metric("K", f, g).sqrt()}


def _reg_tv(ctx, f, g, s):
    return ctx.metric("TV", ctx.reg(f, s), ctx.reg(g, s))


def _a21a(ctx):
    f, g = _need_pair(ctx)
    s = ctx.sigma()
    return {"lhs": ctx.gap(f, g, s), "rhs": ctx.metric("K", f, g) / s}


def _a21b(ctx):
    f, g = _need_pair(ctx)
    s = ctx.sigma()
    return {"lhs": _reg_tv(ctx, f, g, s), "rhs": ctx.metric("W1", f, g) / s}


def _a22a(ctx):
    f, g = _need_pair(ctx)
    s = ctx.sigma()
    B = _moment_b(f, g)
    L = ctx.metric("L", f, g)
    ctx.details["B"] = B
    return {"lhs": _reg_tv(ctx, f, g, s), "rhs": (2.0 / s) * (L + 2 * B * L.sqrt())}


def _a22b(ctx):
    f, g = _need_pair(ctx)
    s = ctx.sigma()
    B = _moment_b(f, g)
    ctx.details["B"] = B
    return {"lhs": _reg_tv(ctx, f, g, s), "rhs": (4 * B / s) * ctx.metric("K", f, g).sqrt()}


def _a23(ctx):
    f, g = _need_pair(ctx)
    s = ctx.sigma()
    return {"lhs": ctx.gap(f, g, s), "rhs": ctx.metric("L", f, g) * ((1.0 + 1.0 / (2 * s)) / s)}


def _a31(ctx):
    x = _need_x(ctx)
    _check_density(x, "X has a bounded density")
    delta = ctx.Delta(x, "X has a bounded density")
    return {"lhs": ctx.D(x), "rhs": (1 + x.sd * SQRT2PI * delta).log() + 0.5}


def _a32(ctx):
    x = _need_x(ctx)
    _check_mean_zero(x)
    _check_unit_var(x)
    _check_density(x, "X has a bounded density")
    T = ctx.t()
    delta = ctx.Delta(x, "X has a bounded density")
    inner = (1 + delta * SQRT2PI * math.exp(T * T / 2)).log()
    rhs = delta * (SQRT2PI + 2 * T + 2 * T * inner) + 0.5 * Est(quadratic_tail(x, T, ctx.tol), 1e-10)
    return {"lhs": ctx.D(x), "rhs": rhs}


def _sum_kolmogorov_eps(ctx, x, y, target=None, requirement="ε<1") -> Est:
    target = normal() if target is None else target
    eps = ctx.use_eps(ctx.metric("K", ctx.conv(x, y), target), requirement)
    ctx.details["eps"] = eps.value
    if not eps.value < 1:
        raise PreconditionError(requirement, f"eps={eps.value:.6g}")
    return eps


def _sum_levy_eps(ctx, x, y, requirement="ε<1") -> Est:
    eps = ctx.use_eps(ctx.metric("L", ctx.conv(x, y), normal()), requirement)
    ctx.details["eps"] = eps.value
    if not eps.value < 1:
        raise PreconditionError(requirement, f"eps={eps.value:.6g}")
    return eps


def _inv_sqrt_log(eps: Est) -> Est:
    if eps.value == 0:
        return Est(0.0)
    return 1 / (1 / eps).log().sqrt()


def _lemma32(ctx):
    x, y = _need_pair(ctx)
    eps = _sum_kolmogorov_eps(ctx, x, y)
    if eps.value > EPS0:
        raise PreconditionError("ε≤ε0", f"eps={eps.value:.6g}")
    mx, my = x.median(ctx.tol), y.median(ctx.tol)
    ctx.details.update({"median_x": mx, "median_y": my})
    return {"lhs": Est(max(abs(mx), abs(my)), ctx.tol.root_tol), "rhs": Est(2.0)}


def _lemma43(ctx):
    s, v = ctx.inputs.sigma, ctx.inputs.v
    if s is None or v is None or not (v >= s >= 0):
        raise PreconditionError("v≥σ≥0", f"sigma={s}, v={v}")
    gap = v * v - s * s
    if gap > 1:
        raise PreconditionError("v²−σ²≤1", f"v²−σ²={gap}")
    L = ctx.metric("L", _normal(0.0, s), _normal(0.0, v))
    rhs = 0.0 if gap == 0 else gap * math.log(2.0 / gap)
    return {"lhs": L**2, "rhs": Est(rhs)}


def _normal_shift(ctx):
    a, s = ctx.inputs.a, ctx.inputs.sigma
    if a is None or s is None or not s > 0:
        raise PreconditionError("σ>0", f"a={a}, sigma={s}")
    K = ctx.metric("K", normal(a, s), normal(0.0, s))
    return {"lhs": K, "rhs": Est(abs(a) / (s * SQRT2PI))}


def _p61(ctx):
    x = _need_x(ctx)
    _check_mean_zero(x)
    _check_unit_var(x)
    T = ctx.t()
    return {"lhs": Est(quadratic_tail(x, T, ctx.tol), 1e-10), "rhs": 4 * ctx.D(x) + 4 * math.exp(-T * T / 4)}


def _p62(ctx):
    x = _need_x(ctx)
    _check_mean_zero(x)
    _check_unit_var(x)
    T = ctx.t()
    if T < 2:
        raise PreconditionError("T≥2", f"T={T}")
    return {"lhs": Est(quadratic_tail(x, T, ctx.tol), 1e-10), "rhs": T * T * ctx.D(x) + 6 * T * math.exp(-T * T / 2)}


def _ent_cheb(ctx):
    x = _need_x(ctx)
    _check_mean_zero(x)
    _check_unit_var(x)
    D = ctx.D(x)
    if not D.value < 1:
        raise PreconditionError("D(X)<1", f"D={D.value:.6g}")
    if D.value == 0:
        return {"lhs": Est(0.0), "rhs": Est(0.0)}
    logi = (1 / D).log()
    t = 2 * math.sqrt(logi.value)
    prob = float(x.cdf(np.array([-t]))[0] + 1.0 - x.cdf_left(np.array([t]))[0])
    ctx.details["threshold"] = t
    return {"lhs": Est(prob, 1e-12), "rhs": 2 * D / logi}


def _p71(ctx):
    x, y = _need_pair(ctx)
    _check_mean_zero(x)
    _check_mean_zero(y)
    T = ctx.t()
    s = ctx.conv(x, y)
    B2 = s.variance
    if not B2 > 0:
        raise PreconditionError("Var(X+Y)=B²>0")
    ctx.details["B2"] = B2
    lhs = Est(quadratic_tail(x, T, ctx.tol) / B2, 1e-10)
    return {"lhs": lhs, "rhs": 16 * ctx.D(s) + 16 * math.exp(-T * T / (8 * B2))}


# -- constant mode ------------------------------------------------------------

def _t21(ctx):
    x, y = _need_pair(ctx)
    eps = _sum_kolmogorov_eps(ctx, x, y, target=normal(0.0, math.sqrt(2.0)))
    rc = _inv_sqrt_log(eps)
    sides = [(ctx.metric("K", d, normal()), rc) for d in (x, y)]
    return _max_ratio(ctx, sides)


def _max_ratio(ctx, sides, explicit=None):
    """Keep the side with the larger constant-mode ratio."""
    explicit = explicit or [Est(0.0)] * len(sides)
    ratios = [_ratio(l.value - e.value, r.value) for (l, r), e in zip(sides, explicit)]
    ctx.details["side_ratios"] = ratios
    i = int(np.nanargmax(ratios)) if not all(math.isnan(r) for r in ratios) else 0
    ctx.details["side"] = "XY"[i] if len(sides) == 2 else i
    return {"lhs": sides[i][0], "rhs_c": sides[i][1], "rhs_explicit": explicit[i]}


def _t22(ctx):
    x, y = _need_pair(ctx)
    eps = _sum_kolmogorov_eps(ctx, x, y)
    tr = ctx.trunc(x, eps.value if eps.value > 0 else 1e-300)
    s1 = math.sqrt(tr.sigma1_sq)
    tr2 = ctx.trunc(y, eps.value if eps.value > 0 else 1e-300)
    if not (s1 > 0 and tr2.sigma1_sq > 0):
        raise PreconditionError("σ1,σ2>0")
    lhs = ctx.metric("K", x, normal(tr.a1, s1))
    rc = Est(m_fn(s1, eps.value) / s1) * _inv_sqrt_log(eps) if eps.value > 0 else Est(0.0)
    ctx.details.update({"a1": tr.a1, "sigma1": s1, "N": tr.big_n})
    return {"lhs": lhs, "rhs_c": rc}


def _t23(ctx):
    x, y = _need_pair(ctx)
    eps = _sum_kolmogorov_eps(ctx, x, y)
    sides = []
    for d in (x, y):
        v = d.sd
        if not v > 0:
            raise PreconditionError("v1,v2>0")
        rc = Est(m_fn(v, eps.value) / v) * _inv_sqrt_log(eps) if eps.value > 0 else Est(0.0)
        sides.append((ctx.metric("K", d, normal(0.0, v)), rc))
    return _max_ratio(ctx, sides)


def _lemma31(ctx):
    x, y = _need_pair(ctx)
    eps = _sum_kolmogorov_eps(ctx, x, y)
    if eps.value == 0:
        raise PreconditionError("ε>0", "the sum is exactly normal")
    t1, t2 = ctx.trunc(x, eps.value), ctx.trunc(y, eps.value)
    lhs = Est(1.0 - (t1.sigma1_sq + t2.sigma1_sq), 20 * ctx.tol.quad_abs_tol)
    N = t1.big_n
    ok = lhs.value >= -ERR_FACTOR * lhs.err
    ctx.details.update({"N": N, "sigma1_sq": t1.sigma1_sq, "sigma2_sq": t2.sigma1_sq,
                        "explicit": "0 <= 1 - (sigma1^2 + sigma2^2)"})
    return {"lhs": lhs, "rhs_c": N * N * eps.sqrt(), "satisfied": ok}


def _lemma33(ctx):
    x, y = _need_pair(ctx)
    eps = _sum_kolmogorov_eps(ctx, x, y)
    if eps.value == 0:
        raise PreconditionError("ε>0", "the sum is exactly normal")
    tx, ty = ctx.trunc(x, eps.value), ctx.trunc(y, eps.value)
    kx = ctx.metric("K", tx.truncated, x)
    ky = ctx.metric("K", ty.truncated, y)
    ks = ctx.metric("K", ctx.conv(tx.truncated, ty.truncated), normal())
    root = eps.sqrt()
    sides = [(kx, root), (ky, root), (ks, root)]
    out = _max_ratio(ctx, sides)
    ctx.details.update({"k_trunc_x": kx.value, "k_trunc_y": ky.value, "k_trunc_sum": ks.value,
                        "explicit_threshold": min(EPS0, EPS1)})
    if eps.value < min(EPS0, EPS1):
        checks = [(kx, 6 * root), (ky, 6 * root), (ks, 13 * root)]
        out["satisfied"] = all(a.value <= b.value + ERR_FACTOR * (a.err + b.err) for a, b in checks)
    else:
        ctx.details["explicit_note"] = "explicit 6/13 constants need eps < min(eps0, eps1); ratio only"
    return out


def _levy_normal_rc(eps: Est) -> Est:
    if eps.value == 0:
        return Est(0.0)
    return (4 / eps).log().log() ** 2 * _inv_sqrt_log(eps)


def _t44(ctx):
    x, y = _need_pair(ctx)
    eps = _sum_levy_eps(ctx, x, y)
    if eps.value == 0:
        raise PreconditionError("ε>0", "the sum is exactly normal")
    N = big_n(eps.value)
    delta = quadratic_tail(x, N, ctx.tol)
    if delta > 2:
        raise PreconditionError("δ_X(N)≤2", f"delta={delta:.6g}")
    explicit = Est(r_fn(delta) if delta > 0 else 0.0, 1e-9)
    ctx.details.update({"N": N, "delta_N": delta})
    return {"lhs": ctx.metric("L", x, normal(0.0, x.sd)), "rhs_c": _levy_normal_rc(eps), "rhs_explicit": explicit}


def _lemma42(ctx):
    x, y = _need_pair(ctx)
    eps = _sum_levy_eps(ctx, x, y)
    if eps.value == 0:
        raise PreconditionError("ε>0", "the sum is exactly normal")
    tr = ctx.trunc(x, eps.value)
    s1 = math.sqrt(tr.sigma1_sq)
    explicit = ctx.metric("L", _normal(0.0, s1), normal(0.0, x.sd))
    ctx.details.update({"sigma1": s1, "N": tr.big_n})
    return {"lhs": ctx.metric("L", x, normal(0.0, x.sd)), "rhs_c": _levy_normal_rc(eps), "rhs_explicit": explicit}


def _t41(ctx):
    x, y = _need_pair(ctx)
    eps = _sum_kolmogorov_eps(ctx, x, y)
    if eps.value == 0:
        raise PreconditionError("ε>0", "the sum is exactly normal")
    tr = ctx.trunc(x, eps.value)
    s1 = math.sqrt(tr.sigma1_sq)
    ctx.details.update({"a1": tr.a1, "sigma1": s1, "N": tr.big_n})
    return {"lhs": ctx.metric("L", x, _normal(tr.a1, s1)), "rhs_c": _levy_normal_rc(eps)}


def _t51(ctx):
    x, y = _need_pair(ctx)
    s = ctx.sigma()
    xs, ys = ctx.reg(x, s), ctx.reg(y, s)
    eps = ctx.use_eps(0.5 * ctx.metric("TV", ctx.conv(xs, ys), normal(0.0, math.sqrt(1 + 2 * s * s))), "ε<1")
    ctx.details["eps"] = eps.value
    if not 0 < eps.value < 1:
        raise PreconditionError("0<ε<1", f"eps={eps.value:.6g}")
    rc = (1 / (1 / eps).log()) ** 0.25 / s
    sides = [(ctx.metric("TV", d_s, normal(0.0, math.sqrt(d.variance + s * s))), rc)
             for d, d_s in ((x, xs), (y, ys))]
    return _max_ratio(ctx, sides)


def _entropic_eps(ctx, s_law) -> Est:
    eps = ctx.use_eps(0.5 * ctx.D(s_law), "D(X+Y)≤2ε<2")
    ctx.details["eps"] = eps.value
    if not 0 < eps.value < 1:
        raise PreconditionError("D(X+Y)≤2ε<2", f"eps={eps.value:.6g}")
    return eps


def _p81(ctx):
    x, y = _need_pair(ctx)
    _check_density(x)
    eps = _entropic_eps(ctx, ctx.conv(x, y))
    return {"lhs": ctx.metric("L", x, normal(0.0, x.sd)), "rhs_c": _levy_normal_rc(eps)}


def _delta_term(delta: Est, scale: float) -> Est:
    """Delta log^{3/2}(2 + 1/(scale Delta)), extended by 0 at Delta = 0."""
    if delta.value <= 0:
        return Est(0.0, delta.err)
    return delta * _log15(2 + 1 / (scale * delta))


def _p91(ctx):
    x, y = _need_pair(ctx)
    _check_density(x, "X has a bounded density")
    delta = ctx.Delta(x, "X has a bounded density")
    rhs = ctx.D(ctx.conv(x, y)) + _delta_term(delta, x.sd)
    return {"lhs": _var_times_d(ctx, x), "rhs_c": rhs}


def _p92(ctx):
    x, y = _need_pair(ctx)
    _check_density(x, "X and Y have densities")
    _check_density(y, "X and Y have densities")
    dx = ctx.Delta(x, "X and Y have densities")
    dy = ctx.Delta(y, "X and Y have densities")
    rhs = ctx.D(ctx.conv(x, y)) + _delta_term(dx, x.sd) + _delta_term(dy, y.sd)
    return {"lhs": _var_times_d(ctx, x) + _var_times_d(ctx, y), "rhs_c": rhs}


def _p93(ctx):
    x, y = _need_pair(ctx)
    _check_density(x)
    delta = ctx.Delta(x, "X has a density")
    return {"lhs": ctx.D(x), "rhs_explicit": 16 * ctx.D(ctx.conv(x, y)), "rhs_c": _delta_term(delta, 1.0)}


def _p101(ctx):
    x, y = _need_pair(ctx)
    s = ctx.sigma()
    xs, ys = ctx.reg(x, s), ctx.reg(y, s)
    eps = _entropic_eps(ctx, ctx.conv(xs, ys))
    u = s * (1 / eps).log().sqrt()
    return {"lhs": ctx.D(xs) + ctx.D(ys), "rhs_c": _log15(2 + u) / u}


def _p102(ctx):
    x, y = _need_pair(ctx)
    s = ctx.sigma()
    xs, ys = ctx.reg(x, s), ctx.reg(y, s)
    D = ctx.D(xs) + ctx.D(ys)
    ctx.details["D"] = D.value
    if D.value <= 0:
        return {"lhs": ctx.D(ctx.conv(xs, ys)), "exponent": Est(math.inf)}
    A = (2 + 1 / D).log() ** 3 / (s * s * D * D)
    return {"lhs": ctx.D(ctx.conv(xs, ys)), "exponent": A}


def _p111(ctx):
    x, y = _need_pair(ctx)
    s = ctx.sigma()
    xs, ys = ctx.reg(x, s), ctx.reg(y, s)
    eps = _entropic_eps(ctx, ctx.conv(xs, ys))
    ll = (4 / eps).log().log() ** 2
    root = (1 / eps).log().sqrt()
    rc = ll / (s * s * root) * _log15(2 + s * root / ll)
    return {"lhs": _var_times_d(ctx, xs) + _var_times_d(ctx, ys), "rhs_c": rc}


def _t11(ctx):
    x, y = _need_pair(ctx)
    s = ctx.sigma()
    xs, ys = ctx.reg(x, s), ctx.reg(y, s)
    D = (s * s) * (_var_times_d(ctx, xs) + _var_times_d(ctx, ys))
    ctx.details["D"] = D.value
    lhs = ctx.D(ctx.conv(xs, ys))
    if D.value <= 0:
        return {"lhs": lhs, "exponent": Est(math.inf)}
    A = (2 + 1 / D).log() ** 7 / (D * D)
    return {"lhs": lhs, "exponent": A}


# ---------------------------------------------------------------------------
# the catalogue
# ---------------------------------------------------------------------------

def _spec(id, statement, requires, constant_mode, arity, evaluator, **kw):
    return BoundSpec(id, statement, tuple(requires), constant_mode, arity, evaluator, **kw)


_SUM_STD = ("mean zero", "Var(X+Y)=1")

CATALOGUE: dict[str, BoundSpec] = {s.id: s for s in [
    _spec("PINSKER", "1/2 ||F - Phi_{a,s}||_TV^2 <= D(X)", ["Var(X)>0"], False, "law", _pinsker),
    _spec("EPI_UPPER", "D(X+Y) <= Var(X) D(X) + Var(Y) D(Y)", ["Var(X+Y)=1"], False, "sum_pair", _epi,
          standardize="joint"),
    _spec("CHAIN", "0 <= L(F,G) <= ||F-G|| <= 1/2 ||F-G||_TV <= 1", [], False, "metric_pair", _chain),
    _spec("A11", "L(F,G) <= W1(F,G)^{1/2}", [], False, "metric_pair", _a11),
    _spec("A12a", "W1(F,G) <= 2 L + 4 B L^{1/2}", ["second moments ≤ B²"], False, "metric_pair", _a12a),
    _spec("A12b", "W1(F,G) <= 4 B ||F-G||^{1/2}", ["second moments ≤ B²"], False, "metric_pair", _a12b),
    _spec("A21a", "sup |p_s - q_s| <= ||F-G|| / s", ["0<σ≤1"], False, "metric_pair", _a21a, params=("sigma",)),
    _spec("A21b", "||F_s - G_s||_TV <= W1(F,G) / s", ["0<σ≤1"], False, "metric_pair", _a21b, params=("sigma",)),
    _spec("A22a", "||F_s - G_s||_TV <= (2/s) [L + 2 B L^{1/2}]", ["second moments ≤ B²", "0<σ≤1"], False,
          "metric_pair", _a22a, params=("sigma",)),
    _spec("A22b", "||F_s - G_s||_TV <= (4B/s) ||F-G||^{1/2}", ["second moments ≤ B²", "0<σ≤1"], False,
          "metric_pair", _a22b, params=("sigma",)),
    _spec("A23", "sup |p_s - q_s| <= (L/s)(1 + 1/(2s))", ["0<σ≤1"], False, "metric_pair", _a23,
          params=("sigma",)),
    _spec("A31", "D(X) <= log(1 + v Delta(X) sqrt(2 pi)) + 1/2", ["mean zero", "X has a bounded density"], False,
          "law", _a31, standardize="center"),
    _spec("A32", "D(X) <= Delta [sqrt(2 pi) + 2T + 2T log(1 + Delta sqrt(2 pi) e^{T^2/2})] + delta_X(T)/2",
          ["mean zero", "Var(X)=1", "X has a bounded density", "T≥0"], False, "law", _a32, params=("t",)),
    _spec("LEMMA32", "|m(X)| <= 2 and |m(Y)| <= 2", _SUM_STD + ("ε≤ε0",), False, "sum_pair", _lemma32,
          standardize="joint"),
    _spec("LEMMA43", "L(Phi_s, Phi_v)^2 <= (v^2 - s^2) log(2/(v^2 - s^2))", ["v≥σ≥0", "v²−σ²≤1"], False,
          "scalars", _lemma43, params=("sigma", "v")),
    _spec("NORMAL_SHIFT_K", "||Phi_{a,s} - Phi_{0,s}|| <= |a| / (s sqrt(2 pi))", ["σ>0"], False, "scalars",
          _normal_shift, params=("a", "sigma")),
    _spec("P61", "delta_X(T) <= 4 D(X) + 4 e^{-T^2/4}", ["mean zero", "Var(X)=1", "T≥0"], False, "law", _p61,
          params=("t",)),
    _spec("P62", "delta_X(T) <= T^2 D(X) + 6T e^{-T^2/2}", ["mean zero", "Var(X)=1", "T≥2"], False, "law", _p62,
          params=("t",)),
    _spec("ENT_CHEB", "P{|X| >= 2 sqrt(log(1/D))} <= 2D / log(1/D)", ["mean zero", "Var(X)=1", "D(X)<1"], False,
          "law", _ent_cheb),
    _spec("P71", "delta_X(T)/B^2 <= 16 D(X+Y) + 16 e^{-T^2/(8B^2)}", ["mean zero", "Var(X+Y)=B²>0", "T≥0"], False,
          "sum_pair", _p71, params=("t",)),
    # constant mode
    _spec("T21", "||F - Phi|| <= C / sqrt(log(1/eps)),  eps = ||F*G - Phi*Phi||",
          ["Var(X)=Var(Y)=1", "mean zero", "ε<1"], True, "sum_pair", _t21, standardize="each"),
    _spec("T22", "||F - Phi_{a1,s1}|| <= C m(s1,eps) / (s1 sqrt(log(1/eps))),  eps = ||F*G - Phi||",
          ["median zero", "ε<1", "σ1,σ2>0"], True, "sum_pair", _t22, standardize="median"),
    _spec("T23", "||F - Phi_{v1}|| <= C m(v1,eps) / (v1 sqrt(log(1/eps))),  eps = ||F*G - Phi||",
          _SUM_STD + ("ε<1", "v1,v2>0"), True, "sum_pair", _t23, standardize="joint"),
    _spec("LEMMA31", "0 <= 1 - (s1^2 + s2^2) <= C N^2 sqrt(eps)", _SUM_STD + ("ε<1", "ε>0"), True, "sum_pair",
          _lemma31, standardize="joint"),
    _spec("LEMMA33", "||F* - F||, ||G* - G||, ||F* * G* - Phi|| <= C sqrt(eps)  (6, 6, 13 for small eps)",
          _SUM_STD + ("ε<1", "ε>0"), True, "sum_pair", _lemma33, standardize="joint"),
    _spec("T41", "L(F, Phi_{a1,s1}) <= C (loglog(4/eps))^2 / sqrt(log(1/eps)),  eps = ||F*G - Phi||",
          ["median zero", "ε<1", "ε>0"], True, "sum_pair", _t41, standardize="median"),
    _spec("LEMMA42", "L(F, Phi_{v1}) <= C (loglog(4/eps))^2 / sqrt(log(1/eps)) + L(Phi_{s1}, Phi_{v1})",
          _SUM_STD + ("ε<1", "ε>0"), True, "sum_pair", _lemma42, standardize="joint"),
    _spec("T44", "L(F, Phi_{v1}) <= C (loglog(4/eps))^2 / sqrt(log(1/eps)) + R(delta_X(N))",
          _SUM_STD + ("ε<1", "ε>0", "δ_X(N)≤2"), True, "sum_pair", _t44, standardize="joint"),
    _spec("T51", "||F_s - N(0, v1^2 + s^2)||_TV <= (C/s) (1/log(1/eps))^{1/4},  eps = TV(F_s*G_s, N(0,1+2s^2))/2",
          _SUM_STD + ("0<σ≤1", "0<ε<1"), True, "sum_pair", _t51, standardize="joint", params=("sigma",)),
    _spec("P81", "L(F, Phi_{v1}) <= C (loglog(4/eps))^2 / sqrt(log(1/eps)),  D(X+Y) <= 2 eps",
          _SUM_STD + ("X has a density", "D(X+Y)≤2ε<2"), True, "sum_pair", _p81, standardize="joint"),
    _spec("P91", "c Var(X) D(X) <= D(X+Y) + Delta(X) log^{3/2}(2 + 1/(sqrt(Var X) Delta(X)))",
          _SUM_STD + ("X has a bounded density",), True, "sum_pair", _p91, standardize="joint"),
    _spec("P92", "c (v1^2 D(X) + v2^2 D(Y)) <= D(X+Y) + sum Delta log^{3/2}(2 + 1/(v Delta))",
          _SUM_STD + ("X and Y have densities",), True, "sum_pair", _p92, standardize="joint"),
    _spec("P93", "D(X) <= 16 D(X+Y) + C Delta(X) log^{3/2}(2 + 1/Delta(X))",
          ["mean zero", "Var(X)=Var(Y)=1", "X has a density"], True, "sum_pair", _p93, standardize="each"),
    _spec("P101", "D(X_s) + D(Y_s) <= C log^{3/2}(2 + s sqrt(log(1/eps))) / (s sqrt(log(1/eps)))",
          ["mean zero", "Var(X)=Var(Y)=1", "0<σ≤1", "D(X+Y)≤2ε<2"], True, "sum_pair", _p101,
          standardize="each", params=("sigma",)),
    _spec("P102", "D(X_s + Y_s) >= exp(-C log^3(2 + 1/D) / (s^2 D^2)),  D = D(X_s) + D(Y_s)",
          ["Var(X)=Var(Y)=1", "0<σ≤1"], True, "sum_pair", _p102, standardize="each", params=("sigma",),
          direction="lower"),
    _spec("P111", "Var(X_s) D(X_s) + Var(Y_s) D(Y_s) <= C (loglog(4/eps))^2 / (s^2 sqrt(log(1/eps)))"
          " log^{3/2}(2 + s sqrt(log(1/eps)) / (loglog(4/eps))^2)",
          ["Var(X+Y)=1", "0<σ≤1", "D(X+Y)≤2ε<2"], True, "sum_pair", _p111, standardize="joint",
          params=("sigma",)),
    _spec("T11", "D(X_s + Y_s) >= exp(-c log^7(2 + 1/D) / D^2),  D = s^2 (Var(X_s) D(X_s) + Var(Y_s) D(Y_s))",
          ["Var(X+Y)=1", "0<σ≤1"], True, "sum_pair", _t11, standardize="joint", params=("sigma",),
          direction="lower"),
]}

CONSTANT_MODE_IDS = tuple(sorted(k for k, s in CATALOGUE.items() if s.constant_mode))
EXPLICIT_IDS = tuple(sorted(k for k, s in CATALOGUE.items() if not s.constant_mode))


def get_spec(bound_id: str) -> BoundSpec:
    try:
        return CATALOGUE[bound_id]
    except KeyError:
        raise CatalogueError(bound_id, sorted(CATALOGUE)) from None


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def _descriptor(inputs: BoundInputs, spec: BoundSpec) -> str:
    parts = [inputs.label or "input"]
    for name in ("t", "sigma", "a", "v", "eps"):
        value = getattr(inputs, name)
        if value is not None and (name in spec.params or name == "eps"):
            parts.append(f"{'T' if name == 't' else name}={value:g}")
    return ";".join(parts)


def evaluate_bound(bound_id: str, inputs: BoundInputs, tol: Tolerances = DEFAULT_TOLERANCES) -> BoundCheckReport:
    """Evaluate one catalogue entry on one input.

    Raises
    ------
    CatalogueError
        Unknown ``bound_id``.
    PreconditionError
        The input misses a requirement; ``.requirement`` is the catalogue string.
    """
    spec = get_spec(bound_id)
    x, y, transform = _standardize(spec, inputs.x, inputs.y)
    if transform and _is_identity(transform):
        transform = {}
    ctx = Ctx(inputs, x, y, tol)
    out = spec.evaluator(ctx)
    lhs: Est = Est.of(out["lhs"])
    details = dict(ctx.details)
    if inputs.sigma is not None and inputs.sigma > 1:
        details["large_sigma_override"] = True
    report = dict(bound_id=spec.id, input_descriptor=_descriptor(inputs, spec), constant_mode=spec.constant_mode,
                  direction=spec.direction, details=details, transform=transform)

    if spec.direction == "lower":
        A: Est = out["exponent"]
        rhs = Est(math.exp(-A.value) if math.isfinite(A.value) else 0.0, 0.0)
        if lhs.value <= 0:
            ratio = math.inf if A.value > 0 else math.nan
        elif math.isinf(A.value):
            ratio = 0.0
        else:
            ratio = _ratio(math.log(1.0 / lhs.value), A.value)
        err = ERR_FACTOR * (lhs.err + _safe_mul(rhs.value, A.err))
        return BoundCheckReport(lhs=lhs.value, rhs=rhs.value, ratio=ratio, satisfied=out.get("satisfied"),
                                err_budget=err, **report)

    if spec.constant_mode:
        explicit = Est.of(out.get("rhs_explicit", 0.0))
        rc = Est.of(out["rhs_c"])
        rhs = explicit + rc
        ratio = _ratio(lhs.value - explicit.value, rc.value)
        err = ERR_FACTOR * (lhs.err + rhs.err)
        return BoundCheckReport(lhs=lhs.value, rhs=rhs.value, ratio=ratio, satisfied=out.get("satisfied"),
                                err_budget=err, **report)

    rhs = Est.of(out["rhs"])
    err = ERR_FACTOR * (out.get("err", lhs.err + rhs.err))
    satisfied = out.get("satisfied")
    if satisfied is None:
        satisfied = bool(lhs.value <= rhs.value + err)
    return BoundCheckReport(lhs=lhs.value, rhs=rhs.value, ratio=_ratio(lhs.value, rhs.value),
                            satisfied=satisfied, err_budget=err, **report)
