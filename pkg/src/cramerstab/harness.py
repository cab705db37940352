"""Distribution families, suite runs and empirical-constant estimation."""

from __future__ import annotations

import itertools
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .bounds import (
    CATALOGUE,
    BoundCheckReport,
    BoundInputs,
    PreconditionError,
    _descriptor,
    evaluate_bound,
    get_spec,
)
from .distributions import (
    Distribution,
    atoms,
    gaussian_mixture,
    normal,
    scale_shift,
    standardized,
    uniform,
)
from .numerics import DEFAULT_TOLERANCES, DomainError, NumericalError, Tolerances
from .regularize import regularize

log = logging.getLogger(__name__)

FAMILY_IDS = ("two_point", "uniform", "contaminated_normal", "gaussian_mixture_random",
              "convolved_pair", "regularized_pair")
DEFAULT_PARAMS = {
    "two_point": {"a": [1.0]},
    "uniform": {"var": [1.0]},
    "contaminated_normal": {"w": [0.05, 0.1, 0.3], "tau": [2.0, 3.0]},
    "gaussian_mixture_random": {"draws": [5], "components": [3]},
    "convolved_pair": {"base": ["two_point", "uniform", "contaminated_normal", "gaussian_mixture_random"],
                       "split": [0.5]},
    "regularized_pair": {"base": ["two_point", "uniform", "contaminated_normal", "gaussian_mixture_random"],
                         "sigma": [0.25, 0.5, 1.0]},
}
DEFAULT_T_GRID = (0.5, 1.0, 2.0, 3.0, 4.0)
DEFAULT_SIGMA_GRID = (0.25, 0.5, 1.0)
LEMMA43_SIGMAS = tuple(round(0.1 * i, 10) for i in range(10))
NORMAL_SHIFT_GRID = tuple(itertools.product((-1.0, 0.5, 2.0), (0.5, 1.0, 2.0)))


class ConfigError(ValueError):
    """Invalid family or suite configuration."""


@dataclass(frozen=True)
class FamilySpec:
    family_id: str
    params: dict = field(default_factory=dict)
    rng_seed: int = 0

    def __post_init__(self):
        if self.family_id not in FAMILY_IDS:
            raise ConfigError(f"family_id: unknown family {self.family_id!r}; valid: {', '.join(FAMILY_IDS)}")
        if not (isinstance(self.rng_seed, int) and 0 <= self.rng_seed < 2**64):
            raise ConfigError("rng_seed: must be an unsigned 64-bit integer")
        allowed = set(DEFAULT_PARAMS[self.family_id])
        unknown = set(self.params) - allowed
        if unknown:
            raise ConfigError(f"params: unknown key(s) {sorted(unknown)} for {self.family_id}")
        for key, grid in self.params.items():
            if not isinstance(grid, (list, tuple)) or len(grid) == 0:
                raise ConfigError(f"params.{key}: grid must be a non-empty list")

    def grid(self, key):
        return list(self.params.get(key, DEFAULT_PARAMS[self.family_id][key]))

    def as_dict(self) -> dict:
        return {"family_id": self.family_id, "params": {k: list(v) for k, v in self.params.items()},
                "rng_seed": self.rng_seed}


@dataclass(frozen=True)
class Member:
    """One generated input: a law, an independent pair to be summed, or a pair with a smoothing level."""

    label: str
    x: Distribution
    y: Distribution | None = None
    kind: str = "law"  # "law" | "sum" | "regularized" | "metric"
    sigma: float | None = None


def standard_families(seed: int = 0) -> list[FamilySpec]:
    return [FamilySpec("two_point", {}, seed), FamilySpec("uniform", {}, seed),
            FamilySpec("contaminated_normal", {}, seed), FamilySpec("gaussian_mixture_random", {}, seed)]


def _fmt(v) -> str:
    return f"{v:g}" if isinstance(v, (int, float)) else str(v)


def _random_mixture(rng: np.random.Generator, k: int) -> Distribution:
    means = rng.standard_normal(k)
    sds = rng.uniform(0.3, 1.0, k)
    weights = rng.dirichlet(np.ones(k))
    return standardized(gaussian_mixture(list(zip(means.tolist(), sds.tolist(), weights.tolist()))))


def _laws(spec: FamilySpec) -> list[Member]:
    fid = spec.family_id
    out = []
    if fid == "two_point":
        for a in spec.grid("a"):
            if not a > 0:
                raise ConfigError("params.a: must be positive")
            out.append(Member(f"two_point(a={_fmt(a)})", atoms([(-a, 0.5), (a, 0.5)])))
    elif fid == "uniform":
        for var in spec.grid("var"):
            if not var > 0:
                raise ConfigError("params.var: must be positive")
            h = math.sqrt(3.0 * var)
            out.append(Member(f"uniform(var={_fmt(var)})", uniform(-h, h)))
    elif fid == "contaminated_normal":
        for w, tau in itertools.product(spec.grid("w"), spec.grid("tau")):
            if not (0 <= w < 1 and tau > 0):
                raise ConfigError("params: need 0 <= w < 1 and tau > 0")
            law = gaussian_mixture([(0.0, 1.0, 1 - w), (0.0, tau, w)]) if w > 0 else normal()
            out.append(Member(f"contaminated_normal(w={_fmt(w)},tau={_fmt(tau)})", standardized(law)))
    elif fid == "gaussian_mixture_random":
        rng = np.random.Generator(np.random.Philox(spec.rng_seed))
        for draws, k in itertools.product(spec.grid("draws"), spec.grid("components")):
            for i in range(int(draws)):
                out.append(Member(f"gaussian_mixture_random(k={int(k)},seed={spec.rng_seed},draw={i})",
                                  _random_mixture(rng, int(k))))
    else:
        bases = spec.grid("base")
        for b in bases:
            if b not in FAMILY_IDS[:4]:
                raise ConfigError(f"params.base: {b!r} is not a single-law family")
            out.extend(_laws(FamilySpec(b, {}, spec.rng_seed)))
    return out


def generate_family(spec: FamilySpec) -> list[Member]:
    """Deterministic list of members for a family spec."""
    laws = _laws(spec)
    if spec.family_id == "convolved_pair":
        out = []
        for m, split in itertools.product(laws, spec.grid("split")):
            if not 0 < split < 1:
                raise ConfigError("params.split: must lie in (0, 1)")
            x = scale_shift(m.x, math.sqrt(split), 0.0)
            y = scale_shift(m.x, math.sqrt(1 - split), 0.0)
            out.append(Member(f"{m.label}+iid(split={_fmt(split)})", x, y, "sum"))
        return out
    if spec.family_id == "regularized_pair":
        out = []
        for m, s in itertools.product(laws, spec.grid("sigma")):
            if not 0 < s:
                raise ConfigError("params.sigma: must be positive")
            out.append(Member(f"{m.label}+iid;sigma={_fmt(s)}", m.x, m.x, "regularized", float(s)))
        return out
    if not laws:
        raise ConfigError("family: empty grid")
    return laws


# ---------------------------------------------------------------------------
# inputs per bound
# ---------------------------------------------------------------------------

def inputs_for(bound_id: str, member: Member, t_grid=DEFAULT_T_GRID, sigma_grid=DEFAULT_SIGMA_GRID,
               tol: Tolerances = DEFAULT_TOLERANCES) -> list[BoundInputs]:
    """All bound inputs built from one member for one catalogue entry."""
    spec = get_spec(bound_id)
    ts = list(t_grid) if "t" in spec.params else [None]
    own_sigma = member.sigma is not None
    sigmas = [member.sigma] if own_sigma else (list(sigma_grid) if "sigma" in spec.params else [None])
    out = []
    if spec.arity == "law":
        if member.kind != "law":
            return []
        for t in ts:
            out.append(BoundInputs(x=member.x, t=t, label=member.label))
    elif spec.arity == "sum_pair":
        x, y = (member.x, member.x) if member.kind == "law" else (member.x, member.y)
        if member.kind == "metric":
            return []
        label = member.label + ("+iid" if member.kind == "law" else "")
        for t, s in itertools.product(ts, sigmas if "sigma" in spec.params else [None]):
            out.append(BoundInputs(x=x, y=y, t=t, sigma=s, label=label))
    elif spec.arity == "metric_pair":
        if member.kind == "law":
            x = member.x
            pairs = [(f"{member.label}|matched_normal", x, normal(x.mean, x.sd))] if x.variance > 0 else []
            for s in (sigma_grid if not own_sigma else [member.sigma]):
                pairs.append((f"{member.label}|regularized(sigma={_fmt(s)})", x, regularize(x, s, tol)))
        elif member.kind == "regularized":
            pairs = [(f"{member.label}|regularized", member.x, regularize(member.x, member.sigma, tol))]
        else:
            pairs = [(member.label, member.x, member.y)]
        sig = sigma_grid if "sigma" in spec.params else [None]
        for (label, f, g), s in itertools.product(pairs, sig):
            out.append(BoundInputs(x=f, y=g, sigma=s, label=label))
    return out


def scalar_inputs(bound_id: str) -> list[BoundInputs]:
    if bound_id == "LEMMA43":
        return [BoundInputs(sigma=s, v=v, label="lemma43_grid") for s, v in lemma43_grid()]
    if bound_id == "NORMAL_SHIFT_K":
        return [BoundInputs(a=a, sigma=s, label="normal_shift_grid") for a, s in NORMAL_SHIFT_GRID]
    return []


def lemma43_grid() -> list[tuple[float, float]]:
    """(sigma, v) with sigma in {0, .1, ..., .9}, v = sigma + .05, ... up to min(sqrt(sigma^2 + 1), 1.5)."""
    out = []
    for s in LEMMA43_SIGMAS:
        top = min(math.sqrt(s * s + 1.0), 1.5)
        k = 1
        while True:
            v = round(s + 0.05 * k, 10)
            if v > top + 1e-12:
                break
            out.append((s, v))
            k += 1
    return out


# ---------------------------------------------------------------------------
# suite
# ---------------------------------------------------------------------------

@dataclass
class SuiteReport:
    reports: list[BoundCheckReport]
    empirical_constants: dict
    violations: list[BoundCheckReport]
    config: dict
    version: str = __version__
    wall_time: float = 0.0

    def by_bound(self) -> dict[str, list[BoundCheckReport]]:
        out: dict[str, list[BoundCheckReport]] = {}
        for r in self.reports:
            out.setdefault(r.bound_id, []).append(r)
        return out

    def as_dict(self) -> dict:
        """JSON form; wall_time is left out so identical runs give identical files."""
        return {
            "version": self.version,
            "config": self.config,
            "empirical_constants": self.empirical_constants,
            "violations": [f"{r.bound_id}|{r.input_descriptor}" for r in self.violations],
            "reports": [r.as_dict() for r in self.reports],
            "counts": {
                "evaluated": sum(r.status == "evaluated" for r in self.reports),
                "skipped": sum(r.status == "skipped" for r in self.reports),
                "error": sum(r.status == "error" for r in self.reports),
            },
        }


def _skip(spec, inputs: BoundInputs, reason: str, status="skipped", descriptor=None) -> BoundCheckReport:
    return BoundCheckReport(bound_id=spec.id, input_descriptor=descriptor or inputs.label, lhs=None, rhs=None,
                            ratio=None, satisfied=None, err_budget=0.0, constant_mode=spec.constant_mode,
                            direction=spec.direction, status=status, reason=reason)


def evaluate_safely(bound_id: str, inputs: BoundInputs, tol: Tolerances) -> BoundCheckReport:
    """evaluate_bound with precondition and numerical failures turned into reports."""
    spec = get_spec(bound_id)
    desc = _descriptor(inputs, spec)
    try:
        return evaluate_bound(bound_id, inputs, tol)
    except PreconditionError as exc:
        return _skip(spec, inputs, exc.requirement, descriptor=desc)
    except (NumericalError, DomainError, FloatingPointError) as exc:
        return _skip(spec, inputs, f"{type(exc).__name__}: {exc}", status="error", descriptor=desc)


def _collect_inputs(bound_ids, members, t_grid, sigma_grid, tol, custom=()):
    jobs = []
    for bid in bound_ids:
        spec = get_spec(bid)
        if spec.arity == "scalars":
            jobs.extend((bid, inp) for inp in scalar_inputs(bid))
            continue
        for m in members:
            jobs.extend((bid, inp) for inp in inputs_for(bid, m, t_grid, sigma_grid, tol))
    for bid, inp in custom:
        jobs.append((bid, inp))
    return jobs


def _sup_ratio(reports) -> float | None:
    vals = [r.ratio for r in reports if r.status == "evaluated" and r.ratio is not None and not math.isnan(r.ratio)]
    return max(vals) if vals else None


def run_suite(bounds, family, tolerances: Tolerances = DEFAULT_TOLERANCES, t_grid=DEFAULT_T_GRID,
              sigma_grid=DEFAULT_SIGMA_GRID, custom_inputs=()) -> SuiteReport:
    """Evaluate every applicable (bound, input) combination.

    ``family`` is a FamilySpec or a list of them. Preconditions that fail
    yield skipped reports whose reason is the catalogue requirement.
    """
    start = time.perf_counter()
    families = [family] if isinstance(family, FamilySpec) else list(family)
    bound_ids = sorted(set(bounds))
    for bid in bound_ids:
        get_spec(bid)
    members = [m for f in families for m in generate_family(f)]
    if not members and not custom_inputs and not any(CATALOGUE[b].arity == "scalars" for b in bound_ids):
        raise ConfigError("family: no members to evaluate")
    jobs = _collect_inputs(bound_ids, members, t_grid, sigma_grid, tolerances, custom_inputs)
    reports = [evaluate_safely(bid, inp, tolerances) for bid, inp in jobs]
    reports.sort(key=lambda r: (r.bound_id, r.input_descriptor))
    constants = {}
    for bid in bound_ids:
        if CATALOGUE[bid].constant_mode:
            constants[bid] = _sup_ratio([r for r in reports if r.bound_id == bid])
    violations = [r for r in reports if r.satisfied is False]
    config = {
        "bounds": bound_ids,
        "families": [f.as_dict() for f in families],
        "t_grid": list(t_grid),
        "sigma_grid": list(sigma_grid),
        "tolerances": tolerances.as_dict(),
        "custom_inputs": sorted({inp.label for _, inp in custom_inputs}),
    }
    wall = time.perf_counter() - start
    log.info("suite finished: %d reports in %.1f s", len(reports), wall)
    return SuiteReport(reports, constants, violations, config, wall_time=wall)


# ---------------------------------------------------------------------------
# empirical constants
# ---------------------------------------------------------------------------

@dataclass
class ConstantEstimate:
    bound_id: str
    empirical_c: float | None
    stability: float | None
    level_constants: list
    rows: list  # (bound_id, family_member, ratio, level)


def estimate_constant(bound_id: str, family, refinement_levels: int = 2,
                      tolerances: Tolerances = DEFAULT_TOLERANCES, t_grid=DEFAULT_T_GRID,
                      sigma_grid=DEFAULT_SIGMA_GRID) -> ConstantEstimate:
    """Sup of the constant-mode ratio over a family at successively finer resolutions.

    Level ``i`` of ``L`` uses the tolerances coarsened by ``2**(L-1-i)``, so
    the last level runs at ``tolerances`` and every level doubles the
    resolution of the previous one. ``stability`` is the relative change of
    the sup between the two finest levels.
    """
    spec = get_spec(bound_id)
    if not spec.constant_mode:
        raise ConfigError(f"{bound_id} is not a constant-mode entry")
    if refinement_levels < 2:
        raise ConfigError("refinement_levels must be at least 2")
    families = [family] if isinstance(family, FamilySpec) else list(family)
    members = [m for f in families for m in generate_family(f)]
    if len(members) < 3:
        raise ConfigError(f"family too small: {len(members)} members (need at least 3)")
    level_constants, rows = [], []
    for level in range(refinement_levels):
        tol = tolerances.coarsened(2 ** (refinement_levels - 1 - level))
        jobs = _collect_inputs([bound_id], members, t_grid, sigma_grid, tol)
        reports = [evaluate_safely(bid, inp, tol) for bid, inp in jobs]
        reports.sort(key=lambda r: r.input_descriptor)
        for r in reports:
            if r.status == "evaluated":
                rows.append((bound_id, r.input_descriptor, r.ratio, level))
        level_constants.append(_sup_ratio(reports))
    fine, prev = level_constants[-1], level_constants[-2]
    if fine is None or prev is None:
        stability = None
    elif fine == prev:
        stability = 0.0
    else:
        stability = abs(fine - prev) / max(abs(fine), 1e-300)
    return ConstantEstimate(bound_id, fine, stability, level_constants, rows)
