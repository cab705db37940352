"""JSON encoding of distributions and reports.

Distribution files look like::

    {"atoms": [[x, w], ...],
     "grid": {"x0": .., "step": .., "values": [..], "kernel": [[m, s, w], ..]},
     "gaussian_mixture": [[mean, sd, w], ...],
     "continuous_weight": ..,
     "window": [lo, hi]}

At most one of ``grid`` / ``gaussian_mixture`` may be present. ``kernel``
and ``window`` are optional extensions; ``continuous_weight`` defaults to
one minus the atom mass.
"""

from __future__ import annotations

import json
import math
from typing import Any

from .distributions import Distribution, GaussianMixtureDensity, GridDensity
from .numerics import DomainError

DIST_KEYS = {"atoms", "grid", "gaussian_mixture", "continuous_weight", "window"}
GRID_KEYS = {"x0", "step", "values", "kernel"}


class InputError(ValueError):
    """Malformed input file; the message names the offending field."""


def _number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InputError(f"{where}: expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise InputError(f"{where}: must be finite")
    return value


def _rows(value, width: int, where: str) -> list[tuple[float, ...]]:
    if not isinstance(value, list):
        raise InputError(f"{where}: expected a list")
    out = []
    for i, row in enumerate(value):
        if not isinstance(row, list) or len(row) != width:
            raise InputError(f"{where}[{i}]: expected a list of {width} numbers")
        out.append(tuple(_number(v, f"{where}[{i}][{j}]") for j, v in enumerate(row)))
    return out


def distribution_from_dict(obj: Any) -> Distribution:
    if not isinstance(obj, dict):
        raise InputError("distribution: expected a JSON object")
    unknown = set(obj) - DIST_KEYS
    if unknown:
        raise InputError(f"distribution: unknown field(s) {sorted(unknown)}")
    if "grid" in obj and "gaussian_mixture" in obj:
        raise InputError("distribution: at most one of 'grid' and 'gaussian_mixture' may be given")
    atoms = sorted(_rows(obj.get("atoms", []), 2, "atoms"))
    part = None
    try:
        if "grid" in obj:
            g = obj["grid"]
            if not isinstance(g, dict):
                raise InputError("grid: expected an object")
            unknown = set(g) - GRID_KEYS
            if unknown:
                raise InputError(f"grid: unknown field(s) {sorted(unknown)}")
            for key in ("x0", "step", "values"):
                if key not in g:
                    raise InputError(f"grid.{key}: missing")
            if not isinstance(g["values"], list):
                raise InputError("grid.values: expected a list")
            values = [_number(v, f"grid.values[{i}]") for i, v in enumerate(g["values"])]
            kwargs = {}
            if "kernel" in g:
                kwargs["kernel"] = tuple(_rows(g["kernel"], 3, "grid.kernel"))
            part = GridDensity(_number(g["x0"], "grid.x0"), _number(g["step"], "grid.step"),
                               tuple(values), **kwargs)
        elif "gaussian_mixture" in obj:
            part = GaussianMixtureDensity(tuple(_rows(obj["gaussian_mixture"], 3, "gaussian_mixture")))
        if "window" in obj:
            if part is None:
                raise InputError("window: requires a continuous part")
            win = _rows([obj["window"]], 2, "window")[0]
            part = part.restricted(*win)
        atom_mass = sum(w for _, w in atoms)
        if "continuous_weight" in obj:
            cw = _number(obj["continuous_weight"], "continuous_weight")
        else:
            cw = 1.0 - atom_mass if part is not None else 0.0
        return Distribution(tuple(atoms), part, cw)
    except DomainError as exc:
        raise InputError(f"distribution: {exc}") from exc


def distribution_to_dict(d: Distribution) -> dict:
    out: dict[str, Any] = {"atoms": [list(a) for a in d.atoms], "continuous_weight": d.continuous_weight}
    part = d.continuous_part
    if isinstance(part, GridDensity):
        grid = {"x0": part.x0, "step": part.step, "values": list(part.values)}
        if part.kernel != ((0.0, 0.0, 1.0),):
            grid["kernel"] = [list(k) for k in part.kernel]
        out["grid"] = grid
    elif isinstance(part, GaussianMixtureDensity):
        out["gaussian_mixture"] = [list(c) for c in part.components]
    if part is not None and part.window is not None:
        out["window"] = list(part.window)
    return out


def load_json(path: str) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"{path}: cannot read ({exc.strerror})") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: malformed JSON ({exc.msg} at line {exc.lineno})") from exc


def load_distribution(path: str) -> Distribution:
    return distribution_from_dict(load_json(path))


def jsonable(value: Any) -> Any:
    """Replace non-finite floats by strings so the output is strict JSON."""
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    return value


def dumps(value: Any) -> str:
    return json.dumps(jsonable(value), sort_keys=True, indent=2, allow_nan=False) + "\n"
