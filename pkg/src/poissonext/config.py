"""Strict JSON run configuration for the command-line front end.

Unknown keys are rejected with their path, so a typo in a tolerance name
fails loudly instead of silently running with defaults.  The weight is
specified as a truncated series (constant, cosine series on the circle,
zonal Legendre series on the two-sphere) so antipodal symmetry is a parity
check on the frequencies and positivity can be certified on a fine grid
with an explicit margin.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from numpy.polynomial import legendre

from .functionals import WeightFunction
from .params import ProblemParams
from .quadrature import SphereQuadrature

_SCHEMA_VERSION = 1

_DEFAULTS: dict[str, Any] = {
    "params": {"n": 3, "a": 0.0},
    "weight": {"kind": "constant", "value": 1.0},
    "quadrature": {
        "sphere_resolution": None,      # filled per dimension
        "ball_radial_points": 96,
        "ball_angular_resolution": None,
        "radial_rule": "graded_gl",
    },
    "operator": {"correction": "balanced"},
    "solver": {
        "p": None,
        "schedule": None,
        "epsilon_floor": 1e-3,
        "tol_v": 1e-9,
        "max_iter": 5000,
        "damping": 1.0,
        "blow_up_factor": 3.0,
        "multistart": 0,
    },
    "halfspace": {
        "inner_scale": 0.25,
        "panel_ratio": 1.5,
        "nodes_per_panel": 20,
        "angular_points": 96,
        "truncation_radius": None,
    },
    "output_dir": "out",
    "seed": 7,
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    params: ProblemParams
    weight_spec: dict
    quadrature: dict
    operator: dict
    solver: dict
    halfspace: dict
    output_dir: str
    seed: int
    raw: dict = field(repr=False)

    def to_dict(self) -> dict:
        """Normalized, losslessly re-parseable echo of the configuration."""
        return json.loads(json.dumps(self.raw, sort_keys=True))

    @property
    def sphere_resolution(self) -> int:
        return self.quadrature["sphere_resolution"]

    @property
    def ball_angular_resolution(self) -> int:
        return self.quadrature["ball_angular_resolution"]


def _merge_strict(section: str, user: dict, defaults: dict) -> dict:
    if not isinstance(user, dict):
        raise ConfigError(f"{section}: expected an object")
    unknown = set(user) - set(defaults)
    if unknown:
        raise ConfigError(f"{section}: unknown key(s) {sorted(unknown)}")
    out = dict(defaults)
    out.update(user)
    return out


def parse_config(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a JSON object")
    top_known = set(_DEFAULTS) | {"schema_version"}
    unknown = set(data) - top_known
    if unknown:
        raise ConfigError(f"unknown top-level key(s) {sorted(unknown)}")
    if data.get("schema_version", _SCHEMA_VERSION) != _SCHEMA_VERSION:
        raise ConfigError("unsupported schema_version")

    pdata = _merge_strict("params", data.get("params", {}), _DEFAULTS["params"])
    try:
        params = ProblemParams(pdata["n"], pdata["a"])
    except ValueError as exc:
        raise ConfigError(f"params: {exc}") from exc
    if params.n not in (2, 3):
        raise ConfigError("params: only n in {2, 3} is supported")

    wdata = dict(data.get("weight", _DEFAULTS["weight"]))
    _validate_weight_spec(wdata, params)

    qdata = _merge_strict("quadrature", data.get("quadrature", {}), _DEFAULTS["quadrature"])
    if qdata["sphere_resolution"] is None:
        qdata["sphere_resolution"] = 128 if params.n == 2 else 16
    if qdata["ball_angular_resolution"] is None:
        qdata["ball_angular_resolution"] = (
            2 * qdata["sphere_resolution"] if params.n == 2 else qdata["sphere_resolution"]
        )
    for key in ("sphere_resolution", "ball_angular_resolution"):
        if qdata[key] < 4 or qdata[key] % 2:
            raise ConfigError(f"quadrature.{key} must be an even integer >= 4")
    if qdata["radial_rule"] not in ("graded_gl", "jacobi"):
        raise ConfigError("quadrature.radial_rule must be 'graded_gl' or 'jacobi'")

    odata = _merge_strict("operator", data.get("operator", {}), _DEFAULTS["operator"])
    if odata["correction"] not in ("balanced", "none"):
        raise ConfigError("operator.correction must be 'balanced' or 'none'")

    sdata = _merge_strict("solver", data.get("solver", {}), _DEFAULTS["solver"])
    if sdata["schedule"] is not None:
        sched = [float(p) for p in sdata["schedule"]]
        if any(b >= a for a, b in zip(sched, sched[1:])):
            raise ConfigError("solver.schedule must be strictly decreasing")
        if sched and not (params.p_crit <= sched[-1] < sched[0] < params.p_bulk):
            raise ConfigError("solver.schedule must stay inside [p_crit, p_bulk)")
        sdata["schedule"] = sched

    hdata = _merge_strict("halfspace", data.get("halfspace", {}), _DEFAULTS["halfspace"])

    raw = {
        "schema_version": _SCHEMA_VERSION,
        "params": {"n": params.n, "a": params.a},
        "weight": wdata,
        "quadrature": qdata,
        "operator": odata,
        "solver": sdata,
        "halfspace": hdata,
        "output_dir": data.get("output_dir", _DEFAULTS["output_dir"]),
        "seed": int(data.get("seed", _DEFAULTS["seed"])),
    }
    return RunConfig(
        params=params,
        weight_spec=wdata,
        quadrature=qdata,
        operator=odata,
        solver=sdata,
        halfspace=hdata,
        output_dir=raw["output_dir"],
        seed=raw["seed"],
        raw=raw,
    )


def load_config(path: str) -> RunConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    return parse_config(data)


def _validate_weight_spec(spec: dict, params: ProblemParams) -> None:
    kind = spec.get("kind")
    if kind == "constant":
        unknown = set(spec) - {"kind", "value"}
        if unknown:
            raise ConfigError(f"weight: unknown key(s) {sorted(unknown)}")
        if not (float(spec.get("value", 1.0)) > 0):
            raise ConfigError("weight: constant must be positive")
        return
    if kind == "cosine_series":
        if params.n != 2:
            raise ConfigError("weight: cosine_series requires n = 2")
    elif kind == "zonal_series":
        if params.n != 3:
            raise ConfigError("weight: zonal_series requires n = 3")
    else:
        raise ConfigError(f"weight: unknown kind {kind!r}")
    unknown = set(spec) - {"kind", "coefficients"}
    if unknown:
        raise ConfigError(f"weight: unknown key(s) {sorted(unknown)}")
    coeffs = spec.get("coefficients")
    if not isinstance(coeffs, dict) or not coeffs:
        raise ConfigError("weight: coefficients must be a nonempty object")
    for key in coeffs:
        try:
            k = int(key)
        except ValueError:
            raise ConfigError(f"weight: bad frequency/degree {key!r}") from None
        if k < 0:
            raise ConfigError("weight: frequencies/degrees must be nonnegative")
        if k % 2:
            raise ConfigError(
                f"weight: antipodality violated (odd {'frequency' if kind == 'cosine_series' else 'degree'} {k})"
            )
    margin = weight_positivity_margin(spec, params)
    if margin <= 0:
        raise ConfigError(f"weight: not positive (min over fine grid {margin:.3e})")


def _weight_callable(spec: dict, params: ProblemParams):
    kind = spec["kind"]
    if kind == "constant":
        value = float(spec.get("value", 1.0))
        return lambda pts: np.full(len(np.atleast_2d(pts)), value)
    coeffs = {int(k): float(v) for k, v in spec["coefficients"].items()}
    if kind == "cosine_series":
        def k2(pts):
            pts = np.atleast_2d(pts)
            theta = np.arctan2(pts[:, 1], pts[:, 0])
            out = np.zeros(len(pts))
            for freq, c in sorted(coeffs.items()):
                out += c * np.cos(freq * theta)
            return out
        return k2
    deg = max(coeffs)
    series = np.zeros(deg + 1)
    for ell, c in coeffs.items():
        series[ell] = c

    def k3(pts):
        pts = np.atleast_2d(pts)
        return legendre.legval(np.clip(pts[:, 2], -1.0, 1.0), series)
    return k3


def weight_positivity_margin(spec: dict, params: ProblemParams, grid: int = 4096) -> float:
    """Minimum of the weight over a fine parity-respecting sample grid."""
    fn = _weight_callable(spec, params)
    if params.n == 2:
        theta = np.linspace(0.0, 2.0 * np.pi, grid, endpoint=False)
        pts = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    else:
        t = np.linspace(-1.0, 1.0, grid)
        pts = np.stack([np.sqrt(1 - t**2), np.zeros(grid), t], axis=1)
    return float(np.min(fn(pts)))


def evaluate_weight(config: RunConfig, quad: SphereQuadrature) -> WeightFunction:
    fn = _weight_callable(config.weight_spec, config.params)
    values = fn(quad.nodes)
    values = 0.5 * (values + values[quad.antipode_index])  # exact antipodal parity
    return WeightFunction(values, quad, antipodal=True)
