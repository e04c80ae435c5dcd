"""Truncated quadrature grids on the boundary hyperplane R^{n-1}.

The half-space extension integrates a boundary function against a kernel
that decays only like |y'|^{-(n-a)}, so the grid must reach a very large
truncation radius.  Geometric radial panels (Gauss-Legendre nodes per
panel) make that affordable: the panel count grows logarithmically in the
radius while resolving unit-scale features near the origin.  For n = 3 the
radial rule is crossed with an equispaced angular rule in the plane.

The truncation error is reported through an analytic bound of the form
C(n, a) x_n^{1-a} R^{a-1} sup_{|y'|>R} |u|, valid for targets with
|x'| <= R/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .kernels import KernelConstants
from .params import ProblemParams
from .quadrature import surface_area


@dataclass(frozen=True)
class HalfspaceGrid:
    """Nodes and weights for integrals over R^{n-1}, truncated at a radius."""

    n: int
    nodes: np.ndarray         # (M, n-1)
    weights: np.ndarray       # (M,)
    truncation_radius: float
    inner_scale: float
    angular_points: int

    def __len__(self) -> int:
        return len(self.weights)

    def integrate(self, values: np.ndarray) -> float:
        values = np.asarray(values, dtype=float)
        if values.shape != self.weights.shape:
            raise ValueError("value vector length does not match the grid")
        return math.fsum((self.weights * values).tolist())


def default_truncation_radius(params: ProblemParams, target: float = 3e-7) -> float:
    """Radius at which the unit-sup tail bound drops below `target`."""
    c = KernelConstants.for_params(params).c_na
    n, a = params.n, params.a
    lead = c * _sphere_area_boundary(n) * 2.0 ** (n - a + 1.0) / (1.0 - a)
    radius = (target / lead) ** (1.0 / (a - 1.0))
    return float(np.clip(radius, 1e4, 1e15))


def _sphere_area_boundary(n: int) -> float:
    # |S^{n-2}|, the unit sphere area in the boundary hyperplane
    return 2.0 if n == 2 else surface_area(n - 1)


def build_halfspace_grid(
    params: ProblemParams,
    inner_scale: float = 0.25,
    panel_ratio: float = 1.5,
    nodes_per_panel: int = 20,
    angular_points: int = 96,
    truncation_radius: float | None = None,
) -> HalfspaceGrid:
    """Geometrically graded polar grid on R^{n-1}.

    Radial panels start at `inner_scale` and grow by `panel_ratio` until
    `truncation_radius` (chosen automatically from the kernel tail bound
    when not given).  For n = 2 the nodes cover both half-lines.
    """
    n = params.n
    if n not in (2, 3):
        raise NotImplementedError("half-space grids implemented for n in {2, 3}")
    if truncation_radius is None:
        truncation_radius = default_truncation_radius(params)
    if panel_ratio <= 1.0:
        raise ValueError("panel_ratio must exceed 1")

    bounds = [0.0, inner_scale]
    while bounds[-1] < truncation_radius:
        bounds.append(min(bounds[-1] * panel_ratio, truncation_radius))
    xg, wg = special.roots_legendre(nodes_per_panel)
    rs, ws = [], []
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        mid, hl = 0.5 * (lo + hi), 0.5 * (hi - lo)
        rs.append(mid + hl * xg)
        ws.append(hl * wg)
    r = np.concatenate(rs)
    wr = np.concatenate(ws)

    if n == 2:
        nodes = np.concatenate([r, -r])[:, None]
        weights = np.concatenate([wr, wr])
    else:
        phi = 2.0 * np.pi * np.arange(angular_points) / angular_points
        cos, sin = np.cos(phi), np.sin(phi)
        nodes = np.stack(
            [np.outer(r, cos).ravel(), np.outer(r, sin).ravel()], axis=1
        )
        weights = np.outer(wr * r, np.full(angular_points, 2.0 * np.pi / angular_points)).ravel()
    return HalfspaceGrid(
        n=n,
        nodes=nodes,
        weights=weights,
        truncation_radius=float(truncation_radius),
        inner_scale=float(inner_scale),
        angular_points=int(angular_points),
    )


def halfspace_tail_bound(
    grid: HalfspaceGrid,
    targets: np.ndarray,
    params: ProblemParams,
    u_tail_sup: float,
) -> np.ndarray:
    """Analytic bound on the truncated part of the extension integral.

    Valid for targets with |x'| <= R/2; more distant targets get inf so a
    silent underestimate is impossible.
    """
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    c = KernelConstants.for_params(params).c_na
    n, a = params.n, params.a
    R = grid.truncation_radius
    xn = targets[:, -1]
    xp = np.sqrt(np.sum(targets[:, :-1] ** 2, axis=-1))
    lead = c * _sphere_area_boundary(n) * 2.0 ** (n - a) / (1.0 - a)
    bound = lead * xn ** (1.0 - a) * R ** (a - 1.0) * abs(u_tail_sup)
    return np.where(xp <= 0.5 * R, bound, np.inf)
