"""Discrete extension operator on the ball, its adjoint, and related checks.

The extension of a boundary function v and the adjoint of a bulk function F
are quadrature discretizations of the same kernel:

    (E v)(xi_j)  = sum_i  M[j, i] w_i v_i
    (T F)(eta_i) = sum_j  M[j, i] W_j F_j

Both use one matrix M, so the discrete duality <E v, F> = <v, T F> is a
pure summation reordering.  M has positive entries, so positivity of both
operators is exact, and the node layout of the quadratures (second half of
the nodes is the exact negation of the first half) makes antipodal
equivariance hold bit for bit: the matrix splits into two blocks A, B with
kernel(-xi, -eta) = kernel(xi, eta), and each output value is one addition
of two block dot products, which commutes.

Near-boundary correction.  Raw kernel rows at ball nodes with
1 - |xi| << (sphere node spacing) overestimate the integral by orders of
magnitude (the kernel peak is narrower than the rule can see).  Instead of
regularizing the kernel, M is balanced by positive diagonal scalings
(Sinkhorn iteration) so that both exact marginals of the continuous kernel
hold on the discrete operator:

    sum_i M[j, i] w_i = (integral of the kernel over the sphere at radius
                         |xi_j|, in closed form), and
    sum_j M[j, i] W_j = the matching ball integral.

The scalings are ~1 away from the boundary layer (interior accuracy is
untouched) and the corrected operator reproduces constants on both sides to
near machine precision.  `correction="none"` disables this and leaves the
raw quadrature, which is useful for auditing the effect.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import conformal_weight, mobius_f, stereographic
from .halfspace import HalfspaceGrid, halfspace_tail_bound
from .kernels import KernelConstants, kernel_ball_sphere_mass, kernel_halfspace
from .params import ProblemParams
from .quadrature import BallQuadrature, SphereQuadrature

_SINKHORN_TOL = 1e-12
_SINKHORN_MAX_ITER = 120


@dataclass
class BoundaryFunction:
    """Values of a boundary function at the nodes of a sphere quadrature."""

    values: np.ndarray
    quad: SphereQuadrature

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != quad_shape(self.quad):
            raise ValueError("value vector length does not match the quadrature")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("boundary values must be finite")

    def to_csv(self, path) -> None:
        _values_to_csv(path, self.quad.nodes, self.values)


@dataclass
class ExtensionField:
    """Values of an extension at the nodes of a ball quadrature."""

    values: np.ndarray
    quad: BallQuadrature

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != quad_shape(self.quad):
            raise ValueError("value vector length does not match the quadrature")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field values must be finite")

    def to_csv(self, path) -> None:
        _values_to_csv(path, self.quad.nodes, self.values)


def _values_to_csv(path, nodes: np.ndarray, values: np.ndarray) -> None:
    dim = nodes.shape[1]
    with open(path, "w") as fh:
        fh.write(",".join(f"x{i + 1}" for i in range(dim)) + ",value\n")
        for row, val in zip(nodes, values):
            fh.write(",".join(repr(float(c)) for c in row) + f",{float(val)!r}\n")


def quad_shape(quad) -> tuple[int]:
    return (len(quad.weights),)


def _kernel_block(xi: np.ndarray, radii: np.ndarray, eta: np.ndarray,
                  params: ProblemParams) -> np.ndarray:
    """Ball-kernel values, chunked so the coordinate broadcast stays small."""
    pref = KernelConstants.for_params(params).ball_prefactor
    a, n = params.a, params.n
    out = np.empty((len(xi), len(eta)))
    step = max(1, 4_000_000 // max(len(eta), 1))
    for s in range(0, len(xi), step):
        d = xi[s:s + step, None, :] - eta[None, :, :]
        dist2 = np.einsum("ijk,ijk->ij", d, d)
        out[s:s + step] = dist2 ** ((a - n) / 2.0)
    out *= pref * ((1.0 - radii) * (1.0 + radii))[:, None] ** (1.0 - a)
    return out


@dataclass
class ExtensionOperator:
    """Cached dense discretization of the extension/adjoint pair."""

    params: ProblemParams
    sphere: SphereQuadrature
    ball: BallQuadrature
    correction: str = "balanced"
    # populated at build time
    block_a: np.ndarray = field(init=False, repr=False)
    block_b: np.ndarray = field(init=False, repr=False)
    row_scale: np.ndarray = field(init=False, repr=False)
    col_scale: np.ndarray = field(init=False, repr=False)
    sphere_mass_target: np.ndarray = field(init=False, repr=False)
    ball_mass_target: float = field(init=False)
    balance_iterations: int = field(init=False)
    balance_row_dev: float = field(init=False)
    balance_col_dev: float = field(init=False)

    def __post_init__(self) -> None:
        if self.sphere.n != self.params.n or self.ball.n != self.params.n:
            raise ValueError("quadrature dimensions do not match the parameters")
        if self.correction not in ("balanced", "none"):
            raise ValueError(f"unknown correction {self.correction!r}")
        hs = self.sphere.half
        hb = self.ball.half
        up_nodes = self.ball.nodes[:hb]
        up_radii = self.ball.radii[:hb]
        # kernel(-xi, -eta) = kernel(xi, eta) exactly, so two blocks suffice
        self.block_a = _kernel_block(up_nodes, up_radii, self.sphere.nodes[:hs], self.params)
        self.block_b = _kernel_block(up_nodes, up_radii, self.sphere.nodes[hs:], self.params)
        self.sphere_mass_target = kernel_ball_sphere_mass(self.ball.radii, self.params)
        self.ball_mass_target = float(
            np.dot(self.ball.weights, self.sphere_mass_target) / self.sphere.weights.sum()
        )
        self._balance()

    # -- raw block applications (exact pair symmetry, see module docstring) --

    def _apply_columns(self, y: np.ndarray) -> np.ndarray:
        """K @ y for a sphere vector y (no scalings)."""
        hs = self.sphere.half
        up = self.block_a @ y[:hs] + self.block_b @ y[hs:]
        dn = self.block_b @ y[:hs] + self.block_a @ y[hs:]
        return np.concatenate([up, dn])

    def _apply_rows(self, z: np.ndarray) -> np.ndarray:
        """K^T @ z for a ball vector z (no scalings)."""
        hb = self.ball.half
        t1 = z[:hb] @ self.block_a + z[hb:] @ self.block_b
        t2 = z[:hb] @ self.block_b + z[hb:] @ self.block_a
        return np.concatenate([t1, t2])

    def _balance(self) -> None:
        m, ns = len(self.ball.weights), len(self.sphere.weights)
        d = np.ones(m)
        e = np.ones(ns)
        iters = 0
        if self.correction == "balanced":
            sw, bw = self.sphere.weights, self.ball.weights
            psi, theta = self.sphere_mass_target, self.ball_mass_target
            for iters in range(1, _SINKHORN_MAX_ITER + 1):
                d *= psi / (d * self._apply_columns(sw * e))
                e *= theta / (e * self._apply_rows(d * bw))
                row_dev = np.max(np.abs(d * self._apply_columns(sw * e) / psi - 1.0))
                if row_dev < _SINKHORN_TOL:
                    break
        self.row_scale = d
        self.col_scale = e
        self.balance_iterations = iters
        sw, bw = self.sphere.weights, self.ball.weights
        self.balance_row_dev = float(
            np.max(np.abs(d * self._apply_columns(sw * e) / self.sphere_mass_target - 1.0))
        )
        self.balance_col_dev = float(
            np.max(np.abs(e * self._apply_rows(d * bw) / self.ball_mass_target - 1.0))
        )

    # -- public operator applications --

    def extend_values(self, v: np.ndarray) -> np.ndarray:
        return self.row_scale * self._apply_columns(self.sphere.weights * self.col_scale * v)

    def adjoint_values(self, f: np.ndarray) -> np.ndarray:
        return self.col_scale * self._apply_rows(self.row_scale * self.ball.weights * f)

    def extend(self, v: BoundaryFunction) -> ExtensionField:
        if v.quad is not self.sphere:
            raise ValueError("boundary function lives on a different quadrature")
        return ExtensionField(self.extend_values(v.values), self.ball)

    def adjoint(self, f: ExtensionField) -> BoundaryFunction:
        if f.quad is not self.ball:
            raise ValueError("field lives on a different quadrature")
        return BoundaryFunction(self.adjoint_values(f.values), self.sphere)

    def diagnostics(self) -> dict:
        return {
            "delta_min": self.ball.delta_min,
            "correction": self.correction,
            "balance_iterations": self.balance_iterations,
            "balance_row_dev": self.balance_row_dev,
            "balance_col_dev": self.balance_col_dev,
            "max_row_scale_dev": float(np.max(np.abs(self.row_scale - 1.0))),
            "max_col_scale_dev": float(np.max(np.abs(self.col_scale - 1.0))),
        }


_OPERATOR_CACHE: dict[tuple, ExtensionOperator] = {}


def build_extension_operator(
    sphere: SphereQuadrature,
    ball: BallQuadrature,
    params: ProblemParams,
    correction: str = "balanced",
) -> ExtensionOperator:
    """Build (or fetch from a small cache) the dense operator pair."""
    key = (id(sphere), id(ball), params.n, params.a, correction)
    op = _OPERATOR_CACHE.get(key)
    if op is None or op.sphere is not sphere or op.ball is not ball:
        op = ExtensionOperator(params, sphere, ball, correction)
        if len(_OPERATOR_CACHE) >= 8:
            _OPERATOR_CACHE.pop(next(iter(_OPERATOR_CACHE)))
        _OPERATOR_CACHE[key] = op
    return op


def extend_ball(
    v: BoundaryFunction,
    ball: BallQuadrature,
    params: ProblemParams,
    correction: str = "balanced",
) -> ExtensionField:
    """Extension of v at every ball node (thin wrapper over the operator)."""
    return build_extension_operator(v.quad, ball, params, correction).extend(v)


def adjoint_ball(
    f: ExtensionField,
    sphere: SphereQuadrature,
    params: ProblemParams,
    correction: str = "balanced",
) -> BoundaryFunction:
    """Adjoint applied to a bulk field, landing on the sphere quadrature."""
    return build_extension_operator(sphere, f.quad, params, correction).adjoint(f)


def extend_at_points(
    v: BoundaryFunction, points: np.ndarray, params: ProblemParams
) -> np.ndarray:
    """Pure-quadrature extension at arbitrary interior points.

    Used for point probes away from the boundary layer, where the raw rule
    is spectrally accurate; no balancing is applied.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    radii = np.sqrt(np.sum(points * points, axis=-1))
    if np.any(radii >= 1.0):
        raise ValueError("extension points must be interior")
    rows = _kernel_block(points, radii, v.quad.nodes, params)
    return rows @ (v.quad.weights * v.values)


def extend_halfspace(
    u_values: np.ndarray,
    grid: HalfspaceGrid,
    targets: np.ndarray,
    params: ProblemParams,
) -> tuple[np.ndarray, np.ndarray]:
    """Half-space extension of grid samples, with the truncation-tail bound.

    The tail sup of u is estimated from the outermost decade of the grid
    itself; the returned bound is per target.
    """
    u_values = np.asarray(u_values, dtype=float)
    if u_values.shape != grid.weights.shape:
        raise ValueError("u must be sampled on the grid nodes")
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    if np.any(targets[:, -1] <= 0):
        raise ValueError("extension targets need x_n > 0")
    out = np.empty(len(targets))
    for k, x in enumerate(targets):
        out[k] = np.dot(grid.weights, kernel_halfspace(grid.nodes, x, params) * u_values)
    rad = np.sqrt(np.sum(grid.nodes**2, axis=-1))
    outer = rad >= 0.1 * grid.truncation_radius
    u_tail = float(np.max(np.abs(u_values[outer]))) if np.any(outer) else 0.0
    return out, halfspace_tail_bound(grid, targets, params, u_tail)


def interpolate_boundary(v: BoundaryFunction, degree: int | None = None):
    """Callable interpolant of nodal boundary values.

    n = 2 uses the exact trigonometric interpolant of the equispaced rule;
    n = 3 fits real spherical harmonics by least squares (exact for
    bandlimited data up to the requested degree).
    """
    quad = v.quad
    if quad.n == 2:
        ang = np.arctan2(quad.nodes[:, 1], quad.nodes[:, 0])
        order = np.argsort(np.mod(ang, 2.0 * np.pi))
        coeff = np.fft.rfft(v.values[order]) / len(order)

        def interp2(points: np.ndarray) -> np.ndarray:
            points = np.atleast_2d(np.asarray(points, dtype=float))
            theta = np.arctan2(points[:, 1], points[:, 0])
            k = np.arange(len(coeff))
            phase = np.exp(1j * np.outer(theta, k))
            scale = np.full(len(coeff), 2.0)
            scale[0] = 1.0
            if len(order) % 2 == 0:
                scale[-1] = 1.0
            return np.real(phase @ (coeff * scale))

        return interp2
    if quad.n == 3:
        if degree is None:
            degree = min(quad.resolution // 2, 12)
        design = _real_sph_design(quad.nodes, degree)
        coeff, *_ = np.linalg.lstsq(design, v.values, rcond=None)

        def interp3(points: np.ndarray) -> np.ndarray:
            points = np.atleast_2d(np.asarray(points, dtype=float))
            return _real_sph_design(points, degree) @ coeff

        return interp3
    raise NotImplementedError("interpolation implemented for n in {2, 3}")


def _real_sph_design(points: np.ndarray, degree: int) -> np.ndarray:
    from scipy import special as sp

    theta = np.arccos(np.clip(points[:, 2], -1.0, 1.0))
    phi = np.arctan2(points[:, 1], points[:, 0])
    cols = []
    for ell in range(degree + 1):
        for m in range(0, ell + 1):
            if hasattr(sp, "sph_harm_y"):
                y = sp.sph_harm_y(ell, m, theta, phi)
            else:  # pragma: no cover - older scipy
                y = sp.sph_harm(m, ell, phi, theta)
            if m == 0:
                cols.append(np.real(y))
            else:
                cols.append(np.sqrt(2.0) * np.real(y))
                cols.append(np.sqrt(2.0) * np.imag(y))
    return np.stack(cols, axis=1)


def conformal_pullback_check(
    v,
    sphere: SphereQuadrature,
    grid: HalfspaceGrid,
    params: ProblemParams,
    sample_points: np.ndarray,
) -> float:
    """Max relative discrepancy of the ball/half-space intertwining identity.

    Both sides of

        (ball extension of v)(F(x)) * conformal_weight(x)
            = (half-space extension of conformal_weight * (v o F))(x)

    are evaluated independently: the left through the sphere quadrature,
    the right through the half-space grid.  `v` is a callable on sphere
    points, or a BoundaryFunction (interpolated first).
    """
    if isinstance(v, BoundaryFunction):
        if v.quad is not sphere:
            raise ValueError("boundary function lives on a different quadrature")
        v_fun = interpolate_boundary(v)
    else:
        v_fun = v
    sample_points = np.atleast_2d(np.asarray(sample_points, dtype=float))
    v_nodes = BoundaryFunction(np.asarray(v_fun(sphere.nodes), dtype=float), sphere)

    xi = mobius_f(sample_points, params)
    lhs = extend_at_points(v_nodes, xi, params)

    boundary_pts = np.concatenate(
        [grid.nodes, np.zeros((len(grid.nodes), 1))], axis=1
    )
    u = conformal_weight(boundary_pts, params) * np.asarray(
        v_fun(stereographic(grid.nodes, params.n)), dtype=float
    )
    ext, _tail = extend_halfspace(u, grid, sample_points, params)
    rhs = ext / conformal_weight(sample_points, params)
    scale = np.max(np.abs(lhs))
    return float(np.max(np.abs(lhs - rhs)) / scale)


def weighted_harmonic_residual(
    field_eval,
    x: np.ndarray,
    h: float,
    params: ProblemParams,
) -> float:
    """Finite-difference residual of div(x_n^a grad Phi) at an interior point.

    Conservative second-order stencil: plain central differences in the
    tangential directions, flux differences at x_n +/- h/2 in the normal
    direction.  Requires -1 < a < 1 (the range where the extension solves
    the weighted equation) and x_n > 2h so the stencil stays interior.
    """
    a = params.a
    if not (-1.0 < a < 1.0):
        raise ValueError("the weighted-harmonicity relation needs -1 < a < 1")
    x = np.asarray(x, dtype=float)
    if x.shape != (params.n,):
        raise ValueError(f"expected a single point in R^{params.n}")
    if x[-1] <= 2.0 * h:
        raise ValueError("point too close to the boundary for the stencil")
    n = params.n
    pts = [x]
    for i in range(n):
        for s in (+1.0, -1.0):
            p = x.copy()
            p[i] += s * h
            pts.append(p)
    vals = np.asarray(field_eval(np.stack(pts)), dtype=float)
    f0 = vals[0]
    res = 0.0
    xn = x[-1]
    for i in range(n - 1):
        fp, fm = vals[1 + 2 * i], vals[2 + 2 * i]
        res += xn**a * (fp - 2.0 * f0 + fm) / (h * h)
    fp, fm = vals[1 + 2 * (n - 1)], vals[2 + 2 * (n - 1)]
    res += (
        (xn + 0.5 * h) ** a * (fp - f0) - (xn - 0.5 * h) ** a * (f0 - fm)
    ) / (h * h)
    return float(res)
