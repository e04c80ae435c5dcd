"""Half-space and ball Poisson-type kernels and their normalization.

The half-space kernel is

    P(y', x) = c * x_n^{1-a} / (|x' - y'|^2 + x_n^2)^{(n-a)/2},

with c = c(n, a) chosen so that the kernel integrates to one over the
boundary hyperplane for every interior point.  Transporting it to the unit
ball through the Moebius map gives

    P_ball(eta, xi) = 2^{a-1} c (1 - |xi|^2)^{1-a} / |xi - eta|^{n-a}.

Radial integrals of the ball kernel admit closed forms that the operator
module uses as exact targets: over the sphere (`kernel_ball_sphere_mass`)
and, numerically, over the ball.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special

from .params import ProblemParams


def normalization_constant(params: ProblemParams) -> float:
    """Closed form of the normalization constant via Gamma functions.

    Reducing the defining integral to its radial part gives

        1/c = |S^{n-2}| * (1/2) B((n-1)/2, (1-a)/2)
            = pi^{(n-1)/2} Gamma((1-a)/2) / Gamma((n-a)/2),

    validated against the quadrature oracle in the test suite.  For n = 3,
    a = 0 this is the classical 1/(2 pi).
    """
    n, a = params.n, params.a
    return float(
        special.gamma((n - a) / 2.0)
        / (np.pi ** ((n - 1) / 2.0) * special.gamma((1.0 - a) / 2.0))
    )


@dataclass(frozen=True)
class KernelConstants:
    """Cached normalization constant and the ball-kernel prefactor 2^{a-1} c."""

    c_na: float
    ball_prefactor: float

    @staticmethod
    def for_params(params: ProblemParams) -> "KernelConstants":
        return _constants_cached(params.n, params.a)


@lru_cache(maxsize=32)
def _constants_cached(n: int, a: float) -> KernelConstants:
    c = normalization_constant(ProblemParams(n, a))
    return KernelConstants(c_na=c, ball_prefactor=2.0 ** (a - 1.0) * c)


def kernel_halfspace(y_prime: np.ndarray, x: np.ndarray, params: ProblemParams) -> np.ndarray:
    """Evaluate P(y', x); broadcasts y' of shape (..., n-1) against one x."""
    y = np.asarray(y_prime, dtype=float)
    x = np.asarray(x, dtype=float)
    xn = x[..., -1]
    if np.any(xn <= 0):
        raise ValueError("kernel_halfspace needs interior points x_n > 0")
    c = KernelConstants.for_params(params).c_na
    diff = y - x[..., :-1]
    d2 = np.sum(diff * diff, axis=-1) + xn * xn
    return c * xn ** (1.0 - params.a) * d2 ** (-(params.n - params.a) / 2.0)


def kernel_ball(eta: np.ndarray, xi: np.ndarray, params: ProblemParams) -> np.ndarray:
    """Evaluate the ball kernel at sphere points eta and interior points xi."""
    eta = np.asarray(eta, dtype=float)
    xi = np.asarray(xi, dtype=float)
    r2 = np.sum(xi * xi, axis=-1)
    if np.any(r2 >= 1.0):
        raise ValueError("kernel_ball needs interior points |xi| < 1")
    diff = xi - eta
    d2 = np.sum(diff * diff, axis=-1)
    if np.any(d2 == 0.0):
        raise ValueError("kernel_ball is singular at xi = eta")
    k = KernelConstants.for_params(params)
    a, n = params.a, params.n
    return k.ball_prefactor * (1.0 - r2) ** (1.0 - a) * d2 ** ((a - n) / 2.0)


def kernel_ball_sphere_mass(radii: np.ndarray, params: ProblemParams) -> np.ndarray:
    """Integral of the ball kernel over the unit sphere, as a function of |xi|.

    For n = 3 the surface integral of |xi - eta|^{a-3} is elementary; for
    n = 2 it is 2 pi 2F1(s, s; 1; r^2) with s = (2-a)/2.  The mass tends to
    1 as r -> 1 (the flat normalization) and to 2^{a-1} c |S^{n-1}| times
    (1 - r^2)^{1-a} corrections near the center.
    """
    r = np.atleast_1d(np.asarray(radii, dtype=float))
    if np.any((r < 0) | (r >= 1)):
        raise ValueError("radii must lie in [0, 1)")
    n, a = params.n, params.a
    pref = KernelConstants.for_params(params).ball_prefactor
    if n == 2:
        s = (2.0 - a) / 2.0
        surf = 2.0 * np.pi * special.hyp2f1(s, s, 1.0, r * r)
    elif n == 3:
        b = 1.0 - a
        small = r < 1e-6
        rs = np.where(small, 0.5, r)
        surf = np.where(
            small,
            4.0 * np.pi * (1.0 + (b + 1.0) * (b + 2.0) * r * r / 6.0),
            (2.0 * np.pi / (b * rs)) * ((1.0 - rs) ** (-b) - (1.0 + rs) ** (-b)),
        )
    else:
        raise NotImplementedError("sphere mass implemented for n in {2, 3}")
    out = pref * ((1.0 - r) * (1.0 + r)) ** (1.0 - a) * surf
    return out if np.ndim(radii) else float(out[0])
