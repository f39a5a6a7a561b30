"""Quadrature rules, dimensional constants, derivative stencils and
uniform-grid interpolation shared by the other modules.

Everything here is deliberately free of domain knowledge: the functions
operate on plain callables and numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "QuadRule",
    "DimensionConstants",
    "gauss_legendre",
    "gamma_fn",
    "unit_ball_volume",
    "dimension_constants",
    "coeff_c",
    "central_diff",
    "stencil_derivative",
    "richardson",
    "interp_linear",
    "interp_cubic",
]


@dataclass(frozen=True)
class QuadRule:
    """Gauss-Legendre nodes and weights mapped onto an interval (a, b)."""

    nodes: np.ndarray
    weights: np.ndarray
    interval: tuple[float, float]

    def integrate(self, f) -> float:
        return float(np.sum(self.weights * np.asarray(f(self.nodes), dtype=float)))


def gauss_legendre(m: int, a: float, b: float) -> QuadRule:
    """Gauss-Legendre rule with ``m`` nodes on (a, b).

    Exact for polynomials of degree <= 2m - 1; nodes are strictly
    interior, which the Abel-type integrands rely on.
    """
    if m < 1:
        raise ValueError(f"need at least one quadrature node, got m={m}")
    if not a < b:
        raise ValueError(f"empty or reversed interval ({a}, {b})")
    x, w = np.polynomial.legendre.leggauss(int(m))
    half = 0.5 * (b - a)
    return QuadRule(0.5 * (a + b) + half * x, half * w, (float(a), float(b)))


def gamma_fn(x: float) -> float:
    """Gamma function for positive real arguments."""
    if x <= 0:
        raise ValueError(f"gamma_fn requires a positive argument, got {x}")
    return math.gamma(x)


def unit_ball_volume(n: int) -> float:
    """Volume of the unit ball in R^n (n >= 0)."""
    if n < 0:
        raise ValueError(f"dimension must be nonnegative, got {n}")
    return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)


@dataclass(frozen=True)
class DimensionConstants:
    """Dimension-dependent normalisations used by the wave solvers.

    ``gamma_n`` is the parity-dependent product 2*4*...*(n-2)*n for even n
    and 1*3*...*(n-2) for odd n; ``omega_n`` is the unit-ball volume.
    """

    n: int
    gamma_n: float
    omega_n: float


def dimension_constants(n: int) -> DimensionConstants:
    if n < 2:
        raise ValueError(f"dimension_constants requires n >= 2, got {n}")
    if n % 2 == 0:
        g = n
        for k in range(2, n - 1, 2):
            g *= k
    else:
        g = 1
        for k in range(3, n - 1, 2):
            g *= k
    return DimensionConstants(n=n, gamma_n=float(g), omega_n=unit_ball_volume(n))


def coeff_c(n: int, k: int, l: int) -> int:
    """Coefficient c_{k,l} of the iterated (1/t d/dt) expansion.

    Defined by c_{0,0} = 1 and the recursion

        c_{k,0} = c_{k-1,0} * (n - (2(k-1) + 1)),
        c_{k,k} = 1,
        c_{k,l} = c_{k-1,l-1} + c_{k-1,l} * (n - (2(k-1) - (l-1))),

    so that (1/t d/dt)^k (t^{n-1} A(t)) = sum_l c_{k,l} t^{n-(2k+1-l)} A^(l)(t).
    Evaluated in exact integer arithmetic.
    """
    if n < 2:
        raise ValueError(f"coeff_c requires n >= 2, got n={n}")
    if k < 0 or l < 0 or l > k:
        raise ValueError(f"coeff_c requires 0 <= l <= k, got k={k}, l={l}")
    row = [1]
    for kk in range(1, k + 1):
        prev = row
        row = [0] * (kk + 1)
        row[0] = prev[0] * (n - (2 * (kk - 1) + 1))
        row[kk] = 1
        for ll in range(1, kk):
            row[ll] = prev[ll - 1] + prev[ll] * (n - (2 * (kk - 1) - (ll - 1)))
    return row[l]


def central_diff(f, t: float, h: float, order: int = 1) -> float:
    """Central difference of a scalar callable.

    order 1 uses the fourth-order five-point stencil, order 2 the
    second-order three-point stencil.
    """
    if h <= 0:
        raise ValueError(f"step must be positive, got h={h}")
    if order == 1:
        return (-f(t + 2 * h) + 8 * f(t + h) - 8 * f(t - h) + f(t - 2 * h)) / (12 * h)
    if order == 2:
        return (f(t + h) - 2 * f(t) + f(t - h)) / (h * h)
    raise ValueError(f"central_diff supports order 1 or 2, got {order}")


# Fourth-order central stencils: offset -> coefficient (divide by h**order).
_STENCILS = {
    1: ((-2, 1 / 12), (-1, -8 / 12), (1, 8 / 12), (2, -1 / 12)),
    2: ((-2, -1 / 12), (-1, 16 / 12), (0, -30 / 12), (1, 16 / 12), (2, -1 / 12)),
    3: ((-3, 1 / 8), (-2, -1.0), (-1, 13 / 8), (1, -13 / 8), (2, 1.0), (3, -1 / 8)),
}

#: half-width in grid steps of the widest fourth-order stencil per order
STENCIL_REACH = {1: 2, 2: 2, 3: 3}


def stencil_derivative(f, t: float, h: float, order: int) -> float:
    """Fourth-order accurate central derivative of order 1, 2 or 3."""
    if h <= 0:
        raise ValueError(f"step must be positive, got h={h}")
    if order not in _STENCILS:
        raise ValueError(f"stencil_derivative supports orders 1..3, got {order}")
    acc = 0.0
    for off, c in _STENCILS[order]:
        acc += c * f(t + off * h)
    return acc / h**order


def stencil_apply(values: np.ndarray, h: float, order: int, stride: int = 1) -> np.ndarray:
    """Apply the fourth-order stencil along the last axis of a table.

    Returns an array of the same shape; entries closer than
    ``stride * STENCIL_REACH[order]`` to either end are NaN.
    """
    if order not in _STENCILS:
        raise ValueError(f"stencil_apply supports orders 1..3, got {order}")
    values = np.asarray(values, dtype=float)
    reach = STENCIL_REACH[order] * stride
    out = np.full_like(values, np.nan)
    core = out[..., reach : values.shape[-1] - reach]
    core[...] = 0.0
    for off, c in _STENCILS[order]:
        lo = reach + off * stride
        hi = values.shape[-1] - reach + off * stride
        core += c * values[..., lo:hi]
    core /= (h * stride) ** order
    return out


def richardson(d_h, d_2h):
    """Richardson combination of two fourth-order estimates at steps h and 2h."""
    return (16.0 * np.asarray(d_h) - np.asarray(d_2h)) / 15.0


def _locate(q: np.ndarray, x0: float, dx: float, npts: int, kmin: int, kmax: int):
    u = (np.asarray(q, dtype=float) - x0) / dx
    k = np.clip(np.floor(u).astype(int), kmin, kmax)
    return k, u - k


def interp_linear(q, x0: float, dx: float, table: np.ndarray):
    """Linear interpolation of a uniform table at query points ``q``."""
    table = np.asarray(table, dtype=float)
    k, th = _locate(q, x0, dx, table.shape[-1], 0, table.shape[-1] - 2)
    return (1.0 - th) * table[..., k] + th * table[..., k + 1]


def interp_cubic(q, x0: float, dx: float, table: np.ndarray):
    """Four-point Lagrange interpolation of a uniform table at ``q``.

    Queries outside the table are evaluated on the nearest interior
    stencil, which keeps the formula defined and degrades gracefully.
    """
    table = np.asarray(table, dtype=float)
    k, th = _locate(q, x0, dx, table.shape[-1], 1, table.shape[-1] - 3)
    wm1 = -th * (th - 1.0) * (th - 2.0) / 6.0
    w0 = (th - 1.0) * (th + 1.0) * (th - 2.0) / 2.0
    w1 = -th * (th + 1.0) * (th - 2.0) / 2.0
    w2 = th * (th * th - 1.0) / 6.0
    return (
        wm1 * table[..., k - 1]
        + w0 * table[..., k]
        + w1 * table[..., k + 1]
        + w2 * table[..., k + 2]
    )
