"""Convex observation domains and their boundary quadratures.

Supported shapes are axis-aligned ellipsoids (any of the two working
dimensions) and planar superellipses |x1/a1|^p + |x2/a2|^p < 1 with
p >= 2.  All operations are plain functions over a frozen dataclass so
domains can be hashed and used as cache keys.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .calculus import gauss_legendre

__all__ = [
    "ConvexDomain",
    "BoundaryQuadrature",
    "DegeneratePointsError",
    "ellipsoid",
    "superellipse",
    "contains",
    "level_value",
    "outward_normal",
    "boundary_quadrature",
    "chord_params",
    "support_halfwidth",
    "boundary_distance",
    "domain_diameter",
]

ELLIPSOID = "ellipsoid"
SUPERELLIPSE = "superellipse"

#: pairs (x, y) closer than this are rejected by chord_params
DEGENERACY_CUTOFF = 1e-14


class DegeneratePointsError(ValueError):
    """Chord parameters requested for two (numerically) identical points."""


@dataclass(frozen=True)
class ConvexDomain:
    kind: str
    center: tuple[float, ...]
    semi_axes: tuple[float, ...]
    exponent: float = 2.0

    def __post_init__(self):
        if self.kind not in (ELLIPSOID, SUPERELLIPSE):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if len(self.center) != len(self.semi_axes):
            raise ValueError("center and semi_axes must have equal length")
        n = len(self.center)
        if n not in (2, 3):
            raise ValueError(f"unsupported dimension n={n}, expected 2 or 3")
        if any(a <= 0 for a in self.semi_axes):
            raise ValueError(f"semi-axes must be positive, got {self.semi_axes}")
        if self.kind == SUPERELLIPSE:
            if n != 2:
                raise ValueError("superellipse domains are two-dimensional")
            if self.exponent < 2:
                raise ValueError(f"superellipse exponent must be >= 2, got {self.exponent}")

    @property
    def dimension(self) -> int:
        return len(self.center)


def ellipsoid(center, semi_axes) -> ConvexDomain:
    return ConvexDomain(ELLIPSOID, tuple(float(c) for c in center), tuple(float(a) for a in semi_axes))


def superellipse(center, semi_axes, exponent) -> ConvexDomain:
    return ConvexDomain(
        SUPERELLIPSE,
        tuple(float(c) for c in center),
        tuple(float(a) for a in semi_axes),
        float(exponent),
    )


def level_value(domain: ConvexDomain, points):
    """Defining level function; < 1 inside, 1 on the boundary, > 1 outside."""
    pts = np.asarray(points, dtype=float)
    d = (pts - np.asarray(domain.center)) / np.asarray(domain.semi_axes)
    if domain.kind == ELLIPSOID:
        return np.sum(d * d, axis=-1)
    return np.sum(np.abs(d) ** domain.exponent, axis=-1)


def contains(domain: ConvexDomain, x) -> bool | np.ndarray:
    """Strict interior test (boundary points are not contained)."""
    v = level_value(domain, x) < 1.0
    return bool(v) if np.ndim(v) == 0 else v


def outward_normal(domain: ConvexDomain, points):
    """Unit outward normal of the level set through each point."""
    pts = np.asarray(points, dtype=float)
    d = pts - np.asarray(domain.center)
    a = np.asarray(domain.semi_axes)
    if domain.kind == ELLIPSOID:
        g = d / a**2
    else:
        p = domain.exponent
        g = np.sign(d) * np.abs(d / a) ** (p - 1.0) / a
    norm = np.sqrt(np.sum(g * g, axis=-1, keepdims=True))
    return g / norm


@dataclass(frozen=True)
class BoundaryQuadrature:
    """Surface quadrature: nodes on the boundary, outward unit normals and
    positive weights summing to (approximately) the surface measure."""

    points: np.ndarray = field(repr=False)
    normals: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    resolution: int

    def __len__(self) -> int:
        return self.points.shape[0]


def _superellipse_radius(domain: ConvexDomain, psi):
    """Polar gauge r(psi) of the superellipse and its psi-derivative."""
    a1, a2 = domain.semi_axes
    p = domain.exponent
    c, s = np.cos(psi), np.sin(psi)
    ga = (np.abs(c) / a1) ** p
    gb = (np.abs(s) / a2) ** p
    g = ga + gb
    # d/dpsi |cos|^p = -p sin cos |cos|^{p-2} (smooth for p >= 2)
    gp = p * (
        -s * np.sign(c) * np.abs(c) ** (p - 1.0) / a1**p
        + c * np.sign(s) * np.abs(s) ** (p - 1.0) / a2**p
    )
    r = g ** (-1.0 / p)
    rp = -(1.0 / p) * g ** (-1.0 / p - 1.0) * gp
    return r, rp


def boundary_quadrature(
    domain: ConvexDomain, resolution: int, phase: float = 0.0
) -> BoundaryQuadrature:
    """Build the boundary node set at the requested resolution.

    n = 2: ``resolution`` equally spaced parameter values with arc-length
    Jacobian weights (trapezoid rule on a periodic integrand).  The
    ellipse uses the angle parametrisation (a1 cos, a2 sin); the
    superellipse uses the polar gauge r(psi)(cos psi, sin psi), which is
    smooth for even exponents where the signed-power map is not.

    n = 3 (ellipsoid): product rule with ``resolution`` Gauss-Legendre
    nodes in the polar cosine and ``2 * resolution`` uniform azimuths,
    hence ``2 * resolution**2`` nodes in total.

    ``phase`` rotates the equally spaced angles (the periodic direction),
    which leaves the integral unchanged up to quadrature error; useful for
    probing angular discretisation effects.
    """
    if resolution < 8:
        raise ValueError(f"boundary resolution must be >= 8, got {resolution}")
    c = np.asarray(domain.center)
    n = domain.dimension
    if n == 2:
        psi = 2.0 * np.pi * np.arange(resolution) / resolution + phase
        if domain.kind == ELLIPSOID:
            a1, a2 = domain.semi_axes
            pts = c + np.stack([a1 * np.cos(psi), a2 * np.sin(psi)], axis=-1)
            speed = np.sqrt((a1 * np.sin(psi)) ** 2 + (a2 * np.cos(psi)) ** 2)
        else:
            r, rp = _superellipse_radius(domain, psi)
            pts = c + r[:, None] * np.stack([np.cos(psi), np.sin(psi)], axis=-1)
            speed = np.sqrt(r * r + rp * rp)
        w = (2.0 * np.pi / resolution) * speed
        return BoundaryQuadrature(pts, outward_normal(domain, pts), w, resolution)

    # n == 3, ellipsoid only
    a1, a2, a3 = domain.semi_axes
    rule = gauss_legendre(resolution, -1.0, 1.0)
    nphi = 2 * resolution
    phi = 2.0 * np.pi * np.arange(nphi) / nphi + phase
    u, ph = np.meshgrid(rule.nodes, phi, indexing="ij")
    wu, _ = np.meshgrid(rule.weights, phi, indexing="ij")
    st = np.sqrt(1.0 - u * u)
    pts = c + np.stack([a1 * st * np.cos(ph), a2 * st * np.sin(ph), a3 * u], axis=-1)
    jac = np.sqrt(
        (a2 * a3) ** 2 * (1.0 - u * u) * np.cos(ph) ** 2
        + (a1 * a3) ** 2 * (1.0 - u * u) * np.sin(ph) ** 2
        + (a1 * a2) ** 2 * u * u
    )
    w = wu * (2.0 * np.pi / nphi) * jac
    pts = pts.reshape(-1, 3)
    return BoundaryQuadrature(pts, outward_normal(domain, pts), w.reshape(-1), resolution)


def chord_params(x, y) -> tuple[np.ndarray, float]:
    """Unit direction and offset of the perpendicular bisector hyperplane.

    Returns (n, s) with n = (y - x)/|y - x| and s = (|y|^2 - |x|^2) /
    (2 |y - x|); the hyperplane {z : <z, n> = s} contains the midpoint
    of x and y and is orthogonal to the segment.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    diff = y - x
    dist = float(np.linalg.norm(diff))
    if dist <= DEGENERACY_CUTOFF:
        raise DegeneratePointsError(f"points coincide up to {DEGENERACY_CUTOFF}: {x}, {y}")
    direction = diff / dist
    offset = (float(np.dot(y, y)) - float(np.dot(x, x))) / (2.0 * dist)
    return direction, offset


def support_halfwidth(domain: ConvexDomain, theta) -> float:
    """Support function of the centered domain in direction theta.

    Chords at offset s touch the domain when |s - <center, theta>| equals
    this value; larger offsets miss it entirely.
    """
    th = np.asarray(theta, dtype=float)
    a = np.asarray(domain.semi_axes)
    if domain.kind == ELLIPSOID:
        return float(np.sqrt(np.sum((a * th) ** 2)))
    p = domain.exponent
    q = p / (p - 1.0)
    return float(np.sum(np.abs(a * th) ** q) ** (1.0 / q))


def _boundary_points_dense(domain: ConvexDomain, m: int) -> np.ndarray:
    if domain.dimension == 2:
        psi = 2.0 * np.pi * np.arange(m) / m
        if domain.kind == ELLIPSOID:
            a1, a2 = domain.semi_axes
            rim = np.stack([a1 * np.cos(psi), a2 * np.sin(psi)], axis=-1)
        else:
            r, _ = _superellipse_radius(domain, psi)
            rim = r[:, None] * np.stack([np.cos(psi), np.sin(psi)], axis=-1)
        return np.asarray(domain.center) + rim
    a1, a2, a3 = domain.semi_axes
    u = np.linspace(-1.0, 1.0, m)
    phi = 2.0 * np.pi * np.arange(2 * m) / (2 * m)
    uu, ph = np.meshgrid(u, phi, indexing="ij")
    st = np.sqrt(np.clip(1.0 - uu * uu, 0.0, None))
    pts = np.stack([a1 * st * np.cos(ph), a2 * st * np.sin(ph), a3 * uu], axis=-1)
    return np.asarray(domain.center) + pts.reshape(-1, 3)


def boundary_distance(domain: ConvexDomain, point) -> float:
    """Distance from a point to the boundary surface.

    Dense parameter sampling followed by local golden-section refinement;
    accurate to roughly 1e-10 of the domain scale, which is far tighter
    than any margin check needs.
    """
    p = np.asarray(point, dtype=float)

    if domain.dimension == 2:
        def dist_at(psi):
            psi = np.atleast_1d(psi)
            if domain.kind == ELLIPSOID:
                a1, a2 = domain.semi_axes
                b = np.stack([a1 * np.cos(psi), a2 * np.sin(psi)], axis=-1)
            else:
                r, _ = _superellipse_radius(domain, psi)
                b = r[:, None] * np.stack([np.cos(psi), np.sin(psi)], axis=-1)
            b = b + np.asarray(domain.center)
            return np.sqrt(np.sum((b - p) ** 2, axis=-1))

        m = 1024
        psi = 2.0 * np.pi * np.arange(m) / m
        k = int(np.argmin(dist_at(psi)))
        lo, hi = psi[k] - 2.0 * np.pi / m, psi[k] + 2.0 * np.pi / m
        invphi = (math.sqrt(5.0) - 1.0) / 2.0
        x1 = hi - invphi * (hi - lo)
        x2 = lo + invphi * (hi - lo)
        f1, f2 = dist_at(x1)[0], dist_at(x2)[0]
        for _ in range(60):
            if f1 < f2:
                hi, x2, f2 = x2, x1, f1
                x1 = hi - invphi * (hi - lo)
                f1 = dist_at(x1)[0]
            else:
                lo, x1, f1 = x1, x2, f2
                x2 = lo + invphi * (hi - lo)
                f2 = dist_at(x2)[0]
        return float(min(f1, f2))

    # n == 3: coarse grid plus two zoom rounds on the (u, phi) chart
    a = np.asarray(domain.semi_axes)
    c = np.asarray(domain.center)

    def dist_grid(u, phi):
        uu, ph = np.meshgrid(u, phi, indexing="ij")
        st = np.sqrt(np.clip(1.0 - uu * uu, 0.0, None))
        b = np.stack([a[0] * st * np.cos(ph), a[1] * st * np.sin(ph), a[2] * uu], axis=-1)
        return np.sqrt(np.sum((c + b - p) ** 2, axis=-1))

    u = np.linspace(-1.0, 1.0, 129)
    phi = np.linspace(0.0, 2.0 * np.pi, 257)
    du, dphi = u[1] - u[0], phi[1] - phi[0]
    for _ in range(4):
        d = dist_grid(u, phi)
        i, j = np.unravel_index(np.argmin(d), d.shape)
        u0, phi0 = u[i], phi[j]
        du, dphi = du / 8.0, dphi / 8.0
        u = np.clip(np.linspace(u0 - 8 * du, u0 + 8 * du, 17), -1.0, 1.0)
        phi = np.linspace(phi0 - 8 * dphi, phi0 + 8 * dphi, 17)
    return float(dist_grid(u, phi).min())


def domain_diameter(domain: ConvexDomain) -> float:
    """Diameter of the domain (sup distance between two of its points)."""
    if domain.kind == ELLIPSOID:
        return 2.0 * max(domain.semi_axes)
    # centrally symmetric, so the farthest pair is antipodal
    rim = _boundary_points_dense(domain, 4096) - np.asarray(domain.center)
    return 2.0 * float(np.sqrt(np.sum(rim * rim, axis=-1)).max())
