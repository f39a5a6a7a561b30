"""Phantoms, spherical means and the integral-transform tool chain.

The reconstruction correction operator needs high derivatives in the
offset variable of the Radon transform of the domain indicator, with a
Hilbert transform interposed in even dimension.  For ellipsoids that
composite is available in closed form; for other domains it is obtained
by tabulating the transform along one direction and differentiating the
table, wrapped up in a cached :class:`KernelProfile`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .calculus import (
    gamma_fn,
    gauss_legendre,
    interp_cubic,
    richardson,
    stencil_apply,
    stencil_derivative,
    unit_ball_volume,
)
from .geometry import (
    ELLIPSOID,
    ConvexDomain,
    level_value,
    support_halfwidth,
)

__all__ = [
    "Bump",
    "Phantom",
    "KernelProfile",
    "OutOfRegionError",
    "EndpointSingularityError",
    "phantom_eval",
    "spherical_mean",
    "sphere_means",
    "mollifier_eval",
    "mollifier_radon",
    "radon_chi",
    "radon_chi_deriv",
    "hilbert_pv",
    "hilbert_radon_chi_deriv",
    "build_kernel_profile",
    "clear_kernel_cache",
    "bump_radial",
    "bump_radial_deriv",
]

CINF = "cinf"
POLY = "poly"

_UNIT_TOL = 1e-9


class OutOfRegionError(ValueError):
    """Kernel evaluation requested too close to a tangent chord."""


class EndpointSingularityError(ValueError):
    """Principal-value evaluation point coincides with a support endpoint."""


# ---------------------------------------------------------------------------
# phantoms


@dataclass(frozen=True)
class Bump:
    """Radially symmetric bump supported on a ball.

    ``cinf`` is the peak-normalised smooth bump exp(1 - 1/(1 - r^2));
    ``poly`` is the unit-mass polynomial mollifier (1 - r^2)^mu / a of
    smoothness C^{mu-1}, scaled by the amplitude in both cases.
    """

    center: tuple[float, ...]
    radius: float
    amplitude: float = 1.0
    profile: str = CINF
    mu: int = 2

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError(f"bump radius must be positive, got {self.radius}")
        if self.profile not in (CINF, POLY):
            raise ValueError(f"unknown bump profile {self.profile!r}")
        if self.profile == POLY and self.mu < 1:
            raise ValueError(f"poly bump needs mu >= 1, got {self.mu}")

    @property
    def dimension(self) -> int:
        return len(self.center)


@dataclass(frozen=True)
class Phantom:
    """Finite sum of bumps; the initial pressure of the wave field."""

    bumps: tuple[Bump, ...]

    def __post_init__(self):
        if not self.bumps:
            return
        dims = {b.dimension for b in self.bumps}
        if len(dims) != 1:
            raise ValueError(f"bumps of mixed dimension: {sorted(dims)}")

    @property
    def dimension(self) -> int:
        if not self.bumps:
            raise ValueError("empty phantom has no dimension")
        return self.bumps[0].dimension

    def eval(self, points):
        """Evaluate at an (..., n) array of points."""
        pts = np.asarray(points, dtype=float)
        out = np.zeros(pts.shape[:-1], dtype=float)
        for b in self.bumps:
            d = (pts - np.asarray(b.center)) / b.radius
            r2 = np.sum(d * d, axis=-1)
            inside = r2 < 1.0
            if not np.any(inside):
                continue
            ri = r2[inside]
            if b.profile == CINF:
                vals = b.amplitude * np.exp(1.0 - 1.0 / (1.0 - ri))
            else:
                a = _mollifier_norm(b.dimension, b.mu)
                vals = b.amplitude * (1.0 - ri) ** b.mu / (a * b.radius**b.dimension)
            out[inside] += vals
        return out

    def peak(self) -> float:
        """Upper estimate of max |f| (bump centers plus pairwise overlap)."""
        if not self.bumps:
            return 0.0
        centers = np.array([b.center for b in self.bumps], dtype=float)
        return float(np.abs(self.eval(centers)).max())


def phantom_eval(f: Phantom, x):
    return f.eval(x)


def bump_radial(bump: Bump, rho, n: int | None = None):
    """Profile value of a single bump at distance rho from its center."""
    n = bump.dimension if n is None else n
    rho = np.asarray(rho, dtype=float)
    u = (rho / bump.radius) ** 2
    out = np.zeros_like(u)
    inside = u < 1.0
    if bump.profile == CINF:
        out[inside] = bump.amplitude * np.exp(1.0 - 1.0 / (1.0 - u[inside]))
    else:
        a = _mollifier_norm(n, bump.mu)
        out[inside] = bump.amplitude * (1.0 - u[inside]) ** bump.mu / (a * bump.radius**n)
    return out


def bump_radial_deriv(bump: Bump, rho, n: int | None = None):
    """Radial derivative of :func:`bump_radial`."""
    n = bump.dimension if n is None else n
    rho = np.asarray(rho, dtype=float)
    u = (rho / bump.radius) ** 2
    out = np.zeros_like(u)
    inside = u < 1.0
    ui, ri = u[inside], rho[inside]
    du = 2.0 * ri / bump.radius**2
    if bump.profile == CINF:
        val = bump.amplitude * np.exp(1.0 - 1.0 / (1.0 - ui))
        out[inside] = -val / (1.0 - ui) ** 2 * du
    else:
        a = _mollifier_norm(n, bump.mu)
        out[inside] = (
            -bump.amplitude * bump.mu * (1.0 - ui) ** (bump.mu - 1) / (a * bump.radius**n) * du
        )
    return out


# ---------------------------------------------------------------------------
# spherical means


@lru_cache(maxsize=None)
def _mean_directions(n: int, m: int):
    """Unit directions and mean weights (weights sum to one)."""
    if n == 2:
        ang = 2.0 * np.pi * np.arange(m) / m
        dirs = np.stack([np.cos(ang), np.sin(ang)], axis=-1)
        w = np.full(m, 1.0 / m)
    else:
        rule = gauss_legendre(m, -1.0, 1.0)
        nphi = 2 * m
        phi = 2.0 * np.pi * np.arange(nphi) / nphi
        u, ph = np.meshgrid(rule.nodes, phi, indexing="ij")
        wu, _ = np.meshgrid(rule.weights, phi, indexing="ij")
        st = np.sqrt(1.0 - u * u)
        dirs = np.stack([st * np.cos(ph), st * np.sin(ph), u], axis=-1).reshape(-1, 3)
        w = (wu / (2.0 * nphi)).reshape(-1)
    dirs.setflags(write=False)
    w.setflags(write=False)
    return dirs, w


def _as_eval(f):
    return f.eval if hasattr(f, "eval") else f


def sphere_means(f, x, radii, m: int, n: int | None = None):
    """Means of f over spheres around x, batched over an array of radii.

    Negative radii are treated by absolute value, which is what the
    even-in-radius extension of the means requires.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[-1] if n is None else n
    r = np.abs(np.asarray(radii, dtype=float))
    dirs, w = _mean_directions(n, m)
    pts = x + r[..., None, None] * dirs
    vals = _as_eval(f)(pts)
    return np.sum(vals * w, axis=-1)


def spherical_mean(f, x, r: float, m: int) -> float:
    """Average of f over the sphere of radius r around x.

    Trapezoid rule on the circle for n = 2; Gauss-Legendre in the polar
    cosine times uniform azimuths for n = 3.  Both converge spectrally
    for smooth integrands.
    """
    if m < 4:
        raise ValueError(f"spherical_mean resolution must be >= 4, got m={m}")
    if r < 0:
        raise ValueError(f"radius must be nonnegative, got {r}")
    x = np.asarray(x, dtype=float)
    if r == 0.0:
        return float(_as_eval(f)(x[None, :])[0])
    return float(sphere_means(f, x, np.asarray(r), m))


# ---------------------------------------------------------------------------
# mollifier pair


def _mollifier_norm(n: int, mu: int) -> float:
    """Normalisation a with integral of (1 - |x|^2)^mu over the unit ball."""
    return math.pi ** (n / 2.0) * gamma_fn(mu + 1.0) / gamma_fn(n / 2.0 + mu + 1.0)


def mollifier_eval(mu: int, eps: float, x, n: int | None = None):
    """Unit-mass mollifier eps^{-n} psi_mu(x / eps) at x (or a batch)."""
    if mu < 1:
        raise ValueError(f"mollifier order must be >= 1, got mu={mu}")
    if eps <= 0:
        raise ValueError(f"mollifier width must be positive, got eps={eps}")
    pts = np.asarray(x, dtype=float)
    scalar = pts.ndim == 1
    n = pts.shape[-1] if n is None else n
    r2 = np.sum((pts / eps) ** 2, axis=-1)
    a = _mollifier_norm(n, mu)
    out = np.where(r2 < 1.0, (1.0 - np.minimum(r2, 1.0)) ** mu / (a * eps**n), 0.0)
    return float(out) if scalar else out


def mollifier_radon(mu: int, eps: float, s, n: int):
    """Radon transform of the mollifier: an explicit one-dimensional profile.

    Equals Gamma(n/2 + mu + 1) / (eps sqrt(pi) Gamma((n-1)/2 + mu + 1)) *
    (1 - s^2/eps^2)^{(n-3)/2 + mu + 1} for |s| < eps and zero beyond, so
    its mass in s is one as well.
    """
    if mu < 1:
        raise ValueError(f"mollifier order must be >= 1, got mu={mu}")
    if eps <= 0:
        raise ValueError(f"mollifier width must be positive, got eps={eps}")
    ss = np.asarray(s, dtype=float)
    scalar = ss.ndim == 0
    z2 = (ss / eps) ** 2
    pref = gamma_fn(n / 2.0 + mu + 1.0) / (eps * math.sqrt(math.pi) * gamma_fn((n - 1) / 2.0 + mu + 1.0))
    power = (n - 3) / 2.0 + mu + 1.0
    out = np.where(z2 < 1.0, pref * (1.0 - np.minimum(z2, 1.0)) ** power, 0.0)
    return float(out) if scalar else out


# ---------------------------------------------------------------------------
# Radon transform of the domain indicator


def _check_unit(theta) -> np.ndarray:
    th = np.asarray(theta, dtype=float)
    if abs(float(np.linalg.norm(th)) - 1.0) > _UNIT_TOL:
        raise ValueError(f"direction must be a unit vector, got |theta| = {np.linalg.norm(th)}")
    return th


def _max_radius(domain: ConvexDomain) -> float:
    if domain.kind == ELLIPSOID:
        return max(domain.semi_axes)
    # star-shaped bound: largest polar-gauge radius over a dense angle set
    psi = np.linspace(0.0, 2.0 * np.pi, 4097)
    a1, a2 = domain.semi_axes
    p = domain.exponent
    g = (np.abs(np.cos(psi)) / a1) ** p + (np.abs(np.sin(psi)) / a2) ** p
    return float((g ** (-1.0 / p)).max())


def radon_chi(domain: ConvexDomain, theta, s):
    """(n-1)-volume of the section of the domain by the hyperplane
    {<x, theta> = s}.

    Ellipsoids reduce to the unit-ball section in stretched coordinates;
    the superellipse chord is located by convex bracketing and bisection
    along the line.
    """
    th = _check_unit(theta)
    ss = np.asarray(s, dtype=float)
    scalar = ss.ndim == 0
    sp = np.atleast_1d(ss) - float(np.dot(domain.center, th))

    if domain.kind == ELLIPSOID:
        n = domain.dimension
        a = np.asarray(domain.semi_axes)
        w = float(np.sqrt(np.sum((a * th) ** 2)))
        z2 = (sp / w) ** 2
        pref = float(np.prod(a)) * unit_ball_volume(n - 1) / w
        out = np.where(z2 < 1.0, pref * (1.0 - np.minimum(z2, 1.0)) ** ((n - 1) / 2.0), 0.0)
        return float(out[0]) if scalar else out.reshape(ss.shape)

    out = _superellipse_chord(domain, th, sp)
    return float(out[0]) if scalar else out.reshape(ss.shape)


def _superellipse_chord(domain: ConvexDomain, th: np.ndarray, sp: np.ndarray) -> np.ndarray:
    c = np.asarray(domain.center)
    perp = np.array([-th[1], th[0]])
    base = c + sp[:, None] * th  # chord foot points
    bracket = _max_radius(domain) + 1.0

    def lev(tau):
        return level_value(domain, base + tau[:, None] * perp)

    # golden-section minimisation of the convex level function along each line
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    lo = np.full(sp.shape, -bracket)
    hi = np.full(sp.shape, bracket)
    x1 = hi - invphi * (hi - lo)
    x2 = lo + invphi * (hi - lo)
    f1, f2 = lev(x1), lev(x2)
    for _ in range(90):
        take = f1 < f2
        hi = np.where(take, x2, hi)
        lo = np.where(take, lo, x1)
        x1n = hi - invphi * (hi - lo)
        x2n = lo + invphi * (hi - lo)
        # only one of the two endpoints moved; refresh both values cheaply
        x1, x2 = x1n, x2n
        f1, f2 = lev(x1), lev(x2)
    tau_min = 0.5 * (lo + hi)
    fmin = lev(tau_min)
    hit = fmin < 1.0

    def bisect(inner, outer):
        a_, b_ = inner.copy(), outer.copy()
        for _ in range(64):
            mid = 0.5 * (a_ + b_)
            is_in = lev(mid) < 1.0
            a_ = np.where(is_in, mid, a_)
            b_ = np.where(is_in, b_, mid)
        return 0.5 * (a_ + b_)

    tau_hi = bisect(tau_min, np.full(sp.shape, bracket))
    tau_lo = bisect(tau_min, np.full(sp.shape, -bracket))
    return np.where(hit, tau_hi - tau_lo, 0.0)


def _offset_window(domain: ConvexDomain, th: np.ndarray, s: float, margin: float):
    if margin < 0:
        raise ValueError(f"margin must be nonnegative, got {margin}")
    w = support_halfwidth(domain, th)
    sp = float(s) - float(np.dot(domain.center, th))
    if abs(sp) > w - margin:
        raise OutOfRegionError(
            f"chord offset {sp:.6g} outside safe window |s'| <= {w - margin:.6g} "
            f"(support halfwidth {w:.6g}, margin {margin:.6g})"
        )
    return w, sp


def radon_chi_deriv(
    domain: ConvexDomain,
    theta,
    s: float,
    order: int,
    *,
    method: str = "auto",
    margin: float = 0.0,
    fd_step: float | None = None,
) -> float:
    """Derivative of order ``order`` of the section profile in the offset.

    Ellipsoids differentiate the closed form; anything else (or
    ``method='fd'``) uses fourth-order central differences of
    :func:`radon_chi` with Richardson extrapolation.  Chords outside the
    safe offset window raise :class:`OutOfRegionError` since the
    derivatives blow up at tangency.
    """
    th = _check_unit(theta)
    n = domain.dimension
    if not 0 <= order <= n:
        raise ValueError(f"derivative order must be within 0..{n}, got {order}")
    if method not in ("auto", "analytic", "fd"):
        raise ValueError(f"unknown method {method!r}")
    w, sp = _offset_window(domain, th, s, margin)
    if order > 0 and abs(sp) >= w:
        raise OutOfRegionError("chord is tangent to the domain")
    if method == "auto":
        method = "analytic" if domain.kind == ELLIPSOID else "fd"
    if method == "analytic":
        if domain.kind != ELLIPSOID:
            raise ValueError("analytic derivatives exist only for ellipsoids")
        return _ellipsoid_profile_deriv(domain, th, sp, order)

    if order == 0:
        return float(radon_chi(domain, th, s))
    if fd_step is None:
        fd_step = min(1e-2 * w, (w - abs(sp)) / 8.0)
    h = float(fd_step)
    if abs(sp) + 6.0 * h >= w:
        h = (w - abs(sp)) / 8.0

    def f(t):
        return float(radon_chi(domain, th, t))

    d_h = stencil_derivative(f, s, h, order)
    d_2h = stencil_derivative(f, s, 2.0 * h, order)
    return float(richardson(d_h, d_2h))


def _ellipsoid_profile_deriv(domain: ConvexDomain, th: np.ndarray, sp: float, order: int) -> float:
    n = domain.dimension
    a = np.asarray(domain.semi_axes)
    w = float(np.sqrt(np.sum((a * th) ** 2)))
    pref = float(np.prod(a)) * unit_ball_volume(n - 1) / w
    z = sp / w
    if n == 3:
        if order == 0:
            return pref * (1.0 - z * z)
        if order == 1:
            return -2.0 * pref * z / w
        if order == 2:
            return -2.0 * pref / w**2
        return 0.0
    # n == 2
    q = 1.0 - z * z
    if order == 0:
        return pref * math.sqrt(q)
    if order == 1:
        return -pref * z / (w * math.sqrt(q))
    return -pref / (w**2 * q**1.5)


# ---------------------------------------------------------------------------
# principal-value Hilbert transform


def hilbert_pv(phi, support, s: float, m: int) -> float:
    """Hilbert transform (1/pi) p.v. integral of phi(t)/(s - t) dt for a
    function supported on [a, b].

    Inside the support the singularity is subtracted:
    (1/pi) [ int (phi(t) - phi(s))/(s - t) dt + phi(s) ln((s-a)/(b-s)) ].
    """
    a, b = (float(support[0]), float(support[1]))
    if not a < b:
        raise ValueError(f"empty support ({a}, {b})")
    if m < 64:
        raise ValueError(f"hilbert_pv needs m >= 64 quadrature nodes, got {m}")
    if min(abs(s - a), abs(s - b)) <= 1e-12:
        raise EndpointSingularityError(f"evaluation point {s} coincides with a support endpoint")
    if s < a or s > b:
        rule = gauss_legendre(m, a, b)
        vals = np.asarray(phi(rule.nodes), dtype=float)
        return float(np.sum(rule.weights * vals / (s - rule.nodes)) / math.pi)
    phis = float(phi(np.asarray([s]))[0])
    total = phis * math.log((s - a) / (b - s))
    half = max(m // 2, 32)
    for lo, hi in ((a, s), (s, b)):
        rule = gauss_legendre(half, lo, hi)
        vals = np.asarray(phi(rule.nodes), dtype=float)
        total += float(np.sum(rule.weights * (vals - phis) / (s - rule.nodes)))
    return total / math.pi


# ---------------------------------------------------------------------------
# tabulated kernel profiles


_PAD = 8  # table nodes kept outside the queryable window for FD stencils


@dataclass(frozen=True)
class KernelProfile:
    """Per-direction table of the section profile, optionally its Hilbert
    transform, and offset-derivative columns of both.

    The query window is the offset range at distance >= ``margin`` from
    tangency; the value grid extends a little beyond it so every window
    point has a full interior difference stencil.
    """

    domain: ConvexDomain
    theta: tuple[float, ...]
    order: int
    margin: float
    with_hilbert: bool
    s_center: float
    halfwidth: float
    s_grid: np.ndarray
    rchi: np.ndarray
    rchi_d: dict
    hrchi: np.ndarray | None
    hrchi_d: dict | None

    @property
    def query_halfwidth(self) -> float:
        return self.halfwidth - self.margin

    def _column(self, order: int, hilbert: bool) -> np.ndarray:
        if hilbert:
            if self.hrchi is None:
                raise ValueError("profile was built without Hilbert columns")
            return self.hrchi if order == 0 else self.hrchi_d[order]
        return self.rchi if order == 0 else self.rchi_d[order]

    def eval(self, s, order: int | None = None, hilbert: bool | None = None):
        order = self.order if order is None else order
        hilbert = self.with_hilbert if hilbert is None else hilbert
        if not 0 <= order <= self.order:
            raise ValueError(f"profile holds derivative orders 0..{self.order}, got {order}")
        ss = np.asarray(s, dtype=float)
        scalar = ss.ndim == 0
        off = np.atleast_1d(ss) - self.s_center
        if np.any(np.abs(off) > self.query_halfwidth + 1e-12):
            raise OutOfRegionError(
                f"query offset beyond safe window +-{self.query_halfwidth:.6g} "
                f"around {self.s_center:.6g}"
            )
        col = self._column(order, hilbert)
        ds = self.s_grid[1] - self.s_grid[0]
        out = interp_cubic(np.atleast_1d(ss), self.s_grid[0], ds, col)
        return float(out[0]) if scalar else out.reshape(ss.shape)


def _profile_tables(domain, th, s_grid, rchi_vals, num_quad, s_center, w):
    """Hilbert transform of the section profile on the table grid.

    Uses the sine substitution t = s_c + w sin(beta), which absorbs the
    root-type edge behaviour of convex section profiles, with the value
    at the singular point subtracted.
    """
    rule = gauss_legendre(num_quad, -0.5 * math.pi, 0.5 * math.pi)
    t_nodes = s_center + w * np.sin(rule.nodes)
    jac = w * np.cos(rule.nodes) * rule.weights
    phi_nodes = radon_chi(domain, th, t_nodes)
    # local slope for near-coincident node/grid pairs (removable point)
    slope = np.gradient(phi_nodes, t_nodes)
    den = s_grid[:, None] - t_nodes[None, :]
    num = phi_nodes[None, :] - rchi_vals[:, None]
    tiny = np.abs(den) < 1e-9 * w
    ratio = np.where(tiny, -slope[None, :], num / np.where(tiny, 1.0, den))
    core = np.sum(ratio * jac[None, :], axis=1)
    a, b = s_center - w, s_center + w
    log_term = rchi_vals * np.log((s_grid - a) / (b - s_grid))
    return (core + log_term) / math.pi


def build_kernel_profile(
    domain: ConvexDomain,
    theta,
    order: int,
    *,
    margin: float,
    num_table: int = 512,
    num_quad: int = 256,
    with_hilbert: bool | None = None,
) -> KernelProfile:
    th = _check_unit(theta)
    n = domain.dimension
    if with_hilbert is None:
        with_hilbert = n % 2 == 0
    if not 0 < order <= n:
        raise ValueError(f"profile order must lie in 1..{n}, got {order}")
    if num_table < 64:
        raise ValueError(f"profile table needs >= 64 points, got {num_table}")
    if margin <= 0:
        raise ValueError(f"profile margin must be positive, got {margin}")
    w = support_halfwidth(domain, th)
    if margin >= w:
        raise ValueError(f"margin {margin} exceeds the support halfwidth {w}")
    s_center = float(np.dot(domain.center, th))
    q = w - margin
    v = q / (1.0 - 2.0 * _PAD / (num_table - 1))
    if v >= w * (1.0 - 1e-9):
        raise ValueError(
            f"margin {margin} too small for a {num_table}-point table; "
            "increase the margin or the table size"
        )
    s_grid = s_center + np.linspace(-v, v, num_table)
    ds = s_grid[1] - s_grid[0]
    rvals = radon_chi(domain, th, s_grid)
    rchi_d = {}
    for m_ in range(1, order + 1):
        d1 = stencil_apply(rvals, ds, m_, stride=1)
        d2 = stencil_apply(rvals, ds, m_, stride=2)
        rchi_d[m_] = richardson(d1, d2)
    hvals = None
    hrchi_d = None
    if with_hilbert:
        hvals = _profile_tables(domain, th, s_grid, rvals, num_quad, s_center, w)
        hrchi_d = {}
        for m_ in range(1, order + 1):
            d1 = stencil_apply(hvals, ds, m_, stride=1)
            d2 = stencil_apply(hvals, ds, m_, stride=2)
            hrchi_d[m_] = richardson(d1, d2)
    return KernelProfile(
        domain=domain,
        theta=tuple(float(t) for t in th),
        order=order,
        margin=float(margin),
        with_hilbert=with_hilbert,
        s_center=s_center,
        halfwidth=w,
        s_grid=s_grid,
        rchi=rvals,
        rchi_d=rchi_d,
        hrchi=hvals,
        hrchi_d=hrchi_d,
    )


_PROFILE_CACHE: dict = {}


def clear_kernel_cache() -> None:
    _PROFILE_CACHE.clear()


def _cached_profile(domain, th, order, margin, num_table, num_quad, with_hilbert):
    key = (
        domain,
        tuple(round(float(t), 12) for t in th),
        order,
        round(float(margin), 12),
        num_table,
        num_quad,
        with_hilbert,
    )
    prof = _PROFILE_CACHE.get(key)
    if prof is None:
        prof = build_kernel_profile(
            domain,
            th,
            order,
            margin=margin,
            num_table=num_table,
            num_quad=num_quad,
            with_hilbert=with_hilbert,
        )
        _PROFILE_CACHE[key] = prof
    return prof


def hilbert_radon_chi_deriv(
    domain: ConvexDomain,
    theta,
    s: float,
    order: int,
    *,
    margin: float,
    num_table: int = 512,
    num_quad: int = 256,
    profile: KernelProfile | None = None,
) -> float:
    """Offset derivative of the Hilbert transform of the section profile.

    Built by tabulating the transform along the direction and
    differentiating the table; profiles are cached per direction.
    """
    th = _check_unit(theta)
    if profile is None:
        profile = _cached_profile(domain, th, order, margin, num_table, num_quad, True)
    return float(profile.eval(s, order=order, hilbert=True))
