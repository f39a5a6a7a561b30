"""Numerical certification of the identities the inversion rests on.

Each check computes both sides of one identity through routes that share
as little code as possible (closed radial forms against quadrature
solvers, symbolic coefficient expansion against recursion, exact Radon
formulas against direct integrals) and reports the residual together
with the resolution parameters that produced it.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .calculus import (
    coeff_c,
    gauss_legendre,
    richardson,
    stencil_derivative,
    unit_ball_volume,
)
from .forward import SolverParams, huygens_horizon, support_margin, wave_solution, wave_solution_even_alt
from .geometry import ConvexDomain, boundary_quadrature
from .transforms import (
    Bump,
    Phantom,
    bump_radial,
    bump_radial_deriv,
    mollifier_eval,
    mollifier_radon,
    sphere_means,
)

__all__ = [
    "IdentityReport",
    "radial_pressure",
    "radial_velocity",
    "phantom_pressure",
    "phantom_velocity",
    "check_integral_identity",
    "check_lemma_coefficients",
    "check_lemma_symbolic",
    "check_even_equivalence",
    "check_mollifier",
]

_REL_FLOOR = 1e-14


@dataclass(frozen=True)
class IdentityReport:
    """Both sides of one checked identity plus how they were computed."""

    name: str
    lhs: float
    rhs: float
    params: dict = field(default_factory=dict)
    runtime: float = 0.0

    @property
    def abs_residual(self) -> float:
        return abs(self.lhs - self.rhs)

    @property
    def rel_residual(self) -> float:
        return self.abs_residual / max(abs(self.lhs), _REL_FLOOR)


def _sphere_surface(n: int) -> float:
    return n * unit_ball_volume(n)


# ---------------------------------------------------------------------------
# closed radial wave fields (n = 3)
#
# For a single radial profile b and d = |x - center|, the free-space
# solution with data (b, 0) is u = [(t+d) b(t+d) - (t-d) b(|t-d|)] / (2d)
# and with data (0, b) it is v = (1/2d) * integral of rho b(rho) over
# (|t-d|, t+d).  Sums of bumps superpose.  These bypass every quadrature
# of the forward module, which keeps the identity checks independent.


def radial_pressure(bump: Bump, d, t):
    """Solution with data (bump, 0) at distance d from its center, n = 3."""
    d, t = np.broadcast_arrays(np.asarray(d, dtype=float), np.asarray(t, dtype=float))
    small = d < 1e-8 * bump.radius
    ds = np.where(small, 1.0, d)
    plus = (t + ds) * bump_radial(bump, t + ds, 3)
    minus = (t - ds) * bump_radial(bump, np.abs(t - ds), 3)
    u = (plus - minus) / (2.0 * ds)
    lim = bump_radial(bump, t, 3) + t * bump_radial_deriv(bump, t, 3)
    return np.where(small, lim, u)


def radial_velocity(bump: Bump, d, t, quad: int = 48):
    """Solution with data (0, bump) at distance d from its center, n = 3."""
    d, t = np.broadcast_arrays(np.asarray(d, dtype=float), np.asarray(t, dtype=float))
    eps = bump.radius
    lo = np.clip(np.abs(t - d), 0.0, eps)
    hi = np.clip(t + d, 0.0, eps)
    length = np.maximum(hi - lo, 0.0)
    rule = gauss_legendre(quad, 0.0, 1.0)
    rho = lo[..., None] + length[..., None] * rule.nodes
    integral = length * np.sum(rho * bump_radial(bump, rho, 3) * rule.weights, axis=-1)
    small = d < 1e-8 * eps
    v = integral / (2.0 * np.where(small, 1.0, d))
    return np.where(small, t * bump_radial(bump, t, 3), v)


def phantom_pressure(f: Phantom, pts, t):
    pts = np.asarray(pts, dtype=float)
    t = np.asarray(t, dtype=float)
    out = np.zeros(np.broadcast_shapes(pts.shape[:-1], t.shape))
    for b in f.bumps:
        d = np.sqrt(np.sum((pts - np.asarray(b.center)) ** 2, axis=-1))
        out = out + radial_pressure(b, d, t)
    return out


def phantom_velocity(f: Phantom, pts, t, quad: int = 48):
    pts = np.asarray(pts, dtype=float)
    t = np.asarray(t, dtype=float)
    out = np.zeros(np.broadcast_shapes(pts.shape[:-1], t.shape))
    for b in f.bumps:
        d = np.sqrt(np.sum((pts - np.asarray(b.center)) ** 2, axis=-1))
        out = out + radial_velocity(b, d, t, quad=quad)
    return out


# ---------------------------------------------------------------------------
# integral identity (n = 3)


def _support_box(f: Phantom, n: int):
    if not f.bumps:
        return None
    lo = np.full(n, np.inf)
    hi = np.full(n, -np.inf)
    for b in f.bumps:
        c = np.asarray(b.center, dtype=float)
        lo = np.minimum(lo, c - b.radius)
        hi = np.maximum(hi, c + b.radius)
    return lo, hi


def _product_integral(f: Phantom, g: Phantom, m: int) -> float:
    """Integral of f*g over the intersection of the support boxes."""
    n = f.dimension
    bf, bg = _support_box(f, n), _support_box(g, n)
    if bf is None or bg is None:
        return 0.0
    lo = np.maximum(bf[0], bg[0])
    hi = np.minimum(bf[1], bg[1])
    if np.any(lo >= hi):
        return 0.0
    rules = [gauss_legendre(m, a, b) for a, b in zip(lo, hi)]
    mesh = np.meshgrid(*[r.nodes for r in rules], indexing="ij")
    pts = np.stack([mm.reshape(-1) for mm in mesh], axis=-1)
    wmesh = np.meshgrid(*[r.weights for r in rules], indexing="ij")
    w = np.ones(pts.shape[0])
    for wm in wmesh:
        w = w * wm.reshape(-1)
    return float(np.sum(w * f.eval(pts) * g.eval(pts)))


def check_integral_identity(
    f: Phantom,
    g: Phantom,
    domain: ConvexDomain,
    level: int = 0,
    *,
    phase: float = 0.0,
    velocity_quad: int = 48,
    chunk: int = 256,
) -> IdentityReport:
    """Certify that the product integral of the two initial-data fields
    equals twice the boundary flux term minus the Laplacian volume term.

    Both wave fields are evaluated through the closed radial forms, so the
    residual measures quadrature and finite-difference error only.  The
    ``level`` parameter doubles every node count and halves every step.
    """
    t0 = time.perf_counter()
    n = domain.dimension
    if n != 3:
        raise ValueError(f"integral identity check supports dimension 3 only, got {n}")
    if level < 0:
        raise ValueError(f"level must be >= 0, got {level}")
    for tag, ph in (("f", f), ("g", g)):
        if ph.bumps and support_margin(ph, domain) <= 0:
            raise ValueError(f"phantom {tag} support reaches the boundary of the domain")

    scale = 1 << level
    res_b = 16 * scale
    nt = 48 * scale
    m_rad, m_pol, m_azi = 20 * scale, 12 * scale, 24 * scale
    m_box = 24 * scale
    vq = velocity_quad * scale
    h_lap = 1e-2 * min(domain.semi_axes) / scale
    h_nu = 1e-3 * min(domain.semi_axes) / scale

    boundary = boundary_quadrature(domain, res_b, phase=phase)
    horizon = 0.0
    if f.bumps and g.bumps:
        horizon = min(huygens_horizon(f, boundary), huygens_horizon(g, boundary))
    params = {
        "level": level,
        "phase": phase,
        "boundary_res": res_b,
        "time_quad": nt,
        "volume_rule": (m_rad, m_pol, m_azi),
        "box_quad": m_box,
        "h_lap": h_lap,
        "h_nu": h_nu,
        "horizon": horizon,
    }

    lhs = _product_integral(f, g, m_box)
    if horizon <= 0.0:
        params.update({"term_boundary": 0.0, "term_volume": 0.0})
        return IdentityReport("integral-identity", lhs, 0.0, params, time.perf_counter() - t0)

    trule = gauss_legendre(nt, 0.0, horizon)

    # boundary term: 2 * sum over nodes and times of v * du/dnu
    pts, nus, wb = boundary.points, boundary.normals, boundary.weights
    vel = phantom_velocity(g, pts[:, None, :], trule.nodes, quad=vq)
    offs = np.array([-2.0, -1.0, 1.0, 2.0]) * h_nu
    stw = np.array([1.0, -8.0, 8.0, -1.0]) / (12.0 * h_nu)
    shifted = pts[:, None, :] + offs[None, :, None] * nus[:, None, :]
    pshift = phantom_pressure(f, shifted[:, :, None, :], trule.nodes)
    du = np.tensordot(stw, np.moveaxis(pshift, 1, 0), axes=(0, 0))
    term_boundary = 2.0 * float(wb @ (du * vel) @ trule.weights)

    # volume term: integral over the domain of the 7-point Laplacian of u*v
    rr = gauss_legendre(m_rad, 0.0, 1.0)
    pr = gauss_legendre(m_pol, -1.0, 1.0)
    azi = 2.0 * np.pi * (np.arange(m_azi) + 0.5) / m_azi + phase
    uu, ph_ = np.meshgrid(pr.nodes, azi, indexing="ij")
    wu, _ = np.meshgrid(pr.weights, azi, indexing="ij")
    st = np.sqrt(1.0 - uu * uu)
    dirs = np.stack([st * np.cos(ph_), st * np.sin(ph_), uu], axis=-1).reshape(-1, 3)
    wsph = (wu * (2.0 * np.pi / m_azi)).reshape(-1)
    a = np.asarray(domain.semi_axes)
    nodes = (np.asarray(domain.center) + rr.nodes[:, None, None] * dirs[None, :, :] * a).reshape(-1, 3)
    wvol = (float(np.prod(a)) * (rr.weights * rr.nodes**2)[:, None] * wsph[None, :]).reshape(-1)

    stencil = np.zeros((7, 3))
    for i in range(3):
        stencil[1 + 2 * i, i] = h_lap
        stencil[2 + 2 * i, i] = -h_lap
    term_volume = 0.0
    for lo_i in range(0, nodes.shape[0], chunk):
        block = nodes[lo_i : lo_i + chunk]
        sp = block[:, None, :] + stencil[None, :, :]
        pp = phantom_pressure(f, sp[:, :, None, :], trule.nodes)
        vv = phantom_velocity(g, sp[:, :, None, :], trule.nodes, quad=vq)
        prod = pp * vv
        lap = (np.sum(prod[:, 1:, :], axis=1) - 6.0 * prod[:, 0, :]) / h_lap**2
        term_volume += float(wvol[lo_i : lo_i + chunk] @ lap @ trule.weights)

    rhs = term_boundary - term_volume
    params.update({"term_boundary": term_boundary, "term_volume": term_volume})
    return IdentityReport("integral-identity", lhs, rhs, params, time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# coefficient recursion behind the iterated (1/t d/dt) reduction


def _ball_profile(g, x, n: int, m_phi: int, m_mean: int):
    """A(t) = integral over the unit ball of g(x + t y)/sqrt(1 - |y|^2).

    In polar form this is the surface measure times the integral over
    (0, pi/2) of sin^{n-1}(phi) M g(x, t sin phi); the sine substitution
    removes the inverse-root endpoint.
    """
    rule = gauss_legendre(m_phi, 0.0, 0.5 * math.pi)
    sin_phi = np.sin(rule.nodes)
    wphi = rule.weights * sin_phi ** (n - 1)
    surf = _sphere_surface(n)

    def profile(t: float) -> float:
        means = sphere_means(g, x, t * sin_phi, m_mean, n=n)
        return surf * float(np.sum(means * wphi))

    return profile


def check_lemma_coefficients(
    n: int,
    k: int,
    g,
    x,
    t: float,
    *,
    level: int = 0,
) -> IdentityReport:
    """Compare (1/t d/dt)^k of the singular ball integral, computed by
    nested differencing of t^{n-1} A(t), against the claimed coefficient
    expansion sum of c_{k,l} t^{n-(2k+1-l)} A^{(l)}(t).

    The two sides use deliberately different quadrature resolutions so a
    shared discretisation cannot mask a wrong coefficient.
    """
    t0 = time.perf_counter()
    if n not in (2, 3):
        raise ValueError(f"numeric lemma check supports n in (2, 3), got {n}")
    if k not in (1, 2):
        raise ValueError(f"nested differencing is implemented for k in (1, 2), got {k}")
    if not 0.0 < t < 2.0:
        raise ValueError(f"evaluation time must lie in (0, 2), got {t}")
    x = np.asarray(x, dtype=float)
    scale = 1 << level
    m_phi, m_mean = 40 * scale, 48 * scale
    h1 = 1e-3 * t / scale
    h2 = 1e-2 * t / scale

    lhs_profile = _ball_profile(g, x, n, m_phi, m_mean)

    def ball_integral(tt: float) -> float:
        return tt ** (n - 1) * lhs_profile(tt)

    def once(tt: float) -> float:
        return stencil_derivative(ball_integral, tt, h1, 1) / tt

    if k == 1:
        lhs = once(t)
    else:
        lhs = stencil_derivative(once, t, h2, 1) / t

    rhs_profile = _ball_profile(g, x, n, m_phi + 17, m_mean + 9)
    rhs = 0.0
    for l in range(k + 1):
        if l == 0:
            dl = rhs_profile(t)
        else:
            dl = stencil_derivative(rhs_profile, t, h1, l)
        rhs += coeff_c(n, k, l) * t ** (n - (2 * k + 1 - l)) * dl

    params = {
        "n": n,
        "k": k,
        "t": t,
        "level": level,
        "phi_quad": m_phi,
        "mean_res": m_mean,
        "h_inner": h1,
        "h_outer": h2,
    }
    return IdentityReport(f"lemma-coefficients-n{n}k{k}", lhs, rhs, params, time.perf_counter() - t0)


def _apply_inv_t_dt(terms: dict) -> dict:
    """One application of (1/t d/dt) to a sum of t^p A^{(l)} monomials."""
    out: dict = {}
    for (p, l), c in terms.items():
        if p != 0:
            key = (p - 2, l)
            out[key] = out.get(key, Fraction(0)) + c * p
        key = (p - 1, l + 1)
        out[key] = out.get(key, Fraction(0)) + c
    return {key: c for key, c in out.items() if c != 0}


def check_lemma_symbolic(n: int, k: int) -> IdentityReport:
    """Exact-rational expansion of (1/t d/dt)^k (t^{n-1} A(t)) against the
    claimed coefficient table; A stays a formal symbol, so the comparison
    is coefficient-by-coefficient with no quadrature at all."""
    t0 = time.perf_counter()
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    terms = {(n - 1, 0): Fraction(1)}
    for _ in range(k):
        terms = _apply_inv_t_dt(terms)
    claimed = {
        (n - (2 * k + 1 - l), l): Fraction(coeff_c(n, k, l)) for l in range(k + 1)
    }
    keys = set(terms) | set(claimed)
    max_diff = max(
        (abs(terms.get(key, Fraction(0)) - claimed.get(key, Fraction(0))) for key in keys),
        default=Fraction(0),
    )
    # generic-point evaluation so lhs/rhs are honest numbers, not checksums
    t_gen = 1.37
    a_gen = [0.9 / (1.0 + 0.61 * l) for l in range(k + 1)]
    lhs = sum(float(c) * t_gen**p * a_gen[l] for (p, l), c in terms.items())
    rhs = sum(float(c) * t_gen**p * a_gen[l] for (p, l), c in claimed.items())
    params = {"n": n, "k": k, "max_coeff_diff": float(max_diff), "terms": len(terms)}
    return IdentityReport(f"lemma-symbolic-n{n}k{k}", lhs, rhs, params, time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# equivalence of the two even-dimensional representations


def check_even_equivalence(
    f: Phantom,
    points,
    times,
    params: SolverParams | None = None,
) -> IdentityReport:
    """Worst disagreement between the sine-substitution and Chebyshev-angle
    arrangements of the two-dimensional solution, scaled by the phantom peak.

    Both arrangements integrate the same discrete radial means, so the
    direction-set count only needs to keep the mean function smooth; the
    default parameters put the radial rules deep in their spectral range.
    """
    t0 = time.perf_counter()
    if f.dimension != 2:
        raise ValueError(f"even-route equivalence applies to dimension 2, got {f.dimension}")
    if params is None:
        params = SolverParams(mean_res=256, radial_quad=192)
    points = np.atleast_2d(np.asarray(points, dtype=float))
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if points.shape[0] != times.shape[0]:
        raise ValueError(
            f"need one time per sample point, got {points.shape[0]} points and {times.shape[0]} times"
        )
    peak = max(f.peak(), _REL_FLOOR)
    worst = (0.0, 0.0, 0.0)
    for x, t in zip(points, times):
        u_direct = wave_solution(f, x, float(t), params)
        u_alt = wave_solution_even_alt(f, x, float(t), params)
        diff = abs(u_direct - u_alt)
        if diff >= worst[0]:
            worst = (diff, u_direct, u_alt)
    report_params = {
        "samples": points.shape[0],
        "peak": peak,
        "mean_res": params.mean_res,
        "radial_quad": params.radial_quad,
        "worst_direct": worst[1],
        "worst_alt": worst[2],
    }
    return IdentityReport(
        "even-equivalence",
        worst[1] / peak,
        worst[2] / peak,
        report_params,
        time.perf_counter() - t0,
    )


# ---------------------------------------------------------------------------
# mollifier identities


def check_mollifier(n: int, mu: int, eps: float, level: int = 0) -> list[IdentityReport]:
    """Three independent certificates for the mollifier pair: unit mass of
    the kernel, agreement of the closed-form Radon profile with a direct
    plane integral, and unit mass of that profile."""
    if n < 2:
        raise ValueError(f"mollifier check needs n >= 2, got {n}")
    if mu < 1:
        raise ValueError(f"mollifier order must be >= 1, got {mu}")
    if eps <= 0:
        raise ValueError(f"mollifier width must be positive, got {eps}")
    scale = 1 << level
    reports = []

    def radial_points(r):
        pts = np.zeros(r.shape + (n,))
        pts[..., 0] = r
        return pts

    t0 = time.perf_counter()
    rule = gauss_legendre(64 * scale, 0.0, eps)
    mass = _sphere_surface(n) * float(
        np.sum(rule.weights * rule.nodes ** (n - 1) * mollifier_eval(mu, eps, radial_points(rule.nodes)))
    )
    reports.append(
        IdentityReport(
            "mollifier-mass",
            mass,
            1.0,
            {"n": n, "mu": mu, "eps": eps, "quad": 64 * scale},
            time.perf_counter() - t0,
        )
    )

    # direct Radon: integrate the kernel over the hyperplane at offset s,
    # radially in the (n-1) in-plane variables with a sine substitution
    t0 = time.perf_counter()
    s_vals = np.linspace(-0.95 * eps, 0.95 * eps, 21)
    beta = gauss_legendre(48 * scale, 0.0, 0.5 * math.pi)
    surf_in_plane = _sphere_surface(n - 1) if n > 2 else 2.0
    worst = (0.0, 0.0, 0.0, 0.0)
    for s in s_vals:
        radius = math.sqrt(eps * eps - s * s)
        rho = radius * np.sin(beta.nodes)
        jac = radius * np.cos(beta.nodes) * beta.weights
        pts = np.zeros((rho.shape[0], n))
        pts[:, 0] = s
        pts[:, 1] = rho
        direct = surf_in_plane * float(np.sum(jac * rho ** (n - 2) * mollifier_eval(mu, eps, pts)))
        closed = float(mollifier_radon(mu, eps, s, n))
        diff = abs(direct - closed)
        if diff >= worst[0]:
            worst = (diff, direct, closed, s)
    reports.append(
        IdentityReport(
            "mollifier-radon",
            worst[1],
            worst[2],
            {"n": n, "mu": mu, "eps": eps, "quad": 48 * scale, "worst_s": worst[3]},
            time.perf_counter() - t0,
        )
    )

    t0 = time.perf_counter()
    srule = gauss_legendre(64 * scale, -0.5 * math.pi, 0.5 * math.pi)
    s_nodes = eps * np.sin(srule.nodes)
    s_jac = eps * np.cos(srule.nodes) * srule.weights
    radon_mass = float(np.sum(s_jac * mollifier_radon(mu, eps, s_nodes, n)))
    reports.append(
        IdentityReport(
            "mollifier-radon-mass",
            radon_mass,
            1.0,
            {"n": n, "mu": mu, "eps": eps, "quad": 64 * scale},
            time.perf_counter() - t0,
        )
    )
    return reports
