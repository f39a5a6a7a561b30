"""Forward simulation: free-space wave solutions and boundary Neumann traces.

The initial-value solution with data (f, 0) is represented through
spherical means of f.  In three dimensions u = d/dt (t M f(x, t)); in
two dimensions u = d/dt of an Abel-type radial integral of the means,
desingularised by the sine substitution.  Time derivatives use
fourth-order central differences on the even-in-time extension, normal
derivatives a central difference across the boundary.
"""

from __future__ import annotations

import hashlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .calculus import gauss_legendre, interp_cubic
from .geometry import (
    BoundaryQuadrature,
    ConvexDomain,
    boundary_distance,
    contains,
    ellipsoid,
    superellipse,
)
from .transforms import Phantom, _mean_directions, bump_radial, sphere_means

__all__ = [
    "TimeGrid",
    "SolverParams",
    "TraceGrid",
    "ConfigurationError",
    "TraceFormatError",
    "InsufficientDataError",
    "wave_solution",
    "wave_solution_even_alt",
    "neumann_trace",
    "simulate_traces",
    "support_margin",
    "huygens_horizon",
    "phantom_hash",
    "write_trace_file",
    "read_trace_file",
]

TRACE_FORMAT = "neumann-trace/1"

_D4_OFFSETS = np.array([-2.0, -1.0, 1.0, 2.0])
_D4_WEIGHTS = np.array([1.0, -8.0, 8.0, -1.0]) / 12.0


class ConfigurationError(ValueError):
    """Solver parameters inconsistent with the geometry or phantom."""


class TraceFormatError(ValueError):
    """Trace file does not follow the expected format."""


class InsufficientDataError(ValueError):
    """Trace data does not cover what the requested operation needs."""


@dataclass(frozen=True)
class TimeGrid:
    """Uniform sample times 0 = t_0 < ... < t_{nt-1} = t_max."""

    t_max: float
    nt: int

    def __post_init__(self):
        if self.t_max <= 0:
            raise ValueError(f"t_max must be positive, got {self.t_max}")
        if self.nt < 2:
            raise ValueError(f"need at least two time samples, got nt={self.nt}")

    @property
    def samples(self) -> np.ndarray:
        return np.linspace(0.0, self.t_max, self.nt)

    @property
    def dt(self) -> float:
        return self.t_max / (self.nt - 1)


@dataclass(frozen=True)
class SolverParams:
    """Discretisation knobs of the forward solver.

    ``h_t`` and ``h_nu`` default to 1e-3 times the characteristic time
    and geometry scales when left unset.  ``table_points`` switches the
    two-dimensional trace simulation to a per-node radial table of the
    spherical means (0 keeps the direct evaluation).
    """

    h_t: float | None = None
    h_nu: float | None = None
    mean_res: int = 32
    radial_quad: int = 48
    nu_order: int = 2
    table_points: int = 0

    def __post_init__(self):
        if self.nu_order not in (2, 4):
            raise ValueError(f"nu_order must be 2 or 4, got {self.nu_order}")
        if self.mean_res < 4:
            raise ValueError(f"mean_res must be >= 4, got {self.mean_res}")
        if self.radial_quad < 4:
            raise ValueError(f"radial_quad must be >= 4, got {self.radial_quad}")
        if self.table_points < 0:
            raise ValueError(f"table_points must be >= 0, got {self.table_points}")

    def resolved(self, domain: ConvexDomain | None = None, t_scale: float | None = None) -> "SolverParams":
        h_t = self.h_t
        if h_t is None:
            h_t = 1e-3 * (t_scale if t_scale is not None else 1.0)
        h_nu = self.h_nu
        if h_nu is None:
            h_nu = 1e-3 * (min(domain.semi_axes) if domain is not None else 1.0)
        if h_t <= 0 or h_nu <= 0:
            raise ValueError("finite-difference steps must be positive")
        return replace(self, h_t=float(h_t), h_nu=float(h_nu))


@dataclass
class TraceGrid:
    """Neumann traces on a boundary node set over a time grid."""

    domain: ConvexDomain
    boundary: BoundaryQuadrature
    times: TimeGrid
    values: np.ndarray
    params: SolverParams
    phantom_hash: str = ""

    def __post_init__(self):
        expect = (len(self.boundary), self.times.nt)
        if self.values.shape != expect:
            raise ValueError(f"trace matrix shape {self.values.shape} != {expect}")

    @property
    def dimension(self) -> int:
        return self.domain.dimension


# ---------------------------------------------------------------------------
# pointwise wave solution


def _radial_rule(m: int):
    return gauss_legendre(m, 0.0, 0.5 * np.pi)


def _inner_integral_2d(f, x, taus, params: SolverParams):
    """t * integral of sin(phi) * M f(x, t sin phi) d phi, odd in t."""
    rule = _radial_rule(params.radial_quad)
    sin_phi = np.sin(rule.nodes)
    radii = np.abs(np.asarray(taus, dtype=float))[..., None] * sin_phi
    means = sphere_means(f, x, radii, params.mean_res, n=2)
    return np.asarray(taus) * np.sum(means * (rule.weights * sin_phi), axis=-1)


def _wave_batch(f: Phantom, x, ts, params: SolverParams, n: int) -> np.ndarray:
    """Solution values u(x, t) for an array of times at one point."""
    ts = np.asarray(ts, dtype=float)
    h = params.h_t
    taus = ts[..., None] + h * _D4_OFFSETS
    if n == 3:
        g = taus * sphere_means(f, x, taus, params.mean_res, n=3)
    else:
        g = _inner_integral_2d(f, x, taus, params)
    return np.sum(g * _D4_WEIGHTS, axis=-1) / h


def wave_solution(f: Phantom, x, t: float, params: SolverParams | None = None) -> float:
    """Wave field at (x, t) for initial data (f, 0).

    The time derivative acts on the odd-in-time extension of the inner
    spherical-mean integrals, so small times need no special casing.
    """
    if t <= 0:
        raise ValueError(f"wave_solution needs t > 0, got t={t}; at t = 0 the field equals f")
    n = f.dimension
    if n not in (2, 3):
        raise ValueError(f"wave solvers support n in (2, 3), got n={n}")
    params = (params or SolverParams()).resolved(t_scale=max(1.0, t))
    return float(_wave_batch(f, np.asarray(x, dtype=float), np.asarray(t), params, n))


def wave_solution_even_alt(f: Phantom, x, t: float, params: SolverParams | None = None) -> float:
    """Two-dimensional solution through the alternative weight arrangement.

    Evaluates the same Abel-type radial integral as :func:`wave_solution`,
    but against the explicit inverse-root weight on Chebyshev angles
    (r = t cos(theta), midpoint nodes) instead of Legendre nodes under the
    sine substitution.  Both arrangements are spectrally accurate, so their
    agreement certifies the shared representation value.
    """
    if t <= 0:
        raise ValueError(f"wave_solution_even_alt needs t > 0, got t={t}")
    if f.dimension != 2:
        raise ValueError("the alternative arrangement exists in two dimensions only")
    params = (params or SolverParams()).resolved(t_scale=max(1.0, t))
    x = np.asarray(x, dtype=float)
    m = params.radial_quad
    theta = (np.arange(m) + 0.5) * (0.5 * np.pi / m)
    cos_th = np.cos(theta)
    w_th = np.full(m, 0.5 * np.pi / m)
    h = params.h_t
    taus = np.asarray(t, dtype=float)[..., None] + h * _D4_OFFSETS
    radii = np.abs(taus)[..., None] * cos_th
    means = sphere_means(f, x, radii, params.mean_res, n=2)
    g = taus * np.sum(means * (w_th * cos_th), axis=-1)
    return float(np.sum(g * _D4_WEIGHTS, axis=-1) / h)


# ---------------------------------------------------------------------------
# Neumann traces


def _nu_stencil(params: SolverParams):
    h = params.h_nu
    if params.nu_order == 2:
        return np.array([-1.0, 1.0]) * h, np.array([-0.5, 0.5]) / h
    return np.array([-2.0, -1.0, 1.0, 2.0]) * h, np.array([1.0, -8.0, 8.0, -1.0]) / (12.0 * h)


def neumann_trace(f: Phantom, domain: ConvexDomain, y, nu, t: float, params: SolverParams | None = None) -> float:
    """Outward normal derivative of the wave field at a boundary point."""
    if t < 0:
        raise ValueError(f"neumann_trace needs t >= 0, got t={t}")
    y = np.asarray(y, dtype=float)
    nu = np.asarray(nu, dtype=float)
    params = (params or SolverParams()).resolved(domain=domain, t_scale=max(1.0, t))
    offsets, weights = _nu_stencil(params)
    centers = y + offsets[:, None] * nu
    if t == 0.0:
        vals = f.eval(centers)
    else:
        vals = np.array([_wave_batch(f, c, np.asarray(t), params, f.dimension) for c in centers])
    return float(np.sum(weights * vals))


def support_margin(f: Phantom, domain: ConvexDomain) -> float:
    """Distance from the phantom support to the boundary (negative if a
    bump pokes outside or its center leaves the domain)."""
    margin = np.inf
    for b in f.bumps:
        d = boundary_distance(domain, b.center) - b.radius
        if not contains(domain, np.asarray(b.center)):
            d = -abs(d) if d > 0 else d
        margin = min(margin, d)
    return float(margin)


def huygens_horizon(f: Phantom, boundary: BoundaryQuadrature) -> float:
    """Largest travel time from any boundary node into the phantom support."""
    horizon = 0.0
    for b in f.bumps:
        d = np.sqrt(np.sum((boundary.points - np.asarray(b.center)) ** 2, axis=-1))
        horizon = max(horizon, float(d.max()) + b.radius)
    return horizon


# ---------------------------------------------------------------------------
# trace simulation


def _node_trace_direct(f, center_pts, times, params, n, chunk=128):
    """Rows of u(c, t) for each stencil center; direct mean evaluation."""
    out = np.empty((center_pts.shape[0], times.shape[0]))
    for i, c in enumerate(center_pts):
        for lo in range(0, times.shape[0], chunk):
            block = times[lo : lo + chunk]
            out[i, lo : lo + block.shape[0]] = _wave_batch(f, c, block, params, n)
    return out


def _node_trace_sections_3d(f, center_pts, times, params):
    """Rows of u(c, t) via per-bump angular sections of the direction set.

    Evaluates exactly the same quadrature sum as the direct path: the same
    directions, weights and time stencil.  For each bump only the directions
    whose sample point lands inside the bump support can contribute, and
    those form a contiguous run once the directions are sorted by the cosine
    of the angle against the bump center; everything else is skipped as an
    exact zero.  This turns the cost from (times x directions) phantom
    evaluations into roughly the count of nonzero terms.
    """
    dirs, w = _mean_directions(3, params.mean_res)
    h = params.h_t
    taus = (times[:, None] + h * _D4_OFFSETS).reshape(-1)
    r = np.abs(taus)
    out = np.empty((center_pts.shape[0], times.shape[0]))
    for i, c in enumerate(center_pts):
        means = np.zeros(taus.shape[0])
        for b in f.bumps:
            diff = np.asarray(b.center, dtype=float) - c
            d = float(np.sqrt(diff @ diff))
            if d < 1e-14:
                means += bump_radial(b, r, n=3)
                continue
            order = np.argsort(dirs @ (diff / d), kind="stable")
            cs = (dirs @ (diff / d))[order]
            ws = w[order]
            with np.errstate(divide="ignore"):
                thresh = (d * d + r * r - b.radius**2) / (2.0 * r * d)
            thresh[r == 0.0] = np.inf if d >= b.radius else -np.inf
            lo = np.searchsorted(cs, thresh, side="right")
            k = cs.shape[0] - lo
            sel = np.flatnonzero(k > 0)
            if sel.size == 0:
                continue
            ksel = k[sel]
            grp = np.repeat(np.arange(sel.size), ksel)
            pos = np.arange(ksel.sum()) - np.repeat(np.cumsum(ksel) - ksel, ksel)
            cidx = lo[sel][grp] + pos
            rsel = r[sel][grp]
            dist = np.sqrt(np.maximum(d * d + rsel * rsel - 2.0 * rsel * d * cs[cidx], 0.0))
            vals = bump_radial(b, dist, n=3) * ws[cidx]
            means[sel] += np.bincount(grp, weights=vals, minlength=sel.size)
        g = (taus * means).reshape(times.shape[0], _D4_OFFSETS.shape[0])
        out[i] = np.sum(g * _D4_WEIGHTS, axis=-1) / h
    return out


def _node_trace_table_2d(f, center_pts, times, params):
    """Two-dimensional fast path: per-center radial table of the means."""
    rule = _radial_rule(params.radial_quad)
    sin_phi = np.sin(rule.nodes)
    wphi = rule.weights * sin_phi
    h = params.h_t
    npts = params.table_points
    r_max = (times[-1] + 2.0 * h) * (1.0 + 1e-9) + 1e-12
    r_grid = np.linspace(0.0, r_max, npts)
    dr = r_grid[1] - r_grid[0]
    out = np.empty((center_pts.shape[0], times.shape[0]))
    taus = times[:, None] + h * _D4_OFFSETS
    radii = np.abs(taus)[..., None] * sin_phi  # (nt, 4, q)
    for i, c in enumerate(center_pts):
        table = sphere_means(f, c, r_grid, params.mean_res, n=2)
        means = interp_cubic(radii, 0.0, dr, table)
        g = taus * np.sum(means * wphi, axis=-1)
        out[i] = np.sum(g * _D4_WEIGHTS, axis=-1) / h
    return out


def simulate_traces(
    f: Phantom,
    domain: ConvexDomain,
    boundary: BoundaryQuadrature,
    times: TimeGrid,
    params: SolverParams | None = None,
    threads: int = 1,
) -> TraceGrid:
    """Fill the node-by-time Neumann trace matrix.

    Each cell is the pointwise trace value; cells are independent, so the
    node loop may be chunked across threads without changing any value.
    """
    n = domain.dimension
    if f.bumps and f.dimension != n:
        raise ConfigurationError(f"phantom dimension {f.dimension} != domain dimension {n}")
    params = (params or SolverParams()).resolved(domain=domain, t_scale=times.t_max)
    if f.bumps:
        rho = support_margin(f, domain)
        if rho <= 2.0 * params.h_nu:
            raise ConfigurationError(
                f"phantom support margin {rho:.6g} must exceed twice the normal step "
                f"{params.h_nu:.6g}"
            )
    t_samples = times.samples
    offsets, stencil_w = _nu_stencil(params)
    values = np.zeros((len(boundary), times.nt))

    if f.bumps:
        def run_node(j):
            centers = boundary.points[j] + offsets[:, None] * boundary.normals[j]
            if n == 3:
                rows = _node_trace_sections_3d(f, centers, t_samples, params)
            elif params.table_points > 0:
                rows = _node_trace_table_2d(f, centers, t_samples, params)
            else:
                rows = _node_trace_direct(f, centers, t_samples, params, n)
            out = stencil_w @ rows
            out[0] = 0.0  # t = 0: the field equals f, which vanishes near the rim
            return j, out

        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                for j, row in pool.map(run_node, range(len(boundary))):
                    values[j] = row
        else:
            for j in range(len(boundary)):
                values[j] = run_node(j)[1]

    return TraceGrid(
        domain=domain,
        boundary=boundary,
        times=times,
        values=values,
        params=params,
        phantom_hash=phantom_hash(f),
    )


# ---------------------------------------------------------------------------
# trace file round trip


def phantom_hash(f: Phantom) -> str:
    parts = []
    for b in f.bumps:
        center = ",".join("%.17g" % c for c in b.center)
        parts.append(
            f"bump:{center};r={b.radius!r};a={b.amplitude!r};p={b.profile};mu={b.mu}"
        )
    digest = hashlib.sha256("|".join(parts).encode()).hexdigest()
    return f"sha256:{digest[:16]}"


def _fmt(x: float) -> str:
    return "%.17g" % x


def write_trace_file(path, traces: TraceGrid, timestamp: str | None = None) -> None:
    d = traces.domain
    n = d.dimension
    lines = [f"# {TRACE_FORMAT}"]
    if timestamp:
        lines.append(f"# generated = {timestamp}")
    lines.append(f"# dimension = {n}")
    lines.append(f"# domain.kind = {d.kind}")
    lines.append("# domain.center = " + ", ".join(_fmt(c) for c in d.center))
    lines.append("# domain.semi_axes = " + ", ".join(_fmt(a) for a in d.semi_axes))
    lines.append(f"# domain.exponent = {_fmt(d.exponent)}")
    lines.append(f"# boundary.resolution = {traces.boundary.resolution}")
    lines.append(f"# nodes = {len(traces.boundary)}")
    lines.append(f"# time.nt = {traces.times.nt}")
    lines.append(f"# time.t_max = {_fmt(traces.times.t_max)}")
    p = traces.params
    lines.append(f"# solver.h_t = {_fmt(p.h_t)}")
    lines.append(f"# solver.h_nu = {_fmt(p.h_nu)}")
    lines.append(f"# solver.mean_res = {p.mean_res}")
    lines.append(f"# solver.radial_quad = {p.radial_quad}")
    lines.append(f"# solver.nu_order = {p.nu_order}")
    lines.append(f"# solver.table_points = {p.table_points}")
    lines.append(f"# phantom.hash = {traces.phantom_hash}")
    cols = ["node_index", "time_index"]
    cols += [f"y_{i+1}" for i in range(n)] + [f"nu_{i+1}" for i in range(n)]
    cols += ["weight", "t", "value"]
    lines.append("# columns: " + ",".join(cols))
    t_samples = traces.times.samples
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
        for j in range(len(traces.boundary)):
            y = traces.boundary.points[j]
            nu = traces.boundary.normals[j]
            w = traces.boundary.weights[j]
            fixed = ",".join(_fmt(v) for v in (*y, *nu, w))
            for i, t in enumerate(t_samples):
                fh.write(f"{j},{i},{fixed},{_fmt(t)},{_fmt(traces.values[j, i])}\n")


def read_trace_file(path) -> TraceGrid:
    header: dict[str, str] = {}
    rows: list[str] = []
    with open(path) as fh:
        first = fh.readline().strip()
        if first != f"# {TRACE_FORMAT}":
            raise TraceFormatError(
                f"unsupported trace format {first!r}, expected '# {TRACE_FORMAT}'"
            )
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    key, _, val = body.partition("=")
                    header[key.strip()] = val.strip()
                continue
            rows.append(line)

    def need(key):
        if key not in header:
            raise TraceFormatError(f"trace header is missing '{key}'")
        return header[key]

    n = int(need("dimension"))
    kind = need("domain.kind")
    center = [float(v) for v in need("domain.center").split(",")]
    axes = [float(v) for v in need("domain.semi_axes").split(",")]
    if kind == "superellipse":
        domain = superellipse(center, axes, float(header.get("domain.exponent", "2")))
    else:
        domain = ellipsoid(center, axes)
    nt = int(need("time.nt"))
    times = TimeGrid(t_max=float(need("time.t_max")), nt=nt)
    num_nodes = int(need("nodes"))
    params = SolverParams(
        h_t=float(need("solver.h_t")),
        h_nu=float(need("solver.h_nu")),
        mean_res=int(need("solver.mean_res")),
        radial_quad=int(need("solver.radial_quad")),
        nu_order=int(need("solver.nu_order")),
        table_points=int(need("solver.table_points")),
    )

    data = np.array([[float(v) for v in r.split(",")] for r in rows])
    if data.size == 0 or data.shape[1] != 2 * n + 5:
        raise TraceFormatError("trace rows malformed or missing")
    node_idx = data[:, 0].astype(int)
    time_idx = data[:, 1].astype(int)
    counts = np.bincount(node_idx, minlength=num_nodes)
    for j in range(num_nodes):
        if counts[j] != nt:
            raise InsufficientDataError(
                f"node {j} has {counts[j]} of {nt} time samples in the trace file"
            )
    points = np.zeros((num_nodes, n))
    normals = np.zeros((num_nodes, n))
    weights = np.zeros(num_nodes)
    values = np.zeros((num_nodes, nt))
    points[node_idx] = data[:, 2 : 2 + n]
    normals[node_idx] = data[:, 2 + n : 2 + 2 * n]
    weights[node_idx] = data[:, 2 + 2 * n]
    values[node_idx, time_idx] = data[:, -1]
    boundary = BoundaryQuadrature(points, normals, weights, int(need("boundary.resolution")))
    return TraceGrid(
        domain=domain,
        boundary=boundary,
        times=times,
        values=values,
        params=params,
        phantom_hash=header.get("phantom.hash", ""),
    )
