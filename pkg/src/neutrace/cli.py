"""Command-line front end: config parsing, the four subcommands, and the
deterministic text outputs.

Configs are flat `key = value` files with `#` comments.  Every solver
tunable has a key and a default; unknown keys are hard errors so typos
cannot silently fall back to defaults.  All emitted floats use 17
significant digits, and no output contains wall-clock content unless
--timestamps is passed, so identical configs give byte-identical files.
"""

from __future__ import annotations

import argparse
import itertools
import re
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from .forward import (
    ConfigurationError,
    InsufficientDataError,
    SolverParams,
    TimeGrid,
    TraceFormatError,
    read_trace_file,
    simulate_traces,
    support_margin,
    write_trace_file,
)
from .geometry import (
    ConvexDomain,
    boundary_distance,
    boundary_quadrature,
    contains,
    domain_diameter,
    ellipsoid,
    superellipse,
    support_halfwidth,
)
from .inversion import (
    ImageGrid,
    ReconstructionOptions,
    reconstruct,
    truncation_probe,
    write_image_csv,
    write_image_pgm,
)
from .transforms import Bump, Phantom, build_kernel_profile
from .validation import (
    check_even_equivalence,
    check_integral_identity,
    check_lemma_coefficients,
    check_lemma_symbolic,
    check_mollifier,
)

__all__ = ["ConfigError", "RunConfig", "parse_config", "main"]


class ConfigError(ValueError):
    """Config file rejected; the message carries the offending line."""


def _fmt(x: float) -> str:
    return "%.17g" % x


# ---------------------------------------------------------------------------
# config parsing


_REQUIRED = object()


class _Entries:
    """Raw `key = (value, line)` map with typed, popping accessors."""

    def __init__(self, text: str):
        self.data: dict[str, tuple[str, int]] = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            body = raw.split("#", 1)[0].strip()
            if not body:
                continue
            if "=" not in body:
                raise ConfigError(f"line {lineno}: expected 'key = value', got {body!r}")
            key, _, value = body.partition("=")
            key = key.strip()
            value = value.strip()
            if not key:
                raise ConfigError(f"line {lineno}: empty key")
            if key in self.data:
                raise ConfigError(
                    f"line {lineno}: duplicate key {key!r} (first set on line {self.data[key][1]})"
                )
            self.data[key] = (value, lineno)

    def _pop(self, key, default):
        if key in self.data:
            return self.data.pop(key)
        if default is _REQUIRED:
            raise ConfigError(f"missing required key {key!r}")
        return None

    def string(self, key, default=_REQUIRED, choices=None):
        entry = self._pop(key, default)
        if entry is None:
            return default
        value, lineno = entry
        if choices is not None and value not in choices:
            raise ConfigError(
                f"line {lineno}: {key} must be one of {', '.join(choices)}, got {value!r}"
            )
        return value

    def floating(self, key, default=_REQUIRED):
        entry = self._pop(key, default)
        if entry is None:
            return default
        value, lineno = entry
        try:
            return float(value)
        except ValueError:
            raise ConfigError(f"line {lineno}: {key} expects a number, got {value!r}") from None

    def integer(self, key, default=_REQUIRED):
        entry = self._pop(key, default)
        if entry is None:
            return default
        value, lineno = entry
        try:
            return int(value)
        except ValueError:
            raise ConfigError(f"line {lineno}: {key} expects an integer, got {value!r}") from None

    def float_list(self, key, default=_REQUIRED):
        entry = self._pop(key, default)
        if entry is None:
            return default
        value, lineno = entry
        try:
            return tuple(float(p.strip()) for p in value.split(","))
        except ValueError:
            raise ConfigError(
                f"line {lineno}: {key} expects comma-separated numbers, got {value!r}"
            ) from None

    def int_list(self, key, default=_REQUIRED):
        entry = self._pop(key, default)
        if entry is None:
            return default
        value, lineno = entry
        try:
            return tuple(int(p.strip()) for p in value.split(","))
        except ValueError:
            raise ConfigError(
                f"line {lineno}: {key} expects comma-separated integers, got {value!r}"
            ) from None

    def string_list(self, key, default=_REQUIRED):
        entry = self._pop(key, default)
        if entry is None:
            return default
        value, _ = entry
        return tuple(p.strip() for p in value.split(",") if p.strip())

    def line_of(self, key) -> int | None:
        entry = self.data.get(key)
        return entry[1] if entry else None

    def reject_leftovers(self):
        if self.data:
            key, (_, lineno) = min(self.data.items(), key=lambda kv: kv[1][1])
            raise ConfigError(f"line {lineno}: unknown key {key!r}")


@dataclass
class RunConfig:
    """Fully validated run description shared by all subcommands."""

    dimension: int
    domain: ConvexDomain
    phantom: Phantom
    phantom2: Phantom | None
    boundary_res: int
    times: TimeGrid | None
    solver: SolverParams
    grid: tuple | None
    recon: ReconstructionOptions
    threads: int
    validate: dict = field(default_factory=dict)
    kernel: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)


_BUMP_KEY = re.compile(r"^(phantom2?)\.bump(\d+)\.(center|radius|amplitude|profile|mu)$")


def _parse_phantom(entries: _Entries, prefix: str, n: int) -> Phantom:
    groups: dict[int, dict[str, object]] = {}
    for key in list(entries.data):
        m = _BUMP_KEY.match(key)
        if not m or m.group(1) != prefix:
            continue
        idx = int(m.group(2))
        fieldname = m.group(3)
        lineno = entries.data[key][1]
        if fieldname == "center":
            value = entries.float_list(key)
        elif fieldname == "profile":
            value = entries.string(key, choices=("cinf", "poly"))
        elif fieldname == "mu":
            value = entries.integer(key)
        else:
            value = entries.floating(key)
        groups.setdefault(idx, {})[fieldname] = (value, lineno)

    bumps = []
    for idx in sorted(groups):
        spec = groups[idx]
        for needed in ("center", "radius"):
            if needed not in spec:
                raise ConfigError(f"{prefix}.bump{idx} is missing {prefix}.bump{idx}.{needed}")
        center, center_line = spec["center"]
        if len(center) != n:
            raise ConfigError(
                f"line {center_line}: {prefix}.bump{idx}.center has {len(center)} "
                f"coordinates for dimension {n}"
            )
        kwargs = {
            "center": center,
            "radius": spec["radius"][0],
            "amplitude": spec["amplitude"][0] if "amplitude" in spec else 1.0,
            "profile": spec["profile"][0] if "profile" in spec else "cinf",
        }
        if "mu" in spec:
            kwargs["mu"] = spec["mu"][0]
        try:
            bumps.append(Bump(**kwargs))
        except ValueError as exc:
            raise ConfigError(f"{prefix}.bump{idx}: {exc}") from None
    return Phantom(tuple(bumps))


def parse_config(text: str) -> RunConfig:
    entries = _Entries(text)

    n = entries.integer("dimension")
    if n not in (2, 3):
        raise ConfigError(f"unsupported dimension {n} (this implementation covers 2 and 3)")

    kind = entries.string("domain.kind", default="ellipsoid", choices=("ellipsoid", "superellipse"))
    center = entries.float_list("domain.center", default=tuple(0.0 for _ in range(n)))
    axes_line = entries.line_of("domain.semi_axes")
    semi_axes = entries.float_list("domain.semi_axes")
    exponent = entries.floating("domain.exponent", default=None)
    if len(center) != n or len(semi_axes) != n:
        raise ConfigError(
            f"domain.center and domain.semi_axes must have {n} entries for dimension {n}"
        )
    try:
        if kind == "ellipsoid":
            if exponent is not None:
                raise ConfigError("domain.exponent only applies to superellipse domains")
            domain = ellipsoid(center, semi_axes)
        else:
            if exponent is None:
                raise ConfigError("superellipse domains need domain.exponent")
            domain = superellipse(center, semi_axes, exponent)
    except ConfigError:
        raise
    except ValueError as exc:
        where = f"line {axes_line}: " if axes_line else ""
        raise ConfigError(f"{where}{exc}") from None

    phantom = _parse_phantom(entries, "phantom", n)
    phantom2 = _parse_phantom(entries, "phantom2", n)
    if not phantom2.bumps:
        phantom2 = None

    boundary_res = entries.integer("boundary.resolution", default=256 if n == 2 else 24)

    nt = entries.integer("time.nt", default=None)
    t_max = entries.floating("time.t_max", default=None)
    t_factor = entries.floating("time.t_max_factor", default=None)
    if t_max is not None and t_factor is not None:
        raise ConfigError("set only one of time.t_max and time.t_max_factor")
    times = None
    if nt is not None:
        if t_max is None and t_factor is None:
            raise ConfigError("time.nt needs one of time.t_max or time.t_max_factor")
        span = t_max if t_max is not None else t_factor * domain_diameter(domain)
        try:
            times = TimeGrid(t_max=span, nt=nt)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    elif t_max is not None or t_factor is not None:
        raise ConfigError("time.t_max/time.t_max_factor need time.nt")

    try:
        solver = SolverParams(
            h_t=entries.floating("solver.h_t", default=None),
            h_nu=entries.floating("solver.h_nu", default=None),
            mean_res=entries.integer("solver.mean_res", default=32),
            radial_quad=entries.integer("solver.radial_quad", default=48),
            nu_order=entries.integer("solver.nu_order", default=2),
            table_points=entries.integer("solver.table_points", default=4096 if n == 2 else 0),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    resolved = solver.resolved(domain=domain, t_scale=times.t_max if times else None)
    for label, ph in (("phantom", phantom), ("phantom2", phantom2)):
        if ph is None or not ph.bumps:
            continue
        for i, b in enumerate(ph.bumps, start=1):
            if not contains(domain, np.asarray(b.center)):
                raise ConfigError(f"{label} bump {i} center {b.center} lies outside the domain")
        rho = support_margin(ph, domain)
        if rho <= 2.0 * resolved.h_nu:
            raise ConfigError(
                f"{label} support margin {rho:.6g} must exceed twice the normal "
                f"step 2*h_nu = {2.0 * resolved.h_nu:.6g}"
            )

    grid = None
    glo = entries.float_list("grid.lo", default=None)
    ghi = entries.float_list("grid.hi", default=None)
    gshape = entries.int_list("grid.shape", default=None)
    if any(v is not None for v in (glo, ghi, gshape)):
        if any(v is None for v in (glo, ghi, gshape)):
            raise ConfigError("grid.lo, grid.hi and grid.shape must be given together")
        if not len(glo) == len(ghi) == len(gshape) == n:
            raise ConfigError(f"grid.lo/hi/shape must each have {n} entries for dimension {n}")
        grid = (glo, ghi, gshape)

    try:
        recon = ReconstructionOptions(
            t_interp=entries.string("recon.interpolation", default="cubic", choices=("cubic", "linear")),
            correction=entries.string("recon.correction", default="none", choices=("none", "fixed_point")),
            max_iter=entries.integer("recon.max_iter", default=20),
            tol=entries.floating("recon.tol", default=1e-6),
            time_quad=entries.integer("recon.time_quad", default=256),
            k_radial=entries.integer("recon.k_radial", default=32),
            k_angular=entries.integer("recon.k_angular", default=64),
            kernel_table=entries.integer("recon.kernel_table", default=512),
            kernel_quad=entries.integer("recon.kernel_quad", default=256),
            kernel_margin=entries.floating("recon.kernel_margin", default=None),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    if grid is not None:
        glo, ghi, gshape = grid
        # the boundary distance is concave on a convex domain, so its
        # minimum over the grid box is attained at a corner
        rho = support_margin(phantom, domain) if phantom.bumps else None
        for corner in itertools.product(*zip(glo, ghi)):
            point = np.asarray(corner)
            if not contains(domain, point):
                raise ConfigError(f"grid corner {corner} lies outside the domain")
            if recon.correction != "none" and rho is not None:
                dist = boundary_distance(domain, point)
                if dist < 0.5 * rho:
                    raise ConfigError(
                        f"grid corner {corner} is outside the safety region: boundary "
                        f"distance {dist:.6g} < rho/2 = {0.5 * rho:.6g}"
                    )

    validate_opts = {
        "checks": entries.string_list("validate.checks", default=()),
        "level": entries.integer("validate.level", default=0),
        "seed": entries.integer("validate.seed", default=7),
        "samples": entries.integer("validate.samples", default=5),
        "lemma_k": entries.int_list("validate.lemma.k", default=(1, 2)),
        "lemma_t": entries.floating("validate.lemma.t", default=0.7),
        "lemma_x": entries.float_list("validate.lemma.x", default=tuple(domain.center)),
        "symbolic_n": entries.integer("validate.symbolic.n", default=4),
        "symbolic_k": entries.integer("validate.symbolic.k", default=2),
        "mollifier_mu": entries.integer("validate.mollifier.mu", default=2 if n == 2 else 3),
        "mollifier_eps": entries.floating(
            "validate.mollifier.eps", default=0.5 * min(domain.semi_axes)
        ),
        "bounds": {},
    }
    for key in [k for k in entries.data if k.startswith("validate.bound.")]:
        name = key[len("validate.bound.") :]
        validate_opts["bounds"][name] = entries.floating(key)

    kernel_opts = {
        "theta": entries.float_list("kernel.theta", default=None),
        "order": entries.integer("kernel.order", default=n),
        "margin": entries.floating("kernel.margin", default=None),
        "points": entries.integer("kernel.points", default=101),
        "hilbert": entries.string("kernel.hilbert", default="auto", choices=("auto", "on", "off")),
    }
    if kernel_opts["theta"] is not None and len(kernel_opts["theta"]) != n:
        raise ConfigError(f"kernel.theta must have {n} entries for dimension {n}")

    outputs = {}
    for name in ("trace", "image", "pgm", "report", "kernel"):
        value = entries.string(f"output.{name}", default=None)
        if value is not None:
            outputs[name] = value
    in_trace = entries.string("input.trace", default=None)
    if in_trace is not None:
        outputs["input_trace"] = in_trace

    threads = entries.integer("threads", default=1)
    if threads < 1:
        raise ConfigError(f"threads must be >= 1, got {threads}")

    entries.reject_leftovers()
    return RunConfig(
        dimension=n,
        domain=domain,
        phantom=phantom,
        phantom2=phantom2,
        boundary_res=boundary_res,
        times=times,
        solver=solver,
        grid=grid,
        recon=recon,
        threads=threads,
        validate=validate_opts,
        kernel=kernel_opts,
        outputs=outputs,
    )


# ---------------------------------------------------------------------------
# subcommands


def _out_path(args, cfg: RunConfig, key: str) -> str:
    if args.out:
        return args.out
    if key in cfg.outputs:
        return cfg.outputs[key]
    raise ConfigError(f"no output path: pass --out or set output.{key}")


def _threads(args, cfg: RunConfig) -> int:
    return args.threads if args.threads else cfg.threads


def cmd_forward(cfg: RunConfig, args) -> int:
    if cfg.times is None:
        raise ConfigError("forward needs time.nt and one of time.t_max / time.t_max_factor")
    out = _out_path(args, cfg, "trace")
    boundary = boundary_quadrature(cfg.domain, cfg.boundary_res)
    traces = simulate_traces(
        cfg.phantom, cfg.domain, boundary, cfg.times, cfg.solver, threads=_threads(args, cfg)
    )
    stamp = datetime.now(timezone.utc).isoformat() if args.timestamps else None
    write_trace_file(out, traces, timestamp=stamp)
    print(f"nodes = {len(boundary)}")
    print(f"nt = {cfg.times.nt}")
    print(f"t_max = {_fmt(cfg.times.t_max)}")
    print(f"wrote {out}")
    return 0


def cmd_reconstruct(cfg: RunConfig, args) -> int:
    trace_path = cfg.outputs.get("input_trace") or cfg.outputs.get("trace")
    if trace_path is None:
        raise ConfigError("reconstruct needs input.trace (or output.trace) for the trace file")
    if cfg.grid is None:
        raise ConfigError("reconstruct needs grid.lo, grid.hi and grid.shape")
    out = _out_path(args, cfg, "image")
    traces = read_trace_file(trace_path)
    if traces.dimension != cfg.dimension:
        raise ConfigError(
            f"trace file is {traces.dimension}-dimensional, config says {cfg.dimension}"
        )
    grid = ImageGrid(*cfg.grid)
    image = reconstruct(traces, grid, cfg.recon, threads=_threads(args, cfg))
    write_image_csv(out, image)
    print(f"grid = {'x'.join(str(m) for m in grid.shape)}")
    print(f"wrote {out}")
    if cfg.dimension == 2:
        probe = tuple(0.5 * (a + b) for a, b in zip(grid.lo, grid.hi))
        try:
            estimate = truncation_probe(traces, np.asarray(probe), cfg.recon)
            print(f"truncation_estimate = {_fmt(estimate)}")
        except InsufficientDataError:
            print("truncation_estimate = unavailable (recorded span too short to halve)")
    if cfg.recon.correction != "none":
        meta = image.meta
        print(f"correction_iterations = {meta.get('iterations', 0)}")
        print(f"correction_converged = {'yes' if meta.get('converged') else 'no'}")
        residuals = meta.get("residuals") or [0.0]
        print(f"correction_residual = {_fmt(residuals[-1])}")
        if "warning" in meta:
            print(f"warning: {meta['warning']}", file=sys.stderr)
    if "pgm" in cfg.outputs:
        pgm = cfg.outputs["pgm"]
        write_image_pgm(pgm, image, sidecar_path=pgm + ".meta")
        print(f"wrote {pgm}")
    return 0


_BOUND_DEFAULTS = {
    "integral-identity": 2e-2,
    "lemma-coefficients": 1e-4,
    "lemma-symbolic": 1e-12,
    "even-equivalence": 1e-5,
    "mollifier": 1e-6,
}

# whether the configured bound applies to the relative or absolute residual;
# reports whose sides are normalized (or compared to exact constants of
# order one) use the absolute value
_BOUND_KIND = {
    "integral-identity": "rel",
    "lemma-coefficients": "rel",
    "lemma-symbolic": "abs",
    "even-equivalence": "abs",
    "mollifier": "abs",
}


_LEMMA_LIN = (0.8, -0.5, 0.3)
_LEMMA_SQ = (0.6, 0.2, -0.4)


def _lemma_field(n: int):
    """Fixed quadratic field for the coefficient-recursion check.

    Polynomial data keeps the spherical means exact under the fixed angular
    rules, so the reported residual isolates the finite differences."""
    lin = np.array(_LEMMA_LIN[:n])
    sq = np.array(_LEMMA_SQ[:n])

    def g(pts):
        pts = np.asarray(pts, dtype=float)
        out = 0.3 + pts @ lin + (pts * pts) @ sq
        return out + 0.4 * pts[..., 0] * pts[..., 1]

    return g


def _default_checks(cfg: RunConfig) -> tuple[str, ...]:
    names = ["mollifier", "lemma-symbolic", "lemma-coefficients"]
    if cfg.dimension == 2 and cfg.phantom.bumps:
        names.append("even-equivalence")
    if cfg.dimension == 3 and cfg.phantom2 is not None:
        names.append("integral-identity")
    return tuple(names)


def _run_check(name: str, cfg: RunConfig) -> list:
    opts = cfg.validate
    level = opts["level"]
    if name == "mollifier":
        return check_mollifier(cfg.dimension, opts["mollifier_mu"], opts["mollifier_eps"], level)
    if name == "lemma-symbolic":
        return [check_lemma_symbolic(opts["symbolic_n"], opts["symbolic_k"])]
    if name == "lemma-coefficients":
        return [
            check_lemma_coefficients(
                cfg.dimension,
                k,
                _lemma_field(cfg.dimension),
                opts["lemma_x"],
                opts["lemma_t"],
                level=level,
            )
            for k in opts["lemma_k"]
        ]
    if name == "even-equivalence":
        if cfg.dimension != 2:
            raise ConfigError("even-equivalence check needs dimension = 2")
        if not cfg.phantom.bumps:
            raise ConfigError("even-equivalence check needs a phantom section")
        rng = np.random.default_rng(opts["seed"])
        a = np.asarray(cfg.domain.semi_axes)
        pts = np.asarray(cfg.domain.center) + (rng.random((opts["samples"], 2)) - 0.5) * a
        ts = (0.2 + rng.random(opts["samples"])) * float(np.max(a))
        scale = 1 << level
        eq_params = SolverParams(mean_res=256 * scale, radial_quad=192 * scale)
        return [check_even_equivalence(cfg.phantom, pts, ts, eq_params)]
    if name == "integral-identity":
        if cfg.dimension != 3:
            raise ConfigError("integral-identity check needs dimension = 3")
        if not cfg.phantom.bumps or cfg.phantom2 is None:
            raise ConfigError("integral-identity check needs phantom and phantom2 sections")
        return [check_integral_identity(cfg.phantom, cfg.phantom2, cfg.domain, level)]
    raise ConfigError(f"unknown validation check {name!r}")


def cmd_validate(cfg: RunConfig, args) -> int:
    out = _out_path(args, cfg, "report")
    names = cfg.validate["checks"] or _default_checks(cfg)
    rows = []
    failures = 0
    for name in names:
        bound = cfg.validate["bounds"].get(name, _BOUND_DEFAULTS.get(name))
        if bound is None:
            raise ConfigError(f"unknown validation check {name!r}")
        kind = _BOUND_KIND[name]
        for report in _run_check(name, cfg):
            checked = report.rel_residual if kind == "rel" else report.abs_residual
            status = "pass" if checked <= bound else "fail"
            if status == "fail":
                failures += 1
            rows.append((name, report, checked, bound, status))
            print(
                f"{report.name}: residual = {_fmt(checked)} ({kind}), "
                f"bound = {_fmt(bound)}, {status}"
            )

    header = "check,name,lhs,rhs,abs_residual,rel_residual,residual,bound,status"
    if args.timestamps:
        header += ",runtime_s"
    lines = [header]
    for name, report, checked, bound, status in rows:
        row = ",".join(
            [
                name,
                report.name,
                _fmt(report.lhs),
                _fmt(report.rhs),
                _fmt(report.abs_residual),
                _fmt(report.rel_residual),
                _fmt(checked),
                _fmt(bound),
                status,
            ]
        )
        if args.timestamps:
            row += f",{report.runtime:.3f}"
        lines.append(row)
    with open(out, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    print(f"wrote {out}")
    if failures:
        print(f"{failures} check(s) exceeded their bound", file=sys.stderr)
        return 1
    return 0


def cmd_kernel(cfg: RunConfig, args) -> int:
    out = _out_path(args, cfg, "kernel")
    theta = cfg.kernel["theta"]
    if theta is None:
        raise ConfigError("kernel dump needs kernel.theta")
    th = np.asarray(theta, dtype=float)
    norm = float(np.linalg.norm(th))
    if norm == 0.0:
        raise ConfigError("kernel.theta must be a nonzero direction")
    th = th / norm
    order = cfg.kernel["order"]
    margin = cfg.kernel["margin"]
    if margin is None:
        margin = 0.05 * support_halfwidth(cfg.domain, th)
    hilbert = cfg.kernel["hilbert"]
    with_hilbert = cfg.dimension % 2 == 0 if hilbert == "auto" else hilbert == "on"
    try:
        profile = build_kernel_profile(
            cfg.domain,
            th,
            order,
            margin=margin,
            num_table=cfg.recon.kernel_table,
            num_quad=cfg.recon.kernel_quad,
            with_hilbert=with_hilbert,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    points = cfg.kernel["points"]
    if points < 2:
        raise ConfigError(f"kernel.points must be >= 2, got {points}")
    ss = profile.s_center + np.linspace(-profile.query_halfwidth, profile.query_halfwidth, points)
    columns = [("s", ss), ("section", profile.eval(ss, order=0, hilbert=False))]
    for m in range(1, order + 1):
        columns.append((f"section_d{m}", profile.eval(ss, order=m, hilbert=False)))
    if with_hilbert:
        columns.append(("hilbert", profile.eval(ss, order=0, hilbert=True)))
        for m in range(1, order + 1):
            columns.append((f"hilbert_d{m}", profile.eval(ss, order=m, hilbert=True)))
    with open(out, "w") as fh:
        fh.write(",".join(name for name, _ in columns) + "\n")
        for i in range(points):
            fh.write(",".join(_fmt(vals[i]) for _, vals in columns) + "\n")
    print(f"direction = {','.join(_fmt(t) for t in th)}")
    print(f"margin = {_fmt(margin)}")
    print(f"wrote {out}")
    return 0


_COMMANDS = {
    "forward": cmd_forward,
    "reconstruct": cmd_reconstruct,
    "validate": cmd_validate,
    "kernel": cmd_kernel,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="neutrace",
        description="Wave-equation initial data from Neumann boundary traces: "
        "forward simulation, back-projection reconstruction, identity checks "
        "and kernel profile dumps.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    descriptions = {
        "forward": "simulate Neumann traces and write the trace file",
        "reconstruct": "back-project a trace file onto an image grid",
        "validate": "run identity checks and write a report CSV",
        "kernel": "tabulate a section-profile kernel along one direction",
    }
    for name, help_text in descriptions.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to the key = value config file")
        p.add_argument("--out", help="output path (overrides the output.* config keys)")
        p.add_argument("--threads", type=int, help="worker threads (overrides the config)")
        p.add_argument(
            "--timestamps",
            action="store_true",
            help="include wall-clock content in outputs (off by default for reproducibility)",
        )
    args = parser.parse_args(argv)

    try:
        with open(args.config) as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    try:
        cfg = parse_config(text)
        return _COMMANDS[args.command](cfg, args)
    except (ConfigError, ConfigurationError, TraceFormatError, InsufficientDataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
