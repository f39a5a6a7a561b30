"""Back-projection, the correction operator and image output."""

import math
from dataclasses import replace

import numpy as np
import pytest

from neutrace.forward import (
    InsufficientDataError,
    SolverParams,
    TimeGrid,
    simulate_traces,
)
from neutrace.geometry import boundary_quadrature
from neutrace.inversion import (
    ImageGrid,
    ReconstructionOptions,
    backproject_even,
    backproject_odd,
    correction_K,
    reconstruct,
    truncation_probe,
    write_image_csv,
    write_image_pgm,
)
from neutrace.transforms import Bump, Phantom

# back-projected value at the bump centre for the radius-0.35 phantom in
# the unit ball (boundary resolution 8, 120 times up to t = 3); the exact
# field value there is 1
BALL_PEAK = 1.0000616745097295

# correction integral for a radius-0.25 bump at (0.35, 0.2) on the
# exponent-4 superellipse, evaluated at (0.1, 0)
SE4_CORRECTION_AT_01 = -0.004860378662794843

SE4_OPTS = ReconstructionOptions(
    k_radial=24, k_angular=64, kernel_table=512, kernel_quad=256, kernel_margin=0.25
)


@pytest.fixture(scope="module")
def ball_traces(unit_ball):
    f = Phantom((Bump(center=(0.1, 0.0, 0.0), radius=0.35),))
    bq = boundary_quadrature(unit_ball, 8)
    return simulate_traces(f, unit_ball, bq, TimeGrid(t_max=3.0, nt=120))


@pytest.fixture(scope="module")
def disk_traces(unit_disk):
    f = Phantom((Bump(center=(0.0, 0.0), radius=0.5),))
    bq = boundary_quadrature(unit_disk, 64)
    return simulate_traces(
        f, unit_disk, bq, TimeGrid(t_max=8.0, nt=400), SolverParams(table_points=4096)
    )


# ---------------------------------------------------------------------------
# image grids


def test_image_grid_validation():
    with pytest.raises(ValueError, match="equal length"):
        ImageGrid(lo=(0.0,), hi=(1.0, 1.0), shape=(4, 4))
    with pytest.raises(ValueError, match=">= 1"):
        ImageGrid(lo=(0.0, 0.0), hi=(1.0, 1.0), shape=(4, 0))
    with pytest.raises(ValueError, match="degenerate axis"):
        ImageGrid(lo=(0.0, 1.0), hi=(1.0, 1.0), shape=(4, 4))


def test_image_grid_axes_and_points():
    g = ImageGrid(lo=(-1.0, 0.0, 0.5), hi=(1.0, 2.0, 0.5), shape=(3, 2, 1))
    ax = g.axes()
    np.testing.assert_allclose(ax[0], [-1.0, 0.0, 1.0])
    np.testing.assert_allclose(ax[1], [0.0, 2.0])
    np.testing.assert_allclose(ax[2], [0.5])
    pts = g.points()
    assert pts.shape == (6, 3)
    assert np.all(pts[:, 2] == 0.5)


def test_image_grid_interp_reproduces_affine_fields(rng):
    g = ImageGrid(lo=(-1.0, -0.5), hi=(1.0, 1.5), shape=(7, 5))
    pts = g.points()
    g.values = 0.3 + 1.7 * pts[:, 0] - 0.9 * pts[:, 1]
    probes = rng.uniform((-1.0, -0.5), (1.0, 1.5), size=(40, 2))
    expect = 0.3 + 1.7 * probes[:, 0] - 0.9 * probes[:, 1]
    np.testing.assert_allclose(g.interp(probes), expect, atol=1e-13)


def test_image_grid_interp_outside_and_empty():
    g = ImageGrid(lo=(0.0, 0.0), hi=(1.0, 1.0), shape=(3, 3))
    with pytest.raises(ValueError, match="no values"):
        g.interp([(0.5, 0.5)])
    g.values = np.ones(9)
    assert g.interp(np.array([1.5, 0.5])) == 0.0
    assert g.interp(np.array([0.5, -0.1])) == 0.0


def test_image_grid_single_sample_axis_is_a_slice():
    g = ImageGrid(lo=(0.0, 0.25), hi=(1.0, 0.25), shape=(3, 1))
    g.values = np.array([1.0, 2.0, 3.0])
    assert g.interp(np.array([0.25, 0.25])) == pytest.approx(1.5)
    assert g.interp(np.array([0.25, 0.26])) == 0.0  # off the stored plane


# ---------------------------------------------------------------------------
# back-projection


def test_backproject_dimension_checks(ball_traces, disk_traces):
    with pytest.raises(ValueError, match="three-dimensional"):
        backproject_odd(disk_traces, (0.0, 0.0))
    with pytest.raises(ValueError, match="two-dimensional"):
        backproject_even(ball_traces, (0.0, 0.0, 0.0))


def test_backproject_odd_needs_enough_recorded_time(ball_traces):
    with pytest.raises(InsufficientDataError, match="exceeds t_max"):
        backproject_odd(ball_traces, (2.5, 0.0, 0.0))


def test_backproject_even_upper_time_window(disk_traces):
    with pytest.raises(InsufficientDataError, match="reaches the upper time"):
        backproject_even(disk_traces, (0.1, 0.0), ReconstructionOptions(t_upper=0.5))
    with pytest.raises(InsufficientDataError, match="outside the trace range"):
        backproject_even(disk_traces, (0.1, 0.0), ReconstructionOptions(t_upper=9.0))


def test_backproject_odd_recovers_the_field(ball_traces):
    f = Phantom((Bump(center=(0.1, 0.0, 0.0), radius=0.35),))
    peak = backproject_odd(ball_traces, (0.1, 0.0, 0.0))
    assert peak == pytest.approx(BALL_PEAK, abs=1e-12)  # frozen regression value
    assert peak == pytest.approx(1.0, rel=2e-2)
    x = np.array([0.0, 0.0, 0.2])
    assert backproject_odd(ball_traces, x) == pytest.approx(float(f.eval(x)), rel=2e-2)


def test_backproject_odd_is_linear_in_the_traces(ball_traces):
    x = (0.0, 0.1, 0.05)
    v = backproject_odd(ball_traces, x)
    doubled = replace(ball_traces, values=2.0 * ball_traces.values)
    assert backproject_odd(doubled, x) == pytest.approx(2.0 * v, abs=1e-14)


def test_backproject_odd_translation_consistency(unit_ball, ball_traces):
    shifted = Phantom((Bump(center=(0.15, -0.1, 0.0), radius=0.35),))
    bq = boundary_quadrature(unit_ball, 8)
    traces1 = simulate_traces(shifted, unit_ball, bq, TimeGrid(t_max=3.0, nt=120))
    v0 = backproject_odd(ball_traces, (0.1, 0.0, 0.0))
    v1 = backproject_odd(traces1, (0.15, -0.1, 0.0))
    assert abs(v0 - v1) <= 5e-3  # discretisation noise differs with geometry
    assert v1 == pytest.approx(1.0, rel=2e-2)


def test_backproject_even_recovers_the_field(disk_traces):
    f = Phantom((Bump(center=(0.0, 0.0), radius=0.5),))
    x = np.array([0.1, 0.0])
    got = backproject_even(disk_traces, x)
    assert got == pytest.approx(float(f.eval(x)), rel=2e-2)


def test_truncation_probe_is_small_on_long_records(disk_traces):
    probe = truncation_probe(disk_traces, (0.1, 0.0))
    assert 0.0 <= probe <= 1e-3


# ---------------------------------------------------------------------------
# correction operator


def test_correction_vanishes_on_the_ball(bump3d, unit_ball):
    assert correction_K(bump3d, (0.1, 0.0, 0.0), unit_ball, margin=0.25) == 0.0


def test_correction_vanishes_on_the_ellipse(ellipse21):
    f = Phantom((Bump(center=(0.2, -0.1), radius=0.3),))
    opts = ReconstructionOptions(
        k_radial=8, k_angular=16, kernel_table=192, kernel_quad=96, kernel_margin=0.25
    )
    assert abs(correction_K(f, (0.1, 0.0), ellipse21, opts)) <= 1e-12


def test_correction_margin_validation(bump2d, se4):
    with pytest.raises(ValueError, match="safety margin"):
        correction_K(bump2d, (0.1, 0.0), se4)
    with pytest.raises(ValueError, match="positive"):
        correction_K(bump2d, (0.1, 0.0), se4, margin=-0.1)


def test_correction_input_types(bump2d, se4):
    with pytest.raises(TypeError, match="cannot evaluate"):
        correction_K(3.14, (0.1, 0.0), se4, margin=0.25)
    with pytest.raises(TypeError, match="support radius"):
        correction_K(lambda p: np.zeros(len(p)), (0.1, 0.0), se4, margin=0.25)
    assert correction_K(Phantom(()), (0.1, 0.0), se4, margin=0.25) == 0.0


def test_correction_nonzero_off_centre_on_the_superellipse(se4):
    f = Phantom((Bump(center=(0.35, 0.2), radius=0.25),))
    got = correction_K(f, (0.1, 0.0), se4, SE4_OPTS)
    assert got == pytest.approx(SE4_CORRECTION_AT_01, abs=1e-12)  # frozen
    assert abs(got) >= 1e-3


def test_correction_off_centre_value_is_resolution_stable(se4):
    f = Phantom((Bump(center=(0.35, 0.2), radius=0.25),))
    fine = replace(SE4_OPTS, k_radial=48, k_angular=128, kernel_table=1024, kernel_quad=512)
    got = correction_K(f, (0.1, 0.0), se4, fine)
    assert got == pytest.approx(SE4_CORRECTION_AT_01, rel=5e-3)


def test_correction_cancels_at_a_point_of_radial_symmetry(bump2d, se4):
    """At the centre of a radial field the odd kernel pairs (w, -w) cancel."""
    assert abs(correction_K(bump2d, (0.0, 0.0), se4, SE4_OPTS)) <= 1e-8


# ---------------------------------------------------------------------------
# reconstruct


def test_reconstruct_grid_must_stay_inside(ball_traces):
    grid = ImageGrid(lo=(-1.2, 0.0, 0.0), hi=(1.2, 0.0, 0.0), shape=(5, 1, 1))
    with pytest.raises(ValueError, match="outside the domain"):
        reconstruct(ball_traces, grid)


def test_reconstruct_matches_pointwise_backprojection(ball_traces):
    grid = ImageGrid(lo=(-0.2, -0.2, 0.0), hi=(0.2, 0.2, 0.0), shape=(2, 2, 1))
    out = reconstruct(ball_traces, grid)
    manual = [backproject_odd(ball_traces, p) for p in grid.points()]
    np.testing.assert_array_equal(out.values, manual)
    assert out.meta["correction"] == "none"
    assert out.meta["margin"] > 0.7


def test_reconstruct_threads_do_not_change_values(ball_traces):
    grid = ImageGrid(lo=(-0.2, -0.2, 0.0), hi=(0.2, 0.2, 0.0), shape=(3, 3, 1))
    serial = reconstruct(ball_traces, grid, threads=1)
    threaded = reconstruct(ball_traces, grid, threads=2)
    np.testing.assert_array_equal(serial.values, threaded.values)


def test_reconstruct_fixed_point_on_the_ball_converges_at_once(ball_traces):
    grid = ImageGrid(lo=(-0.2, -0.2, 0.0), hi=(0.2, 0.2, 0.0), shape=(2, 2, 1))
    opts = ReconstructionOptions(
        correction="fixed_point", kernel_margin=0.25, k_radial=8, k_angular=8
    )
    out = reconstruct(ball_traces, grid, opts)
    assert out.meta["converged"] is True
    assert out.meta["iterations"] == 1
    assert out.meta["residuals"] == [0.0]  # the ball kernel is identically zero
    plain = reconstruct(ball_traces, grid)
    np.testing.assert_array_equal(out.values, plain.values)


def test_reconstruct_fixed_point_reports_non_convergence(se4):
    f = Phantom((Bump(center=(0.1, 0.0), radius=0.4),))
    bq = boundary_quadrature(se4, 16)
    traces = simulate_traces(
        f, se4, bq, TimeGrid(t_max=4.0, nt=60), SolverParams(table_points=2048)
    )
    grid = ImageGrid(lo=(-0.15, -0.15), hi=(0.15, 0.15), shape=(2, 2))
    opts = ReconstructionOptions(
        correction="fixed_point",
        max_iter=1,
        tol=1e-30,
        kernel_margin=0.3,
        k_radial=8,
        k_angular=16,
        kernel_table=128,
        kernel_quad=96,
    )
    out = reconstruct(traces, grid, opts)
    assert out.meta["converged"] is False
    assert out.meta["iterations"] == 1
    assert "warning" in out.meta and "residual" in out.meta["warning"]


# ---------------------------------------------------------------------------
# image output


def test_write_image_csv(tmp_path):
    g = ImageGrid(lo=(0.0, 0.0), hi=(1.0, 1.0), shape=(2, 2))
    g.values = np.array([0.0, 1.0, 2.0, 3.0])
    path = tmp_path / "image.csv"
    write_image_csv(path, g)
    lines = path.read_text().splitlines()
    assert lines[0] == "x_1,x_2,value"
    assert len(lines) == 5
    assert [float(c) for c in lines[2].split(",")] == [0.0, 1.0, 1.0]
    with pytest.raises(ValueError, match="no values"):
        write_image_csv(tmp_path / "empty.csv", ImageGrid((0.0,), (1.0,), (2,)))


def test_write_image_pgm_round_trip(tmp_path, rng):
    g = ImageGrid(lo=(0.0, 0.0, 0.5), hi=(1.0, 1.0, 0.5), shape=(5, 4, 1))
    g.values = rng.normal(size=20)
    pgm = tmp_path / "image.pgm"
    meta = tmp_path / "image.pgm.txt"
    write_image_pgm(pgm, g, meta)
    lines = pgm.read_text().splitlines()
    assert lines[0] == "P2"
    assert lines[1] == "4 5"
    assert lines[2] == "65535"
    pixels = np.array([[int(v) for v in row.split()] for row in lines[3:]])
    assert pixels.shape == (5, 4)
    side = dict(
        line.split(" = ", 1) for line in meta.read_text().splitlines() if " = " in line
    )
    lo, hi = float(side["value_min"]), float(side["value_max"])
    recovered = lo + pixels / float(side["maxval"]) * (hi - lo)
    half_quantum = (hi - lo) / 2.0 / 65535.0
    assert np.abs(recovered.reshape(-1) - g.values).max() <= half_quantum * 1.0001


def test_write_image_pgm_needs_a_planar_grid(tmp_path):
    g = ImageGrid(lo=(0.0, 0.0, 0.0), hi=(1.0, 1.0, 1.0), shape=(3, 3, 3))
    g.values = np.zeros(27)
    with pytest.raises(ValueError, match="two non-trivial axes"):
        write_image_pgm(tmp_path / "bad.pgm", g)
