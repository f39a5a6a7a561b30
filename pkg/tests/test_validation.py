"""Cross-checks of the certification module itself."""

import numpy as np
import pytest

from neutrace.calculus import stencil_derivative
from neutrace.forward import SolverParams, wave_solution
from neutrace.transforms import Bump, Phantom
from neutrace.validation import (
    IdentityReport,
    check_even_equivalence,
    check_integral_identity,
    check_lemma_coefficients,
    check_lemma_symbolic,
    check_mollifier,
    phantom_pressure,
    phantom_velocity,
    radial_pressure,
    radial_velocity,
)


def quadratic_field(pts):
    pts = np.asarray(pts)
    x, y = pts[..., 0], pts[..., 1]
    return 1.0 + 0.5 * x - 0.25 * y + 0.3 * x * x + 0.1 * x * y


# ---------------------------------------------------------------------------
# reports


def test_identity_report_residuals():
    r = IdentityReport("demo", 2.0, 1.5)
    assert r.abs_residual == pytest.approx(0.5)
    assert r.rel_residual == pytest.approx(0.25)
    # the relative denominator is floored so exact-zero identities stay finite
    tiny = IdentityReport("demo", 1e-20, 0.0)
    assert tiny.rel_residual == pytest.approx(1e-6)


# ---------------------------------------------------------------------------
# closed radial fields


def test_radial_pressure_matches_the_quadrature_solver():
    b = Bump(center=(0.0, 0.0, 0.0), radius=0.5)
    f = Phantom((b,))
    for d, t in ((0.2, 0.2), (0.0, 0.3)):
        closed = float(radial_pressure(b, d, t))
        solver = wave_solution(f, (d, 0.0, 0.0), t)
        assert closed == pytest.approx(solver, abs=1e-7)


def test_radial_pressure_is_continuous_at_the_center():
    b = Bump(center=(0.0, 0.0, 0.0), radius=0.5)
    at_zero = float(radial_pressure(b, 0.0, 0.3))
    near_zero = float(radial_pressure(b, 1e-6, 0.3))
    assert at_zero == pytest.approx(near_zero, abs=1e-9)


def test_velocity_field_integrates_the_pressure():
    """d/dt of the (0, b)-data solution is the (b, 0)-data solution."""
    b = Bump(center=(0.0, 0.0, 0.0), radius=0.35)
    for d, t in ((0.2, 0.25), (0.1, 0.15)):
        dv = stencil_derivative(lambda tt: float(radial_velocity(b, d, tt)), t, 1e-3, 1)
        assert dv == pytest.approx(float(radial_pressure(b, d, t)), abs=1e-8)


def test_phantom_fields_superpose():
    b1 = Bump(center=(0.1, 0.0, 0.0), radius=0.3)
    b2 = Bump(center=(-0.2, 0.1, 0.0), radius=0.25, amplitude=-0.5)
    f = Phantom((b1, b2))
    pts = np.array([[0.05, 0.02, -0.1], [0.3, 0.0, 0.0]])
    t = np.array([0.2, 0.4])
    for field, single in ((phantom_pressure, radial_pressure), (phantom_velocity, radial_velocity)):
        combined = field(f, pts, t)
        manual = sum(
            single(b, np.sqrt(np.sum((pts - np.asarray(b.center)) ** 2, axis=-1)), t)
            for b in (b1, b2)
        )
        np.testing.assert_allclose(combined, manual, atol=1e-14)


# ---------------------------------------------------------------------------
# integral identity


def test_integral_identity_rejects_bad_input(unit_disk, unit_ball):
    f = Phantom((Bump(center=(0.0, 0.0), radius=0.3),))
    with pytest.raises(ValueError, match="dimension 3"):
        check_integral_identity(f, f, unit_disk)
    leak = Phantom((Bump(center=(0.8, 0.0, 0.0), radius=0.3),))
    ok = Phantom((Bump(center=(0.0, 0.0, 0.0), radius=0.3),))
    with pytest.raises(ValueError, match="reaches the boundary"):
        check_integral_identity(leak, ok, unit_ball)
    with pytest.raises(ValueError, match="reaches the boundary"):
        check_integral_identity(ok, leak, unit_ball)


def test_integral_identity_empty_side_is_exact(unit_ball, bump3d):
    report = check_integral_identity(bump3d, Phantom(()), unit_ball)
    assert report.lhs == 0.0
    assert report.rhs == 0.0
    assert report.params["horizon"] == 0.0


def test_integral_identity_disjoint_supports(unit_ball):
    f = Phantom((Bump(center=(0.4, 0.0, 0.0), radius=0.2),))
    g = Phantom((Bump(center=(-0.4, 0.0, 0.0), radius=0.2),))
    report = check_integral_identity(f, g, unit_ball)
    assert report.lhs == 0.0
    assert abs(report.rhs) <= 5e-4


def test_integral_identity_overlapping_supports(unit_ball):
    f = Phantom((Bump(center=(0.1, 0.0, 0.0), radius=0.35),))
    g = Phantom((Bump(center=(-0.05, 0.1, 0.0), radius=0.4),))
    report = check_integral_identity(f, g, unit_ball)
    assert report.lhs != 0.0
    assert report.rel_residual <= 2e-2


def test_integral_identity_terms_ignore_the_quadrature_phase(unit_ball):
    f = Phantom((Bump(center=(0.0, 0.0, 0.0), radius=0.35),))
    g = Phantom((Bump(center=(0.0, 0.0, 0.0), radius=0.45),))
    base = check_integral_identity(f, g, unit_ball)
    turned = check_integral_identity(f, g, unit_ball, phase=0.37)
    assert base.params["term_boundary"] == pytest.approx(
        turned.params["term_boundary"], abs=1e-8
    )
    assert base.params["term_volume"] == pytest.approx(
        turned.params["term_volume"], abs=1e-8
    )


# ---------------------------------------------------------------------------
# reduction-lemma coefficients


def test_lemma_check_validation():
    g = quadratic_field
    with pytest.raises(ValueError, match="n in"):
        check_lemma_coefficients(4, 1, g, (0.0, 0.0), 0.7)
    with pytest.raises(ValueError, match="k in"):
        check_lemma_coefficients(2, 3, g, (0.0, 0.0), 0.7)
    with pytest.raises(ValueError, match="in \\(0, 2\\)"):
        check_lemma_coefficients(2, 1, g, (0.0, 0.0), 2.5)


def test_lemma_constant_field_is_exact():
    g = lambda pts: np.full(np.asarray(pts).shape[:-1], 0.7)
    report = check_lemma_coefficients(2, 1, g, (0.1, -0.2), 0.7)
    assert report.abs_residual <= 1e-6


@pytest.mark.parametrize(
    "n, k, bound",
    [(2, 1, 1e-6), (2, 2, 1e-4), (3, 1, 1e-6), (3, 2, 1e-4)],
)
def test_lemma_quadratic_field(n, k, bound):
    x = (0.1, -0.2, 0.05)[:n]
    report = check_lemma_coefficients(n, k, quadratic_field, x, 0.7)
    assert report.abs_residual <= bound


def test_lemma_bump_field_residual_shrinks_under_refinement(bump2d):
    coarse = check_lemma_coefficients(2, 1, bump2d.eval, (0.1, 0.0), 0.7, level=0)
    fine = check_lemma_coefficients(2, 1, bump2d.eval, (0.1, 0.0), 0.7, level=1)
    assert fine.abs_residual < coarse.abs_residual
    assert fine.abs_residual <= 1e-4


@pytest.mark.parametrize("n", [2, 4, 6])
@pytest.mark.parametrize("k", [0, 1, 2, 3])
def test_lemma_symbolic_expansion_is_exact(n, k):
    report = check_lemma_symbolic(n, k)
    assert report.params["max_coeff_diff"] == 0.0
    assert report.abs_residual <= 1e-12


def test_lemma_symbolic_rejects_negative_order():
    with pytest.raises(ValueError, match=">= 0"):
        check_lemma_symbolic(2, -1)


# ---------------------------------------------------------------------------
# even-dimensional equivalence


def test_even_equivalence_needs_matching_counts(bump2d):
    with pytest.raises(ValueError, match="one time per sample point"):
        check_even_equivalence(bump2d, [(0.1, 0.0), (0.2, 0.1)], [0.5])


def test_even_equivalence_on_sample_points(bump2d):
    report = check_even_equivalence(bump2d, [(0.3, 0.0), (-0.2, 0.25)], [0.7, 1.1])
    assert report.abs_residual <= 1e-5
    assert report.params["samples"] == 2


def test_even_equivalence_rejects_volume_phantoms(bump3d):
    with pytest.raises(ValueError, match="dimension 2"):
        check_even_equivalence(bump3d, [(0.0, 0.0, 0.0)], [0.5])


# ---------------------------------------------------------------------------
# mollifier certificates


@pytest.mark.parametrize("n, mu, eps", [(2, 2, 0.5), (3, 3, 1.0), (3, 2, 0.8)])
def test_mollifier_certificates(n, mu, eps):
    reports = check_mollifier(n, mu, eps)
    assert [r.name for r in reports] == [
        "mollifier-mass",
        "mollifier-radon",
        "mollifier-radon-mass",
    ]
    for r in reports:
        assert r.abs_residual <= 1e-6


def test_mollifier_residual_does_not_depend_on_the_width():
    a = max(r.abs_residual for r in check_mollifier(2, 2, 0.5))
    b = max(r.abs_residual for r in check_mollifier(2, 2, 0.25))
    # both sit at the quadrature floor; allow a factor plus the floor itself
    assert a <= 2.0 * b + 1e-12
    assert b <= 2.0 * a + 1e-12


def test_mollifier_check_validation():
    with pytest.raises(ValueError, match="n >= 2"):
        check_mollifier(1, 2, 0.5)
    with pytest.raises(ValueError, match="order"):
        check_mollifier(2, 0, 0.5)
    with pytest.raises(ValueError, match="width"):
        check_mollifier(2, 2, 0.0)
