"""Oracles: truncation bounds, brute-force reduction, density hessians."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vkplate.tensor_forms import (
    QuadForm3,
    completion_vector,
    reduced_value,
    sym,
)
from vkplate.verification import (
    RadiusError,
    Report,
    StrainProfile,
    Truncation,
    bruteforce_reduced_value,
    density_hessian,
    random_positive_form,
    reduction_identity_check,
    stored_energy_log,
    stored_energy_reciprocal,
    stress_moments_check,
    truncation_suite,
)


# ---------------------------------------------------------------------------
# truncation


def test_truncation_knot_values():
    tr = Truncation(omega=2.0)
    assert tr.value(0.0) == 0.0
    assert tr.value(1.0) == 1.0  # identity below omega
    assert float(tr.value(2.0)) == pytest.approx(2.0)
    assert float(tr.value(4.0)) == pytest.approx(3.0)  # 1.5 omega at 2 omega
    assert float(tr.value(100.0)) == 3.0  # saturated
    assert float(tr.slope(1.5)) == 1.0
    assert float(tr.slope(5.0)) == 0.0


@given(st.floats(-50.0, 50.0), st.floats(0.1, 10.0))
def test_truncation_odd_and_dominated(t, omega):
    tr = Truncation(omega=omega)
    assert float(tr.value(-t)) == pytest.approx(-float(tr.value(t)), abs=1e-12)
    assert abs(float(tr.value(t))) <= abs(t) + 1e-12
    assert abs(float(tr.value(t))) <= 1.5 * omega + 1e-12


@given(st.floats(-10.0, 10.0))
@settings(max_examples=50)
def test_truncation_derivatives_consistent(t):
    tr = Truncation(omega=1.3)
    h = 1e-6
    fd_slope = (float(tr.value(t + h)) - float(tr.value(t - h))) / (2 * h)
    assert fd_slope == pytest.approx(float(tr.slope(t)), abs=5e-5)
    fd_curv = (float(tr.slope(t + h)) - float(tr.slope(t - h))) / (2 * h)
    assert fd_curv == pytest.approx(float(tr.curvature(t)), abs=5e-5)


def test_truncation_rejects_bad_scale():
    with pytest.raises(ValueError):
        Truncation(omega=0.0)
    with pytest.raises(ValueError):
        Truncation(omega=-1.0)


def test_truncation_suite_passes():
    for omega in (0.5, 1.0, 100.0):
        report = truncation_suite(Truncation(omega=omega))
        assert report.passed
        assert report.lines()[0] == "suite: truncation"
        assert report.lines()[-1] == "status: PASS"


def test_truncation_suite_catches_violations():
    # a duck-typed impostor whose value exceeds |t|
    class Bad:
        omega = 1.0

        def value(self, t):
            return 2.0 * np.asarray(t, dtype=float)

        def slope(self, t):
            return 2.0 * np.ones_like(np.asarray(t, dtype=float))

        def curvature(self, t):
            return np.zeros_like(np.asarray(t, dtype=float))

    report = truncation_suite(Bad())
    assert not report.passed
    text = report.text()
    assert "status: FAIL" in text
    assert "FAIL (" in text  # per-check witness lines


def test_report_text_format():
    rep = Report(name="demo", passed=True, entries=[("alpha", 1), ("beta", "x")])
    assert rep.text() == "suite: demo\nalpha: 1\nbeta: x\nstatus: PASS\n"


# ---------------------------------------------------------------------------
# brute-force reduction


def test_bruteforce_matches_closed_form_isotropic():
    rng = np.random.default_rng(0)
    form = QuadForm3.isotropic(3.0, 1.0)
    for _ in range(5):
        f2 = sym(rng.normal(size=(2, 2)))
        ref = reduced_value(form, f2)
        radius = 12.0 * (1.0 + float(np.max(np.abs(f2))))
        got = bruteforce_reduced_value(form, f2, radius)
        assert abs(got - ref) <= 1e-8 * max(ref, 1e-12)


def test_bruteforce_matches_random_forms():
    rng = np.random.default_rng(1)
    for _ in range(3):
        form = random_positive_form(rng)
        f2 = sym(rng.normal(size=(2, 2)))
        ref = reduced_value(form, f2)
        radius = 12.0 * (1.0 + float(np.max(np.abs(f2))))
        got = bruteforce_reduced_value(form, f2, radius)
        assert abs(got - ref) <= 1e-8 * max(ref, 1e-12)


def test_bruteforce_radius_error():
    # shrink the box until the true minimizer falls outside it
    rng = np.random.default_rng(2)
    form = random_positive_form(rng)
    f2 = sym(rng.normal(size=(2, 2))) + np.eye(2)
    d = completion_vector(form, f2)
    radius = 0.5 * max(abs(d[0]), abs(d[1]))
    assert radius > 0
    with pytest.raises(RadiusError):
        bruteforce_reduced_value(form, f2, radius)


def test_bruteforce_validates_radius():
    with pytest.raises(ValueError):
        bruteforce_reduced_value(QuadForm3.isotropic(0.0, 1.0), np.eye(2), 0.0)


# ---------------------------------------------------------------------------
# stored energy densities


def test_densities_vanish_at_identity():
    eye = np.eye(3)
    assert stored_energy_log(eye) == 0.0
    assert stored_energy_reciprocal(eye) == 0.0


def test_densities_infinite_on_degenerate():
    flipped = np.diag([1.0, 1.0, -1.0])
    assert math.isinf(stored_energy_log(flipped))
    assert math.isinf(stored_energy_reciprocal(flipped))


def test_densities_penalize_volume_change():
    squeeze = np.diag([1.0, 1.0, 0.5])
    assert stored_energy_log(squeeze) > 0
    assert stored_energy_reciprocal(squeeze) > 0
    # reciprocal penalty blows up toward collapse, log less steeply
    tiny = np.diag([1.0, 1.0, 1e-6])
    assert stored_energy_reciprocal(tiny) > stored_energy_log(tiny)


def test_density_hessian_log_is_isotropic():
    got = density_hessian(stored_energy_log, q=2.0)
    want = QuadForm3.isotropic(2.0, 1.0)
    assert np.max(np.abs(got.matrix - want.matrix)) < 1e-5


def test_density_hessian_reciprocal_is_isotropic():
    got = density_hessian(stored_energy_reciprocal, q=2.0)
    want = QuadForm3.isotropic(2.0, 1.0)
    assert np.max(np.abs(got.matrix - want.matrix)) < 1e-5


def test_density_hessian_high_exponent_drops_volumetric():
    # |log det|^3 has zero curvature at the identity: only the stretch term
    # survives, which is the lam = 0 form
    got = density_hessian(stored_energy_log, q=3.0)
    want = QuadForm3.isotropic(0.0, 1.0)
    assert np.max(np.abs(got.matrix - want.matrix)) < 1e-3


def test_density_hessian_rejects_small_exponent():
    with pytest.raises(ValueError, match="at least 2"):
        density_hessian(stored_energy_log, q=1.5)


# ---------------------------------------------------------------------------
# randomized identity harnesses


def test_random_positive_form_is_pd():
    rng = np.random.default_rng(3)
    for _ in range(20):
        form = random_positive_form(rng)
        eigs = form.sym_eigenvalues()
        assert eigs[0] > 0
        assert np.allclose(form.matrix, form.matrix.T)


def test_reduction_identity_check_isotropic():
    report = reduction_identity_check(QuadForm3.isotropic(5.0, 2.0), trials=200, seed=1)
    assert report.passed
    entries = dict(report.entries)
    assert entries["trials"] == 200
    assert entries["failed"] == 0


def test_reduction_identity_check_random_forms():
    rng = np.random.default_rng(4)
    for seed in range(3):
        form = random_positive_form(rng)
        assert reduction_identity_check(form, trials=100, seed=seed).passed


def test_reduction_identity_check_deterministic():
    form = QuadForm3.isotropic(1.0, 1.0)
    r1 = reduction_identity_check(form, trials=50, seed=7)
    r2 = reduction_identity_check(form, trials=50, seed=7)
    assert r1.entries == r2.entries


def test_strain_profile_validation():
    g0 = np.zeros((2, 2))
    with pytest.raises(ValueError, match="2x2"):
        StrainProfile(g0=np.zeros(3), g1=g0)
    with pytest.raises(ValueError, match="symmetric"):
        StrainProfile(g0=g0, g1=np.array([[0.0, 1.0], [-1.0, 0.0]]))
    with pytest.raises(ValueError, match="non-finite"):
        StrainProfile(g0=g0 + np.nan, g1=g0)
    prof = StrainProfile(g0=np.eye(2), g1=2.0 * np.eye(2))
    assert np.allclose(prof.at(0.5), np.zeros((2, 2)))


def test_stress_moments_random_profiles():
    rng = np.random.default_rng(5)
    for _ in range(5):
        form = random_positive_form(rng)
        prof = StrainProfile(
            g0=rng.normal(size=(2, 2)), g1=sym(rng.normal(size=(2, 2)))
        )
        report = stress_moments_check(form, prof, quad_points=8)
        assert report.passed, report.text()


def test_stress_moments_exact_at_low_order():
    # the stress profile is affine in the thickness variable, so even
    # two-point quadrature is exact
    rng = np.random.default_rng(6)
    form = random_positive_form(rng)
    prof = StrainProfile(g0=rng.normal(size=(2, 2)), g1=sym(rng.normal(size=(2, 2))))
    assert stress_moments_check(form, prof, quad_points=2).passed
