"""Discrete plate energy: strains, exact closed-form values, gradients."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vkplate.grids import Grid, operators, quad_weights
from vkplate.plate_energy import (
    PlateProblem,
    apply_reduced,
    bending_strain,
    energy,
    energy_gradient,
    membrane_strain,
    reduced_quad,
)
from vkplate.tensor_forms import LinOp2, QuadForm3, sym
from vkplate.config import preset_force

PGRID = Grid(1.0, 1.0, 12, 12, periodic=True)
FGRID = Grid(1.0, 2.0, 11, 13, periodic=False)
ISO = LinOp2.isotropic(1.0)


def moment_free(f, grid):
    # project out constants and both linear coordinates (weighted)
    ops = operators(grid)
    xg, yg = grid.meshgrid()
    out = np.array(f, dtype=float)
    out -= np.sum(ops.w2d * out) / ops.wsum
    for c in (xg, yg):
        c = c - np.sum(ops.w2d * c) / ops.wsum
        out -= c * np.sum(ops.w2d * out * c) / np.sum(ops.w2d * c * c)
    return out


def random_reduced(rng):
    return LinOp2(sym(rng.normal(size=(3, 3))) + 3.0 * np.eye(3))


def test_membrane_strain_ordering():
    # linear w on a free grid: one-sided stencils are exact on affine fields
    xg, yg = FGRID.meshgrid()
    w = np.stack([0.25 * yg, -0.5 * xg], axis=-1)
    s = membrane_strain(w, np.zeros(FGRID.shape), FGRID)
    assert np.max(np.abs(s[..., 0])) < 1e-12
    assert np.max(np.abs(s[..., 1])) < 1e-12
    assert np.max(np.abs(s[..., 2] - 0.5 * (0.25 - 0.5))) < 1e-12


def test_membrane_strain_quadratic_v():
    # pure deflection contributes 1/2 grad v (x) grad v
    xg, yg = FGRID.meshgrid()
    v = xg * xg - xg * yg
    vx, vy = 2.0 * xg - yg, -xg
    s = membrane_strain(np.zeros(FGRID.shape + (2,)), v, FGRID)
    assert np.max(np.abs(s[..., 0] - 0.5 * vx * vx)) < 1e-10
    assert np.max(np.abs(s[..., 1] - 0.5 * vy * vy)) < 1e-10
    assert np.max(np.abs(s[..., 2] - 0.5 * vx * vy)) < 1e-10


def test_bending_strain_exact_quadratic():
    xg, yg = FGRID.meshgrid()
    v = 1.5 * xg * xg - 2.0 * yg * yg + 3.0 * xg * yg
    h = bending_strain(v, FGRID)
    assert np.max(np.abs(h[..., 0] - 3.0)) < 1e-10
    assert np.max(np.abs(h[..., 1] + 4.0)) < 1e-10
    assert np.max(np.abs(h[..., 2] - 3.0)) < 1e-10


def test_reduced_quad_matches_apply():
    rng = np.random.default_rng(0)
    op = random_reduced(rng)
    s = rng.normal(size=PGRID.shape + (3,))
    t = apply_reduced(op, s)
    expect = (
        t[..., 0] * s[..., 0] + t[..., 1] * s[..., 1] + 2.0 * t[..., 2] * s[..., 2]
    )
    assert np.max(np.abs(reduced_quad(op, s) - expect)) < 1e-12


def test_apply_reduced_isotropic_closed_form():
    rng = np.random.default_rng(1)
    mu = 0.7
    op = LinOp2.isotropic(mu)
    s = rng.normal(size=(4, 4, 3))
    tr = s[..., 0] + s[..., 1]
    t = apply_reduced(op, s)
    assert np.allclose(t[..., 0], 2.0 * mu * (s[..., 0] + tr))
    assert np.allclose(t[..., 1], 2.0 * mu * (s[..., 1] + tr))
    assert np.allclose(t[..., 2], 2.0 * mu * s[..., 2])


def test_membrane_energy_exact_affine():
    # w = (a x, b y), v = 0 on a free grid: constant strain diag(a, b),
    # energy = area/2 * 2 mu (a^2 + b^2 + (a+b)^2) exactly
    a, b, mu = 0.3, -0.7, 1.3
    xg, yg = FGRID.meshgrid()
    w = np.stack([a * xg, b * yg], axis=-1)
    problem = PlateProblem(FGRID, LinOp2.isotropic(mu))
    e = energy(problem, w, np.zeros(FGRID.shape))
    area = FGRID.lx * FGRID.ly
    expect = 0.5 * area * 2.0 * mu * (a * a + b * b + (a + b) ** 2)
    assert e.membrane == pytest.approx(expect, rel=1e-13)
    assert e.bending == 0.0
    assert e.total == pytest.approx(expect, rel=1e-13)


def test_bending_energy_exact_quadratic():
    # v quadratic: constant hessian H, bending = area * Q2(H) / 24 exactly
    p, q, c, mu = 0.4, 1.1, -0.6, 0.9
    xg, yg = FGRID.meshgrid()
    v = 0.5 * p * xg * xg + 0.5 * q * yg * yg + c * xg * yg
    problem = PlateProblem(FGRID, LinOp2.isotropic(mu))
    e = energy(problem, np.zeros(FGRID.shape + (2,)), v)
    area = FGRID.lx * FGRID.ly
    h = np.array([[p, c], [c, q]])
    q2 = 2.0 * mu * (np.sum(h * h) + np.trace(h) ** 2)
    assert e.bending == pytest.approx(area * q2 / 24.0, rel=1e-12)
    assert e.membrane > 0.0  # quadratic v also stretches


def test_load_term_and_breakdown():
    rng = np.random.default_rng(2)
    f = moment_free(rng.normal(size=PGRID.shape), PGRID)
    problem = PlateProblem(PGRID, ISO, force=f, r33=0.8)
    v = rng.normal(size=PGRID.shape)
    w = rng.normal(size=PGRID.shape + (2,))
    e = energy(problem, w, v)
    wq = quad_weights(PGRID)
    assert e.load == pytest.approx(0.8 * np.sum(wq * problem.force * v), rel=1e-13)
    assert e.total == pytest.approx(e.membrane + e.bending - e.load, rel=1e-13)


def test_energy_gauge_invariance():
    # constant shifts of w and v change nothing (f has zero mean)
    rng = np.random.default_rng(3)
    f = preset_force("sincos", PGRID, amplitude=2.0)
    problem = PlateProblem(PGRID, ISO, force=f)
    w = 0.1 * rng.normal(size=PGRID.shape + (2,))
    v = 0.1 * rng.normal(size=PGRID.shape)
    e0 = energy(problem, w, v)
    shifted = w + np.array([0.7, -0.3])
    e1 = energy(problem, shifted, v + 0.5)
    assert e1.total == pytest.approx(e0.total, abs=1e-12)


def test_energy_rotation_invariance_free():
    # infinitesimal rotation field has exactly zero symmetric gradient on a
    # free grid (stencils exact on affine fields)
    rng = np.random.default_rng(4)
    problem = PlateProblem(FGRID, ISO)
    w = 0.1 * rng.normal(size=FGRID.shape + (2,))
    v = 0.1 * rng.normal(size=FGRID.shape)
    xg, yg = FGRID.meshgrid()
    rot = 0.25 * np.stack([-yg, xg], axis=-1)
    e0 = energy(problem, w, v)
    e1 = energy(problem, w + rot, v)
    assert e1.total == pytest.approx(e0.total, rel=1e-12)


def test_gradient_sums_vanish():
    # translation invariance: gradients are orthogonal to constant shifts
    rng = np.random.default_rng(5)
    f = preset_force("bump-dipole", PGRID, amplitude=3.0)
    problem = PlateProblem(PGRID, random_reduced(rng), force=f, r33=0.9)
    w = rng.normal(size=PGRID.shape + (2,))
    v = rng.normal(size=PGRID.shape)
    gw, gv = energy_gradient(problem, w, v)
    scale = max(np.max(np.abs(gw)), np.max(np.abs(gv))) * PGRID.size
    assert abs(np.sum(gw[..., 0])) < 1e-13 * scale
    assert abs(np.sum(gw[..., 1])) < 1e-13 * scale
    assert abs(np.sum(gv)) < 1e-13 * scale


@given(seed=st.integers(0, 2**31 - 1), periodic=st.booleans())
@settings(max_examples=10, deadline=None)
def test_gradient_matches_central_differences(seed, periodic):
    grid = PGRID if periodic else FGRID
    rng = np.random.default_rng(seed)
    f = moment_free(rng.normal(size=grid.shape), grid)
    problem = PlateProblem(grid, random_reduced(rng), force=f, r33=0.7)
    w = 0.5 * rng.normal(size=grid.shape + (2,))
    v = 0.5 * rng.normal(size=grid.shape)
    gw, gv = energy_gradient(problem, w, v)
    dw = rng.normal(size=w.shape)
    dv = rng.normal(size=v.shape)
    t = 1e-6
    ep = energy(problem, w + t * dw, v + t * dv).total
    em = energy(problem, w - t * dw, v - t * dv).total
    fd = (ep - em) / (2.0 * t)
    exact = float(np.sum(gw * dw) + np.sum(gv * dv))
    assert fd == pytest.approx(exact, rel=2e-6, abs=1e-8)


def test_quadform_material_reduces():
    # passing a full 3d form is the same as passing its reduction
    rng = np.random.default_rng(6)
    for lam in (0.0, 5.0):
        p1 = PlateProblem(PGRID, QuadForm3.isotropic(lam, 2.0))
        p2 = PlateProblem(PGRID, LinOp2.isotropic(2.0))
        assert np.max(np.abs(p1.reduced.matrix - p2.reduced.matrix)) < 1e-12
    w = rng.normal(size=PGRID.shape + (2,))
    v = rng.normal(size=PGRID.shape)
    assert energy(p1, w, v).total == pytest.approx(energy(p2, w, v).total, rel=1e-12)


def test_problem_validation():
    with pytest.raises(ValueError, match="r33"):
        PlateProblem(PGRID, ISO, r33=1.5)
    with pytest.raises(TypeError, match="material"):
        PlateProblem(PGRID, np.eye(3))
    with pytest.warns(UserWarning, match="mean-shifted"):
        PlateProblem(PGRID, ISO, force=np.ones(PGRID.shape))


def test_free_moment_guard():
    # a one-signed off-center load tilts the free plate without bound
    f = preset_force("bump-dipole", FGRID, amplitude=1.0)
    with pytest.raises(ValueError, match="first x-moment"):
        PlateProblem(FGRID, ISO, force=f)
    # the same load is fine on a torus
    PlateProblem(PGRID, ISO, force=preset_force("bump-dipole", PGRID))
    # and a moment-free version is fine on the free grid
    PlateProblem(FGRID, ISO, force=moment_free(f, FGRID))
