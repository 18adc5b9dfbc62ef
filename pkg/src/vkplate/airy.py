"""Isotropic plate equations through the Airy stress potential.

For an isotropic incompressible material with shear modulus mu, the critical
points of the plate energy solve the coupled system

    (mu/3) lap^2 v = [v, Phi] + r33 f,      lap^2 Phi = -(3 mu / 2) [v, v],

with the Monge-Ampere bracket [u, p] = hess u : cof hess p.  The scaled
potential Phi1 = Phi / (2 mu) removes the modulus from the system:

    lap^2 v = 6 [v, Phi1] + (3/mu) r33 f,   lap^2 Phi1 = -(3/4) [v, v].

On the torus the potential carries one extra piece.  A periodic
divergence-free membrane stress is cof hess of a periodic potential plus a
constant tensor; the constant part is fixed by the mean membrane strain,
which periodic in-plane displacements cannot carry, so it equals the
constitutive image of m = mean(1/2 grad v (x) grad v).  Equivalently Phi
gains a quadratic polynomial whose constant Hessian encodes that mean
stress.  The deflection equation then picks up the term tbar : hess v with

    tbar = 12 [(1 - nu) m + nu (tr m) Id]

(nu = 1/2 in the incompressible case), already scaled to sit next to the
scaled load.  Dropping tbar leaves an O(1) gap to the direct minimization of
the plate energy that no amount of grid refinement removes.

This module solves the completed system by a damped fixed-point iteration
with an exact spectral biharmonic inverse on periodic grids, recovers the
in-plane displacement from the stress potential, and provides the
compressible counterpart (bending stiffness B, membrane stiffness S/2) for
studies of the incompressible limit nu -> 1/2, where B -> mu/3 and
S/2 -> 3 mu / 2.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .grids import Grid, check_field, field_l2, operators, quad_weights
from .solver import conjugate_gradient, gauge_fix


class FixedPointDivergence(RuntimeError):
    """Raised when the fixed-point residual blows up; carries the history."""

    def __init__(self, message, history):
        super().__init__(message)
        self.history = history


def young_modulus(mu, nu):
    """Membrane coefficient S = 2 mu (1 + nu); exact for Fraction inputs."""
    return 2 * mu * (1 + nu)


def bending_stiffness(mu, nu):
    """Bending coefficient B = S / (12 (1 - nu^2)); exact for Fraction inputs."""
    return young_modulus(mu, nu) / (12 * (1 - nu * nu))


@dataclass(frozen=True)
class IsotropicParams:
    """Isotropic moduli with the derived plate coefficients."""

    mu: float
    lam: float

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError(f"shear modulus must be positive, got {self.mu}")
        if self.lam < 0:
            raise ValueError(f"first modulus must be nonnegative, got {self.lam}")

    @property
    def nu(self):
        return self.lam / (2.0 * (self.mu + self.lam))

    @property
    def membrane_stiffness(self):
        return young_modulus(self.mu, self.nu)

    @property
    def bending(self):
        return bending_stiffness(self.mu, self.nu)

    @classmethod
    def from_poisson(cls, mu, nu):
        if not 0.0 <= nu < 0.5:
            raise ValueError(f"Poisson ratio must lie in [0, 1/2), got {nu}")
        return cls(mu=mu, lam=2.0 * mu * nu / (1.0 - 2.0 * nu))


@dataclass
class FixedPointConfig:
    tol: float = 1e-10
    max_iter: int = 400
    damping: float = 0.7

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tolerance must be positive")
        if not (0.0 < self.damping <= 1.0):
            raise ValueError(f"damping must be in (0, 1], got {self.damping}")


@dataclass
class AiryState:
    """Deflection and scaled stress potential, both gauge-fixed to zero mean."""

    v: np.ndarray
    phi1: np.ndarray
    residual_v: float
    residual_phi: float
    iterations: int
    converged: bool
    history: list = field(default_factory=list)


def airy_bracket(u, p, grid):
    """The bracket [u, p] = hess u : cof hess p, symmetric and bilinear."""
    u = check_field(grid, u)
    p = check_field(grid, p)
    ops = operators(grid)
    return (
        ops.d2x(u) * ops.d2y(p)
        + ops.d2y(u) * ops.d2x(p)
        - 2.0 * ops.d2xy(u) * ops.d2xy(p)
    )


@lru_cache(maxsize=None)
def _spectral_biharmonic(grid: Grid):
    kx = np.arange(grid.nx)
    ky = np.arange(grid.ny)
    lam_x = -4.0 / grid.hx**2 * np.sin(np.pi * kx / grid.nx) ** 2
    lam_y = -4.0 / grid.hy**2 * np.sin(np.pi * ky / grid.ny) ** 2
    lap = lam_x[:, None] + lam_y[None, :]
    mult = lap * lap
    mult[0, 0] = 1.0  # zero mode handled separately
    return mult


@lru_cache(maxsize=None)
def _clamped_biharmonic(grid: Grid):
    """Sparse clamped-plate operator: squared 5-point laplacian (13-point stencil)
    with reflection ghosts encoding the zero normal derivative."""
    nx, ny = grid.nx, grid.ny

    def lap1d(n, h):
        m = sp.lil_matrix((n, n))
        for i in range(n):
            if i == 0:
                # ghost reflection across the clamped edge: value at -1 equals value at 1
                m[0, 0], m[0, 1] = -2.0, 2.0
            elif i == n - 1:
                m[i, i], m[i, i - 1] = -2.0, 2.0
            else:
                m[i, i - 1], m[i, i], m[i, i + 1] = 1.0, -2.0, 1.0
        return sp.csr_matrix(m / (h * h))

    lx = lap1d(nx, grid.hx)
    ly = lap1d(ny, grid.hy)
    lap = sp.kron(lx, sp.identity(ny)) + sp.kron(sp.identity(nx), ly)

    interior = np.zeros((nx, ny), dtype=bool)
    interior[1:-1, 1:-1] = True
    idx = np.flatnonzero(interior.ravel())
    inject = sp.csr_matrix(
        (np.ones(idx.size), (idx, np.arange(idx.size))),
        shape=(nx * ny, idx.size),
    )
    lmap = sp.csr_matrix(lap @ inject)
    w = operators(grid).w
    a = lmap.T @ sp.diags(w) @ lmap
    a = sp.csr_matrix(0.5 * (a + a.T))
    return a, lmap, idx


def biharmonic_solve(rhs, grid, bc="periodic", tol=1e-10, maxiter=None):
    """Solve lap^2 u = rhs.

    Periodic grids diagonalize the squared 5-point laplacian in the discrete
    trigonometric basis; the right-hand side must have zero quadrature mean
    and the solution is returned with zero mean.  Non-periodic grids solve
    the clamped problem (u and its normal derivative vanish on the boundary)
    by conjugate gradients on the 13-point operator.
    """
    rhs = check_field(grid, rhs)
    if bc == "periodic":
        if not grid.periodic:
            raise ValueError("periodic solve requested on a non-periodic grid")
        ops = operators(grid)
        mean = float(np.sum(ops.w2d * rhs) / ops.wsum)
        scale = max(float(np.max(np.abs(rhs))), np.finfo(float).tiny)
        if abs(mean) > 1e-8 * scale:
            raise ValueError(
                f"periodic biharmonic problem needs a zero-mean right-hand side; "
                f"got mean {mean:.3e}"
            )
        fhat = np.fft.fft2(rhs - mean)
        fhat /= _spectral_biharmonic(grid)
        fhat[0, 0] = 0.0
        return np.real(np.fft.ifft2(fhat))
    if bc == "clamped":
        if grid.periodic:
            raise ValueError("clamped solve requested on a periodic grid")
        a, _, idx = _clamped_biharmonic(grid)
        w = operators(grid).w
        b = (w * rhs.ravel())[idx]
        maxiter = 20 * grid.size if maxiter is None else maxiter
        x, _, _ = conjugate_gradient(lambda u: a @ u, b, tol=tol, maxiter=maxiter)
        out = np.zeros(grid.size)
        out[idx] = x
        return out.reshape(grid.shape)
    raise ValueError(f"unknown boundary condition {bc!r}")


def _zero_mean(grid, f):
    ops = operators(grid)
    return f - float(np.sum(ops.w2d * f) / ops.wsum)


def _require_zero_mean_force(grid, f):
    f = check_field(grid, f)
    ops = operators(grid)
    mean = float(np.sum(ops.w2d * f) / ops.wsum)
    norm = float(np.sqrt(np.sum(ops.w2d * f * f)))
    if abs(mean) * np.sqrt(ops.wsum) > 1e-10 * max(norm, np.finfo(float).tiny):
        raise ValueError(f"force must have zero quadrature mean; got mean {mean:.3e}")
    return f - mean


def mean_membrane_strain(v, grid):
    """Weighted mean of 1/2 grad v (x) grad v in (11, 22, 12) components."""
    v = check_field(grid, v)
    ops = operators(grid)
    vx, vy = ops.dx(v), ops.dy(v)
    return np.array(
        [
            0.5 * float(np.sum(ops.w2d * vx * vx)) / ops.wsum,
            0.5 * float(np.sum(ops.w2d * vy * vy)) / ops.wsum,
            0.5 * float(np.sum(ops.w2d * vx * vy)) / ops.wsum,
        ]
    )


def _mean_stress_term(v, grid, nu):
    """tbar : hess v for tbar = 12 ((1-nu) m + nu tr(m) Id), m the mean strain.

    The constant membrane stress the periodic potential cannot represent,
    pre-divided by the bending coefficient so it adds directly to the scaled
    right-hand side of the deflection equation.
    """
    m = mean_membrane_strain(v, grid)
    trm = m[0] + m[1]
    t11 = 12.0 * ((1.0 - nu) * m[0] + nu * trm)
    t22 = 12.0 * ((1.0 - nu) * m[1] + nu * trm)
    t12 = 12.0 * (1.0 - nu) * m[2]
    ops = operators(grid)
    return t11 * ops.d2x(v) + t22 * ops.d2y(v) + 2.0 * t12 * ops.d2xy(v)


def _coupled_solve(coef_v, coef_phi, f_scaled, grid, config, nu):
    """Damped fixed-point iteration for the completed periodic system

        lap^2 v = coef_v [v, phi] + tbar(v) : hess v + f_scaled,
        lap^2 phi = coef_phi [v, v].

    The discrete bracket is projected to zero mean before each inverse (the
    continuum bracket integrates to zero over the torus; the discrete defect
    is O(h^2) and harmless).  The mean-stress term is exactly mean-free.
    Residuals are quadrature-weighted L2 norms of the projected equations.
    """
    config = FixedPointConfig() if config is None else config
    mult = _spectral_biharmonic(grid)

    def inv(rhs):
        fhat = np.fft.fft2(rhs)
        fhat /= mult
        fhat[0, 0] = 0.0
        return np.real(np.fft.ifft2(fhat))

    def biharm(u):
        fhat = np.fft.fft2(u) * mult
        fhat[0, 0] = 0.0
        return np.real(np.fft.ifft2(fhat))

    def rhs_v_at(v, phi):
        return _zero_mean(
            grid,
            coef_v * airy_bracket(v, phi, grid)
            + _mean_stress_term(v, grid, nu)
            + f_scaled,
        )

    v = np.zeros(grid.shape)
    phi = np.zeros(grid.shape)
    alpha = config.damping
    history = []
    res_v = res_phi = np.inf
    converged = False
    res_first = None
    res_prev = np.inf
    it = 0
    for it in range(1, config.max_iter + 1):
        v_star = inv(rhs_v_at(v, phi))
        v_new = (1.0 - alpha) * v + alpha * v_star
        phi_new = inv(_zero_mean(grid, coef_phi * airy_bracket(v_new, v_new, grid)))

        rhs_v = rhs_v_at(v_new, phi_new)
        rhs_phi = _zero_mean(grid, coef_phi * airy_bracket(v_new, v_new, grid))
        res_v = field_l2(grid, biharm(v_new) - rhs_v)
        res_phi = field_l2(grid, biharm(phi_new) - rhs_phi)
        res = max(res_v, res_phi)
        history.append((it, res_v, res_phi, alpha))

        if res_first is None:
            res_first = max(res, np.finfo(float).tiny)
        if not np.isfinite(res) or res > 1e6 * res_first:
            raise FixedPointDivergence(
                f"fixed point diverged at iteration {it} (residual {res:.3e})",
                history,
            )
        if res > res_prev:
            alpha = max(0.05, 0.5 * alpha)
        res_prev = res
        v, phi = v_new, phi_new
        if res <= config.tol:
            converged = True
            break

    return v, phi, res_v, res_phi, it, converged, history


def solve_vk(mu, f, r33, grid, config: FixedPointConfig | None = None):
    """Solve the scaled incompressible system on a periodic grid.

    Only the shear modulus enters: the state (v, phi1) solves
    lap^2 v = 6 [v, phi1] + tbar(v) : hess v + (3/mu) r33 f and
    lap^2 phi1 = -(3/4) [v, v], with tbar the mean membrane stress the
    periodic potential cannot carry (module docstring, nu = 1/2).
    """
    mu = float(getattr(mu, "mu", mu))
    if not mu > 0:
        raise ValueError(f"shear modulus must be positive, got {mu}")
    if not grid.periodic:
        raise ValueError("the coupled solve requires a periodic grid")
    f = _require_zero_mean_force(grid, f)
    v, phi1, res_v, res_phi, it, converged, history = _coupled_solve(
        coef_v=6.0,
        coef_phi=-0.75,
        f_scaled=(3.0 / mu) * r33 * f,
        grid=grid,
        config=config,
        nu=0.5,
    )
    return AiryState(v, phi1, res_v, res_phi, it, converged, history)


def solve_compressible_vk(params: IsotropicParams, f, r33, grid,
                          config: FixedPointConfig | None = None):
    """Solve B lap^2 v = [v, Phi] + r33 f, lap^2 Phi = -(S/2) [v, v].

    Returns an AiryState with phi1 = Phi / (2 mu), matching the scaling of the
    incompressible solve so states are directly comparable.
    """
    if not grid.periodic:
        raise ValueError("the coupled solve requires a periodic grid")
    f = _require_zero_mean_force(grid, f)
    b = params.bending
    s_half = 0.5 * params.membrane_stiffness
    v, phi, res_v, res_phi, it, converged, history = _coupled_solve(
        coef_v=1.0 / b,
        coef_phi=-s_half,
        f_scaled=(r33 / b) * f,
        grid=grid,
        config=config,
        nu=params.nu,
    )
    return AiryState(v, phi / (2.0 * params.mu), res_v, res_phi, it, converged, history)


def recover_in_plane(state: AiryState, grid):
    """In-plane displacement consistent with the stress potential.

    The membrane stress identity cof hess Phi = 2 mu (N + (tr N) Id) with
    N = sym grad w + 1/2 grad v (x) grad v inverts to a target for sym grad w:
    with A = cof hess Phi / (2 mu) - 1/2 grad v (x) grad v - 1/2 |grad v|^2 Id
    the target is M = A - (tr A / 3) Id.  Here cof hess Phi / (2 mu) is
    cof hess phi1 plus the constant part m + tr(m) Id carried by the
    quadratic piece of the potential (m the mean membrane strain), which
    makes M exactly mean-free, as a periodic sym grad w must be.  w is the
    least-squares fit of sym grad w to M over gauge-fixed displacements;
    returns (w, misfit).
    """
    ops = operators(grid)
    wq = ops.w2d
    v = check_field(grid, state.v)
    phi1 = check_field(grid, state.phi1)
    vx, vy = ops.dx(v), ops.dy(v)
    m = mean_membrane_strain(v, grid)
    trm = m[0] + m[1]

    # cof hess phi1 in (11, 22, 12) components: (pyy, pxx, -pxy)
    half_g2 = 0.5 * (vx * vx + vy * vy)
    a = np.empty(grid.shape + (3,))
    a[..., 0] = ops.d2y(phi1) + m[0] + trm - 0.5 * vx * vx - half_g2
    a[..., 1] = ops.d2x(phi1) + m[1] + trm - 0.5 * vy * vy - half_g2
    a[..., 2] = -ops.d2xy(phi1) + m[2] - 0.5 * vx * vy
    tr = a[..., 0] + a[..., 1]
    a[..., 0] -= tr / 3.0
    a[..., 1] -= tr / 3.0

    def strain(w_flat):
        w = w_flat.reshape(grid.shape + (2,))
        s = np.empty(grid.shape + (3,))
        s[..., 0] = ops.dx(w[..., 0])
        s[..., 1] = ops.dy(w[..., 1])
        s[..., 2] = 0.5 * (ops.dy(w[..., 0]) + ops.dx(w[..., 1]))
        return s

    def strain_t(s):
        out = np.empty(grid.shape + (2,))
        out[..., 0] = ops.dx_t(wq * s[..., 0]) + 0.5 * ops.dy_t(wq * 2.0 * s[..., 2])
        out[..., 1] = ops.dy_t(wq * s[..., 1]) + 0.5 * ops.dx_t(wq * 2.0 * s[..., 2])
        return out.ravel()

    def normal_op(w_flat):
        return strain_t(strain(w_flat))

    b = strain_t(a)
    sol, _, _ = conjugate_gradient(normal_op, b, tol=1e-12, maxiter=50000)
    w = gauge_fix(grid, w=sol.reshape(grid.shape + (2,)))
    diff = strain(w.ravel()) - a
    # Frobenius misfit: the 12 component appears twice in the tensor norm.
    misfit = float(
        np.sum(wq * (diff[..., 0] ** 2 + diff[..., 1] ** 2 + 2.0 * diff[..., 2] ** 2))
    )
    return w, misfit


@dataclass(frozen=True)
class LimitRow:
    nu: float
    bending: float
    membrane_half: float
    v_err: float
    phi_err: float
    converged: bool


def limit_study(mu, f, r33, grid, nu_list, config: FixedPointConfig | None = None):
    """Distance of compressible solutions to the incompressible one, per nu.

    Returns one LimitRow per Poisson ratio with the plate coefficients and the
    quadrature L2 errors of v and of the unscaled potential Phi = 2 mu phi1.
    An empty nu_list yields an empty table.
    """
    rows = []
    if not nu_list:
        return rows
    inc = solve_vk(mu, f, r33, grid, config)
    for nu in nu_list:
        params = IsotropicParams.from_poisson(mu, nu)
        state = solve_compressible_vk(params, f, r33, grid, config)
        rows.append(
            LimitRow(
                nu=float(nu),
                bending=params.bending,
                membrane_half=0.5 * params.membrane_stiffness,
                v_err=field_l2(grid, state.v - inc.v),
                phi_err=field_l2(grid, 2.0 * mu * (state.phi1 - inc.phi1)),
                converged=state.converged and inc.converged,
            )
        )
    return rows
