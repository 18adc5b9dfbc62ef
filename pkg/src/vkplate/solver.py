"""Direct minimization of the discrete plate energy.

The scheme alternates an exact linear solve for the in-plane displacement w
(the energy is a convex quadratic in w for fixed v) with one backtracking
line-search step in the deflection v along a bending-preconditioned gradient
direction.  Both substeps decrease the total energy, so the sequence of
accepted energies is non-increasing by construction.

Euler-Lagrange residuals are the gauge-projected components of the exact
discrete energy gradient, reported in the quadrature-weighted dual norm
sqrt(sum g^2 / w_q), which is mesh-independent for smooth residual densities.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .grids import operators, quad_weights
from .plate_energy import (
    EnergyBreakdown,
    PlateProblem,
    apply_reduced,
    energy,
    energy_gradient,
)
from .tensor_forms import SQRT2


class LinearSolveError(RuntimeError):
    """Raised when an inner conjugate-gradient solve fails to converge."""


@dataclass
class SolverConfig:
    max_outer: int = 500
    tol_grad: float = 1e-9
    tol_el: float = 1e-8
    cg_tol: float = 1e-12
    cg_max: int = 50000
    beta: float = 0.5
    c1: float = 1e-4
    trace_path: str | None = None

    def __post_init__(self):
        if not (0.0 < self.beta < 1.0):
            raise ValueError(f"backtracking factor must be in (0,1), got {self.beta}")
        if not (0.0 < self.c1 < 0.5):
            raise ValueError(f"sufficient-decrease constant must be in (0,0.5), got {self.c1}")
        for name in ("tol_grad", "tol_el", "cg_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class Solution:
    w: np.ndarray
    v: np.ndarray
    energy: EnergyBreakdown
    el_residual_membrane: float
    el_residual_bending: float
    iterations: int
    converged: bool
    trace: list = field(default_factory=list)
    message: str = ""


def conjugate_gradient(matvec, b, x0=None, tol=1e-12, maxiter=50000):
    """Plain CG on a symmetric positive semidefinite system.

    Deterministic, supports warm starts, and reports the final residual on
    failure.  Started from x0 in the range of the operator, the iterates stay
    orthogonal to the null space.
    """
    b = np.asarray(b, dtype=float)
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    r = b - matvec(x)
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return np.zeros_like(b), 0.0, 0
    target = tol * bnorm
    rnorm = float(np.linalg.norm(r))
    if rnorm <= target:
        return x, rnorm / bnorm, 0
    p = r.copy()
    rs = float(r @ r)
    for it in range(1, maxiter + 1):
        ap = matvec(p)
        pap = float(p @ ap)
        if pap <= 0.0:
            raise LinearSolveError(
                f"operator not positive along search direction (p.Ap = {pap:.3e})"
            )
        alpha = rs / pap
        x += alpha * p
        r -= alpha * ap
        rs_new = float(r @ r)
        rnorm = float(np.sqrt(rs_new))
        if rnorm <= target:
            return x, rnorm / bnorm, it
        p = r + (rs_new / rs) * p
        rs = rs_new
    raise LinearSolveError(
        f"conjugate gradient did not converge in {maxiter} iterations; "
        f"final relative residual {rnorm / bnorm:.3e}"
    )


def _gauge_basis(grid, for_w):
    """Orthogonal basis of the gauge directions in the nodal dof space."""
    n = grid.size
    if not for_w:
        return [np.ones(n) / np.sqrt(n)]
    zeros = np.zeros(n)
    ex = np.concatenate([np.ones(n), zeros])
    ey = np.concatenate([zeros, np.ones(n)])
    basis = [ex / np.linalg.norm(ex), ey / np.linalg.norm(ey)]
    if not grid.periodic:
        xg, yg = grid.meshgrid()
        xc = xg.ravel() - xg.mean()
        yc = yg.ravel() - yg.mean()
        rot = np.concatenate([-yc, xc])
        basis.append(rot / np.linalg.norm(rot))
    return basis


def _project_out(vec, basis):
    out = vec.copy()
    for b in basis:
        out -= (out @ b) * b
    return out


def gauge_fix(grid, w=None, v=None):
    """Subtract the mean of v, the mean of w, and the mean skew part of grad w.

    The skew (infinitesimal rotation) correction applies on free grids only;
    the rotation field is not periodic.  Returns the adjusted fields.
    """
    wq = quad_weights(grid)
    wsum = float(wq.sum())
    out = []
    if w is not None:
        w = np.array(w, dtype=float)
        w[..., 0] -= float(np.sum(wq * w[..., 0])) / wsum
        w[..., 1] -= float(np.sum(wq * w[..., 1])) / wsum
        if not grid.periodic:
            ops = operators(grid)
            omega = 0.5 * float(
                np.sum(wq * (ops.dx(w[..., 1]) - ops.dy(w[..., 0])))
            ) / wsum
            xg, yg = grid.meshgrid()
            xc = xg - float(np.sum(wq * xg)) / wsum
            yc = yg - float(np.sum(wq * yg)) / wsum
            w[..., 0] += omega * yc
            w[..., 1] -= omega * xc
        out.append(w)
    if v is not None:
        v = np.array(v, dtype=float)
        v -= float(np.sum(wq * v)) / wsum
        out.append(v)
    return out[0] if len(out) == 1 else tuple(out)


def _membrane_linear_gradient(problem, w_flat):
    """Gradient of the membrane term wrt w at strain sym grad w (operator part)."""
    grid = problem.grid
    ops = operators(grid)
    wq = ops.w2d
    w = w_flat.reshape(grid.shape + (2,))
    s = np.empty(grid.shape + (3,))
    s[..., 0] = ops.dx(w[..., 0])
    s[..., 1] = ops.dy(w[..., 1])
    s[..., 2] = 0.5 * (ops.dy(w[..., 0]) + ops.dx(w[..., 1]))
    t = apply_reduced(problem.reduced, s)
    out = np.empty_like(w)
    out[..., 0] = ops.dx_t(wq * t[..., 0]) + ops.dy_t(wq * t[..., 2])
    out[..., 1] = ops.dy_t(wq * t[..., 1]) + ops.dx_t(wq * t[..., 2])
    return out.ravel()


def _membrane_null_basis(grid):
    """Orthonormal basis of the membrane operator's null space, interleaved dofs.

    Free grids: the rigid motions (two translations and the infinitesimal
    rotation, which the one-sided first-derivative stencils annihilate
    exactly).  Periodic grids: translations plus, on even mode counts, the
    alternating-sign fields invisible to centered first differences.
    """
    scalars = [np.ones(grid.shape)]
    if grid.periodic:
        ax = np.where(np.arange(grid.nx) % 2 == 0, 1.0, -1.0)
        ay = np.where(np.arange(grid.ny) % 2 == 0, 1.0, -1.0)
        if grid.nx % 2 == 0:
            scalars.append(np.broadcast_to(ax[:, None], grid.shape))
        if grid.ny % 2 == 0:
            scalars.append(np.broadcast_to(ay[None, :], grid.shape))
        if grid.nx % 2 == 0 and grid.ny % 2 == 0:
            scalars.append(ax[:, None] * ay[None, :])
    basis = []
    for s in scalars:
        for comp in (0, 1):
            field = np.zeros(grid.shape + (2,))
            field[..., comp] = s
            flat = field.ravel()
            basis.append(flat / np.linalg.norm(flat))
    if not grid.periodic:
        xg, yg = grid.meshgrid()
        field = np.zeros(grid.shape + (2,))
        field[..., 0] = -(yg - yg.mean())
        field[..., 1] = xg - xg.mean()
        flat = field.ravel()
        basis.append(flat / np.linalg.norm(flat))
    return basis


def solve_membrane(problem: PlateProblem, v, w0=None, cg_tol=None, cg_max=None):
    """Minimize the energy over w at fixed v (an exact linear solve by CG).

    The membrane operator is positive semidefinite; its null space (rigid
    motions, plus checkerboard modes on even periodic grids) is pinned at
    zero by a penalty so CG runs on a definite system.  The right-hand side
    is exactly orthogonal to the null space, so the penalty does not perturb
    the solution; it only stops semidefinite roundoff drift on long runs.
    The result is gauge-fixed.
    """
    grid = problem.grid
    ops = operators(grid)
    wq = ops.w2d
    cg_tol = 1e-12 if cg_tol is None else cg_tol
    cg_max = 50000 if cg_max is None else cg_max

    vx, vy = ops.dx(v), ops.dy(v)
    c = np.empty(grid.shape + (3,))
    c[..., 0] = 0.5 * vx * vx
    c[..., 1] = 0.5 * vy * vy
    c[..., 2] = 0.5 * vx * vy
    t0 = apply_reduced(problem.reduced, c)
    b = np.empty(grid.shape + (2,))
    b[..., 0] = -(ops.dx_t(wq * t0[..., 0]) + ops.dy_t(wq * t0[..., 2]))
    b[..., 1] = -(ops.dy_t(wq * t0[..., 1]) + ops.dx_t(wq * t0[..., 2]))

    null_basis = _membrane_null_basis(grid)
    # sized like the largest membrane eigenvalue so the penalized modes do
    # not distort the CG spectrum
    sigma = (
        float(np.max(problem.reduced.eigenvalues()))
        * (4.0 / grid.hx**2 + 4.0 / grid.hy**2)
        * float(np.max(wq))
    )

    def matvec(x):
        out = _membrane_linear_gradient(problem, x)
        for nb in null_basis:
            out += sigma * float(x @ nb) * nb
        return out

    x0 = None if w0 is None else np.asarray(w0, float).ravel()
    sol, _, _ = conjugate_gradient(
        matvec,
        b.ravel(),
        x0=x0,
        tol=cg_tol,
        maxiter=cg_max,
    )
    return gauge_fix(grid, w=sol.reshape(grid.shape + (2,)))


def _dual_norm(grid, g_flat):
    w = quad_weights(grid).ravel()
    g = g_flat.reshape(-1, grid.size)
    return float(np.sqrt(np.sum(g * g / w[None, :])))


def el_residuals(problem: PlateProblem, w, v):
    """Euler-Lagrange residual norms (membrane balance, bending balance).

    These are the gauge-projected components of the exact discrete energy
    gradient in the quadrature-weighted dual norm; criticality of the energy
    and vanishing residuals are the same statement.
    """
    grid = problem.grid
    gw, gv = energy_gradient(problem, w, v)
    gw_flat = np.concatenate([gw[..., 0].ravel(), gw[..., 1].ravel()])
    gw_p = _project_out(gw_flat, _gauge_basis(grid, for_w=True))
    gv_p = _project_out(gv.ravel(), _gauge_basis(grid, for_w=False))
    r1 = _dual_norm(grid, gw_p)
    r2 = _dual_norm(grid, gv_p)
    return r1, r2


class _BendingPreconditioner:
    """Approximate inverse of the bending block of the energy hessian.

    Periodic grids use the exact Fourier symbol of the discrete bending
    operator (all component stencils are circulant).  Free grids factor the
    assembled sparse bending matrix with a small diagonal shift to cover its
    affine null space.
    """

    def __init__(self, problem):
        grid = problem.grid
        self.grid = grid
        ops = operators(grid)
        lhat = problem.reduced.matrix
        if grid.periodic:
            kx = np.arange(grid.nx)
            ky = np.arange(grid.ny)
            lam_x = -4.0 / grid.hx**2 * np.sin(np.pi * kx / grid.nx) ** 2
            lam_y = -4.0 / grid.hy**2 * np.sin(np.pi * ky / grid.ny) ** 2
            sx = np.sin(2.0 * np.pi * kx / grid.nx) / grid.hx
            sy = np.sin(2.0 * np.pi * ky / grid.ny) / grid.hy
            z = np.empty((grid.nx, grid.ny, 3))
            z[..., 0] = lam_x[:, None]
            z[..., 1] = lam_y[None, :]
            z[..., 2] = -SQRT2 * sx[:, None] * sy[None, :]
            symbol = np.einsum("...i,ij,...j->...", z, lhat, z)
            symbol *= grid.hx * grid.hy / 12.0
            symbol[0, 0] = 1.0  # constants carry no gradient; mode zeroed below
            self.symbol = symbol
            self.lu = None
        else:
            k = sp.vstack([ops.dxx, ops.dyy, SQRT2 * ops.dxy])
            mid = sp.kron(sp.csr_matrix(lhat), sp.diags(ops.w))
            b = (k.T @ mid @ k) / 12.0
            b = sp.csr_matrix(0.5 * (b + b.T))
            shift = 1e-6 * float(b.diagonal().max())
            self.lu = splu(sp.csc_matrix(b + shift * sp.identity(grid.size)))
            self.symbol = None

    def apply(self, g):
        if self.symbol is not None:
            ghat = np.fft.fft2(g)
            ghat /= self.symbol
            ghat[0, 0] = 0.0
            return np.real(np.fft.ifft2(ghat))
        return self.lu.solve(g.ravel()).reshape(self.grid.shape)


def minimize(problem: PlateProblem, config: SolverConfig | None = None, init=None):
    """Alternating minimization of the plate energy.

    Each outer iteration solves the membrane problem exactly, then takes one
    line-searched step in v.  Solving for w first makes the v-gradient the
    exact gradient of the reduced functional J(v) = min_w E(w, v), so the
    v-steps run preconditioned Polak-Ribiere conjugate gradients on J; the
    Armijo test on the frozen-w energy certifies J decreases (envelope
    bound).  Terminates when the full gauge-projected gradient norm drops
    below tol_grad or after max_outer iterations.  Non-convergence is
    reported in the returned Solution, never silently.
    """
    config = SolverConfig() if config is None else config
    grid = problem.grid
    wq2 = quad_weights(grid)
    precond = _BendingPreconditioner(problem)
    basis_w = _gauge_basis(grid, for_w=True)
    basis_v = _gauge_basis(grid, for_w=False)

    if init is None:
        w = np.zeros(grid.shape + (2,))
        # Bending-only response to the load: the natural small smooth seed.
        v = precond.apply(problem.r33 * wq2 * problem.force)
    else:
        w, v = init
        w = np.array(w, dtype=float)
        v = np.array(v, dtype=float)
    w, v = gauge_fix(grid, w=w, v=v)

    trace = []
    message = ""
    converged = False
    prev_total = np.inf
    it = 0
    r1 = r2 = np.inf
    g_prev = pg_prev = p_prev = None

    for it in range(1, config.max_outer + 1):
        w = solve_membrane(problem, v, w0=w, cg_tol=config.cg_tol, cg_max=config.cg_max)
        e = energy(problem, w, v)
        if not e.total <= prev_total + 1e-12 * (1.0 + abs(prev_total)):
            raise AssertionError(
                f"energy increased on an accepted step: {prev_total!r} -> {e.total!r}"
            )
        prev_total = e.total

        gw, gv = energy_gradient(problem, w, v)
        gw_p = _project_out(
            np.concatenate([gw[..., 0].ravel(), gw[..., 1].ravel()]), basis_w
        )
        gv_p = _project_out(gv.ravel(), basis_v)
        r1 = _dual_norm(grid, gw_p)
        r2 = _dual_norm(grid, gv_p)
        gnorm = float(np.hypot(r1, r2))
        trace.append((it, e.total, gnorm, r1, r2))
        if gnorm <= config.tol_grad:
            converged = True
            break

        gv_field = gv_p.reshape(grid.shape)
        pg = -precond.apply(gv_field)
        p = pg
        if p_prev is not None:
            # Polak-Ribiere+ over the reduced-functional gradients
            denom = -float(np.sum(g_prev * pg_prev))
            beta = 0.0
            if denom > 0.0:
                beta = max(0.0, -float(np.sum((gv_field - g_prev) * pg)) / denom)
            p = pg + beta * p_prev
        slope = float(np.sum(gv_field * p))
        if slope >= 0.0:
            p = pg
            slope = float(np.sum(gv_field * p))
        if slope >= 0.0:
            p = -gv_field
            slope = -float(np.sum(gv_field * gv_field))
        if slope == 0.0:
            message = "zero descent slope in v with gradient above tolerance"
            break
        g_prev, pg_prev, p_prev = gv_field, pg, p

        t = 1.0
        accepted = False
        while t >= 1e-14:
            trial = energy(problem, w, v + t * p)
            if trial.total <= e.total + config.c1 * t * slope:
                accepted = True
                break
            t *= config.beta
        if not accepted:
            message = "line search failed to find a decreasing step"
            break
        v = gauge_fix(grid, v=v + t * p)

    if not converged and not message:
        message = f"gradient norm {float(np.hypot(r1, r2)):.3e} above tol_grad after {it} iterations"

    e = energy(problem, w, v)
    converged = converged and r1 <= config.tol_el and r2 <= config.tol_el
    sol = Solution(
        w=w,
        v=v,
        energy=e,
        el_residual_membrane=r1,
        el_residual_bending=r2,
        iterations=it,
        converged=converged,
        trace=trace,
        message=message,
    )
    if config.trace_path:
        write_trace(config.trace_path, trace)
    return sol


def write_trace(path, trace):
    """Iteration trace as CSV with columns iter, energy, grad_norm, r1, r2."""
    with open(path, "w") as fh:
        fh.write("iter,energy,grad_norm,r1,r2\n")
        for row in trace:
            fh.write("%d,%.17g,%.17g,%.17g,%.17g\n" % tuple(row))
