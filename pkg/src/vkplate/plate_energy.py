"""Discrete plate energy: membrane and bending strains, assembly, exact gradient.

The energy of an out-of-plane deflection v and an in-plane displacement w is

    E(w, v) = 1/2 * sum_q Q2(sym grad w + 1/2 grad v (x) grad v)
            + 1/24 * sum_q Q2(hess v)
            - r33 * sum_q f v

with Q2 the reduced quadratic form of the material and sum_q the trapezoid
quadrature.  The gradient returned by energy_gradient is the exact gradient
of this discrete functional (assembled through sparse-operator transposes),
so the discrete Euler-Lagrange system is the gradient by construction.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .grids import Grid, check_field, operators, quad_weights
from .tensor_forms import SQRT2, LinOp2, QuadForm3, reduced_operator


@dataclass(frozen=True)
class EnergyBreakdown:
    membrane: float
    bending: float
    load: float
    total: float


class PlateProblem:
    """Grid, reduced material operator, normalized load, and load orientation.

    material may be a QuadForm3 (reduced internally over trace-free
    completions) or a LinOp2 giving the reduced operator directly.  The load
    f is shifted to zero quadrature mean; a warning is emitted when the shift
    exceeds 1e-12 of the load norm.  r33 is the out-of-plane component of the
    load orientation, a rotation entry, so |r33| <= 1.

    On free grids the load must also have zero first moments: tilting v by an
    affine function (with w absorbing the induced membrane strain) leaves the
    elastic energy unchanged and shifts the work term by -r33 * integral of
    f times the tilt, so a load with a nonzero first moment makes the energy
    unbounded below.  Periodic grids admit no affine tilts.
    """

    def __init__(self, grid: Grid, material, force=None, r33: float = 1.0):
        self.grid = grid
        if isinstance(material, QuadForm3):
            material.require_positive_definite()
            self.reduced = reduced_operator(material)
        elif isinstance(material, LinOp2):
            self.reduced = material
        else:
            raise TypeError(
                f"material must be QuadForm3 or LinOp2, got {type(material).__name__}"
            )
        if not abs(r33) <= 1.0:
            raise ValueError(f"|r33| must not exceed 1, got {r33}")
        self.r33 = float(r33)
        if force is None:
            force = np.zeros(grid.shape)
        force = check_field(grid, force)
        ops = operators(grid)
        shift = float(np.sum(ops.w2d * force) / ops.wsum)
        norm = float(np.sqrt(np.sum(ops.w2d * force * force)))
        if abs(shift) * np.sqrt(ops.wsum) > 1e-12 * max(norm, np.finfo(float).tiny):
            warnings.warn(
                f"load mean-shifted by {shift:.3e} to enforce zero total force",
                stacklevel=2,
            )
        self.force = force - shift
        if not grid.periodic and norm > 0.0:
            xg, yg = grid.meshgrid()
            for name, coord in (("x", xg), ("y", yg)):
                c = coord - float(np.sum(ops.w2d * coord)) / ops.wsum
                moment = float(np.sum(ops.w2d * self.force * c))
                cnorm = float(np.sqrt(np.sum(ops.w2d * c * c)))
                if abs(moment) > 1e-10 * norm * cnorm:
                    raise ValueError(
                        f"free-plate load has nonzero first {name}-moment "
                        f"{moment:.3e}; the energy would be unbounded below "
                        f"(affine tilt invariance)"
                    )

    @property
    def bc(self):
        return "periodic" if self.grid.periodic else "free"


def membrane_strain(w, v, grid):
    """sym grad w + 1/2 grad v (x) grad v, components (11, 22, 12)."""
    w = check_field(grid, w, components=2)
    v = check_field(grid, v)
    ops = operators(grid)
    vx, vy = ops.dx(v), ops.dy(v)
    s = np.empty(grid.shape + (3,))
    s[..., 0] = ops.dx(w[..., 0]) + 0.5 * vx * vx
    s[..., 1] = ops.dy(w[..., 1]) + 0.5 * vy * vy
    s[..., 2] = 0.5 * (ops.dy(w[..., 0]) + ops.dx(w[..., 1])) + 0.5 * vx * vy
    return s


def bending_strain(v, grid):
    """Discrete hessian of v, components (11, 22, 12)."""
    v = check_field(grid, v)
    ops = operators(grid)
    h = np.empty(grid.shape + (3,))
    h[..., 0] = ops.d2x(v)
    h[..., 1] = ops.d2y(v)
    h[..., 2] = ops.d2xy(v)
    return h


def apply_reduced(op: LinOp2, s):
    """Apply a LinOp2 nodewise to a symmetric tensor field (components 11,22,12)."""
    m = op.matrix
    packed = np.stack([s[..., 0], s[..., 1], SQRT2 * s[..., 2]], axis=-1)
    out = packed @ m.T
    return np.stack([out[..., 0], out[..., 1], out[..., 2] / SQRT2], axis=-1)


def reduced_quad(op: LinOp2, s):
    """Nodewise Q2 values of a symmetric tensor field."""
    m = op.matrix
    packed = np.stack([s[..., 0], s[..., 1], SQRT2 * s[..., 2]], axis=-1)
    return np.einsum("...i,ij,...j->...", packed, m, packed)


def energy(problem: PlateProblem, w, v) -> EnergyBreakdown:
    grid = problem.grid
    wq = quad_weights(grid)
    s = membrane_strain(w, v, grid)
    h = bending_strain(v, grid)
    membrane = 0.5 * float(np.sum(wq * reduced_quad(problem.reduced, s)))
    bending = float(np.sum(wq * reduced_quad(problem.reduced, h))) / 24.0
    load = problem.r33 * float(np.sum(wq * problem.force * v))
    return EnergyBreakdown(membrane, bending, load, membrane + bending - load)


def energy_gradient(problem: PlateProblem, w, v):
    """Exact gradient of the discrete energy w.r.t. nodal values of (w, v)."""
    grid = problem.grid
    ops = operators(grid)
    wq = ops.w2d
    v = check_field(grid, v)
    w = check_field(grid, w, components=2)

    vx, vy = ops.dx(v), ops.dy(v)
    s = membrane_strain(w, v, grid)
    t = apply_reduced(problem.reduced, s)
    t11, t22, t12 = wq * t[..., 0], wq * t[..., 1], wq * t[..., 2]

    gw = np.empty_like(w)
    gw[..., 0] = ops.dx_t(t11) + ops.dy_t(t12)
    gw[..., 1] = ops.dy_t(t22) + ops.dx_t(t12)

    gv = ops.dx_t(t11 * vx + t12 * vy) + ops.dy_t(t22 * vy + t12 * vx)

    h = bending_strain(v, grid)
    b = apply_reduced(problem.reduced, h) / 12.0
    gv += ops.d2x_t(wq * b[..., 0]) + ops.d2y_t(wq * b[..., 1])
    gv += 2.0 * ops.d2xy_t(wq * b[..., 2])

    gv -= problem.r33 * wq * problem.force
    return gw, gv
