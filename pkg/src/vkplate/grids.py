"""Uniform rectangular grids, finite difference operators, and field CSV io.

Fields are plain numpy arrays over the grid nodes: scalars have shape
(nx, ny), in-plane vectors (nx, ny, 2), symmetric 2x2 tensors (nx, ny, 3)
with components ordered (11, 22, 12).  Node (i, j) sits at (i*hx, j*hy).

All derivative operators are second order: central differences in the
interior, one-sided second-order stencils at free boundaries, periodic wrap
otherwise.  Operators are exposed as scipy sparse matrices acting on C-order
flattened fields, so adjoints are exact transposes.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp


class GridMismatchError(ValueError):
    """Raised when a field's shape does not match its grid."""


@dataclass(frozen=True)
class Grid:
    lx: float
    ly: float
    nx: int
    ny: int
    periodic: bool = False

    def __post_init__(self):
        if not (self.lx > 0 and self.ly > 0):
            raise ValueError(f"domain lengths must be positive, got {self.lx}, {self.ly}")
        if self.nx < 4 or self.ny < 4:
            raise ValueError(f"need at least 4 nodes per direction, got {self.nx}x{self.ny}")

    @property
    def hx(self):
        return self.lx / self.nx if self.periodic else self.lx / (self.nx - 1)

    @property
    def hy(self):
        return self.ly / self.ny if self.periodic else self.ly / (self.ny - 1)

    @property
    def shape(self):
        return (self.nx, self.ny)

    @property
    def size(self):
        return self.nx * self.ny

    def x(self):
        return np.arange(self.nx) * self.hx

    def y(self):
        return np.arange(self.ny) * self.hy

    def meshgrid(self):
        return np.meshgrid(self.x(), self.y(), indexing="ij")


def check_field(grid, field, components=None):
    """Validate shape against the grid and reject non-finite entries."""
    field = np.asarray(field, dtype=float)
    want = grid.shape if components is None else grid.shape + (components,)
    if field.shape != want:
        raise GridMismatchError(
            f"field shape {field.shape} does not match grid shape {want}"
        )
    if not np.all(np.isfinite(field)):
        raise ValueError("field has non-finite entries")
    return field


def _d1_1d(n, h, periodic):
    # Second-order first derivative.
    m = sp.lil_matrix((n, n))
    for i in range(n):
        if periodic:
            m[i, (i - 1) % n] = -1.0
            m[i, (i + 1) % n] = 1.0
        elif i == 0:
            m[0, 0], m[0, 1], m[0, 2] = -3.0, 4.0, -1.0
        elif i == n - 1:
            m[i, i - 2], m[i, i - 1], m[i, i] = 1.0, -4.0, 3.0
        else:
            m[i, i - 1], m[i, i + 1] = -1.0, 1.0
    return sp.csr_matrix(m / (2.0 * h))


def _d2_1d(n, h, periodic):
    # Second-order second derivative, 3-point interior stencil.
    m = sp.lil_matrix((n, n))
    for i in range(n):
        if periodic:
            m[i, (i - 1) % n] = 1.0
            m[i, i] += -2.0
            m[i, (i + 1) % n] = 1.0
        elif i == 0:
            m[0, 0], m[0, 1], m[0, 2], m[0, 3] = 2.0, -5.0, 4.0, -1.0
        elif i == n - 1:
            m[i, i - 3], m[i, i - 2], m[i, i - 1], m[i, i] = -1.0, 4.0, -5.0, 2.0
        else:
            m[i, i - 1], m[i, i], m[i, i + 1] = 1.0, -2.0, 1.0
    return sp.csr_matrix(m / (h * h))


def _trapezoid_1d(n, h, periodic):
    if periodic:
        return np.full(n, h)
    w = np.full(n, h)
    w[0] = w[-1] = 0.5 * h
    return w


class Ops:
    """Cached sparse operators and quadrature weights for one grid."""

    def __init__(self, grid):
        self.grid = grid
        nx, ny = grid.nx, grid.ny
        ix = sp.identity(nx, format="csr")
        iy = sp.identity(ny, format="csr")
        d1x = _d1_1d(nx, grid.hx, grid.periodic)
        d1y = _d1_1d(ny, grid.hy, grid.periodic)
        d2x = _d2_1d(nx, grid.hx, grid.periodic)
        d2y = _d2_1d(ny, grid.hy, grid.periodic)
        self.gx = sp.csr_matrix(sp.kron(d1x, iy))
        self.gy = sp.csr_matrix(sp.kron(ix, d1y))
        self.dxx = sp.csr_matrix(sp.kron(d2x, iy))
        self.dyy = sp.csr_matrix(sp.kron(ix, d2y))
        self.dxy = sp.csr_matrix(self.gx @ self.gy)
        self.gxt = sp.csr_matrix(self.gx.T)
        self.gyt = sp.csr_matrix(self.gy.T)
        self.dxxt = sp.csr_matrix(self.dxx.T)
        self.dyyt = sp.csr_matrix(self.dyy.T)
        self.dxyt = sp.csr_matrix(self.dxy.T)
        wx = _trapezoid_1d(nx, grid.hx, grid.periodic)
        wy = _trapezoid_1d(ny, grid.hy, grid.periodic)
        self.w2d = np.outer(wx, wy)
        self.w = self.w2d.ravel()
        self.wsum = float(self.w.sum())

    def _apply(self, mat, f):
        return (mat @ np.asarray(f, float).ravel()).reshape(self.grid.shape)

    def dx(self, f):
        return self._apply(self.gx, f)

    def dy(self, f):
        return self._apply(self.gy, f)

    def d2x(self, f):
        return self._apply(self.dxx, f)

    def d2y(self, f):
        return self._apply(self.dyy, f)

    def d2xy(self, f):
        return self._apply(self.dxy, f)

    def dx_t(self, f):
        return self._apply(self.gxt, f)

    def dy_t(self, f):
        return self._apply(self.gyt, f)

    def d2x_t(self, f):
        return self._apply(self.dxxt, f)

    def d2y_t(self, f):
        return self._apply(self.dyyt, f)

    def d2xy_t(self, f):
        return self._apply(self.dxyt, f)


@lru_cache(maxsize=None)
def operators(grid: Grid) -> Ops:
    return Ops(grid)


def quad_weights(grid):
    """Trapezoid quadrature weights as an (nx, ny) array (cell area if periodic)."""
    return operators(grid).w2d


def integrate(grid, f):
    return float(np.sum(quad_weights(grid) * np.asarray(f, float)))


def field_l2(grid, f):
    """Discrete L2 norm weighted by the quadrature, over all components."""
    f = np.asarray(f, dtype=float)
    w = quad_weights(grid)
    if f.ndim == 3:
        return float(np.sqrt(np.sum(w[..., None] * f * f)))
    return float(np.sqrt(np.sum(w * f * f)))


def weighted_mean(grid, f):
    ops = operators(grid)
    return float(np.sum(ops.w2d * np.asarray(f, float)) / ops.wsum)


def write_field(path, field, grid):
    """Write a field as CSV: header '# nx ny Lx Ly components', one row per node.

    Nodes are emitted in row-major order (the y index varies fastest).  Values
    use repr precision so a read back reproduces them bitwise.
    """
    field = np.asarray(field, dtype=float)
    if field.shape[:2] != grid.shape:
        raise GridMismatchError(
            f"field shape {field.shape} does not match grid {grid.shape}"
        )
    comps = 1 if field.ndim == 2 else field.shape[2]
    flat = field.reshape(grid.size, comps)
    with open(path, "w") as fh:
        fh.write(f"# {grid.nx} {grid.ny} {grid.lx!r} {grid.ly!r} {comps}\n")
        for row in flat:
            fh.write(",".join(repr(float(val)) for val in row) + "\n")


def read_field(path):
    """Read a field CSV written by write_field.

    Returns (field, meta) where meta is a dict with nx, ny, lx, ly, components.
    The periodic flag is not part of the format; the caller supplies it when
    rebuilding a Grid.
    """
    with open(path) as fh:
        header = fh.readline()
        if not header.startswith("#"):
            raise ValueError(f"{path}: missing '# nx ny Lx Ly components' header")
        parts = header[1:].split()
        if len(parts) != 5:
            raise ValueError(f"{path}: malformed header {header!r}")
        nx, ny = int(parts[0]), int(parts[1])
        lx, ly = float(parts[2]), float(parts[3])
        comps = int(parts[4])
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.shape != (nx * ny, comps):
        raise ValueError(
            f"{path}: expected {nx * ny} rows of {comps} values, got {data.shape}"
        )
    field = data.reshape(nx, ny, comps)
    if comps == 1:
        field = field[..., 0]
    meta = {"nx": nx, "ny": ny, "lx": lx, "ly": ly, "components": comps}
    return field, meta
