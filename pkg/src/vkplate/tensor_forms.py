"""Quadratic forms on small symmetric matrices and the trace-free plane reduction.

Quadratic forms act on symmetric 3x3 (or 2x2) matrices and are stored as 6x6
(or 3x3) symmetric matrices over an orthonormal basis of the symmetric space.
The component ordering is

    (11, 22, 33, sqrt2*23, sqrt2*13, sqrt2*12)          for 3x3,
    (11, 22, sqrt2*12)                                  for 2x2.

The basis is orthonormal in the Frobenius inner product, so the matrix of a
quadratic form coincides with the matrix of its polarization and operator
application is a plain matrix-vector product.

The reduction implemented here minimizes a positive definite form Q3 over
out-of-plane completions of a 2x2 matrix subject to a zero-trace constraint
on the completed 3x3 matrix.  The minimizer is available in closed form
(a 2x2 linear solve), and the minimum value is again a quadratic form on
2x2 matrices, exposed both as values and as a 3x3 operator.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SQRT2 = float(np.sqrt(2.0))

# Relative eigenvalue threshold below which a form is treated as not
# positive definite on the symmetric space.
PD_EIG_RTOL = 1e-10


class IndefiniteFormError(ValueError):
    """Raised when a form fails the positive-definiteness eigenvalue check."""


def sym(m):
    """Symmetric part of a square matrix."""
    m = np.asarray(m, dtype=float)
    return 0.5 * (m + m.T)


def frob(a, b):
    """Frobenius inner product trace(a^T b)."""
    return float(np.tensordot(np.asarray(a, float), np.asarray(b, float), axes=2))


def cof2(m):
    """Cofactor matrix of a 2x2 matrix: cof [[a,b],[c,d]] = [[d,-c],[-b,a]]."""
    m = np.asarray(m, dtype=float)
    return np.array([[m[1, 1], -m[1, 0]], [-m[0, 1], m[0, 0]]])


def vec6(m):
    """Coordinates of sym(m) in the orthonormal basis for symmetric 3x3."""
    s = sym(m)
    return np.array([
        s[0, 0], s[1, 1], s[2, 2],
        SQRT2 * s[1, 2], SQRT2 * s[0, 2], SQRT2 * s[0, 1],
    ])


def unvec6(v):
    v = np.asarray(v, dtype=float)
    a, b, c = v[3] / SQRT2, v[4] / SQRT2, v[5] / SQRT2
    return np.array([
        [v[0], c, b],
        [c, v[1], a],
        [b, a, v[2]],
    ])


def vec3(m):
    """Coordinates of sym(m) in the orthonormal basis for symmetric 2x2."""
    s = sym(m)
    return np.array([s[0, 0], s[1, 1], SQRT2 * s[0, 1]])


def unvec3(v):
    v = np.asarray(v, dtype=float)
    c = v[2] / SQRT2
    return np.array([[v[0], c], [c, v[1]]])


def _sym_basis(dim):
    """Orthonormal basis matrices matching the documented component ordering."""
    if dim == 3:
        return [unvec6(e) for e in np.eye(6)]
    if dim == 2:
        return [unvec3(e) for e in np.eye(3)]
    raise ValueError(f"unsupported dimension {dim}")


def polarize(q, dim):
    """Matrix of the symmetric operator L with <L(F1):F2> = (Q(F1+F2)-Q(F1-F2))/4.

    q is any callable evaluating the quadratic form on dim x dim matrices.
    The result is the (dim*(dim+1)/2)-square matrix of L over the orthonormal
    symmetric basis.  For forms stored in this basis the polarization equals
    the stored matrix; this function exists for forms given only as callables.
    """
    basis = _sym_basis(dim)
    k = len(basis)
    mat = np.empty((k, k))
    for i in range(k):
        for j in range(i, k):
            val = 0.25 * (q(basis[i] + basis[j]) - q(basis[i] - basis[j]))
            mat[i, j] = val
            mat[j, i] = val
    return mat


_ISO_T6 = np.array([1.0, 1.0, 1.0, 0.0, 0.0, 0.0])
_ISO_T3 = np.array([1.0, 1.0, 0.0])


@dataclass(frozen=True)
class QuadForm3:
    """Quadratic form on 3x3 matrices, sensitive only to the symmetric part.

    matrix is the 6x6 symmetric representation over the orthonormal basis.
    """

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (6, 6):
            raise ValueError(f"expected a 6x6 matrix, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("form matrix has non-finite entries")
        object.__setattr__(self, "matrix", 0.5 * (m + m.T))

    def __call__(self, f):
        v = vec6(f)
        return float(v @ self.matrix @ v)

    def stress(self, f):
        """Apply the polarized operator: the symmetric matrix L(f)."""
        return unvec6(self.matrix @ vec6(f))

    def sym_eigenvalues(self):
        return np.linalg.eigvalsh(self.matrix)

    def require_positive_definite(self):
        eigs = self.sym_eigenvalues()
        floor = PD_EIG_RTOL * max(abs(eigs[-1]), np.finfo(float).tiny)
        if eigs[0] <= floor:
            raise IndefiniteFormError(
                "form is not positive definite on symmetric matrices: "
                f"smallest eigenvalue {eigs[0]:.3e} is below the threshold "
                f"{floor:.3e} (1e-10 of the largest eigenvalue {eigs[-1]:.3e})"
            )
        return self

    @classmethod
    def isotropic(cls, lam, mu):
        """The form 2*mu*|sym F|^2 + lam*(tr F)^2."""
        if not mu > 0:
            raise ValueError(f"shear coefficient must be positive, got {mu}")
        if lam < 0:
            raise ValueError(f"trace coefficient must be nonnegative, got {lam}")
        m = 2.0 * mu * np.eye(6) + lam * np.outer(_ISO_T6, _ISO_T6)
        return cls(m)

    @classmethod
    def from_matrix(cls, m, require_pd=True):
        form = cls(np.array(m, dtype=float))
        if require_pd:
            form.require_positive_definite()
        return form

    @classmethod
    def from_file(cls, path):
        """Load a 6x6 symmetric matrix from a whitespace-separated text file.

        Lines starting with '#' are comments.  The component ordering is
        (11, 22, 33, sqrt2*23, sqrt2*13, sqrt2*12).  The matrix must pass the
        positive-definiteness eigenvalue check.
        """
        rows = []
        with open(path) as fh:
            for line in fh:
                body = line.split("#", 1)[0].strip()
                if not body:
                    continue
                rows.append([float(tok) for tok in body.split()])
        arr = np.array(rows, dtype=float)
        if arr.shape != (6, 6):
            raise ValueError(
                f"{path}: expected 6 rows of 6 numbers, got shape {arr.shape}"
            )
        skew = np.max(np.abs(arr - arr.T))
        scale = max(np.max(np.abs(arr)), np.finfo(float).tiny)
        if skew > 1e-8 * scale:
            raise ValueError(
                f"{path}: matrix is not symmetric (max asymmetry {skew:.3e})"
            )
        return cls.from_matrix(arr, require_pd=True)


@dataclass(frozen=True)
class LinOp2:
    """Symmetric linear operator on symmetric 2x2 matrices (3x3 matrix form)."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (3, 3):
            raise ValueError(f"expected a 3x3 matrix, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("operator matrix has non-finite entries")
        object.__setattr__(self, "matrix", 0.5 * (m + m.T))

    def apply(self, f2):
        return unvec3(self.matrix @ vec3(f2))

    def quad(self, f2):
        v = vec3(f2)
        return float(v @ self.matrix @ v)

    def eigenvalues(self):
        return np.linalg.eigvalsh(self.matrix)

    @classmethod
    def isotropic(cls, mu):
        """The operator F -> 2*mu*(sym F + (tr F) Id), the isotropic reduction."""
        if not mu > 0:
            raise ValueError(f"shear coefficient must be positive, got {mu}")
        return cls(2.0 * mu * (np.eye(3) + np.outer(_ISO_T3, _ISO_T3)))


def complete_matrix(f2, d):
    """The 3x3 matrix F'' + d (x) e3 + e3 (x) d for a 2x2 block and a 3-vector."""
    f2 = np.asarray(f2, dtype=float)
    d = np.asarray(d, dtype=float)
    out = np.zeros((3, 3))
    out[:2, :2] = f2
    out[0, 2] = out[2, 0] = d[0]
    out[1, 2] = out[2, 1] = d[1]
    out[2, 2] = 2.0 * d[2]
    return out


# vec6 images of the off-plane completion directions (e1,e3) and (e2,e3) pairs.
_C1 = np.array([0.0, 0.0, 0.0, 0.0, SQRT2, 0.0])
_C2 = np.array([0.0, 0.0, 0.0, SQRT2, 0.0, 0.0])


def completion_vector(form, f2):
    """Minimizer d of Q3 over trace-free completions of the 2x2 block f2.

    The completed matrix is F'' + d (x) e3 + e3 (x) d, constrained to have
    zero trace; this forces d3 = -tr(F'')/2, and the remaining (d1, d2) solve
    a 2x2 positive definite stationarity system, inverted directly.
    """
    form = _as_form3(form)
    f2 = np.asarray(f2, dtype=float)
    d3 = -0.5 * float(np.trace(f2))
    v0 = vec6(complete_matrix(f2, (0.0, 0.0, d3)))
    q = form.matrix
    qc1 = q @ _C1
    qc2 = q @ _C2
    a00 = float(_C1 @ qc1)
    a01 = float(_C1 @ qc2)
    a11 = float(_C2 @ qc2)
    det = a00 * a11 - a01 * a01
    scale = max(abs(a00), abs(a01), abs(a11), np.finfo(float).tiny)
    if a00 <= 1e-12 * scale or det <= 1e-12 * scale * scale:
        raise IndefiniteFormError(
            "stationarity system for the completion is singular; the form is "
            "not positive definite on symmetric matrices"
        )
    b0 = -float(v0 @ qc1)
    b1 = -float(v0 @ qc2)
    d1 = (a11 * b0 - a01 * b1) / det
    d2 = (a00 * b1 - a01 * b0) / det
    return np.array([d1, d2, d3])


def reduced_value(form, f2):
    """Minimum of Q3 over trace-free completions of f2 (a quadratic form in f2)."""
    form = _as_form3(form)
    d = completion_vector(form, f2)
    return form(complete_matrix(f2, d))


def reduced_operator(form):
    """The reduced quadratic form as a symmetric operator on symmetric 2x2.

    Exact by linearity of the completion minimizer: the map from a symmetric
    2x2 block to its completed minimizing 3x3 matrix is linear, so the reduced
    form matrix is T^t Q T for the 6x3 matrix T of completed basis images.
    """
    form = _as_form3(form)
    t = np.empty((6, 3))
    for k, b in enumerate(_sym_basis(2)):
        d = completion_vector(form, b)
        t[:, k] = vec6(complete_matrix(b, d))
    m = t.T @ form.matrix @ t
    return LinOp2(0.5 * (m + m.T))


def _as_form3(form):
    if isinstance(form, QuadForm3):
        return form
    return QuadForm3(np.asarray(form, dtype=float))
