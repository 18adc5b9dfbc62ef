"""Independent oracles and identity harnesses for the reduction machinery.

Everything here cross-checks the closed-form implementations without reusing
them: the reduced quadratic form is re-derived by brute-force grid search
over completions, material forms are re-derived by finite differencing stored
energy densities at the identity, and the algebraic identities satisfied by
the reduced operator (off-plane stress components vanish, in-plane stress
reduces exactly, thickness moments of the stress profile) are checked on
randomized inputs.  Suites return Report objects that serialize to key: value
lines with pass/fail counts and worst-case witnesses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .tensor_forms import (
    QuadForm3,
    complete_matrix,
    completion_vector,
    reduced_operator,
    sym,
    vec6,
)


@dataclass
class Report:
    name: str
    passed: bool
    entries: list

    def lines(self):
        out = [f"suite: {self.name}"]
        for key, value in self.entries:
            out.append(f"{key}: {value}")
        out.append(f"status: {'PASS' if self.passed else 'FAIL'}")
        return out

    def text(self):
        return "\n".join(self.lines()) + "\n"


# ---------------------------------------------------------------------------
# smooth truncation


@dataclass(frozen=True)
class Truncation:
    """Odd C^1 truncation at scale omega with a sine blend.

    t for |t| <= omega, the blend
    sign(t) * (|t| + omega + (omega/pi) sin(pi (|t| - omega) / omega)) / 2
    for omega <= |t| <= 2 omega, and sign(t) * 3 omega / 2 beyond.  Satisfies
    |theta(t)| <= |t|, |theta| <= 3 omega / 2, |theta'| <= 1, and
    |theta''| <= pi / (2 omega) with the constant attained at |t| = 3 omega / 2.
    """

    omega: float

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError(f"truncation scale must be positive, got {self.omega}")

    def value(self, t):
        t = np.asarray(t, dtype=float)
        a = np.abs(t)
        w = self.omega
        blend = 0.5 * (a + w + (w / np.pi) * np.sin(np.pi * (a - w) / w))
        out = np.where(a <= w, a, np.where(a <= 2.0 * w, blend, 1.5 * w))
        return np.sign(t) * out

    def slope(self, t):
        t = np.asarray(t, dtype=float)
        a = np.abs(t)
        w = self.omega
        blend = 0.5 * (1.0 + np.cos(np.pi * (a - w) / w))
        return np.where(a <= w, 1.0, np.where(a <= 2.0 * w, blend, 0.0))

    def curvature(self, t):
        t = np.asarray(t, dtype=float)
        a = np.abs(t)
        w = self.omega
        blend = -(np.pi / (2.0 * w)) * np.sin(np.pi * (a - w) / w)
        inner = np.where((a > w) & (a < 2.0 * w), blend, 0.0)
        return np.sign(t) * inner


def truncation_suite(tr: Truncation, samples=None):
    """Check the truncation bounds and knot continuity on a sample set."""
    w = tr.omega
    if samples is None:
        samples = np.linspace(-3.0 * w, 3.0 * w, 4001)
    samples = np.sort(np.asarray(samples, dtype=float))
    val = tr.value(samples)
    slo = tr.slope(samples)
    cur = tr.curvature(samples)
    slack = 1e-12

    checks = []

    excess = np.abs(val) - np.abs(samples)
    i = int(np.argmax(excess))
    checks.append(("abs_value_le_abs_t", excess[i] <= slack * max(w, 1.0),
                   f"{excess[i]:.3e} at t={samples[i]:.6g}"))

    sup = float(np.max(np.abs(val)))
    checks.append(("sup_le_1.5_omega", sup <= 1.5 * w * (1.0 + slack), f"{sup:.15g}"))

    smax = float(np.max(np.abs(slo)))
    checks.append(("slope_le_1", smax <= 1.0 + slack, f"{smax:.15g}"))

    cmax = float(np.max(np.abs(cur)))
    bound = 0.5 * np.pi / w
    checks.append(("curvature_le_pi_over_2omega", cmax <= bound * (1.0 + slack),
                   f"{cmax * w:.15g} (times omega)"))

    diffs = np.diff(val)
    j = int(np.argmin(diffs))
    checks.append(("nondecreasing", diffs[j] >= -slack * max(w, 1.0),
                   f"min increment {diffs[j]:.3e}"))

    eps = 1e-9 * w
    knot_gap = 0.0
    for knot in (w, 2.0 * w, -w, -2.0 * w):
        knot_gap = max(
            knot_gap,
            abs(float(tr.value(knot - eps)) - float(tr.value(knot + eps))),
            abs(float(tr.slope(knot - eps)) - float(tr.slope(knot + eps))) * w,
        )
    checks.append(("c1_at_knots", knot_gap <= 1e-7 * w, f"gap {knot_gap:.3e}"))

    entries = [
        ("omega", w),
        ("samples", samples.size),
        ("max_abs_curvature_times_omega", f"{cmax * w:.15g}"),
    ]
    failed = 0
    for name, ok, witness in checks:
        entries.append((f"check.{name}", f"{'pass' if ok else 'FAIL'} ({witness})"))
        failed += 0 if ok else 1
    entries.append(("checks", len(checks)))
    entries.append(("failed", failed))
    return Report(name="truncation", passed=failed == 0, entries=entries)


# ---------------------------------------------------------------------------
# brute-force reduction oracle


class RadiusError(ValueError):
    """Search incumbent hit the boundary of the brute-force box."""


# vec6 images of the two off-plane completion directions.
_B1 = vec6(complete_matrix(np.zeros((2, 2)), (1.0, 0.0, 0.0)))
_B2 = vec6(complete_matrix(np.zeros((2, 2)), (0.0, 1.0, 0.0)))


def bruteforce_reduced_value(form: QuadForm3, f2, radius, levels=18, points=17):
    """Minimum of Q3 over trace-free completions by refined grid search.

    Independent of the closed-form minimizer: only the trace constraint
    (which pins the 33 entry) is used, and the in-plane components (d1, d2)
    are searched on a shrinking grid re-centered on the incumbent.  An
    incumbent on the boundary of the original box raises RadiusError.
    """
    if not radius > 0:
        raise ValueError(f"search radius must be positive, got {radius}")
    f2 = np.asarray(f2, dtype=float)
    d3 = -0.5 * float(np.trace(f2))
    v0 = vec6(complete_matrix(f2, (0.0, 0.0, d3)))
    q = form.matrix

    def evaluate(d1s, d2s):
        g1, g2 = np.meshgrid(d1s, d2s, indexing="ij")
        vecs = (
            v0[:, None]
            + _B1[:, None] * g1.ravel()[None, :]
            + _B2[:, None] * g2.ravel()[None, :]
        )
        vals = np.sum(vecs * (q @ vecs), axis=0)
        k = int(np.argmin(vals))
        return float(vals[k]), g1.ravel()[k], g2.ravel()[k]

    center = np.zeros(2)
    half = float(radius)
    best = math.inf
    for _ in range(levels):
        lo = np.maximum(center - half, -radius)
        hi = np.minimum(center + half, radius)
        d1s = np.linspace(lo[0], hi[0], points)
        d2s = np.linspace(lo[1], hi[1], points)
        val, b1, b2 = evaluate(d1s, d2s)
        best = min(best, val)
        cell = max(hi[0] - lo[0], hi[1] - lo[1]) / (points - 1)
        box_gap = min(radius - abs(b1), radius - abs(b2))
        if box_gap <= 0.5 * cell:
            raise RadiusError(
                f"incumbent ({b1:.6g}, {b2:.6g}) sits on the search boundary "
                f"(radius {radius}); enlarge the radius"
            )
        center = np.array([b1, b2])
        # keep three cells of margin around the incumbent
        half = 3.0 * cell
    return best


# ---------------------------------------------------------------------------
# stored energy densities and their hessian at the identity


def _stretch_distance_sq(f):
    """|sqrt(F^T F) - Id|^2 via eigendecomposition of F^T F."""
    f = np.asarray(f, dtype=float)
    w, v = np.linalg.eigh(f.T @ f)
    if np.any(w <= 0):
        return math.inf
    root = (v * np.sqrt(w)) @ v.T
    return float(np.sum((root - np.eye(3)) ** 2))


def stored_energy_log(f, q=2.0):
    """Stretch distance plus a |log det|^q volumetric penalty (det > 0)."""
    det = float(np.linalg.det(np.asarray(f, dtype=float)))
    if det <= 0:
        return math.inf
    return _stretch_distance_sq(f) + abs(math.log(det)) ** q


def stored_energy_reciprocal(f, q=2.0):
    """Stretch distance plus a |1/det - 1|^q volumetric penalty (det > 0)."""
    det = float(np.linalg.det(np.asarray(f, dtype=float)))
    if det <= 0:
        return math.inf
    return _stretch_distance_sq(f) + abs(1.0 / det - 1.0) ** q


def density_hessian(density, q=2.0, step=1e-4):
    """Quadratic form of a stored energy density at the identity.

    Central second differences over the orthonormal symmetric basis with one
    Richardson extrapolation level.  The density must be finite near the
    identity and minimal there; q >= 2 keeps the volumetric penalties twice
    differentiable.
    """
    if q < 2:
        raise ValueError(f"exponent must be at least 2, got {q}")
    from .tensor_forms import _sym_basis

    basis = _sym_basis(3)
    eye = np.eye(3)

    def w(f):
        val = density(f, q)
        if not np.isfinite(val):
            raise ValueError("density evaluated to a non-finite value near the identity")
        return val

    def hess(h):
        m = np.empty((6, 6))
        w0 = w(eye)
        for i in range(6):
            bi = basis[i]
            m[i, i] = (w(eye + h * bi) - 2.0 * w0 + w(eye - h * bi)) / (h * h)
            for j in range(i + 1, 6):
                bj = basis[j]
                val = (
                    w(eye + h * (bi + bj))
                    - w(eye + h * (bi - bj))
                    - w(eye - h * (bi - bj))
                    + w(eye - h * (bi + bj))
                ) / (4.0 * h * h)
                m[i, j] = m[j, i] = val
        return m

    coarse = hess(step)
    fine = hess(0.5 * step)
    m = (4.0 * fine - coarse) / 3.0
    return QuadForm3(0.5 * (m + m.T))


# ---------------------------------------------------------------------------
# randomized identity harnesses


def random_positive_form(rng, scale=1.0, min_ratio=0.1):
    """Random symmetric 6x6 matrix shifted to be safely positive definite."""
    a = rng.normal(size=(6, 6)) * scale
    s = 0.5 * (a + a.T)
    eigs = np.linalg.eigvalsh(s)
    span = eigs[-1] - eigs[0]
    if span <= 0:
        span = 1.0
    shift = min_ratio * span - eigs[0]
    return QuadForm3(s + shift * np.eye(6))


def reduction_identity_check(form: QuadForm3, trials=1000, seed=0):
    """Check the stress identities of the reduced operator on random inputs.

    For each trial 2x2 block G2: complete it with the minimizer (zero trace),
    apply the full operator to get the stress E, and verify that the
    off-plane components E13, E23 vanish and that the in-plane reduction
    L2(G2) = E'' - E33 Id holds.  Also checks linearity of the minimizer on
    random pairs.  Tolerances are 1e-10 relative.
    """
    rng = np.random.default_rng(seed)
    l2 = reduced_operator(form)
    worst_off = 0.0
    worst_identity = 0.0
    worst_linear = 0.0
    witness = None
    failures = 0
    for _ in range(trials):
        g2 = sym(rng.normal(size=(2, 2)) * rng.choice([0.1, 1.0, 10.0]))
        d = completion_vector(form, g2)
        g = complete_matrix(g2, d)
        e = form.stress(g)
        scale = max(float(np.max(np.abs(e))), np.finfo(float).tiny)
        off = max(abs(e[0, 2]), abs(e[1, 2])) / scale
        reduced = l2.apply(g2)
        identity = float(
            np.max(np.abs(reduced - (e[:2, :2] - e[2, 2] * np.eye(2))))
        ) / max(scale, 1.0)

        h2 = sym(rng.normal(size=(2, 2)))
        dl = completion_vector(form, g2 + h2) - d - completion_vector(form, h2)
        linear = float(np.max(np.abs(dl))) / max(
            float(np.max(np.abs(d))), 1.0
        )

        bad = max(off, identity, linear)
        if bad > max(worst_off, worst_identity, worst_linear):
            witness = np.round(g2, 6).tolist()
        worst_off = max(worst_off, off)
        worst_identity = max(worst_identity, identity)
        worst_linear = max(worst_linear, linear)
        if off > 1e-10 or identity > 1e-10 or linear > 1e-10:
            failures += 1
    entries = [
        ("seed", seed),
        ("trials", trials),
        ("failed", failures),
        ("worst_offplane_stress", f"{worst_off:.3e}"),
        ("worst_reduction_identity", f"{worst_identity:.3e}"),
        ("worst_minimizer_linearity", f"{worst_linear:.3e}"),
        ("worst_witness_g2", witness),
    ]
    return Report(name="stress-reduction", passed=failures == 0, entries=entries)


@dataclass(frozen=True)
class StrainProfile:
    """Through-thickness strain G''(x3) = g0 - x3 g1 with symmetric g1."""

    g0: np.ndarray
    g1: np.ndarray

    def __post_init__(self):
        g0 = np.asarray(self.g0, dtype=float)
        g1 = np.asarray(self.g1, dtype=float)
        if g0.shape != (2, 2) or g1.shape != (2, 2):
            raise ValueError("profile blocks must be 2x2")
        if not (np.all(np.isfinite(g0)) and np.all(np.isfinite(g1))):
            raise ValueError("profile has non-finite entries")
        scale = max(float(np.max(np.abs(g1))), np.finfo(float).tiny)
        if float(np.max(np.abs(g1 - g1.T))) > 1e-12 * scale:
            raise ValueError("curvature block must be symmetric")
        object.__setattr__(self, "g0", g0)
        object.__setattr__(self, "g1", g1)

    def at(self, x3):
        return self.g0 - x3 * self.g1


def stress_moments_check(form: QuadForm3, profile: StrainProfile, quad_points=8):
    """Thickness moments of the reduced stress profile against the operator.

    Integrates E''(x3) - E33(x3) Id over x3 in (-1/2, 1/2) with Gauss-Legendre
    quadrature; the zeroth moment must equal L2(sym g0) and the first moment
    -L2(g1)/12.  Tolerance 1e-10 relative.
    """
    nodes, weights = np.polynomial.legendre.leggauss(quad_points)
    nodes = 0.5 * nodes
    weights = 0.5 * weights
    m0 = np.zeros((2, 2))
    m1 = np.zeros((2, 2))
    for x3, wt in zip(nodes, weights):
        g2 = profile.at(x3)
        d = completion_vector(form, g2)
        e = form.stress(complete_matrix(g2, d))
        t = e[:2, :2] - e[2, 2] * np.eye(2)
        m0 += wt * t
        m1 += wt * x3 * t
    l2 = reduced_operator(form)
    ref0 = l2.apply(sym(profile.g0))
    ref1 = -l2.apply(profile.g1) / 12.0
    scale = max(float(np.max(np.abs(ref0))), float(np.max(np.abs(ref1))), 1.0)
    err0 = float(np.max(np.abs(m0 - ref0))) / scale
    err1 = float(np.max(np.abs(m1 - ref1))) / scale
    ok = err0 <= 1e-10 and err1 <= 1e-10
    entries = [
        ("quad_points", quad_points),
        ("zeroth_moment_error", f"{err0:.3e}"),
        ("first_moment_error", f"{err1:.3e}"),
    ]
    return Report(name="stress-moments", passed=ok, entries=entries)
