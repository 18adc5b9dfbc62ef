"""Tensor algebra: bases, polarization, completion, reduction."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vkplate.tensor_forms import (
    IndefiniteFormError,
    LinOp2,
    QuadForm3,
    cof2,
    complete_matrix,
    completion_vector,
    frob,
    polarize,
    reduced_operator,
    reduced_value,
    sym,
    unvec3,
    unvec6,
    vec3,
    vec6,
)

finite = st.floats(-10.0, 10.0, allow_nan=False, allow_infinity=False)


def mat2(rng):
    return rng.normal(size=(2, 2))


def mat3(rng):
    return rng.normal(size=(3, 3))


def test_sym_is_symmetric_part():
    rng = np.random.default_rng(0)
    m = mat3(rng)
    s = sym(m)
    assert np.allclose(s, s.T)
    assert np.allclose(s, 0.5 * (m + m.T))


def test_frob_inner_product():
    a = np.array([[1.0, 2.0], [3.0, 4.0]])
    b = np.array([[5.0, 6.0], [7.0, 8.0]])
    assert frob(a, b) == pytest.approx(np.sum(a * b))


@given(
    st.tuples(finite, finite, finite, finite),
    st.tuples(finite, finite, finite, finite),
)
def test_cof2_bilinear_identity(entries_a, entries_b):
    # <A : cof B> polarizes 2 det; with A = B it gives 2 det A exactly
    a = np.array(entries_a).reshape(2, 2)
    b = np.array(entries_b).reshape(2, 2)
    assert frob(a, cof2(a)) == pytest.approx(2.0 * np.linalg.det(a), abs=1e-9)
    # cof is linear in 2d
    assert np.allclose(cof2(a + b), cof2(a) + cof2(b))


def test_cof2_matches_adjugate():
    m = np.array([[2.0, -1.0], [4.0, 3.0]])
    # M cof(M)^T = det(M) Id for the cofactor matrix
    assert np.allclose(m @ cof2(m).T, np.linalg.det(m) * np.eye(2))


def test_vec6_isometry_and_roundtrip():
    rng = np.random.default_rng(1)
    for _ in range(20):
        s = sym(mat3(rng))
        v = vec6(s)
        assert v.shape == (6,)
        assert np.dot(v, v) == pytest.approx(np.sum(s * s), rel=1e-14)
        assert np.allclose(unvec6(v), s)


def test_vec3_isometry_and_roundtrip():
    rng = np.random.default_rng(2)
    for _ in range(20):
        s = sym(mat2(rng))
        v = vec3(s)
        assert v.shape == (3,)
        assert np.dot(v, v) == pytest.approx(np.sum(s * s), rel=1e-14)
        assert np.allclose(unvec3(v), s)


def test_vec6_component_order():
    s = np.array([[1.0, 6.0, 5.0], [6.0, 2.0, 4.0], [5.0, 4.0, 3.0]])
    v = vec6(s)
    r2 = np.sqrt(2.0)
    assert np.allclose(v, [1.0, 2.0, 3.0, 4.0 * r2, 5.0 * r2, 6.0 * r2])


def test_polarize_recovers_gram_matrix():
    rng = np.random.default_rng(3)
    a = rng.normal(size=(6, 6))
    gram = 0.5 * (a + a.T)

    def q(m):
        v = vec6(sym(m))
        return float(v @ gram @ v)

    rec = polarize(q, dim=3)
    assert np.max(np.abs(rec - gram)) < 1e-12


def test_polarize_dim2():
    def q(m):
        # |sym M|^2 + 3 (tr M)^2 on 2x2
        s = sym(m)
        return float(np.sum(s * s) + 3.0 * np.trace(s) ** 2)

    rec = polarize(q, dim=2)
    t = np.array([1.0, 1.0, 0.0])
    assert np.allclose(rec, np.eye(3) + 3.0 * np.outer(t, t))


def test_isotropic_form_value():
    rng = np.random.default_rng(4)
    for lam, mu in [(0.0, 1.0), (1.0, 0.5), (10.0, 4.0)]:
        form = QuadForm3.isotropic(lam, mu)
        for _ in range(10):
            f = mat3(rng)
            s = sym(f)
            expect = 2.0 * mu * np.sum(s * s) + lam * np.trace(f) ** 2
            assert form(f) == pytest.approx(expect, rel=1e-13)


def test_isotropic_eigenvalues():
    form = QuadForm3.isotropic(3.0, 2.0)
    eigs = form.sym_eigenvalues()
    # 2 mu with multiplicity 5, 2 mu + 3 lam once
    assert np.allclose(np.sort(eigs), [4.0] * 5 + [13.0])


def test_stress_is_half_gradient():
    # Q(F + tH) - Q(F) = 2 t <stress(F) : sym H> + O(t^2), exact for quadratics
    rng = np.random.default_rng(5)
    form = QuadForm3.from_matrix(
        np.eye(6) + 0.3 * sym(rng.normal(size=(6, 6)))
    )
    f = mat3(rng)
    h = mat3(rng)
    lhs = form(f + h) - form(f) - form(h)
    assert lhs == pytest.approx(2.0 * frob(form.stress(f), sym(h)), rel=1e-12)


def test_require_positive_definite_rejects():
    m = np.eye(6)
    m[0, 0] = -1.0
    with pytest.raises(IndefiniteFormError):
        QuadForm3.from_matrix(m)
    # borderline singular also rejected
    m[0, 0] = 0.0
    with pytest.raises(IndefiniteFormError):
        QuadForm3.from_matrix(m)


def test_from_file_roundtrip(tmp_path):
    rng = np.random.default_rng(6)
    a = sym(rng.normal(size=(6, 6))) * 0.2 + np.eye(6)
    path = tmp_path / "form.txt"
    lines = ["# comment line", ""]
    lines += ["  ".join("%.17g" % x for x in row) + "  # trailing" for row in a]
    path.write_text("\n".join(lines) + "\n")
    form = QuadForm3.from_file(path)
    assert np.array_equal(form.matrix, a)


def test_from_file_rejects_bad_shape(tmp_path):
    path = tmp_path / "short.txt"
    path.write_text("1 0 0 0 0 0\n0 1 0 0 0 0\n")
    with pytest.raises(ValueError, match="6 rows"):
        QuadForm3.from_file(path)


def test_from_file_rejects_asymmetry(tmp_path):
    a = np.eye(6)
    a[0, 1] = 0.5
    path = tmp_path / "skew.txt"
    path.write_text("\n".join(" ".join("%g" % x for x in row) for row in a))
    with pytest.raises(ValueError, match="not symmetric"):
        QuadForm3.from_file(path)


def test_complete_matrix_layout():
    f2 = np.array([[1.0, 2.0], [2.0, 3.0]])
    d = np.array([4.0, 5.0, 6.0])
    m = complete_matrix(f2, d)
    expect = np.array(
        [[1.0, 2.0, 4.0], [2.0, 3.0, 5.0], [4.0, 5.0, 6.0 * 2.0]]
    )
    assert np.array_equal(m, expect)


def test_completion_is_trace_free():
    rng = np.random.default_rng(7)
    form = QuadForm3.isotropic(2.0, 1.5)
    for _ in range(10):
        f2 = sym(mat2(rng))
        d = completion_vector(form, f2)
        assert abs(np.trace(complete_matrix(f2, d))) < 1e-14


def test_completion_minimality():
    # any trace-free perturbation of the completion cannot lower the value
    rng = np.random.default_rng(8)
    from vkplate.verification import random_positive_form

    form = random_positive_form(rng)
    f2 = sym(mat2(rng))
    d = completion_vector(form, f2)
    base = form(complete_matrix(f2, d))
    for _ in range(50):
        e = rng.normal(size=2) * rng.choice([1e-3, 0.1, 1.0])
        trial = form(complete_matrix(f2, d + np.array([e[0], e[1], 0.0])))
        assert trial >= base - 1e-12 * max(abs(base), 1.0)


@given(finite, finite, finite, st.integers(0, 2**31 - 1))
@settings(max_examples=60, deadline=None)
def test_completion_linearity(a11, a22, a12, seed):
    rng = np.random.default_rng(seed)
    from vkplate.verification import random_positive_form

    form = random_positive_form(rng)
    f2 = np.array([[a11, a12], [a12, a22]])
    g2 = sym(rng.normal(size=(2, 2)))
    lhs = completion_vector(form, 2.0 * f2 + g2)
    rhs = 2.0 * completion_vector(form, f2) + completion_vector(form, g2)
    scale = max(np.max(np.abs(lhs)), np.max(np.abs(rhs)), 1.0)
    assert np.max(np.abs(lhs - rhs)) < 1e-9 * scale


def test_reduced_operator_matches_reduced_value():
    rng = np.random.default_rng(9)
    from vkplate.verification import random_positive_form

    for _ in range(5):
        form = random_positive_form(rng)
        op = reduced_operator(form)
        for _ in range(10):
            f2 = sym(mat2(rng))
            assert op.quad(f2) == pytest.approx(
                reduced_value(form, f2), rel=1e-12, abs=1e-12
            )


def test_isotropic_reduction_closed_form():
    # minimizing 2mu|sym F|^2 + lam(tr F)^2 over trace-free completions kills
    # lam and yields 2mu(|sym F''|^2 + (tr F'')^2)
    rng = np.random.default_rng(10)
    for mu in (0.5, 1.0, 4.0):
        ops = [reduced_operator(QuadForm3.isotropic(lam, mu)) for lam in (0.0, 1.0, 10.0)]
        ref = LinOp2.isotropic(mu)
        for op in ops:
            assert np.max(np.abs(op.matrix - ref.matrix)) < 1e-12
        for _ in range(5):
            f2 = sym(mat2(rng))
            s = sym(f2)
            expect = 2.0 * mu * (np.sum(s * s) + np.trace(f2) ** 2)
            assert ops[0].quad(f2) == pytest.approx(expect, rel=1e-12)


def test_linop2_apply_matches_quad():
    rng = np.random.default_rng(11)
    op = LinOp2(sym(rng.normal(size=(3, 3))) + 3.0 * np.eye(3))
    f2 = sym(mat2(rng))
    assert op.quad(f2) == pytest.approx(frob(op.apply(f2), f2), rel=1e-13)


def test_linop2_isotropic_matrix():
    mu = 0.75
    m = LinOp2.isotropic(mu).matrix
    expect = 2.0 * mu * np.array(
        [[2.0, 1.0, 0.0], [1.0, 2.0, 0.0], [0.0, 0.0, 1.0]]
    )
    assert np.allclose(m, expect)


def test_rejects_bad_shapes():
    with pytest.raises(ValueError):
        QuadForm3(np.eye(5))
    with pytest.raises(ValueError):
        LinOp2(np.eye(2))
    with pytest.raises(ValueError):
        QuadForm3.isotropic(0.0, 0.0)
    with pytest.raises(ValueError):
        QuadForm3.isotropic(-1.0, 1.0)
    with pytest.raises(ValueError):
        LinOp2.isotropic(-2.0)
