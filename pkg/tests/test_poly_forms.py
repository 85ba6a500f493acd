import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import jet_vanishing, random_vecpoly
from sturmflow.corpus import p1, random_form
from sturmflow.poly_forms import (
    HermitianForm,
    MatrixPolynomial,
    d_lambda_rescale,
    euler_lagrange,
    rescale,
    rescaled_operator,
    sesquilinear,
    validate_form,
    weak_form_residual,
)

C = (2.5 * np.pi) ** 2


# ---------------------------------------------------------------------------
# MatrixPolynomial


def test_evaluation_shape_and_value():
    p = MatrixPolynomial(np.array([np.eye(2), [[0, 1], [2, 0]]]))
    assert p(0.5).shape == (2, 2)
    assert np.allclose(p(0.5), [[1, 0.5], [1, 1]])
    assert p(np.linspace(0, 1, 7)).shape == (7, 2, 2)


def test_derivative_lowers_degree():
    p = MatrixPolynomial.scalar([1.0, 2.0, 3.0])
    assert p.deriv().degree == 1
    assert np.allclose(p.deriv().coeffs[:, 0, 0], [2.0, 6.0])
    assert MatrixPolynomial.scalar([4.0]).deriv().is_zero


def test_hermitian_iff_every_coefficient_hermitian():
    H = np.array([[1, 1j], [-1j, 2]])
    assert MatrixPolynomial(np.array([H, 3 * H])).is_hermitian()
    assert not MatrixPolynomial(np.array([H, [[0, 1], [0, 0]]])).is_hermitian()


def test_coefficients_are_read_only():
    p = MatrixPolynomial.scalar([1.0])
    with pytest.raises(ValueError):
        p.coeffs[0, 0, 0] = 2.0


# ---------------------------------------------------------------------------
# validate_form


def test_valid_classical_form():
    assert validate_form(p1()) == []


def test_wrong_leading_coefficient():
    form = HermitianForm.build(1, 1, 0, {(0, 0): [-C], (1, 1): [2.0]})
    assert "ω_{m,m} ≠ diag(I_{n−ν},−I_ν)" in validate_form(form)


def test_forbidden_entry():
    form = HermitianForm.build(2, 1, 0, {(1, 2): [0.0, 1.0]})
    assert "ω_{i,2m−1−i}=0 fails at (1,2)" in validate_form(form)


def test_non_hermitian_mirror():
    omega = dict(p1().omega)
    omega[(0, 1)] = MatrixPolynomial.scalar([1.0])
    omega[(1, 0)] = MatrixPolynomial.scalar([2.0])
    assert any("†" in v for v in validate_form(HermitianForm(1, 1, 0, omega)))


def test_bad_signature_count():
    assert validate_form(HermitianForm(1, 2, 3, {}))


# ---------------------------------------------------------------------------
# rescale


def test_rescale_identity_at_one():
    form = random_form(np.random.default_rng(1))
    assert rescale(form, 1.0) == form


def test_rescale_at_zero_keeps_only_leading_term():
    form = random_form(np.random.default_rng(2), m=2, n=2, nu=1)
    r = rescale(form, 0.0)
    assert [k for k, _ in r.items()] == [(2, 2)]
    assert np.array_equal(r.entry(2, 2).coeffs[0], form.J)


def test_rescale_substitution_example():
    form = HermitianForm.build(1, 1, 0, {(0, 0): [0.0, 1.0]})
    assert np.allclose(rescale(form, 0.5).entry(0, 0).coeffs[:, 0, 0], [0.0, 1 / 8])


def test_rescale_rejects_out_of_range():
    with pytest.raises(ValueError):
        rescale(p1(), 1.5)
    with pytest.raises(ValueError):
        rescale(p1(), -0.1)


@pytest.mark.parametrize("a,b", [(0.3, 0.7), (0.5, 0.5), (1.0, 0.2), (0.9, 1.0)])
def test_rescale_composition_law(a, b):
    form = random_form(np.random.default_rng(3), m=2, n=2)
    lhs, rhs = rescale(rescale(form, a), b), rescale(form, a * b)
    for (i, j), p in rhs.items():
        assert lhs.entry(i, j).allclose(p, atol=1e-10 * (1 + np.abs(p.coeffs).max()))


# ---------------------------------------------------------------------------
# d_lambda_rescale


def test_d_lambda_constant_entry():
    d = d_lambda_rescale(p1(), 0.5)
    assert np.allclose(d.entry(0, 0).coeffs[:, 0, 0], [-C])
    assert d.entry(1, 1).is_zero


def test_d_lambda_linear_entry():
    form = HermitianForm.build(1, 1, 0, {(0, 0): [0.0, 1.0]})
    assert np.allclose(d_lambda_rescale(form, 0.5).entry(0, 0).coeffs[:, 0, 0], [0.0, 0.75])


def test_d_lambda_rejects_negative():
    with pytest.raises(ValueError):
        d_lambda_rescale(p1(), -0.5)


@pytest.mark.parametrize("lam", [0.3, 0.5, 0.9])
def test_d_lambda_matches_finite_difference(lam):
    form = random_form(np.random.default_rng(4), m=2, n=2, degree=2)
    h = 1e-6
    exact = d_lambda_rescale(form, lam)
    for (i, j), p in rescale(form, lam).items():
        fd = (rescale(form, lam + h).entry(i, j).coeffs - rescale(form, lam - h).entry(i, j).coeffs) / (2 * h)
        ex = exact.entry(i, j).coeffs
        k = min(len(fd), len(ex))
        scale = 1.0 + np.abs(ex).max()
        assert np.abs(fd[:k] - ex[:k]).max() <= 1e-7 * scale
        assert np.abs(fd[k:]).max(initial=0.0) <= 1e-7 * scale
    assert exact.entry(2, 2).is_zero


# ---------------------------------------------------------------------------
# euler_lagrange


def test_classical_operator():
    op = euler_lagrange(p1())
    assert np.allclose(op.p[2].coeffs[:, 0, 0], [-1.0])
    assert op.p[1].is_zero
    assert np.allclose(op.p[0].coeffs[:, 0, 0], [-C])


def test_fourth_order_operator():
    op = euler_lagrange(HermitianForm.build(2, 1, 0, {(0, 0): [-7.0]}))
    assert np.allclose(op.p[4].coeffs[:, 0, 0], [1.0])
    assert all(op.p[k].is_zero for k in (1, 2, 3))
    assert np.allclose(op.p[0].coeffs[:, 0, 0], [-7.0])


@pytest.mark.parametrize("m,n,nu", [(1, 1, 0), (1, 2, 1), (2, 1, 0), (2, 3, 2), (3, 2, 2)])
def test_leading_only_operator(m, n, nu):
    op = euler_lagrange(HermitianForm.build(m, n, nu, {}))
    assert np.array_equal(op.leading, (-1) ** m * HermitianForm.build(m, n, nu, {}).J)
    assert all(op.p[k].is_zero for k in range(2 * m))


def test_first_order_cross_term():
    # omega_01 = omega_10 = x is not admissible (i + j = 2m - 1), but the
    # integration by parts identity holds for it all the same:
    # q = int |u'|^2 + x (u' v + u v')
    # (-1)^0 (x u') + (-1)^1 D(x u) = x u' - u - x u' = -u, so p_0 = -1 and p_1 = 0
    form = HermitianForm(1, 1, 0, {
        (1, 1): MatrixPolynomial.scalar([1.0]),
        (0, 1): MatrixPolynomial.scalar([0.0, 1.0]),
        (1, 0): MatrixPolynomial.scalar([0.0, 1.0]),
    })
    assert "ω_{i,2m−1−i}=0 fails at (0,1)" in validate_form(form)
    op = euler_lagrange(form)
    assert op.p[1].trim().is_zero
    assert np.allclose(op.p[0].coeffs[:, 0, 0], [-1.0])
    rng = np.random.default_rng(5)
    u, v = random_vecpoly(rng, 1, 5), jet_vanishing(rng, 1, 1, 6)
    assert weak_form_residual(form, u, v) <= 1e-10 * (1 + abs(sesquilinear(form, u, v)))


@pytest.mark.parametrize("lam", [0.0, 0.35, 1.0])
def test_rescaled_operator_commutes_with_rescale(lam):
    form = random_form(np.random.default_rng(6), m=2, n=2)
    a, b = rescaled_operator(euler_lagrange(form), lam), euler_lagrange(rescale(form, lam))
    for pa, pb in zip(a.p, b.p):
        assert pa.allclose(pb, atol=1e-9 * (1 + np.abs(pb.coeffs).max(initial=0)))


# ---------------------------------------------------------------------------
# weak_form_residual


def test_residual_of_zero_u():
    form = random_form(np.random.default_rng(7))
    v = jet_vanishing(np.random.default_rng(8), form.m, form.n, 6)
    assert weak_form_residual(form, np.zeros((1, form.n)), v) == 0.0


def test_residual_classical_bubble():
    u = v = np.array([[0.0], [1.0], [-1.0]])
    q = sesquilinear(p1(), u, v)
    # int u'^2 - c u^2 with u = x(1-x): 1/3 - c/30
    assert q == pytest.approx(1 / 3 - C / 30, rel=1e-13)
    assert weak_form_residual(p1(), u, v) <= 1e-12 * (1 + abs(q))


def test_residual_rejects_non_vanishing_jet():
    with pytest.raises(ValueError):
        weak_form_residual(p1(), np.array([[1.0]]), np.array([[0.0], [1.0]]))


def test_residual_random_second_order():
    rng = np.random.default_rng(9)
    form = random_form(rng, m=2, n=1, degree=2)
    u, v = random_vecpoly(rng, 1, 6), jet_vanishing(rng, 2, 1, 6)
    assert weak_form_residual(form, u, v) <= 1e-8 * (1 + abs(sesquilinear(form, u, v)))


@settings(max_examples=40, deadline=None)
@given(
    seed=st.integers(0, 2**32 - 1),
    m=st.integers(1, 2),
    n=st.integers(1, 3),
    degree=st.integers(0, 4),
    udeg=st.integers(0, 4),
    vextra=st.integers(0, 4),
)
def test_residual_property(seed, m, n, degree, udeg, vextra):
    rng = np.random.default_rng(seed)
    form = random_form(rng, m=m, n=n, degree=degree)
    u, v = random_vecpoly(rng, n, udeg), jet_vanishing(rng, m, n, 2 * m + vextra)
    assert weak_form_residual(form, u, v) <= 1e-8 * (1 + abs(sesquilinear(form, u, v)))
