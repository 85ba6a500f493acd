import numpy as np
import pytest
from scipy.integrate import quad

from sturmflow.corpus import classical, doubled_p1, p1, p2, p3, p4, random_form, zero_form
from sturmflow.errors import DegenerateEndpointError
from sturmflow.galerkin_flow import (
    GalerkinBasis,
    HermitianPencil,
    assemble,
    crossing_form,
    delta_perturb,
    eigenvalue_flow,
    inertia,
    morse_index,
    pencil,
    spectral_flow,
)
from sturmflow.poly_forms import HermitianForm, rescale, sesquilinear

C = (2.5 * np.pi) ** 2


def kernel_at(P, lam, dim):
    ev, V = np.linalg.eigh(P.Q(lam))
    return V[:, np.argsort(np.abs(ev))[:dim]]


# ---------------------------------------------------------------------------
# basis


@pytest.mark.parametrize("m,n,N", [(1, 1, 8), (2, 2, 12), (3, 1, 10)])
def test_basis_vanishing_jets(m, n, N):
    b = GalerkinBasis(m, n, N)
    assert b.size == N * n
    assert b.jet_residual() <= 1e-12


@pytest.mark.parametrize("m", [1, 2])
def test_basis_gram_nonsingular_and_normalized(m):
    b = GalerkinBasis(m, 2, 16)
    assert np.isfinite(b.gram_condition()) and b.gram_condition() < 1e12
    x, w = b.quadrature()
    top = b.values(x, m)
    assert np.allclose(np.sum(w[:, None] * top**2, axis=0), 1.0)


def test_basis_values_against_direct_formula():
    from numpy.polynomial.legendre import legval

    b = GalerkinBasis(2, 1, 6)
    x = np.linspace(0, 1, 9)
    raw = x**2 * (1 - x) ** 2 * legval(2 * x - 1, [0, 0, 0, 1])
    v = b.values(x)[:, 3]
    scale = v @ raw / (raw @ raw)
    assert np.allclose(v, scale * raw, atol=1e-14)


def test_gram_l2_matches_quad():
    b = GalerkinBasis(1, 1, 5)
    f = lambda x, k: b.values([x])[0, k]
    g = quad(lambda x: f(x, 1) * f(x, 3), 0, 1)[0]
    assert b.gram_l2[1, 3] == pytest.approx(g, abs=1e-12)


def test_basis_rejects_empty():
    with pytest.raises(ValueError):
        GalerkinBasis(1, 1, 0)


# ---------------------------------------------------------------------------
# assembly


def test_assembly_matches_sesquilinear_form():
    form = random_form(np.random.default_rng(0), m=2, n=2, nu=1)
    b = GalerkinBasis(2, 2, 6)
    lam = 0.7
    Q = assemble(form, b, lam)
    # Q[a, b] = q_lam(phi_b, phi_a) with q(u, v) conjugate-linear in v
    for a, bb in [(0, 0), (3, 7), (10, 2)]:
        u = vector_poly(b, bb)
        v = vector_poly(b, a)
        assert Q[a, bb] == pytest.approx(sesquilinear(rescale(form, lam), u, v), rel=1e-9, abs=1e-9)


def vector_poly(basis, index):
    k, alpha = divmod(index, basis.n)
    mono = basis.functions[k].convert(kind=np.polynomial.Polynomial, domain=[-1, 1], window=[-1, 1]).coef
    out = np.zeros((mono.size, basis.n), dtype=complex)
    out[:, alpha] = mono
    return out


def test_assembly_is_hermitian():
    form = random_form(np.random.default_rng(1), m=2, n=3)
    Q = assemble(form, GalerkinBasis(2, 3, 8), 0.6)
    assert np.array_equal(Q, Q.conj().T)


def test_lambda_zero_is_leading_term():
    form = random_form(np.random.default_rng(2), m=2, n=2, nu=1)
    b = GalerkinBasis(2, 2, 8)
    x, w = b.quadrature()
    top = b.values(x, 2)
    expected = np.kron(top.T @ (w[:, None] * top), form.J)
    assert np.allclose(assemble(form, b, 0.0), expected, atol=1e-12)


def test_all_negative_signature():
    b = GalerkinBasis(1, 2, 10)
    for lam in (0.0, 0.5, 1.0):
        Q = assemble(zero_form(1, 2, 2), b, lam)
        assert np.linalg.eigvalsh(Q).max() < 0
        assert np.allclose(Q, -assemble(zero_form(1, 2, 0), b, lam))


def test_pencil_derivative_matches_finite_difference():
    P = pencil(random_form(np.random.default_rng(3), m=2, n=2), GalerkinBasis(2, 2, 8))
    h = 1e-6
    fd = (P.Q(0.5 + h) - P.Q(0.5 - h)) / (2 * h)
    assert np.abs(fd - P.dQ(0.5)).max() <= 1e-6 * np.abs(P.dQ(0.5)).max()


def test_pencil_rejects_mismatched_basis():
    with pytest.raises(ValueError):
        pencil(p1(), GalerkinBasis(2, 1, 8))


# ---------------------------------------------------------------------------
# inertia


def test_inertia_examples():
    assert inertia(np.diag([3.0, -2.0, 0.0])) == (1, 1, 1)
    assert inertia(np.eye(7)) == (0, 0, 7)


def test_inertia_classical_endpoint():
    assert inertia(assemble(p1(), GalerkinBasis(1, 1, 16), 1.0))[0] == 2


def test_inertia_matches_dirichlet_spectrum():
    # q_1(u) = int |u'|^2 - c |u|^2 has eigenvalues (k pi)^2 - c relative to L2
    b = GalerkinBasis(1, 1, 24)
    Q, G = assemble(p1(), b, 1.0), b.gram_l2
    from scipy.linalg import eigh

    ev = eigh(Q.real, G)[0][:4]
    assert np.allclose(ev, (np.arange(1, 5) * np.pi) ** 2 - C, rtol=1e-9)


@pytest.mark.parametrize("N", [8, 16, 32, 64])
def test_q0_nondegenerate(N):
    for form in (p1(), p2(), p3(), p4()):
        assert inertia(assemble(form, GalerkinBasis(form.m, form.n, N), 0.0))[1] == 0


# ---------------------------------------------------------------------------
# morse_index


@pytest.mark.parametrize(
    "form,mu,instants,signatures",
    [
        (p1(), 2, [0.4, 0.8], [-1, -1]),
        (p2(), 1, [0.4, 2 / 3, 0.8], [-1, 1, -1]),
        (p3(), -1, [2 / 3], [1]),
        (zero_form(), 0, [], []),
    ],
    ids=["P1", "P2", "P3", "zero"],
)
def test_morse_index(form, mu, instants, signatures):
    r = morse_index(form)
    assert r.mu == mu and r.identity_ok
    assert np.allclose(r.instants, instants, atol=1e-9)
    assert [c.signature for c in r.crossings] == signatures
    assert all(c.regular and c.kernel_dim == 1 for c in r.crossings)


def test_morse_index_fourth_order(corpus):
    case = corpus["P4"]
    r = morse_index(case.form)
    assert r.mu == 1 and r.instants == pytest.approx(case.instants, abs=1e-9)


@pytest.mark.parametrize("N", [16, 32])
def test_basis_refinement(N):
    for form, mu in ((p1(), 2), (p2(), 1), (p3(), -1), (p4(), 1)):
        b1, b2 = GalerkinBasis(form.m, form.n, N), GalerkinBasis(form.m, form.n, 2 * N)
        assert morse_index(form, b1).mu == morse_index(form, b2).mu == mu


def test_degenerate_endpoint():
    with pytest.raises(DegenerateEndpointError):
        morse_index(classical(np.pi**2))


def test_grid_minimum():
    with pytest.raises(ValueError):
        morse_index(p1(), grid=16)


def test_endpoint_inertias_recorded():
    r = morse_index(p2())
    assert r.inertia0[1] == r.inertia1[1] == 0
    assert r.mu == r.inertia1[0] - r.inertia0[0]
    assert r.basis_size == 2 * 24


# ---------------------------------------------------------------------------
# crossing_form


def test_crossing_form_classical():
    P = pencil(p1(), GalerkinBasis(1, 1))
    assert crossing_form(P, 0.4, kernel_at(P, 0.4, 1)) == (-1, True)


def test_crossing_form_indefinite():
    P = pencil(p2(), GalerkinBasis(1, 2))
    assert crossing_form(P, 2 / 3, kernel_at(P, 2 / 3, 1)) == (1, True)


def test_crossing_form_doubled():
    P = pencil(doubled_p1(), GalerkinBasis(1, 2))
    assert crossing_form(P, 0.4, kernel_at(P, 0.4, 2)) == (-2, True)
    r = morse_index(doubled_p1())
    assert r.mu == 4 and [(c.kernel_dim, c.signature) for c in r.crossings] == [(2, -2), (2, -2)]


def test_crossing_form_empty_kernel():
    P = pencil(p1(), GalerkinBasis(1, 1))
    with pytest.raises(ValueError):
        crossing_form(P, 0.4, np.zeros((P.size, 0)))


# ---------------------------------------------------------------------------
# delta perturbation


def test_delta_zero_unchanged():
    b = GalerkinBasis(1, 1)
    P0, Pd = pencil(p1(), b), delta_perturb(p1(), b, 0.0)
    assert np.array_equal(P0.Q(0.3), Pd.Q(0.3))


def test_delta_rejects_negative():
    with pytest.raises(ValueError):
        delta_perturb(p1(), GalerkinBasis(1, 1), -1.0)


def test_delta_shifts_instants():
    delta = 0.1
    r = spectral_flow(delta_perturb(p1(), GalerkinBasis(1, 1), delta))
    expected = np.sqrt(((np.arange(1, 3) * np.pi) ** 2 + delta) / C)
    assert r.mu == 2
    assert np.allclose(r.instants, expected, atol=1e-9)


def scalar_pencil(*coeffs):
    return HermitianPencil({e: np.array([[c + 0j]]) for e, c in enumerate(coeffs)}, np.eye(1))


def test_cubic_crossing_is_resolved_by_delta():
    # Q = (lam - 1/2)^3: not regular, n_- drops by one
    lam0 = 0.5
    P = scalar_pencil(-(lam0**3), 3 * lam0**2, -3 * lam0, 1.0)
    r = spectral_flow(P)
    assert r.mu == -1 and r.identity_ok
    (c,) = r.crossings
    assert not c.regular and c.delta_used > 0 and c.signature == 1
    assert c.lam == pytest.approx(lam0, abs=1e-4)


def test_opposite_slopes_split_by_delta():
    a, b, lam0, delta = 2.0, 3.0, 0.5, 0.05
    terms = {0: np.diag([-a * lam0, b * lam0]).astype(complex), 1: np.diag([a, -b]).astype(complex)}
    P = HermitianPencil(terms, np.eye(2))
    r = spectral_flow(P)
    assert r.mu == 0 and [(c.kernel_dim, c.signature) for c in r.crossings] == [(2, 0)]
    rd = spectral_flow(P.perturbed(delta))
    assert [c.signature for c in rd.crossings] == [1, -1]
    assert rd.instants == pytest.approx([lam0 - delta / a, lam0 + delta / b], abs=1e-9)
    assert rd.mu == r.mu


def test_degenerate_double_crossing_both_downward():
    # diag((lam - l0)^3, -(lam - l0)): non-regular crossing with kernel 2 and net signature 0
    lam0 = 0.4
    cubic = np.array([-(lam0**3), 3 * lam0**2, -3 * lam0, 1.0])
    lin = np.array([lam0, -1.0, 0.0, 0.0])
    terms = {e: np.diag([cubic[e], lin[e]]).astype(complex) for e in range(4)}
    r = spectral_flow(HermitianPencil(terms, np.eye(2)))
    assert r.mu == 0 and r.identity_ok
    assert sum(c.signature for c in r.crossings) == 0


# ---------------------------------------------------------------------------
# eigenvalue flow


def test_eigenvalue_flow_shape():
    rows = eigenvalue_flow(p1(), points=51, k=4)
    assert rows.shape == (51, 5)
    assert np.allclose(rows[:, 0], np.linspace(0, 1, 51))
    assert np.all(np.diff(rows[:, 1:], axis=1) >= 0)


def test_eigenvalue_flow_picks_smallest_magnitudes():
    b = GalerkinBasis(1, 1, 12)
    row = eigenvalue_flow(p1(), b, points=3, k=5)[1]
    ev = np.linalg.eigvalsh(assemble(p1(), b, 0.5))
    assert np.abs(row[1:]).max() <= np.sort(np.abs(ev))[5]


def test_eigenvalue_flow_counts_crossings():
    b = GalerkinBasis(1, 1, 12)
    rows = eigenvalue_flow(p1(), b, points=100, k=b.size)  # grid avoids the instants
    neg = (rows[:, 1:] < 0).sum(axis=1)
    assert neg[0] == 0 and neg[-1] == 2
    assert np.flatnonzero(np.diff(neg)).tolist() == [39, 79]
