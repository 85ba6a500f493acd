"""Problems with closed-form conjugate instants, and seeded random problems.

Scalar ``|u'|^2 - c|u|^2`` on ``[0, lam]`` has Dirichlet eigenvalues
``(k pi / lam)^2 - c``, so its instants are ``k pi / sqrt(c)``. The clamped
fourth-order problem ``|u''|^2 - c|u|^2`` has instants ``kappa_k / c^(1/4)``
with ``cos kappa cosh kappa = 1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect

from .errors import DegenerateEndpointError
from .galerkin_flow import GalerkinBasis, assemble, inertia
from .poly_forms import HermitianForm, MatrixPolynomial

PI = np.pi


def classical(c: float) -> HermitianForm:
    """``|u'|^2 - c |u|^2`` (scalar, positive leading term)."""
    return HermitianForm.build(1, 1, 0, {(0, 0): [-c]})


def p1(c: float = (2.5 * PI) ** 2) -> HermitianForm:
    return classical(c)


def p2(a: float = (2.5 * PI) ** 2, b: float = (1.5 * PI) ** 2) -> HermitianForm:
    """``|u1'|^2 - a|u1|^2 - |u2'|^2 + b|u2|^2``."""
    return HermitianForm.build(1, 2, 1, {(0, 0): np.diag([-a, b])})


def p3(b: float = (1.5 * PI) ** 2) -> HermitianForm:
    """``-|u'|^2 + b|u|^2``."""
    return HermitianForm.build(1, 1, 1, {(0, 0): [b]})


def p4(c: float = 6.0**4) -> HermitianForm:
    """``|u''|^2 - c|u|^2`` with clamped ends."""
    return HermitianForm.build(2, 1, 0, {(0, 0): [-c]})


def zero_form(m: int = 1, n: int = 1, nu: int = 0) -> HermitianForm:
    """Only the leading term; no conjugate instants."""
    return HermitianForm.build(m, n, nu, {})


def doubled_p1(c: float = (2.5 * PI) ** 2) -> HermitianForm:
    """Two identical decoupled copies of P1."""
    return HermitianForm.build(1, 2, 0, {(0, 0): -c * np.eye(2)})


def clamped_roots(count: int = 1) -> list[float]:
    """First positive roots of ``cos k cosh k = 1``."""
    f = lambda k: np.cos(k) * np.cosh(k) - 1.0
    # roots sit close to (j + 1/2) pi for j >= 1
    return [bisect(f, (j + 0.5) * PI - 0.5, (j + 0.5) * PI + 0.5, xtol=1e-15) for j in range(1, count + 1)]


def scalar_instants(c: float) -> list[float]:
    k = np.arange(1, int(np.sqrt(c) / PI) + 1)
    return list(k * PI / np.sqrt(c))


@dataclass(frozen=True)
class OracleCase:
    name: str
    form: HermitianForm
    instants: tuple[float, ...]
    signatures: tuple[int, ...]
    mu: int


def oracle_corpus() -> list[OracleCase]:
    """P1-P4 with their closed-form instants, crossing signatures and indices."""
    a, b = (2.5 * PI) ** 2, (1.5 * PI) ** 2
    kappa = clamped_roots(1)[0]
    return [
        OracleCase("P1", p1(), (0.4, 0.8), (-1, -1), 2),
        OracleCase("P2", p2(), (0.4, 2 / 3, 0.8), (-1, 1, -1), 1),
        OracleCase("P3", p3(), (2 / 3,), (1,), -1),
        OracleCase("P4", p4(), (kappa / 6.0,), (-1,), 1),
    ]


# ---------------------------------------------------------------------------
# seeded random problems


def _admissible_entries(m: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(m + 1) for j in range(i, m + 1) if (i, j) != (m, m) and i + j != 2 * m - 1]


def _random_matrix(rng: np.random.Generator, n: int, hermitian: bool, norm: float) -> np.ndarray:
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    if hermitian:
        A = 0.5 * (A + A.conj().T)
    return A * (norm / np.linalg.norm(A, 2))


def random_form(
    rng: np.random.Generator,
    m: int | None = None,
    n: int | None = None,
    nu: int | None = None,
    degree: int = 2,
    norm: float = 30.0,
) -> HermitianForm:
    """Random admissible form; every monomial coefficient has spectral norm at most ``norm``."""
    m = int(rng.integers(1, 3)) if m is None else m
    n = int(rng.integers(1, 4)) if n is None else n
    nu = int(rng.integers(0, n + 1)) if nu is None else nu
    entries = {}
    for i, j in _admissible_entries(m):
        d = int(rng.integers(0, degree + 1))
        coeffs = [_random_matrix(rng, n, i == j, norm * rng.uniform(0.3, 1.0)) for _ in range(d + 1)]
        entries[(i, j)] = MatrixPolynomial(np.array(coeffs))
    return HermitianForm.build(m, n, nu, entries)


def nondegenerate(form: HermitianForm, shift: float = 1e-3, retries: int = 8) -> HermitianForm:
    """``form`` itself, or ``form + k*shift*|u|^2`` for the first ``k`` making ``lam = 1`` regular."""
    for k in range(retries + 1):
        f = form if k == 0 else form.shifted(0, 0, MatrixPolynomial.constant(k * shift * np.eye(form.n)))
        if _regular(f):
            return f
    raise DegenerateEndpointError("could not perturb the form away from a degenerate endpoint")


def random_suite(seed: int = 0, count: int = 20, **kwargs) -> list[HermitianForm]:
    """Seeded random problems with ``m <= 2``, ``n <= 3``, degree ``<= 2``, norm ``<= 30``."""
    rng = np.random.default_rng(seed)
    return [nondegenerate(random_form(rng, **kwargs)) for _ in range(count)]


def random_psd(rng: np.random.Generator, n: int, scale: float = 1.0) -> np.ndarray:
    B = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    P = B @ B.conj().T
    return P * (scale / np.linalg.norm(P, 2))


def _regular(form: HermitianForm) -> bool:
    return inertia(assemble(form, GalerkinBasis(form.m, form.n), 1.0), 1e-6)[1] == 0


def ordered_pair(form: HermitianForm, P: np.ndarray, t: float, retries: int = 8) -> tuple[HermitianForm, HermitianForm]:
    """``(form + t P |u|^2, form)``: the second lies below the first.

    When either end is degenerate both are shifted by ``k t 1e-3 |u|^2``, which keeps the order.
    """
    upper = MatrixPolynomial.constant(t * P)
    for k in range(retries + 1):
        base = form.shifted(0, 0, MatrixPolynomial.constant(k * t * 1e-3 * np.eye(form.n))) if k else form
        high = base.shifted(0, 0, upper)
        if _regular(base) and _regular(high):
            return high, base
    raise DegenerateEndpointError("could not perturb the pair away from a degenerate endpoint")


def monotone_suite(seed: int = 0, count: int = 20, ts=(0.5, 1.0, 2.0), scale: float = 30.0):
    """``count`` random forms, each paired with ``form + t P`` for every ``t`` in ``ts``."""
    rng = np.random.default_rng(seed)
    pairs = []
    for _ in range(count):
        form = random_form(rng)
        P = random_psd(rng, form.n, scale)
        pairs.extend(ordered_pair(form, P, t) for t in ts)
    return pairs
