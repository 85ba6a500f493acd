"""Matrix polynomials, derivative-dependent Hermitian forms and their
Euler-Lagrange operators.

A form of order ``m`` on ``C^n`` is the family ``omega[i, j]``, ``0 <= i, j <= m``,
of matrix polynomials in ``x in [0, 1]``. Its value on a function ``u`` is

    Omega(x)[u] = sum_{i,j} <D^i u(x), omega[i, j](x) D^j u(x)>

with ``<a, b> = a^H b``. The Euler-Lagrange operator is fixed as

    l(x, D) u = sum_{i,j} (-1)^i D^i (omega[i, j](x) D^j u)

so the leading coefficient is ``p[2m] = (-1)^m J`` with
``J = diag(I_{n-nu}, -I_nu)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb
from typing import Mapping

import numpy as np
from numpy.polynomial import legendre as npleg
from numpy.polynomial import polynomial as nppoly


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class MatrixPolynomial:
    """``x -> sum_k coeffs[k] x^k`` with ``coeffs`` of shape ``(d + 1, n, n)``."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if c.ndim == 2:
            c = c[None]
        if c.ndim != 3 or c.shape[1] != c.shape[2]:
            raise ValueError(f"coefficients must have shape (d+1, n, n), got {c.shape}")
        if c.shape[0] == 0:
            c = np.zeros((1,) + c.shape[1:], dtype=complex)
        object.__setattr__(self, "coeffs", _frozen(c))

    @classmethod
    def zeros(cls, n: int) -> MatrixPolynomial:
        return cls(np.zeros((1, n, n), dtype=complex))

    @classmethod
    def constant(cls, matrix) -> MatrixPolynomial:
        return cls(np.asarray(matrix, dtype=complex)[None])

    @classmethod
    def scalar(cls, coeffs) -> MatrixPolynomial:
        """1x1 polynomial from scalar monomial coefficients."""
        return cls(np.asarray(coeffs, dtype=complex).reshape(-1, 1, 1))

    @property
    def n(self) -> int:
        return self.coeffs.shape[1]

    @property
    def degree(self) -> int:
        """Degree, with ``-1`` for the zero polynomial."""
        nz = np.flatnonzero(np.any(self.coeffs != 0, axis=(1, 2)))
        return int(nz[-1]) if nz.size else -1

    def is_zero(self) -> bool:
        return not np.any(self.coeffs)

    def trim(self) -> MatrixPolynomial:
        return MatrixPolynomial(self.coeffs[: max(self.degree, 0) + 1])

    def __call__(self, x):
        """Evaluate at scalar or array ``x``; result has shape ``x.shape + (n, n)``."""
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape + (self.n, self.n), dtype=complex)
        for c in self.coeffs[::-1]:
            out = out * x[..., None, None] + c
        return out

    def deriv(self, order: int = 1) -> MatrixPolynomial:
        c = self.coeffs
        for _ in range(order):
            if c.shape[0] == 1:
                return MatrixPolynomial.zeros(self.n)
            c = c[1:] * np.arange(1, c.shape[0])[:, None, None]
        return MatrixPolynomial(c)

    def adjoint(self) -> MatrixPolynomial:
        return MatrixPolynomial(np.conj(np.swapaxes(self.coeffs, 1, 2)))

    def conj(self) -> MatrixPolynomial:
        return MatrixPolynomial(np.conj(self.coeffs))

    def is_hermitian(self, atol: float = 0.0) -> bool:
        return bool(np.allclose(self.coeffs, self.adjoint().coeffs, rtol=0.0, atol=atol))

    def compose_scale(self, lam: float) -> MatrixPolynomial:
        """``x -> self(lam * x)``."""
        return MatrixPolynomial(self.coeffs * (lam ** np.arange(self.coeffs.shape[0]))[:, None, None])

    def times_x(self) -> MatrixPolynomial:
        """``x -> x * self(x)``."""
        return MatrixPolynomial(np.concatenate([np.zeros((1, self.n, self.n)), self.coeffs]))

    def _padded(self, other: MatrixPolynomial):
        d = max(self.coeffs.shape[0], other.coeffs.shape[0])
        a = np.zeros((d, self.n, self.n), dtype=complex)
        b = np.zeros((d, self.n, self.n), dtype=complex)
        a[: self.coeffs.shape[0]] = self.coeffs
        b[: other.coeffs.shape[0]] = other.coeffs
        return a, b

    def __add__(self, other: MatrixPolynomial) -> MatrixPolynomial:
        a, b = self._padded(other)
        return MatrixPolynomial(a + b)

    def __sub__(self, other: MatrixPolynomial) -> MatrixPolynomial:
        a, b = self._padded(other)
        return MatrixPolynomial(a - b)

    def __neg__(self) -> MatrixPolynomial:
        return MatrixPolynomial(-self.coeffs)

    def __mul__(self, scalar) -> MatrixPolynomial:
        return MatrixPolynomial(self.coeffs * scalar)

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if not isinstance(other, MatrixPolynomial):
            return NotImplemented
        a, b = self._padded(other) if other.n == self.n else (None, None)
        return a is not None and bool(np.array_equal(a, b))

    def allclose(self, other: MatrixPolynomial, atol: float = 1e-12) -> bool:
        a, b = self._padded(other)
        return bool(np.allclose(a, b, rtol=0.0, atol=atol))

    def __repr__(self) -> str:
        return f"MatrixPolynomial(n={self.n}, degree={self.degree})"


def signature_matrix(n: int, nu: int) -> np.ndarray:
    """``diag(I_{n-nu}, -I_nu)``."""
    return np.diag(np.r_[np.ones(n - nu), -np.ones(nu)]).astype(complex)


@dataclass(frozen=True, eq=False)
class HermitianForm:
    """Coefficient family ``omega[(i, j)]`` of a derivative-dependent form.

    Absent entries are the zero polynomial. No validation happens here, use
    :func:`validate_form`; the object is also used to carry coefficient
    families that are not themselves admissible forms (see
    :func:`d_lambda_rescale`).
    """

    m: int
    n: int
    nu: int
    omega: Mapping[tuple[int, int], MatrixPolynomial] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "omega", {tuple(k): v for k, v in self.omega.items()})

    @classmethod
    def build(cls, m: int, n: int, nu: int, entries: Mapping[tuple[int, int], object]) -> HermitianForm:
        """Form with ``omega[m, m] = J`` and adjoint entries filled in.

        ``entries`` maps ``(i, j)`` to a MatrixPolynomial, a constant matrix, or
        (for ``n == 1``) a list of scalar monomial coefficients. For every
        given off-diagonal ``(i, j)`` whose mirror is absent, ``omega[j, i]``
        is set to the adjoint.
        """
        omega: dict[tuple[int, int], MatrixPolynomial] = {}
        for key, val in entries.items():
            omega[tuple(key)] = _as_poly(val, n)
        for (i, j), p in list(omega.items()):
            if i != j and (j, i) not in omega:
                omega[(j, i)] = p.adjoint()
        omega.setdefault((m, m), MatrixPolynomial.constant(signature_matrix(n, nu)))
        return cls(m, n, nu, omega)

    @property
    def J(self) -> np.ndarray:
        return signature_matrix(self.n, self.nu)

    def entry(self, i: int, j: int) -> MatrixPolynomial:
        p = self.omega.get((i, j))
        return MatrixPolynomial.zeros(self.n) if p is None else p

    def items(self):
        """Nonzero entries, in sorted index order."""
        return [(k, self.omega[k]) for k in sorted(self.omega) if not self.omega[k].is_zero()]

    def max_degree(self) -> int:
        return max([p.degree for _, p in self.items()] + [0])

    def conj(self) -> HermitianForm:
        """Form with complex-conjugated coefficients."""
        return HermitianForm(self.m, self.n, self.nu, {k: p.conj() for k, p in self.omega.items()})

    def shifted(self, i: int, j: int, poly: MatrixPolynomial) -> HermitianForm:
        """Copy with ``poly`` added to entry ``(i, j)``."""
        omega = dict(self.omega)
        omega[(i, j)] = self.entry(i, j) + poly
        return HermitianForm(self.m, self.n, self.nu, omega)

    def __eq__(self, other) -> bool:
        if not isinstance(other, HermitianForm):
            return NotImplemented
        if (self.m, self.n, self.nu) != (other.m, other.n, other.nu):
            return False
        keys = set(self.omega) | set(other.omega)
        return all(self.entry(*k) == other.entry(*k) for k in keys)

    def __repr__(self) -> str:
        return f"HermitianForm(m={self.m}, n={self.n}, nu={self.nu}, entries={sorted(k for k, _ in self.items())})"


def _as_poly(val, n: int) -> MatrixPolynomial:
    if isinstance(val, MatrixPolynomial):
        return val
    a = np.asarray(val, dtype=complex)
    if n == 1 and a.ndim <= 1:
        return MatrixPolynomial.scalar(np.atleast_1d(a))
    if a.ndim == 2:
        return MatrixPolynomial.constant(a)
    return MatrixPolynomial(a)


@dataclass(frozen=True, eq=False)
class DiffOperator:
    """``l(x, D) u = sum_k p[k](x) D^k u``, ``k = 0 .. 2m``."""

    m: int
    n: int
    p: tuple[MatrixPolynomial, ...]

    def __post_init__(self):
        if len(self.p) != 2 * self.m + 1:
            raise ValueError("DiffOperator needs 2m + 1 coefficients")
        object.__setattr__(self, "p", tuple(self.p))

    @property
    def leading(self) -> np.ndarray:
        return self.p[-1].coeffs[0]

    def apply(self, u_coeffs: np.ndarray, x) -> np.ndarray:
        """``(l u)(x)`` for a vector polynomial ``u`` (monomial coefficients, shape ``(d+1, n)``)."""
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape + (self.n,), dtype=complex)
        for k, pk in enumerate(self.p):
            if pk.is_zero():
                continue
            out += np.einsum("...ab,...b->...a", pk(x), vecpoly_eval(u_coeffs, x, k))
        return out


# ---------------------------------------------------------------------------
# vector-valued polynomial helpers (monomial coefficients, shape (d+1, n))


def vecpoly_eval(coeffs: np.ndarray, x, order: int = 0) -> np.ndarray:
    """``D^order u(x)``, returned with shape ``x.shape + (n,)``."""
    c = np.asarray(coeffs, dtype=complex)
    if order:
        c = nppoly.polyder(c, order, axis=0) if c.shape[0] > order else np.zeros((1,) + c.shape[1:])
    x = np.asarray(x, dtype=float)
    return np.moveaxis(nppoly.polyval(x, c, tensor=True), 0, -1) if x.ndim else nppoly.polyval(x, c)


def jet(coeffs: np.ndarray, x: float, order: int) -> np.ndarray:
    """``(u(x), u'(x), ..., u^(order)(x))`` stacked as rows."""
    return np.array([vecpoly_eval(coeffs, x, r) for r in range(order + 1)])


# ---------------------------------------------------------------------------
# operations


def validate_form(form: HermitianForm, atol: float = 1e-12) -> list[str]:
    """Every violated admissibility condition of ``form``; empty when valid."""
    m, n, nu = form.m, form.n, form.nu
    problems = []
    if m < 1:
        problems.append(f"m must be >= 1 (got {m})")
    if n < 1:
        problems.append(f"n must be >= 1 (got {n})")
    if not 0 <= nu <= n:
        problems.append(f"nu must satisfy 0 <= nu <= n (got nu={nu}, n={n})")
    if problems:
        return problems
    for (i, j), p in form.omega.items():
        if not (0 <= i <= m and 0 <= j <= m):
            problems.append(f"entry ({i},{j}) outside 0..m")
        elif p.n != n:
            problems.append(f"entry ({i},{j}) has size {p.n}, expected {n}")
    if problems:
        return problems
    lead = form.entry(m, m)
    if lead.degree > 0 or not np.allclose(lead.coeffs[0], form.J, rtol=0.0, atol=atol):
        problems.append("ω_{m,m} ≠ diag(I_{n−ν},−I_ν)")
    for i in range(m + 1):
        for j in range(i, m + 1):
            a, b = form.entry(i, j), form.entry(j, i)
            if not a.allclose(b.adjoint(), atol=atol):
                problems.append(f"ω_{{j,i}} ≠ ω_{{i,j}}† at ({i},{j})")
    for i in range(m + 1):
        j = 2 * m - 1 - i
        if 0 <= j <= m and not form.entry(i, j).allclose(MatrixPolynomial.zeros(n), atol=atol):
            problems.append(f"ω_{{i,2m−1−i}}=0 fails at ({i},{j})")
    return problems


def _check_lambda(lam: float) -> float:
    lam = float(lam)
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    return lam


def rescale(form: HermitianForm, lam: float) -> HermitianForm:
    """Entry ``(i, j)`` becomes ``x -> lam^(2m-i-j) omega[i, j](lam x)``."""
    lam = _check_lambda(lam)
    m = form.m
    omega = {}
    for (i, j), p in form.omega.items():
        e = 2 * m - i - j
        omega[(i, j)] = p.compose_scale(lam) * (lam**e) if e else p.compose_scale(lam)
    return HermitianForm(m, form.n, form.nu, omega)


def d_lambda_rescale(form: HermitianForm, lam: float) -> HermitianForm:
    """Exact ``d/dlam`` of :func:`rescale`. The (m, m) entry is zero."""
    lam = float(lam)
    if lam < 0:
        raise ValueError(f"lambda must be nonnegative, got {lam}")
    m = form.m
    omega = {}
    for (i, j), p in form.omega.items():
        e = 2 * m - i - j
        powers = e + np.arange(p.coeffs.shape[0])
        # d/dlam lam^(e+d) = (e+d) lam^(e+d-1); the e+d == 0 term is constant in lam
        factor = np.array([k * lam ** (k - 1) if k else 0.0 for k in powers])
        omega[(i, j)] = MatrixPolynomial(p.coeffs * factor[:, None, None])
    return HermitianForm(m, form.n, form.nu, omega)


def euler_lagrange(form: HermitianForm) -> DiffOperator:
    """Leibniz expansion of ``sum_{i,j} (-1)^i D^i (omega[i, j] D^j u)``."""
    m, n = form.m, form.n
    p = [MatrixPolynomial.zeros(n) for _ in range(2 * m + 1)]
    for (i, j), w in form.items():
        sign = -1 if i % 2 else 1
        for k in range(i + 1):
            p[j + k] = p[j + k] + w.deriv(i - k) * (sign * comb(i, k))
    return DiffOperator(m, n, tuple(q.trim() for q in p))


def rescaled_operator(op: DiffOperator, lam: float) -> DiffOperator:
    """Operator of the rescaled form: ``p_k -> lam^(2m-k) p_k(lam x)``.

    Equal to ``euler_lagrange(rescale(form, lam))`` but needs no form.
    """
    lam = _check_lambda(lam)
    m = op.m
    p = tuple(pk.compose_scale(lam) * (lam ** (2 * m - k)) for k, pk in enumerate(op.p))
    return DiffOperator(m, op.n, p)


def gauss_legendre01(npts: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on ``[0, 1]``, exact to degree ``2 npts - 1``."""
    x, w = npleg.leggauss(npts)
    return 0.5 * (x + 1.0), 0.5 * w


def sesquilinear(form: HermitianForm, u: np.ndarray, v: np.ndarray) -> complex:
    """``q(u, v) = sum_{i,j} int <D^i v, omega[i, j] D^j u>`` by exact quadrature."""
    u, v = np.asarray(u, dtype=complex), np.asarray(v, dtype=complex)
    deg = u.shape[0] + v.shape[0] + form.max_degree()
    x, w = gauss_legendre01(deg // 2 + 2)
    total = 0.0 + 0.0j
    for (i, j), p in form.items():
        dv = vecpoly_eval(v, x, i)
        du = vecpoly_eval(u, x, j)
        total += np.einsum("q,qa,qab,qb->", w, dv.conj(), p(x), du)
    return complex(total)


def weak_form_residual(form: HermitianForm, u: np.ndarray, v: np.ndarray, jet_atol: float = 1e-10) -> float:
    """``|q(u, v) - int <v, l u>|`` for polynomial ``u`` and jet-vanishing ``v``.

    ``u`` and ``v`` are monomial coefficient arrays of shape ``(d+1, n)``.
    Raises ValueError when the (m-1)-jet of ``v`` does not vanish at 0 and 1.
    """
    u, v = np.asarray(u, dtype=complex), np.asarray(v, dtype=complex)
    scale = max(1.0, float(np.abs(v).max(initial=0.0)))
    for end in (0.0, 1.0):
        if np.abs(jet(v, end, form.m - 1)).max() > jet_atol * scale:
            raise ValueError(f"v has a nonzero (m-1)-jet at x={end:g}")
    op = euler_lagrange(form)
    deg = u.shape[0] + v.shape[0] + form.max_degree()
    x, w = gauss_legendre01(deg // 2 + 2)
    strong = np.einsum("q,qa,qa->", w, vecpoly_eval(v, x).conj(), op.apply(u, x))
    return float(abs(sesquilinear(form, u, v) - strong))
