"""Galerkin discretisation of the rescaled forms and their spectral flow.

The basis is ``x^m (1-x)^m L_k(2x-1)``, ``k < N``, for each of the ``n``
components, scaled so that ``int |D^m phi_k|^2 = 1``. Because the form
coefficients are polynomial, the Galerkin matrix is a polynomial in ``lam``,

    Q(lam) = sum_e lam^e M_e,

with every ``M_e`` assembled once by exact Gauss-Legendre quadrature.
The regularised Morse index is ``n_-(Q(1)) - n_-(Q(0))``; each change of
inertia along the path is bisected and checked against the signature of
the crossing form ``K^H Q'(lam) K`` on the kernel.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numpy.polynomial import Legendre

from .errors import CrossingError, DegenerateEndpointError
from .poly_forms import HermitianForm, gauss_legendre01

log = logging.getLogger(__name__)

DEFAULT_N = 24
EPS_REL = 1e-9
EPS_GAMMA = 1e-7
BISECT_TOL = 1e-10
MERGE_GAP = 1e3  # in units of the bisection tolerance


class GalerkinBasis:
    """Vector bubble-Legendre basis of ``H_0^m`` with ``N`` modes per component."""

    def __init__(self, m: int, n: int, N: int = DEFAULT_N):
        if N < 1:
            raise ValueError("N must be positive")
        self.m, self.n, self.N = m, n, N
        bubble = Legendre.fromroots([0.0] * m + [1.0] * m, domain=[0, 1]) * (-1) ** m
        raw = [bubble * Legendre.basis(k, domain=[0, 1]) for k in range(N)]
        xq, wq = gauss_legendre01(raw[-1].degree() + 2)
        norms = [np.sqrt(np.sum(wq * p.deriv(m)(xq) ** 2)) for p in raw]
        self.functions = [p / s for p, s in zip(raw, norms)]

    @property
    def degree(self) -> int:
        return 2 * self.m + self.N - 1

    @property
    def size(self) -> int:
        return self.N * self.n

    def values(self, x, order: int = 0) -> np.ndarray:
        """``D^order phi_k(x)``, shape ``(len(x), N)``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return np.stack([p.deriv(order)(x) if order else p(x) for p in self.functions], axis=-1)

    def quadrature(self, extra_degree: int = 0) -> tuple[np.ndarray, np.ndarray]:
        """Nodes exact for products of two basis functions times a degree ``extra_degree`` weight."""
        return gauss_legendre01((2 * self.degree + extra_degree) // 2 + 1)

    def jet_residual(self) -> float:
        """Largest |D^r phi_k| at 0 and 1 for r < m (zero up to roundoff)."""
        ends = np.array([0.0, 1.0])
        return max(float(np.abs(self.values(ends, r)).max()) for r in range(self.m))

    @cached_property
    def gram_l2(self) -> np.ndarray:
        x, w = self.quadrature()
        V = self.values(x)
        return np.kron(V.T @ (w[:, None] * V), np.eye(self.n))

    @cached_property
    def gram_hm(self) -> np.ndarray:
        x, w = self.quadrature()
        S = sum(self.values(x, r).T @ (w[:, None] * self.values(x, r)) for r in range(self.m + 1))
        return np.kron(S, np.eye(self.n))

    def gram_condition(self) -> float:
        return float(np.linalg.cond(self.gram_hm))

    def coefficients_to_values(self, c: np.ndarray, x, order: int = 0) -> np.ndarray:
        """Evaluate ``u = sum c[a*n + alpha] phi_a e_alpha`` (shape ``(len(x), n)``)."""
        return self.values(x, order) @ np.asarray(c).reshape(self.N, self.n)


@dataclass(eq=False)
class HermitianPencil:
    """``lam -> Q(lam) = sum_e lam^e M_e + shift * G``."""

    terms: dict[int, np.ndarray]
    gram: np.ndarray
    shift: float = 0.0

    @property
    def size(self) -> int:
        return self.gram.shape[0]

    def Q(self, lam: float) -> np.ndarray:
        Q = self.shift * self.gram.astype(complex)
        for e, M in self.terms.items():
            Q = Q + (lam**e if e else 1.0) * M
        return 0.5 * (Q + Q.conj().T)

    def dQ(self, lam: float) -> np.ndarray:
        D = np.zeros_like(self.gram, dtype=complex)
        for e, M in self.terms.items():
            if e:
                D = D + e * (lam ** (e - 1) if e > 1 else 1.0) * M
        return 0.5 * (D + D.conj().T)

    @property
    def scale(self) -> float:
        """Bound on ``||Q(lam)||`` over ``[0, 1]``."""
        return sum(float(np.linalg.norm(M, 2)) for M in self.terms.values()) + abs(self.shift) * float(np.linalg.norm(self.gram, 2))

    @property
    def dscale(self) -> float:
        """Bound on ``||Q'(lam)||`` over ``[0, 1]``."""
        return sum(e * float(np.linalg.norm(M, 2)) for e, M in self.terms.items())

    def perturbed(self, delta: float) -> HermitianPencil:
        return HermitianPencil(self.terms, self.gram, self.shift + delta)


def pencil(form: HermitianForm, basis: GalerkinBasis) -> HermitianPencil:
    """Assemble the ``lam``-polynomial Galerkin pencil of ``form``."""
    if (form.m, form.n) != (basis.m, basis.n):
        raise ValueError("basis does not match the form's (m, n)")
    m = form.m
    x, w = basis.quadrature(form.max_degree())
    V = [basis.values(x, r) for r in range(m + 1)]
    terms: dict[int, np.ndarray] = {}
    for (i, j), p in form.items():
        for d, C in enumerate(p.coeffs):
            if not np.any(C):
                continue
            S = V[i].T @ ((w * x**d)[:, None] * V[j])
            e = 2 * m - i - j + d
            terms[e] = terms.get(e, 0) + np.kron(S, C)
    return HermitianPencil(terms, basis.gram_l2)


def assemble(form: HermitianForm, basis: GalerkinBasis, lam: float) -> np.ndarray:
    """Hermitian Galerkin matrix of the rescaled form at ``lam``."""
    return pencil(form, basis).Q(lam)


def inertia(Q: np.ndarray, eps_rel: float = EPS_REL) -> tuple[int, int, int]:
    """``(n_minus, n_zero, n_plus)`` with zero band ``|ev| <= eps_rel * ||Q||``."""
    ev = np.linalg.eigvalsh(Q)
    if ev.size == 0:
        return 0, 0, 0
    eps = eps_rel * float(np.abs(ev).max())
    return int(np.sum(ev < -eps)), int(np.sum(np.abs(ev) <= eps)), int(np.sum(ev > eps))


def _n_minus(P: HermitianPencil, lam: float) -> int:
    return int(np.sum(np.linalg.eigvalsh(P.Q(lam)) < 0))


@dataclass
class CrossingRecord:
    lam: float
    kernel_dim: int
    signature: int
    regular: bool
    delta_used: float = 0.0
    inertia_jump: int = 0


@dataclass
class MorseResult:
    mu: int
    crossings: list[CrossingRecord]
    inertia0: tuple[int, int, int]
    inertia1: tuple[int, int, int]
    basis_size: int
    identity_ok: bool = True
    notes: list[str] = field(default_factory=list)

    @property
    def instants(self) -> list[float]:
        return [c.lam for c in self.crossings]


def crossing_form(P: HermitianPencil, lam: float, kernel: np.ndarray) -> tuple[int, bool]:
    """Signature of ``Q'(lam)`` restricted to ``span(kernel)`` and whether it is nondegenerate."""
    if kernel.size == 0 or kernel.shape[1] == 0:
        raise ValueError("crossing form needs a nonempty kernel")
    K, _ = np.linalg.qr(kernel)
    dQ = P.dQ(lam)
    G = K.conj().T @ dQ @ K
    ev = np.linalg.eigvalsh(0.5 * (G + G.conj().T))
    thresh = EPS_GAMMA * max(P.dscale, np.finfo(float).tiny)
    return int(np.sum(ev > thresh) - np.sum(ev < -thresh)), bool(np.all(np.abs(ev) > thresh))


def _kernel(P: HermitianPencil, lam: float, width: float, need: int, eps_rel: float):
    ev, vecs = np.linalg.eigh(P.Q(lam))
    eps = max(eps_rel * P.scale, width * np.linalg.norm(P.dQ(lam), 2))
    idx = np.flatnonzero(np.abs(ev) <= eps)
    if idx.size < need:
        return None
    return vecs[:, idx]


def _locate(P: HermitianPencil, a: float, b: float, na: int, nb: int, tol: float, out: list):
    while True:
        if b - a <= tol:
            out.append((a, b, nb - na))
            return
        c = 0.5 * (a + b)
        nc = _n_minus(P, c)
        if nc != na and nc != nb:
            _locate(P, a, c, na, nc, tol, out)
            a, na = c, nc
        elif nc != na:
            b, nb = c, nc
        else:
            a, na = c, nc


def _merge(brackets, gap: float):
    """Join brackets closer than ``gap``; roundoff can split one multiple crossing."""
    merged = []
    for a, b, jump in sorted(brackets):
        if merged and a - merged[-1][1] <= gap:
            a0, _, j0, n0 = merged[-1]
            merged[-1] = (a0, b, j0 + jump, n0 + abs(jump))
        else:
            merged.append((a, b, jump, abs(jump)))
    return merged


def find_crossings(P: HermitianPencil, grid: int = 64, tol: float = BISECT_TOL, eps_rel: float = EPS_REL) -> list[CrossingRecord]:
    """Bisect every change of ``n_-`` on a uniform ``lam`` grid into crossing records."""
    lams = np.linspace(0.0, 1.0, grid + 1)
    counts = [_n_minus(P, l) for l in lams]
    brackets: list[tuple[float, float, int]] = []
    for a, b, na, nb in zip(lams[:-1], lams[1:], counts[:-1], counts[1:]):
        if na != nb:
            _locate(P, a, b, na, nb, tol, brackets)
    records = []
    for a, b, jump, need in _merge(brackets, MERGE_GAP * tol):
        lam = 0.5 * (a + b)
        K = _kernel(P, lam, b - a, need, eps_rel)
        if K is None:
            raise CrossingError(f"inertia jump {jump} near lam={lam:.10f} without a matching kernel")
        sig, regular = crossing_form(P, lam, K)
        records.append(CrossingRecord(lam, K.shape[1], sig, regular, P.shift, jump))
    return records


def delta_perturb(form: HermitianForm, basis: GalerkinBasis, delta: float) -> HermitianPencil:
    """Pencil ``Q(lam) + delta * G`` with ``G`` the L2 Gram matrix of the basis."""
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    return pencil(form, basis).perturbed(delta)


def _endpoint_inertia(P: HermitianPencil, eps_rel: float):
    i0, i1 = inertia(P.Q(0.0), eps_rel), inertia(P.Q(1.0), eps_rel)
    return i0, i1


def morse_index(
    form: HermitianForm,
    basis: GalerkinBasis | None = None,
    grid: int = 64,
    eps_rel: float = EPS_REL,
    tol: float = BISECT_TOL,
) -> MorseResult:
    """Regularised Morse index ``n_-(Q(1)) - n_-(Q(0))`` with crossing-by-crossing check."""
    basis = basis or GalerkinBasis(form.m, form.n)
    return spectral_flow(pencil(form, basis), grid, eps_rel, tol)


def spectral_flow(
    P: HermitianPencil,
    grid: int = 64,
    eps_rel: float = EPS_REL,
    tol: float = BISECT_TOL,
) -> MorseResult:
    """``n_-(Q(1)) - n_-(Q(0))`` of a pencil, with crossings and the signature identity.

    Non-regular crossings are resolved on the shifted pencil ``Q + delta G``.
    """
    if grid < 32:
        raise ValueError("grid resolution must be at least 32")
    i0, i1 = _endpoint_inertia(P, eps_rel)
    if i0[1]:
        raise DegenerateEndpointError("Q(0) is degenerate")
    if i1[1]:
        raise DegenerateEndpointError("lam = 1 is a conjugate instant (Q(1) is degenerate)")
    mu = i1[0] - i0[0]

    try:
        crossings = find_crossings(P, grid, tol, eps_rel)
    except CrossingError:
        log.info("refining crossing grid to %d", 2 * grid)
        crossings = find_crossings(P, 2 * grid, tol, eps_rel)

    result = MorseResult(mu, crossings, i0, i1, P.size)
    if not all(c.regular for c in crossings):
        _resolve_degenerate(P, result, grid, eps_rel, tol)
    total = sum(c.signature for c in result.crossings)
    result.identity_ok = mu == -total
    if not result.identity_ok:
        result.notes.append(f"n_-(Q1) - n_-(Q0) = {mu} but crossing signatures sum to {total}")
        log.warning(result.notes[-1])
    return result


def _delta_for(P: HermitianPencil, crossing: CrossingRecord) -> float:
    """Half the median of the nearest nonzero |eigenvalues| at the crossing, in Gram units."""
    ev = np.sort(np.abs(np.linalg.eigvalsh(P.Q(crossing.lam))))[crossing.kernel_dim :]
    ev = ev[ev > 0][: max(2, crossing.kernel_dim)]
    if ev.size == 0:
        return 1e-6
    return 0.5 * float(np.median(ev)) / float(np.linalg.eigvalsh(P.gram).max())


def _resolve_degenerate(P: HermitianPencil, result: MorseResult, grid, eps_rel, tol):
    bad = [c for c in result.crossings if not c.regular]
    delta = min(_delta_for(P, c) for c in bad)
    for _ in range(8):
        Pd = P.perturbed(delta)
        i0, i1 = _endpoint_inertia(Pd, eps_rel)
        if i0[1] == 0 and i1[1] == 0 and i0[0] == result.inertia0[0] and i1[0] == result.inertia1[0]:
            break
        delta *= 0.5
    else:
        raise DegenerateEndpointError("delta perturbation keeps shifting an endpoint into degeneracy")
    perturbed = find_crossings(Pd, grid, tol, eps_rel)
    result.notes.append(f"delta perturbation {delta:.3g} applied to non-regular crossings")
    # each non-regular crossing takes the signatures of the perturbed crossings nearest to it
    for c in bad:
        c.signature = 0
        c.delta_used = delta
    for c in perturbed:
        near = min(result.crossings, key=lambda r: abs(r.lam - c.lam))
        if not near.regular:
            near.signature += c.signature


def eigenvalue_flow(form: HermitianForm, basis: GalerkinBasis | None = None, points: int = 101, k: int = 8) -> np.ndarray:
    """Rows ``(lam, ev_1, ..., ev_k)`` of the ``k`` smallest-magnitude eigenvalues, sorted ascending."""
    basis = basis or GalerkinBasis(form.m, form.n)
    P = pencil(form, basis)
    k = min(k, P.size)
    rows = []
    for lam in np.linspace(0.0, 1.0, points):
        ev = np.linalg.eigvalsh(P.Q(lam))
        pick = np.sort(ev[np.argsort(np.abs(ev))[:k]])
        rows.append(np.r_[lam, pick])
    return np.array(rows)
