"""Comparison of Morse indices for pointwise ordered forms.

With the index normalised so that the classical problem ``|u'|^2 - c|u|^2``
counts its conjugate points positively, the index can only grow when the
form decreases: ``Omega_1 <= Omega_0`` pointwise implies ``mu_0 <= mu_1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateEndpointError
from .galerkin_flow import GalerkinBasis, morse_index
from .poly_forms import HermitianForm

ORDER_TOL = 1e-10


@dataclass(frozen=True)
class FormPair:
    form0: HermitianForm
    form1: HermitianForm

    def reversed(self) -> FormPair:
        return FormPair(self.form1, self.form0)

    def __post_init__(self):
        a, b = self.form0, self.form1
        if (a.m, a.n, a.nu) != (b.m, b.n, b.nu):
            raise ValueError(f"dimension mismatch: (m, n, nu) = {(a.m, a.n, a.nu)} vs {(b.m, b.n, b.nu)}")
        if not a.entry(a.m, a.m).allclose(b.entry(b.m, b.m)):
            raise ValueError("leading coefficients differ")


@dataclass(frozen=True)
class OrderCheck:
    ordered: bool
    worst: float


@dataclass(frozen=True)
class Comparison:
    mu0: int
    mu1: int
    satisfied: bool


def chebyshev_points(count: int) -> np.ndarray:
    """Chebyshev-Lobatto points on ``[0, 1]``."""
    if count == 1:
        return np.array([0.5])
    return 0.5 * (1.0 - np.cos(np.pi * np.arange(count) / (count - 1)))


def jet_block(form: HermitianForm, x: np.ndarray) -> np.ndarray:
    """The ``(m+1) n`` square matrix ``[omega[i, j](x)]`` at each ``x``."""
    m, n = form.m, form.n
    B = np.zeros((len(x), (m + 1) * n, (m + 1) * n), dtype=complex)
    for (i, j), p in form.items():
        B[:, i * n : (i + 1) * n, j * n : (j + 1) * n] = p(x)
    return B


def check_order(pair: FormPair, samples: int = 101) -> OrderCheck:
    """Whether ``Omega_0 <= Omega_1``, i.e. the jet block of ``Omega_1 - Omega_0`` is PSD at sampled ``x``."""
    x = chebyshev_points(samples)
    D = jet_block(pair.form1, x) - jet_block(pair.form0, x)
    D = 0.5 * (D + np.conj(np.swapaxes(D, 1, 2)))
    worst = float(np.linalg.eigvalsh(D)[:, 0].min())
    return OrderCheck(worst >= -ORDER_TOL, min(worst, 0.0))


def compare_indices(pair: FormPair, basis: GalerkinBasis | None = None, grid: int = 64) -> Comparison:
    """Morse indices of both forms and whether ``mu0 <= mu1``.

    Requires ``Omega_1 <= Omega_0`` pointwise.
    """
    order = check_order(pair.reversed())
    if not order.ordered:
        raise ValueError(f"form1 is not below form0 (most negative eigenvalue {order.worst:.3g})")
    mus = []
    for name, form in (("form0", pair.form0), ("form1", pair.form1)):
        try:
            mus.append(morse_index(form, basis, grid).mu)
        except DegenerateEndpointError as exc:
            raise DegenerateEndpointError(f"{name}: {exc}") from exc
    return Comparison(mus[0], mus[1], mus[0] <= mus[1])
