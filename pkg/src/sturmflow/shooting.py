"""Cauchy problems for ``l_lam u + i s u = 0`` and the transition matrix.

For ``z = lam + i s`` the solutions start from a vanishing (m-1)-jet at 0,
with derivatives ``m .. 2m-1`` set to the standard basis of ``C^{nm}``. The
transition matrix maps that data to the (m-1)-jet at ``x = 1``; its
determinant is carried as ``(log|det|, arg det)``.

All evaluations go through :func:`rho_batch`, which integrates every
requested ``z`` at once with a shared adaptive Dormand-Prince 5(4) step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .poly_forms import DiffOperator, HermitianForm, euler_lagrange, rescaled_operator

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
# 5th-order minus embedded 4th-order weights
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])


class ShootingError(RuntimeError):
    """The integrator could not reach ``x = 1`` (step-size underflow)."""

    def __init__(self, message: str, x: float):
        super().__init__(f"{message} at x={x:.6g}")
        self.x = x


@dataclass(frozen=True)
class Tolerances:
    atol: float = 1e-11
    rtol: float = 1e-10
    h_min: float = 1e-10
    max_steps: int = 200_000

    def scaled(self, factor: float) -> Tolerances:
        return Tolerances(self.atol * factor, self.rtol * factor, self.h_min, self.max_steps)


DEFAULT_TOL = Tolerances()


@dataclass(frozen=True, eq=False)
class FirstOrderSystem:
    """Companion form of ``l u + i s u = 0`` acting on ``(u, u', ..., u^(2m-1))``."""

    op: DiffOperator
    s: float

    @property
    def dim(self) -> int:
        return 2 * self.op.m * self.op.n

    def matrix(self, x: float) -> np.ndarray:
        m, n = self.op.m, self.op.n
        A = np.zeros((self.dim, self.dim), dtype=complex)
        A[: (2 * m - 1) * n, n:] = np.eye((2 * m - 1) * n)
        pinv = np.linalg.inv(self.op.leading)
        for k in range(2 * m):
            block = self.op.p[k](x)
            if k == 0:
                block = block + 1j * self.s * np.eye(n)
            A[(2 * m - 1) * n :, k * n : (k + 1) * n] = -pinv @ block
        return A

    def __call__(self, x: float, y: np.ndarray) -> np.ndarray:
        return self.matrix(x) @ y


def assemble_system(op: DiffOperator, s: float) -> FirstOrderSystem:
    """First-order reduction of an (already rescaled) operator with shift ``i s``."""
    return FirstOrderSystem(op, float(s))


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    z: complex
    R: np.ndarray
    log_det: float
    phase: float


class ShootingKernel:
    """Precomputed coefficient tensors of one form, for batched shooting."""

    def __init__(self, form: HermitianForm):
        self.form = form
        self.op = euler_lagrange(form)
        m, n = form.m, form.n
        self.m, self.n = m, n
        deg = max(p.coeffs.shape[0] for p in self.op.p[:-1])
        C = np.zeros((2 * m, deg, n, n), dtype=complex)
        for k, p in enumerate(self.op.p[:-1]):
            C[k, : p.coeffs.shape[0]] = p.coeffs
        # bottom block: u^(2m) = -P^{-1} (sum_k p_k u^(k) + i s u); P diagonal +-1
        self._pinv_diag = 1.0 / np.diag(self.op.leading)
        self._C = -self._pinv_diag[None, None, :, None] * C
        self._exps = 2 * m - np.arange(2 * m)[:, None] + np.arange(deg)[None, :]

    def _coefficients(self, lam: np.ndarray) -> np.ndarray:
        # (b, deg, 2m, n, n), degree axis first for Horner
        scale = lam[:, None, None] ** self._exps[None]
        G = self._C[None] * scale[..., None, None]
        return np.ascontiguousarray(np.moveaxis(G, 2, 1))

    def integrate(self, z: np.ndarray, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
        """Transition matrices for every entry of ``z``, shape ``(b, nm, nm)``."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        lam, s = z.real, z.imag
        if np.any((lam < 0) | (lam > 1)):
            raise ValueError("Re z must lie in [0, 1]")
        m, n = self.m, self.n
        b = z.size
        G = self._coefficients(lam)
        shift = (-1j * s)[:, None] * self._pinv_diag[None, :]

        def rhs(x, Y):
            M = G[:, -1]
            for d in range(G.shape[1] - 2, -1, -1):
                M = M * x + G[:, d]
            bottom = np.matmul(M, Y).sum(axis=1) + shift[:, :, None] * Y[:, 0]
            return np.concatenate([Y[:, 1:], bottom[:, None]], axis=1)

        Y = np.zeros((b, 2 * m, n, n * m), dtype=complex)
        for r in range(m):
            Y[:, m + r, :, r * n : (r + 1) * n] = np.eye(n)
        Y = _dopri5(rhs, Y, tol)
        return Y[:, :m].reshape(b, m * n, m * n)


def _dopri5(rhs, Y: np.ndarray, tol: Tolerances) -> np.ndarray:
    """Integrate ``Y' = rhs(x, Y)`` over ``[0, 1]`` with one step size for the batch."""
    x, h = 0.0, 1e-2
    k = [rhs(0.0, Y)] + [None] * 6
    axes = tuple(range(1, Y.ndim))
    for _ in range(tol.max_steps):
        if x >= 1.0:
            return Y
        h = min(h, 1.0 - x)
        for i in range(1, 7):
            acc = Y
            for a, kj in zip(_A[i], k):
                if a:
                    acc = acc + (h * a) * kj
            if i < 6:
                k[i] = rhs(x + _C[i] * h, acc)
        Ynew = acc
        k[6] = rhs(x + h, Ynew)
        err = h * sum(e * kj for e, kj in zip(_E, k) if e)
        sc = tol.atol + tol.rtol * np.maximum(np.abs(Y), np.abs(Ynew))
        enorm = float(np.sqrt(np.mean(np.abs(err / sc) ** 2, axis=axes)).max())
        if enorm <= 1.0:
            x = 1.0 if 1.0 - (x + h) < 1e-14 else x + h
            Y = Ynew
            k[0] = k[6]
            h *= min(5.0, 0.9 * enorm ** -0.2) if enorm > 0 else 5.0
        else:
            h *= max(0.2, 0.9 * enorm**-0.2)
            if h < tol.h_min:
                raise ShootingError("step size underflow", x)
    raise ShootingError("step budget exhausted", x)


def _slogdet(R: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    sign, logabs = np.linalg.slogdet(R)
    phase = np.angle(sign)
    phase = np.where(phase <= -np.pi, np.pi, phase)
    return logabs, phase


_KERNELS: dict[int, ShootingKernel] = {}


def kernel_for(form: HermitianForm) -> ShootingKernel:
    key = id(form)
    ker = _KERNELS.get(key)
    if ker is None or ker.form is not form:
        if len(_KERNELS) > 64:
            _KERNELS.clear()
        ker = _KERNELS[key] = ShootingKernel(form)
    return ker


def rho_batch(form: HermitianForm, z, tol: Tolerances = DEFAULT_TOL, chunk: int = 4096) -> tuple[np.ndarray, np.ndarray]:
    """``(log|rho(z)|, arg rho(z))`` for an array of ``z``."""
    z = np.asarray(z, dtype=complex)
    flat = z.ravel()
    ker = kernel_for(form)
    logs = np.empty(flat.size)
    phases = np.empty(flat.size)
    for start in range(0, flat.size, chunk):
        sl = slice(start, start + chunk)
        logs[sl], phases[sl] = _slogdet(ker.integrate(flat[sl], tol))
    return logs.reshape(z.shape), phases.reshape(z.shape)


def transition(form: HermitianForm, z: complex, tol: Tolerances = DEFAULT_TOL) -> TransitionMatrix:
    """Transition matrix at a single ``z = lam + i s``."""
    z = complex(z)
    if not 0.0 <= z.real <= 1.0:
        raise ValueError(f"Re z must lie in [0, 1], got {z.real}")
    R = kernel_for(form).integrate(np.array([z]), tol)[0]
    logabs, phase = _slogdet(R[None])
    return TransitionMatrix(z, R, float(logabs[0]), float(phase[0]))


def rho(form: HermitianForm, z: complex, tol: Tolerances = DEFAULT_TOL) -> tuple[float, float]:
    """``(log|det R_z|, arg det R_z)``."""
    t = transition(form, z, tol)
    return t.log_det, t.phase


def rescaled_system(form: HermitianForm, z: complex) -> FirstOrderSystem:
    """Unbatched companion system at ``z``; reference path for tests."""
    z = complex(z)
    return assemble_system(rescaled_operator(euler_lagrange(form), z.real), z.imag)
