"""Winding of ``rho(z) = det R_z`` around rectangles of the ``z = lam + i s`` plane.

Phases are unwrapped segment by segment: any sample interval whose wrapped
phase jump reaches ``pi/2`` is bisected, all pending midpoints of all
segments being evaluated in one batch. Segments crossing the real axis
get extra samples graded geometrically towards ``s = 0``, where the zeros
of ``rho`` live.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .errors import DegenerateEndpointError, RefinementExhaustedError, ZeroOnContourError
from .poly_forms import HermitianForm
from .shooting import DEFAULT_TOL, Tolerances, rho_batch

# mu_con = SIGMA * winding; pinned by the classical scalar problem, where it gives +2
SIGMA = -1

Evaluator = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]


@dataclass(frozen=True)
class Rectangle:
    lam_lo: float = 0.0
    lam_hi: float = 1.0
    h: float = 1.0

    def corners(self) -> list[complex]:
        """Counterclockwise from the lower-left corner."""
        a, b, h = self.lam_lo, self.lam_hi, self.h
        return [complex(a, -h), complex(b, -h), complex(b, h), complex(a, h)]


@dataclass(frozen=True)
class ContourSettings:
    samples_per_side: int = 64
    max_depth: int = 16
    floor: float = 1e-8
    graded_per_decade: int = 3
    graded_min: float = 1e-13
    tol: Tolerances = DEFAULT_TOL


DEFAULT_SETTINGS = ContourSettings()
# small squares around the real axis: rho is close to affine there
LOCALIZE_SETTINGS = ContourSettings(samples_per_side=8, graded_per_decade=1)


@dataclass
class Contour:
    """Closed counterclockwise trace; first and last samples coincide."""

    rect: Rectangle
    z: np.ndarray
    log_magnitude: np.ndarray
    phase: np.ndarray
    increment: float = 0.0

    @property
    def winding(self) -> int:
        return int(round(self.increment / (2 * np.pi)))


def _wrap(d: np.ndarray) -> np.ndarray:
    return (d + np.pi) % (2 * np.pi) - np.pi


def evaluator(form: HermitianForm, tol: Tolerances = DEFAULT_TOL) -> Evaluator:
    return lambda z: rho_batch(form, z, tol)


def function_evaluator(f: Callable[[np.ndarray], np.ndarray]) -> Evaluator:
    """Wrap a plain complex function of ``z`` (vectorised) as an evaluator."""

    def ev(z):
        w = f(np.asarray(z, dtype=complex))
        with np.errstate(divide="ignore"):
            return np.log(np.abs(w)), np.angle(w)

    return ev


def _as_evaluator(obj: Union[HermitianForm, Evaluator], tol: Tolerances) -> Evaluator:
    return evaluator(obj, tol) if isinstance(obj, HermitianForm) else obj


@dataclass
class _Segment:
    za: complex
    zb: complex
    t: np.ndarray
    logmag: np.ndarray = field(default=None)
    phase: np.ndarray = field(default=None)
    min_width: float = 0.0

    def z(self, t=None) -> np.ndarray:
        t = self.t if t is None else t
        return self.za + t * (self.zb - self.za)

    @property
    def increment(self) -> float:
        return float(np.sum(_wrap(np.diff(self.phase))))


def _initial_params(za: complex, zb: complex, n: int, settings: ContourSettings) -> np.ndarray:
    t = np.linspace(0.0, 1.0, max(n, 2) + 1)
    ya, yb = za.imag, zb.imag
    if ya * yb < 0 and settings.graded_per_decade:
        t0 = ya / (ya - yb)
        decades = np.log10(1.0 / settings.graded_min)
        k = np.arange(1, int(decades * settings.graded_per_decade) + 1)
        g = 10.0 ** (-k / settings.graded_per_decade)
        t = np.concatenate([t, t0 - t0 * g, t0 + (1 - t0) * g, [t0]])
        t = np.unique(np.clip(t, 0.0, 1.0))
    return t


def _trace_segments(ev: Evaluator, segs: list[_Segment], settings: ContourSettings) -> None:
    """Evaluate and adaptively refine every segment in place."""
    sizes = [s.t.size for s in segs]
    L, P = ev(np.concatenate([s.z() for s in segs]))
    for s, lo, hi in zip(segs, np.cumsum([0] + sizes[:-1]), np.cumsum(sizes)):
        s.logmag, s.phase = L[lo:hi], P[lo:hi]
        # never below what a midpoint in [0, 1] can still resolve
        s.min_width = max(float(np.diff(s.t).min()) / 2.0**settings.max_depth, 1e-14)
    while True:
        pending = []
        for s in segs:
            bad = np.flatnonzero(np.abs(_wrap(np.diff(s.phase))) >= np.pi / 2)
            if bad.size == 0:
                continue
            widths = s.t[bad + 1] - s.t[bad]
            if np.any(widths < s.min_width):
                # unresolvable phase next to a (near) zero is a zero on the contour
                _check_floor(segs, settings)
                z = s.z(s.t[bad[np.argmin(widths)]])
                raise RefinementExhaustedError(f"phase unwrapping did not resolve near z={z:.8g}")
            pending.append((s, 0.5 * (s.t[bad] + s.t[bad + 1])))
        if not pending:
            return
        L, P = ev(np.concatenate([s.z(t) for s, t in pending]))
        if not np.all(np.isfinite(L)):
            raise ZeroOnContourError(f"rho vanishes on the contour near z={np.concatenate([s.z(t) for s, t in pending])[~np.isfinite(L)][0]:.10g}")
        pos = 0
        for s, t in pending:
            k = t.size
            order = np.argsort(np.r_[s.t, t], kind="stable")
            s.t = np.r_[s.t, t][order]
            s.logmag = np.r_[s.logmag, L[pos : pos + k]][order]
            s.phase = np.r_[s.phase, P[pos : pos + k]][order]
            pos += k


def _rect_segments(rect: Rectangle, n_side, settings: ContourSettings) -> list[_Segment]:
    c = rect.corners()
    out = []
    for k in range(4):
        za, zb = c[k], c[(k + 1) % 4]
        out.append(_Segment(za, zb, _initial_params(za, zb, n_side, settings)))
    return out


def _check_floor(segs: list[_Segment], settings: ContourSettings) -> None:
    L = np.concatenate([s.logmag for s in segs])
    if not np.all(np.isfinite(L)) or L.min() - L.max() < np.log(settings.floor):
        s = min(segs, key=lambda seg: np.nanmin(np.where(np.isfinite(seg.logmag), seg.logmag, -np.inf)))
        z = s.z(s.t[int(np.argmin(s.logmag))])
        raise ZeroOnContourError(f"rho vanishes (below floor) on the contour near z={z:.10g}")


def rectangle_windings(
    obj: Union[HermitianForm, Evaluator],
    rects: list[Rectangle],
    settings: ContourSettings = DEFAULT_SETTINGS,
) -> list[int]:
    """Winding numbers of several rectangles, evaluated in shared batches."""
    ev = _as_evaluator(obj, settings.tol)
    per_rect = [_rect_segments(r, settings.samples_per_side, settings) for r in rects]
    _trace_segments(ev, [s for segs in per_rect for s in segs], settings)
    out = []
    for segs in per_rect:
        _check_floor(segs, settings)
        total = sum(s.increment for s in segs)
        w = total / (2 * np.pi)
        if abs(w - round(w)) > 1e-6:
            raise RefinementExhaustedError(f"unwrapped phase {total} is not a multiple of 2 pi")
        out.append(int(round(w)))
    return out


def trace_contour(
    obj: Union[HermitianForm, Evaluator],
    rect: Rectangle = Rectangle(),
    settings: ContourSettings = DEFAULT_SETTINGS,
) -> Contour:
    """Sampled ``(z, log|rho|, arg rho)`` along the boundary of ``rect``."""
    ev = _as_evaluator(obj, settings.tol)
    segs = _rect_segments(rect, settings.samples_per_side, settings)
    _trace_segments(ev, segs, settings)
    _check_floor(segs, settings)
    z = np.concatenate([s.z()[:-1] for s in segs] + [segs[0].z()[:1]])
    L = np.concatenate([s.logmag[:-1] for s in segs] + [segs[0].logmag[:1]])
    P = np.concatenate([s.phase[:-1] for s in segs] + [segs[0].phase[:1]])
    return Contour(rect, z, L, P, sum(s.increment for s in segs))


def winding_number(
    obj: Union[HermitianForm, Evaluator],
    rect: Rectangle = Rectangle(),
    settings: ContourSettings = DEFAULT_SETTINGS,
) -> int:
    """Counterclockwise winding number of ``rho`` around ``rect``."""
    return rectangle_windings(obj, [rect], settings)[0]


def conjugate_index(
    form: HermitianForm,
    h: float = 1.0,
    settings: ContourSettings = DEFAULT_SETTINGS,
    check_endpoint: bool = True,
) -> int:
    """``SIGMA`` times the winding of ``rho`` around ``(0, 1) x (-h, h)``."""
    if check_endpoint:
        from .galerkin_flow import GalerkinBasis, assemble, inertia

        if inertia(assemble(form, GalerkinBasis(form.m, form.n), 1.0))[1]:
            raise DegenerateEndpointError("lam = 1 is a conjugate instant")
    try:
        w = winding_number(form, Rectangle(0.0, 1.0, h), settings)
    except ZeroOnContourError as exc:
        raise DegenerateEndpointError(f"degenerate endpoint: {exc}") from exc
    return SIGMA * w


@dataclass
class Instant:
    lam: float
    degree: int
    width: float


def localize_instants(
    obj: Union[HermitianForm, Evaluator],
    tol: float = 1e-7,
    strips: int = 16,
    lam_range: tuple[float, float] = (0.0, 1.0),
    settings: ContourSettings = LOCALIZE_SETTINGS,
) -> list[Instant]:
    """Real-axis zeros of ``rho`` with their local degrees, by strip bisection.

    A strip ``[a, b]`` is enclosed in the rectangle ``[a, b] x [-w, w]`` with
    ``w = b - a`` (zeros lie on the real axis, so the height does not change
    the degree). Strips with nonzero degree are halved until ``w < tol``.
    """
    active = _initial_strips(obj, lam_range, strips, settings, tol)
    found = []
    while active:
        done = [(a, b, d) for a, b, d in active if b - a < tol]
        found += [Instant(0.5 * (a + b), d, b - a) for a, b, d in done]
        todo = [(a, b, d) for a, b, d in active if b - a >= tol]
        if not todo:
            break
        halves = []
        for a, b, d in todo:
            c = 0.5 * (a + b)
            halves.append((a, c, b, d))
        active = _split(obj, halves, settings, tol)
    return sorted(found, key=lambda i: i.lam)


def _strip_rect(a: float, b: float) -> Rectangle:
    return Rectangle(a, b, min(1.0, b - a))


def _initial_strips(obj, lam_range, strips, settings, tol):
    """Strips with nonzero degree; interior edges are moved once if one hits an instant."""
    lo, hi = lam_range
    edges = np.linspace(lo, hi, strips + 1)
    for attempt in range(2):
        if attempt:
            edges[1:-1] += max(tol / 10, (hi - lo) / strips / 64)
        pairs = list(zip(edges[:-1], edges[1:]))
        try:
            degrees = rectangle_windings(obj, [_strip_rect(a, b) for a, b in pairs], settings)
        except (ZeroOnContourError, RefinementExhaustedError):
            if attempt:
                raise
            continue
        return [(a, b, d) for (a, b), d in zip(pairs, degrees) if d]


def _split(obj, halves, settings, tol):
    """Degrees of the left halves; the right halves follow by additivity."""
    try:
        w = rectangle_windings(obj, [_strip_rect(a, c) for a, c, _, _ in halves], settings)
    except (ZeroOnContourError, RefinementExhaustedError):
        if len(halves) > 1:
            return [s for h in halves for s in _split(obj, [h], settings, tol)]
        a, c, b, d = halves[0]
        # instant on the split line: move the line once
        c = c + max(tol / 10, (b - a) / 64)
        w = rectangle_windings(obj, [_strip_rect(a, c)], settings)
        halves = [(a, c, b, d)]
    out = []
    for (a, c, b, d), dl in zip(halves, w):
        dr = d - dl
        out += [(a, c, dl)] * bool(dl) + [(c, b, dr)] * bool(dr)
    return out


def off_axis_windings(
    obj: Union[HermitianForm, Evaluator],
    n_lam: int = 20,
    n_s: int = 20,
    gap: float = 0.05,
    h: float = 1.0,
    settings: ContourSettings = DEFAULT_SETTINGS,
    n_side: int = 8,
) -> np.ndarray:
    """Windings of an ``n_lam x n_s`` grid of cells covering ``O`` minus a band ``|s| < gap``."""
    lam = np.linspace(0.0, 1.0, n_lam + 1)
    half = n_s // 2
    s_up = np.linspace(gap, h, half + 1)
    rows = [(-s_up[k + 1], -s_up[k]) for k in range(half)][::-1] + [(s_up[k], s_up[k + 1]) for k in range(half)]
    rects = []
    for s0, s1 in rows:
        for a, b in zip(lam[:-1], lam[1:]):
            rects.append((a, b, s0, s1))
    ev = _as_evaluator(obj, settings.tol)
    segs_all = []
    for a, b, s0, s1 in rects:
        c = [complex(a, s0), complex(b, s0), complex(b, s1), complex(a, s1)]
        segs_all.append([_Segment(c[k], c[(k + 1) % 4], np.linspace(0, 1, n_side + 1)) for k in range(4)])
    _trace_segments(ev, [s for segs in segs_all for s in segs], settings)
    out = np.array([int(round(sum(s.increment for s in segs) / (2 * np.pi))) for segs in segs_all])
    return out.reshape(len(rows), n_lam)
