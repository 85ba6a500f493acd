"""Problem files, index reports, CSV traces and the ``sturmflow`` command.

Problem file (JSON)::

    {
      "m": 1, "n": 1, "nu": 0,
      "omega": [{"i": 0, "j": 0, "poly": [[[[-61.68, 0.0]]]]}],
      "options": {"basis_n": 24, "grid": 64, "tol": 1e-7}
    }

``poly`` lists the monomial coefficients ``C_0, C_1, ...``; each is an
``n x n`` row-major array of ``[re, im]`` pairs. An off-diagonal entry whose
mirror is absent gets the adjoint; an absent ``(m, m)`` entry gets ``J``.

Exit codes: 0 ok, 1 parse/invariant failure, 2 degenerate endpoint,
3 numerical failure (including a failed theorem check).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .comparison import FormPair, check_order, compare_indices
from .corpus import random_suite
from .errors import (
    CrossingError,
    DegenerateEndpointError,
    RefinementExhaustedError,
    ShootingError,
    ZeroOnContourError,
)
from .galerkin_flow import DEFAULT_N, GalerkinBasis, eigenvalue_flow, morse_index
from .poly_forms import HermitianForm, MatrixPolynomial, validate_form
from .shooting import DEFAULT_TOL, Tolerances
from .winding import ContourSettings, Rectangle, conjugate_index, localize_instants, trace_contour

EXIT_OK, EXIT_PARSE, EXIT_DEGENERATE, EXIT_NUMERIC = 0, 1, 2, 3
AGREE_TOL = 1e-5


class ProblemError(ValueError):
    """A problem file that does not describe an admissible form."""

    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = violations


@dataclass
class Options:
    basis_n: int = DEFAULT_N
    grid: int = 64
    tol: float = 1e-7
    contour_samples: int = 64
    strip_height: float = 1.0
    atol: float = DEFAULT_TOL.atol
    rtol: float = DEFAULT_TOL.rtol

    def contour(self) -> ContourSettings:
        return ContourSettings(samples_per_side=self.contour_samples, tol=Tolerances(self.atol, self.rtol))


@dataclass
class ProblemFile:
    form: HermitianForm
    options: Options = field(default_factory=Options)


def _matrix_from_json(rows, n: int) -> np.ndarray:
    a = np.asarray(rows, dtype=float)
    if a.shape != (n, n, 2):
        raise ProblemError([f"coefficient matrix must be {n}x{n} of [re, im] pairs, got shape {a.shape}"])
    return a[..., 0] + 1j * a[..., 1]


def _matrix_to_json(M: np.ndarray) -> list:
    return [[[float(v.real), float(v.imag)] for v in row] for row in M]


def parse_problem(data: dict) -> ProblemFile:
    """Build and validate a problem from its JSON object."""
    try:
        m, n, nu = int(data["m"]), int(data["n"]), int(data["nu"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ProblemError([f"missing or malformed header field: {exc}"]) from exc
    if m < 1 or n < 1:
        raise ProblemError([f"m and n must be >= 1 (got m={m}, n={n})"])
    entries = {}
    for e in data.get("omega", []):
        i, j = int(e["i"]), int(e["j"])
        coeffs = [_matrix_from_json(c, n) for c in e["poly"]]
        poly = MatrixPolynomial(np.array(coeffs).reshape(-1, n, n))
        entries[(i, j)] = entries[(i, j)] + poly if (i, j) in entries else poly
    form = HermitianForm.build(m, n, nu, entries)
    problems = validate_form(form)
    if problems:
        raise ProblemError(problems)
    opts = data.get("options", {})
    known = set(Options.__dataclass_fields__)
    unknown = set(opts) - known
    if unknown:
        raise ProblemError([f"unknown option(s): {sorted(unknown)}"])
    return ProblemFile(form, Options(**opts))


def serialize_problem(problem: ProblemFile | HermitianForm) -> dict:
    """JSON object for a problem; every nonzero entry is written explicitly."""
    if isinstance(problem, HermitianForm):
        problem = ProblemFile(problem)
    form = problem.form
    omega = [
        {"i": i, "j": j, "poly": [_matrix_to_json(C) for C in p.trim().coeffs]}
        for (i, j), p in form.items()
    ]
    return {"m": form.m, "n": form.n, "nu": form.nu, "omega": omega, "options": asdict(problem.options)}


def load_problem(path: str | Path) -> ProblemFile:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ProblemError([f"invalid JSON: {exc}"]) from exc
    return parse_problem(data)


def save_problem(problem: ProblemFile | HermitianForm, path: str | Path) -> None:
    Path(path).write_text(json.dumps(serialize_problem(problem), indent=2) + "\n")


# ---------------------------------------------------------------------------
# reports


@dataclass
class InstantRow:
    lam: float
    kernel_dim: int
    signature: int
    local_degree: int | None
    lam_shooting: float | None = None
    regular: bool = True

    @property
    def agree(self) -> bool:
        return self.lam_shooting is not None and abs(self.lam - self.lam_shooting) <= AGREE_TOL


@dataclass
class IndexReport:
    mu_con: int
    mu_mor: int
    instants: list[InstantRow]
    diagnostics: dict

    @property
    def theorem_a_ok(self) -> bool:
        return self.mu_con == self.mu_mor

    def to_dict(self) -> dict:
        return {
            "mu_con": self.mu_con,
            "mu_mor": self.mu_mor,
            "theorem_a_ok": self.theorem_a_ok,
            "instants": [
                {
                    "lambda": r.lam,
                    "lambda_shooting": r.lam_shooting,
                    "kernel_dim": r.kernel_dim,
                    "signature": r.signature,
                    "local_degree": r.local_degree,
                    "regular": r.regular,
                }
                for r in self.instants
            ],
            "diagnostics": self.diagnostics,
        }

    def to_text(self) -> str:
        d = self.diagnostics
        lines = [
            f"mu_con: {self.mu_con}",
            f"mu_mor: {self.mu_mor}",
            f"theorem_a_ok: {str(self.theorem_a_ok).lower()}",
            "instants:",
        ]
        if not self.instants:
            lines.append("  (none)")
        for r in self.instants:
            shoot = "-" if r.lam_shooting is None else f"{r.lam_shooting:.9f}"
            lines.append(
                f"  - lambda: {r.lam:.9f}  shooting: {shoot}  kernel_dim: {r.kernel_dim}"
                f"  signature: {r.signature:+d}  local_degree: {r.local_degree if r.local_degree is not None else '-'}"
                + ("" if r.regular else "  (non-regular)")
            )
        lines.append("diagnostics:")
        for k, v in d.items():
            lines.append(f"  {k}: {v}")
        return "\n".join(lines) + "\n"


def match_instants(galerkin, shooting) -> list[InstantRow]:
    """Pair Galerkin crossings with shooting instants by proximity."""
    rows = []
    unused = list(shooting)
    for c in galerkin:
        best = min(unused, key=lambda s: abs(s.lam - c.lam), default=None)
        row = InstantRow(c.lam, c.kernel_dim, c.signature, None, None, c.regular)
        if best is not None and abs(best.lam - c.lam) <= 1e3 * AGREE_TOL:
            row.local_degree, row.lam_shooting = best.degree, best.lam
            unused.remove(best)
        rows.append(row)
    for s in unused:
        rows.append(InstantRow(s.lam, 0, 0, s.degree, s.lam))
    return sorted(rows, key=lambda r: r.lam)


def index_report(problem: ProblemFile, localize: bool = True) -> IndexReport:
    """Both indices, the matched instants and diagnostics for a problem."""
    form, opt = problem.form, problem.options
    basis = GalerkinBasis(form.m, form.n, opt.basis_n)
    t0 = time.perf_counter()
    mor = morse_index(form, basis, opt.grid)
    t1 = time.perf_counter()
    mu_con = conjugate_index(form, opt.strip_height, opt.contour(), check_endpoint=False)
    t2 = time.perf_counter()
    shoot = localize_instants(form, opt.tol) if localize else []
    t3 = time.perf_counter()
    diagnostics = {
        "inertia_Q0": list(mor.inertia0),
        "inertia_Q1": list(mor.inertia1),
        "basis_size": mor.basis_size,
        "crossing_identity_ok": mor.identity_ok,
        "ode_atol": opt.atol,
        "ode_rtol": opt.rtol,
        "localize_tol": opt.tol,
        "strip_height": opt.strip_height,
        "contour_samples": opt.contour_samples,
        "seconds_morse": round(t1 - t0, 3),
        "seconds_winding": round(t2 - t1, 3),
        "seconds_localize": round(t3 - t2, 3),
    }
    if mor.notes:
        diagnostics["notes"] = mor.notes
    return IndexReport(mu_con, mor.mu, match_instants(mor.crossings, shoot), diagnostics)


# ---------------------------------------------------------------------------
# CSV


def write_flow_csv(form: HermitianForm, out, basis_n: int = DEFAULT_N, points: int = 101, k: int = 8) -> None:
    rows = eigenvalue_flow(form, GalerkinBasis(form.m, form.n, basis_n), points, k)
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["lambda"] + [f"eigenvalue_{i + 1}" for i in range(rows.shape[1] - 1)])
    for r in rows:
        w.writerow([f"{v:.17g}" for v in r])


def write_contour_csv(form: HermitianForm, out, h: float = 1.0, settings: ContourSettings | None = None) -> None:
    c = trace_contour(form, Rectangle(0.0, 1.0, h), settings or ContourSettings())
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["re_z", "im_z", "log_abs_rho", "arg_rho"])
    for z, L, P in zip(c.z, c.log_magnitude, c.phase):
        w.writerow([f"{z.real:.17g}", f"{z.imag:.17g}", f"{L:.17g}", f"{P:.17g}"])


# ---------------------------------------------------------------------------
# command line


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sturmflow", description="Conjugate and Morse indices of indefinite Sturm problems.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, files=1):
        if files == 1:
            p.add_argument("problem", help="problem JSON file")
        elif files == 2:
            p.add_argument("problem", help="problem JSON file of form0")
            p.add_argument("problem1", help="problem JSON file of form1 (must lie below form0)")
        p.add_argument("--basis-n", type=int, help="Galerkin modes per component")
        p.add_argument("--grid", type=int, help="lambda grid resolution for crossing detection")
        p.add_argument("--tol", type=float, help="instant localisation tolerance")
        p.add_argument("--height", type=float, help="strip height h of the contour")
        p.add_argument("--samples", type=int, help="contour samples per side")
        p.add_argument("--seed", type=int, default=0, help="seed for the random suite")
        p.add_argument("--out", help="output path (default stdout)")

    common(sub.add_parser("instants", help="conjugate instants by both methods"))
    p = sub.add_parser("index", help="full index report")
    common(p)
    p.add_argument("--json", action="store_true", help="emit JSON instead of text")
    p = sub.add_parser("verify", help="exit 0 iff mu_con == mu_mor")
    p.add_argument("problem", nargs="?", help="problem JSON file; omit with --random")
    p.add_argument("--random", type=int, metavar="K", help="verify K seeded random problems instead")
    for flag, typ in (("--basis-n", int), ("--grid", int), ("--tol", float), ("--height", float), ("--samples", int)):
        p.add_argument(flag, type=typ)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    common(sub.add_parser("compare", help="comparison of two ordered forms"), files=2)
    common(sub.add_parser("flow-csv", help="eigenvalue flow of Q(lam) as CSV"))
    common(sub.add_parser("contour-csv", help="phase/magnitude trace of rho as CSV"))
    return ap


def _apply_flags(problem: ProblemFile, args) -> ProblemFile:
    o = problem.options
    for attr, flag in (("basis_n", "basis_n"), ("grid", "grid"), ("tol", "tol"), ("strip_height", "height"), ("contour_samples", "samples")):
        v = getattr(args, flag, None)
        if v is not None:
            setattr(o, attr, v)
    return problem


class _Output:
    def __init__(self, path):
        self.path = path

    def __enter__(self):
        self.fh = open(self.path, "w", newline="") if self.path else sys.stdout
        return self.fh

    def __exit__(self, *exc):
        if self.path:
            self.fh.close()


def _cmd_instants(args) -> int:
    prob = _apply_flags(load_problem(args.problem), args)
    rep = index_report(prob)
    ok = all(r.agree for r in rep.instants)
    with _Output(args.out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["lambda_galerkin", "lambda_shooting", "kernel_dim", "signature", "local_degree", "agree"])
        for r in rep.instants:
            w.writerow([
                f"{r.lam:.9f}",
                "" if r.lam_shooting is None else f"{r.lam_shooting:.9f}",
                r.kernel_dim,
                r.signature,
                "" if r.local_degree is None else r.local_degree,
                str(r.agree).lower(),
            ])
    return EXIT_OK if ok else EXIT_NUMERIC


def _cmd_index(args) -> int:
    rep = index_report(_apply_flags(load_problem(args.problem), args))
    with _Output(args.out) as fh:
        fh.write(json.dumps(rep.to_dict(), indent=2) + "\n" if args.json else rep.to_text())
    return EXIT_OK


def _cmd_verify(args) -> int:
    if args.random:
        problems = [ProblemFile(f) for f in random_suite(args.seed, args.random)]
    elif args.problem:
        problems = [load_problem(args.problem)]
    else:
        raise ProblemError(["verify needs a problem file or --random K"])
    status = EXIT_OK
    with _Output(args.out) as fh:
        for k, prob in enumerate(problems):
            rep = index_report(_apply_flags(prob, args), localize=False)
            fh.write(f"[{k}] mu_con = {rep.mu_con}  mu_mor = {rep.mu_mor}  {'OK' if rep.theorem_a_ok else 'FAIL'}\n")
            if not rep.theorem_a_ok:
                status = EXIT_NUMERIC
    return status


def _cmd_compare(args) -> int:
    p0 = _apply_flags(load_problem(args.problem), args)
    p1 = load_problem(args.problem1)
    pair = FormPair(p0.form, p1.form)
    order = check_order(pair.reversed())
    with _Output(args.out) as fh:
        fh.write(f"form1 <= form0: {str(order.ordered).lower()} (worst eigenvalue {order.worst:.3e})\n")
        if not order.ordered:
            return EXIT_PARSE
        res = compare_indices(pair, GalerkinBasis(p0.form.m, p0.form.n, p0.options.basis_n), p0.options.grid)
        fh.write(f"mu0: {res.mu0}\nmu1: {res.mu1}\nsatisfied: {str(res.satisfied).lower()}\n")
    return EXIT_OK if res.satisfied else EXIT_NUMERIC


def _cmd_flow_csv(args) -> int:
    prob = _apply_flags(load_problem(args.problem), args)
    with _Output(args.out) as fh:
        write_flow_csv(prob.form, fh, prob.options.basis_n)
    return EXIT_OK


def _cmd_contour_csv(args) -> int:
    prob = _apply_flags(load_problem(args.problem), args)
    with _Output(args.out) as fh:
        write_contour_csv(prob.form, fh, prob.options.strip_height, prob.options.contour())
    return EXIT_OK


COMMANDS = {
    "instants": _cmd_instants,
    "index": _cmd_index,
    "verify": _cmd_verify,
    "compare": _cmd_compare,
    "flow-csv": _cmd_flow_csv,
    "contour-csv": _cmd_contour_csv,
}


def run(argv: list[str] | None = None) -> int:
    """Dispatch a command line; returns the exit status."""
    args = _build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ProblemError as exc:
        for v in exc.violations:
            print(f"error: {v}", file=sys.stderr)
        return EXIT_PARSE
    except (OSError, KeyError, TypeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except DegenerateEndpointError as exc:
        print(f"degenerate endpoint: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (ShootingError, RefinementExhaustedError, ZeroOnContourError, CrossingError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def main() -> None:
    sys.exit(run())
