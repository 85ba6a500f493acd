import numpy as np
import numpy.polynomial.polynomial as P
import pytest

from sturmflow.corpus import oracle_corpus


@pytest.fixture(scope="session")
def corpus():
    return {case.name: case for case in oracle_corpus()}


def jet_vanishing(rng: np.random.Generator, m: int, n: int, degree: int) -> np.ndarray:
    """Random vector polynomial ``x^m (1-x)^m r(x)`` of total degree ``degree``."""
    bubble = P.polypow([0.0, 1.0], m)
    bubble = P.polymul(bubble, P.polypow([1.0, -1.0], m))
    r = rng.standard_normal((max(degree - 2 * m, 0) + 1, n)) + 1j * rng.standard_normal((max(degree - 2 * m, 0) + 1, n))
    return np.stack([P.polymul(bubble, r[:, a]) for a in range(n)], axis=1)


def random_vecpoly(rng: np.random.Generator, n: int, degree: int) -> np.ndarray:
    return rng.standard_normal((degree + 1, n)) + 1j * rng.standard_normal((degree + 1, n))


ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record(criterion: int, ok: bool, detail: str) -> None:
    """Remember one acceptance verdict; all are printed at the end of the run."""
    ACCEPTANCE[criterion] = (ok, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {k}: {detail}")
