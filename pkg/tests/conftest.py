from itertools import combinations

import numpy as np
import pytest

from atypical.latgeom import is_face_oracle
from atypical.polycore import SparsePoly, parse_map

XYZ = ["x", "y", "z"]
HYPER = ["x*y - 1", "y^2*z"]
QFIB = ["x*y + 1", "(x*y*z + 1)*(x*y*z + z - 1)"]


@pytest.fixture
def hyper_map():
    return parse_map(HYPER, XYZ)


@pytest.fixture
def qfib_map():
    return parse_map(QFIB, XYZ)


def random_poly(rng: np.random.Generator, n: int, degree: int, nterms: int, complex_coeffs=True) -> SparsePoly:
    terms = {}
    for _ in range(nterms):
        alpha = [0] * n
        for _ in range(int(rng.integers(0, degree + 1))):
            alpha[int(rng.integers(0, n))] += 1
        re = int(rng.integers(-5, 6))
        im = int(rng.integers(-5, 6)) if complex_coeffs else 0
        terms[tuple(alpha)] = complex(re, im)
    return SparsePoly(n, terms)


def fiber_start_qfib(u: complex, v: complex) -> np.ndarray:
    """A point of the QFIB fiber over (u, v) with y = 1; z solves u(u-1)z^2 + z - (1+v) = 0."""
    z = np.roots([u * (u - 1), 1, -(1 + v)])[0]
    return np.array([u - 1, 1, z], dtype=complex)


def random_support(rng, n=None, npts=None):
    n = n or int(rng.integers(1, 5))
    npts = npts or int(rng.integers(1, 9))
    return [tuple(int(v) for v in rng.integers(0, 6, n)) for _ in range(npts)]


def oracle_family(points):
    pts = sorted(set(points))
    fam = set()
    for k in range(1, len(pts) + 1):
        for S in combinations(pts, k):
            if is_face_oracle(pts, S):
                fam.add(frozenset(S))
    return fam


# acceptance criteria register here and are echoed in the terminal summary
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
