"""Exact rational LP, convex hulls and face lattices of lattice polytopes.

Everything here works over ``Fraction``; no floating tolerance enters a
combinatorial decision.  Covectors follow the minimizing convention: a face
is the set of generators on which ``normal . p`` attains its minimum.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from itertools import combinations
from math import gcd, lcm
from typing import Iterable, Sequence

__all__ = [
    "Constraint",
    "lp_feasible",
    "Face",
    "LatticePolytope",
    "hull_vertices",
    "minimizing_face",
    "enumerate_faces",
    "is_face_oracle",
    "affine_dim",
    "rank",
    "nullspace",
]

Point = tuple[int, ...]
_OPS = ("==", ">=", "<=", ">", "<")


@dataclass(frozen=True)
class Constraint:
    """``coeffs . x  op  rhs`` with op one of ==, >=, <=, >, <."""

    coeffs: tuple[Fraction, ...]
    op: str
    rhs: Fraction = Fraction(0)

    def __post_init__(self):
        if self.op not in _OPS:
            raise ValueError(f"unknown relation {self.op!r}")
        object.__setattr__(self, "coeffs", tuple(Fraction(c) for c in self.coeffs))
        object.__setattr__(self, "rhs", Fraction(self.rhs))

    def holds(self, x: Sequence[Fraction]) -> bool:
        lhs = sum((c * v for c, v in zip(self.coeffs, x)), Fraction(0))
        return {
            "==": lhs == self.rhs,
            ">=": lhs >= self.rhs,
            "<=": lhs <= self.rhs,
            ">": lhs > self.rhs,
            "<": lhs < self.rhs,
        }[self.op]


# ---------------------------------------------------------------- simplex

def _pivot(T: list[list[Fraction]], basis: list[int], r: int, c: int) -> None:
    row = T[r]
    p = row[c]
    if p != 1:
        T[r] = row = [v / p for v in row]
    for i, other in enumerate(T):
        if i != r and other[c]:
            f = other[c]
            T[i] = [a - f * b for a, b in zip(other, row)]
    basis[r] = c


def _simplex_max(T, basis, cost, allowed) -> str:
    """Maximize ``cost . x`` on a canonical tableau using Bland's rule.

    ``T`` rows are ``[A | b]`` already in canonical form w.r.t. ``basis``.
    Returns "optimal" or "unbounded".
    """
    ncols = len(T[0]) - 1
    while True:
        entering = None
        for j in range(ncols):
            if not allowed[j] or j in basis:
                continue
            reduced = sum((cost[basis[i]] * T[i][j] for i in range(len(T))), Fraction(0)) - cost[j]
            if reduced < 0:
                entering = j
                break
        if entering is None:
            return "optimal"
        best = None
        for i, row in enumerate(T):
            if row[entering] > 0:
                ratio = row[-1] / row[entering]
                if best is None or ratio < best[0] or (ratio == best[0] and basis[i] < basis[best[1]]):
                    best = (ratio, i)
        if best is None:
            return "unbounded"
        _pivot(T, basis, best[1], entering)


def lp_feasible(constraints: Sequence[Constraint], k: int | None = None) -> tuple[Fraction, ...] | None:
    """Find a rational point satisfying every constraint, or return None.

    Unknowns are free.  Strict relations get a shared gap variable that is
    maximized (capped at 1); the system is feasible iff the optimal gap is
    positive.
    """
    constraints = list(constraints)
    if k is None:
        if not constraints:
            raise ValueError("cannot infer the number of unknowns")
        k = len(constraints[0].coeffs)
    if any(len(c.coeffs) != k for c in constraints):
        raise ValueError("constraint length mismatch")
    strict = any(c.op in (">", "<") for c in constraints)

    # columns: u (k), v (k), eps (1 if strict), slacks..., artificials...
    rows: list[list[Fraction]] = []
    rhs: list[Fraction] = []
    slack_cols: list[int | None] = []
    slack_sign: list[int] = []
    for c in constraints:
        a = list(c.coeffs) + [-x for x in c.coeffs]
        if strict:
            a.append(Fraction(-1) if c.op == ">" else Fraction(1) if c.op == "<" else Fraction(0))
        rows.append(a)
        rhs.append(c.rhs)
        if c.op in (">=", ">"):
            slack_sign.append(-1)
        elif c.op in ("<=", "<"):
            slack_sign.append(1)
        else:
            slack_sign.append(0)
    if strict:
        cap = [Fraction(0)] * (2 * k) + [Fraction(1)]
        rows.append(cap)
        rhs.append(Fraction(1))
        slack_sign.append(1)
    base = len(rows[0]) if rows else 2 * k + int(strict)
    nslack = sum(1 for s in slack_sign if s)
    nrows = len(rows)
    width = base + nslack + nrows
    T: list[list[Fraction]] = []
    s_idx = base
    for i in range(nrows):
        row = rows[i] + [Fraction(0)] * (nslack + nrows)
        if slack_sign[i]:
            row[s_idx] = Fraction(slack_sign[i])
            s_idx += 1
        b = rhs[i]
        if b < 0:
            row = [-v for v in row]
            b = -b
        row[base + nslack + i] = Fraction(1)
        T.append(row + [b])
    if not T:
        return tuple(Fraction(0) for _ in range(k))
    basis = [base + nslack + i for i in range(nrows)]
    art_start = base + nslack
    cost1 = [Fraction(0)] * art_start + [Fraction(-1)] * nrows
    _simplex_max(T, basis, cost1, [True] * width)
    if sum((T[i][-1] for i in range(nrows) if basis[i] >= art_start), Fraction(0)) != 0:
        return None
    # drive zero-valued artificials out of the basis; drop redundant rows
    keep = []
    for i in range(len(T)):
        if basis[i] >= art_start:
            col = next((j for j in range(art_start) if T[i][j] != 0), None)
            if col is None:
                continue
            _pivot(T, basis, i, col)
        keep.append(i)
    T = [T[i] for i in keep]
    basis = [basis[i] for i in keep]
    allowed = [j < art_start for j in range(width)]
    if strict:
        eps_col = 2 * k
        cost2 = [Fraction(0)] * width
        cost2[eps_col] = Fraction(1)
        _simplex_max(T, basis, cost2, allowed)
    values = [Fraction(0)] * width
    for i, j in enumerate(basis):
        values[j] = T[i][-1]
    if strict and values[2 * k] <= 0:
        return None
    x = tuple(values[i] - values[k + i] for i in range(k))
    return x


# ---------------------------------------------------------------- exact linear algebra

def _rref(rows: Sequence[Sequence[Fraction]]) -> tuple[list[list[Fraction]], list[int]]:
    M = [[Fraction(v) for v in r] for r in rows]
    pivots: list[int] = []
    if not M:
        return M, pivots
    ncols = len(M[0])
    r = 0
    for c in range(ncols):
        p = next((i for i in range(r, len(M)) if M[i][c] != 0), None)
        if p is None:
            continue
        M[r], M[p] = M[p], M[r]
        pv = M[r][c]
        M[r] = [v / pv for v in M[r]]
        for i in range(len(M)):
            if i != r and M[i][c]:
                f = M[i][c]
                M[i] = [a - f * b for a, b in zip(M[i], M[r])]
        pivots.append(c)
        r += 1
        if r == len(M):
            break
    return M[:r], pivots


def rank(rows: Sequence[Sequence]) -> int:
    return len(_rref(rows)[1])


def nullspace(rows: Sequence[Sequence], n: int) -> list[list[Fraction]]:
    """Basis of {c : row . c = 0 for every row}, integer-scaled."""
    R, piv = _rref(rows) if rows else ([], [])
    free = [j for j in range(n) if j not in piv]
    basis = []
    for f in free:
        v = [Fraction(0)] * n
        v[f] = Fraction(1)
        for i, p in enumerate(piv):
            v[p] = -R[i][f]
        basis.append(_integral(v))
    return basis


def _integral(v: Sequence[Fraction]) -> list[Fraction]:
    v = [Fraction(x) for x in v]
    den = reduce(lcm, (x.denominator for x in v), 1)
    ints = [int(x * den) for x in v]
    g = reduce(gcd, (abs(i) for i in ints), 0) or 1
    return [Fraction(i // g) for i in ints]


def _dot(a: Sequence, b: Sequence) -> Fraction:
    return sum((Fraction(x) * y for x, y in zip(a, b)), Fraction(0))


def affine_dim(points: Iterable[Sequence[int]]) -> int:
    pts = [tuple(p) for p in points]
    if not pts:
        return -1
    p0 = pts[0]
    return rank([[a - b for a, b in zip(p, p0)] for p in pts[1:]])


# ---------------------------------------------------------------- polytopes and faces

@dataclass(frozen=True)
class Face:
    points: tuple[Point, ...]
    normal: tuple[Fraction, ...]
    value: Fraction
    dim: int

    def contains_origin(self) -> bool:
        return any(not any(p) for p in self.points)

    def to_json(self) -> dict:
        return {
            "points": [list(p) for p in self.points],
            "normal": [_frac_str(x) for x in self.normal],
            "value": _frac_str(self.value),
            "dim": self.dim,
        }


def _frac_str(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


@dataclass
class LatticePolytope:
    generators: tuple[Point, ...]
    vertices: tuple[Point, ...]
    dim: int
    _faces: list[Face] | None = field(default=None, repr=False, compare=False)

    @property
    def n(self) -> int:
        return len(self.generators[0])

    def faces(self) -> list[Face]:
        if self._faces is None:
            self._faces = enumerate_faces(self)
        return self._faces


def _canon(points: Iterable[Sequence[int]]) -> tuple[Point, ...]:
    return tuple(sorted({tuple(int(a) for a in p) for p in points}))


def _in_hull_of(p: Point, others: Sequence[Point]) -> bool:
    if not others:
        return False
    k = len(others)
    cons = [Constraint([1] * k, "==", 1)]
    for coord in range(len(p)):
        cons.append(Constraint([q[coord] for q in others], "==", p[coord]))
    for i in range(k):
        e = [0] * k
        e[i] = 1
        cons.append(Constraint(e, ">=", 0))
    return lp_feasible(cons, k) is not None


def hull_vertices(points: Iterable[Sequence[int]]) -> LatticePolytope:
    gens = _canon(points)
    if not gens:
        raise ValueError("empty point set")
    verts = tuple(p for p in gens if not _in_hull_of(p, [q for q in gens if q != p]))
    return LatticePolytope(gens, verts, affine_dim(gens))


def minimizing_face(poly: LatticePolytope, P: Sequence) -> Face:
    P = tuple(Fraction(x) for x in P)
    if len(P) != poly.n:
        raise ValueError("covector length mismatch")
    vals = [_dot(P, g) for g in poly.generators]
    d = min(vals)
    pts = tuple(g for g, v in zip(poly.generators, vals) if v == d)
    return Face(pts, P, d, affine_dim(pts))


def _facets(poly: LatticePolytope, direction_basis: list[list[Fraction]]) -> list[tuple[frozenset, list[Fraction]]]:
    gens = poly.generators
    d = poly.dim
    found: dict[frozenset, list[Fraction]] = {}
    for subset in combinations(poly.vertices, d):
        q0 = subset[0]
        diffs = [[a - b for a, b in zip(q, q0)] for q in subset[1:]]
        if rank(diffs) != d - 1:
            continue
        # normal inside the direction space, orthogonal to the subset
        coeff_rows = [[_dot(b, df) for b in direction_basis] for df in diffs]
        lam = nullspace(coeff_rows, d)
        if len(lam) != 1:
            continue
        c = [sum((l * b[i] for l, b in zip(lam[0], direction_basis)), Fraction(0)) for i in range(poly.n)]
        vals = [_dot(c, g) for g in gens]
        h = _dot(c, q0)
        if all(v >= h for v in vals):
            pass
        elif all(v <= h for v in vals):
            c = [-x for x in c]
        else:
            continue
        c = _integral(c)
        h = _dot(c, q0)
        key = frozenset(i for i, g in enumerate(gens) if _dot(c, g) == h)
        found.setdefault(key, c)
    return sorted(found.items(), key=lambda kv: sorted(kv[0]))


def enumerate_faces(poly: LatticePolytope) -> list[Face]:
    """All nonempty faces, the whole polytope included, canonically sorted."""
    gens = poly.generators
    n = poly.n
    p0 = gens[0]
    diffs = [[a - b for a, b in zip(g, p0)] for g in gens[1:]]
    complement = nullspace(diffs, n) if diffs else nullspace([], n)
    top_normal = complement[0] if complement else [Fraction(0)] * n
    faces: dict[frozenset, list[Fraction]] = {frozenset(range(len(gens))): list(top_normal)}
    if poly.dim > 0:
        R, _ = _rref(diffs)
        facets = _facets(poly, R)
        # closure under intersection; normal = sum of the facet normals containing the face
        sets = {fs for fs, _ in facets}
        frontier = set(sets)
        while frontier:
            new = set()
            for a in frontier:
                for b in sets:
                    c = a & b
                    if c and c not in sets:
                        new.add(c)
            sets |= new
            frontier = new
        for s in sets:
            normal = [Fraction(0)] * n
            for fs, c in facets:
                if s <= fs:
                    normal = [x + y for x, y in zip(normal, c)]
            faces[s] = _integral(normal)
    out = []
    for s, normal in faces.items():
        pts = tuple(gens[i] for i in sorted(s))
        out.append(Face(pts, tuple(normal), _dot(normal, pts[0]), affine_dim(pts)))
    out.sort(key=lambda f: (f.dim, f.points))
    return out


def is_face_oracle(points: Iterable[Sequence[int]], candidate: Iterable[Sequence[int]]) -> bool:
    """Brute-force check: is ``candidate`` cut out by some supporting covector?

    Unknowns are the covector c and level h; c is constant (= h) on the
    candidate and strictly above h on every other point.
    """
    pts = _canon(points)
    cand = set(_canon(candidate))
    if not cand <= set(pts):
        raise ValueError("candidate is not a subset of the points")
    n = len(pts[0])
    cons = []
    for p in pts:
        row = list(p) + [-1]
        cons.append(Constraint(row, "==" if p in cand else ">", 0))
    return lp_feasible(cons, n + 1) is not None
