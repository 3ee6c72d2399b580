"""Newton polyhedra at infinity, bad faces, non-degeneracy and the set Sigma(F).

Sigma(F) = K0(F) u Sigma_inf(F) u {t : t_i = F_i(0) for some i} is an
explicit outer bound for the bifurcation set of a non-degenerate map.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import permutations, product
from typing import Literal, Sequence

import numpy as np

from .asymptotic import k0_sample
from .latgeom import (
    Constraint,
    Face,
    LatticePolytope,
    _integral,
    hull_vertices,
    lp_feasible,
    minimizing_face,
    rank,
)
from .numsolve import RankDeficiencySystem, ValueCloud, sample_rank_locus
from .polycore import PolyMap, QQi, SparsePoly, face_restriction, partial

__all__ = [
    "NewtonData",
    "BadFace",
    "FaceTuple",
    "DegeneracyVerdict",
    "SigmaResult",
    "analyze",
    "is_convenient",
    "bad_faces",
    "face_tuples_at_infinity",
    "check_nondegenerate",
    "weighted_euler_check",
    "sigma_infinity",
    "sigma",
    "ValueCloud",
]

Reading = Literal["exists", "forall"]
DEGENERATE = "DEGENERATE"
PRESUMED_NONDEGENERATE = "PRESUMED_NONDEGENERATE"


@dataclass
class BadFace:
    face: Face
    witness: tuple[Fraction, ...]

    @property
    def points(self):
        return self.face.points

    @property
    def dim(self) -> int:
        return self.face.dim

    def to_json(self) -> dict:
        d = self.face.to_json()
        d["witness"] = [f"{x.numerator}/{x.denominator}" for x in self.witness]
        return d


@dataclass
class NewtonData:
    poly: SparsePoly
    gamma_minus: LatticePolytope
    supp_hull: LatticePolytope
    faces_at_infinity: list[Face]
    bad_faces: list[BadFace]
    convenient: bool


def _origin(n: int) -> tuple[int, ...]:
    return (0,) * n


def gamma_minus(f: SparsePoly) -> LatticePolytope:
    return hull_vertices([_origin(f.nvars), *f.support()])


def is_convenient(f: SparsePoly) -> bool:
    """Does the support meet every coordinate axis (away from the origin)?"""
    supp = f.support()
    for i in range(f.nvars):
        if not any(a[i] > 0 and all(a[j] == 0 for j in range(f.nvars) if j != i) for a in supp):
            return False
    return True


def analyze(f: SparsePoly) -> NewtonData:
    if f.is_zero():
        raise ValueError("the zero polynomial has no Newton polyhedron")
    gm = gamma_minus(f)
    at_inf = [face for face in gm.faces() if not face.contains_origin()]
    hull = hull_vertices(f.support())
    return NewtonData(f, gm, hull, at_inf, bad_faces(f, hull), is_convenient(f))


def _origin_in_span(points: Sequence[tuple[int, ...]], dim: int) -> bool:
    # 0 lies in the affine span iff linear and affine spans have equal dimension
    return rank([list(p) for p in points]) == dim


def _mixed_sign_separator(face_pts, others, n: int) -> tuple[Fraction, ...] | None:
    for i, j in permutations(range(n), 2):
        cons = [Constraint(list(b), "==", 0) for b in face_pts]
        cons += [Constraint(list(b), ">", 0) for b in others]
        ei = [0] * n
        ei[i] = 1
        ej = [0] * n
        ej[j] = 1
        cons += [Constraint(ei, ">=", 1), Constraint(ej, "<=", -1)]
        w = lp_feasible(cons, n)
        if w is not None:
            return tuple(_integral(w))
    return None


def bad_faces(f: SparsePoly, hull: LatticePolytope | None = None) -> list[BadFace]:
    """Faces of conv(supp f) whose affine span contains 0 and that are cut out
    by a hyperplane through 0 with a mixed-sign normal.

    The singleton face {0} is skipped: its face polynomial is the constant
    f(0), already accounted for by the hyperplane t = f(0).
    """
    if f.is_zero():
        return []
    hull = hull or hull_vertices(f.support())
    n = f.nvars
    out = []
    for face in hull.faces():
        if face.points == (_origin(n),):
            continue
        if not _origin_in_span(face.points, face.dim):
            continue
        pts = set(face.points)
        others = [g for g in hull.generators if g not in pts]
        w = _mixed_sign_separator(face.points, others, n)
        if w is not None:
            out.append(BadFace(face, w))
    return out


@dataclass
class FaceTuple:
    faces: tuple[Face, ...]
    witness: tuple[Fraction, ...] | None = None

    def face_map(self, F: PolyMap) -> PolyMap:
        comps = [face_restriction(f, face.points) for f, face in zip(F.components, self.faces)]
        return PolyMap(comps, F.names, check_dims=False)

    def to_json(self) -> dict:
        return {
            "faces": [face.to_json() for face in self.faces],
            "witness": None if self.witness is None
            else [f"{x.numerator}/{x.denominator}" for x in self.witness],
        }


def _joint_covector(polys: Sequence[LatticePolytope], faces: Sequence[Face], n: int):
    m = len(faces)
    cons = []
    for i, (poly, face) in enumerate(zip(polys, faces)):
        pts = set(face.points)
        for g in poly.generators:
            row = list(g) + [0] * m
            row[n + i] = -1
            cons.append(Constraint(row, "==" if g in pts else ">", 0))
    sol = lp_feasible(cons, n + m)
    if sol is None:
        return None
    return tuple(_integral(sol)[:n]) if any(sol[:n]) else tuple(sol[:n])


def face_tuples_at_infinity(F: PolyMap, reading: Reading = "exists") -> list[FaceTuple]:
    """Tuples (D_1, ..., D_m) minimized by one common covector, at infinity.

    ``reading="exists"``: at least one D_i omits the origin;
    ``reading="forall"``: every D_i omits it.
    """
    if reading not in ("exists", "forall"):
        raise ValueError(f"unknown reading {reading!r}")
    polys = [gamma_minus(f) for f in F.components]
    out = []
    for combo in product(*(p.faces() for p in polys)):
        miss = [not face.contains_origin() for face in combo]
        if not (any(miss) if reading == "exists" else all(miss)):
            continue
        P = _joint_covector(polys, combo, F.n)
        if P is None:
            continue
        faces = tuple(minimizing_face(p, P) for p in polys)
        out.append(FaceTuple(faces, P))
    return out


@dataclass
class DegeneracyVerdict:
    status: str
    tuple: FaceTuple
    budget_used: int
    certificate: np.ndarray | None = None
    residual: float | None = None

    @property
    def degenerate(self) -> bool:
        return self.status == DEGENERATE


def check_nondegenerate(F: PolyMap, budget: int = 32, seed: int = 0,
                        reading: Reading = "exists") -> list[DegeneracyVerdict]:
    """One verdict per tuple at infinity.

    Degeneracy is certified by a torus point where every m x m minor of the
    face Jacobian is below 1e-10; otherwise non-degeneracy is only presumed.
    """
    if budget < 1:
        raise ValueError("budget must be at least 1")
    verdicts = []
    for idx, tup in enumerate(face_tuples_at_infinity(F, reading)):
        system = RankDeficiencySystem(tup.face_map(F))
        samples = sample_rank_locus(system, budget, seed, keys=(1, idx), torus=True,
                                    accept=lambda x, s=system: s.minor_residual(x) < 1e-10)
        if samples:
            first = min(samples, key=lambda s: s.trial)
            verdicts.append(DegeneracyVerdict(DEGENERATE, tup, first.trial + 1, first.x,
                                              system.minor_residual(first.x)))
        else:
            verdicts.append(DegeneracyVerdict(PRESUMED_NONDEGENERATE, tup, budget))
    return verdicts


def weighted_euler_check(f: SparsePoly, face: Face) -> bool:
    """Exact check of sum_i p_i x_i d(f_face)/dx_i == value * f_face."""
    fd = face_restriction(f, face.points)
    n = f.nvars
    lhs = SparsePoly(n)
    for i, p in enumerate(face.normal):
        if p:
            lhs = lhs + partial(fd, i) * SparsePoly.variable(n, i) * QQi(Fraction(p))
    return lhs == fd * QQi(Fraction(face.value))


def sigma_infinity(F: PolyMap, budget: int = 32, seed: int = 0, tol: float = 1e-6) -> ValueCloud:
    """Values of face maps over bad-face tuples at rank-deficient torus points."""
    per_component = [bad_faces(f) for f in F.components]
    samples, systems = [], []
    for idx, combo in enumerate(product(*per_component)):
        tup = FaceTuple(tuple(b.face for b in combo))
        system = RankDeficiencySystem(tup.face_map(F))
        found = sample_rank_locus(system, budget, seed, keys=(2, idx), torus=True,
                                  accept=system.rank_deficient)
        desc = system.describe()
        desc["faces"] = [b.face.to_json() for b in combo]
        systems.append(desc)
        samples.extend(found)
    return ValueCloud.from_samples("Sigma_inf", samples, systems, tolerance=tol)


@dataclass
class SigmaResult:
    k0: ValueCloud
    sigma_inf: ValueCloud
    hyperplanes: list[tuple[int, complex]] = field(default_factory=list)

    def contains(self, t: Sequence[complex], tol: float = 1e-6) -> bool:
        """Membership test against the sampled clouds and the exact hyperplanes."""
        t = np.asarray(t, dtype=complex)
        if any(abs(t[i] - c) <= tol for i, c in self.hyperplanes):
            return True
        clouds = self.k0.points + self.sigma_inf.points
        return any(np.linalg.norm(t - p) <= tol for p in clouds)


def sigma(F: PolyMap, budget: int = 64, seed: int = 0, tol: float = 1e-6) -> SigmaResult:
    k0 = k0_sample(F, budget, seed, tol)
    sinf = sigma_infinity(F, budget, seed, tol)
    planes = [(i, complex(f.coeff(_origin(F.n)))) for i, f in enumerate(F.components)]
    return SigmaResult(k0, sinf, planes)
