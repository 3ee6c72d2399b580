"""Numeric probes for critical values, M-tameness and asymptotic critical values.

The probes give evidence, not proofs: at a growing sequence of radii R we
minimize a rank-deficiency measure over the sphere ||x|| = R and look for
tracks whose measure decays while F(x) settles down.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize

from .numsolve import (
    RankDeficiencySystem,
    ValueCloud,
    cluster_points,
    parallel_map,
    rng_for,
    sample_rank_locus,
    singular_values,
)
from .polycore import CompiledMap, PolyMap

__all__ = [
    "nu",
    "gaffney",
    "mtame_deficiency",
    "k0_sample",
    "ProbeSchedule",
    "ProbeRecord",
    "ProbeCandidate",
    "ProbeReport",
    "SeedCurve",
    "kinf_probe",
    "mtame_probe",
]


def nu(J) -> float:
    """Rabier function: the m-th (smallest) singular value of the m x n matrix J.

    The infimum of ||sum_i w_i grad F_i|| over unit w is the smallest singular
    value of the adjoint, which J shares.
    """
    J = np.atleast_2d(np.asarray(J, dtype=complex))
    if J.size == 0:
        raise ValueError("empty matrix")
    m, n = J.shape
    if m > n:
        raise ValueError("nu needs m <= n")
    return float(singular_values(J)[m - 1])


def gaffney(J) -> float:
    """Gaffney number: RSS of the m x m minors over RSS of the (m-1) x (m-1) minors.

    For m = 1 the denominator is 1, so g = ||J||.  Returns 0 when the
    denominator vanishes.
    """
    J = np.atleast_2d(np.asarray(J, dtype=complex))
    m, n = J.shape
    if m > n:
        raise ValueError("gaffney needs m <= n")
    num = sum(abs(np.linalg.det(J[:, list(I)])) ** 2 for I in combinations(range(n), m))
    if m == 1:
        den = 1.0
    else:
        den = 0.0
        for j in range(m):
            rows = [r for r in range(m) if r != j]
            for cols in combinations(range(n), m - 1):
                den += abs(np.linalg.det(J[np.ix_(rows, list(cols))])) ** 2
    if den == 0.0:
        return 0.0
    return float(np.sqrt(num / den))


def _augmented(J: np.ndarray, p: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(p)
    if norm == 0.0:
        return J
    return np.vstack([J, np.conj(p)[None, :] / norm])


def mtame_deficiency(F: PolyMap | CompiledMap, p: Sequence[complex]) -> float:
    """(m+1)-th singular value of J(F)(p) stacked over conj(p)/||p||.

    Near zero exactly when the stacked matrix has rank <= m.  At p = 0 the
    extra row is dropped and nu is returned.
    """
    cm = F if isinstance(F, CompiledMap) else CompiledMap(F)
    p = np.asarray(p, dtype=complex)
    J = cm.jacobian(p)
    if np.linalg.norm(p) == 0.0:
        return nu(J)
    s = singular_values(_augmented(J, p))
    return float(s[cm.m]) if len(s) > cm.m else 0.0


def k0_sample(F: PolyMap, budget: int = 64, seed: int = 0, tol: float = 1e-6) -> ValueCloud:
    """Sample of critical values: multistart Newton on all m x m minors of J(F)."""
    system = RankDeficiencySystem(F)
    samples = sample_rank_locus(system, budget, seed, keys=(0,), accept=system.rank_deficient)
    return ValueCloud.from_samples("K0", samples, [system.describe()], tolerance=tol)


# ---------------------------------------------------------------- probes

@dataclass
class ProbeSchedule:
    radii: tuple[float, ...] = tuple(10.0 ** (k / 2) for k in range(13))
    restarts: int = 8
    tolerance: float = 1e-3
    seed: int = 0
    decay_factor: float = 2.0
    decay_window: int = 4
    zero_floor: float = 1e-7
    penalty: float = 1e3
    target_weight: float = 1.0
    max_iter: int = 400

    def __post_init__(self):
        self.radii = tuple(float(r) for r in self.radii)
        if not self.radii or any(r <= 0 for r in self.radii):
            raise ValueError("radii must be positive")
        if any(b <= a for a, b in zip(self.radii, self.radii[1:])):
            raise ValueError("radii must be strictly increasing")
        if self.restarts < 1:
            raise ValueError("need at least one restart")


@dataclass
class SeedCurve:
    """Monomial curve R -> (c_i * R**e_i), used to seed probe tracks."""

    coefficients: tuple[complex, ...]
    exponents: tuple[float, ...]

    def __call__(self, R: float) -> np.ndarray:
        c = np.asarray(self.coefficients, dtype=complex)
        e = np.asarray(self.exponents, dtype=float)
        return c * R ** e

    @classmethod
    def parse(cls, text: str) -> "SeedCurve":
        """``"1:1, 1:-1, 0:0"`` means x = R, y = 1/R, z = 0."""
        coeffs, exps = [], []
        for part in text.split(","):
            c, _, e = part.strip().partition(":")
            coeffs.append(complex(c.strip().replace("i", "j")))
            exps.append(float(e) if e.strip() else 0.0)
        return cls(tuple(coeffs), tuple(exps))


@dataclass
class ProbeRecord:
    radius: float
    track: int
    minimizer: np.ndarray
    objective: float
    image: np.ndarray
    gaffney_objective: float | None = None
    converged: bool = True

    @property
    def on_sphere(self) -> bool:
        return abs(np.linalg.norm(self.minimizer) - self.radius) <= 0.01 * self.radius


@dataclass
class ProbeCandidate:
    t: np.ndarray
    tracks: list[int]
    objectives: list[list[float]]


@dataclass
class ProbeReport:
    kind: str
    records: list[ProbeRecord] = field(default_factory=list)
    candidates: list[ProbeCandidate] = field(default_factory=list)


class _Objective:
    """Real-ified objective in u with x = R * u / |u|, with gradient.

    The normalization keeps every iterate exactly on the sphere; the penalty
    on |u| - 1 only fixes the scale of u.
    """

    def __init__(self, cm: CompiledMap, kind: str, R: float, schedule: ProbeSchedule,
                 target: np.ndarray | None):
        self.cm, self.kind, self.R, self.s = cm, kind, R, schedule
        self.target = target
        self.n, self.m = cm.n, cm.m

    def unpack(self, u: np.ndarray) -> np.ndarray:
        return self.R * (u[: self.n] + 1j * u[self.n:]) / np.linalg.norm(u)

    def _split(self, c: np.ndarray) -> np.ndarray:
        # d/da_k = Re(c_k), d/db_k = -Im(c_k) for a holomorphic-linear form c . dx
        return np.concatenate([c.real, -c.imag])

    def __call__(self, u: np.ndarray):
        x = self.unpack(u)
        norm_u = np.linalg.norm(u)
        if norm_u == 0.0:
            return 1e300, np.zeros_like(u)
        J = self.cm.jacobian(x)
        D = self.cm.jacobian_derivatives(x)
        value = 0.0
        grad_x = np.zeros(2 * self.n)
        if self.kind == "kinf":
            U, S, Vh = np.linalg.svd(J)
            sig = S[self.m - 1]
            ul, vr = U[:, self.m - 1], np.conj(Vh[self.m - 1])
            c = np.einsum("i,kij,j->k", np.conj(ul), D, vr)
            dsig = self._split(c)
            xn = np.linalg.norm(x)
            dxn = np.concatenate([x.real, x.imag]) / xn
            h = xn * sig
            dh = xn * dsig + sig * dxn
            value += h * h
            grad_x += 2 * h * dh
            if self.target is not None:
                r = self.cm.values(x) - self.target
                w = self.s.target_weight
                value += w * float(np.vdot(r, r).real)
                grad_x += w * 2 * self._split(np.conj(r) @ J)
        else:
            xn = np.linalg.norm(x)
            A = np.vstack([J, np.conj(x)[None, :] / xn])
            U, S, Vh = np.linalg.svd(A)
            sig = S[self.m] if len(S) > self.m else 0.0
            ul, vr = U[:, self.m], np.conj(Vh[self.m])
            # rows of A: J(x) holomorphic in x, last row conj(x)/|x| anti-holomorphic
            c = np.einsum("i,kij,j->k", np.conj(ul[: self.m]), D, vr)
            g = self._split(c)
            # last row: s += Re(conj(ul_m) * sum_k conj(x_k) v_k) / |x|
            lam = np.conj(ul[self.m])
            q = lam * vr / xn  # coefficient of conj(x_k)
            # d Re(q . conj(x)) / da = Re(q), / db = Im(q)
            g += np.concatenate([q.real, q.imag])
            inner = float(np.real(lam * np.dot(np.conj(x), vr))) / xn
            g -= inner * np.concatenate([x.real, x.imag]) / xn ** 2
            pen = 1.0
            dpen = np.zeros(2 * self.n)
            if self.target is not None:
                r = self.cm.values(x) - self.target
                pen = 1.0 + float(np.vdot(r, r).real)
                dpen = 2 * self._split(np.conj(r) @ J)
            h = sig * pen
            value += h * h
            grad_x += 2 * h * (g * pen + sig * dpen)
        uh = u / norm_u
        grad_u = self.R * (grad_x - np.dot(uh, grad_x) * uh) / norm_u
        dev = norm_u - 1.0
        value += self.s.penalty * dev * dev
        grad_u = grad_u + self.s.penalty * 2 * dev * u / norm_u
        return value, grad_u


def _start_point(kind_rng: np.random.Generator, n: int, R: float) -> np.ndarray:
    z = kind_rng.standard_normal(n) + 1j * kind_rng.standard_normal(n)
    return R * z / np.linalg.norm(z)


def _project_to_fiber(cm: CompiledMap, x: np.ndarray, target: np.ndarray, R: float,
                      iters: int = 30) -> np.ndarray:
    """Gauss-Newton towards F(x) = target with steps tangent to the sphere |x| = R.

    Returns the input unchanged when the iteration does not reduce the residual.
    """
    best, best_res = x, float(np.linalg.norm(cm.values(x) - target))
    y = x
    for _ in range(iters):
        r = target - cm.values(y)
        A = np.vstack([cm.jacobian(y), np.conj(y)[None, :] / np.linalg.norm(y)])
        step, *_ = np.linalg.lstsq(A, np.concatenate([r, [0.0]]), rcond=None)
        y = y + step
        y = R * y / np.linalg.norm(y)
        if not np.all(np.isfinite(y)):
            break
        res = float(np.linalg.norm(cm.values(y) - target))
        if res < best_res:
            best, best_res = y, res
        if res <= 1e-12 * (1.0 + np.linalg.norm(target)):
            break
    return best


def _extrapolate(prev: list[ProbeRecord], R: float) -> np.ndarray:
    """Power-law continuation of a track: |x_i| ~ R**a_i, phases kept."""
    last = prev[-1]
    if len(prev) < 2:
        return last.minimizer * (R / last.radius)
    a, b = prev[-2], prev[-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.abs(b.minimizer) / np.abs(a.minimizer)
        expo = np.log(ratio) / np.log(b.radius / a.radius)
    expo = np.where(np.isfinite(expo), np.clip(expo, -3.0, 3.0), 1.0)
    x = b.minimizer * (R / b.radius) ** expo
    norm = np.linalg.norm(x)
    return x if norm > 0 else b.minimizer * (R / b.radius)


def _probe(F: PolyMap, kind: str, schedule: ProbeSchedule, target, seed_curves) -> ProbeReport:
    cm = CompiledMap(F)
    n = F.n
    tgt = None if target is None else np.asarray(target, dtype=complex)
    curves = list(seed_curves or [])
    ntracks = schedule.restarts + len(curves)
    tracks: list[list[ProbeRecord]] = [[] for _ in range(ntracks)]
    report = ProbeReport(kind)
    for ri, R in enumerate(schedule.radii):
        def run(j: int) -> ProbeRecord:
            rng = rng_for(schedule.seed, ri, j)
            if j < len(curves):
                x0 = curves[j](R)
                if np.linalg.norm(x0) == 0.0:
                    x0 = _start_point(rng, n, R)
            elif tracks[j]:
                x0 = _extrapolate(tracks[j], R)
            else:
                x0 = _start_point(rng, n, R)
            if tgt is not None:
                with np.errstate(all="ignore"):
                    x0 = _project_to_fiber(cm, x0, tgt, R)
            obj = _Objective(cm, kind, R, schedule, tgt)
            u0 = np.concatenate([x0.real, x0.imag]) / R
            try:
                res = minimize(obj, u0, jac=True, method="BFGS",
                               options={"maxiter": schedule.max_iter, "gtol": 1e-14})
                u, ok = res.x, bool(res.success)
                if not np.all(np.isfinite(u)) or obj(u)[0] > obj(u0)[0]:
                    u, ok = u0, False
            except (np.linalg.LinAlgError, ValueError, FloatingPointError):
                u, ok = u0, False
            x = obj.unpack(u)
            J = cm.jacobian(x)
            xn = float(np.linalg.norm(x))
            if kind == "kinf":
                value = xn * nu(J)
                g_obj = xn * gaffney(J)
            else:
                value = mtame_deficiency(cm, x)
                g_obj = None
            return ProbeRecord(R, j, x, float(value), cm.values(x), g_obj, ok)

        with np.errstate(all="ignore"):
            recs = parallel_map(run, range(ntracks))
        for rec in recs:
            tracks[rec.track].append(rec)
            report.records.append(rec)
    report.candidates = _candidates(tracks, schedule, tgt)
    return report


def _decays(objs: Sequence[float], factor: float, floor: float) -> bool:
    return all(b <= floor or (a > 0 and b <= a / factor) for a, b in zip(objs, objs[1:]))


def _candidates(tracks, schedule: ProbeSchedule, target) -> list[ProbeCandidate]:
    w = schedule.decay_window
    tol = schedule.tolerance
    hits: list[tuple[np.ndarray, int, list[float]]] = []
    for j, recs in enumerate(tracks):
        tail = recs[-w:]
        if len(tail) < w or not all(r.on_sphere for r in tail):
            continue
        objs = [r.objective for r in tail]
        if not _decays(objs, schedule.decay_factor, schedule.zero_floor):
            continue
        imgs = [r.image for r in tail]
        if not all(np.all(np.isfinite(i)) for i in imgs):
            continue
        spread = max(np.linalg.norm(a - b) for a in imgs for b in imgs)
        if spread > tol:
            continue
        t = imgs[-1]
        if target is not None and np.linalg.norm(t - target) > tol:
            continue
        hits.append((t, j, objs, spread))
    out = []
    for _, members in cluster_points([h[0] for h in hits], tol):
        # report the steadiest track's value, ties broken by final objective
        best = min(members, key=lambda i: (hits[i][3], hits[i][2][-1], hits[i][1]))
        out.append(ProbeCandidate(hits[best][0], sorted(hits[i][1] for i in members),
                                  [hits[i][2] for i in sorted(members, key=lambda i: hits[i][1])]))
    return out


def kinf_probe(F: PolyMap, schedule: ProbeSchedule | None = None, target=None,
               seed_curves: Sequence[Callable[[float], np.ndarray]] | None = None) -> ProbeReport:
    """Search for asymptotic critical values via ||x|| * nu(dF(x)) on spheres.

    Records also carry ||x|| * g(dF(x)) (Gaffney number) as a cross-check.
    """
    return _probe(F, "kinf", schedule or ProbeSchedule(), target, seed_curves)


def mtame_probe(F: PolyMap, schedule: ProbeSchedule | None = None, target=None,
                seed_curves: Sequence[Callable[[float], np.ndarray]] | None = None) -> ProbeReport:
    """Search for values where F fails to be M-tame (augmented-rank test)."""
    return _probe(F, "mtame", schedule or ProbeSchedule(), target, seed_curves)
