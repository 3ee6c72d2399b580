"""Multistart Newton sampling of rank-deficiency loci, plus run plumbing.

Random streams are derived from ``(seed, *keys)`` so that results never depend
on how work is scheduled across threads.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .polycore import CompiledMap, PolyMap, SparsePoly, _Compiled, partial

RANK_RTOL = 1e-8


def rng_for(seed: int, *keys: int) -> np.random.Generator:
    return np.random.default_rng([int(seed) & 0xFFFFFFFF, *[int(k) for k in keys]])


def thread_count() -> int:
    raw = os.environ.get("ATYPICAL_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return min(4, os.cpu_count() or 1)


def parallel_map(fn: Callable, items: Iterable) -> list:
    """Ordered map; thread count only affects speed, never results."""
    items = list(items)
    workers = min(thread_count(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def singular_values(J: np.ndarray) -> np.ndarray:
    if J.size == 0:
        raise ValueError("empty matrix")
    return np.linalg.svd(np.asarray(J, dtype=complex), compute_uv=False)


def is_rank_deficient(J: np.ndarray, rtol: float = RANK_RTOL) -> bool:
    s = singular_values(J)
    need = min(J.shape)
    return s[need - 1] < rtol * (s[0] + 1.0)


def random_torus_point(rng: np.random.Generator, n: int, lo: float = 1e-2, hi: float = 1e2) -> np.ndarray:
    """Random point with log-uniform moduli in [lo, hi] and uniform phases."""
    mod = np.exp(rng.uniform(np.log(lo), np.log(hi), n))
    phase = rng.uniform(0.0, 2 * np.pi, n)
    return mod * np.exp(1j * phase)


def cluster_points(points: Sequence[np.ndarray], tol: float) -> list[tuple[np.ndarray, list[int]]]:
    """Greedy clustering in canonical order; returns (center, member indices).

    The center is the first member, so every member lies within ``tol`` of it.
    """
    order = sorted(range(len(points)), key=lambda i: _point_key(points[i]))
    clusters: list[tuple[np.ndarray, list[int]]] = []
    for i in order:
        p = points[i]
        for center, members in clusters:
            if np.linalg.norm(p - center) <= tol:
                members.append(i)
                break
        else:
            clusters.append((p, [i]))
    return clusters


def _point_key(p: np.ndarray) -> tuple:
    return tuple(round(v, 9) for z in np.atleast_1d(p) for v in (z.real, z.imag))


@dataclass
class NewtonResult:
    x: np.ndarray
    residual: float
    converged: bool
    iterations: int


class RankDeficiencySystem:
    """Zeros of all m x m minors of J(G), optionally cut by affine slices."""

    def __init__(self, G: PolyMap):
        self.G = G
        self.m, self.n = G.m, G.n
        self.map = CompiledMap(G)
        self.minor_polys = G.minor_polys()
        self.trivial = all(p.is_zero() for p in self.minor_polys)
        self._minors = _Compiled(self.minor_polys, self.n)
        self._dminors = _Compiled([partial(p, i) for p in self.minor_polys for i in range(self.n)], self.n)

    def describe(self) -> dict:
        names = self.G.names
        return {
            "variables": list(names),
            "map": [c.to_string(names) for c in self.G.components],
            "minors": [p.to_string(names) for p in self.minor_polys],
        }

    def minors(self, z: np.ndarray) -> np.ndarray:
        return self._minors(z)

    def minor_residual(self, z: np.ndarray) -> float:
        vals = self._minors(z)
        return float(np.max(np.abs(vals))) if vals.size else 0.0

    def rank_deficient(self, z: np.ndarray) -> bool:
        """Scale-aware test: sigma_m < 1e-8 * (sigma_max + 1)."""
        return is_rank_deficient(self.map.jacobian(z))

    def solve(self, z0: np.ndarray, slices: tuple[np.ndarray, np.ndarray] | None = None,
              max_iter: int = 120, step_tol: float = 1e-15, blowup: float = 1e8) -> NewtonResult:
        """Gauss-Newton (minimum-norm steps) on minors = 0 and slices."""
        z = np.array(z0, dtype=complex)
        L, b = slices if slices is not None else (np.zeros((0, self.n), complex), np.zeros(0, complex))
        it = 0
        converged = False
        for it in range(1, max_iter + 1):
            g = np.concatenate([self._minors(z), L @ z - b])
            D = np.vstack([self._dminors(z).reshape(-1, self.n), L])
            if not np.all(np.isfinite(g)) or not np.all(np.isfinite(D)):
                break
            step, *_ = np.linalg.lstsq(D, -g, rcond=None)
            z = z + step
            if np.linalg.norm(z) > blowup or not np.all(np.isfinite(z)):
                break
            if np.linalg.norm(step) <= step_tol * (1.0 + np.linalg.norm(z)):
                break
        g = self._minors(z)
        res = float(np.max(np.abs(g))) if g.size else 0.0
        # a truncated least-squares step can stall away from the locus
        if np.isfinite(res) and np.all(np.isfinite(z)):
            scale = float(np.max(self._minors.magnitude(z))) if g.size else 0.0
            converged = res <= 1e-10 * (1.0 + scale)
        return NewtonResult(z, res if np.isfinite(res) else np.inf, converged, it)


@dataclass
class Sample:
    """One certified point of a rank-deficiency locus and its image."""

    x: np.ndarray
    image: np.ndarray
    residual: float
    trial: int


def sample_rank_locus(system: RankDeficiencySystem, budget: int, seed: int, keys: Sequence[int] = (),
                      torus: bool = False,
                      accept: Callable[[np.ndarray], bool] | None = None) -> list[Sample]:
    """Run ``budget`` seeded Newton trials; keep the certified ones.

    Trial ``t`` uses ``t mod n`` random affine slices through its own random
    start, which spreads samples over positive-dimensional loci.  Images are
    taken under the system's own map.
    """
    img = system.map
    n = system.n

    def trial(t: int):
        rng = rng_for(seed, *keys, t)
        p = random_torus_point(rng, n)
        k = t % n
        L = (rng.standard_normal((k, n)) + 1j * rng.standard_normal((k, n))) / np.sqrt(2)
        if system.trivial:
            x, res, ok = p, 0.0, True
        else:
            r = system.solve(p, (L, L @ p))
            x, res, ok = r.x, r.residual, r.converged
        if not ok:
            return None
        # a stalled least-squares iterate can leave the slices; require them exact
        if k and np.max(np.abs(L @ x - L @ p)) > 1e-9 * (1.0 + np.abs(L) @ np.abs(x)).max():
            return None
        if torus and (np.min(np.abs(x)) <= 1e-8 or np.max(np.abs(x)) >= 1e8):
            return None
        if accept is not None and not accept(x):
            return None
        return Sample(x, img.values(x), res, t)

    results = parallel_map(trial, range(budget))
    return [s for s in results if s is not None]


@dataclass
class ValueCloud:
    """Clustered sample of values in C^m with the system that produced them."""

    label: str
    points: list[np.ndarray] = field(default_factory=list)
    residuals: list[float] = field(default_factory=list)
    preimages: list[np.ndarray] = field(default_factory=list)
    system: list[dict] = field(default_factory=list)
    tolerance: float = 1e-6

    def __len__(self) -> int:
        return len(self.points)

    def merge(self, other: "ValueCloud") -> "ValueCloud":
        pts = self.points + other.points
        pre = self.preimages + other.preimages
        out = ValueCloud(self.label, system=self.system + other.system, tolerance=self.tolerance)
        out._fill(pts, pre)
        return out

    def _fill(self, images: list[np.ndarray], preimages: list[np.ndarray]) -> None:
        self.points, self.residuals, self.preimages = [], [], []
        for center, members in cluster_points(images, self.tolerance):
            self.points.append(center)
            self.residuals.append(max(float(np.linalg.norm(images[i] - center)) for i in members))
            self.preimages.append(preimages[members[0]])

    @classmethod
    def from_samples(cls, label: str, samples: list[Sample], systems: list[dict],
                     tolerance: float = 1e-6) -> "ValueCloud":
        cloud = cls(label, system=systems, tolerance=tolerance)
        cloud._fill([s.image for s in samples], [s.x for s in samples])
        return cloud
