"""Fiber transport by integrating horizontal lifts of paths in the target.

The lift of a target velocity w at x is the minimum-norm v with
dF(x) v = w and <v, x> = 0.  The second condition keeps ||x|| constant, so
transported points cannot escape to infinity.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .numsolve import RANK_RTOL, random_torus_point, rng_for, singular_values
from .polycore import CompiledMap, PolyMap

__all__ = [
    "RankDeficientError",
    "lift_vector",
    "TransportTask",
    "TransportTrace",
    "transport",
    "find_fiber_point",
]

OK = "OK"
RANK_DEFICIENT = "RANK_DEFICIENT"
STEP_UNDERFLOW = "STEP_UNDERFLOW"


class RankDeficientError(ArithmeticError):
    """[J(F)(x); conj(x)] has numerical rank <= m, so no horizontal lift exists."""

    def __init__(self, x: np.ndarray, sigma: float):
        super().__init__(f"stacked matrix is rank deficient (sigma_min={sigma:.3e})")
        self.x = x
        self.sigma = sigma


def _cm(F) -> CompiledMap:
    return F if isinstance(F, CompiledMap) else CompiledMap(F)


def _stacked(cm: CompiledMap, x: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(x)
    row = np.conj(x) / norm if norm > 0 else np.zeros_like(x)
    return np.vstack([cm.jacobian(x), row[None, :]])


def lift_vector(F, x: Sequence[complex], w: Sequence[complex], rtol: float = RANK_RTOL) -> np.ndarray:
    x = np.asarray(x, dtype=complex)
    w = np.atleast_1d(np.asarray(w, dtype=complex))
    cm = _cm(F)
    A = _stacked(cm, x)
    s = singular_values(A)
    if len(s) <= cm.m or s[cm.m] < rtol * (s[0] + 1.0):
        raise RankDeficientError(x, float(s[-1]) if len(s) > cm.m else 0.0)
    rhs = np.concatenate([w, [0.0]])
    v, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    return v


def find_fiber_point(F, t: Sequence[complex], seed: int = 0, budget: int = 32,
                     tol: float = 1e-12) -> np.ndarray | None:
    """Some x with F(x) = t, by seeded multistart Gauss-Newton."""
    cm = _cm(F)
    t = np.asarray(t, dtype=complex)
    for trial in range(budget):
        x = random_torus_point(rng_for(seed, 3, trial), cm.n, 0.5, 2.0)
        for _ in range(100):
            r = cm.values(x) - t
            if np.linalg.norm(r) <= tol * (1.0 + np.linalg.norm(t)):
                return x
            step, *_ = np.linalg.lstsq(cm.jacobian(x), -r, rcond=None)
            x = x + step
            if not np.all(np.isfinite(x)) or np.linalg.norm(x) > 1e8:
                break
    return None


@dataclass
class TransportTask:
    map: PolyMap
    start: Sequence[complex]
    path: Sequence[Sequence[complex]]
    step: float = 0.05
    tol: float = 1e-8

    def __post_init__(self):
        self.start = np.asarray(self.start, dtype=complex)
        self.path = [np.atleast_1d(np.asarray(p, dtype=complex)) for p in self.path]
        if len(self.path) < 1:
            raise ValueError("path needs at least one waypoint")
        cm = CompiledMap(self.map)
        gap = np.linalg.norm(cm.values(self.start) - self.path[0])
        if gap > self.tol * (1.0 + np.linalg.norm(self.path[0])):
            raise ValueError(f"start is not on the fiber over path[0] (gap {gap:.3e})")


@dataclass
class TransportTrace:
    status: str
    samples: list[tuple[float, np.ndarray]] = field(default_factory=list)
    at: float | None = None
    norm_drift: float = 0.0
    fiber_residual_max: float = 0.0

    @property
    def endpoint(self) -> np.ndarray:
        return self.samples[-1][1]


# Dormand-Prince 5(4)
_C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1, 1])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
_B4 = np.array([5179 / 57600, 0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])


def _dp_step(f, x, h):
    k = []
    for i in range(7):
        xi = x + h * sum((a * kj for a, kj in zip(_A[i], k)), np.zeros_like(x))
        k.append(f(xi))
    K = np.array(k)
    x5 = x + h * (_B5 @ K)
    err = h * ((_B5 - _B4) @ K)
    return x5, err


def transport(task: TransportTask, min_step: float = 1e-12) -> TransportTrace:
    """Carry ``task.start`` along the target path, one segment at a time.

    Each accepted Runge-Kutta step is followed by one Newton correction of
    F(x) = path(s) inside the hyperplane orthogonal to x.
    """
    cm = CompiledMap(task.map)
    x = task.start.copy()
    r0 = np.linalg.norm(x)
    waypoints = task.path
    nseg = max(len(waypoints) - 1, 1)
    trace = TransportTrace(OK, [(0.0, x.copy())])
    if len(waypoints) == 1:
        return trace
    tol = task.tol
    for seg in range(nseg):
        a, b = waypoints[seg], waypoints[seg + 1]
        vel = (b - a) * nseg
        s0 = seg / nseg
        length = 1.0 / nseg
        if not np.any(vel):
            trace.samples.append((s0 + length, x.copy()))
            continue
        tau = 0.0
        h = min(task.step, length)

        def rhs(y):
            return lift_vector(cm, y, vel)

        while tau < length - 1e-15:
            h = min(h, length - tau)
            if h < min_step:
                trace.status, trace.at = STEP_UNDERFLOW, s0 + tau
                return trace
            try:
                x_new, err = _dp_step(rhs, x, h)
            except RankDeficientError:
                if tau == 0.0 and h == min(task.step, length):
                    try:
                        lift_vector(cm, x, vel)
                    except RankDeficientError:
                        trace.status, trace.at = RANK_DEFICIENT, s0 + tau
                        return trace
                h *= 0.5
                continue
            scale = tol * (1.0 + np.linalg.norm(x))
            ratio = np.linalg.norm(err) / scale
            if not np.isfinite(ratio) or ratio > 1.0:
                h *= max(0.2, 0.9 * ratio ** -0.2) if np.isfinite(ratio) else 0.25
                continue
            target = a + (tau + h) / length * (b - a)
            A = _stacked(cm, x_new)
            resid = target - cm.values(x_new)
            corr, *_ = np.linalg.lstsq(A, np.concatenate([resid, [0.0]]), rcond=None)
            x_new = x_new + corr
            fiber = float(np.linalg.norm(cm.values(x_new) - target))
            if fiber > tol * (1.0 + np.linalg.norm(target)):
                h *= 0.5
                continue
            tau += h
            x = x_new
            trace.samples.append((s0 + tau, x.copy()))
            trace.fiber_residual_max = max(trace.fiber_residual_max, fiber)
            trace.norm_drift = max(trace.norm_drift, abs(np.linalg.norm(x) - r0))
            h *= min(5.0, max(0.2, 0.9 * ratio ** -0.2)) if ratio > 0 else 5.0
    return trace
