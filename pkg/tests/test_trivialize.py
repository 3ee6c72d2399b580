import numpy as np
import pytest

from atypical.polycore import CompiledMap, parse_map
from atypical.trivialize import (
    OK,
    RANK_DEFICIENT,
    RankDeficientError,
    TransportTask,
    find_fiber_point,
    lift_vector,
    transport,
)

from conftest import fiber_start_qfib

X12 = parse_map(["x1"], ["x1", "x2"])


def test_lift_vector_examples():
    assert np.allclose(lift_vector(X12, [0, 1], [1]), [1, 0])
    with pytest.raises(RankDeficientError):
        lift_vector(X12, [1, 0], [1])
    assert np.allclose(lift_vector(X12, [0.3, 2], [0]), 0)


def test_lift_vector_constraints_and_minimality():
    F = parse_map(["x*y + z*w", "x^2 - y*w + z"], ["x", "y", "z", "w"])
    rng = np.random.default_rng(8)
    cm = CompiledMap(F)
    checked = 0
    for _ in range(100):
        x = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        w = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        try:
            v = lift_vector(cm, x, w)
        except RankDeficientError:
            continue
        checked += 1
        J = cm.jacobian(x)
        assert np.linalg.norm(J @ v - w) < 1e-10 * (1 + np.linalg.norm(w)) * max(1, np.linalg.norm(J))
        assert abs(np.vdot(x, v)) < 1e-10 * (1 + np.linalg.norm(w)) * np.linalg.norm(x)
        # any other feasible u = v + k with k in the kernel of [J; conj(x)] is no shorter
        A = np.vstack([J, np.conj(x)[None, :]])
        _, _, Vh = np.linalg.svd(A)
        k = np.conj(Vh[-1]) * complex(*rng.standard_normal(2))
        u = v + k
        assert np.linalg.norm(A @ u - np.concatenate([w, [0]])) < 1e-8 * (1 + np.linalg.norm(w)) * max(1, np.linalg.norm(A))
        assert np.linalg.norm(v) <= np.linalg.norm(u) + 1e-9
    assert checked > 90


def test_transport_closed_form():
    tr = transport(TransportTask(X12, [0, 5], [[0], [0.3]]))
    assert tr.status == OK
    assert np.linalg.norm(tr.endpoint - [0.3, np.sqrt(24.91)]) < 1e-6
    assert tr.norm_drift <= 1e-6
    for s, x in tr.samples:
        assert abs(np.linalg.norm(x) - 5) <= 1e-6 * 6
        assert abs(x[0] - 0.3 * s) <= 1e-8


def test_transport_constant_path():
    tr = transport(TransportTask(X12, [0, 5], [[0], [0]]))
    assert tr.status == OK and np.allclose(tr.endpoint, [0, 5])
    tr = transport(TransportTask(X12, [0.2, 1j], [[0.2]]))
    assert tr.status == OK and np.allclose(tr.endpoint, [0.2, 1j])


def test_transport_loop_quadratic_fiber(qfib_map):
    x0 = fiber_start_qfib(5, 5)
    th = np.linspace(0, 2 * np.pi, 17)
    path = [[5 + 0.5 * (np.cos(t) - 1) + 0.5j * np.sin(t), 5 + 0.5 * np.sin(t)] for t in th]
    tr = transport(TransportTask(qfib_map, x0, path))
    assert tr.status == OK
    cm = CompiledMap(qfib_map)
    assert np.linalg.norm(cm.values(tr.endpoint) - [5, 5]) < 1e-5
    assert tr.norm_drift <= 1e-6 * (1 + np.linalg.norm(x0))
    assert tr.fiber_residual_max <= 1e-8 * (1 + np.linalg.norm(path[-1])) * 10


def test_transport_tracks_fiber_on_every_step(qfib_map):
    x0 = fiber_start_qfib(3, -2)
    path = [[3, -2], [3.5, -1.5 + 0.5j], [2.5 + 0.5j, -2]]
    tr = transport(TransportTask(qfib_map, x0, path, tol=1e-9))
    assert tr.status == OK
    cm = CompiledMap(qfib_map)
    waypoints = [np.asarray(w, complex) for w in path]
    for s, x in tr.samples:
        seg = min(int(s * 2), 1)
        local = s * 2 - seg
        target = waypoints[seg] + local * (waypoints[seg + 1] - waypoints[seg])
        assert np.linalg.norm(cm.values(x) - target) <= 1e-9 * (1 + np.linalg.norm(target))


def test_transport_reports_rank_deficiency():
    # x1 restricted to the sphere through (1, 0) is critical there
    tr = transport(TransportTask(X12, [1, 0], [[1], [2]]))
    assert tr.status == RANK_DEFICIENT and tr.at == 0.0


def test_task_validation():
    with pytest.raises(ValueError):
        TransportTask(X12, [0, 5], [[1], [2]])
    with pytest.raises(ValueError):
        TransportTask(X12, [0, 5], [])


def test_find_fiber_point(qfib_map):
    x = find_fiber_point(qfib_map, [5, 5], seed=0)
    assert x is not None
    assert np.linalg.norm(CompiledMap(qfib_map).values(x) - [5, 5]) < 1e-10
