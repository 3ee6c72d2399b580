from itertools import combinations

import numpy as np
import pytest

from atypical.asymptotic import (
    ProbeSchedule,
    SeedCurve,
    gaffney,
    k0_sample,
    kinf_probe,
    mtame_deficiency,
    mtame_probe,
    nu,
)
from atypical.polycore import CompiledMap, parse_map

from conftest import XYZ


def rand_matrix(rng, m, n):
    return rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))


def rand_unitary(rng, k):
    q, r = np.linalg.qr(rand_matrix(rng, k, k))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def gaffney_oracle(J):
    """Direct transcription of the minors ratio with m = 1 denominator 1."""
    m, n = J.shape
    num = sum(abs(np.linalg.det(J[:, list(I)])) ** 2 for I in combinations(range(n), m))
    if m == 1:
        return np.sqrt(num)
    den = 0.0
    for j in range(m):
        rows = [r for r in range(m) if r != j]
        for I in combinations(range(n), m - 1):
            den += abs(np.linalg.det(J[np.ix_(rows, list(I))])) ** 2
    return 0.0 if den == 0 else np.sqrt(num / den)


def test_nu_examples():
    assert nu(np.array([[3, 4]])) == pytest.approx(5, abs=1e-12)
    J = np.array([[1, 1, 0], [3, 3, 5]])
    assert nu(J) == pytest.approx(np.sqrt((45 - np.sqrt(1825)) / 2), abs=1e-12)
    assert nu(np.array([[1, 2, 3], [2, 4, 6]])) < 1e-8
    with pytest.raises(ValueError):
        nu(np.zeros((0, 3)))


def test_gaffney_examples():
    J = np.array([[1, 1, 0], [3, 3, 5]])
    assert gaffney(J) ** 2 == pytest.approx(10 / 9, abs=1e-12)
    assert gaffney(np.array([[3, 4]])) == pytest.approx(5)
    assert gaffney(np.array([[1, 2, 3], [1, 2, 3]])) == 0
    assert gaffney(np.zeros((2, 3))) == 0


def test_gaffney_matches_oracle():
    rng = np.random.default_rng(0)
    for _ in range(100):
        m = int(rng.integers(1, 4))
        n = int(rng.integers(m, 6))
        J = rand_matrix(rng, m, n)
        assert gaffney(J) == pytest.approx(gaffney_oracle(J), rel=1e-10)


def test_homogeneity():
    rng = np.random.default_rng(1)
    for _ in range(100):
        m = int(rng.integers(1, 4))
        J = rand_matrix(rng, m, int(rng.integers(m, 6)))
        c = complex(*rng.standard_normal(2))
        assert nu(c * J) == pytest.approx(abs(c) * nu(J), rel=1e-10)
        assert gaffney(c * J) == pytest.approx(abs(c) * gaffney(J), rel=1e-10)


def test_unitary_invariance_of_nu():
    rng = np.random.default_rng(2)
    for _ in range(100):
        m = int(rng.integers(1, 4))
        n = int(rng.integers(m, 6))
        J = rand_matrix(rng, m, n)
        U, V = rand_unitary(rng, m), rand_unitary(rng, n)
        assert nu(U @ J @ V) == pytest.approx(nu(J), rel=1e-10)


def test_zero_coincidence():
    rng = np.random.default_rng(3)
    for _ in range(50):
        m = int(rng.integers(2, 4))
        n = int(rng.integers(m, 6))
        r = int(rng.integers(1, m))
        J = rand_matrix(rng, m, r) @ rand_matrix(rng, r, n)
        assert nu(J) < 1e-8 and gaffney(J) < 1e-8
        K = rand_matrix(rng, m, n)
        assert nu(K) > 1e-8 and gaffney(K) > 1e-8


def test_m1_agreement():
    rng = np.random.default_rng(4)
    for _ in range(100):
        J = rand_matrix(rng, 1, int(rng.integers(1, 6)))
        norm = np.linalg.norm(J)
        assert nu(J) == pytest.approx(norm, rel=1e-12)
        assert gaffney(J) == pytest.approx(norm, rel=1e-12)


def closed_form_g2(x, y, z):
    t1 = x * y + 1
    A = abs(2 * t1 * (t1 - 1) * z + 1) ** 2
    B = abs(x) ** 2 + abs(y) ** 2
    return A * B / (B + A + abs(z) ** 4 * B * abs(2 * t1 - 1) ** 2)


def test_gaffney_closed_form_example(qfib_map):
    cm = CompiledMap(qfib_map)
    assert gaffney(cm.jacobian(np.array([1, 1, 1], complex))) ** 2 == pytest.approx(closed_form_g2(1, 1, 1), abs=1e-10)
    rng = np.random.default_rng(5)
    for _ in range(100):
        p = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        g2 = gaffney(cm.jacobian(p)) ** 2
        form = closed_form_g2(*p)
        assert abs(g2 - form) <= 1e-9 * (1 + form)


def test_mtame_deficiency_examples(hyper_map):
    for k in (1.0, 10.0, 1e4):
        assert mtame_deficiency(hyper_map, [k, 0, 0]) < 1e-12
    assert mtame_deficiency(hyper_map, [0, 1, 0]) == pytest.approx(1.0, abs=1e-12)
    # J of rank m with conj(p) in its row span
    F = parse_map(["x"], ["x", "y"])
    assert mtame_deficiency(F, [3, 0]) < 1e-12
    assert mtame_deficiency(F, [0, 0]) == pytest.approx(nu(np.array([[1, 0]])))


def test_k0_examples(hyper_map, qfib_map):
    cloud = k0_sample(hyper_map, budget=32, seed=0)
    assert len(cloud) == 1 and np.linalg.norm(cloud.points[0] - [-1, 0]) < 1e-6
    assert len(k0_sample(parse_map(["x1"], ["x1", "x2"]), budget=16)) == 0
    cloud = k0_sample(qfib_map, budget=48, seed=0)
    assert len(cloud) > 0
    for u, v in cloud.points:
        assert min(abs(u - 1), abs(4 * u * (u - 1) * (v + 1) + 1)) < 1e-6


@pytest.mark.parametrize("texts,names", [(["x*y - 1", "y^2*z"], XYZ), (["x*y + 1", "(x*y*z + 1)*(x*y*z + z - 1)"], XYZ),
                                         (["x^2 + y^2"], ["x", "y"]), (["x^3 - 3*x*y + y^2"], ["x", "y"])])
def test_k0_points_are_certified(texts, names):
    F = parse_map(texts, names)
    cm = CompiledMap(F)
    cloud = k0_sample(F, budget=32, seed=7)
    for t, x, r in zip(cloud.points, cloud.preimages, cloud.residuals):
        assert np.linalg.norm(cm.values(x) - t) < 1e-8
        s = np.linalg.svd(cm.jacobian(x), compute_uv=False)
        assert s[-1] < 1e-8 * (1 + s[0])
        assert r <= cloud.tolerance


def test_schedule_validation():
    assert ProbeSchedule().radii[0] == 1 and ProbeSchedule().radii[-1] == pytest.approx(1e6)
    with pytest.raises(ValueError):
        ProbeSchedule(radii=(1, 1))
    with pytest.raises(ValueError):
        ProbeSchedule(restarts=0)
    with pytest.raises(ValueError):
        ProbeSchedule(radii=(-1, 2))


def test_seed_curve():
    c = SeedCurve.parse("1:1, 2i:-1, 0:0")
    assert np.allclose(c(10.0), [10, 0.2j, 0])


def test_kinf_probe_hyperbola(hyper_map):
    rep = kinf_probe(hyper_map, ProbeSchedule(restarts=2), target=[0, 0], seed_curves=[SeedCurve.parse("1:1,1:-1,0:0")])
    assert any(np.linalg.norm(c.t) < 1e-3 for c in rep.candidates)
    seeded = [r for r in rep.records if r.track == 0]
    assert all(r.on_sphere for r in seeded)
    objs = [r.objective for r in seeded][-4:]
    assert all(b <= a / 2 for a, b in zip(objs, objs[1:]))
    # the Gaffney objective decays along the same track
    assert seeded[-1].gaffney_objective < 1e-2


def test_kinf_probe_linear_map_has_no_candidates():
    rep = kinf_probe(parse_map(["x1"], ["x1", "x2", "x3"]), ProbeSchedule(restarts=3))
    assert rep.candidates == []
    for r in rep.records:
        assert r.objective == pytest.approx(r.radius, rel=2e-2)


def test_mtame_probe_examples(hyper_map):
    rep = mtame_probe(hyper_map, ProbeSchedule(restarts=6))
    assert len(rep.candidates) == 1
    assert np.linalg.norm(rep.candidates[0].t - [-1, 0]) < 1e-3
    rep = mtame_probe(hyper_map, ProbeSchedule(restarts=6), target=[0, 0])
    assert rep.candidates == []
    assert mtame_probe(parse_map(["x1"], ["x1", "x2"]), ProbeSchedule(restarts=3)).candidates == []


def test_kinf_probe_quadratic_fiber(qfib_map):
    # x = 1, y = -1, z = R forces t1 -> 0 along a fiber branch escaping to infinity
    curve = [SeedCurve.parse("1:0,-1:0,1:1")]
    schedule = ProbeSchedule(restarts=4, seed=1)
    found = []
    for target in ([0, 3], [0, -2], [1, 3]):
        rep = kinf_probe(qfib_map, schedule, target=target, seed_curves=curve)
        assert rep.candidates
        found += [c.t for c in rep.candidates]
    for u, v in found:
        assert min(abs(u * (u - 1)), abs(4 * u * (u - 1) * (v + 1) + 1)) < 1e-3
    # (2, 2) lies off both curves: no asymptotic critical value there
    assert kinf_probe(qfib_map, schedule, target=[2, 2], seed_curves=curve).candidates == []


def test_probe_determinism(hyper_map, monkeypatch):
    out = []
    for threads in ("1", "4"):
        monkeypatch.setenv("ATYPICAL_THREADS", threads)
        rep = mtame_probe(hyper_map, ProbeSchedule(restarts=4, radii=(1, 10, 100, 1000, 1e4)))
        out.append([(r.radius, r.track, r.minimizer.tobytes(), r.objective) for r in rep.records])
    assert out[0] == out[1]
