import json

import numpy as np
import pytest

from atypical.cli import JobError, JobSpec, dumps, main, run


def call(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_sigma_example(capsys):
    code, out, _ = call(capsys, "sigma", "--vars", "x,y,z", "--map", "x*y-1", "y^2*z", "--seed", "1")
    assert code == 0
    d = json.loads(out)["sigma"]
    assert len(d["k0"]["points"]) == 1
    (u, v), = [[complex(*c) for c in p] for p in d["k0"]["points"]]
    assert abs(u + 1) < 1e-6 and abs(v) < 1e-6
    assert d["sigma_inf"]["points"] == []
    assert d["hyperplanes"] == [{"index": 0, "constant": [-1.0, 0.0]}, {"index": 1, "constant": [0.0, 0.0]}]


def test_badfaces_and_k0_examples(capsys):
    code, out, _ = call(capsys, "badfaces", "--vars", "x,y", "--map", "x + x^2*y")
    assert code == 0 and json.loads(out)["bad_faces"] == []
    code, out, _ = call(capsys, "k0", "--vars", "x,y", "--map", "x^2 + y^2")
    assert code == 0 and json.loads(out)["k0"]["points"] == [[[0.0, 0.0]]]
    code, out, _ = call(capsys, "badfaces", "--vars", "x,y,z", "--map", "x*y-1", "y^2*z")
    bf = json.loads(out)["bad_faces"]
    assert [b["points"] for b in bf] == [[[0, 0, 0], [1, 1, 0]]] and bf[0]["component"] == 0


def test_newton_command(capsys):
    code, out, _ = call(capsys, "newton", "--vars", "x,y,z", "--map", "x*y-1", "y^2*z")
    d = json.loads(out)
    assert code == 0
    assert d["components"][0]["faces_at_infinity"][0]["points"] == [[1, 1, 0]]
    assert d["reading"] == "exists"
    code, out, _ = call(capsys, "newton", "--vars", "x,y,z", "--map", "x*y-1", "y^2*z",
                        "--gamma-inf-reading", "forall")
    assert len(json.loads(out)["tuples"]) <= len(d["tuples"])


def test_nondeg_exit_codes(capsys):
    code, out, _ = call(capsys, "nondeg", "--vars", "x,y", "--map", "(x+y)^2", "--budget", "8")
    assert code == 0 and json.loads(out)["degenerate"]
    code, out, _ = call(capsys, "nondeg", "--vars", "x,y", "--map", "x + x^2*y", "--budget", "8")
    d = json.loads(out)
    assert code == 3 and not d["degenerate"]
    assert {t["verdict"] for t in d["tuples"]} == {"PRESUMED_NONDEGENERATE"}


@pytest.mark.parametrize("argv", [
    ["k0", "--vars", "x,y", "--map", "x^^2"],
    ["k0", "--vars", "x,y", "--map", "x", "y"],
    ["k0", "--vars", "x,y", "--map", "w"],
    ["k0", "--vars", "x,y", "--map", "x", "--budget", "0"],
    ["kinf", "--vars", "x,y", "--map", "x", "--radii", "10,1"],
    ["kinf", "--vars", "x,y", "--map", "x", "--target", "1,2"],
    ["trivialize", "--vars", "x,y", "--map", "x", "--start", "0,5", "--path", "1", "2"],
    ["--job", "/nonexistent/job.json"],
    ["k0", "--map", "x"],
])
def test_input_errors_exit_2(capsys, argv):
    code, out, err = call(capsys, *argv)
    assert code == 2 and out == "" and err.startswith("atypical:")


def test_argparse_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 2


def test_job_file(tmp_path, capsys):
    job = {"command": "k0", "vars": ["x", "y"], "polynomials": ["x^2 + y^2"], "seed": 3, "budget": 8}
    path = tmp_path / "job.json"
    path.write_text(json.dumps(job))
    code, out, _ = call(capsys, "--job", str(path))
    assert code == 0 and json.loads(out)["seed"] == 3
    code2, out2, _ = call(capsys, "k0", "--vars", "x,y", "--map", "x^2 + y^2", "--seed", "3", "--budget", "8")
    assert out == out2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({**job, "colour": "red"}))
    assert call(capsys, "--job", str(bad))[0] == 2
    bad.write_text("{not json")
    assert call(capsys, "--job", str(bad))[0] == 2


def test_probe_and_trivialize_commands(capsys):
    code, out, _ = call(capsys, "kinf", "--vars", "x,y,z", "--map", "x*y-1", "y^2*z", "--target", "0,0",
                        "--seed-curve", "1:1,1:-1,0:0", "--restarts", "1")
    rep = json.loads(out)["report"]
    assert code == 0 and [c["t"] for c in rep["candidates"]] == [[[0.0, 0.0], [0.0, 0.0]]]
    assert {"radius", "track", "x", "objective", "image", "gaffney_objective", "converged"} <= set(rep["records"][0])
    code, out, _ = call(capsys, "trivialize", "--vars", "x1,x2", "--map", "x1", "--start", "0,5",
                        "--path", "0", "0.3")
    tr = json.loads(out)["trace"]
    assert code == 0 and tr["status"] == "OK" and tr["norm_drift"] <= 1e-6
    x_end = [complex(*c) for c in tr["samples"][-1]["x"]]
    assert abs(x_end[0] - 0.3) < 1e-9 and abs(x_end[1] - np.sqrt(24.91)) < 1e-6
    code, out, _ = call(capsys, "trivialize", "--vars", "x1,x2", "--map", "x1", "--path", "0", "0.3")
    assert code == 0 and json.loads(out)["trace"]["status"] == "OK"


def test_text_format(capsys):
    code, out, _ = call(capsys, "k0", "--vars", "x,y", "--map", "x^2 + y^2", "--format", "text")
    assert code == 0 and "points: [[[0.0, 0.0]]]" in out


def test_canonical_json():
    s = dumps({"b": -0.0, "a": [1 + 2j, 1 / 3, np.float64(2.5), np.int64(4), float("nan")]})
    assert s == dumps(json.loads(s))
    d = json.loads(s)
    assert list(d) == ["a", "b"]
    assert d["b"] == 0.0 and "-0.0" not in s
    assert d["a"] == [[1.0, 2.0], 0.333333333333, 2.5, 4, None]


def test_jobspec_validation():
    with pytest.raises(JobError):
        JobSpec("plot", ["x", "y"], ["x"])
    with pytest.raises(JobError):
        JobSpec("k0", ["x", "y"], ["x"], gamma_inf_reading="some")
    with pytest.raises(JobError):
        JobSpec.from_dict({"command": "k0", "vars": "x,y", "polynomials": ["x"], "target": ["1+"]})
    job = JobSpec.from_dict({"command": "k0", "vars": "x, y", "polynomials": ["x^2+y^2"], "budget": 4})
    assert job.vars == ["x", "y"]
    code, text = run(job)
    assert code == 0 and json.loads(text)["command"] == "k0"


def test_byte_identical_across_thread_counts(monkeypatch, capsys):
    outs = []
    for threads in ("1", "4"):
        monkeypatch.setenv("ATYPICAL_THREADS", threads)
        outs.append(call(capsys, "sigma", "--vars", "x,y,z", "--map", "x*y+1", "(x*y*z+1)*(x*y*z+z-1)",
                         "--seed", "2", "--budget", "24")[1])
    assert outs[0] == outs[1]
