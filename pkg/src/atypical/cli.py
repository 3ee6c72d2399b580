"""Command-line front end.

    atypical sigma --vars x,y,z --map "x*y-1" "y^2*z" --seed 1
    atypical --job job.json

Every command prints one canonical JSON document (sorted keys, floats with at
most 12 significant digits, complex numbers as [re, im]) so identical jobs give
byte-identical output.  Exit codes: 0 ok, 2 input error, 3 nondeg inconclusive.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field, fields
from fractions import Fraction
from typing import Any, Sequence

import numpy as np

from . import asymptotic, newton, trivialize
from .latgeom import Face
from .numsolve import ValueCloud
from .polycore import ParseError, PolyMap, parse_map

COMMANDS = ("newton", "badfaces", "nondeg", "sigma", "k0", "kinf", "mtame", "trivialize")
EXIT_OK, EXIT_INPUT, EXIT_INCONCLUSIVE = 0, 2, 3
DEFAULT_BUDGET = {"nondeg": 32, "sigma": 64, "k0": 64}


class JobError(ValueError):
    pass


@dataclass
class JobSpec:
    command: str
    vars: list[str]
    polynomials: list[str]
    seed: int = 0
    budget: int | None = None
    tol: float | None = None
    radii: list[float] | None = None
    restarts: int | None = None
    target: list[complex] | None = None
    seed_curves: list[str] = field(default_factory=list)
    gamma_inf_reading: str = "exists"
    format: str = "json"
    start: list[complex] | None = None
    path: list[list[complex]] | None = None
    step: float = 0.05

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise JobError(f"unknown command {self.command!r}")
        if not self.vars:
            raise JobError("no variables given")
        if not self.polynomials:
            raise JobError("no polynomials given")
        if self.gamma_inf_reading not in ("exists", "forall"):
            raise JobError("gamma_inf_reading must be 'exists' or 'forall'")
        if self.format not in ("json", "text"):
            raise JobError("format must be 'json' or 'text'")
        if self.budget is not None and self.budget < 1:
            raise JobError("budget must be at least 1")
        if self.tol is not None and self.tol <= 0:
            raise JobError("tol must be positive")

    @classmethod
    def from_dict(cls, d: dict) -> "JobSpec":
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise JobError(f"unknown job fields: {sorted(extra)}")
        d = dict(d)
        if isinstance(d.get("vars"), str):
            d["vars"] = _split_names(d["vars"])
        for key in ("target", "start"):
            if d.get(key) is not None:
                d[key] = [_as_complex(v) for v in d[key]]
        if d.get("path") is not None:
            d["path"] = [[_as_complex(v) for v in w] for w in d["path"]]
        try:
            return cls(**d)
        except TypeError as exc:
            raise JobError(str(exc)) from None


def _split_names(text: str) -> list[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


def _as_complex(v) -> complex:
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return complex(float(v[0]), float(v[1]))
    if isinstance(v, str):
        try:
            return complex(v.strip().replace(" ", "").replace("i", "j"))
        except ValueError:
            raise JobError(f"bad complex number {v!r}") from None
    if isinstance(v, (int, float, complex)):
        return complex(v)
    raise JobError(f"bad complex number {v!r}")


def _complex_list(text: str) -> list[complex]:
    return [_as_complex(p) for p in text.split(",")]


# ------------------------------------------------------------- serialization

def _canon(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _canon(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_canon(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_canon(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, (complex, np.complexfloating)):
        return [_canon(float(obj.real)), _canon(float(obj.imag))]
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not np.isfinite(x):
            return None
        x = float(f"{x:.12g}")
        return 0.0 if x == 0 else x
    return obj


def dumps(obj: Any) -> str:
    return json.dumps(_canon(obj), sort_keys=True, indent=2)


def _text(obj: Any, indent: int = 0) -> list[str]:
    pad = "  " * indent
    if isinstance(obj, dict):
        lines = []
        for k in sorted(obj):
            v = obj[k]
            if isinstance(v, (dict, list)) and v and not _flat(v):
                lines.append(f"{pad}{k}:")
                lines.extend(_text(v, indent + 1))
            else:
                lines.append(f"{pad}{k}: {json.dumps(v)}")
        return lines
    if isinstance(obj, list):
        lines = []
        for v in obj:
            if isinstance(v, (dict, list)) and not _flat(v):
                lines.append(f"{pad}-")
                lines.extend(_text(v, indent + 1))
            else:
                lines.append(f"{pad}- {json.dumps(v)}")
        return lines
    return [pad + json.dumps(obj)]


def _flat(v) -> bool:
    if isinstance(v, dict):
        return False
    return all(not isinstance(x, (dict, list)) or (isinstance(x, list) and _flat(x)) for x in v)


def cloud_json(cloud: ValueCloud) -> dict:
    return {
        "label": cloud.label,
        "points": cloud.points,
        "residuals": cloud.residuals,
        "preimages": cloud.preimages,
        "system": cloud.system,
        "tolerance": cloud.tolerance,
    }


def report_json(rep: asymptotic.ProbeReport) -> dict:
    return {
        "kind": rep.kind,
        "records": [{
            "radius": r.radius,
            "track": r.track,
            "x": r.minimizer,
            "objective": r.objective,
            "gaffney_objective": r.gaffney_objective,
            "image": r.image,
            "converged": r.converged,
        } for r in rep.records],
        "candidates": [{
            "t": c.t,
            "evidence": {"tracks": c.tracks, "objectives": c.objectives},
        } for c in rep.candidates],
    }


def trace_json(tr: trivialize.TransportTrace) -> dict:
    return {
        "status": tr.status,
        "at": tr.at,
        "samples": [{"s": s, "x": x} for s, x in tr.samples],
        "norm_drift": tr.norm_drift,
        "fiber_residual_max": tr.fiber_residual_max,
    }


def _face_json(face: Face) -> dict:
    return face.to_json()


# ------------------------------------------------------------------ commands

def _schedule(job: JobSpec) -> asymptotic.ProbeSchedule:
    kw: dict[str, Any] = {"seed": job.seed}
    if job.radii is not None:
        kw["radii"] = job.radii
    if job.restarts is not None:
        kw["restarts"] = job.restarts
    return asymptotic.ProbeSchedule(**kw)


def _run_newton(F: PolyMap, job: JobSpec) -> tuple[int, dict]:
    comps = []
    for i, f in enumerate(F.components):
        data = newton.analyze(f)
        comps.append({
            "index": i,
            "polynomial": f.to_string(F.names),
            "convenient": data.convenient,
            "gamma_minus_vertices": [list(v) for v in data.gamma_minus.vertices],
            "faces_at_infinity": [_face_json(x) for x in data.faces_at_infinity],
            "bad_faces": [b.to_json() for b in data.bad_faces],
        })
    tuples = [t.to_json() for t in newton.face_tuples_at_infinity(F, job.gamma_inf_reading)]
    return EXIT_OK, {"components": comps, "reading": job.gamma_inf_reading, "tuples": tuples}


def _run_badfaces(F: PolyMap, job: JobSpec) -> tuple[int, dict]:
    out = []
    for i, f in enumerate(F.components):
        for b in newton.bad_faces(f):
            d = b.to_json()
            d["component"] = i
            out.append(d)
    return EXIT_OK, {"bad_faces": out}


def _run_nondeg(F: PolyMap, job: JobSpec) -> tuple[int, dict]:
    budget = job.budget or DEFAULT_BUDGET["nondeg"]
    verdicts = newton.check_nondegenerate(F, budget, job.seed, job.gamma_inf_reading)
    rows = []
    for v in verdicts:
        d = v.tuple.to_json()
        d.update(verdict=v.status, budget_used=v.budget_used)
        if v.certificate is not None:
            d.update(certificate=v.certificate, residual=v.residual)
        rows.append(d)
    degenerate = any(v.degenerate for v in verdicts)
    code = EXIT_INCONCLUSIVE if verdicts and not degenerate else EXIT_OK
    return code, {"reading": job.gamma_inf_reading, "budget": budget, "degenerate": degenerate,
                  "tuples": rows}


def _run_sigma(F: PolyMap, job: JobSpec) -> tuple[int, dict]:
    res = newton.sigma(F, job.budget or DEFAULT_BUDGET["sigma"], job.seed, job.tol or 1e-6)
    return EXIT_OK, {"sigma": {
        "k0": cloud_json(res.k0),
        "sigma_inf": cloud_json(res.sigma_inf),
        "hyperplanes": [{"index": i, "constant": c} for i, c in res.hyperplanes],
    }}


def _run_k0(F: PolyMap, job: JobSpec) -> tuple[int, dict]:
    cloud = asymptotic.k0_sample(F, job.budget or DEFAULT_BUDGET["k0"], job.seed, job.tol or 1e-6)
    return EXIT_OK, {"k0": cloud_json(cloud)}


def _run_probe(F: PolyMap, job: JobSpec) -> tuple[int, dict]:
    curves = [asymptotic.SeedCurve.parse(s) for s in job.seed_curves]
    for c in curves:
        if len(c.coefficients) != F.n:
            raise JobError(f"seed curve needs {F.n} coordinates")
    if job.target is not None and len(job.target) != F.m:
        raise JobError(f"target needs {F.m} coordinates")
    probe = asymptotic.kinf_probe if job.command == "kinf" else asymptotic.mtame_probe
    rep = probe(F, _schedule(job), job.target, curves)
    return EXIT_OK, {"report": report_json(rep)}


def _run_trivialize(F: PolyMap, job: JobSpec) -> tuple[int, dict]:
    if not job.path:
        raise JobError("trivialize needs --path")
    for w in job.path:
        if len(w) != F.m:
            raise JobError(f"path waypoints need {F.m} coordinates")
    start = job.start
    if start is None:
        start = trivialize.find_fiber_point(F, job.path[0], job.seed)
        if start is None:
            raise JobError("could not find a point over the first waypoint; pass --start")
    elif len(start) != F.n:
        raise JobError(f"start needs {F.n} coordinates")
    task = trivialize.TransportTask(F, start, job.path, step=job.step,
                                    tol=job.tol or 1e-8)
    return EXIT_OK, {"trace": trace_json(trivialize.transport(task))}


_RUNNERS = {
    "newton": _run_newton,
    "badfaces": _run_badfaces,
    "nondeg": _run_nondeg,
    "sigma": _run_sigma,
    "k0": _run_k0,
    "kinf": _run_probe,
    "mtame": _run_probe,
    "trivialize": _run_trivialize,
}


def run(job: JobSpec) -> tuple[int, str]:
    """Execute a job; returns (exit code, rendered report)."""
    F = parse_map(job.polynomials, job.vars)
    code, body = _RUNNERS[job.command](F, job)
    body = {"command": job.command, "vars": job.vars, "map": job.polynomials, "seed": job.seed, **body}
    if job.format == "json":
        return code, dumps(body)
    return code, "\n".join(_text(_canon(body)))


# ---------------------------------------------------------------------- argv

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--vars", help="comma separated variable names")
    common.add_argument("--map", nargs="+", dest="polynomials", metavar="POLY")
    common.add_argument("--seed", type=int)
    common.add_argument("--budget", type=int, help="multistart trials per system")
    common.add_argument("--tol", type=float, help="cluster tolerance (transport: local tolerance)")
    common.add_argument("--format", choices=("json", "text"))
    common.add_argument("--gamma-inf-reading", choices=("exists", "forall"),
                        help="quantifier for tuples at infinity (default: exists)")
    common.add_argument("--job", help="JSON job file; command line flags override it")

    parser = argparse.ArgumentParser(prog="atypical", parents=[common],
                                     description="Atypical values of polynomial maps.")
    sub = parser.add_subparsers(dest="command")
    for name in ("newton", "badfaces", "nondeg", "sigma", "k0"):
        sub.add_parser(name, parents=[common])
    for name in ("kinf", "mtame"):
        p = sub.add_parser(name, parents=[common])
        p.add_argument("--radii", help="comma separated increasing radii")
        p.add_argument("--restarts", type=int)
        p.add_argument("--target", help="comma separated complex coordinates, e.g. 0,1+2i")
        p.add_argument("--seed-curve", action="append", dest="seed_curves",
                       help='monomial seed curve "c:e,c:e,..." meaning x_k = c R^e')
    p = sub.add_parser("trivialize", parents=[common])
    p.add_argument("--start", help="comma separated start point on the first fiber")
    p.add_argument("--path", nargs="+", help="waypoints, each comma separated")
    p.add_argument("--step", type=float)
    return parser


def job_from_args(ns: argparse.Namespace) -> JobSpec:
    base: dict[str, Any] = {}
    if ns.job:
        try:
            with open(ns.job) as fh:
                base = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise JobError(f"cannot read job file: {exc}") from None
        if not isinstance(base, dict):
            raise JobError("job file must hold a JSON object")
    over: dict[str, Any] = {}
    if ns.command:
        over["command"] = ns.command
    if ns.vars is not None:
        over["vars"] = _split_names(ns.vars)
    for key in ("polynomials", "seed", "budget", "tol", "format", "gamma_inf_reading",
                "restarts", "step", "seed_curves"):
        val = getattr(ns, key, None)
        if val is not None:
            over[key] = val
    if getattr(ns, "radii", None):
        over["radii"] = [float(r) for r in ns.radii.split(",")]
    if getattr(ns, "target", None):
        over["target"] = _complex_list(ns.target)
    if getattr(ns, "start", None):
        over["start"] = _complex_list(ns.start)
    if getattr(ns, "path", None):
        over["path"] = [_complex_list(w) for w in ns.path]
    merged = {**base, **over}
    for key in ("command", "vars", "polynomials"):
        if key not in merged:
            raise JobError(f"missing {key}")
    return JobSpec.from_dict(merged)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        job = job_from_args(ns)
        code, out = run(job)
    except ParseError as exc:
        print(f"atypical: parse error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ValueError, IndexError) as exc:
        print(f"atypical: {exc}", file=sys.stderr)
        return EXIT_INPUT
    print(out)
    return code


if __name__ == "__main__":
    sys.exit(main())
