"""Atypical values of polynomial maps C^n -> C^m.

Exact Newton-polyhedron machinery (bad faces, tuples at infinity,
non-degeneracy) together with numerical probes for critical and asymptotic
critical values and a fiber-transport integrator.
"""
from .asymptotic import (
    ProbeReport,
    ProbeSchedule,
    SeedCurve,
    gaffney,
    k0_sample,
    kinf_probe,
    mtame_deficiency,
    mtame_probe,
    nu,
)
from .latgeom import Constraint, Face, LatticePolytope, enumerate_faces, hull_vertices, lp_feasible
from .newton import (
    analyze,
    bad_faces,
    check_nondegenerate,
    face_tuples_at_infinity,
    sigma,
    sigma_infinity,
    weighted_euler_check,
)
from .numsolve import ValueCloud
from .polycore import ParseError, PolyMap, SparsePoly, evaluate, jacobian, parse_map, parse_poly, partial
from .trivialize import RankDeficientError, TransportTask, TransportTrace, lift_vector, transport

__version__ = "0.1.0"
