"""Identity suites run by ``pnalgebroid validate`` and by the test-suite."""

from __future__ import annotations

import numpy as np

from . import toda
from .algebroid import schouten, validate_axioms
from .hierarchy import Hierarchy
from .jets import DegenerateEndomorphismError
from .modular import modN_residual, pn_modular_report
from .nijenhuis import deform, torsion_residual, trace_identities
from .poisson import compatibility, is_poisson
from .report import Report, collect

DEFAULT_TOL = 1e-8


class SingularDomainError(ValueError):
    """The sample points hit a degenerate ``N`` or a singular coefficient."""


def _dets(N, points):
    try:
        return np.array([N.det()(x) for x in points])
    except (ArithmeticError, DegenerateEndomorphismError) as exc:
        raise SingularDomainError(f"cannot evaluate det N on the sample points: {exc}") from None


def pn_suite(pn, points, tolerance=DEFAULT_TOL, seed=None, *, axioms=True, hierarchy_range=(-2, 5)):
    """Axioms, Poisson, torsion, compatibility, modular, trace and hierarchy checks for ``pn``."""
    points = list(points)
    A, N = pn.algebroid, pn.N
    rep = Report(f"validate {pn.name}")
    if axioms:
        rep.extend(validate_axioms(A, len(points), seed if seed is not None else 42, tolerance))
    rep.extend(is_poisson(pn.pi, points, tolerance, seed))
    rep.add(collect("torsion T_N", [torsion_residual(N, points)], tolerance, len(points), seed))
    rep.extend(compatibility(pn.pi, N, points, tolerance, seed))
    for i in range(3):
        for j in range(i, 3):
            S = schouten(pn.pi_k(i), pn.pi_k(j))
            rep.add(collect(f"[pi_{i}, pi_{j}] = 0", (S.max_abs(x) for x in points[:5]), tolerance, min(5, len(points)), seed))
    rep.add(collect("xi_(A_N) = N* xi_A + d_A Tr N", [modN_residual(N, points[:10])], tolerance, min(10, len(points)), seed))

    dets = _dets(N, points)
    positive = bool(np.all(dets > 0))
    invertible = bool(np.all(np.abs(dets) > 1e-10))
    lo, hi = hierarchy_range
    if not invertible:
        lo = max(lo, 1)
    elif not positive:
        lo = max(lo, 1)
    note = "" if lo == hierarchy_range[0] else f"det N not positive on samples; indices from {lo}"
    rep.extend(trace_identities(N, (2, 3, 4, 5), (1, 2, 3, 4) if positive else (), points, tolerance, seed))
    rep.extend(pn_modular_report(pn.pi, N, points, tolerance, seed, coboundary=positive))

    H = Hierarchy(pn, (lo, hi))
    for m in range(lo + 1 if lo < 1 else 1, min(hi, lo + hi) + 1):
        if H.decompositions(m):
            c = H.cross_check(m, points, tolerance, seed)
            c.detail = note
            rep.add(c)
    for m in range(max(lo, 1), 4):
        rep.add(H.recursion_check(m, points, 1e-10, seed))
    rep.add(H.covered_check(2, points, tolerance, seed))
    rep.add(H.involution_check([i for i in (0, 1, 2, 3) if i >= lo], [0, 1], points, 1e-9, seed))
    return rep


def physical_suite(pn, points, tolerance=DEFAULT_TOL, seed=None):
    points = list(points)
    rep = pn_suite(pn, points, tolerance, seed)
    rep.add(collect("pi0# dH = pi1# dP", [toda.bihamiltonian_residual(pn, points)], tolerance, len(points), seed))
    rep.extend(validate_axioms(deform(pn.N), min(len(points), 10), seed if seed is not None else 42, tolerance))
    if np.all(_dets(pn.N, points) > 0):
        for j in (0, 1):
            rep.add(toda.toda_multi_check(pn, j, points, True, tolerance, seed))
    return rep


def algebroid_suite(pn, n, points, tolerance=DEFAULT_TOL, seed=None):
    points = list(points)
    rep = pn_suite(pn, points, tolerance, seed)
    dev = max(float(np.max(np.abs((pn.N.at(x, 1) - pn.N_solved.at(x, 1)).c))) for x in points)
    rep.add(collect("closed-form N = jet solve of Pi0 E = Pi1", [dev], tolerance, len(points), seed))
    red = toda.toda_flaschka_reduced(n)
    rep.add(collect("covered pi0, pi1 = reduced Flaschka tensors", [toda.covered_equals_reduced(pn, red, points)], 1e-10,
                    len(points), seed))
    ranks = [toda.reduced_rank(red, x) for x in points]
    rep.add(collect(f"rank of covered pi0 = {2 * n - 2}", [max(abs(k - (2 * n - 2)) for k in ranks)], 0.0, len(points), seed))
    return rep


def pair_suite(pair, points, tolerance=DEFAULT_TOL, seed=None):
    """Poisson and compatibility checks for two plain Poisson tensors (plus chart extras)."""
    points = list(points)
    rep = Report(f"validate {pair.name}")
    rep.extend(is_poisson(pair.pi0, points, tolerance, seed, label="pi0"))
    rep.extend(is_poisson(pair.pi1, points, tolerance, seed, label="pi1"))
    S = schouten(pair.pi0, pair.pi1)
    rep.add(collect("[pi0, pi1] = 0", (S.max_abs(x) for x in points), tolerance, len(points), seed))
    n = (len(pair.coords) + 1) // 2
    if pair.chart is not None and "extended" not in pair.extras:
        inv = max(toda.involution_residual(pair, x) for x in points)
        rep.add(collect(f"a_{n} -> -a_{n} is Poisson for pi0, pi1 (chart {pair.chart})", [inv], 1e-12, len(points), seed))
    if "extended" in pair.extras:
        ranks = [toda.reduced_rank(pair, x) for x in points]
        rep.add(collect(f"rank pi0 = {2 * n - 2}", [max(abs(k - (2 * n - 2)) for k in ranks)], 0.0, len(points), seed))
    return rep


def validate_example(ex, points=20, seed=42, tolerance=DEFAULT_TOL):
    obj = ex.obj
    pts = obj.algebroid.sample_points(points, seed)
    if ex.kind == "physical":
        return physical_suite(obj, pts, tolerance, seed)
    if ex.kind == "algebroid":
        return algebroid_suite(obj, ex.n, pts, tolerance, seed)
    return pair_suite(obj, pts, tolerance, seed)


def validate_config(A, pn, extras, points=20, seed=42, tolerance=DEFAULT_TOL):
    pts = A.sample_points(points, seed)
    if pn is not None:
        return pn_suite(pn, pts, tolerance, seed)
    rep = Report(f"validate {A.name}")
    rep.extend(validate_axioms(A, points, seed, tolerance))
    if extras.get("pi") is not None:
        rep.extend(is_poisson(extras["pi"], pts, tolerance, seed))
    if extras.get("N") is not None:
        rep.add(collect("torsion T_N", [torsion_residual(extras["N"], pts)], tolerance, len(pts), seed))
    return rep
