"""Acceptance criteria; each test records one PASS/FAIL line (see the terminal summary)."""

import itertools
import math

import numpy as np
from conftest import sl2_action

from pnalgebroid import flows, jets, toda
from pnalgebroid.algebroid import differential, lie_algebra, schouten, tangent_algebroid, validate_axioms
from pnalgebroid.exterior import AForm, EndomorphismField, Multivector, wedge
from pnalgebroid.hierarchy import Hierarchy
from pnalgebroid.modular import modN_residual, rescale_check
from pnalgebroid.nijenhuis import deform, torsion_residual, trace_identities
from pnalgebroid.poisson import compatibility, d_pi, dual_algebroid, poisson_bracket
from pnalgebroid.jets import Jet

SEED = 42
X0 = (1.0, 0.8, 0.3, -0.1, 0.2)


def worst(*reports):
    return max(r.max_residual() if hasattr(r, "checks") else r.max_residual for r in reports)


def test_criterion_01_axioms(acceptance):
    phys2 = toda.toda_physical(2)
    phys3 = toda.toda_physical(3)
    subjects = [
        tangent_algebroid(["x1", "x2", "x3"], {c: (-1, 1) for c in ("x1", "x2", "x3")}),
        lie_algebra({(0, 1): [0, 1]}, frame=["e1", "e2"], name="aff"),
        toda.toda_algebroid(2).algebroid,
        toda.toda_algebroid(3).algebroid,
        dual_algebroid(phys2.pi),
        dual_algebroid(toda.toda_algebroid(2).pi),
        deform(phys2.N),
        deform(phys3.N),
    ]
    reps = [validate_axioms(A, 50, SEED, 1e-8) for A in subjects]
    acceptance(1, all(r.passed for r in reps),
               f"axioms on {len(subjects)} algebroids at 50 points, max residual {worst(*reps):.1e}")


def test_criterion_02_torsion(acceptance):
    res = {n: torsion_residual(toda.toda_physical(n).N, toda.toda_physical(n).sample_points(20, SEED)) for n in (2, 3, 4)}
    acceptance(2, max(res.values()) < 1e-8, "T_N for Toda physical n=2,3,4: "
               + ", ".join(f"{r:.1e}" for r in res.values()))


def test_criterion_03_poisson_compatibility(acceptance):
    worst_s, reps = 0.0, []
    for n in (2, 3):
        pn = toda.toda_physical(n)
        pts = pn.sample_points(10, SEED)
        for i, j in itertools.combinations_with_replacement(range(3), 2):
            S = schouten(pn.pi_k(i), pn.pi_k(j))
            worst_s = max(worst_s, max(S.max_abs(x) for x in pts))
        reps.append(compatibility(pn.pi, pn.N, pts, 1e-8, SEED))
    ok = worst_s < 1e-8 and all(r.passed for r in reps)
    acceptance(3, ok, f"[pi_i, pi_j] max {worst_s:.1e}; compatibility max {worst(*reps):.1e}")


def test_criterion_04_modN(acceptance):
    res = []
    for n in (2, 3):
        pn = toda.toda_physical(n)
        res.append(modN_residual(pn.N, pn.sample_points(10, SEED)))
    plane = tangent_algebroid(["q1", "q2"], {"q1": (0.5, 2.0), "q2": (-1, 1)})
    res.append(modN_residual(EndomorphismField(plane, [["q1", "0"], ["0", "1"]]), plane.sample_points(10, SEED)))
    acceptance(4, max(res) < 1e-8, "xi_AN - N* xi_A - d Tr N: " + ", ".join(f"{r:.1e}" for r in res))


def test_criterion_05_gauge_law(acceptance):
    sl2 = sl2_action()
    alg = toda.toda_algebroid(2).algebroid
    cases = [(sl2, "1 + x^2"), (sl2, "exp(x)*y"), (sl2, "2 + sin(x*y)"),
             (alg, "1 + a1^2"), (alg, "exp(b1)"), (alg, "3 + cos(a1*b2)")]
    minus = [rescale_check(A, f, A.sample_points(20, SEED), "eta", -1) for A, f in cases]
    plus = [rescale_check(A, f, A.sample_points(20, SEED), "eta", +1) for A, f in cases]
    acceptance(5, all(c.passed for c in minus),
               f"xi' = xi - d log|f| max residual {max(c.max_residual for c in minus):.1e}; "
               f"the definition gives xi' = xi + d log|f| (max residual {max(c.max_residual for c in plus):.1e})")


def test_criterion_06_trace_identities(acceptance):
    pn = toda.toda_physical(3, domain=toda.DET_POSITIVE_BOX_3)
    rep = trace_identities(pn.N, (2, 3, 4, 5), (1, 2, 3, 4), pn.sample_points(10, SEED), 1e-8, SEED)
    acceptance(6, rep.passed, f"m=2..5 and k=1..4 on Toda physical n=3, max residual {rep.max_residual():.1e}")


def test_criterion_07_hierarchy(acceptance):
    pn = toda.toda_physical(3, domain=toda.DET_POSITIVE_BOX_3)
    pts = pn.sample_points(5, SEED)
    H = Hierarchy(pn, (-2, 4))
    cross = [H.cross_check(m, pts, 1e-8, SEED) for m in range(-1, 6)]
    rec = [H.recursion_check(m, pts, 1e-12, SEED) for m in range(-1, 5)]
    ok = all(c.passed for c in cross + rec)
    acceptance(7, ok, f"d_(N^i pi) h_j for i+j in [-1, 5] max {max(c.max_residual for c in cross):.1e}; "
               f"X^(m+1) = N X^(m) max {max(c.max_residual for c in rec):.1e}")


def test_criterion_08_multi_hamiltonian(acceptance):
    good, neg = [], []
    for pn in (toda.toda_physical(2), toda.toda_physical(3, domain=toda.DET_POSITIVE_BOX_3)):
        pts = pn.sample_points(10, SEED)
        for j in (0, 1):
            good.append(toda.toda_multi_check(pn, j, pts, True, 1e-8, SEED))
            neg.append(toda.toda_multi_check(pn, j, pts, False, 1e-3, SEED))
    ok = all(c.passed for c in good + neg)
    acceptance(8, ok, f"with 1/2 max {max(c.max_residual for c in good):.1e}; "
               f"without it min {min(c.max_residual for c in neg):.2f} (> 1e-3)")


def test_criterion_09_origin(acceptance):
    pn = toda.toda_physical(2)
    x = (0.0,) * 4
    N = pn.N
    H = Hierarchy(pn)
    expect = np.array([[0, 0, 0, 1], [0, 0, -1, 0], [0, -1, 0, 0], [1, 0, 0, 0]], float)
    devs = [
        np.max(np.abs(N.matrix(x) - expect)),
        abs(N.trace()(x)),
        abs(N.power(2).trace()(x) - 4.0),
        abs(N.det()(x) - 1.0),
        abs(H.h(0)(x)),
        abs(0.5 * N.power(2).trace()(x) - 2.0 * pn.hamiltonian(x)),
    ]
    acceptance(9, max(devs) < 1e-12, f"N(0), Tr N, Tr N^2, det N, h0, 1/2 Tr N^2 = 2 H(0): max deviation {max(devs):.1e}")


def test_criterion_10_covered(acceptance):
    res, ranks = [], []
    for n in (2, 3):
        pn = toda.toda_algebroid(n)
        red = toda.toda_flaschka_reduced(n)
        pts = pn.sample_points(50, SEED)
        res.append(toda.covered_equals_reduced(pn, red, pts))
        ranks.append(all(toda.reduced_rank(red, x) == 2 * n - 2 for x in pts))
    acceptance(10, max(res) < 1e-10 and all(ranks),
               f"covered = reduced max {max(res):.1e} at 50 points; rank 2n-2 everywhere: {all(ranks)}")


def test_criterion_11_involution(acceptance):
    res = {}
    for chart in ("exp", "linear", "listed"):
        for n in (2, 3):
            pair = toda.toda_extended_flaschka(n, chart)
            res[(chart, n)] = max(toda.involution_residual(pair, x) for x in pair.algebroid.sample_points(20, SEED))
    exp = max(v for (c, _), v in res.items() if c == "exp")
    other = ", ".join(f"{c} {max(v for (cc, _), v in res.items() if cc == c):.1f}" for c in ("linear", "listed"))
    acceptance(11, exp < 1e-12, f"a_n -> -a_n on both extended tensors (exp chart) {exp:.1e}; other charts: {other}")


def test_criterion_12_flows(acceptance):
    pn = toda.toda_algebroid(3)
    H = Hierarchy(pn)
    coords = pn.algebroid.coords
    a = flows.integrate(H.flow_field(0, 2), X0, 10.0, 1e-3, coords)
    b = flows.integrate(H.flow_field(1, 1), X0, 10.0, 1e-3, coords)
    drift = flows.conservation_report(a, [H.h_value(j) for j in (1, 2, 3)])
    coincide = flows.max_deviation(a, b)
    P = H.covered_tensor(0)
    inv = max(abs(poisson_bracket(P, H.h(i), H.h(j))(x))
              for x in a.samples(20) for i, j in itertools.combinations((1, 2, 3), 2))
    ok = max(drift.values()) < 1e-6 and coincide < 1e-6 and inv < 1e-9
    acceptance(12, ok, "drift " + ", ".join(f"{k} {v:.1e}" for k, v in drift.items())
               + f"; bracket-0/h2 vs bracket-1/h1 {coincide:.1e}; {{h_i, h_j}} along trajectory {inv:.1e}")


def test_criterion_13_jets(acceptance):
    rng = np.random.default_rng(SEED)
    ring = ring_abs = 0.0
    for _ in range(200):
        sp = jets.space(3, 3)
        a, b, c = (Jet(sp, rng.standard_normal(sp.size)) for _ in range(3))
        for lhs, rhs in (((a * b) * c, a * (b * c)), (a * (b + c), a * b + a * c), (a * b, b * a)):
            d = float(np.max(np.abs((lhs - rhs).c)))
            # scaled by the coefficient size: products of random jets reach |c| ~ 50
            ring = max(ring, d / max(1.0, float(np.max(np.abs(lhs.c)))))
            ring_abs = max(ring_abs, d)

    def f(v):
        return math.exp(v[0] * v[1]) * math.sin(v[2]) / (1 + v[0] ** 2) + math.log(v[2]) * v[1] ** 3

    def fd(g, x, h=1e-6):
        x = np.asarray(x, float)
        return np.array([(g(x + h * e) - g(x - h * e)) / (2 * h) for e in np.eye(len(x))])

    deriv = 0.0
    for _ in range(50):
        x = (rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0.5, 2))
        X, Y, Z = jets.seed_point(x, 1)
        J = (X * Y).exp() * Z.sin() / (X * X + 1.0) + Z.log() * Y ** 3
        deriv = max(deriv, float(np.max(np.abs(J.gradient() - fd(f, x)))))
    A0, B = rng.standard_normal((4, 4)), rng.standard_normal((4, 4, 2))
    det = 0.0
    for _ in range(20):
        x = tuple(rng.uniform(-1, 1, 2))
        X, Y = jets.seed_point(x, 1)
        Mj = [[X * B[i, j, 0] + Y.sin() * B[i, j, 1] + A0[i, j] for j in range(4)] for i in range(4)]
        d = jets.jet_det(Mj).gradient()
        ref = fd(lambda v: np.linalg.det(A0 + B[..., 0] * v[0] + B[..., 1] * np.sin(v[1])), x)
        det = max(det, float(np.max(np.abs(d - ref))))
    ok = ring < 1e-14 and deriv < 1e-6 and det < 1e-5
    acceptance(13, ok, f"ring axioms {ring:.1e} (scaled; absolute {ring_abs:.1e}); first derivatives vs FD {deriv:.1e}; det derivative {det:.1e}")


def _random_multivector(A, deg, rng, cls=Multivector):
    terms = lambda: " + ".join(f"{rng.uniform(-1, 1):.6f}*{c}*{d}" for c, d in  # noqa: E731
                               zip(A.coords, A.coords[1:] + A.coords[:1])) + f" + {rng.uniform(-1, 1):.6f}"
    return cls(A, deg, {I: terms().replace("+ -", "- ") for I in itertools.combinations(range(A.rank), deg)})


def test_criterion_14_gerstenhaber(acceptance):
    pn = toda.toda_algebroid(2)
    A = pn.algebroid
    rng = np.random.default_rng(SEED)
    pts = A.sample_points(3, SEED)
    comm = der = jac = d2 = dpi2 = 0.0
    for p, q, r in ((1, 1, 1), (1, 2, 1), (2, 2, 1), (2, 1, 2), (0, 2, 1), (3, 1, 1)):
        P, Q, R = (_random_multivector(A, k, rng) for k in (p, q, r))
        sc = schouten(P, Q) - schouten(Q, P) * float(-((-1) ** ((p - 1) * (q - 1))))
        dv = schouten(P, wedge(Q, R)) - wedge(schouten(P, Q), R) - wedge(Q, schouten(P, R)) * float((-1) ** ((p - 1) * q))
        jc = (schouten(P, schouten(Q, R)) * float((-1) ** ((p - 1) * (r - 1)))
              + schouten(Q, schouten(R, P)) * float((-1) ** ((q - 1) * (p - 1)))
              + schouten(R, schouten(P, Q)) * float((-1) ** ((r - 1) * (q - 1))))
        for x in pts:
            comm, der, jac = max(comm, sc.max_abs(x)), max(der, dv.max_abs(x)), max(jac, jc.max_abs(x))
    for k in (0, 1, 2):
        w = _random_multivector(A, k, rng, AForm)
        dd = differential(differential(w))
        T = _random_multivector(A, k, rng)
        pp = d_pi(pn.pi, d_pi(pn.pi, T))
        for x in pts:
            d2, dpi2 = max(d2, dd.max_abs(x)), max(dpi2, pp.max_abs(x))
    ok = max(comm, der, jac) < 1e-9 and max(d2, dpi2) < 1e-10
    acceptance(14, ok, f"super-commutation {comm:.1e}, derivation {der:.1e}, Jacobi {jac:.1e}; "
               f"d_A^2 {d2:.1e}, d_pi^2 {dpi2:.1e}")
