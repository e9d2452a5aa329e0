import itertools

import numpy as np
import pytest

from pnalgebroid.algebroid import (
    LieAlgebroid,
    differential,
    differential_invariant,
    evaluate_form,
    lie_derivative,
    schouten,
    section_bracket,
    lie_algebra,
    validate_axioms,
)
from pnalgebroid.exterior import AForm, Multivector, dual_frame_form, frame_section, function_form, one_form


@pytest.mark.parametrize("fixture", ["plane", "aff2", "sl2", "varying"])
def test_axioms_hold(request, fixture):
    A = request.getfixturevalue(fixture)
    assert validate_axioms(A, 10).passed


def test_corrupted_structure_fails_jacobi():
    # sl2 constants with one entry flipped
    bad = lie_algebra({(0, 1): [1, 0, 0], (0, 2): [0, 2, 0], (1, 2): [0, 0, 3]}, name="bad")
    rep = validate_axioms(bad, 3)
    assert not rep.passed
    assert rep.max_residual() == pytest.approx(4.0)


def test_broken_anchor_fails_homomorphism(sl2):
    bad = LieAlgebroid("bad", sl2.coords, sl2.frame, {(0, 1): [1, 0, 0], (0, 2): [0, 2, 0], (1, 2): [0, 0, 1]},
                       [["1", "0"], ["x", "y"], ["x^2", "x*y"]], dict(sl2.domain))
    assert not validate_axioms(bad, 5).passed


def test_tangent_bracket_is_vector_field_bracket(plane):
    X = plane.section(["q1*q2", "1"])
    Y = plane.section(["q2", "q1^2"])
    x = (1.3, 0.4)
    q1, q2 = x
    # [X, Y]^u = X(Y^u) - Y(X^u)
    expected = [q1 * q2 * 0 + 1 * 1 - (q2 * q2 + q1**2 * q1), q1 * q2 * 2 * q1 - 0]
    got = section_bracket(X, Y).values(x)
    assert got[(0,)] == pytest.approx(expected[0])
    assert got[(1,)] == pytest.approx(expected[1])


@pytest.mark.parametrize("fixture", ["aff2", "sl2", "varying"])
def test_d_squared_vanishes(request, fixture, rng):
    A = request.getfixturevalue(fixture)
    x = A.sample_points(1, 7)[0]
    terms = {0: ["2", "1", "3"], 1: ["x", "1", "x*x"], 2: ["x*y", "y", "x - y^2"]}[A.n]
    f = function_form(A, "x^3 + x" if A.n else "1")
    assert differential(differential(f)).max_abs(x) < 1e-12
    w = one_form(A, (terms * 2)[: A.rank])
    assert differential(differential(w)).max_abs(x) < 1e-12


def test_differential_matches_invariant_formula(sl2):
    w = AForm(sl2, 1, {(0,): "x*y", (1,): "y", (2,): "x^2"})
    X = [sl2.section(["1", "x", "0"]), sl2.section(["y", "0", "1"])]
    x = (0.2, 1.1)
    a = evaluate_form(differential(w), X, x, 1)
    b = differential_invariant(w, X, x, 1)
    assert np.allclose(a.c, b.c)


def test_lie_derivative_of_dual_frame(aff2):
    e1 = frame_section(aff2, 0)
    L = lie_derivative(e1, dual_frame_form(aff2, 1))
    assert L.values(())[(1,)] == pytest.approx(-1.0)
    assert L.values(()).get((0,), 0.0) == 0.0


def test_cartan_formula_on_two_forms(sl2):
    X = sl2.section(["x", "1", "y"])
    Y = sl2.section(["1", "y", "0"])
    w = AForm(sl2, 2, {(0, 1): "x", (1, 2): "y*y", (0, 2): "1"})
    x = (0.3, 0.9)
    # L_X i_Y - i_Y L_X = i_[X,Y]
    from pnalgebroid.exterior import interior

    lhs = lie_derivative(X, interior(Y, w)) - interior(Y, lie_derivative(X, w))
    rhs = interior(section_bracket(X, Y), w)
    assert (lhs - rhs).max_abs(x) < 1e-12


def test_schouten_on_sections_is_bracket(sl2):
    X = sl2.section(["x", "1", "y"])
    Y = sl2.section(["1", "y", "x"])
    x = (0.1, 0.7)
    assert (schouten(X, Y) - section_bracket(X, Y)).max_abs(x) < 1e-14


def _mv(A, deg, seed):
    rng = np.random.default_rng(seed)
    return Multivector(A, deg, {I: f"{rng.uniform(-1, 1):.4f}*x + {rng.uniform(-1, 1):.4f}*y*y"
                                for I in itertools.combinations(range(A.rank), deg)})


@pytest.mark.parametrize("p,q", [(1, 2), (2, 2), (2, 1), (0, 2)])
def test_schouten_graded_antisymmetry(sl2, p, q):
    P, Q = _mv(sl2, p, p), _mv(sl2, q, 10 + q)
    x = (0.4, 0.8)
    s = -((-1) ** ((p - 1) * (q - 1)))
    assert (schouten(P, Q) - schouten(Q, P) * float(s)).max_abs(x) < 1e-13


def test_schouten_graded_jacobi(sl2):
    P, Q, R = _mv(sl2, 1, 1), _mv(sl2, 2, 2), _mv(sl2, 1, 3)
    x = (0.2, 1.2)
    p, q, r = 1, 2, 1
    # (-1)^{(p-1)(r-1)} [P,[Q,R]] + cyclic = 0
    tot = (schouten(P, schouten(Q, R)) * float((-1) ** ((p - 1) * (r - 1)))
           + schouten(Q, schouten(R, P)) * float((-1) ** ((q - 1) * (p - 1)))
           + schouten(R, schouten(P, Q)) * float((-1) ** ((r - 1) * (q - 1))))
    assert tot.max_abs(x) < 1e-12


def test_schouten_is_biderivation(sl2):
    P, Q, R = _mv(sl2, 1, 4), _mv(sl2, 1, 5), _mv(sl2, 1, 6)
    from pnalgebroid.exterior import wedge

    x = (0.5, 0.6)
    # [P, Q ^ R] = [P, Q] ^ R + Q ^ [P, R] for a section P
    lhs = schouten(P, wedge(Q, R))
    rhs = wedge(schouten(P, Q), R) + wedge(Q, schouten(P, R))
    assert (lhs - rhs).max_abs(x) < 1e-13


def test_mismatched_anchor_rejected():
    with pytest.raises(ValueError):
        LieAlgebroid("bad", ["x"], ["e1"], {}, [["1", "0"]])
