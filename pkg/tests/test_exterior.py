import numpy as np
import pytest

from pnalgebroid.exterior import (
    AForm,
    EndomorphismField,
    Multivector,
    interior,
    merge_sign,
    one_form,
    pairing,
    rebase,
    section,
    skew_array,
    skewness_residual,
    sort_sign,
    wedge,
)


def rand_form(A, deg, rng, cls=AForm):
    from itertools import combinations

    coeffs = {I: f"{rng.uniform(-1, 1):.5f} + {rng.uniform(-1, 1):.5f}*x*y" for I in combinations(range(A.rank), deg)}
    return cls(A, deg, coeffs)


def test_sort_and_merge_sign():
    assert sort_sign((2, 0, 1)) == (1, (0, 1, 2))
    assert sort_sign((1, 0)) == (-1, (0, 1))
    assert sort_sign((1, 1)) == (0, None)
    assert merge_sign((1,), (0, 2)) == (-1, (0, 1, 2))
    assert merge_sign((0,), (0,)) == (0, None)


def test_coefficients_antisymmetrize(sl2):
    P = Multivector(sl2, 2, {(1, 0): "x"})
    x = (0.3, 1.1)
    assert P.values(x) == {(0, 1): pytest.approx(-0.3)}
    assert P.coeff((1, 0))(x) == pytest.approx(0.3)


@pytest.mark.parametrize("p,q", [(1, 1), (1, 2), (2, 1), (0, 2)])
def test_wedge_graded_commutative(sl2, rng, p, q):
    a, b = rand_form(sl2, p, rng), rand_form(sl2, q, rng)
    x = (0.2, 0.9)
    d = wedge(a, b) - wedge(b, a) * float((-1) ** (p * q))
    assert d.max_abs(x) < 1e-15


def test_wedge_associative_and_overflow(sl2, rng):
    a, b, c = (rand_form(sl2, 1, rng) for _ in range(3))
    x = (0.4, 0.7)
    assert (wedge(wedge(a, b), c) - wedge(a, wedge(b, c))).max_abs(x) < 1e-15
    assert wedge(wedge(a, b), rand_form(sl2, 2, rng)).max_abs(x) == 0.0


def test_interior_is_antiderivation(sl2, rng):
    X = section(sl2, ["x", "1", "y"])
    a, b = rand_form(sl2, 1, rng), rand_form(sl2, 2, rng)
    x = (0.3, 0.8)
    lhs = interior(X, wedge(a, b))
    rhs = wedge(interior(X, a), b) - wedge(a, interior(X, b))
    assert (lhs - rhs).max_abs(x) < 1e-15


def test_pairing_matches_interior(sl2, rng):
    X, Y = section(sl2, ["x", "1", "0.5"]), section(sl2, ["y", "-1", "x*y"])
    om = rand_form(sl2, 2, rng)
    x = (0.3, 0.8)
    direct = interior(Y, interior(X, om)).values(x)[()]
    via = pairing(om, wedge(X, Y), x).value
    assert direct == pytest.approx(via)


def test_endomorphism_dual_is_adjoint(sl2, rng):
    N = EndomorphismField(sl2, [["x", "1", "0"], ["0", "y", "x"], ["1", "0", "2"]])
    X = section(sl2, ["1", "x", "y"])
    w = one_form(sl2, ["y", "2", "x*x"])
    x = (0.6, 1.2)
    assert pairing(N.dual_apply(w), X, x).value == pytest.approx(pairing(w, N.apply(X), x).value)
    # on 2-forms the minors give omega(NX, NY)
    om = rand_form(sl2, 2, rng)
    Y = section(sl2, ["y", "0", "1"])
    lhs = pairing(N.dual_apply(om), wedge(X, Y), x).value
    rhs = pairing(om, wedge(N.apply(X), N.apply(Y)), x).value
    assert lhs == pytest.approx(rhs)


def test_endomorphism_algebra(sl2):
    N = EndomorphismField(sl2, [["x", "1", "0"], ["0", "y", "x"], ["1", "0", "2"]])
    x = (0.6, 1.2)
    E = N.matrix(x)
    assert N.trace()(x) == pytest.approx(np.trace(E))
    assert N.det()(x) == pytest.approx(np.linalg.det(E))
    assert np.allclose(N.power(3).matrix(x), E @ E @ E)
    assert np.allclose(N.power(-2).matrix(x), np.linalg.inv(E @ E))
    assert np.allclose(N.shift(2.5).matrix(x), E + 2.5 * np.eye(3))
    M = EndomorphismField(sl2, [["1", "0", "y"], ["0", "1", "0"], ["x", "0", "1"]])
    X = section(sl2, ["1", "x", "y"])
    assert (N.compose(M).apply(X) - N.apply(M.apply(X))).max_abs(x) < 1e-14


def test_apply_bivector_and_skewness(sl2):
    pi = Multivector(sl2, 2, {(0, 1): "x", (1, 2): "1"})
    I = EndomorphismField.identity(sl2, 3.0)
    x = (0.1, 0.9)
    assert skewness_residual(I, pi, x) == 0.0
    assert np.allclose(skew_array(I.apply_bivector(pi), x, 0).c[..., 0], 3 * skew_array(pi, x, 0).c[..., 0])
    N = EndomorphismField(sl2, [["1", "1", "0"], ["0", "1", "0"], ["0", "0", "1"]])
    assert skewness_residual(N, pi, x) > 0.1


def test_rebase_keeps_coefficients(sl2, varying):
    from pnalgebroid.algebroid import LieAlgebroid

    twin = LieAlgebroid("twin", sl2.coords, sl2.frame, {}, [[0, 0]] * 3)
    w = one_form(sl2, ["x", "y", "1"])
    assert rebase(w, twin).values((0.2, 0.3)) == w.values((0.2, 0.3))
    with pytest.raises(ValueError):
        rebase(w, varying)


def test_mixed_algebroid_operations_rejected(sl2, varying):
    with pytest.raises(ValueError):
        section(sl2, ["1", "0", "0"]) + section(varying, ["1", "0"])
