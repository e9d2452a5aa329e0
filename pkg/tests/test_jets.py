import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pnalgebroid import jets
from pnalgebroid.jets import Jet

finite = st.floats(-2, 2, allow_nan=False)


def rand_jet(rng, n=3, K=3, shape=()):
    sp = jets.space(n, K)
    return Jet(sp, rng.standard_normal(shape + (sp.size,)))


def fd_grad(f, x, h=1e-6):
    x = np.asarray(x, float)
    g = []
    for u in range(len(x)):
        e = np.zeros_like(x)
        e[u] = h
        g.append((f(x + e) - f(x - e)) / (2 * h))
    return np.array(g)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_ring_axioms(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (rand_jet(rng) for _ in range(3))
    one = a.space.constant(1.0)
    for lhs, rhs in [
        (a * b, b * a),
        ((a * b) * c, a * (b * c)),
        (a * (b + c), a * b + a * c),
        (a + (b + c), (a + b) + c),
        (a * one, a),
        (a - a, a.space.constant(0.0)),
    ]:
        assert np.max(np.abs((lhs - rhs).c)) < 1e-14 * max(1.0, np.max(np.abs(lhs.c)))


@settings(max_examples=30, deadline=None)
@given(finite, finite, st.floats(0.3, 2))
def test_first_derivatives_match_finite_differences(x, y, z):
    def f(v):
        return math.exp(v[0] * v[1]) * math.sin(v[2]) / (1 + v[0] ** 2) + math.log(v[2]) * v[1] ** 3

    X, Y, Z = jets.seed_point((x, y, z), 2)
    J = (X * Y).exp() * Z.sin() / (X * X + 1.0) + Z.log() * Y ** 3
    assert J.value == pytest.approx(f((x, y, z)), rel=1e-13, abs=1e-13)
    assert np.max(np.abs(J.gradient() - fd_grad(f, (x, y, z)))) < 1e-6


def test_second_derivatives_are_derivative_valued():
    X, Y = jets.seed_point((0.7, -0.4), 3)
    J = X ** 2 * Y ** 3
    # d^2/dx dy = 6 x y^2, d^3/dy^3 = 6 x^2
    assert J.coefficient((1, 1)) == pytest.approx(6 * 0.7 * 0.16)
    assert J.coefficient((0, 3)) == pytest.approx(6 * 0.49)


def test_det_derivative_vs_finite_differences(rng):
    A0 = rng.standard_normal((4, 4))
    B = rng.standard_normal((4, 4, 2))

    def M(x):
        return A0 + B[..., 0] * x[0] + B[..., 1] * np.sin(x[1])

    x0 = (0.3, -0.2)
    X, Y = jets.seed_point(x0, 2)
    Mj = [[X * B[i, j, 0] + Y.sin() * B[i, j, 1] + A0[i, j] for j in range(4)] for i in range(4)]
    d = jets.jet_det(Mj)
    assert d.value == pytest.approx(np.linalg.det(M(np.array(x0))), rel=1e-12)
    assert np.max(np.abs(d.gradient() - fd_grad(lambda v: np.linalg.det(M(v)), x0))) < 1e-5


def test_solve_and_inverse_roundtrip(rng):
    sp = jets.space(3, 3)
    M = Jet(sp, rng.standard_normal((5, 5, sp.size)))
    M.c[..., 0] += 5 * np.eye(5)
    B = Jet(sp, rng.standard_normal((5, 2, sp.size)))
    X = jets.jet_linear_solve(M, B)
    assert np.max(np.abs((jets.matmul(M, X) - B).c)) < 1e-12
    Minv = jets.jet_inverse(M)
    assert np.max(np.abs((jets.matmul(Minv, M) - jets.identity(5, 3, 3)).c)) < 1e-12


def test_degenerate_solve_raises():
    sp = jets.space(1, 1)
    M = Jet(sp, np.zeros((2, 2, sp.size)))
    with pytest.raises(jets.DegenerateEndomorphismError):
        jets.jet_linear_solve(M, Jet(sp, np.ones((2, sp.size))))


def test_singular_evaluations():
    X, = jets.seed_point((0.0,), 2)
    with pytest.raises(jets.SingularEvaluationError):
        _ = 1.0 / X
    with pytest.raises(jets.SingularEvaluationError):
        X.log()


@pytest.mark.parametrize("backend", ["python", "cython"])
def test_backends_agree(rng, backend):
    a, b = rand_jet(rng, 4, 3, (7,)), rand_jet(rng, 4, 3, (7,))
    M = rand_jet(rng, 4, 3, (4, 4))
    M.c[..., 0] += 4 * np.eye(4)
    ref = jets.BACKEND
    try:
        jets.use_backend(backend)
        got = [(a * b).c, (1.0 / (a + 5.0)).c, jets.matmul(M, M).c, jets.jet_linear_solve(M, M).c]
        jets.use_backend("python")
        want = [(a * b).c, (1.0 / (a + 5.0)).c, jets.matmul(M, M).c, jets.jet_linear_solve(M, M).c]
    finally:
        jets.use_backend(ref)
    for g, w in zip(got, want):
        assert np.max(np.abs(g - w)) < 1e-12


def test_einsum2_matches_matmul(rng):
    A, B = rand_jet(rng, 2, 2, (3, 4)), rand_jet(rng, 2, 2, (4, 5))
    assert np.max(np.abs((jets.einsum2("ia,ak->ik", A, B) - jets.matmul(A, B)).c)) < 1e-13


def test_drop_variable_restricts_to_slice():
    x, y, z = 0.3, 0.0, -0.5
    X, Y, Z = jets.seed_point((x, y, z), 3)
    J = (X * Y + Z * Z).exp() + Y * X ** 2
    low = jets.drop_variable(J, 1)
    X2, Z2 = jets.seed_point((x, z), 3)
    ref = (Z2 * Z2).exp() + 0.0 * X2
    assert np.max(np.abs(low.c - ref.c)) < 1e-14


def test_truncate_and_embed():
    X, Y = jets.seed_point((1.0, 2.0), 4)
    J = (X * Y).sin()
    assert np.array_equal(J.truncate(2).c, J.c[: jets.space(2, 2).size])
    assert J.deriv(0).order == 3
