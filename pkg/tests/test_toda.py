import numpy as np
import pytest

from pnalgebroid import toda
from pnalgebroid.exterior import EndomorphismField, skew_array


def jacobian(q, chart):
    """d(a, b)/d(q, p) for the extended charts."""
    n = len(q)
    J = np.zeros((2 * n, 2 * n))
    for i in range(n - 1):
        a = np.exp(q[i] - q[i + 1])
        J[i, i], J[i, i + 1] = a, -a
    J[n - 1, n - 1] = np.exp(q[-1]) if chart == "exp" else 1.0
    J[n:, n:] = np.eye(n)
    return J


def pushforward_residual(n, chart, points):
    phys = toda.toda_physical(n)
    pair = toda.toda_extended_flaschka(n, chart)
    worst = 0.0
    for x in points:
        q = np.array(x[:n])
        J = jacobian(q, chart)
        y = toda.flaschka_map(x[:n], x[n:], chart)
        for P, Q in ((phys.pi, pair.pi0), (phys.pi1, pair.pi1)):
            lhs = J @ skew_array(P, x, 0).c[..., 0] @ J.T
            worst = max(worst, float(np.max(np.abs(lhs - skew_array(Q, y, 0).c[..., 0]))))
    return worst


def test_origin_oracle(toda_phys2):
    x = (0.0,) * 4
    N = toda_phys2.N
    assert np.array_equal(N.matrix(x), [[0, 0, 0, 1], [0, 0, -1, 0], [0, -1, 0, 0], [1, 0, 0, 0]])
    assert N.trace()(x) == 0.0
    assert N.power(2).trace()(x) == pytest.approx(4.0, abs=1e-12)
    assert N.det()(x) == pytest.approx(1.0, abs=1e-12)
    assert toda_phys2.hamiltonian(x) == pytest.approx(1.0)


@pytest.mark.parametrize("n", [2, 3])
def test_bihamiltonian(n):
    pn = toda.toda_physical(n)
    assert toda.bihamiltonian_residual(pn, pn.sample_points(5)) < 1e-12


def test_multi_hamiltonian_needs_the_half(toda_phys3_box):
    pts = toda_phys3_box.sample_points(4, 5)
    assert toda.toda_multi_check(toda_phys3_box, 0, pts).passed
    neg = toda.toda_multi_check(toda_phys3_box, 0, pts, half=False)
    assert neg.passed  # "gt" mode: the unhalved identity must fail by > 1e-3
    assert neg.max_residual > 1e-3


def test_physical_domain_override():
    pn = toda.toda_physical(3, domain=toda.DET_POSITIVE_BOX_3)
    for x in pn.sample_points(10):
        assert pn.N.det()(x) > 0


def test_flaschka_map():
    q, p = (0.5, 0.2, -0.1), (1.0, 2.0, 3.0)
    a1, a2 = np.exp(0.3), np.exp(0.3)
    assert toda.flaschka_map(q, p, None) == pytest.approx((a1, a2, 1.0, 2.0, 3.0))
    assert toda.flaschka_map(q, p, "exp")[2] == pytest.approx(np.exp(-0.1))
    assert toda.flaschka_map(q, p, "linear")[2] == pytest.approx(-0.1)
    with pytest.raises(ValueError):
        toda.flaschka_map(q, p, "polar")


@pytest.mark.parametrize("chart,expected", [("exp", True), ("linear", True), ("listed", False)])
def test_pushforward_of_physical_tensors(chart, expected, rng):
    pts = [tuple(rng.uniform(-1, 1, 6)) for _ in range(4)]
    assert (pushforward_residual(3, chart, pts) < 1e-10) is expected


@pytest.mark.parametrize("chart,poisson", [("exp", (True, True)), ("linear", (True, True)), ("listed", (True, False))])
def test_extended_tensors_poisson(chart, poisson):
    from pnalgebroid.poisson import is_poisson

    pair = toda.toda_extended_flaschka(3, chart)
    pts = pair.algebroid.sample_points(4, 2)
    assert (is_poisson(pair.pi0, pts).passed, is_poisson(pair.pi1, pts).passed) == poisson


def test_involution_is_poisson_only_in_exp_chart():
    for chart, ok in (("exp", True), ("linear", False), ("listed", False)):
        pair = toda.toda_extended_flaschka(3, chart)
        res = max(toda.involution_residual(pair, x) for x in pair.algebroid.sample_points(5, 3))
        assert (res < 1e-12) is ok, (chart, res)
    assert toda.involution((1, 2, 3, 4, 5, 6), 3) == (1, 2, -3, 4, 5, 6)


def test_extended_recursion_does_not_preserve_hyperplanes():
    for chart in ("exp", "linear"):
        pair = toda.toda_extended_flaschka(3, chart)
        assert toda.hyperplane_invariance_defect(pair, (0.7, 1.1, 0.9, 0.2, -0.3, 0.5)) > 1e-3


@pytest.mark.parametrize("n", [2, 3, 4])
def test_reduced_tensors_match_hand_table(n):
    red = toda.toda_flaschka_reduced(n)
    e0, e1 = toda.flaschka_brackets(n)
    A = red.algebroid
    ref0, ref1 = toda._bivector(A, e0, "r0"), toda._bivector(A, e1, "r1")
    for x in A.sample_points(3):
        assert (red.pi0 - ref0).max_abs(x) == 0.0
        assert (red.pi1 - ref1).max_abs(x) < 1e-15
        assert toda.reduced_rank(red, x) == 2 * n - 2


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_closed_form_recursion(n):
    pn = toda.toda_algebroid(n)
    A = pn.algebroid
    table = EndomorphismField(A, toda.algebroid_recursion_entries(n))
    for x in A.sample_points(3, n):
        assert np.allclose(pn.N.at(x, 1).c, pn.N_solved.at(x, 1).c, atol=1e-11)
        assert np.allclose(table.at(x, 1).c, pn.N.at(x, 1).c, atol=1e-12)


def test_closed_form_survives_small_a():
    pn = toda.toda_algebroid(3)
    x = (1e-13, 2e-13, 0.3, -0.2, 0.1)
    E = pn.N.matrix(x)
    assert np.all(np.isfinite(E))
    Pi0 = skew_array(pn.pi, x, 0).c[..., 0]
    Pi1 = skew_array(pn.pi1, x, 0).c[..., 0]
    assert np.max(np.abs(Pi0 @ E - Pi1)) < 1e-12


@pytest.mark.parametrize("n", [2, 3])
def test_covered_equals_reduced(n):
    pn = toda.toda_algebroid(n)
    red = toda.toda_flaschka_reduced(n)
    assert toda.covered_equals_reduced(pn, red, pn.sample_points(10)) < 1e-12


def test_traces_agree_at_mapped_points(toda_alg3):
    phys = toda.toda_physical(3)
    for x in phys.sample_points(4, 8):
        y = toda.algebroid_point(x[:3], x[3:])
        for k in (1, 2, 3):
            assert toda_alg3.N.power(k).trace()(y) == pytest.approx(phys.N.power(k).trace()(x), abs=1e-10)


@pytest.mark.parametrize("name,kind", [("toda-physical-2", "physical"), ("toda-flaschka-3", "flaschka"),
                                       ("toda-extended-2", "extended"), ("toda-algebroid-2", "algebroid")])
def test_example_registry(name, kind):
    ex = toda.example(name)
    assert ex.kind == kind and ex.algebroid is ex.obj.algebroid


@pytest.mark.parametrize("name", ["toda-physical-1", "toda-foo-2", "lattice", "toda-physical-x"])
def test_unknown_example(name):
    with pytest.raises(KeyError):
        toda.example(name)
