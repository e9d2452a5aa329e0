"""The A_n Toda lattice in physical, Flaschka, extended Flaschka and algebroid form.

Indices in docstrings are 1-based like the usual Toda notation; frame and
coordinate positions in code are 0-based.

Extended Flaschka charts
------------------------
``chart="exp"`` (default) uses ``a_n = exp(q_n)``.  Every bracket then has
the uniform form ``{a_i, b_i}_0 = a_i`` for ``i = 1..n``, the hyperplane
``a_n = 0`` is a Poisson submanifold and ``a_n -> -a_n`` is a Poisson map.
``chart="linear"`` uses ``a_n = q_n`` and is the exact push-forward of the
physical tensors; there the sign flip of ``a_n`` is not a Poisson map.
``chart="listed"`` takes the mixed bracket list with ``{a_n, b_n}_0 = 1`` and
``{a_{n-1}, a_n}_1 = -a_{n-1} a_n``, kept for comparison.
All three restrict to the same reduced Flaschka tensors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import jets
from .algebroid import LieAlgebroid, tangent_algebroid
from .exterior import EndomorphismField, FunctionField, Multivector, skew_array
from .jets import Jet
from .poisson import PNStructure, covered_poisson, sharp
from .report import Report, collect

PHYSICAL_DOMAIN = (-1.0, 1.0)
FLASCHKA_A = (0.2, 2.0)
FLASCHKA_B = (-1.0, 1.0)

#: sample box on which det N > 0 for the physical lattice with n = 3
DET_POSITIVE_BOX_3 = {"q1": (-2.0, -1.5), "q2": (-0.25, 0.25), "q3": (1.5, 2.0),
                      "p1": (1.5, 2.0), "p2": (1.5, 2.0), "p3": (1.5, 2.0)}


def _require_n(n):
    if int(n) != n or n < 2:
        raise ValueError("the Toda lattice needs n >= 2")
    return int(n)


def _bivector(A, entries, label):
    """Bivector from ``{(name_i, name_j): expr}`` using frame-or-coordinate names."""
    idx = {name: k for k, name in enumerate(A.coords)} if A.frame == tuple(f"d{c}" for c in A.coords) else {}
    idx.update({name: k for k, name in enumerate(A.frame)})
    return Multivector(A, 2, {(idx[a], idx[b]): v for (a, b), v in entries.items()}, label=label)


# -- physical coordinates ---------------------------------------------------


def physical_names(n):
    return [f"q{i}" for i in range(1, n + 1)] + [f"p{i}" for i in range(1, n + 1)]


def physical_hamiltonian(n):
    """``sum p_i^2 / 2 + sum exp(q_i - q_{i+1})`` as expression text."""
    kin = " + ".join(f"p{i}^2/2" for i in range(1, n + 1))
    pot = " + ".join(f"exp(q{i} - q{i + 1})" for i in range(1, n))
    return f"{kin} + {pot}"


def toda_physical(n, domain=None):
    """PN structure of the physical lattice on ``T R^(2n)``.

    ``pi0`` is canonical, ``pi1`` has ``{q_i, q_j} = -1`` (``i < j``),
    ``{q_i, p_i} = p_i`` and ``{p_i, p_(i+1)} = -exp(q_i - q_(i+1))``.
    ``N`` solves ``Pi0 E = Pi1``; since ``Pi0`` is constant this is an
    explicit product with ``Pi0^-1``.
    """
    n = _require_n(n)
    coords = physical_names(n)
    box = {c: PHYSICAL_DOMAIN for c in coords}
    box.update(domain or {})
    A = tangent_algebroid(coords, box, name=f"toda-physical-{n}")
    pi0 = _bivector(A, {(f"q{i}", f"p{i}"): 1.0 for i in range(1, n + 1)}, "pi0")
    e1 = {}
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            e1[(f"q{i}", f"q{j}")] = -1.0
        e1[(f"q{i}", f"p{i}")] = f"p{i}"
    for i in range(1, n):
        e1[(f"p{i}", f"p{i + 1}")] = f"-exp(q{i} - q{i + 1})"
    pi1 = _bivector(A, e1, "pi1")
    P0 = skew_array(pi0, (0.0,) * (2 * n), 0).c[..., 0]
    P0inv = np.linalg.inv(P0)

    def ev(x, K):
        P1 = skew_array(pi1, x, K)
        return Jet(P1.space, np.einsum("ij,jkm->ikm", P0inv, P1.c))

    N = EndomorphismField(A, evaluator=ev, label="N")
    pn = PNStructure(A, pi0, N, name=f"toda-physical-{n}")
    pn.pi1 = pi1
    pn.hamiltonian = A.field(physical_hamiltonian(n))
    pn.hamiltonian.label = "H"
    pn.momentum = A.field(" + ".join(f"p{i}" for i in range(1, n + 1)))
    pn.momentum.label = "P"
    return pn


def bihamiltonian_residual(pn, points):
    """``pi0# dH = pi1# dP`` for the physical lattice."""
    from .algebroid import differential
    from .exterior import function_form

    A = pn.algebroid
    lhs = sharp(pn.pi, differential(function_form(A, pn.hamiltonian)))
    rhs = sharp(pn.pi1, differential(function_form(A, pn.momentum)))
    d = lhs - rhs
    return max((d.max_abs(x) for x in points), default=0.0)


def toda_multi_check(pn, j, points, half=True, tolerance=1e-8, seed=None):
    """``pi_j# dH = pi_(j+2)# d h0`` with ``h0 = (1/2) ln det N`` (or without the 1/2)."""
    from .algebroid import differential
    from .exterior import function_form

    A = pn.algebroid
    points = list(points)
    scale = 0.5 if half else 1.0
    ldet = pn.N.det().log()
    h0 = FunctionField(lambda x, K: ldet.jet(x, K) * scale, "h0")
    lhs = sharp(pn.pi_k(j), differential(function_form(A, pn.hamiltonian)))
    rhs = sharp(pn.pi_k(j + 2), differential(function_form(A, h0)))
    d = lhs - rhs
    name = f"pi_{j}# dH = pi_{j + 2}# d({'1/2 ' if half else ''}ln det N) on {pn.name}"
    return collect(name, (d.max_abs(x) for x in points), tolerance, len(points), seed, mode="le" if half else "gt",
                   detail="" if half else "negative control")


# -- Flaschka coordinates -----------------------------------------------------


def flaschka_names(n):
    return [f"a{i}" for i in range(1, n)] + [f"b{i}" for i in range(1, n + 1)]


def extended_names(n):
    return [f"a{i}" for i in range(1, n + 1)] + [f"b{i}" for i in range(1, n + 1)]


def flaschka_map(q, p, chart="exp"):
    """``(q, p) -> (a_1..a_(n-1), [a_n,] b)``; ``chart=None`` gives the reduced coordinates."""
    q = list(map(float, q))
    a = [math.exp(q[i] - q[i + 1]) for i in range(len(q) - 1)]
    if chart == "exp":
        a.append(math.exp(q[-1]))
    elif chart in ("linear", "listed"):
        a.append(q[-1])
    elif chart is not None:
        raise ValueError(f"unknown chart {chart!r}")
    return tuple(a) + tuple(map(float, p))


@dataclass
class TensorPair:
    """Two Poisson tensors on one coordinate space, plus optional extras."""

    name: str
    algebroid: LieAlgebroid
    pi0: Multivector
    pi1: Multivector
    chart: str | None = None
    extras: dict = field(default_factory=dict)

    @property
    def coords(self):
        return self.algebroid.coords


def toda_extended_flaschka(n, chart="exp"):
    """The two lattice tensors in extended Flaschka coordinates ``(a_1..a_n, b_1..b_n)``."""
    n = _require_n(n)
    coords = extended_names(n)
    box = {c: (FLASCHKA_A if c.startswith("a") else FLASCHKA_B) for c in coords}
    A = tangent_algebroid(coords, box, name=f"toda-extended-{n}")
    e0, e1 = {}, {}
    for i in range(1, n):
        e0[(f"a{i}", f"b{i}")] = f"a{i}"
        e0[(f"a{i}", f"b{i + 1}")] = f"-a{i}"
        e1[(f"a{i}", f"b{i}")] = f"a{i}*b{i}"
        e1[(f"a{i}", f"b{i + 1}")] = f"-a{i}*b{i + 1}"
        e1[(f"b{i}", f"b{i + 1}")] = f"-a{i}"
    for i in range(1, n - 1):
        e1[(f"a{i}", f"a{i + 1}")] = f"-a{i}*a{i + 1}"
    if chart == "exp":
        e0[(f"a{n}", f"b{n}")] = f"a{n}"
        e1[(f"a{n}", f"b{n}")] = f"a{n}*b{n}"
        e1[(f"a{n - 1}", f"a{n}")] = f"-a{n - 1}*a{n}"
    elif chart == "linear":
        e0[(f"a{n}", f"b{n}")] = 1.0
        e1[(f"a{n}", f"b{n}")] = f"b{n}"
        e1[(f"a{n - 1}", f"a{n}")] = f"-a{n - 1}"
    elif chart == "listed":
        e0[(f"a{n}", f"b{n}")] = 1.0
        e1[(f"a{n}", f"b{n}")] = f"b{n}"
        e1[(f"a{n - 1}", f"a{n}")] = f"-a{n - 1}*a{n}"
    else:
        raise ValueError(f"unknown chart {chart!r}")
    pi0 = _bivector(A, e0, "pi0")
    pi1 = _bivector(A, e1, "pi1")
    return TensorPair(f"toda-extended-{n}", A, pi0, pi1, chart)


def involution(point, n):
    """``phi``: flip the sign of ``a_n``."""
    x = list(point)
    x[n - 1] = -x[n - 1]
    return tuple(x)


def involution_residual(pair, point):
    """``|phi_* pi - pi o phi|`` at ``point`` for both tensors of ``pair``.

    ``phi`` is linear with Jacobian ``J = diag(1, .., -1, .., 1)``, so the
    push-forward table is ``J P(x) J^t`` compared with ``P(phi(x))``.
    """
    n = len(pair.coords) // 2
    Jd = np.ones(2 * n)
    Jd[n - 1] = -1.0
    worst = 0.0
    for pi in (pair.pi0, pair.pi1):
        P = skew_array(pi, point, 0).c[..., 0]
        Q = skew_array(pi, involution(point, n), 0).c[..., 0]
        worst = max(worst, float(np.max(np.abs(Jd[:, None] * P * Jd[None, :] - Q))))
    return worst


def extended_recursion(pair):
    """``N = pi1# o (pi0#)^-1`` in extended coordinates (jet solve, needs ``a_i != 0``)."""
    A = pair.algebroid

    def ev(x, K):
        return jets.jet_linear_solve(skew_array(pair.pi0, x, K), skew_array(pair.pi1, x, K))

    return EndomorphismField(A, evaluator=ev, label="N_ext")


def hyperplane_invariance_defect(pair, point):
    """Largest ``a_n`` component of ``N v`` over frame vectors ``v`` tangent to ``a_n = const``."""
    n = len(pair.coords) // 2
    E = extended_recursion(pair).matrix(point)
    return float(np.max(np.abs(np.delete(E[:, n - 1], n - 1))))


def _restricted(pi, A_red, n):
    """Restrict an extended bivector to ``a_n = 0`` and drop the ``a_n`` row and column."""
    keep = [k for k in range(2 * n) if k != n - 1]
    pos = {k: a for a, k in enumerate(keep)}

    def ev(x, K):
        xe = tuple(x[: n - 1]) + (0.0,) + tuple(x[n - 1 :])
        out = {}
        for (i, j), v in pi.at(xe, K).items():
            if i in pos and j in pos:
                out[(pos[i], pos[j])] = jets.drop_variable(v, n - 1)
        return out

    return Multivector(A_red, 2, evaluator=ev, label=f"{pi.label}bar")


def toda_flaschka_reduced(n, chart="exp"):
    """Reduced tensors on ``(a_1..a_(n-1), b_1..b_n)`` by restrict-and-delete."""
    n = _require_n(n)
    ext = toda_extended_flaschka(n, chart)
    coords = flaschka_names(n)
    box = {c: (FLASCHKA_A if c.startswith("a") else FLASCHKA_B) for c in coords}
    A = tangent_algebroid(coords, box, name=f"toda-flaschka-{n}")
    pair = TensorPair(f"toda-flaschka-{n}", A, _restricted(ext.pi0, A, n), _restricted(ext.pi1, A, n), chart)
    pair.extras["extended"] = ext
    return pair


def flaschka_brackets(n):
    """Hand-written reduced brackets, used as an independent table."""
    e0, e1 = {}, {}
    for i in range(1, n):
        e0[(f"a{i}", f"b{i}")] = f"a{i}"
        e0[(f"a{i}", f"b{i + 1}")] = f"-a{i}"
        e1[(f"a{i}", f"b{i}")] = f"a{i}*b{i}"
        e1[(f"a{i}", f"b{i + 1}")] = f"-a{i}*b{i + 1}"
        e1[(f"b{i}", f"b{i + 1}")] = f"-a{i}"
    for i in range(1, n - 1):
        e1[(f"a{i}", f"a{i + 1}")] = f"-a{i}*a{i + 1}"
    return e0, e1


# -- the Toda algebroid -------------------------------------------------------


def toda_algebroid(n, domain=None, method="closed"):
    """PN structure on ``A = R^(2n-1) x R^(2n)`` with frame ``e_1..e_n, f_1..f_n``.

    Brackets vanish; ``rho(e_i) = d/da_i`` (``i < n``), ``rho(e_n) = 0`` and
    ``rho(f_i) = d/db_i``.  ``N`` solves ``Pi0 E = Pi1``; ``method="solve"``
    does that over jets at each point, ``method="closed"`` (default) uses
    :func:`algebroid_recursion_entries`.  The solved field is always kept as
    ``pn.N_solved`` for cross-checks.
    """
    n = _require_n(n)
    coords = flaschka_names(n)
    frame = [f"e{i}" for i in range(1, n + 1)] + [f"f{i}" for i in range(1, n + 1)]
    box = {c: (FLASCHKA_A if c.startswith("a") else FLASCHKA_B) for c in coords}
    box.update(domain or {})
    r, dim = 2 * n, 2 * n - 1
    anchor = [[0.0] * dim for _ in range(r)]
    for i in range(n - 1):
        anchor[i][i] = 1.0
    for i in range(n):
        anchor[n + i][n - 1 + i] = 1.0
    A = LieAlgebroid(f"toda-algebroid-{n}", coords, frame, {}, anchor, box)
    e = lambda i: f"e{i}"  # noqa: E731
    f = lambda i: f"f{i}"  # noqa: E731
    t0, t1 = {}, {}
    for i in range(1, n):
        t0[(e(i), f(i))] = f"a{i}"
        t0[(e(i), f(i + 1))] = f"-a{i}"
        t1[(e(i), f(i))] = f"a{i}*b{i}"
        t1[(e(i), f(i + 1))] = f"-a{i}*b{i + 1}"
        t1[(f(i), f(i + 1))] = f"-a{i}"
    t0[(e(n), f(n))] = 1.0
    t1[(e(n), f(n))] = f"b{n}"
    for i in range(1, n - 1):
        t1[(e(i), e(i + 1))] = f"-a{i}*a{i + 1}"
    t1[(e(n - 1), e(n))] = f"-a{n - 1}"
    pi0 = _bivector(A, t0, "pi0")
    pi1 = _bivector(A, t1, "pi1")

    def ev(x, K):
        return jets.jet_linear_solve(skew_array(pi0, x, K), skew_array(pi1, x, K))

    solved = EndomorphismField(A, evaluator=ev, label="N")
    if method == "solve":
        N = solved
    elif method == "closed":
        N = EndomorphismField(A, evaluator=lambda x, K: _closed_recursion(n, x, K), label="N")
    else:
        raise ValueError(f"unknown method {method!r}")
    pn = PNStructure(A, pi0, N, name=f"toda-algebroid-{n}")
    pn.pi1 = pi1
    pn.N_solved = solved
    return pn


def _closed_recursion(n, x, K):
    """Jet array of :func:`algebroid_recursion_entries` built with a few array operations."""
    sp = jets.space(2 * n - 1, K)
    seeds = jets.stack(jets.seed_point(x, K))
    a = Jet(sp, np.concatenate([np.zeros((1, sp.size)), seeds.c[: n - 1], sp.constant(1.0).c[None]]))  # a_0..a_n
    b = seeds[n - 1 :]
    inv = Jet(sp, np.concatenate([(1.0 / seeds[: n - 1]).c, sp.constant(1.0).c[None]]))  # 1/a_1..1/a_n
    u = a[1:n] * (b[: n - 1] - b[1:])  # a_j (b_j - b_(j+1)), j < n
    v = a[: n - 1] - a[1:n]  # a_(j-1) - a_j, j < n
    lower = np.tril(np.ones((n, n - 1)), -1)[..., None]
    out = np.zeros((2 * n, 2 * n, sp.size))
    out[:n, : n - 1] = (inv[:, None] * u[None, :]).c * lower
    out[:n, n : 2 * n - 1] = (inv[:, None] * v[None, :]).c * lower
    diag = (inv * a[:n]).c  # a_(i-1) / a_i
    idx = np.arange(n)
    out[idx, idx] = b.c
    out[n + idx, n + idx] = b.c
    out[idx[1:], n + idx[1:]] = diag[1:]
    out[idx[:-1], n + idx[1:], 0] = 1.0
    out[n + idx[1:], idx[:-1]] = a[1:n].c
    out[n + idx[:-1], idx[:-1]] = a[1:n].c
    out[n + idx[:-1], n - 1, 0] = -1.0
    return Jet(sp, out)


def algebroid_recursion_entries(n):
    """Entries ``E[i][j]`` of ``pi1# o (pi0#)^-1`` on the Toda algebroid, as expressions.

    Frame order ``e_1..e_n, f_1..f_n``; with ``a_0 = 0`` and ``a_n = 1``::

        N e_i = b_i e_i + sum_(j<i) a_j (b_j - b_(j+1)) / a_i e_j
                + sum_(j<i) (a_(j-1) - a_j) / a_i f_j + a_(i-1) / a_i f_i + f_(i+1)
        N f_i = a_(i-1) e_(i-1) + a_i e_i - e_n + b_i f_i        (i < n)
        N f_n = a_(n-1) e_(n-1) + b_n f_n

    (terms with an out-of-range index are absent).  The entries are exact;
    they stay accurate as the ``a_i`` become small, where the jet solve runs
    out of pivot room.
    """
    r = 2 * n
    E = [["0"] * r for _ in range(r)]
    a = lambda j: "0" if j == 0 else ("1" if j == n else f"a{j}")  # noqa: E731
    e = lambda i: i - 1  # noqa: E731
    f = lambda i: n + i - 1  # noqa: E731

    def over(num, i):
        return num if i == n else f"({num})/a{i}"

    for i in range(1, n + 1):
        E[e(i)][e(i)] = f"b{i}"
        for j in range(1, i):
            E[e(i)][e(j)] = over(f"a{j}*(b{j} - b{j + 1})", i)
            E[e(i)][f(j)] = over(f"{a(j - 1)} - {a(j)}", i)
        if i > 1:
            E[e(i)][f(i)] = over(a(i - 1), i)
        if i < n:
            E[e(i)][f(i + 1)] = "1"
    for i in range(1, n + 1):
        if i > 1:
            E[f(i)][e(i - 1)] = f"a{i - 1}"
        if i < n:
            E[f(i)][e(i)] = f"a{i}"
            E[f(i)][e(n)] = "-1"
        E[f(i)][f(i)] = f"b{i}"
    return E


def algebroid_point(q, p):
    """The base point ``(a, b)`` of the Toda algebroid lying over ``(q, p)``."""
    return flaschka_map(q, p, chart=None)


# -- registry -----------------------------------------------------------------


@dataclass
class Example:
    name: str
    kind: str
    n: int
    obj: object

    @property
    def algebroid(self):
        return self.obj.algebroid


KINDS = ("physical", "flaschka", "extended", "algebroid")


def example(name):
    """Look up ``toda-<kind>-<n>``."""
    parts = name.split("-")
    if len(parts) != 3 or parts[0] != "toda" or parts[1] not in KINDS:
        raise KeyError(f"unknown example {name!r}; expected toda-<{'|'.join(KINDS)}>-<n>")
    try:
        n = int(parts[2])
    except ValueError:
        raise KeyError(f"unknown example {name!r}: n must be an integer") from None
    if n < 2:
        raise KeyError(f"unknown example {name!r}: n must be at least 2")
    kind = parts[1]
    builder = {
        "physical": toda_physical,
        "flaschka": toda_flaschka_reduced,
        "extended": toda_extended_flaschka,
        "algebroid": toda_algebroid,
    }[kind]
    return Example(name, kind, n, builder(n))


def covered_equals_reduced(pn, pair, points):
    """Max difference between covered algebroid tensors and reduced Flaschka tensors."""
    worst = 0.0
    for P, Q in ((covered_poisson(pn.pi), pair.pi0), (covered_poisson(pn.pi1), pair.pi1)):
        for x in points:
            a = skew_array(P, x, 0).c[..., 0]
            b = skew_array(Q, x, 0).c[..., 0]
            worst = max(worst, float(np.max(np.abs(a - b))))
    return worst


def reduced_rank(pair, point, tol=1e-10):
    P = skew_array(pair.pi0, point, 0).c[..., 0]
    return int(np.linalg.matrix_rank(P, tol=tol))


def toda_report(n, points=20, seed=42):
    """Smoke report of the built-in physical lattice identities."""
    pn = toda_physical(n)
    pts = pn.sample_points(points, seed)
    rep = Report(f"toda-physical-{n}")
    rep.add(collect("pi0# dH = pi1# dP", [bihamiltonian_residual(pn, pts)], 1e-9, len(pts), seed))
    return rep
