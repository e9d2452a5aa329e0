"""Poisson bivectors on algebroids and Poisson-Nijenhuis structures.

Conventions: ``pi^{ij}`` is the skew coefficient table of ``pi``,
``(pi# alpha)^j = sum_i alpha_i pi^{ij}`` and ``{f, g} = pi(d_A f, d_A g)``,
so ``pi = dq ^ dp`` (the canonical tensor) gives ``{q, p} = 1``.  With the
Schouten bracket of :mod:`pnalgebroid.algebroid` this yields
``d_pi f = [pi, f] = -pi# d_A f``.
"""

from __future__ import annotations

import itertools

import numpy as np

from . import jets
from .algebroid import LieAlgebroid, differential, schouten, section_bracket
from .exterior import (
    EndomorphismField,
    FunctionField,
    Multivector,
    _key,
    coordinate,
    function,
    function_form,
    interior,
    skew_array,
    skewness_residual,
)
from .jets import Jet, einsum2
from .nijenhuis import deformed_structure, torsion_residual
from .report import Report, collect

POISSON_TOL = 1e-9
COMPAT_TOL = 1e-8


def _bivector(pi):
    if not isinstance(pi, Multivector) or pi.degree != 2:
        raise ValueError("expected a bivector")
    return pi


def sharp(pi, alpha):
    """``pi# alpha = i_alpha pi``."""
    _bivector(pi)
    if alpha.algebroid is not pi.algebroid:
        raise ValueError("operands live on different algebroids")
    return interior(alpha, pi)


def poisson_bracket(pi, f, g):
    """``{f, g} = pi(d_A f, d_A g)`` as a scalar field."""
    A = pi.algebroid
    df = differential(function_form(A, f))
    dg = differential(function_form(A, g))

    def ev(x, K):
        a, b = df.at(x, K), dg.at(x, K)
        total = jets.constant(0.0, len(x), K)
        for (i, j), p in pi.at(x, K).items():
            ai, aj, bi, bj = a.get((i,)), a.get((j,)), b.get((i,)), b.get((j,))
            if ai is not None and bj is not None:
                total = total + p * ai * bj
            if aj is not None and bi is not None:
                total = total - p * aj * bi
        return total

    return FunctionField(ev, f"{{{getattr(f, 'label', f)},{getattr(g, 'label', g)}}}")


def hamiltonian_vf(pi, f):
    """``X_f = pi# d_A f``."""
    A = pi.algebroid
    f = A.field(f)
    return sharp(pi, differential(function_form(A, f)))


def d_pi(pi, P):
    """``d_pi P = [pi, P]``; degree-0 inputs may be scalar fields or numbers."""
    if not isinstance(P, Multivector):
        P = function(pi.algebroid, pi.algebroid.field(P))
    return schouten(pi, P)


def schouten_residual(P, Q, points):
    S = schouten(P, Q)
    return max((S.max_abs(x) for x in points), default=0.0)


def jacobiator_residual(pi, point):
    """Jacobiator of ``{ , }`` on base coordinate functions at ``point``."""
    A = pi.algebroid
    xs = [coordinate(A, u) for u in range(A.n)]
    worst = 0.0
    for u, v, w in itertools.combinations(range(A.n), 3):
        a = poisson_bracket(pi, xs[u], poisson_bracket(pi, xs[v], xs[w]))
        b = poisson_bracket(pi, xs[v], poisson_bracket(pi, xs[w], xs[u]))
        c = poisson_bracket(pi, xs[w], poisson_bracket(pi, xs[u], xs[v]))
        worst = max(worst, abs(a(point) + b(point) + c(point)))
    return worst


def is_poisson(pi, points, tolerance=POISSON_TOL, seed=None, label=None, jacobi_points=5):
    """``[pi, pi] = 0`` at ``points``, cross-checked by the Jacobi identity of ``{ , }``."""
    points = list(points)
    label = label or pi.label
    rep = Report(f"Poisson condition: {label}")
    rep.add(collect(f"[{label},{label}] = 0", (schouten(pi, pi).max_abs(x) for x in points), tolerance, len(points), seed))
    sub = points[:jacobi_points]
    if pi.algebroid.n >= 3:
        rep.add(collect(f"Jacobi of {{,}}_{label} on coordinates", (jacobiator_residual(pi, x) for x in sub), tolerance, len(sub), seed))
    return rep


# -- dual algebroid ---------------------------------------------------------


def dual_structure(pi, point, order=jets.DEFAULT_ORDER):
    """Structure functions of ``[e^i, e^j]_pi`` as a jet array ``[i, j, k]``."""
    A = pi.algebroid
    r = A.rank
    x = _key(point)
    P1 = skew_array(pi, x, order + 1)
    P = P1.truncate(order)
    C = A.structure_at(x, order)
    flat = [Jet(P1.space, P1.c[i, j]) for i in range(r) for j in range(r)]
    D = A.anchor_derivatives(x, order, flat)  # D[k, (i, j)] = rho_k(pi^{ij})
    D = np.moveaxis(D.c.reshape(r, r, r, -1), 0, 2)
    out = einsum2("ja,aki->ijk", P, C) - einsum2("ia,akj->ijk", P, C)
    return out + Jet(out.space, D)


def dual_algebroid(pi, name=None):
    """``A*`` with bracket ``[ , ]_pi`` and anchor ``rho o pi#`` in the dual frame."""
    A = pi.algebroid
    return LieAlgebroid(
        name or f"{A.name}*_{pi.label}",
        A.coords,
        tuple(f"{e}*" for e in A.frame),
        domain=A.domain,
        structure_eval=lambda x, K: dual_structure(pi, x, K),
        anchor_eval=lambda x, K: jets.matmul(skew_array(pi, x, K), A.anchor_at(x, K)),
    )


def dual_endomorphism(N, dual):
    """``N*`` as an endomorphism of the dual bundle ``dual`` (transposed entry table)."""
    return N.transpose_matrix().on(dual)


# -- Poisson-Nijenhuis structures -------------------------------------------


def compatibility(pi, N, points, tolerance=COMPAT_TOL, seed=None):
    """PN compatibility residuals.

    (a) skewness of the table of ``N pi``, i.e. ``N o pi# = pi# o N*``;
    (b) ``[e^i, e^j]_{N pi} = [e^i, e^j]_{N*}`` on all dual-frame pairs, the
    right side being the ``N*``-deformation of the dual algebroid of ``pi``.
    """
    points = list(points)
    rep = Report("PN compatibility")
    rep.add(collect("N pi# = pi# N* (skewness of N pi)", (skewness_residual(N, pi, x) for x in points), tolerance, len(points), seed))
    Npi = N.apply_bivector(pi)
    dual = dual_algebroid(pi)
    Nstar = dual_endomorphism(N, dual)

    def resid(x):
        lhs = dual_structure(Npi, x, 0).c
        rhs = deformed_structure(Nstar, x, 0).c
        return float(np.max(np.abs(lhs - rhs))) if lhs.size else 0.0

    rep.add(collect("[ , ]_{N pi} = [ , ]_{N*} on dual frame", (resid(x) for x in points), tolerance, len(points), seed))
    return rep


def covered_poisson(pi, label=None):
    """``pi_M = rho pi rho*`` as a bivector on the tangent algebroid of the base."""
    A = pi.algebroid
    TB = A.base_tangent()
    n = A.n

    def ev(x, K):
        P = skew_array(pi, x, K)
        R = A.anchor_at(x, K)
        M = einsum2("iu,iv->uv", R, einsum2("ij,jv->iv", P, R))
        return {(u, v): M[u, v] for u in range(n) for v in range(u + 1, n)}

    return Multivector(TB, 2, evaluator=ev, label=label or f"{pi.label}_M")


def anchor_image(X):
    """``rho(X)`` as a vector field (section of the base tangent algebroid)."""
    A = X.algebroid
    TB = A.base_tangent()

    def ev(x, K):
        R = A.anchor_at(x, K)
        out = {}
        for (i,), c in X.at(x, K).items():
            for u in range(A.n):
                v = c * R[i, u]
                key = (u,)
                out[key] = v if key not in out else out[key] + v
        return out

    return Multivector(TB, 1, evaluator=ev, label=f"rho({X.label})")


def fiber_linear_bracket_check(A, X, Y, points, seed=42, g=None):
    """Residuals of ``{f_X, f_Y} = f_[X,Y]``, ``{f_X, q*g} = q*(rho(X) g)`` and ``{q*x_u, q*x_v} = 0``.

    ``f_X(x, xi) = <xi, X(x)>`` on the dual bundle, with the linear Poisson
    bracket ``{xi_i, xi_j} = C_ij^k xi_k``, ``{xi_i, x_u} = rho_i^u``,
    ``{x_u, x_v} = 0``; ``xi`` is drawn at random for each base point.
    """
    rng = np.random.default_rng(seed)
    n, r = A.n, A.rank
    points = list(points)
    g = A.field(g if g is not None else (" + ".join(f"{c}*{c}" for c in A.coords) if n else 1.0))
    br = section_bracket(X, Y)
    dg = differential(function_form(A, g))
    lin, rel, basic = [], [], []
    for x in points:
        xi = rng.uniform(-1.0, 1.0, size=r)
        C = A.structure_at(x, 0).c[..., 0]
        R = A.anchor_at(x, 0).c[..., 0]

        def grads(T):
            tab = T.at(x, 1)
            val = np.zeros(r)
            dx = np.zeros((r, n))
            for (i,), j in tab.items():
                val[i] = j.value
                dx[i] = j.c[1 : 1 + n]
            # d f_T / d x_u and d f_T / d xi_i
            return dx.T @ xi, val

        def bracket(dFx, dFxi, dGx, dGxi):
            lam = np.einsum("ijk,k->ij", C, xi)
            return dFxi @ lam @ dGxi + dFxi @ R @ dGx - dFx @ R.T @ dGxi

        fx = grads(X)
        fy = grads(Y)
        lhs = bracket(*fx, *fy)
        rhs = sum(j.value * xi[i] for (i,), j in br.at(x, 0).items())
        lin.append(abs(lhs - rhs))
        gj = g.jet(x, 1)
        gx = gj.c[1 : 1 + n] if n else np.zeros(0)
        zero = np.zeros(r)
        val = bracket(*fx, gx, zero)
        expect = sum(X.at(x, 0).get((i,), jets.constant(0.0, n, 0)).value * c.value for (i,), c in dg.at(x, 0).items())
        rel.append(abs(val - expect))
        worst = 0.0
        for u, v in itertools.combinations(range(n), 2):
            eu, ev_ = np.eye(n)[u], np.eye(n)[v]
            worst = max(worst, abs(bracket(eu, zero, ev_, zero)))
        basic.append(worst)
    rep = Report(f"fiberwise-linear functions on {A.name}*")
    rep.add(collect("{f_X, f_Y} = f_[X,Y]", lin, 1e-10, len(points), seed))
    rep.add(collect("{f_X, q*g} = q*(rho(X) g)", rel, 1e-10, len(points), seed))
    rep.add(collect("basic functions commute", basic, 0.0, len(points), seed))
    return rep


class PNStructure:
    """A bivector ``pi`` and endomorphism ``N`` on one algebroid.

    ``status`` is ``"unchecked"`` until :meth:`validate` has run, then
    ``"checked"`` or ``"failed"``.
    """

    def __init__(self, algebroid, pi, N, name=None):
        if pi.algebroid is not algebroid or N.algebroid is not algebroid:
            raise ValueError("pi and N must live on the given algebroid")
        self.algebroid = algebroid
        self.pi = _bivector(pi)
        self.N = N
        self.name = name or algebroid.name
        self.status = "unchecked"
        self._bivectors = {0: pi}

    def __repr__(self):
        return f"PNStructure({self.name!r}, status={self.status!r})"

    def pi_k(self, k):
        """``N^k pi`` (``k`` may be negative); cached so repeated calls share memo tables."""
        if k not in self._bivectors:
            self._bivectors[k] = self.N.power(k).apply_bivector(self.pi)
            self._bivectors[k].label = f"pi_{k}"
        return self._bivectors[k]

    def sample_points(self, num, seed=42):
        return self.algebroid.sample_points(num, seed)

    def validate(self, num_points=50, seed=42, tolerance=COMPAT_TOL):
        pts = self.sample_points(num_points, seed)
        rep = Report(f"PN structure: {self.name}")
        rep.extend(is_poisson(self.pi, pts, tolerance, seed))
        rep.add(collect("torsion T_N", [torsion_residual(self.N, pts)], tolerance, len(pts), seed))
        rep.extend(compatibility(self.pi, self.N, pts, tolerance, seed))
        self.status = "checked" if rep.passed else "failed"
        return rep


def identity_pn(algebroid, pi):
    return PNStructure(algebroid, pi, EndomorphismField.identity(algebroid))
