"""Bi-Hamiltonian hierarchies generated by a PN structure.

For a PN structure ``(pi, N)`` we use::

    h_0 = ln det N,   h_i = (1/i) Tr N^i  (i != 0)
    X_(N,pi) = d_pi Tr N = -pi# d_A Tr N
    X^(m) = N^(m-1) X_(N,pi)
    d_{N^i pi} h_j = d_{N^j pi} h_i = X^(i+j)

Negative powers of ``N`` are evaluated pointwise by jet linear solves.  The
covered hierarchy on the base is ``rho(X^(m)) = -pi_{i,M}# d h_j`` with
``pi_{i,M}`` the covered tensor of ``N^i pi``.
"""

from __future__ import annotations

import itertools

import numpy as np

from . import jets
from .algebroid import differential, schouten
from .exterior import FunctionField, function_form, skew_array
from .modular import pn_modular_vector_field
from .poisson import anchor_image, covered_poisson, d_pi, poisson_bracket, sharp
from .report import Report, collect

HIERARCHY_TOL = 1e-8
DEFAULT_RANGE = (-2, 5)


def hamiltonians(N, indices):
    """``{i: h_i}`` with ``h_0 = ln det N`` and ``h_i = Tr N^i / i``."""
    out = {}
    for i in indices:
        i = int(i)
        if i == 0:
            h = N.det().log()
            h.label = "h0"
        else:
            tr = N.power(i).trace()
            h = FunctionField(lambda x, K, tr=tr, i=i: tr.jet(x, K) * (1.0 / i), f"h{i}")
        out[i] = h
    return out


def parse_range(text):
    """``"-1..3"`` -> ``(-1, 3)`` (inclusive)."""
    try:
        lo, hi = text.split("..")
        lo, hi = int(lo), int(hi)
    except ValueError:
        raise ValueError(f"range must look like 'lo..hi', got {text!r}") from None
    if lo > hi:
        raise ValueError("empty range")
    return lo, hi


class Hierarchy:
    """Hamiltonians, hierarchy fields and their cross-relations for a PN structure."""

    def __init__(self, pn, index_range=DEFAULT_RANGE):
        self.pn = pn
        self.N = pn.N
        self.pi = pn.pi
        self.algebroid = pn.algebroid
        self.range = tuple(index_range)
        self._h = {}
        self._X = {}
        self.X_modular = pn_modular_vector_field(self.pi, self.N)

    def h(self, i):
        if i not in self._h:
            self._h[i] = hamiltonians(self.N, [i])[i]
        return self._h[i]

    def field(self, m):
        """``X^(m) = N^(m-1) X_(N,pi)``."""
        if m not in self._X:
            X = self.N.power(m - 1).apply(self.X_modular) if m != 1 else self.X_modular
            X.label = f"X^({m})"
            self._X[m] = X
        return self._X[m]

    def d_term(self, i, j):
        """``d_{N^i pi} h_j = [N^i pi, h_j]``."""
        return d_pi(self.pn.pi_k(i), self.h(j))

    def covered_field(self, m):
        return anchor_image(self.field(m))

    def covered_tensor(self, k):
        return covered_poisson(self.pn.pi_k(k), label=f"pi_{k},M")

    def covered_term(self, i, j):
        """``-pi_{i,M}# d h_j`` on the base."""
        TB = self.algebroid.base_tangent()
        dh = differential(function_form(TB, self.h(j)))
        return sharp(self.covered_tensor(i), dh) * -1.0

    def decompositions(self, m, lo=None, hi=None):
        lo = self.range[0] if lo is None else lo
        hi = self.range[1] if hi is None else hi
        return [(i, m - i) for i in range(lo, hi + 1) if lo <= m - i <= hi]

    def flow_field(self, k, j):
        """Plain-float callable ``x -> -pi_{k,M}# d h_j``, for integrators.

        Uses ``d h_j = Tr(N^(j-1) dN)`` (``d h_0 = Tr(N^-1 dN)``) and the table
        ``R^t Pi E^k R`` of the covered tensor of ``N^k pi``; it agrees with
        :meth:`covered_term` and is several times cheaper per call.
        """
        A, N, pi = self.algebroid, self.N, self.pi
        n = A.n

        def f(x):
            x = tuple(float(v) for v in x)
            E1 = N.at(x, 1).c
            E = E1[..., 0]
            dE = E1[..., 1 : n + 1]
            if j == 0:
                W = np.linalg.inv(E)
            else:
                W = np.linalg.matrix_power(E, j - 1) if j >= 1 else np.linalg.matrix_power(np.linalg.inv(E), 1 - j)
            # grad_u h_j = sum_ab W[a, b] dE[b, a, u]
            grad = np.einsum("ab,bau->u", W, dE)
            P = skew_array(pi, x, 0).c[..., 0]
            Ek = np.linalg.matrix_power(E, k) if k >= 0 else np.linalg.matrix_power(np.linalg.inv(E), -k)
            R = A.anchor_at(x, 0).c[..., 0]
            PM = R.T @ (P @ Ek) @ R
            return -(grad @ PM)

        return f

    def h_value(self, j):
        """Plain-float callable ``x -> h_j(x)`` from the order-0 matrix of ``N``."""
        N = self.N

        def f(x):
            E = N.matrix(tuple(float(v) for v in x))
            if j == 0:
                return float(np.log(np.linalg.det(E)))
            M = np.linalg.matrix_power(E, j) if j > 0 else np.linalg.matrix_power(np.linalg.inv(E), -j)
            return float(np.trace(M)) / j

        f.label = f"h{j}"
        return f

    # -- checks ---------------------------------------------------------------
    def cross_check(self, m, points, tolerance=HIERARCHY_TOL, seed=None, lo=None, hi=None):
        """``d_{N^i pi} h_j = X^(m)`` for every ``i + j = m`` in range."""
        points = list(points)
        X = self.field(m)
        res = []
        for i, j in self.decompositions(m, lo, hi):
            diff = self.d_term(i, j) - X
            res.extend(diff.max_abs(x) for x in points)
        return collect(f"d_(N^i pi) h_j = X^({m}) for i+j={m}", res, tolerance, len(points), seed)

    def recursion_check(self, m, points, tolerance=1e-12, seed=None):
        """``X^(m+1) = N X^(m)``, both sides evaluated independently."""
        points = list(points)
        lhs = self.N.power(m).apply(self.X_modular)
        rhs = self.N.apply(self.field(m))
        d = lhs - rhs
        return collect(f"X^({m + 1}) = N X^({m})", (d.max_abs(x) for x in points), tolerance, len(points), seed)

    def scaling_check(self, k, i, points, factor=None, tolerance=HIERARCHY_TOL, seed=None):
        """``N^k X_(N,pi) = factor * X_(N^(k-i+1), N^i pi)``; by default ``factor = 1/(k-i+1)``."""
        points = list(points)
        s = k - i + 1
        factor = 1.0 / s if factor is None else factor
        lhs = self.N.power(k).apply(self.X_modular)
        rhs = pn_modular_vector_field(self.pn.pi_k(i), self.N.power(s)) * factor
        d = lhs - rhs
        return collect(f"N^{k} X_(N,pi) = {factor:g} X_(N^{s}, N^{i} pi)", (d.max_abs(x) for x in points), tolerance, len(points), seed)

    def pairwise_compatibility(self, kmax, points, tolerance=HIERARCHY_TOL, seed=None):
        points = list(points)
        rep = Report("pairwise compatibility of N^k pi")
        for i, j in itertools.combinations_with_replacement(range(kmax + 1), 2):
            S = schouten(self.pn.pi_k(i), self.pn.pi_k(j))
            rep.add(collect(f"[pi_{i}, pi_{j}] = 0", (S.max_abs(x) for x in points), tolerance, len(points), seed))
        return rep

    def covered_check(self, m, points, tolerance=HIERARCHY_TOL, seed=None, lo=None, hi=None):
        points = list(points)
        Y = self.covered_field(m)
        res = []
        for i, j in self.decompositions(m, lo, hi):
            d = self.covered_term(i, j) - Y
            res.extend(d.max_abs(x) for x in points)
        return collect(f"rho(X^({m})) = -pi_(i,M)# d h_j", res, tolerance, len(points), seed)

    def involution_check(self, indices, k_values, points, tolerance=1e-9, seed=None):
        """``{h_i, h_j}`` under every covered tensor ``pi_{k,M}``."""
        points = list(points)
        res = []
        for k in k_values:
            P = self.covered_tensor(k)
            for i, j in itertools.combinations(indices, 2):
                br = poisson_bracket(P, self.h(i), self.h(j))
                res.extend(abs(br(x)) for x in points)
        return collect(f"{{h_i, h_j}} = 0 under pi_k,M, k in {list(k_values)}", res, tolerance, len(points), seed)

    def table(self, point, m_values):
        """Plain values for reports: ``h_i``, ``X^(m)`` and ``rho(X^(m))`` at ``point``."""
        r = self.algebroid.rank
        out = {"h": {}, "X": {}, "rhoX": {}}
        lo, hi = m_values
        for i in range(lo, hi + 1):
            try:
                out["h"][i] = self.h(i)(point)
            except (ArithmeticError, jets.DegenerateEndomorphismError) as exc:
                out["h"][i] = f"error: {exc}"
        for m in range(lo, hi + 1):
            try:
                vals = self.field(m).values(point)
                out["X"][m] = [vals.get((k,), 0.0) for k in range(r)]
                cv = self.covered_field(m).values(point)
                out["rhoX"][m] = [cv.get((u,), 0.0) for u in range(self.algebroid.n)]
            except ArithmeticError as exc:
                out["X"][m] = f"error: {exc}"
                out["rhoX"][m] = f"error: {exc}"
        return out


def values_array(field, point, size):
    vals = field.values(point)
    return np.array([vals.get((k,), 0.0) for k in range(size)])
