"""Lie algebroids on trivial bundles over a coordinate box.

An algebroid is described in a global frame ``e_0 .. e_{r-1}`` by its
structure functions ``[e_i, e_j] = sum_k C_ij^k e_k`` and anchor components
``rho(e_i) = sum_u rho_i^u d/dx_u``.  All calculus (brackets, ``d_A``, Lie
derivatives, the Schouten bracket) is done on frame coefficient tables of
jets, so every derivative is exact up to rounding.

Internally both ``C`` and ``rho`` are exposed as jet arrays:
``structure_at(x, K)`` has shape ``(r, r, r)`` and ``anchor_at(x, K)`` has
shape ``(r, n)``.  Table-defined and evaluator-defined algebroids share that
interface, which is what lets derived algebroids (``A_N``, duals) reuse all
of the machinery.
"""

from __future__ import annotations

import itertools

import numpy as np

from . import jets
from .exterior import (
    AForm,
    Multivector,
    _accumulate,
    _key,
    _Memo,
    as_field,
    interior,
    merge_sign,
    sort_sign,
)
from .jets import Jet
from .report import Report, collect

DEFAULT_DOMAIN = (-1.0, 1.0)
AXIOM_TOL = 1e-9


class LieAlgebroid:
    """A Lie algebroid with a global frame over a coordinate patch.

    ``structure`` maps pairs ``(i, j)`` to a length-``r`` list of coefficient
    fields for ``[e_i, e_j]``; pairs may be given in either order (the table
    is antisymmetrized).  ``anchor`` is an ``r x n`` table.  Entries may be
    numbers, expression text over ``coords``, or :class:`ScalarField` objects.
    Instead of tables, ``structure_eval(point, K)`` and ``anchor_eval(point, K)``
    may return the jet arrays directly.
    """

    def __init__(
        self,
        name,
        coords,
        frame,
        structure=None,
        anchor=None,
        domain=None,
        *,
        structure_eval=None,
        anchor_eval=None,
    ):
        self.name = name
        self.coords = tuple(coords)
        self.frame = tuple(frame)
        self.n = len(self.coords)
        self.rank = len(self.frame)
        r, n = self.rank, self.n
        box = dict(domain or {})
        unknown = set(box) - set(self.coords)
        if unknown:
            raise ValueError(f"domain names unknown coordinates: {sorted(unknown)}")
        self.domain = {c: tuple(map(float, box.get(c, DEFAULT_DOMAIN))) for c in self.coords}

        if structure_eval is not None:
            self.structure_table = None
            self.zero_bracket = False
            self._structure = _Memo(structure_eval)
        else:
            table = {}
            for (i, j), row in (structure or {}).items():
                if not (0 <= i < r and 0 <= j < r):
                    raise IndexError(f"structure index ({i}, {j}) out of range")
                if len(row) != r:
                    raise ValueError(f"structure entry ({i}, {j}) needs {r} components")
                if i == j:
                    if any(not as_field(c, self.coords).is_zero for c in row):
                        raise ValueError("[e_i, e_i] must vanish")
                    continue
                fields = [as_field(c, self.coords) for c in row]
                if i > j:
                    i, j = j, i
                    fields = [-f for f in fields]
                if (i, j) in table:
                    raise ValueError(f"structure pair ({i}, {j}) given twice")
                table[(i, j)] = fields
            self.structure_table = table
            self.zero_bracket = all(f.is_zero for row in table.values() for f in row)
            self._structure = _Memo(self._eval_structure)

        if anchor_eval is not None:
            self.anchor_table = None
            self._anchor = _Memo(anchor_eval)
        else:
            if anchor is None:
                anchor = [[0.0] * n for _ in range(r)]
            if len(anchor) != r or any(len(row) != n for row in anchor):
                raise ValueError(f"anchor must be an {r}x{n} table")
            self.anchor_table = [[as_field(e, self.coords) for e in row] for row in anchor]
            self._anchor = _Memo(self._eval_anchor)

    def __repr__(self):
        return f"LieAlgebroid({self.name!r}, n={self.n}, rank={self.rank})"

    # -- structure access ---------------------------------------------------
    def _eval_structure(self, point, K):
        r = self.rank
        sp = jets.space(len(point), K)
        c = np.zeros((r, r, r, sp.size))
        for (i, j), row in self.structure_table.items():
            for k, f in enumerate(row):
                if not f.is_zero:
                    v = f.jet(point, K).c
                    c[i, j, k] = v
                    c[j, i, k] = -v
        return Jet(sp, c)

    def _eval_anchor(self, point, K):
        r, n = self.rank, self.n
        sp = jets.space(len(point), K)
        c = np.zeros((r, n, sp.size))
        for i, row in enumerate(self.anchor_table):
            for u, f in enumerate(row):
                if not f.is_zero:
                    c[i, u] = f.jet(point, K).c
        return Jet(sp, c)

    def _check_point(self, point):
        x = _key(point)
        if len(x) != self.n:
            raise ValueError(f"point has {len(x)} coordinates, algebroid base has {self.n}")
        return x

    def structure_at(self, point, order=jets.DEFAULT_ORDER):
        """Jet array ``C[i, j, k]`` (antisymmetric in ``i, j``)."""
        C = self._structure(self._check_point(point), order)
        return C.truncate(order) if C.order > order else C

    def anchor_at(self, point, order=jets.DEFAULT_ORDER):
        """Jet array ``R[i, u] = rho_i^u``."""
        R = self._anchor(self._check_point(point), order)
        return R.truncate(order) if R.order > order else R

    def structure_function(self, i, j, k):
        from .exterior import FunctionField

        return FunctionField(lambda x, K: self.structure_at(x, K)[i, j, k], f"C[{i},{j}][{k}]")

    def anchor_component(self, i, u):
        from .exterior import FunctionField

        return FunctionField(lambda x, K: self.anchor_at(x, K)[i, u], f"rho[{i}][{u}]")

    def anchor_derivatives(self, point, order, fjets):
        """``rho_i(f)`` for every frame index ``i`` and every jet in ``fjets``.

        The input jets must have order ``order + 1``; the result is a jet
        array of shape ``(r, len(fjets))`` at ``order``.
        """
        x = self._check_point(point)
        sp = jets.space(self.n, order)
        F = len(fjets)
        if self.n == 0 or F == 0:
            return Jet(sp, np.zeros((self.rank, F, sp.size)))
        hi = jets.space(self.n, order + 1)
        S = np.empty((F, hi.size))
        for a, j in enumerate(fjets):
            if j.order < order + 1:
                raise ValueError("anchor derivatives need jets one order higher than the result")
            S[a] = j.c[: hi.size]
        G = np.stack([S[:, hi.deriv_src[u]] for u in range(self.n)])
        return jets.matmul(self.anchor_at(x, order), Jet(sp, G))

    def base_tangent(self):
        """The tangent algebroid of the base (cached, so covered tensors share it)."""
        tb = getattr(self, "_base_tangent", None)
        if tb is None:
            tb = tangent_algebroid(self.coords, self.domain, name=f"T(base of {self.name})")
            self._base_tangent = tb
        return tb

    # -- sampling -----------------------------------------------------------
    def sample_points(self, num, seed=42, domain=None):
        """``num`` uniform random points in the sample box (or an override box)."""
        rng = np.random.default_rng(seed)
        box = dict(self.domain)
        box.update(domain or {})
        lo = np.array([box[c][0] for c in self.coords])
        hi = np.array([box[c][1] for c in self.coords])
        pts = rng.uniform(lo, hi, size=(num, self.n))
        return [tuple(map(float, p)) for p in pts]

    # -- small constructors over this algebroid ------------------------------
    def section(self, components, label="X"):
        from .exterior import section

        return section(self, components, label)

    def form(self, components, label="alpha"):
        from .exterior import one_form

        return one_form(self, components, label)

    def multivector(self, degree, coeffs, label=None):
        return Multivector(self, degree, coeffs, label=label)

    def aform(self, degree, coeffs, label=None):
        return AForm(self, degree, coeffs, label=label)

    def field(self, f):
        return as_field(f, self.coords)


# -- built-in algebroids ----------------------------------------------------


def tangent_algebroid(coords, domain=None, name=None):
    """``TM`` with the coordinate frame: ``rho = identity`` and zero brackets."""
    coords = tuple(coords)
    n = len(coords)
    anchor = [[1.0 if u == i else 0.0 for u in range(n)] for i in range(n)]
    frame = tuple(f"d{c}" for c in coords)
    return LieAlgebroid(name or f"T R^{n}", coords, frame, {}, anchor, domain)


def lie_algebra(constants, rank=None, frame=None, name="lie algebra"):
    """A Lie algebra as an algebroid over a point.

    ``constants`` maps ``(i, j)`` to the list of ``C_ij^k``.
    """
    if rank is None:
        rank = len(frame) if frame else 1 + max(max(ij) for ij in constants)
    frame = tuple(frame or (f"e{i + 1}" for i in range(rank)))
    return LieAlgebroid(name, (), frame, constants, [[] for _ in range(rank)])


# -- brackets and differentials ---------------------------------------------


def _same(*objs):
    A = objs[0].algebroid
    for o in objs[1:]:
        if o.algebroid is not A:
            raise ValueError("operands live on different algebroids")
    return A


def section_bracket(X, Y):
    """``[X, Y]`` of two sections via ``C`` and the anchor."""
    A = _same(X, Y)
    if X.degree != 1 or Y.degree != 1:
        raise ValueError("section_bracket takes two sections")
    r = A.rank

    def ev(x, K):
        Xt = X.at(x, K + 1)
        Yt = Y.at(x, K + 1)
        xi = [i for (i,) in Xt]
        yj = [j for (j,) in Yt]
        out = {}
        if not A.zero_bracket:
            C = A.structure_at(x, K)
            for i in xi:
                a = Xt[(i,)].truncate(K)
                for j in yj:
                    if i == j:
                        continue
                    ab = a * Yt[(j,)].truncate(K)
                    row = C[i, j] * ab
                    for k in range(r):
                        _accumulate(out, (k,), row[k])
        if A.n:
            dY = A.anchor_derivatives(x, K, [Yt[(j,)] for j in yj])
            dX = A.anchor_derivatives(x, K, [Xt[(i,)] for i in xi])
            for i in xi:
                a = Xt[(i,)].truncate(K)
                for b, k in enumerate(yj):
                    _accumulate(out, (k,), a * dY[i, b])
            for j in yj:
                c = Yt[(j,)].truncate(K)
                for b, k in enumerate(xi):
                    _accumulate(out, (k,), -(c * dX[j, b]))
        return out

    return Multivector(A, 1, evaluator=ev, label=f"[{X.label},{Y.label}]")


def differential(omega):
    """The algebroid differential ``d_A`` on A-forms."""
    if not isinstance(omega, AForm):
        raise TypeError("differential takes an A-form")
    A = omega.algebroid
    k = omega.degree
    r = A.rank
    if k + 1 > r:
        return AForm(A, k + 1, {}, label="0")

    def ev(x, K):
        w = omega.at(x, K + 1)
        keys = list(w)
        out = {}
        if A.n:
            D = A.anchor_derivatives(x, K, [w[J] for J in keys])
            pos = {J: a for a, J in enumerate(keys)}
            for J, col in pos.items():
                for i in range(r):
                    if i in J:
                        continue
                    I = tuple(sorted(J + (i,)))
                    # i sits at position a of I; the a-th summand carries (-1)^a
                    a = I.index(i)
                    term = D[i, col]
                    _accumulate(out, I, term if a % 2 == 0 else -term)
        if not A.zero_bracket and k >= 1:
            C = A.structure_at(x, K)
            wK = {J: v.truncate(K) for J, v in w.items()}
            for I in itertools.combinations(range(r), k + 1):
                total = None
                for a, b in itertools.combinations(range(k + 1), 2):
                    rest = I[:a] + I[a + 1 : b] + I[b + 1 :]
                    for m in range(r):
                        s, key = sort_sign((m,) + rest)
                        if s == 0:
                            continue
                        val = wK.get(key)
                        if val is None:
                            continue
                        term = C[I[a], I[b], m] * val
                        if s * (-1) ** (a + b) < 0:
                            term = -term
                        total = term if total is None else total + term
                if total is not None:
                    _accumulate(out, I, total)
        return out

    return AForm(A, k + 1, evaluator=ev, label=f"d({omega.label})")


def lie_derivative(X, omega):
    """``L_X omega = d i_X omega + i_X d omega``; on functions ``i_X f = 0``."""
    dw = differential(omega)
    if omega.degree == 0:
        return interior(X, dw)
    return differential(interior(X, omega)) + interior(X, dw)


def schouten(P, Q):
    """The Schouten bracket of two A-multivectors (degree ``p + q - 1``).

    Expanded over monomials ``f e_I`` and ``g e_J``::

        [f e_I, g e_J] = f g [e_I, e_J] + f [e_I, g] ^ e_J + eps g [e_J, f] ^ e_I

    with ``eps = -(-1)^((p-1)(q-1))``, ``[e_I, g] = sum_a (-1)^(p+a)
    rho(e_{i_a}) g e_{I-a}`` and ``[e_I, e_J] = sum_{a,b} (-1)^(a+b)
    [e_{i_a}, e_{j_b}] ^ e_{I-a} ^ e_{J-b}`` (positions counted from 1).
    """
    A = _same(P, Q)
    if not isinstance(P, Multivector) or not isinstance(Q, Multivector):
        raise TypeError("schouten takes multivectors")
    p, q = P.degree, Q.degree
    deg = p + q - 1
    r = A.rank
    if deg < 0 or deg > r:
        return Multivector(A, max(deg, 0), {}, label="0")
    eps = -((-1) ** ((p - 1) * (q - 1)))

    def ev(x, K):
        Pt = P.at(x, K + 1)
        Qt = Q.at(x, K + 1)
        pk, qk = list(Pt), list(Qt)
        PK = {I: Pt[I].truncate(K) for I in pk}
        QK = {J: Qt[J].truncate(K) for J in qk}
        out = {}
        if A.n:
            dQ = A.anchor_derivatives(x, K, [Qt[J] for J in qk]) if p else None
            dP = A.anchor_derivatives(x, K, [Pt[I] for I in pk]) if q else None
        if not A.zero_bracket and p and q:
            C = A.structure_at(x, K)
        for ai, I in enumerate(pk):
            f = PK[I]
            for bj, J in enumerate(qk):
                g = QK[J]
                if not A.zero_bracket and p and q:
                    fg = f * g
                    for a in range(p):
                        Ia = I[:a] + I[a + 1 :]
                        for b in range(q):
                            Jb = J[:b] + J[b + 1 :]
                            s1, rest = merge_sign(Ia, Jb)
                            if not s1:
                                continue
                            row = None
                            for m in range(r):
                                if m in rest:
                                    continue
                                s2, key = merge_sign((m,), rest)
                                if row is None:
                                    row = C[I[a], J[b]] * fg
                                term = row[m]
                                _accumulate(out, key, term if s1 * s2 * (-1) ** (a + b) > 0 else -term)
                if not A.n:
                    continue
                if p:
                    # f [e_I, g] ^ e_J
                    for a in range(p):
                        s, key = merge_sign(I[:a] + I[a + 1 :], J)
                        if not s:
                            continue
                        term = f * dQ[I[a], bj]
                        _accumulate(out, key, term if s * (-1) ** (p + a + 1) > 0 else -term)
                if q:
                    # eps g [e_J, f] ^ e_I
                    for b in range(q):
                        s, key = merge_sign(J[:b] + J[b + 1 :], I)
                        if not s:
                            continue
                        term = g * dP[J[b], ai]
                        _accumulate(out, key, term if eps * s * (-1) ** (q + b + 1) > 0 else -term)
        return out

    return Multivector(A, deg, evaluator=ev, label=f"[{P.label},{Q.label}]")


def evaluate_form(omega, sections, point, order=jets.DEFAULT_ORDER):
    """``omega(X_1, ..., X_k)`` as a jet, for sections given as degree-1 multivectors."""
    k = omega.degree
    if len(sections) != k:
        raise ValueError(f"a {k}-form takes {k} arguments")
    n = len(_key(point))
    total = jets.constant(0.0, n, order)
    tabs = [S.at(point, order) for S in sections]
    for I, w in omega.at(point, order).items():
        for perm in itertools.permutations(range(k)):
            term = w
            for slot, a in enumerate(perm):
                c = tabs[slot].get((I[a],))
                if c is None:
                    term = None
                    break
                term = term * c
            if term is None:
                continue
            s, _ = sort_sign(perm)
            total = total + term if s > 0 else total - term
    return total


def differential_invariant(omega, sections, point, order=jets.DEFAULT_ORDER):
    """``(d_A omega)(X_0..X_k)`` from the invariant formula; a cross-check for :func:`differential`."""
    from .exterior import FunctionField

    A = omega.algebroid
    k = omega.degree
    n = len(_key(point))
    total = jets.constant(0.0, n, order)
    for i, Xi in enumerate(sections):
        rest = sections[:i] + sections[i + 1 :]
        f = FunctionField(lambda x, K, rest=rest: evaluate_form(omega, rest, x, K), "w")
        df = differential(AForm(A, 0, {(): f}))
        term = evaluate_form(df, [Xi], point, order)
        total = total + term if i % 2 == 0 else total - term
    for i, j in itertools.combinations(range(k + 1), 2):
        rest = [S for a, S in enumerate(sections) if a not in (i, j)]
        br = section_bracket(sections[i], sections[j])
        term = evaluate_form(omega, [br] + rest, point, order)
        total = total + term if (i + j) % 2 == 0 else total - term
    return total


# -- axioms -----------------------------------------------------------------


def structure_residuals(A, point):
    """Max residuals of (Jacobi, anchor homomorphism) on frame elements at ``point``."""
    r, n = A.rank, A.n
    C = A.structure_at(point, 1)
    R = A.anchor_at(point, 1)
    C0 = C.c[..., 0]
    R0 = R.c[..., 0]
    jac = (
        np.einsum("ijm,mkl->ijkl", C0, C0)
        + np.einsum("jkm,mil->ijkl", C0, C0)
        + np.einsum("kim,mjl->ijkl", C0, C0)
    )
    hom = np.einsum("ijk,ku->iju", C0, R0)
    if n and C.order >= 1:
        dC = C.c[..., 1 : 1 + n]  # (r, r, r, n)
        dR = R.c[..., 1 : 1 + n]  # (r, n, n): d rho_i^u / d x_v
        rhoC = np.einsum("ku,ijlu->ijkl", R0, dC)  # rho_k(C_ij^l)
        jac -= rhoC + np.transpose(rhoC, (1, 2, 0, 3)) + np.transpose(rhoC, (2, 0, 1, 3))
        # rho([e_i,e_j]) - [rho e_i, rho e_j]
        hom -= np.einsum("iv,juv->iju", R0, dR) - np.einsum("jv,iuv->iju", R0, dR)
    if r == 0:
        return 0.0, 0.0
    return float(np.max(np.abs(jac))), float(np.max(np.abs(hom))) if hom.size else 0.0


def _random_poly_section(A, rng, label):
    """A section with random affine coefficients in the base coordinates."""
    comps = []
    for _ in range(A.rank):
        terms = [f"{rng.uniform(-1, 1):.6f}"]
        for c in A.coords:
            terms.append(f"{rng.uniform(-1, 1):.6f}*{c}")
        comps.append(" + ".join(terms).replace("+ -", "- "))
    return A.section(comps, label)


def leibniz_residual(A, point, rng):
    """``[X, fY] - f[X, Y] - (rho(X) f) Y`` for random affine ``X, Y, f``."""
    X = _random_poly_section(A, rng, "X")
    Y = _random_poly_section(A, rng, "Y")
    if A.n:
        f = as_field(
            " + ".join(f"{rng.uniform(-1, 1):.6f}*{c}*{c}" for c in A.coords).replace("+ -", "- "), A.coords
        )
    else:
        f = as_field(float(rng.uniform(0.5, 2.0)))
    lhs = section_bracket(X, Y * f)
    dfX = interior(X, differential(AForm(A, 0, {(): f})))
    rhs = section_bracket(X, Y) * f + Y * dfX.coeff(())
    return (lhs - rhs).max_abs(point)


def validate_axioms(A, num_points=50, seed=42, tolerance=AXIOM_TOL):
    """Jacobi, anchor-homomorphism and Leibniz residuals at seeded random points."""
    pts = A.sample_points(num_points, seed)
    rng = np.random.default_rng(seed)
    jac, hom, leib = [], [], []
    for i, x in enumerate(pts):
        j, h = structure_residuals(A, x)
        jac.append(j)
        hom.append(h)
        if i < min(num_points, 10):
            leib.append(leibniz_residual(A, x, rng))
    rep = Report(f"Lie algebroid axioms: {A.name}")
    rep.add(collect(f"{A.name}: Jacobi", jac, tolerance, len(pts), seed))
    rep.add(collect(f"{A.name}: anchor homomorphism", hom, tolerance, len(pts), seed))
    rep.add(collect(f"{A.name}: Leibniz", leib, tolerance, len(leib), seed))
    return rep
