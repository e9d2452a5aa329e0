"""Nijenhuis operators: deformed brackets, torsion, ``A_N`` and trace identities.

Frame-level formulas (``E[i, k] = N_i^k``, ``D[a, i, k] = rho_a(N_i^k)``)::

    [e_i, e_j]_N^k = E_ia C_aj^k - D_jik + E_jb C_ib^k + D_ijk - C_ij^m E_mk
    [N e_i, N e_j]^k = E_ia E_jb C_ab^k + E_ia D_ajk - E_jb D_bik

Both are evaluated on whole jet arrays at once.  The generic section-level
operations (:func:`deformed_bracket`, :func:`torsion`) go through
:func:`~pnalgebroid.algebroid.section_bracket` and serve as a cross-check.
"""

from __future__ import annotations

import numpy as np

from . import jets
from .algebroid import LieAlgebroid, differential, section_bracket
from .exterior import frame_section, function_form, rebase
from .jets import Jet, einsum2
from .report import Report, collect

TORSION_TOL = 1e-8


def _check(N, *sections):
    for X in sections:
        if X.algebroid is not N.algebroid:
            raise ValueError("endomorphism and sections live on different algebroids")


def deformed_bracket(N, X, Y):
    """``[X, Y]_N = [NX, Y] + [X, NY] - N[X, Y]``."""
    _check(N, X, Y)
    return section_bracket(N.apply(X), Y) + section_bracket(X, N.apply(Y)) - N.apply(section_bracket(X, Y))


def torsion(N, X, Y):
    """``T_N(X, Y) = N[X, Y]_N - [NX, NY]``."""
    _check(N, X, Y)
    return N.apply(deformed_bracket(N, X, Y)) - section_bracket(N.apply(X), N.apply(Y))


def _frame_data(N, x, K):
    A = N.algebroid
    r = A.rank
    E1 = N.at(x, K + 1)
    E = E1.truncate(K)
    C = A.structure_at(x, K)
    flat = [Jet(E1.space, E1.c[i, k]) for i in range(r) for k in range(r)]
    D = A.anchor_derivatives(x, K, flat)
    D = Jet(D.space, D.c.reshape(r, r, r, -1))  # D[a, i, k]
    return E, C, D


def deformed_structure(N, point, order=jets.DEFAULT_ORDER):
    """Structure functions of ``A_N`` as a jet array ``C^N[i, j, k]``."""
    E, C, D = _frame_data(N, tuple(point), order)
    t = einsum2("ia,ajk->ijk", E, C) + einsum2("jb,ibk->ijk", E, C) - einsum2("ijm,mk->ijk", C, E)
    t = t + D - Jet(D.space, np.swapaxes(D.c, 0, 1))
    return t


def torsion_tensor(N, point, order=0):
    """``T[i, j, k]``: component ``k`` of ``T_N(e_i, e_j)``."""
    x = tuple(point)
    E, C, D = _frame_data(N, x, order)
    CN = deformed_structure(N, x, order)
    lhs = einsum2("ijm,mk->ijk", CN, E)
    EC = einsum2("jb,abk->ajk", E, C)
    rhs = einsum2("ia,ajk->ijk", E, EC) + einsum2("ia,ajk->ijk", E, D) - einsum2("jb,bik->ijk", E, D)
    return lhs - rhs


def torsion_residual(N, points):
    """Max ``|T_N(e_i, e_j)|`` over frame pairs and the given points."""
    return max((float(np.max(np.abs(torsion_tensor(N, x, 0).c))) if N.algebroid.rank else 0.0 for x in points), default=0.0)


def deform(N, name=None):
    """The algebroid ``A_N`` with bracket ``[ , ]_N`` and anchor ``rho o N``."""
    A = N.algebroid

    def anchor(x, K):
        return jets.matmul(N.at(x, K), A.anchor_at(x, K))

    return LieAlgebroid(
        name or f"{A.name}_N",
        A.coords,
        A.frame,
        domain=A.domain,
        structure_eval=lambda x, K: deformed_structure(N, x, K),
        anchor_eval=anchor,
    )


def shift(N, lam):
    """``N + lam I``; it has the same torsion as ``N``."""
    return N.shift(lam)


def pullback(N, omega, target):
    """``N* omega`` read as a form on ``target`` (normally ``deform(N)``)."""
    return rebase(N.dual_apply(omega), target)


def trace_identities(N, m_values=(2, 3, 4, 5), k_values=(1, 2, 3, 4), points=(), tolerance=TORSION_TOL, seed=None):
    """Residuals of the trace identities at ``points``.

    * ``m N*^(m-1) d Tr N = d Tr N^m`` for each ``m``;
    * ``k N*^k d ln det N = d Tr N^k`` for each ``k`` (needs ``det N > 0``).
    """
    A = N.algebroid
    points = list(points)
    rep = Report("trace identities")

    def dtr(k):
        return differential(function_form(A, N.power(k).trace()))

    dTrN = dtr(1)
    for m in m_values:
        lhs = _power_dual(N, m - 1, dTrN) * float(m)
        diff = lhs - dtr(m)
        rep.add(collect(f"m N*^(m-1) d Tr N = d Tr N^m (m={m})", (diff.max_abs(x) for x in points), tolerance, len(points), seed))
    if k_values:
        dlogdet = differential(function_form(A, N.det().log()))
        for k in k_values:
            diff = _power_dual(N, k, dlogdet) * float(k) - dtr(k)
            rep.add(collect(f"k N*^k d ln det N = d Tr N^k (k={k})", (diff.max_abs(x) for x in points), tolerance, len(points), seed))
    return rep


def _power_dual(N, k, omega):
    if k == 0:
        return omega
    return N.power(k).dual_apply(omega)


def frame_torsion_fields(N):
    """Lazy ``T_N(e_i, e_j)`` sections for all frame pairs (cross-check path)."""
    A = N.algebroid
    out = {}
    for i in range(A.rank):
        for j in range(i + 1, A.rank):
            out[(i, j)] = torsion(N, frame_section(A, i), frame_section(A, j))
    return out

