"""Modular forms, the relative modular class of ``N`` and the PN modular vector field.

The volume data are always the frame volume ``eta = e_1 ^ ... ^ e_r`` and the
coordinate volume ``mu = dx_1 ^ ... ^ dx_n``, optionally rescaled by a
positive function.  Under the defining relation
``<xi, X> eta (x) mu = L_X eta (x) mu + eta (x) L_rho(X) mu`` a rescaling
``eta' (x) mu' = f eta (x) mu`` changes the modular form by
``xi' = xi + d_A log|f|``; :func:`rescale_check` tests that law and can be
asked for the opposite sign.
"""

from __future__ import annotations

import numpy as np

from . import jets
from .algebroid import differential, lie_derivative, schouten
from .exterior import (
    AForm,
    Multivector,
    frame_section,
    function_form,
    rebase,
    top_multivector,
)
from .jets import Jet
from .nijenhuis import deform, pullback
from .poisson import d_pi, dual_algebroid, dual_endomorphism
from .report import Report, collect

MODULAR_TOL = 1e-8


def _local(A):
    r, n = A.rank, A.n

    def ev(x, K):
        C = A.structure_at(x, K)
        trace = Jet(C.space, np.einsum("jkkm->jm", C.c))
        if n:
            R = A.anchor_at(x, K + 1)
            div = sum(R[:, u].deriv(u) for u in range(n))
            trace = trace + div
        return {(j,): trace[j] for j in range(r)}

    return AForm(A, 1, evaluator=ev, label=f"xi({A.name})")


def _definition(A, eta_scale=None, mu_scale=None):
    """``xi(e_j) = [e_j, eta] / eta + (L_{rho e_j} mu) / mu`` with optional rescalings."""
    r, n = A.rank, A.n
    top = tuple(range(r))
    eta = top_multivector(A, eta_scale if eta_scale is not None else 1.0)
    TB = A.base_tangent() if n else None
    mu = AForm(TB, n, {tuple(range(n)): mu_scale if mu_scale is not None else 1.0}, label="mu") if n else None
    brackets = [schouten(frame_section(A, j), eta) for j in range(r)]

    def rho_field(j):
        def ev(x, K):
            R = A.anchor_at(x, K)
            return {(u,): R[j, u] for u in range(n)}

        return Multivector(TB, 1, evaluator=ev, label=f"rho(e{j})")

    lies = [lie_derivative(rho_field(j), mu) for j in range(r)] if n else []

    def ev(x, K):
        e = eta.at(x, K)[top]
        out = {}
        m = mu.at(x, K)[tuple(range(n))] if n else None
        for j in range(r):
            b = brackets[j].at(x, K).get(top)
            val = b / e if b is not None else jets.constant(0.0, len(x), K)
            if n:
                lv = lies[j].at(x, K).get(tuple(range(n)))
                if lv is not None:
                    val = val + lv / m
            out[(j,)] = val
        return out

    return AForm(A, 1, evaluator=ev, label=f"xi'({A.name})")


def modular_form(A, method="local", eta_scale=None, mu_scale=None):
    """The modular form ``xi_A`` for the frame and coordinate volumes.

    ``method="local"`` uses ``xi(e_j) = sum_k C_jk^k + sum_u d rho_j^u / d x_u``;
    ``method="definition"`` evaluates the Lie derivatives of the volumes.
    Rescalings apply to the definition method only.
    """
    if method == "local":
        if eta_scale is not None or mu_scale is not None:
            raise ValueError("rescaled volumes need method='definition'")
        return _local(A)
    if method == "definition":
        return _definition(A, A.field(eta_scale) if eta_scale is not None else None,
                           A.base_tangent().field(mu_scale) if mu_scale is not None else None)
    raise ValueError(f"unknown method {method!r}")


def methods_agree(A, points):
    d = modular_form(A, "local") - modular_form(A, "definition")
    return max((d.max_abs(x) for x in points), default=0.0)


def rescale_check(A, f, points, where="eta", sign=+1, tolerance=1e-10, seed=None):
    """Residual of ``xi' = xi + sign * d_A log|f|`` where ``f`` rescales eta (or mu).

    ``sign=+1`` is the law implied by the defining relation.
    """
    f = A.field(f)
    points = list(points)
    for x in points:
        if f(x) <= 0.0:
            raise ValueError(f"rescaling function must be positive on the sample points (f={f(x)} at {x})")
    if where == "eta":
        xi2 = modular_form(A, "definition", eta_scale=f)
    elif where == "mu":
        xi2 = modular_form(A, "definition", mu_scale=f)
    else:
        raise ValueError("where must be 'eta' or 'mu'")
    dlog = differential(function_form(A, f.log()))
    diff = xi2 - modular_form(A, "definition") - dlog * float(sign)
    label = "+" if sign > 0 else "-"
    return collect(f"gauge law xi' = xi {label} d log f ({f.label}, {where}) on {A.name}",
                   (diff.max_abs(x) for x in points), tolerance, len(points), seed)


def relative_modular_rep(N):
    """``d_A Tr N``, read as a form on ``A_N``."""
    return differential(function_form(N.algebroid, N.trace()))


def modN_residual(N, points, method="local", AN=None):
    """Residual of ``xi_{A_N} - N* xi_A - d_A Tr N`` at ``points``."""
    A = N.algebroid
    AN = AN or deform(N)
    lhs = modular_form(AN, method)
    rhs = pullback(N, modular_form(A, method), AN) + rebase(relative_modular_rep(N), AN)
    d = lhs - rhs
    return max((d.max_abs(x) for x in points), default=0.0)


def pn_modular_vector_field(pi, N):
    """``X_(N,pi) = d_pi Tr N`` (which equals ``-pi# d_A Tr N``)."""
    X = d_pi(pi, N.trace())
    X.label = "X_(N,pi)"
    return X


def _as_section(form, A):
    return Multivector(A, 1, evaluator=lambda x, K: form.at(x, K), label=form.label)


def dual_side_vector_field(pi, N):
    """``xi_{A*_{N*}} - N xi_{A*}`` computed from dual modular forms."""
    A = pi.algebroid
    dual = dual_algebroid(pi)
    Nstar = dual_endomorphism(N, dual)
    deformed = deform(Nstar)
    xi_def = _as_section(rebase(modular_form(deformed, "local"), dual), A)
    xi_dual = _as_section(modular_form(dual, "local"), A)
    return xi_def - N.apply(xi_dual)


def pn_modular_report(pi, N, points, tolerance=MODULAR_TOL, seed=None, coboundary=True):
    """Checks on ``X_(N,pi)``: the dual-side formula, the ``d_{N pi}`` cocycle and coboundary relations."""
    points = list(points)
    X = pn_modular_vector_field(pi, N)
    rep = Report("PN modular vector field")
    d = dual_side_vector_field(pi, N) - X
    rep.add(collect("xi_{A*_N*} - N xi_{A*} = d_pi Tr N", (d.max_abs(x) for x in points), tolerance, len(points), seed))
    Npi = N.apply_bivector(pi)
    cocycle = schouten(Npi, X)
    rep.add(collect("d_{N pi} X_(N,pi) = 0", (cocycle.max_abs(x) for x in points), tolerance, len(points), seed))
    if coboundary:
        cob = X - d_pi(Npi, N.det().log())
        rep.add(collect("X_(N,pi) = d_{N pi} ln det N", (cob.max_abs(x) for x in points), tolerance, len(points), seed))
    return rep
