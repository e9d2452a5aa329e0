"""Truncated multivariate Taylor expansions ("jets").

A :class:`Jet` holds every partial derivative ``d^alpha f(x0)`` with
``|alpha| <= K`` of a function of ``n`` variables at a base point.  Storage
is dense, in graded order (degree 0, then degree 1, ...), so truncating to a
lower order is a prefix slice.  Coefficients are derivative-valued, not
monomial-valued; the multiplication tables carry the multinomial factors.

A jet may also carry leading array axes (``jet.shape``), which is how
matrices of jets are handled by :func:`matmul`, :func:`jet_linear_solve`
and :func:`jet_det`.

The hot kernels come from the compiled ``_jetcore`` extension when it is
importable and from ``_jetcore_py`` otherwise.  Setting the environment
variable ``PNALGEBROID_PURE_PYTHON=1`` forces the fallback.
"""

from __future__ import annotations

import itertools
import math
import os
from functools import lru_cache
from numbers import Real

import numpy as np

from . import _jetcore_py

if os.environ.get("PNALGEBROID_PURE_PYTHON"):
    _core = _jetcore_py
else:
    try:
        from . import _jetcore as _core
    except ImportError:  # extension not built
        _core = _jetcore_py

#: Name of the active kernel backend, ``"cython"`` or ``"python"``.
BACKEND = _core.BACKEND

#: Default truncation order.
DEFAULT_ORDER = 2

#: Relative pivot tolerance for :func:`jet_linear_solve`.
PIVOT_TOL = 1e-12


class SingularEvaluationError(ArithmeticError):
    """Division by a jet with zero value, or log of a non-positive value."""


class DegenerateEndomorphismError(ArithmeticError):
    """A jet matrix whose order-0 part is singular at the evaluation point."""

    def __init__(self, msg="degenerate endomorphism at point"):
        super().__init__(msg)


def use_backend(name):
    """Switch the kernel backend (``"cython"`` or ``"python"``); returns the old name."""
    global _core, BACKEND
    old = BACKEND
    if name == "python":
        _core = _jetcore_py
    elif name == "cython":
        from . import _jetcore

        _core = _jetcore
    else:
        raise ValueError(f"unknown backend {name!r}")
    BACKEND = _core.BACKEND
    return old


class JetSpace:
    """Index tables for jets of ``n`` variables truncated at order ``K``.

    Obtain instances through :func:`space`, which caches them.
    """

    def __init__(self, n, K):
        if n < 0 or K < 0:
            raise ValueError("n and K must be non-negative")
        self.n = n
        self.K = K
        multi = []
        for d in range(K + 1):
            for combo in itertools.combinations_with_replacement(range(n), d):
                alpha = [0] * n
                for v in combo:
                    alpha[v] += 1
                multi.append(tuple(alpha))
            if n == 0:
                break
        self.multi = multi
        self.index = {a: i for i, a in enumerate(multi)}
        self.size = len(multi)
        self.degree = np.array([sum(a) for a in multi], dtype=np.intp)
        self.sizes = [int(np.count_nonzero(self.degree <= k)) for k in range(K + 1)]

        I, J, O, W = [], [], [], []
        for p, beta in enumerate(multi):
            db = self.degree[p]
            for q, gamma in enumerate(multi):
                if db + self.degree[q] > K:
                    continue
                alpha = tuple(b + g for b, g in zip(beta, gamma))
                w = 1
                for b, g in zip(beta, gamma):
                    w *= math.comb(b + g, b)
                I.append(p)
                J.append(q)
                O.append(self.index[alpha])
                W.append(float(w))
        self.I = np.array(I, dtype=np.intp)
        self.J = np.array(J, dtype=np.intp)
        self.O = np.array(O, dtype=np.intp)
        self.W = np.array(W, dtype=np.float64)

        self.deriv_src = []
        if K >= 1:
            low = self.sizes[K - 1]
            for u in range(n):
                src = []
                for alpha in multi[:low]:
                    a = list(alpha)
                    a[u] += 1
                    src.append(self.index[tuple(a)])
                self.deriv_src.append(np.array(src, dtype=np.intp))

    def __repr__(self):
        return f"JetSpace(n={self.n}, K={self.K})"

    def zeros(self, shape=()):
        return Jet(self, np.zeros(tuple(shape) + (self.size,)))

    def constant(self, value):
        value = np.asarray(value, dtype=float)
        c = np.zeros(value.shape + (self.size,))
        c[..., 0] = value
        return Jet(self, c)

    def lower(self):
        return space(self.n, self.K - 1)


@lru_cache(maxsize=None)
def space(n, K):
    """Return the cached :class:`JetSpace` for ``n`` variables and order ``K``."""
    return JetSpace(n, K)


def _mul_raw(sp, a, b):
    m = sp.size
    if a.shape == b.shape:
        shape = a.shape[:-1]
        a2 = np.ascontiguousarray(a).reshape(-1, m)
        b2 = np.ascontiguousarray(b).reshape(-1, m)
    else:
        shape = np.broadcast_shapes(a.shape[:-1], b.shape[:-1])
        a2 = np.ascontiguousarray(np.broadcast_to(a, shape + (m,))).reshape(-1, m)
        b2 = np.ascontiguousarray(np.broadcast_to(b, shape + (m,))).reshape(-1, m)
    return _core.mul(a2, b2, sp.I, sp.J, sp.O, sp.W).reshape(shape + (m,))


def _common(a, b):
    """Bring two jets to a common space, truncating to the lower order."""
    sa, sb = a.space, b.space
    if sa is sb:
        return sa, a.c, b.c
    if sa.n != sb.n:
        raise ValueError(f"jets over {sa.n} and {sb.n} variables cannot be combined")
    if sa.K < sb.K:
        return sa, a.c, b.c[..., : sa.size]
    return sb, a.c[..., : sb.size], b.c


class Jet:
    """Immutable truncated Taylor expansion; see the module docstring."""

    __slots__ = ("space", "c")
    __array_priority__ = 100

    def __init__(self, sp, coeffs):
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape[-1:] != (sp.size,):
            raise ValueError(f"expected trailing axis of size {sp.size}, got {coeffs.shape}")
        self.space = sp
        self.c = coeffs

    # -- inspection -----------------------------------------------------
    @property
    def n(self):
        return self.space.n

    @property
    def order(self):
        return self.space.K

    @property
    def shape(self):
        return self.c.shape[:-1]

    @property
    def value(self):
        v = self.c[..., 0]
        return float(v) if v.ndim == 0 else v.copy()

    def gradient(self):
        """First partial derivatives, shape ``self.shape + (n,)``."""
        if self.order < 1:
            raise ValueError("order-0 jet carries no derivatives")
        return self.c[..., 1 : 1 + self.n].copy()

    def coefficient(self, alpha):
        """Derivative ``d^alpha f`` for the multi-index ``alpha``."""
        return self.c[..., self.space.index[tuple(alpha)]]

    def derivatives(self):
        """Map multi-index -> derivative value (scalar jets only)."""
        return {a: float(v) for a, v in zip(self.space.multi, self.c)}

    def __repr__(self):
        if self.shape:
            return f"Jet(n={self.n}, K={self.order}, shape={self.shape})"
        terms = ", ".join(f"{a}: {v:.6g}" for a, v in zip(self.space.multi, self.c) if v)
        return f"Jet(n={self.n}, K={self.order}, {{{terms}}})"

    def __len__(self):
        return len(self.c)

    def __getitem__(self, idx):
        return Jet(self.space, self.c[idx])

    def __iter__(self):
        for k in range(len(self.c)):
            yield Jet(self.space, self.c[k])

    # -- order manipulation -----------------------------------------------
    def truncate(self, K):
        if K > self.order:
            raise ValueError(f"cannot raise jet order from {self.order} to {K}")
        if K == self.order:
            return self
        sp = space(self.n, K)
        return Jet(sp, self.c[..., : sp.size])

    def deriv(self, u):
        """Partial derivative along variable ``u``; the result has order ``K - 1``."""
        if self.order < 1:
            raise ValueError("cannot differentiate an order-0 jet")
        if not 0 <= u < self.n:
            raise IndexError(f"variable index {u} out of range for n={self.n}")
        return Jet(self.space.lower(), self.c[..., self.space.deriv_src[u]])

    def embed(self, n_new):
        """View as a jet in ``n_new >= n`` variables that ignores the extra ones."""
        if n_new < self.n:
            raise ValueError("cannot embed into fewer variables")
        sp = space(n_new, self.order)
        out = np.zeros(self.shape + (sp.size,))
        pad = (0,) * (n_new - self.n)
        for i, alpha in enumerate(self.space.multi):
            out[..., sp.index[alpha + pad]] = self.c[..., i]
        return Jet(sp, out)

    # -- arithmetic -------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, Jet):
            return other
        if isinstance(other, (Real, np.ndarray, np.floating)):
            return self.space.constant(other)
        return NotImplemented

    def __add__(self, other):
        if isinstance(other, (Real, np.floating)):
            c = self.c.copy()
            c[..., 0] += other
            return Jet(self.space, c)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        sp, a, b = _common(self, other)
        return Jet(sp, a + b)

    __radd__ = __add__

    def __neg__(self):
        return Jet(self.space, -self.c)

    def __pos__(self):
        return self

    def __sub__(self, other):
        if isinstance(other, (Real, np.floating)):
            return self + (-other)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        sp, a, b = _common(self, other)
        return Jet(sp, a - b)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (Real, np.floating)):
            return Jet(self.space, self.c * float(other))
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        sp, a, b = _common(self, other)
        if sp.K == 0 or sp.n == 0:
            return Jet(sp, a * b)
        return Jet(sp, _mul_raw(sp, a, b))

    __rmul__ = __mul__

    def reciprocal(self):
        v = self.c[..., 0]
        if np.any(v == 0.0):
            raise SingularEvaluationError("division by a jet with zero constant term")
        sp = self.space
        if sp.K == 0 or sp.n == 0:
            return Jet(sp, 1.0 / self.c)
        flat = np.ascontiguousarray(self.c.reshape(-1, sp.size))
        out = _core.reciprocal(flat, sp.K, sp.I, sp.J, sp.O, sp.W)
        return Jet(sp, out.reshape(self.c.shape))

    def __truediv__(self, other):
        if isinstance(other, (Real, np.floating)):
            if other == 0:
                raise SingularEvaluationError("division by zero")
            return Jet(self.space, self.c / float(other))
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        if isinstance(p, (float, np.floating)) and float(p).is_integer():
            p = int(p)
        if not isinstance(p, (int, np.integer)):
            raise TypeError("jets support integer powers only")
        p = int(p)
        if p < 0:
            return self.reciprocal() ** (-p)
        result = self.space.constant(np.ones(self.shape))
        base = self
        while p:
            if p & 1:
                result = result * base
            p >>= 1
            if p:
                base = base * base
        return result

    def exp(self):
        return _compose(self, _exp_series)

    def log(self):
        if np.any(self.c[..., 0] <= 0.0):
            raise SingularEvaluationError("log of a jet with non-positive constant term")
        return _compose(self, _log_series)

    def sin(self):
        return _compose(self, _sin_series)

    def cos(self):
        return _compose(self, _cos_series)

    # -- comparisons used by tests ----------------------------------------
    def allclose(self, other, atol=1e-12):
        other = self._coerce(other)
        _, a, b = _common(self, other)
        return bool(np.allclose(a, b, rtol=0.0, atol=atol))

    def max_abs(self):
        return float(np.max(np.abs(self.c))) if self.c.size else 0.0


def _exp_series(v, K):
    e = np.exp(v)
    return [e / math.factorial(k) for k in range(K + 1)]


def _log_series(v, K):
    out = [np.log(v)]
    for k in range(1, K + 1):
        out.append((-1.0) ** (k - 1) / (k * v**k))
    return out


def _sin_series(v, K):
    s, c = np.sin(v), np.cos(v)
    cyc = [s, c, -s, -c]
    return [cyc[k % 4] / math.factorial(k) for k in range(K + 1)]


def _cos_series(v, K):
    s, c = np.sin(v), np.cos(v)
    cyc = [c, -s, -c, s]
    return [cyc[k % 4] / math.factorial(k) for k in range(K + 1)]


def _compose(x, series):
    """Apply the scalar function with Taylor coefficients ``series(v, K)`` to ``x``."""
    sp = x.space
    v = x.c[..., 0]
    coeffs = series(v, sp.K)
    if sp.K == 0 or sp.n == 0:
        return Jet(sp, np.asarray(coeffs[0])[..., None] * np.ones(sp.size))
    delta = x.c.copy()
    delta[..., 0] = 0.0
    out = np.zeros_like(x.c)
    out[..., 0] = coeffs[sp.K]
    for k in range(sp.K - 1, -1, -1):
        out = _mul_raw(sp, out, delta)
        out[..., 0] += coeffs[k]
    return Jet(sp, out)


# -- public constructors and functions ------------------------------------


def seed_variable(var_index, value, n, K=DEFAULT_ORDER):
    """Jet of the coordinate function ``x[var_index]`` at a point where it equals ``value``."""
    if not 0 <= var_index < n:
        raise IndexError(f"variable index {var_index} out of range for n={n}")
    sp = space(n, K)
    c = np.zeros(sp.size)
    c[0] = value
    if K >= 1:
        c[1 + var_index] = 1.0
    return Jet(sp, c)


def seed_point(point, K=DEFAULT_ORDER):
    """Coordinate jets for every variable at ``point``."""
    n = len(point)
    return [seed_variable(u, float(x), n, K) for u, x in enumerate(point)]


def constant(value, n, K=DEFAULT_ORDER):
    return space(n, K).constant(value)


def exp(x):
    return x.exp() if isinstance(x, Jet) else math.exp(x)


def log(x):
    return x.log() if isinstance(x, Jet) else math.log(x)


def sin(x):
    return x.sin() if isinstance(x, Jet) else math.sin(x)


def cos(x):
    return x.cos() if isinstance(x, Jet) else math.cos(x)


def stack(jets):
    """Stack equal-space jets (nested lists allowed) into one array-valued jet."""

    def flatten(obj):
        if isinstance(obj, Jet):
            return obj
        return [flatten(o) for o in obj]

    nested = flatten(jets)

    def spaces(obj):
        if isinstance(obj, Jet):
            yield obj.space
        else:
            for o in obj:
                yield from spaces(o)

    sps = list(spaces(nested))
    if not sps:
        raise ValueError("cannot stack an empty collection without a space")
    K = min(s.K for s in sps)
    n = sps[0].n
    sp = space(n, K)

    def coeffs(obj):
        if isinstance(obj, Jet):
            if obj.n != n:
                raise ValueError("mixed variable counts")
            return obj.c[..., : sp.size]
        return np.stack([coeffs(o) for o in obj])

    return Jet(sp, coeffs(nested))


def unstack(jet):
    """Inverse of :func:`stack`: nested lists of scalar jets."""
    if not jet.shape:
        return jet
    return [unstack(j) for j in jet]


def _as_array(M):
    return M if isinstance(M, Jet) else stack(M)


def matmul(A, B):
    """Matrix product of 2-D jet arrays."""
    A, B = _as_array(A), _as_array(B)
    sp, a, b = _common(A, B)
    if a.shape[1] != b.shape[0]:
        raise ValueError("matrix shapes do not align")
    if sp.K == 0 or sp.n == 0:
        return Jet(sp, np.einsum("ijm,jkm->ikm", a, b))
    out = _core.matmul(np.ascontiguousarray(a), np.ascontiguousarray(b), sp.I, sp.J, sp.O, sp.W)
    return Jet(sp, out)


def _solve(M, B):
    sp, a, b = _common(M, B)
    r = a.shape[0]
    if a.shape[:2] != (r, r):
        raise ValueError("matrix must be square")
    X, det = _core.solve(
        np.ascontiguousarray(a), np.ascontiguousarray(b), sp.K, PIVOT_TOL, sp.I, sp.J, sp.O, sp.W
    )
    if X is None:
        raise DegenerateEndomorphismError()
    return Jet(sp, X), Jet(sp, det)


def jet_linear_solve(M, b):
    """Solve ``M x = b`` exactly over the truncated ring.

    ``M`` is a square matrix of jets (nested list or a 2-D jet array);
    ``b`` is a vector (list or 1-D jet array) or a matrix of right-hand
    sides (2-D jet array).  The result mirrors the form of ``b``.
    Raises :class:`DegenerateEndomorphismError` when the order-0 matrix is
    singular beyond the pivot tolerance.
    """
    M = _as_array(M)
    as_list = not isinstance(b, Jet)
    B = _as_array(b)
    vector = len(B.shape) == 1
    if vector:
        B = Jet(B.space, B.c[:, None, :])
    X, _ = _solve(M, B)
    if vector:
        X = Jet(X.space, X.c[:, 0, :])
    return unstack(X) if as_list else X


def jet_det(M):
    """Determinant of a square jet matrix, via the same elimination as the solver."""
    M = _as_array(M)
    r = M.shape[0]
    if r == 0:
        return M.space.constant(1.0)
    empty = Jet(M.space, np.zeros((r, 0, M.space.size)))
    try:
        _, det = _solve(M, empty)
    except DegenerateEndomorphismError:
        # a singular matrix has zero value; derivatives need a cofactor route
        return _det_cofactor(M)
    return det


def _det_cofactor(M):
    r = M.shape[0]
    if r == 1:
        return M[0, 0]
    total = M.space.zeros()
    for j in range(r):
        minor = Jet(M.space, np.delete(M.c[1:], j, axis=1))
        term = M[0, j] * _det_cofactor(minor)
        total = total + term if j % 2 == 0 else total - term
    return total


def jet_inverse(M):
    """Inverse matrix of a nondegenerate square jet matrix."""
    M = _as_array(M)
    r = M.shape[0]
    eye = M.space.constant(np.eye(r))
    X, _ = _solve(M, eye)
    return X


def identity(r, n, K=DEFAULT_ORDER):
    return space(n, K).constant(np.eye(r))


def einsum2(subscripts, A, B):
    """Two-operand ``einsum`` over the array axes of jets, e.g. ``"ia,ajk->ijk"``.

    Every index is broadcast into one product array before summation, which
    is fine for the small frame ranks used here.
    """
    lhs, out = subscripts.replace(" ", "").split("->")
    sa, sb = lhs.split(",")
    letters = sorted(set(sa + sb), key=(sa + sb).index)
    sp, a, b = _common(A, B)
    m = sp.size

    def spread(c, sub):
        perm = [sub.index(ch) for ch in letters if ch in sub]
        c = np.transpose(c, perm + [len(sub)])
        shape = [c.shape[perm.index(sub.index(ch))] if ch in sub else 1 for ch in letters]
        return c.reshape(shape + [m])

    pa, pb = spread(a, sa), spread(b, sb)
    if sp.K == 0 or sp.n == 0:
        prod = pa * pb
    else:
        prod = _mul_raw(sp, pa, pb)
    summed = tuple(k for k, ch in enumerate(letters) if ch not in out)
    res = prod.sum(axis=summed) if summed else prod
    kept = [ch for ch in letters if ch in out]
    res = np.transpose(res, [kept.index(ch) for ch in out] + [len(out)])
    return Jet(sp, np.ascontiguousarray(res))


def drop_variable(jet, u):
    """Restrict to the slice through the base point along which ``x_u`` is fixed.

    The result is a jet in the remaining ``n - 1`` variables.
    """
    sp = jet.space
    if not 0 <= u < sp.n:
        raise IndexError(f"variable index {u} out of range for n={sp.n}")
    low = space(sp.n - 1, sp.K)
    src = [sp.index[a[:u] + (0,) + a[u:]] for a in low.multi]
    return Jet(low, jet.c[..., src])
