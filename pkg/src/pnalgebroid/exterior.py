"""Frame-indexed exterior algebra over a Lie algebroid.

Coefficients live in :class:`ScalarField` objects that evaluate to jets at a
base point.  Multivectors and forms store only strictly increasing index
tuples; everything derived from them (wedges, brackets, differentials) is a
lazily evaluated, memoized closure over the inputs' jets.

Frame indices are 0-based throughout.  An :class:`EndomorphismField` stores
the matrix ``E[i][j] = N_i^j`` with ``N(e_i) = sum_j N_i^j e_j``, so row
``i`` holds the image of ``e_i``.
"""

from __future__ import annotations

import itertools
from collections import OrderedDict
from numbers import Real

import numpy as np

from . import exprlang, jets
from .jets import Jet

_MEMO_SIZE = 256


def _key(point):
    return tuple(float(x) for x in point)


class _Memo:
    """Per-object cache of evaluations keyed by (point, order)."""

    __slots__ = ("fn", "store")

    def __init__(self, fn):
        self.fn = fn
        self.store = OrderedDict()

    def __call__(self, point, order):
        key = (point, order)
        hit = self.store.get(key)
        if hit is not None:
            return hit
        val = self.fn(point, order)
        self.store[key] = val
        if len(self.store) > _MEMO_SIZE:
            self.store.popitem(last=False)
        return val


# -- scalar fields ----------------------------------------------------------


class ScalarField:
    """A smooth function on the base, evaluable to a jet at any point."""

    label = "f"
    is_zero = False

    def jet(self, point, order=jets.DEFAULT_ORDER):
        raise NotImplementedError

    def __call__(self, point):
        return self.jet(_key(point), 0).value

    def __repr__(self):
        return f"{type(self).__name__}({self.label!r})"

    # arithmetic builds derived fields
    def __add__(self, other):
        other = as_field(other)
        if other.is_zero:
            return self
        if self.is_zero:
            return other
        return FunctionField(lambda x, K: self.jet(x, K) + other.jet(x, K), f"({self.label} + {other.label})")

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-as_field(other))

    def __rsub__(self, other):
        return as_field(other) + (-self)

    def __neg__(self):
        if self.is_zero:
            return self
        return FunctionField(lambda x, K: -self.jet(x, K), f"-{self.label}")

    def __mul__(self, other):
        other = as_field(other)
        if self.is_zero or other.is_zero:
            return ZERO
        return FunctionField(lambda x, K: self.jet(x, K) * other.jet(x, K), f"{self.label}*{other.label}")

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = as_field(other)
        return FunctionField(lambda x, K: self.jet(x, K) / other.jet(x, K), f"{self.label}/{other.label}")

    def log(self):
        return FunctionField(lambda x, K: self.jet(x, K).log(), f"log({self.label})")

    def exp(self):
        return FunctionField(lambda x, K: self.jet(x, K).exp(), f"exp({self.label})")


class ConstantField(ScalarField):
    def __init__(self, value):
        self.value = float(value)
        self.label = repr(self.value)
        self.is_zero = self.value == 0.0

    def jet(self, point, order=jets.DEFAULT_ORDER):
        return jets.constant(self.value, len(point), order)


ZERO = ConstantField(0.0)
ONE = ConstantField(1.0)


class ExprField(ScalarField):
    """A field defined by an :class:`~pnalgebroid.exprlang.Expression`."""

    def __init__(self, expression, label=None):
        self.expression = expression
        self.label = label or str(expression)
        self.is_zero = isinstance(expression.root, exprlang.Num) and expression.root.value == 0.0
        self._memo = _Memo(lambda x, K: exprlang.evaluate(self.expression, x, K))

    def jet(self, point, order=jets.DEFAULT_ORDER):
        return self._memo(_key(point), order)


class FunctionField(ScalarField):
    """A field given by a closure ``fn(point, order) -> Jet``; evaluations are memoized."""

    def __init__(self, fn, label="f"):
        self.label = label
        self._memo = _Memo(fn)

    def jet(self, point, order=jets.DEFAULT_ORDER):
        j = self._memo(_key(point), order)
        if isinstance(j, Jet):
            return j.truncate(order) if j.order > order else j
        return jets.constant(float(j), len(point), order)


def as_field(obj, coords=None):
    """Coerce numbers, expression text, expressions and fields to a :class:`ScalarField`."""
    if isinstance(obj, ScalarField):
        return obj
    if isinstance(obj, (Real, np.floating)):
        return ConstantField(obj)
    if isinstance(obj, exprlang.Expression):
        return ExprField(obj)
    if isinstance(obj, str):
        if coords is None:
            raise ValueError("coordinate names are needed to parse expression text")
        expr = exprlang.parse(obj, coords)
        if isinstance(expr.root, exprlang.Num):
            return ConstantField(expr.root.value)
        return ExprField(expr)
    raise TypeError(f"cannot interpret {obj!r} as a scalar field")


def coordinate(algebroid, u):
    """The coordinate function ``x_u`` of the base."""
    name = algebroid.coords[u]
    return FunctionField(lambda x, K: jets.seed_variable(u, x[u], len(x), K), name)


# -- index helpers ----------------------------------------------------------


def sort_sign(idx):
    """Sort an index tuple; return ``(sign, sorted)`` or ``(0, None)`` on a repeat."""
    idx = list(idx)
    sign = 1
    for i in range(1, len(idx)):
        j = i
        while j > 0 and idx[j - 1] > idx[j]:
            idx[j - 1], idx[j] = idx[j], idx[j - 1]
            sign = -sign
            j -= 1
    for a, b in zip(idx, idx[1:]):
        if a == b:
            return 0, None
    return sign, tuple(idx)


def merge_sign(I, J):
    """Sign and sorted union of disjoint increasing tuples, or ``(0, None)``."""
    if set(I) & set(J):
        return 0, None
    inversions = sum(1 for a in I for b in J if a > b)
    return (-1 if inversions % 2 else 1), tuple(sorted(I + J))


def _accumulate(out, key, term):
    prev = out.get(key)
    out[key] = term if prev is None else prev + term


# -- multivectors and forms -------------------------------------------------


class SkewField:
    """Common storage for :class:`Multivector` and :class:`AForm`."""

    kind = "skew"

    def __init__(self, algebroid, degree, coeffs=None, *, evaluator=None, label=None):
        if degree < 0:
            raise ValueError("degree must be non-negative")
        self.algebroid = algebroid
        self.degree = degree
        self.label = label or self.kind
        r = algebroid.rank
        if evaluator is not None:
            self.coeffs = None
            self._memo = _Memo(evaluator)
            return
        table = {}
        if degree <= r:
            for idx, value in (coeffs or {}).items():
                if isinstance(idx, (int, np.integer)):
                    idx = (int(idx),)
                idx = tuple(idx)
                if len(idx) != degree:
                    raise ValueError(f"index {idx} does not have degree {degree}")
                if any(not 0 <= i < r for i in idx):
                    raise IndexError(f"frame index out of range in {idx}")
                sign, key = sort_sign(idx)
                if sign == 0:
                    continue
                f = as_field(value, algebroid.coords)
                if sign < 0:
                    f = -f
                if key in table:
                    f = table[key] + f
                if not f.is_zero:
                    table[key] = f
        self.coeffs = table
        self._memo = _Memo(self._eval_table)

    def _eval_table(self, point, order):
        return {k: f.jet(point, order) for k, f in self.coeffs.items()}

    def at(self, point, order=jets.DEFAULT_ORDER):
        """Sparse map ``index tuple -> Jet`` at ``point``; absent keys are zero."""
        out = self._memo(_key(point), order)
        return out

    def values(self, point):
        """Order-0 coefficient values as a dict of floats."""
        return {k: j.value for k, j in self.at(point, 0).items()}

    def coeff(self, idx):
        if isinstance(idx, (int, np.integer)):
            idx = (int(idx),)
        sign, key = sort_sign(idx)
        if sign == 0:
            return ZERO
        if self.coeffs is not None:
            f = self.coeffs.get(key, ZERO)
            return -f if sign < 0 else f

        def fn(x, K):
            j = self.at(x, K).get(key)
            if j is None:
                return jets.constant(0.0, len(x), K)
            return -j if sign < 0 else j

        return FunctionField(fn, f"{self.label}{list(idx)}")

    def keys(self):
        return [tuple(c) for c in itertools.combinations(range(self.algebroid.rank), self.degree)]

    def dense(self, point, order=0):
        """Full skew array of order-``order`` jet coefficients (degree <= 2 only)."""
        r = self.algebroid.rank
        tab = self.at(point, order)
        if self.degree == 1:
            out = np.zeros((r, jets.space(len(_key(point)), order).size))
            for (i,), j in tab.items():
                out[i] = j.c
            return out
        if self.degree == 2:
            out = np.zeros((r, r, jets.space(len(_key(point)), order).size))
            for (i, j), v in tab.items():
                out[i, j] = v.c
                out[j, i] = -v.c
            return out
        raise ValueError("dense() supports degrees 1 and 2")

    def _like(self, evaluator, label, degree=None):
        return type(self)(self.algebroid, self.degree if degree is None else degree, evaluator=evaluator, label=label)

    def _check_same(self, other):
        if type(other) is not type(self) or other.algebroid is not self.algebroid:
            raise ValueError("operands live on different algebroids or spaces")
        if other.degree != self.degree:
            raise ValueError("degree mismatch")

    def __add__(self, other):
        self._check_same(other)

        def ev(x, K):
            out = dict(self.at(x, K))
            for k, v in other.at(x, K).items():
                _accumulate(out, k, v)
            return out

        return self._like(ev, f"({self.label} + {other.label})")

    def __neg__(self):
        return self._like(lambda x, K: {k: -v for k, v in self.at(x, K).items()}, f"-{self.label}")

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, f):
        f = as_field(f, self.algebroid.coords)
        return self._like(
            lambda x, K: {k: v * f.jet(x, K) for k, v in self.at(x, K).items()}, f"{f.label}*{self.label}"
        )

    __rmul__ = __mul__

    def max_abs(self, point, order=0):
        """Largest absolute order-``order`` coefficient value (0.0 for the zero field)."""
        tab = self.at(point, order)
        return max((abs(j.c[0]) for j in tab.values()), default=0.0)

    def __repr__(self):
        return f"{type(self).__name__}({self.label!r}, degree={self.degree})"


class Multivector(SkewField):
    """An A-multivector field: a section of the p-th exterior power of A."""

    kind = "multivector"


class AForm(SkewField):
    """An A-differential form: a section of the p-th exterior power of A*."""

    kind = "form"


def frame_section(algebroid, i):
    return Multivector(algebroid, 1, {(i,): 1.0}, label=algebroid.frame[i])


def dual_frame_form(algebroid, i):
    return AForm(algebroid, 1, {(i,): 1.0}, label=f"{algebroid.frame[i]}*")


def section(algebroid, components, label="X"):
    """Degree-1 multivector from a list of per-frame coefficients."""
    return Multivector(algebroid, 1, {(i,): c for i, c in enumerate(components)}, label=label)


def one_form(algebroid, components, label="alpha"):
    return AForm(algebroid, 1, {(i,): c for i, c in enumerate(components)}, label=label)


def function(algebroid, f, label=None):
    """A degree-0 multivector (or use :func:`function_form` for a 0-form)."""
    return Multivector(algebroid, 0, {(): f}, label=label or "f")


def function_form(algebroid, f, label=None):
    return AForm(algebroid, 0, {(): f}, label=label or "f")


def top_multivector(algebroid, f=1.0):
    """``f * e_1 ^ ... ^ e_r``."""
    return Multivector(algebroid, algebroid.rank, {tuple(range(algebroid.rank)): f}, label="eta")


def zero(cls, algebroid, degree):
    return cls(algebroid, degree, {}, label="0")


def wedge(P, Q):
    """Exterior product; returns the zero field when ``p + q`` exceeds the rank."""
    if type(P) is not type(Q) or P.algebroid is not Q.algebroid:
        raise ValueError("wedge operands live on different algebroids or spaces")
    deg = P.degree + Q.degree
    if deg > P.algebroid.rank:
        return zero(type(P), P.algebroid, deg)

    def ev(x, K):
        out = {}
        qa = Q.at(x, K)
        for I, a in P.at(x, K).items():
            for J, b in qa.items():
                sign, key = merge_sign(I, J)
                if sign:
                    _accumulate(out, key, a * b if sign > 0 else -(a * b))
        return out

    return type(P)(P.algebroid, deg, evaluator=ev, label=f"{P.label}^{Q.label}")


def _contract(vec, T, cls):
    """Insert the degree-1 ``vec`` into the first slot of ``T`` (opposite kinds)."""
    if vec.algebroid is not T.algebroid:
        raise ValueError("interior product operands live on different algebroids")
    if vec.degree != 1:
        raise ValueError("interior product needs a degree-1 argument")
    if T.degree <= 0:
        return zero(cls, T.algebroid, 0)

    def ev(x, K):
        v = vec.at(x, K)
        out = {}
        for L, t in T.at(x, K).items():
            for a, i in enumerate(L):
                c = v.get((i,))
                if c is None:
                    continue
                term = c * t
                _accumulate(out, L[:a] + L[a + 1 :], term if a % 2 == 0 else -term)
        return out

    return cls(T.algebroid, T.degree - 1, evaluator=ev, label=f"i({vec.label}){T.label}")


def interior(X, T):
    """Interior product.

    ``interior(X, omega)`` with a section ``X`` and form ``omega`` gives
    ``omega(X, ...)``; ``interior(alpha, P)`` with a covector and a
    multivector gives ``P(alpha, ...)``.  Degree-0 targets give zero.
    """
    if isinstance(X, Multivector) and isinstance(T, AForm):
        return _contract(X, T, AForm)
    if isinstance(X, AForm) and isinstance(T, Multivector):
        return _contract(X, T, Multivector)
    raise TypeError("interior product pairs a section with a form or a covector with a multivector")


def pairing(omega, P, point, order=jets.DEFAULT_ORDER):
    """``<omega, P>`` for a form and a multivector of equal degree, as a jet."""
    if omega.degree != P.degree:
        raise ValueError("pairing needs equal degrees")
    n = len(_key(point))
    total = jets.constant(0.0, n, order)
    pv = P.at(point, order)
    for k, a in omega.at(point, order).items():
        b = pv.get(k)
        if b is not None:
            total = total + a * b
    return total


def pairing_field(omega, P):
    return FunctionField(lambda x, K: pairing(omega, P, x, K), f"<{omega.label},{P.label}>")


# -- endomorphisms ----------------------------------------------------------


class EndomorphismField:
    """A bundle map ``N: A -> A`` over the identity; see the module docstring for layout."""

    def __init__(self, algebroid, entries=None, *, evaluator=None, label="N"):
        self.algebroid = algebroid
        self.label = label
        r = algebroid.rank
        self._powers = {}
        if evaluator is not None:
            self.entries = None
            self._memo = _Memo(evaluator)
            return
        if entries is None or len(entries) != r or any(len(row) != r for row in entries):
            raise ValueError(f"endomorphism needs an {r}x{r} table of entries")
        self.entries = [[as_field(e, algebroid.coords) for e in row] for row in entries]
        self._memo = _Memo(self._eval_entries)

    def _eval_entries(self, point, order):
        r = self.algebroid.rank
        sp = jets.space(len(point), order)
        c = np.zeros((r, r, sp.size))
        for i in range(r):
            for j in range(r):
                f = self.entries[i][j]
                if not f.is_zero:
                    c[i, j] = f.jet(point, order).c
        return Jet(sp, c)

    def at(self, point, order=jets.DEFAULT_ORDER):
        """The ``r x r`` jet array ``E[i, j] = N_i^j`` at ``point``."""
        m = self._memo(_key(point), order)
        return m.truncate(order) if m.order > order else m

    def matrix(self, point):
        """Order-0 values of ``E[i, j] = N_i^j``."""
        return self.at(point, 0).c[..., 0].copy()

    def entry(self, i, j):
        if self.entries is not None:
            return self.entries[i][j]
        return FunctionField(lambda x, K: self.at(x, K)[i, j], f"{self.label}[{i},{j}]")

    def _derived(self, ev, label):
        return EndomorphismField(self.algebroid, evaluator=ev, label=label)

    @classmethod
    def identity(cls, algebroid, scale=1.0):
        r = algebroid.rank
        return cls(algebroid, [[scale if i == j else 0.0 for j in range(r)] for i in range(r)], label="I")

    def apply(self, X):
        """``N X`` for a section ``X``: ``(NX)^j = sum_i X^i N_i^j``."""
        if X.degree != 1 or not isinstance(X, Multivector):
            raise ValueError("apply() takes a section")

        def ev(x, K):
            E = self.at(x, K)
            out = {}
            for (i,), c in X.at(x, K).items():
                for j in range(self.algebroid.rank):
                    _accumulate(out, (j,), c * E[i, j])
            return out

        return Multivector(self.algebroid, 1, evaluator=ev, label=f"{self.label}{X.label}")

    def dual_apply(self, omega):
        """``N* omega`` with ``(N* omega)(X_1, ..., X_k) = omega(N X_1, ..., N X_k)``."""
        k = omega.degree
        if k == 0:
            return omega
        r = self.algebroid.rank

        def ev(x, K):
            E = self.at(x, K)
            w = omega.at(x, K)
            out = {}
            for I in itertools.combinations(range(r), k):
                for J, c in w.items():
                    minor = _jet_minor(E, I, J)
                    if minor is not None:
                        _accumulate(out, I, minor * c)
            return out

        return AForm(self.algebroid, k, evaluator=ev, label=f"{self.label}*{omega.label}")

    def power(self, k):
        """``N^k``; negative ``k`` inverts pointwise over jets."""
        k = int(k)
        if k in self._powers:
            return self._powers[k]
        if k == 0:
            res = EndomorphismField.identity(self.algebroid)
        elif k == 1:
            res = self
        elif k == -1:
            res = self._derived(lambda x, K: jets.jet_inverse(self.at(x, K)), f"{self.label}^-1")
        else:
            half = self.power(k // 2) if k > 0 else self.power(-1).power(-k // 2)
            rest = self if k > 0 else self.power(-1)
            odd = abs(k) % 2 == 1

            def ev(x, K, half=half, rest=rest, odd=odd):
                H = half.at(x, K)
                M = jets.matmul(H, H)
                return jets.matmul(M, rest.at(x, K)) if odd else M

            res = self._derived(ev, f"{self.label}^{k}")
        self._powers[k] = res
        return res

    def inverse(self):
        return self.power(-1)

    def compose(self, other):
        """``self o other`` (apply ``other`` first)."""
        return self._derived(lambda x, K: jets.matmul(other.at(x, K), self.at(x, K)), f"{self.label}{other.label}")

    def __add__(self, other):
        return self._derived(lambda x, K: self.at(x, K) + other.at(x, K), f"({self.label} + {other.label})")

    def scaled(self, c):
        return self._derived(lambda x, K: self.at(x, K) * float(c), f"{c}*{self.label}")

    def shift(self, lam):
        """``N + lam * I``."""
        lam = float(lam)
        r = self.algebroid.rank

        def ev(x, K):
            E = self.at(x, K)
            return E + E.space.constant(lam * np.eye(r))

        return self._derived(ev, f"({self.label} + {lam}I)")

    def trace(self):
        def ev(x, K):
            E = self.at(x, K)
            return Jet(E.space, np.trace(E.c, axis1=0, axis2=1)) if E.shape[0] else jets.constant(0.0, len(x), K)

        return FunctionField(ev, f"Tr {self.label}")

    def det(self):
        return FunctionField(lambda x, K: jets.jet_det(self.at(x, K)), f"det {self.label}")

    def transpose_matrix(self):
        """The endomorphism with transposed entry table (used for the dual bundle)."""
        return self._derived(lambda x, K: Jet(self.at(x, K).space, np.swapaxes(self.at(x, K).c, 0, 1)), f"{self.label}^T")

    def on(self, algebroid):
        """The same entry table read over another algebroid of equal rank."""
        if algebroid.rank != self.algebroid.rank:
            raise ValueError("rank mismatch")
        return EndomorphismField(algebroid, evaluator=lambda x, K: self.at(x, K), label=self.label)

    def bivector_table(self, pi, point, order=jets.DEFAULT_ORDER):
        """Full (not necessarily skew) table ``T = Pi E`` of ``N pi`` as a jet array."""
        P = skew_array(pi, point, order)
        return jets.matmul(P, self.at(point, order))

    def apply_bivector(self, pi):
        """The bivector ``N pi`` with ``(N pi)^# = N o pi^#``, read from the upper triangle.

        Skewness of the full table is not enforced; see :func:`skewness_residual`.
        """
        r = self.algebroid.rank

        def ev(x, K):
            T = self.bivector_table(pi, x, K)
            return {(i, j): T[i, j] for i in range(r) for j in range(i + 1, r)}

        return Multivector(self.algebroid, 2, evaluator=ev, label=f"{self.label}{pi.label}")

    def __repr__(self):
        return f"EndomorphismField({self.label!r}, rank={self.algebroid.rank})"


def skew_array(pi, point, order=jets.DEFAULT_ORDER):
    """Full antisymmetric jet array of a bivector's coefficients."""
    r = pi.algebroid.rank
    sp = jets.space(len(_key(point)), order)
    c = np.zeros((r, r, sp.size))
    for (i, j), v in pi.at(point, order).items():
        c[i, j] = v.c
        c[j, i] = -v.c
    return Jet(sp, c)


def skewness_residual(N, pi, point):
    """Max |T + T^t| for ``T = Pi E``; zero exactly when ``N o pi^# = pi^# o N*``."""
    T = N.bivector_table(pi, point, 0).c[..., 0]
    return float(np.max(np.abs(T + T.T))) if T.size else 0.0


def _jet_minor(E, I, J):
    k = len(I)
    if k == 1:
        return E[I[0], J[0]]
    total = None
    for perm in itertools.permutations(range(k)):
        sign = _perm_sign(perm)
        term = None
        for a in range(k):
            e = E[I[a], J[perm[a]]]
            term = e if term is None else term * e
        term = term if sign > 0 else -term
        total = term if total is None else total + term
    return total


def _perm_sign(perm):
    sign = 1
    seen = list(perm)
    for i in range(len(seen)):
        while seen[i] != i:
            j = seen[i]
            seen[i], seen[j] = seen[j], seen[i]
            sign = -sign
    return sign


def rebase(T, algebroid):
    """The same coefficient tables read over another algebroid of equal rank and base."""
    if algebroid.rank != T.algebroid.rank or algebroid.n != T.algebroid.n:
        raise ValueError("rebase needs matching rank and base dimension")
    return type(T)(algebroid, T.degree, evaluator=lambda x, K: T.at(x, K), label=T.label)
