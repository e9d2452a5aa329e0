"""Pure-numpy versions of the kernels in ``_jetcore.pyx`` (same signatures)."""

import numpy as np

BACKEND = "python"


def _scatter_matrix(O, m):
    S = np.zeros((len(O), m))
    S[np.arange(len(O)), O] = 1.0
    return S


_SCATTER = {}


def _scatter(O, W, m):
    key = (id(O), m)
    hit = _SCATTER.get(key)
    if hit is None or hit[0] is not O:
        hit = (O, W[:, None] * _scatter_matrix(O, m))
        _SCATTER[key] = hit
    return hit[1]


def mul(a, b, I, J, O, W):
    m = a.shape[-1]
    return (a[..., I] * b[..., J]) @ _scatter(O, W, m)


def matmul(A, B, I, J, O, W):
    m = A.shape[-1]
    prod = (A[:, :, None, I] * B[None, :, :, J]).sum(axis=1)
    return prod @ _scatter(O, W, m)


def reciprocal(a, K, I, J, O, W):
    p0 = a[:, 0]
    inv = 1.0 / p0
    delta = a.copy()
    delta[:, 0] = 0.0
    coef = inv * (-inv) ** K
    out = np.zeros_like(a)
    out[:, 0] = coef
    for _ in range(K):
        out = mul(out, delta, I, J, O, W)
        coef = -coef * p0
        out[:, 0] += coef
    return out


def solve(M_in, B_in, K, rel_tol, I, J, O, W):
    r, _, m = M_in.shape
    s = B_in.shape[1]
    M = np.array(M_in, dtype=float, copy=True)
    B = np.array(B_in, dtype=float, copy=True)
    det = np.zeros(m)
    det[0] = 1.0
    if r == 0:
        return np.zeros((0, s, m)), det
    scale = np.abs(M[:, :, 0]).max()
    if scale == 0.0:
        return None, None
    sign = 1.0
    for c in range(r):
        piv = c + int(np.argmax(np.abs(M[c:, c, 0])))
        if abs(M[piv, c, 0]) <= rel_tol * scale:
            return None, None
        if piv != c:
            sign = -sign
            M[[c, piv]] = M[[piv, c]]
            B[[c, piv]] = B[[piv, c]]
        det = mul(det[None], M[c, c][None], I, J, O, W)[0]
        inv = reciprocal(M[c, c][None], K, I, J, O, W)[0]
        if c + 1 < r:
            f = mul(M[c + 1:, c], np.broadcast_to(inv, M[c + 1:, c].shape), I, J, O, W)
            rows = M[c + 1:, c:]
            M[c + 1:, c:] = rows - mul(
                np.broadcast_to(f[:, None], rows.shape).reshape(-1, m),
                np.broadcast_to(M[c, c:][None], rows.shape).reshape(-1, m),
                I, J, O, W,
            ).reshape(rows.shape)
            if s:
                brow = B[c + 1:]
                B[c + 1:] = brow - mul(
                    np.broadcast_to(f[:, None], brow.shape).reshape(-1, m),
                    np.broadcast_to(B[c][None], brow.shape).reshape(-1, m),
                    I, J, O, W,
                ).reshape(brow.shape)
    X = np.zeros((r, s, m))
    for c in range(r - 1, -1, -1):
        inv = reciprocal(M[c, c][None], K, I, J, O, W)[0]
        acc = B[c].copy()
        for i in range(c + 1, r):
            acc -= mul(np.broadcast_to(M[c, i], acc.shape).copy(), X[i], I, J, O, W)
        X[c] = mul(acc, np.broadcast_to(inv, acc.shape).copy(), I, J, O, W)
    if sign < 0:
        det = -det
    return X, det
