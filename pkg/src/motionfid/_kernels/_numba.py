"""Compiled kernels. Same signatures and arithmetic order as ``_numpy``."""

import numpy as np
from numba import njit

JACOBI_TOL = 1e-14
JACOBI_MAX_SWEEPS = 60
RANK_TOL = 1e-12


@njit(cache=True)
def _dtw_one(a, b):
    n, m, d = a.shape[0], b.shape[0], a.shape[1]
    D = np.empty((n + 1, m + 1))
    D[:, :] = np.inf
    D[0, 0] = 0.0
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            acc = 0.0
            for k in range(d):
                diff = a[i - 1, k] - b[j - 1, k]
                acc += diff * diff
            best = min(min(D[i - 1, j - 1], D[i - 1, j]), D[i, j - 1])
            D[i, j] = best + np.sqrt(acc)
    return D[n, m]


@njit(cache=True)
def dtw_batch(A, B):
    out = np.empty(A.shape[0])
    for j in range(A.shape[0]):
        out[j] = _dtw_one(A[j], B[j])
    return out


@njit(cache=True)
def median_filter(x, k):
    T, C = x.shape
    h = k // 2
    out = np.empty_like(x)
    buf = np.empty(k)
    for c in range(C):
        for t in range(T):
            for w in range(k):
                idx = min(max(t - h + w, 0), T - 1)
                buf[w] = x[idx, c]
            out[t, c] = np.median(buf)
    return out


@njit(cache=True)
def lfilter(b, a, x, zi):
    T, C = x.shape
    order = a.shape[0] - 1
    y = np.empty_like(x)
    z = zi.copy()
    for c in range(C):
        for t in range(T):
            xt = x[t, c]
            yt = b[0] * xt + z[c, 0]
            for i in range(order - 1):
                z[c, i] = b[i + 1] * xt + z[c, i + 1] - a[i + 1] * yt
            z[c, order - 1] = b[order] * xt - a[order] * yt
            y[t, c] = yt
    return y


@njit(cache=True)
def _svd3(H, U, S, V):
    W = H.copy()
    for r in range(3):
        for c in range(3):
            V[r, c] = 1.0 if r == c else 0.0
    for _ in range(JACOBI_MAX_SWEEPS):
        rotated = False
        for pair in range(3):
            p = 0 if pair < 2 else 1
            q = 1 if pair == 0 else 2
            alpha = 0.0
            beta = 0.0
            gamma = 0.0
            for k in range(3):
                alpha += W[k, p] * W[k, p]
                beta += W[k, q] * W[k, q]
                gamma += W[k, p] * W[k, q]
            if gamma == 0.0 or abs(gamma) <= JACOBI_TOL * np.sqrt(alpha * beta):
                continue
            rotated = True
            zeta = (beta - alpha) / (2.0 * gamma)
            sgn = 1.0 if zeta >= 0.0 else -1.0
            t = sgn / (abs(zeta) + np.sqrt(1.0 + zeta * zeta))
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = c * t
            for k in range(3):
                wp = W[k, p]
                wq = W[k, q]
                W[k, p] = c * wp - s * wq
                W[k, q] = s * wp + c * wq
                vp = V[k, p]
                vq = V[k, q]
                V[k, p] = c * vp - s * vq
                V[k, q] = s * vp + c * vq
        if not rotated:
            break
    norms = np.empty(3)
    for c in range(3):
        acc = 0.0
        for k in range(3):
            acc += W[k, c] * W[k, c]
        norms[c] = np.sqrt(acc)
    # stable descending order by column norm
    order = np.argsort(-norms, kind="mergesort")
    Vs = V.copy()
    Ws = W.copy()
    for c in range(3):
        S[c] = norms[order[c]]
        for k in range(3):
            V[k, c] = Vs[k, order[c]]
            W[k, c] = Ws[k, order[c]]
    tol = RANK_TOL * S[0]
    for c in range(3):
        if S[c] > tol and S[c] > 0.0:
            for k in range(3):
                U[k, c] = W[k, c] / S[c]
        elif c == 0:
            for k in range(3):
                U[k, 0] = 1.0 if k == 0 else 0.0
        elif c == 1:
            # any unit vector orthogonal to the first column
            ax = 0
            for k in range(1, 3):
                if abs(U[k, 0]) < abs(U[ax, 0]):
                    ax = k
            e = np.zeros(3)
            e[ax] = 1.0
            x0 = U[1, 0] * e[2] - U[2, 0] * e[1]
            x1 = U[2, 0] * e[0] - U[0, 0] * e[2]
            x2 = U[0, 0] * e[1] - U[1, 0] * e[0]
            nrm = np.sqrt(x0 * x0 + x1 * x1 + x2 * x2)
            U[0, 1] = x0 / nrm
            U[1, 1] = x1 / nrm
            U[2, 1] = x2 / nrm
        else:
            U[0, 2] = U[1, 0] * U[2, 1] - U[2, 0] * U[1, 1]
            U[1, 2] = U[2, 0] * U[0, 1] - U[0, 0] * U[2, 1]
            U[2, 2] = U[0, 0] * U[1, 1] - U[1, 0] * U[0, 1]


@njit(cache=True)
def svd3_batch(H):
    F = H.shape[0]
    U = np.empty((F, 3, 3))
    S = np.empty((F, 3))
    V = np.empty((F, 3, 3))
    for f in range(F):
        _svd3(H[f], U[f], S[f], V[f])
    return U, S, V


@njit(cache=True)
def _det3(M):
    return (
        M[0, 0] * (M[1, 1] * M[2, 2] - M[1, 2] * M[2, 1])
        - M[0, 1] * (M[1, 0] * M[2, 2] - M[1, 2] * M[2, 0])
        + M[0, 2] * (M[1, 0] * M[2, 1] - M[1, 1] * M[2, 0])
    )


@njit(cache=True)
def procrustes_batch(A, B, allow_reflection, with_scale, degenerate_tol):
    F, N, _ = A.shape
    R = np.empty((F, 3, 3))
    scale = np.ones(F)
    err = np.empty((F, N))
    status = np.zeros(F, dtype=np.int8)
    reflected = np.zeros(F, dtype=np.bool_)
    Ac = np.empty((N, 3))
    Bc = np.empty((N, 3))
    M = np.empty((3, 3))
    U = np.empty((3, 3))
    S = np.empty(3)
    V = np.empty((3, 3))
    for f in range(F):
        amax = 0.0
        bmax = 0.0
        for k in range(3):
            ma = 0.0
            mb = 0.0
            for i in range(N):
                ma += A[f, i, k]
                mb += B[f, i, k]
                amax = max(amax, abs(A[f, i, k]))
                bmax = max(bmax, abs(B[f, i, k]))
            ma /= N
            mb /= N
            for i in range(N):
                Ac[i, k] = A[f, i, k] - ma
                Bc[i, k] = B[f, i, k] - mb
        na = 0.0
        nb = 0.0
        for i in range(N):
            for k in range(3):
                na += Ac[i, k] * Ac[i, k]
                nb += Bc[i, k] * Bc[i, k]
        if np.sqrt(na) <= degenerate_tol * (1.0 + amax) or np.sqrt(nb) <= degenerate_tol * (1.0 + bmax):
            status[f] = 1
            for r in range(3):
                for c in range(3):
                    R[f, r, c] = 1.0 if r == c else 0.0
            for i in range(N):
                err[f, i] = 0.0
            continue
        same = True
        for i in range(N):
            for k in range(3):
                if Ac[i, k] != Bc[i, k]:
                    same = False
        if same:
            # exact optimum; skips SVD rounding so identical frames score exactly 0
            for r in range(3):
                for c in range(3):
                    R[f, r, c] = 1.0 if r == c else 0.0
            for i in range(N):
                err[f, i] = 0.0
            continue
        for r in range(3):
            for c in range(3):
                acc = 0.0
                for i in range(N):
                    acc += Ac[i, r] * Bc[i, c]
                M[r, c] = acc
        _svd3(M, U, S, V)
        sgn = 1.0
        for r in range(3):
            for c in range(3):
                R[f, r, c] = U[r, 0] * V[c, 0] + U[r, 1] * V[c, 1] + U[r, 2] * V[c, 2]
        if _det3(R[f]) < 0.0:
            if allow_reflection:
                reflected[f] = True
            else:
                sgn = -1.0
                for r in range(3):
                    for c in range(3):
                        R[f, r, c] = U[r, 0] * V[c, 0] + U[r, 1] * V[c, 1] - U[r, 2] * V[c, 2]
        if with_scale:
            scale[f] = (S[0] + S[1] + sgn * S[2]) / nb
        s = scale[f]
        for i in range(N):
            acc = 0.0
            for r in range(3):
                rb = R[f, r, 0] * Bc[i, 0] + R[f, r, 1] * Bc[i, 1] + R[f, r, 2] * Bc[i, 2]
                diff = Ac[i, r] - s * rb
                acc += diff * diff
            err[f, i] = np.sqrt(acc)
    return R, scale, err, status, reflected


@njit(cache=True)
def nearest_codes(Z, C):
    n, d = Z.shape
    K = C.shape[0]
    idx = np.empty(n, dtype=np.int64)
    dist2 = np.empty(n)
    for i in range(n):
        best = np.inf
        arg = 0
        for k in range(K):
            acc = 0.0
            for c in range(d):
                diff = Z[i, c] - C[k, c]
                acc += diff * diff
            if acc < best:
                best = acc
                arg = k
        idx[i] = arg
        dist2[i] = best
    return idx, dist2
