"""Vectorised numpy kernels, used when numba is disabled or unavailable."""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

JACOBI_TOL = 1e-14
JACOBI_MAX_SWEEPS = 60
RANK_TOL = 1e-12


def dtw_batch(A, B):
    J, n, _ = A.shape
    m = B.shape[1]
    cost = np.sqrt(((A[:, :, None, :] - B[:, None, :, :]) ** 2).sum(-1))
    D = np.full((J, n + 1, m + 1), np.inf)
    D[:, 0, 0] = 0.0
    # anti-diagonal wavefront: cells with i + j == d depend only on d-1 and d-2
    for d in range(2, n + m + 1):
        i = np.arange(max(1, d - m), min(n, d - 1) + 1)
        j = d - i
        best = np.minimum(np.minimum(D[:, i - 1, j - 1], D[:, i - 1, j]), D[:, i, j - 1])
        D[:, i, j] = best + cost[:, i - 1, j - 1]
    return D[:, n, m]


def median_filter(x, k):
    h = k // 2
    padded = np.pad(x, ((h, h), (0, 0)), mode="edge")
    return np.median(sliding_window_view(padded, k, axis=0), axis=-1)


def lfilter(b, a, x, zi):
    T = x.shape[0]
    order = a.shape[0] - 1
    y = np.empty_like(x)
    z = zi.copy()
    for t in range(T):
        xt = x[t]
        yt = b[0] * xt + z[:, 0]
        for i in range(order - 1):
            z[:, i] = b[i + 1] * xt + z[:, i + 1] - a[i + 1] * yt
        z[:, order - 1] = b[order] * xt - a[order] * yt
        y[t] = yt
    return y


def _cross(u, v):
    return np.stack(
        [
            u[:, 1] * v[:, 2] - u[:, 2] * v[:, 1],
            u[:, 2] * v[:, 0] - u[:, 0] * v[:, 2],
            u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0],
        ],
        axis=-1,
    )


def svd3_batch(H):
    F = H.shape[0]
    W = H.copy()
    V = np.broadcast_to(np.eye(3), (F, 3, 3)).copy()
    for _ in range(JACOBI_MAX_SWEEPS):
        rotated = False
        for p, q in ((0, 1), (0, 2), (1, 2)):
            wp, wq = W[:, :, p].copy(), W[:, :, q].copy()
            alpha = (wp * wp).sum(-1)
            beta = (wq * wq).sum(-1)
            gamma = (wp * wq).sum(-1)
            act = (gamma != 0.0) & (np.abs(gamma) > JACOBI_TOL * np.sqrt(alpha * beta))
            if not act.any():
                continue
            rotated = True
            g = np.where(act, gamma, 1.0)
            zeta = (beta - alpha) / (2.0 * g)
            sgn = np.where(zeta >= 0.0, 1.0, -1.0)
            t = sgn / (np.abs(zeta) + np.sqrt(1.0 + zeta * zeta))
            c = np.where(act, 1.0 / np.sqrt(1.0 + t * t), 1.0)
            s = np.where(act, c * t, 0.0)
            c, s = c[:, None], s[:, None]
            W[:, :, p] = np.where(act[:, None], c * wp - s * wq, wp)
            W[:, :, q] = np.where(act[:, None], s * wp + c * wq, wq)
            vp, vq = V[:, :, p].copy(), V[:, :, q].copy()
            V[:, :, p] = np.where(act[:, None], c * vp - s * vq, vp)
            V[:, :, q] = np.where(act[:, None], s * vp + c * vq, vq)
        if not rotated:
            break
    norms = np.sqrt((W * W).sum(axis=1))
    order = np.argsort(-norms, axis=1, kind="stable")
    S = np.take_along_axis(norms, order, axis=1)
    W = np.take_along_axis(W, order[:, None, :], axis=2)
    V = np.take_along_axis(V, order[:, None, :], axis=2)

    tol = RANK_TOL * S[:, 0]
    ok = (S > tol[:, None]) & (S > 0.0)
    U = np.zeros_like(W)
    safe = np.where(ok, S, 1.0)
    U[:] = W / safe[:, None, :]

    e0 = np.array([1.0, 0.0, 0.0])
    U[:, :, 0] = np.where(ok[:, 0:1], U[:, :, 0], e0)
    u0 = U[:, :, 0]
    ax = np.argmin(np.abs(u0), axis=1)
    e = np.zeros((F, 3))
    e[np.arange(F), ax] = 1.0
    fill1 = _cross(u0, e)
    fill1 /= np.sqrt((fill1 * fill1).sum(-1))[:, None]
    U[:, :, 1] = np.where(ok[:, 1:2], U[:, :, 1], fill1)
    fill2 = _cross(U[:, :, 0], U[:, :, 1])
    U[:, :, 2] = np.where(ok[:, 2:3], U[:, :, 2], fill2)
    return U, S, V


def _det3(M):
    return (
        M[:, 0, 0] * (M[:, 1, 1] * M[:, 2, 2] - M[:, 1, 2] * M[:, 2, 1])
        - M[:, 0, 1] * (M[:, 1, 0] * M[:, 2, 2] - M[:, 1, 2] * M[:, 2, 0])
        + M[:, 0, 2] * (M[:, 1, 0] * M[:, 2, 1] - M[:, 1, 1] * M[:, 2, 0])
    )


def procrustes_batch(A, B, allow_reflection, with_scale, degenerate_tol):
    F, N, _ = A.shape
    Ac = A - A.mean(axis=1, keepdims=True)
    Bc = B - B.mean(axis=1, keepdims=True)
    na = (Ac * Ac).sum(axis=(1, 2))
    nb = (Bc * Bc).sum(axis=(1, 2))
    amax = np.abs(A).max(axis=(1, 2))
    bmax = np.abs(B).max(axis=(1, 2))
    degenerate = (np.sqrt(na) <= degenerate_tol * (1.0 + amax)) | (np.sqrt(nb) <= degenerate_tol * (1.0 + bmax))

    M = np.einsum("fir,fic->frc", Ac, Bc)
    U, S, V = svd3_batch(M)
    R = U @ V.transpose(0, 2, 1)
    neg = _det3(R) < 0.0
    sgn = np.ones(F)
    if allow_reflection:
        reflected = neg & ~degenerate
    else:
        reflected = np.zeros(F, dtype=bool)
        U = U.copy()
        U[neg, :, 2] *= -1.0
        sgn[neg] = -1.0
        R = U @ V.transpose(0, 2, 1)
    scale = np.ones(F)
    if with_scale:
        scale = np.where(degenerate, 1.0, (S[:, 0] + S[:, 1] + sgn * S[:, 2]) / np.where(degenerate, 1.0, nb))
    # identical centred frames: exact optimum, skips SVD rounding so they score exactly 0
    exact = degenerate | (Ac == Bc).all(axis=(1, 2))
    R[exact] = np.eye(3)
    reflected[exact] = False
    aligned = scale[:, None, None] * np.einsum("frc,fic->fir", R, Bc)
    err = np.sqrt(((Ac - aligned) ** 2).sum(-1))
    err[exact] = 0.0
    scale[exact] = 1.0
    return R, scale, err, degenerate.astype(np.int8), reflected


def nearest_codes(Z, C):
    d2 = ((Z[:, None, :] - C[None, :, :]) ** 2).sum(-1)
    idx = np.argmin(d2, axis=1)
    return idx.astype(np.int64), d2[np.arange(Z.shape[0]), idx]
