"""Independent reference implementations used to cross-check the package.

Everything here is deliberately written along a different route than the
code under test: dense matrices assembled from index formulas, bisection
instead of sort-based thresholding, subgradient descent instead of
primal-dual splitting.
"""

from __future__ import annotations

import numpy as np


def soft_threshold(x, t):
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def l1_ball_projection_bisect(v, radius, tol=1e-14):
    """Projection onto the l1 ball by bisection on the shrink threshold."""
    v = np.asarray(v, dtype=float)
    a = np.abs(v)
    if a.sum() <= radius:
        return v.copy()
    lo, hi = 0.0, a.max()
    for _ in range(200):
        theta = 0.5 * (lo + hi)
        if np.maximum(a - theta, 0.0).sum() > radius:
            lo = theta
        else:
            hi = theta
        if hi - lo < tol:
            break
    theta = 0.5 * (lo + hi)
    return np.sign(v) * np.maximum(a - theta, 0.0)


def nuclear_ball_projection_ref(mat, radius):
    """Nuclear-ball projection assembled from SVD plus the bisection l1 projection."""
    u, s, vt = np.linalg.svd(mat, full_matrices=False)
    return (u * l1_ball_projection_bisect(s, radius)) @ vt


def lower_median(columns):
    """Pointwise lower median across the columns of an (mn, N) matrix."""
    N = columns.shape[1]
    return np.sort(columns, axis=1)[:, (N - 1) // 2]


def dense_forward_difference(m, n):
    """Dense 4mn-by-2mn forward-difference matrix built entry by entry.

    Pixel index is column-major (i + m*j); output block b = 2*component +
    direction; last difference per direction is zero (Neumann).
    """
    p = m * n
    G = np.zeros((4 * p, 2 * p))

    def idx(i, j):
        return i + m * j

    for c in (0, 1):
        for j in range(n):
            for i in range(m):
                col = c * p + idx(i, j)
                if i < m - 1:
                    row = (2 * c) * p + idx(i, j)
                    G[row, col] -= 1.0
                    G[row, c * p + idx(i + 1, j)] += 1.0
                if j < n - 1:
                    row = (2 * c + 1) * p + idx(i, j)
                    G[row, col] -= 1.0
                    G[row, c * p + idx(i, j + 1)] += 1.0
    return G


def dense_centering(n_images, pixels):
    return np.kron(np.eye(n_images) - np.ones((n_images, n_images)) / n_images, np.eye(pixels))


def dense_composite(gradients):
    """Dense matrix of the composite operator, assembled from its block formula.

    `gradients` has shape (N, m, n, 2); the column layout matches the packed
    primal vector (per-image displacement components, then low-rank columns).
    """
    N, m, n, _ = gradients.shape
    p = m * n
    rows = 6 * N * p
    cols = 3 * N * p
    A = np.zeros((rows, cols))
    G = dense_forward_difference(m, n)
    for k in range(N):
        g1 = gradients[k, :, :, 0].reshape(-1, order="F")
        g2 = gradients[k, :, :, 1].reshape(-1, order="F")
        u_off = 2 * p * k
        l_off = 2 * N * p + p * k
        r1 = p * k
        A[r1 : r1 + p, u_off : u_off + p] = np.diag(g1)
        A[r1 : r1 + p, u_off + p : u_off + 2 * p] = np.diag(g2)
        A[r1 : r1 + p, l_off : l_off + p] = -np.eye(p)
        r3 = 2 * N * p + 4 * p * k
        A[r3 : r3 + 4 * p, u_off : u_off + 2 * p] = G
    A[N * p : 2 * N * p, 2 * N * p :] = dense_centering(N, p)
    return A


def l1_energy(M, L):
    return float(np.abs(M - L).sum())


def projected_subgradient_drpca(M, nu, rounds=24, inner=2500, seed=0):
    """Constrained l1 minimization by projected subgradient descent.

    Polyak-type steps against a decreasing optimistic target; the feasible
    set {||centered L||_* <= nu} is handled by exact projection (the mean
    part is unconstrained, the centered part is projected onto the nuclear
    ball).  Returns the best objective value seen.
    """
    M = np.asarray(M, dtype=float)

    def project(L):
        mean = L.mean(axis=1, keepdims=True)
        return mean + nuclear_ball_projection_ref(L - mean, nu)

    L = project(M.copy())
    best_val = l1_energy(M, L)
    best_L = L.copy()
    delta = 0.05 * max(best_val, 1.0)
    for _ in range(rounds):
        L = best_L.copy()
        for _ in range(inner):
            g = -np.sign(M - L)
            gnorm2 = float(np.sum(g * g))
            if gnorm2 == 0.0:
                return 0.0
            f = l1_energy(M, L)
            step = (f - (best_val - delta)) / gnorm2
            if step <= 0.0:
                step = delta / gnorm2
            L = project(L - step * g)
            f = l1_energy(M, L)
            if f < best_val:
                best_val = f
                best_L = L.copy()
        delta *= 0.5
    return best_val
