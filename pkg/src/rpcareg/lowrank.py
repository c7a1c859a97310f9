"""SVD utilities: nuclear norm, spectral norm estimation, l1-ball and nuclear-ball projections."""

from __future__ import annotations

from typing import Callable, NamedTuple

import numpy as np

__all__ = [
    "SvdTriple",
    "economic_svd",
    "nuclear_norm",
    "project_l1_ball",
    "nuclear_ball_projection",
    "power_iteration",
]


class SvdTriple(NamedTuple):
    """Economic SVD A = U diag(s) Vt with orthonormal columns in U and rows in Vt."""

    u: np.ndarray
    s: np.ndarray
    vt: np.ndarray


def economic_svd(matrix: np.ndarray) -> SvdTriple:
    u, s, vt = np.linalg.svd(np.asarray(matrix, dtype=float), full_matrices=False)
    return SvdTriple(u, s, vt)


def nuclear_norm(matrix: np.ndarray) -> float:
    """Sum of the singular values."""
    return float(np.sum(np.linalg.svd(np.asarray(matrix, dtype=float), compute_uv=False)))


def project_l1_ball(v: np.ndarray, radius: float) -> np.ndarray:
    """Exact Euclidean projection onto the l1 ball of the given radius.

    Sort-based thresholding; O(d log d), exact up to floating point.
    """
    if radius < 0.0:
        raise ValueError(f"l1-ball radius must be nonnegative, got {radius}")
    v = np.asarray(v, dtype=float)
    if radius == 0.0:
        return np.zeros_like(v)
    a = np.abs(v)
    if a.sum() <= radius:
        return v.copy()
    u = np.sort(a)[::-1]
    css = np.cumsum(u)
    k = np.nonzero(u * np.arange(1, v.size + 1) > css - radius)[0][-1]
    theta = (css[k] - radius) / (k + 1.0)
    return np.sign(v) * np.maximum(a - theta, 0.0)


def nuclear_ball_projection(matrix: np.ndarray, radius: float) -> np.ndarray:
    """Projection onto {A : ||A||_* <= radius} via l1 projection of the singular values."""
    if radius < 0.0:
        raise ValueError(f"nuclear-ball radius must be nonnegative, got {radius}")
    u, s, vt = economic_svd(matrix)
    if s.sum() <= radius:
        return np.array(matrix, dtype=float)
    return (u * project_l1_ball(s, radius)) @ vt


def power_iteration(
    apply: Callable[[np.ndarray], np.ndarray],
    adjoint: Callable[[np.ndarray], np.ndarray],
    dim: int,
    tol: float = 1e-8,
    max_it: int = 500,
) -> float:
    """Estimate the spectral norm of a linear operator given by apply/adjoint.

    Deterministic all-ones start vector.  If the iteration stalls above `tol`
    for `max_it` steps, two restarts from fixed pseudo-random seeds guard
    against a start vector orthogonal to the top singular space; the largest
    estimate is returned (power iterates never overestimate).
    """

    def run(x0: np.ndarray) -> tuple[float, bool]:
        x = x0 / np.linalg.norm(x0)
        sigma = 0.0
        for _ in range(max_it):
            z = apply(x)
            sigma_new = float(np.linalg.norm(z))
            if sigma_new == 0.0:
                return 0.0, True
            x = adjoint(z)
            nx = np.linalg.norm(x)
            if nx == 0.0:
                return sigma_new, True
            x = x / nx
            if abs(sigma_new - sigma) <= tol * max(sigma_new, 1e-300):
                return sigma_new, True
            sigma = sigma_new
        return sigma, False

    estimate, converged = run(np.ones(dim))
    if not converged:
        for seed in (0, 1):
            rng = np.random.default_rng(seed)
            est, converged = run(rng.standard_normal(dim))
            estimate = max(estimate, est)
            if converged:
                break
    return estimate
