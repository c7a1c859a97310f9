"""Group dissimilarity measures and landmark accuracy.

Four measures on an image group: plain variance, the weighted-eigenvalue
correlation measure, the penalized low-rank/sparse split (nuclear norm plus
weighted l1), and the constrained variant that bounds the nuclear norm of
the centered low-rank matrix while minimizing the l1 distance to the data.
The two decomposition measures are solved with the generic primal-dual
iteration.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .grid import Image, LandmarkSet
from .lowrank import nuclear_ball_projection, nuclear_norm, economic_svd
from .solver import PdhgSettings, pdhg_solve
from .operators import vec_image

__all__ = [
    "DecompositionResult",
    "casorati",
    "d_var",
    "d_pca2",
    "d_pcp",
    "d_delta_rpca",
    "landmark_accuracy",
    "default_metric_settings",
]


def default_metric_settings() -> PdhgSettings:
    # tighter than registration subproblems so landscape curves come out smooth
    return PdhgSettings(tau=0.99, eta=0.99, max_iter=5000, tol=1e-6)


def casorati(images: Sequence[Image]) -> np.ndarray:
    """Column-stack the group: column k is the column-major vectorization of image k."""
    if len(images) == 0:
        raise ValueError("empty image group")
    shape = images[0].shape
    for im in images:
        if im.shape != shape:
            raise ValueError(f"image dimensions differ: {im.shape} vs {shape}")
    return np.stack([vec_image(im.values) for im in images], axis=1)


def _as_casorati(images) -> np.ndarray:
    if isinstance(images, np.ndarray):
        if images.ndim != 2:
            raise ValueError("group matrix must be 2-D")
        return np.asarray(images, dtype=float)
    return casorati(images)


@dataclass(frozen=True)
class DecompositionResult:
    """Low-rank/sparse split of a group matrix with its optimal value.

    `singular_values` are those of the centered low-rank part.  The value is
    recomputable from the parts; `consistency_error` returns the relative
    mismatch.
    """

    value: float
    low_rank: np.ndarray
    sparse: np.ndarray
    singular_values: np.ndarray
    _recomputed: float

    def consistency_error(self) -> float:
        scale = max(abs(self.value), 1e-30)
        return abs(self.value - self._recomputed) / scale


def d_var(images) -> float:
    """Half the summed squared distances to the pixelwise mean image."""
    M = _as_casorati(images)
    centered = M - M.mean(axis=1, keepdims=True)
    return 0.5 * float(np.sum(centered * centered))


def d_pca2(images) -> float:
    """Eigenvalues of the group correlation matrix, weighted by their (descending) rank.

    Columns are centered by their own scalar mean and normalized; a constant
    image (zero standard deviation) is rejected.
    """
    M = _as_casorati(images)
    N = M.shape[1]
    centered = M - M.mean(axis=0, keepdims=True)
    norms = np.linalg.norm(centered, axis=0)
    if np.any(norms == 0.0):
        raise ValueError("constant image in group: zero standard deviation")
    normalized = centered / norms
    corr = (normalized.T @ normalized) / (N - 1)
    lam = np.linalg.eigvalsh(corr)[::-1]
    lam = np.clip(lam, 0.0, None)
    return float(np.sum(np.arange(1, N + 1) * lam))


def _soft(x: np.ndarray, t: float) -> np.ndarray:
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def d_pcp(images, mu: float, settings: PdhgSettings | None = None) -> DecompositionResult:
    """Penalized split: minimize nuclear norm of L plus mu times l1 norm of M - L.

    Two-block primal-dual solve; the coupling operator is the identity, so
    the step sizes follow from the exact norm 1.
    """
    if mu <= 0.0:
        raise ValueError(f"mu must be positive, got {mu}")
    M = _as_casorati(images)
    mn, N = M.shape
    settings = settings or default_metric_settings()

    def prox_dual(yv, eta):
        u, s, vt = economic_svd(yv.reshape((mn, N), order="F"))
        return ((u * np.minimum(s, 1.0)) @ vt).reshape(-1, order="F")

    def prox_primal(xv, tau):
        X = xv.reshape((mn, N), order="F")
        return (M + _soft(X - M, tau * mu)).reshape(-1, order="F")

    x0 = M.reshape(-1, order="F")
    y0 = np.zeros(mn * N)
    x, _, _ = pdhg_solve(lambda v: v, lambda v: v, prox_dual, prox_primal, x0, y0, settings)
    L = x.reshape((mn, N), order="F")
    E = M - L
    value = nuclear_norm(L) + mu * float(np.abs(E).sum())
    sv = np.linalg.svd(L - L.mean(axis=1, keepdims=True), compute_uv=False)
    return DecompositionResult(value, L, E, sv, value)


def d_delta_rpca(images, nu: float, settings: PdhgSettings | None = None) -> DecompositionResult:
    """Constrained split: minimize the l1 distance of L to M subject to a nuclear-norm
    bound nu on the centered L.

    Primal-dual solve with the centering operator as coupling (norm 1).  The
    returned low-rank part is projected onto the constraint set, so
    feasibility holds exactly.
    """
    if nu < 0.0:
        raise ValueError(f"nu must be nonnegative, got {nu}")
    M = _as_casorati(images)
    mn, N = M.shape
    if N == 1:
        # centering annihilates a single column; L = M is feasible and optimal
        L = M.copy()
        return DecompositionResult(0.0, L, M - L, np.zeros(1), 0.0)
    settings = settings or default_metric_settings()

    def center_flat(v):
        X = v.reshape((mn, N), order="F")
        return (X - X.mean(axis=1, keepdims=True)).reshape(-1, order="F")

    def prox_dual(yv, eta):
        Y = yv.reshape((mn, N), order="F")
        out = Y - eta * nuclear_ball_projection(Y / eta, nu)
        return out.reshape(-1, order="F")

    def prox_primal(xv, tau):
        X = xv.reshape((mn, N), order="F")
        return (M + _soft(X - M, tau)).reshape(-1, order="F")

    mean = M.mean(axis=1, keepdims=True)
    L_init = mean + nuclear_ball_projection(M - mean, nu)
    x0 = L_init.reshape(-1, order="F")
    y0 = np.zeros(mn * N)
    x, _, _ = pdhg_solve(center_flat, center_flat, prox_dual, prox_primal, x0, y0, settings)
    L = x.reshape((mn, N), order="F")
    mean = L.mean(axis=1, keepdims=True)
    L = mean + nuclear_ball_projection(L - mean, nu)
    E = M - L
    value = float(np.abs(E).sum())
    sv = np.linalg.svd(L - L.mean(axis=1, keepdims=True), compute_uv=False)
    return DecompositionResult(value, L, E, sv, float(np.abs(M - L).sum()))


def landmark_accuracy(landmark_sets: Sequence[LandmarkSet] | np.ndarray) -> np.ndarray:
    """Per-landmark mean Euclidean distance to the mean position across frames."""
    if isinstance(landmark_sets, np.ndarray):
        positions = np.asarray(landmark_sets, dtype=float)
    else:
        counts = {s.count for s in landmark_sets}
        if len(counts) != 1:
            raise ValueError(f"landmark counts differ across frames: {sorted(counts)}")
        positions = np.stack([s.positions for s in landmark_sets])
    if positions.ndim != 3 or positions.shape[2] != 2:
        raise ValueError("expected landmark positions of shape (frames, count, 2)")
    mean = positions.mean(axis=0, keepdims=True)
    return np.linalg.norm(positions - mean, axis=2).mean(axis=0)
