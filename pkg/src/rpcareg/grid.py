"""Cell-centered image grids: warping, gradients, resampling, landmark transport.

Images live on an m-by-n grid of cell centers with spacings (h1, h2); the
physical domain is [0, m*h1] x [0, n*h2].  All sampling uses bilinear
interpolation of the image extended by a ring of zero-valued ghost cells, so
the interpolant decays linearly to zero across a half-cell band outside the
domain and is exactly zero beyond it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Image",
    "DisplacementField",
    "LandmarkSet",
    "cell_centers",
    "warp",
    "image_gradient",
    "block_mean",
    "downsample",
    "prolongate",
    "map_landmarks",
]


def _frozen_array(a, dtype=np.float64):
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Image:
    """Scalar image on a cell-centered grid."""

    values: np.ndarray
    h1: float = 1.0
    h2: float = 1.0

    def __post_init__(self):
        values = _frozen_array(self.values)
        if values.ndim != 2:
            raise ValueError(f"image values must be 2-D, got shape {values.shape}")
        if values.shape[0] < 2 or values.shape[1] < 2:
            raise ValueError(f"image must be at least 2x2, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("image values must be finite")
        if self.h1 <= 0.0 or self.h2 <= 0.0:
            raise ValueError("grid spacings must be positive")
        object.__setattr__(self, "values", values)

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


@dataclass(frozen=True)
class DisplacementField:
    """Per-pixel displacement (pull-back convention): warped(x) = image(x + u(x))."""

    components: np.ndarray  # (m, n, 2)
    h1: float = 1.0
    h2: float = 1.0

    def __post_init__(self):
        comp = _frozen_array(self.components)
        if comp.ndim != 3 or comp.shape[2] != 2:
            raise ValueError(f"field components must have shape (m, n, 2), got {comp.shape}")
        if not np.all(np.isfinite(comp)):
            raise ValueError("field components must be finite")
        if self.h1 <= 0.0 or self.h2 <= 0.0:
            raise ValueError("grid spacings must be positive")
        object.__setattr__(self, "components", comp)

    @classmethod
    def zero(cls, m: int, n: int, h1: float = 1.0, h2: float = 1.0) -> "DisplacementField":
        return cls(np.zeros((m, n, 2)), h1, h2)

    @property
    def m(self) -> int:
        return self.components.shape[0]

    @property
    def n(self) -> int:
        return self.components.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.components.shape[:2]


@dataclass(frozen=True)
class LandmarkSet:
    """Continuous landmark positions in physical (pixel) coordinates.

    `converged` is set by map_landmarks and flags landmarks whose fixed-point
    inversion reached the residual tolerance.
    """

    positions: np.ndarray  # (count, 2)
    converged: np.ndarray | None = None

    def __post_init__(self):
        pos = _frozen_array(self.positions)
        if pos.ndim != 2 or pos.shape[1] != 2 or pos.shape[0] < 1:
            raise ValueError(f"positions must have shape (count, 2), got {pos.shape}")
        if not np.all(np.isfinite(pos)):
            raise ValueError("landmark positions must be finite")
        object.__setattr__(self, "positions", pos)
        if self.converged is not None:
            object.__setattr__(self, "converged", _frozen_array(self.converged, dtype=bool))

    @property
    def count(self) -> int:
        return self.positions.shape[0]


def cell_centers(m: int, n: int, h1: float = 1.0, h2: float = 1.0) -> np.ndarray:
    """Physical coordinates of the cell centers, shape (m, n, 2)."""
    out = np.empty((m, n, 2))
    out[..., 0] = ((np.arange(m) + 0.5) * h1)[:, None]
    out[..., 1] = ((np.arange(n) + 0.5) * h2)[None, :]
    return out


def _interp_cells(values: np.ndarray, h1: float, h2: float, points: np.ndarray):
    """Locate points on the zero-padded cell grid and gather corner values."""
    m, n = values.shape
    padded = np.zeros((m + 2, n + 2))
    padded[1:-1, 1:-1] = values
    g1 = points[..., 0] / h1 + 0.5  # index coordinates on the padded grid
    g2 = points[..., 1] / h2 + 0.5
    covered = (g1 >= 0.0) & (g1 <= m + 1.0) & (g2 >= 0.0) & (g2 <= n + 1.0)
    i0 = np.clip(np.floor(g1).astype(np.int64), 0, m)
    j0 = np.clip(np.floor(g2).astype(np.int64), 0, n)
    s = np.clip(g1 - i0, 0.0, 1.0)
    t = np.clip(g2 - j0, 0.0, 1.0)
    f00 = padded[i0, j0]
    f10 = padded[i0 + 1, j0]
    f01 = padded[i0, j0 + 1]
    f11 = padded[i0 + 1, j0 + 1]
    return covered, s, t, f00, f10, f01, f11


def interpolate(values: np.ndarray, h1: float, h2: float, points: np.ndarray) -> np.ndarray:
    """Bilinear interpolation at physical points; zero outside the padded band."""
    covered, s, t, f00, f10, f01, f11 = _interp_cells(values, h1, h2, points)
    val = (
        f00 * (1.0 - s) * (1.0 - t)
        + f10 * s * (1.0 - t)
        + f01 * (1.0 - s) * t
        + f11 * s * t
    )
    return np.where(covered, val, 0.0)


def interpolate_gradient(values: np.ndarray, h1: float, h2: float, points: np.ndarray) -> np.ndarray:
    """Analytic gradient of the bilinear interpolant; zero for points outside the domain.

    At cell boundaries the gradient is taken from the cell whose lower-left
    corner is the sample (floor convention).
    """
    m, n = values.shape
    _, s, t, f00, f10, f01, f11 = _interp_cells(values, h1, h2, points)
    d1 = ((f10 - f00) * (1.0 - t) + (f11 - f01) * t) / h1
    d2 = ((f01 - f00) * (1.0 - s) + (f11 - f10) * s) / h2
    inside = (
        (points[..., 0] >= 0.0)
        & (points[..., 0] <= m * h1)
        & (points[..., 1] >= 0.0)
        & (points[..., 1] <= n * h2)
    )
    out = np.stack([np.where(inside, d1, 0.0), np.where(inside, d2, 0.0)], axis=-1)
    return out


def _check_dims(image: Image, field: DisplacementField):
    if image.shape != field.shape:
        raise ValueError(f"image shape {image.shape} does not match field shape {field.shape}")
    if not (np.isclose(image.h1, field.h1) and np.isclose(image.h2, field.h2)):
        raise ValueError("image and field grid spacings differ")


def warp(image: Image, field: DisplacementField) -> Image:
    """Deform an image: output(x) = image(x + u(x)) sampled at all cell centers."""
    _check_dims(image, field)
    pts = cell_centers(image.m, image.n, image.h1, image.h2) + field.components
    return Image(interpolate(image.values, image.h1, image.h2, pts), image.h1, image.h2)


def image_gradient(image: Image, field: DisplacementField) -> np.ndarray:
    """Gradient of the interpolated image at the warped sample points, shape (m, n, 2)."""
    _check_dims(image, field)
    pts = cell_centers(image.m, image.n, image.h1, image.h2) + field.components
    return interpolate_gradient(image.values, image.h1, image.h2, pts)


def block_mean(values: np.ndarray) -> np.ndarray:
    """Mean over non-overlapping 2x2 blocks (the downsampling kernel)."""
    m, n = values.shape
    if m % 2 != 0 or n % 2 != 0:
        raise ValueError(f"block mean requires even dimensions, got {values.shape}")
    return values.reshape(m // 2, 2, n // 2, 2).mean(axis=(1, 3))


def downsample(image: Image) -> Image:
    """Halve the resolution by 2x2 block means; grid spacing doubles."""
    return Image(block_mean(image.values), 2.0 * image.h1, 2.0 * image.h2)


def prolongate(values: np.ndarray) -> np.ndarray:
    """Copy each grid value to its 2x2 block of fine-grid children.

    Works for any per-grid-point variable shaped (m, n) or (m, n, c).
    """
    return np.repeat(np.repeat(values, 2, axis=0), 2, axis=1)


def map_landmarks(
    landmarks: LandmarkSet,
    field: DisplacementField,
    tol: float = 1e-6,
    max_iter: int = 50,
) -> LandmarkSet:
    """Transport landmarks through a pull-back displacement field.

    For each landmark p, finds q with q + u(q) = p by the fixed-point
    iteration q <- p - u(q); q is where the feature originally at p appears
    in the warped image.  Landmarks that fail to reach `tol` within
    `max_iter` steps keep their last iterate and are flagged.
    """
    p = np.array(landmarks.positions, dtype=float)
    q = p.copy()
    converged = np.zeros(p.shape[0], dtype=bool)
    comps = field.components
    for _ in range(max_iter):
        u1 = interpolate(comps[..., 0], field.h1, field.h2, q)
        u2 = interpolate(comps[..., 1], field.h1, field.h2, q)
        q_next = p - np.stack([u1, u2], axis=-1)
        residual = np.linalg.norm(q_next - q, axis=-1)
        q = q_next
        converged = residual < tol
        if np.all(converged):
            break
    return LandmarkSet(q, converged=converged)
