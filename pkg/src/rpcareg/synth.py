"""Synthetic benchmark scenes and prescribed deformation families.

The benchmark scene shows a striped ellipse moving along a semicircular arc
in front of a black background with a fixed white rectangle and a fixed
white border ring.  Stripe direction alternates per frame (vertical on odd
1-based frames, horizontal on even) and the stripe pattern is attached to
the ellipse, so frames of equal parity are exact translates of each other.
Each frame carries 17 analytically placed landmarks: 4 rectangle corners,
5 on the ellipse (center plus axis endpoints, landmark indices 5-9), and 8
on the ring (outer corners and edge midpoints).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import DisplacementField, Image, LandmarkSet

__all__ = [
    "EllipseSceneConfig",
    "DeformationSchedule",
    "generate_ellipse_sequence",
    "prescribed_field",
    "DEFORMATION_KINDS",
]

DEFORMATION_KINDS = ("translation", "rotation", "scaling", "shearing")


@dataclass(frozen=True)
class EllipseSceneConfig:
    """Scene geometry in fractions of the image extent; defaults fit any square size.

    The ellipse center travels a semicircle of radius path_radius_frac times
    the smaller image extent, bulging toward larger row indices.
    """

    height: int = 200
    width: int = 200
    frames: int = 10
    path_radius_frac: float = 0.25
    path_center_frac: tuple[float, float] = (0.45, 0.50)
    semi_axes_frac: tuple[float, float] = (0.19, 0.14)
    stripe_period: float = 8.0
    stripe_bright: float = 1.0
    stripe_dark: float = 0.4
    ring_outer_frac: float = 0.04
    ring_inner_frac: float = 0.08
    rect_frac: tuple[float, float, float, float] = (0.12, 0.24, 0.60, 0.80)
    supersample: int = 4

    def __post_init__(self):
        if self.height < 8 or self.width < 8:
            raise ValueError("scene resolution too small")
        if self.frames < 1:
            raise ValueError("need at least one frame")
        if self.stripe_period <= 0.0:
            raise ValueError("stripe period must be positive")
        if not 0.0 < self.ring_outer_frac < self.ring_inner_frac < 0.5:
            raise ValueError("ring margins must satisfy 0 < outer < inner < 0.5")
        if self.supersample < 1:
            raise ValueError("supersample factor must be at least 1")
        self._validate_geometry()

    # -- derived geometry, physical (pixel) coordinates -------------------

    @property
    def scale(self) -> float:
        return float(min(self.height, self.width))

    @property
    def path_radius(self) -> float:
        return self.path_radius_frac * self.scale

    @property
    def path_center(self) -> np.ndarray:
        return np.array(
            [self.path_center_frac[0] * self.height, self.path_center_frac[1] * self.width]
        )

    @property
    def semi_axes(self) -> np.ndarray:
        return np.array([self.semi_axes_frac[0] * self.scale, self.semi_axes_frac[1] * self.scale])

    @property
    def rect_bounds(self) -> np.ndarray:
        r0, r1, c0, c1 = self.rect_frac
        return np.array([r0 * self.height, r1 * self.height, c0 * self.width, c1 * self.width])

    @property
    def ring_outer(self) -> np.ndarray:
        f = self.ring_outer_frac
        return np.array(
            [f * self.height, (1 - f) * self.height, f * self.width, (1 - f) * self.width]
        )

    @property
    def ring_inner(self) -> np.ndarray:
        f = self.ring_inner_frac
        return np.array(
            [f * self.height, (1 - f) * self.height, f * self.width, (1 - f) * self.width]
        )

    def ellipse_center(self, frame: int) -> np.ndarray:
        """Center position of the ellipse in frame `frame` (0-based)."""
        t = 0.5 if self.frames == 1 else frame / (self.frames - 1)
        theta = math.pi * t
        c = self.path_center
        r = self.path_radius
        return np.array([c[0] + r * math.sin(theta), c[1] - r * math.cos(theta)])

    def _validate_geometry(self):
        inner = self.ring_inner
        a = self.semi_axes
        margin = 0.5
        for f in range(self.frames):
            c = self.ellipse_center(f)
            if not (
                inner[0] + margin < c[0] - a[0]
                and c[0] + a[0] < inner[1] - margin
                and inner[2] + margin < c[1] - a[1]
                and c[1] + a[1] < inner[3] - margin
            ):
                raise ValueError("ellipse leaves the ring interior; scene geometry exceeds domain")
        r = self.rect_bounds
        if not (inner[0] < r[0] < r[1] < inner[1] and inner[2] < r[2] < r[3] < inner[3]):
            raise ValueError("rectangle outside the ring interior; scene geometry exceeds domain")
        rows = [self.ellipse_center(f)[0] for f in range(self.frames)]
        cols = [self.ellipse_center(f)[1] for f in range(self.frames)]
        ellipse_box = (min(rows) - a[0], max(rows) + a[0], min(cols) - a[1], max(cols) + a[1])
        overlaps = not (
            ellipse_box[1] < r[0]
            or ellipse_box[0] > r[1]
            or ellipse_box[3] < r[2]
            or ellipse_box[2] > r[3]
        )
        if overlaps:
            raise ValueError("ellipse path overlaps the rectangle; adjust the scene geometry")

    def landmarks(self, frame: int) -> np.ndarray:
        """The 17 landmark positions for one frame (rectangle, ellipse, ring order)."""
        r = self.rect_bounds
        rect = [(r[0], r[2]), (r[0], r[3]), (r[1], r[3]), (r[1], r[2])]
        c = self.ellipse_center(frame)
        a = self.semi_axes
        ellipse = [
            (c[0], c[1]),
            (c[0] - a[0], c[1]),
            (c[0] + a[0], c[1]),
            (c[0], c[1] - a[1]),
            (c[0], c[1] + a[1]),
        ]
        o = self.ring_outer
        ring = [
            (o[0], o[2]),
            (o[0], o[3]),
            (o[1], o[3]),
            (o[1], o[2]),
            (o[0], 0.5 * (o[2] + o[3])),
            (o[1], 0.5 * (o[2] + o[3])),
            (0.5 * (o[0] + o[1]), o[2]),
            (0.5 * (o[0] + o[1]), o[3]),
        ]
        return np.array(rect + ellipse + ring, dtype=float)

    @property
    def moving_landmark_indices(self) -> np.ndarray:
        return np.arange(4, 9)

    @property
    def stationary_landmark_indices(self) -> np.ndarray:
        return np.concatenate([np.arange(0, 4), np.arange(9, 17)])


def _in_box(Y, X, box):
    return (Y >= box[0]) & (Y <= box[1]) & (X >= box[2]) & (X <= box[3])


def generate_ellipse_sequence(
    config: EllipseSceneConfig,
) -> tuple[list[Image], list[LandmarkSet]]:
    """Render the frames (supersampled, then block-averaged) and their landmarks."""
    m, n, S = config.height, config.width, config.supersample
    yy = (np.arange(m * S) + 0.5) / S
    xx = (np.arange(n * S) + 0.5) / S
    Y = yy[:, None]
    X = xx[None, :]
    ring = _in_box(Y, X, config.ring_outer) & ~_in_box(Y, X, config.ring_inner)
    rect = _in_box(Y, X, config.rect_bounds)
    static = np.where(ring | rect, 1.0, 0.0)
    a = config.semi_axes

    images: list[Image] = []
    landmark_sets: list[LandmarkSet] = []
    for f in range(config.frames):
        c = config.ellipse_center(f)
        inside = ((Y - c[0]) / a[0]) ** 2 + ((X - c[1]) / a[1]) ** 2 <= 1.0
        vertical = (f + 1) % 2 == 1  # odd 1-based frames carry vertical stripes
        coord = (X - c[1]) if vertical else (Y - c[0])
        bands = np.floor(coord / config.stripe_period).astype(np.int64) % 2 == 0
        stripes = np.where(bands, config.stripe_bright, config.stripe_dark)
        fine = np.where(inside, stripes, static)
        values = fine.reshape(m, S, n, S).mean(axis=(1, 3))
        images.append(Image(values))
        landmark_sets.append(LandmarkSet(config.landmarks(f)))
    return images, landmark_sets


@dataclass(frozen=True)
class DeformationSchedule:
    """Per-kind magnitude of one deformation step in the prescribed families."""

    translation_step: tuple[float, float] = (1.0, 0.0)
    rotation_step_deg: float = 2.0
    scaling_step: float = 0.02
    shear_step: float = 0.02
    max_index: int = 15


def prescribed_field(
    kind: str,
    j: int,
    m: int,
    n: int,
    h1: float = 1.0,
    h2: float = 1.0,
    schedule: DeformationSchedule | None = None,
) -> DisplacementField:
    """Displacement field of the affine map at step j about the domain center; j = 0 is zero."""
    schedule = schedule or DeformationSchedule()
    if kind not in DEFORMATION_KINDS:
        raise ValueError(f"unknown deformation kind {kind!r}")
    if abs(j) > schedule.max_index:
        raise ValueError(f"step index {j} exceeds the schedule range +-{schedule.max_index}")
    comp = np.zeros((m, n, 2))
    if kind == "translation":
        comp[..., 0] = j * schedule.translation_step[0]
        comp[..., 1] = j * schedule.translation_step[1]
        return DisplacementField(comp, h1, h2)
    center = np.array([0.5 * m * h1, 0.5 * n * h2])
    x1 = (np.arange(m) + 0.5) * h1 - center[0]
    x2 = (np.arange(n) + 0.5) * h2 - center[1]
    R1 = x1[:, None] * np.ones((1, n))
    R2 = np.ones((m, 1)) * x2[None, :]
    if kind == "rotation":
        theta = math.radians(j * schedule.rotation_step_deg)
        q11 = math.cos(theta) - 1.0
        q12 = -math.sin(theta)
        comp[..., 0] = q11 * R1 + q12 * R2
        comp[..., 1] = -q12 * R1 + q11 * R2
    elif kind == "scaling":
        s = j * schedule.scaling_step
        comp[..., 0] = s * R1
        comp[..., 1] = s * R2
    else:  # shearing
        comp[..., 0] = j * schedule.shear_step * R2
    return DisplacementField(comp, h1, h2)
