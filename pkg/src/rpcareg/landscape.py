"""Energy sweeps of the group measures over prescribed deformation families.

One image acts as a fixed reference while all others are warped uniformly
by the step-j field of the chosen family; the measure is evaluated per j.
Rows are independent and can be computed in parallel.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .grid import Image, warp
from .lowrank import nuclear_norm
from .metrics import casorati, d_delta_rpca, d_pca2, d_pcp, d_var
from .synth import DeformationSchedule, prescribed_field

__all__ = ["METRICS", "NU_FRACTION", "landscape_row", "landscape_sweep"]

METRICS = ("pcp", "drpca", "var", "pca2")

# constraint threshold relative to the centered group norm, recomputed per j
NU_FRACTION = 0.9


def landscape_row(
    frames: list[np.ndarray],
    metric: str,
    kind: str,
    j: int,
    schedule: DeformationSchedule | None = None,
) -> tuple[int, float, float | None, float | None]:
    """Evaluate one sweep sample; returns (j, total, term1, term2).

    For the penalized split, term1/term2 are the nuclear and weighted-l1
    summands; for the constrained split they are the l1 value and the
    constraint slack; the scalar measures carry no terms.
    """
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}")
    images = [Image(v) for v in frames]
    m, n = images[0].shape
    field = prescribed_field(kind, j, m, n, schedule=schedule)
    warped = [images[0]] + [warp(im, field) for im in images[1:]]
    M = casorati(warped)
    if metric == "var":
        return j, d_var(M), None, None
    if metric == "pca2":
        return j, d_pca2(M), None, None
    if metric == "pcp":
        mu = float(M.shape[0]) ** -0.5
        res = d_pcp(M, mu)
        term1 = nuclear_norm(res.low_rank)
        term2 = mu * float(np.abs(res.sparse).sum())
        return j, res.value, term1, term2
    nu = NU_FRACTION * nuclear_norm(M - M.mean(axis=1, keepdims=True))
    res = d_delta_rpca(M, nu)
    slack = nu - float(res.singular_values.sum())
    return j, res.value, res.value, slack


def landscape_sweep(
    images: list[Image],
    metric: str,
    kind: str,
    k: int,
    schedule: DeformationSchedule | None = None,
    threads: int = 1,
) -> list[tuple[int, float, float | None, float | None]]:
    """All rows j = -k..k, in order."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    if schedule is None:
        schedule = DeformationSchedule(max_index=max(k, DeformationSchedule().max_index))
    frames = [np.asarray(im.values) for im in images]
    js = list(range(-k, k + 1))
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(landscape_row, frames, metric, kind, j, schedule) for j in js]
            return [f.result() for f in futures]
    return [landscape_row(frames, metric, kind, j, schedule) for j in js]
