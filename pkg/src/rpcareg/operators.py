"""Matrix-free linear operators of the registration saddle-point problem.

The primal variable stacks N displacement fields and N low-rank columns,
x = (u^1, ..., u^N, l_1, ..., l_N).  The dual variable is partitioned into
three blocks matching the rows of the composite operator: per-image
linearized data residuals, the centered low-rank matrix, and per-image
forward differences.

Vectorization is column-major per image plane throughout, matching the
column-stacked group matrix convention.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

__all__ = [
    "TvOperator",
    "CenteringOperator",
    "CompositeOperator",
    "PrimalState",
    "DualState",
    "zeros_primal",
    "zeros_dual",
    "pack_primal",
    "unpack_primal",
    "pack_dual",
    "unpack_dual",
    "vec_image",
    "unvec_image",
    "vec_stack",
    "unvec_stack",
    "group_norms_21",
]


def vec_image(a: np.ndarray) -> np.ndarray:
    """Column-major vectorization of one image plane."""
    return np.asarray(a).reshape(-1, order="F")


def unvec_image(v: np.ndarray, m: int, n: int) -> np.ndarray:
    return np.asarray(v).reshape((m, n), order="F")


def vec_stack(planes: np.ndarray) -> np.ndarray:
    """(N, m, n) stack of planes -> (m*n, N) matrix of column-major columns."""
    N, m, n = planes.shape
    return planes.transpose(0, 2, 1).reshape(N, m * n).T


def unvec_stack(cols: np.ndarray, m: int, n: int) -> np.ndarray:
    """(m*n, N) columns -> (N, m, n) stack of planes."""
    N = cols.shape[1]
    return cols.T.reshape(N, n, m).transpose(0, 2, 1)


class PrimalState(NamedTuple):
    u: np.ndarray  # (N, m, n, 2) displacement fields
    l: np.ndarray  # (m*n, N) low-rank columns


class DualState(NamedTuple):
    y1: np.ndarray  # (m*n, N) data-block multipliers
    y2: np.ndarray  # (m*n, N) centering-block multipliers
    y3: np.ndarray  # (N, 4, m, n) TV-block multipliers


def zeros_primal(N: int, m: int, n: int) -> PrimalState:
    return PrimalState(np.zeros((N, m, n, 2)), np.zeros((m * n, N)))


def zeros_dual(N: int, m: int, n: int) -> DualState:
    return DualState(np.zeros((m * n, N)), np.zeros((m * n, N)), np.zeros((N, 4, m, n)))


def pack_primal(state: PrimalState) -> np.ndarray:
    u, l = state
    return np.concatenate([u.transpose(0, 3, 2, 1).reshape(-1), l.reshape(-1, order="F")])


def unpack_primal(vec: np.ndarray, N: int, m: int, n: int) -> PrimalState:
    mn = m * n
    u = vec[: 2 * N * mn].reshape(N, 2, n, m).transpose(0, 3, 2, 1).copy()
    l = vec[2 * N * mn :].reshape((mn, N), order="F").copy()
    return PrimalState(u, l)


def pack_dual(state: DualState) -> np.ndarray:
    y1, y2, y3 = state
    return np.concatenate(
        [y1.reshape(-1, order="F"), y2.reshape(-1, order="F"), y3.transpose(0, 1, 3, 2).reshape(-1)]
    )


def unpack_dual(vec: np.ndarray, N: int, m: int, n: int) -> DualState:
    mn = m * n
    y1 = vec[: N * mn].reshape((mn, N), order="F").copy()
    y2 = vec[N * mn : 2 * N * mn].reshape((mn, N), order="F").copy()
    y3 = vec[2 * N * mn :].reshape(N, 4, n, m).transpose(0, 1, 3, 2).copy()
    return DualState(y1, y2, y3)


@dataclass(frozen=True)
class TvOperator:
    """Forward difference quotients with Neumann boundary (zero last difference).

    Differences along axis 1 are divided by h1, along axis 2 by h2, so the
    cell-area weight h1*h2 on the group norms yields a resolution-consistent
    discretization of the total variation integral.  Output blocks per
    field: (axis-1 diff of component 1, axis-2 diff of component 1, axis-1
    diff of component 2, axis-2 diff of component 2), so that after
    column-major flattening the entries (i, i+mn, i+2mn, i+3mn) form one
    per-pixel group.
    """

    m: int
    n: int
    h1: float = 1.0
    h2: float = 1.0

    def apply(self, field: np.ndarray) -> np.ndarray:
        """(m, n, 2) -> (4, m, n)."""
        out = np.zeros((4, self.m, self.n))
        for c in (0, 1):
            out[2 * c, :-1, :] = (field[1:, :, c] - field[:-1, :, c]) / self.h1
            out[2 * c + 1, :, :-1] = (field[:, 1:, c] - field[:, :-1, c]) / self.h2
        return out

    def adjoint(self, w: np.ndarray) -> np.ndarray:
        """(4, m, n) -> (m, n, 2)."""
        out = np.zeros((self.m, self.n, 2))
        for c in (0, 1):
            a = w[2 * c] / self.h1
            out[:-1, :, c] -= a[:-1, :]
            out[1:, :, c] += a[:-1, :]
            b = w[2 * c + 1] / self.h2
            out[:, :-1, c] -= b[:, :-1]
            out[:, 1:, c] += b[:, :-1]
        return out


def group_norms_21(w: np.ndarray) -> np.ndarray:
    """Per-pixel Euclidean norms of the 4-entry difference groups, (..., 4, m, n) -> (..., m, n)."""
    return np.sqrt(np.sum(w * w, axis=-3))


@dataclass(frozen=True)
class CenteringOperator:
    """Subtract the mean of all columns from each column; self-adjoint and idempotent."""

    n_images: int
    pixels: int

    def apply(self, cols: np.ndarray) -> np.ndarray:
        return cols - cols.mean(axis=1, keepdims=True)

    adjoint = apply


@dataclass(frozen=True)
class CompositeOperator:
    """The stacked operator (data linearization rows, centering rows, TV rows).

    Never materialized; `apply`/`adjoint` work on flat vectors and cost
    O(N*m*n) per call.
    """

    gradients: np.ndarray  # (N, m, n, 2) image gradients at the linearization points
    tv: TvOperator
    centering: CenteringOperator

    @classmethod
    def from_gradients(cls, gradients: np.ndarray, h1: float = 1.0, h2: float = 1.0) -> "CompositeOperator":
        gradients = np.asarray(gradients, dtype=float)
        N, m, n, _ = gradients.shape
        return cls(gradients, TvOperator(m, n, h1, h2), CenteringOperator(N, m * n))

    @property
    def group_shape(self) -> tuple[int, int, int]:
        N, m, n, _ = self.gradients.shape
        return N, m, n

    @property
    def primal_dim(self) -> int:
        N, m, n = self.group_shape
        return 3 * N * m * n

    @property
    def dual_dim(self) -> int:
        N, m, n = self.group_shape
        return 6 * N * m * n

    def apply_state(self, x: PrimalState) -> DualState:
        N, m, n = self.group_shape
        dots = np.einsum("kijc,kijc->kij", self.gradients, x.u)
        y1 = vec_stack(dots) - x.l
        y2 = self.centering.apply(x.l)
        y3 = np.stack([self.tv.apply(x.u[k]) for k in range(N)])
        return DualState(y1, y2, y3)

    def adjoint_state(self, y: DualState) -> PrimalState:
        N, m, n = self.group_shape
        planes = unvec_stack(y.y1, m, n)
        u = self.gradients * planes[..., None]
        u += np.stack([self.tv.adjoint(y.y3[k]) for k in range(N)])
        l = -y.y1 + self.centering.apply(y.y2)
        return PrimalState(u, l)

    def apply(self, x_vec: np.ndarray) -> np.ndarray:
        N, m, n = self.group_shape
        return pack_dual(self.apply_state(unpack_primal(x_vec, N, m, n)))

    def adjoint(self, y_vec: np.ndarray) -> np.ndarray:
        N, m, n = self.group_shape
        return pack_primal(self.adjoint_state(unpack_dual(y_vec, N, m, n)))
