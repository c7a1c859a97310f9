"""Resolvent operators for the dual blocks and the primal constraint of the subproblem.

The dual function splits into three independent blocks: a shifted weighted
l1 term on the linearized data residual, a nuclear-norm-ball indicator on
the centered low-rank matrix, and a weighted group-l2,1 term on the forward
differences.  The primal function is the uniqueness constraint, either zero
mean over all fields per coordinate or a pinned reference field.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .lowrank import economic_svd, project_l1_ball
from .operators import DualState, PrimalState

__all__ = [
    "MEAN_ZERO",
    "FIXED_REFERENCE",
    "ProxContext",
    "prox_f1_star",
    "prox_f2_star",
    "prox_f3_star",
    "prox_h",
    "prox_dual",
]

MEAN_ZERO = "mean-zero"
FIXED_REFERENCE = "fixed-reference"


@dataclass(frozen=True)
class ProxContext:
    """Step sizes, offsets and weights shared by the subproblem resolvents.

    offsets holds the per-image linearization constants b_k (warped image
    minus gradient-dot-linearization-point), shaped like the low-rank
    columns.  data_weight is the grid cell area weighting the l1 data term;
    tv_radius is the TV weight times the cell area (the dual group-ball
    radius); nu is the nuclear-norm threshold of the current subproblem.
    """

    tau: float
    eta: float
    offsets: np.ndarray  # (m*n, N)
    data_weight: float
    tv_radius: float
    nu: float
    mode: str = MEAN_ZERO
    reference: int = 0

    def __post_init__(self):
        if self.tau <= 0.0 or self.eta <= 0.0:
            raise ValueError("step sizes must be positive")
        if self.data_weight <= 0.0 or self.tv_radius <= 0.0:
            raise ValueError("weights must be positive")
        if self.nu < 0.0:
            raise ValueError("nuclear threshold must be nonnegative")
        if self.mode not in (MEAN_ZERO, FIXED_REFERENCE):
            raise ValueError(f"unknown constraint mode {self.mode!r}")

    def with_steps(self, tau: float, eta: float) -> "ProxContext":
        return replace(self, tau=tau, eta=eta)


def prox_f1_star(y1: np.ndarray, ctx: ProxContext) -> np.ndarray:
    """Conjugate prox of the shifted weighted l1 data term: clamp(y1 + eta*b) to the weight box."""
    w = ctx.data_weight
    return np.clip(y1 + ctx.eta * ctx.offsets, -w, w)


def prox_f2_star(y2: np.ndarray, ctx: ProxContext) -> np.ndarray:
    """Conjugate prox of the nuclear-ball indicator.

    Shrinks the singular values by the scaled l1-unit-ball projection.  For
    nu = 0 the constraint set is {0}, its indicator's conjugate is
    identically zero, and the prox is the identity.
    """
    if ctx.nu == 0.0:
        return np.array(y2, dtype=float)
    scale = ctx.eta * ctx.nu
    u, s, vt = economic_svd(y2)
    shrunk = s - scale * project_l1_ball(s / scale, 1.0)
    return (u * shrunk) @ vt


def prox_f3_star(y3: np.ndarray, ctx: ProxContext) -> np.ndarray:
    """Conjugate prox of the weighted TV term: per-pixel group projection onto the dual ball.

    Independent of the step size (conjugate of a norm is an indicator).
    """
    r = ctx.tv_radius
    norms = np.sqrt(np.sum(y3 * y3, axis=-3, keepdims=True))
    scale = np.where(norms > r, r / np.where(norms > 0.0, norms, 1.0), 1.0)
    return y3 * scale


def prox_h(x: PrimalState, ctx: ProxContext) -> PrimalState:
    """Projection onto the uniqueness constraint; the low-rank block is untouched."""
    if ctx.mode == MEAN_ZERO:
        u = x.u - x.u.mean(axis=(0, 1, 2))
        return PrimalState(u, x.l)
    u = np.array(x.u)
    u[ctx.reference] = 0.0
    return PrimalState(u, x.l)


def prox_dual(y: DualState, ctx: ProxContext) -> DualState:
    """Apply the three independent dual-block resolvents."""
    return DualState(prox_f1_star(y.y1, ctx), prox_f2_star(y.y2, ctx), prox_f3_star(y.y3, ctx))
