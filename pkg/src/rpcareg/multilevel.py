"""Coarse-to-fine registration driver: level loop, re-linearization, threshold schedule.

Each level halves the image resolution relative to the next; the nuclear
threshold starts at 2^(-n_lev) times the centered group norm of the input,
doubles per level (the prolongation of the low-rank columns doubles their
nuclear norm) and decays by alpha per linearization step, so the final
threshold is alpha^(total steps) times the input norm.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import grid
from .grid import DisplacementField, Image
from .lowrank import nuclear_ball_projection, nuclear_norm, power_iteration
from .metrics import casorati
from .operators import (
    CompositeOperator,
    DualState,
    PrimalState,
    group_norms_21,
    pack_dual,
    pack_primal,
    unpack_dual,
    unpack_primal,
    vec_stack,
    zeros_dual,
    zeros_primal,
)
from .prox import FIXED_REFERENCE, MEAN_ZERO, ProxContext, prox_dual, prox_h
from .solver import PdhgSettings, choose_steps, pdhg_solve

__all__ = [
    "RegistrationConfig",
    "StepRecord",
    "RegistrationResult",
    "build_pyramid",
    "register",
]

logger = logging.getLogger(__name__)

_POWER_TOL = 1e-8
_POWER_MAX_IT = 1000


@dataclass(frozen=True)
class RegistrationConfig:
    """Parameters of the multilevel registration run.

    n_iter gives the number of linearization steps per level, coarsest
    first.  The product alpha^sum(n_iter) is the final nuclear threshold
    relative to the centered input group norm.
    """

    mu: float = 0.2
    alpha: float = 0.9
    n_lev: int = 3
    n_iter: tuple[int, ...] = (16, 2, 2)
    solver_tol: float = 1e-5
    solver_max_iter: int = 2000
    constraint: str = MEAN_ZERO
    reference_index: int = 0

    def __post_init__(self):
        if self.mu <= 0.0:
            raise ValueError("mu must be positive")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if self.n_lev < 1:
            raise ValueError("n_lev must be at least 1")
        n_iter = tuple(int(k) for k in self.n_iter)
        if len(n_iter) != self.n_lev or any(k < 1 for k in n_iter):
            raise ValueError("n_iter must give one positive count per level")
        object.__setattr__(self, "n_iter", n_iter)
        if self.solver_tol <= 0.0 or self.solver_max_iter < 1:
            raise ValueError("invalid solver settings")
        if self.constraint not in (MEAN_ZERO, FIXED_REFERENCE):
            raise ValueError(f"unknown constraint mode {self.constraint!r}")
        if self.reference_index < 0:
            raise ValueError("reference index must be nonnegative")

    @property
    def beta(self) -> float:
        return self.alpha ** sum(self.n_iter)


@dataclass(frozen=True)
class StepRecord:
    """Diagnostics of one inner (linearization) step."""

    level: int
    step: int
    nu: float
    norm_estimate: float
    solver_iterations: int
    residual: float
    data_energy: float
    tv_energy: float
    singular_values: np.ndarray


@dataclass(frozen=True)
class RegistrationResult:
    fields: tuple[DisplacementField, ...]
    low_rank: np.ndarray  # (m*n, N)
    sparse: np.ndarray  # warped casorati minus low_rank
    records: tuple[StepRecord, ...]

    @property
    def singular_value_trace(self) -> np.ndarray:
        return np.stack([r.singular_values for r in self.records])


def build_pyramid(images: list[Image], n_lev: int) -> list[list[Image]]:
    """Image groups per level, coarsest first; level j is (n_lev - j)-fold downsampled."""
    if len(images) == 0:
        raise ValueError("empty image group")
    if n_lev < 1:
        raise ValueError("n_lev must be at least 1")
    m, n = images[0].shape
    divisor = 2 ** (n_lev - 1)
    if m % divisor != 0 or n % divisor != 0:
        raise ValueError(
            f"image size {m}x{n} not divisible by 2^(n_lev-1) = {divisor}; "
            "choose fewer levels or resample the input"
        )
    levels = [list(images)]
    for _ in range(n_lev - 1):
        levels.append([grid.downsample(im) for im in levels[-1]])
    return levels[::-1]


def _warp_group(images: list[Image], u: np.ndarray, h: float) -> np.ndarray:
    """Warp every image by its field; returns the (N, m, n) stack of warped values."""
    warped = [
        grid.warp(im, DisplacementField(u[k], h, h)).values for k, im in enumerate(images)
    ]
    return np.stack(warped)


def _prolongate_primal(x: PrimalState, m: int, n: int) -> PrimalState:
    u = np.stack([grid.prolongate(x.u[k]) for k in range(x.u.shape[0])])
    l_planes = x.l.T.reshape(-1, n, m).transpose(0, 2, 1)
    l_fine = np.stack([grid.prolongate(p) for p in l_planes])
    return PrimalState(u, vec_stack(l_fine))


def _prolongate_dual(y: DualState, m: int, n: int) -> DualState:
    def cols(c):
        planes = c.T.reshape(-1, n, m).transpose(0, 2, 1)
        return vec_stack(np.stack([grid.prolongate(p) for p in planes]))

    y3 = np.stack(
        [np.stack([grid.prolongate(y.y3[k, b]) for b in range(4)]) for k in range(y.y3.shape[0])]
    )
    return DualState(cols(y.y1), cols(y.y2), y3)


def register(images: list[Image], config: RegistrationConfig) -> RegistrationResult:
    """Run the full multilevel registration and return fields plus decomposition.

    Follows the outer/inner loop exactly: per level the threshold doubles,
    per inner step it decays by alpha; each step re-linearizes the warped
    images at the current fields, re-estimates the operator norm and solves
    the convex subproblem warm-started from the previous solution; between
    levels all primal and dual variables are prolongated by value
    replication.
    """
    N = len(images)
    if N == 0:
        raise ValueError("empty image group")
    if config.constraint == FIXED_REFERENCE and config.reference_index >= N:
        raise ValueError("reference index out of range")
    pyramid = build_pyramid(images, config.n_lev)
    M_full = casorati(images)
    nn_input = nuclear_norm(M_full - M_full.mean(axis=1, keepdims=True))
    nu = 2.0 ** (-config.n_lev) * nn_input

    m0, n0 = pyramid[0][0].shape
    x = zeros_primal(N, m0, n0)
    y = zeros_dual(N, m0, n0)
    records: list[StepRecord] = []

    for j in range(1, config.n_lev + 1):
        level_images = pyramid[j - 1]
        m, n = level_images[0].shape
        h = 2.0 ** (config.n_lev - j)
        nu = 2.0 * nu
        for t in range(1, config.n_iter[j - 1] + 1):
            nu = config.alpha * nu
            warped = _warp_group(level_images, x.u, h)
            grads = np.stack(
                [
                    grid.image_gradient(im, DisplacementField(x.u[k], h, h))
                    for k, im in enumerate(level_images)
                ]
            )
            dots = np.einsum("kijc,kijc->kij", grads, x.u)
            offsets = vec_stack(warped) - vec_stack(dots)
            op = CompositeOperator.from_gradients(grads, h, h)
            norm_estimate = power_iteration(
                op.apply, op.adjoint, op.primal_dim, tol=_POWER_TOL, max_it=_POWER_MAX_IT
            )
            tau, eta = choose_steps(norm_estimate)
            ctx = ProxContext(
                tau=tau,
                eta=eta,
                offsets=offsets,
                data_weight=h * h,
                tv_radius=config.mu * h * h,
                nu=nu,
                mode=config.constraint,
                reference=config.reference_index,
            )
            settings = PdhgSettings(
                tau, eta, config.solver_max_iter, config.solver_tol, norm_estimate
            )

            def prox_dual_vec(yv, _eta, ctx=ctx, N=N, m=m, n=n):
                return pack_dual(prox_dual(unpack_dual(yv, N, m, n), ctx))

            def prox_primal_vec(xv, _tau, ctx=ctx, N=N, m=m, n=n):
                return pack_primal(prox_h(unpack_primal(xv, N, m, n), ctx))

            xv, yv, report = pdhg_solve(
                op.apply,
                op.adjoint,
                prox_dual_vec,
                prox_primal_vec,
                pack_primal(x),
                pack_dual(y),
                settings,
            )
            x = unpack_primal(xv, N, m, n)
            y = unpack_dual(yv, N, m, n)
            # keep the hard constraint honest at finite solver tolerance
            l_mean = x.l.mean(axis=1, keepdims=True)
            centered = nuclear_ball_projection(x.l - l_mean, nu)
            x = PrimalState(x.u, l_mean + centered)

            warped_now = _warp_group(level_images, x.u, h)
            data_energy = h * h * float(np.abs(vec_stack(warped_now) - x.l).sum())
            tv_energy = config.mu * h * h * float(
                sum(group_norms_21(op.tv.apply(x.u[k])).sum() for k in range(N))
            )
            sv = np.linalg.svd(centered, compute_uv=False)
            records.append(
                StepRecord(
                    j, t, nu, norm_estimate, report.iterations, report.residual,
                    data_energy, tv_energy, sv,
                )
            )
            logger.info(
                "level %d step %d: nu=%.6g |A|=%.4g iters=%d res=%.3g data=%.6g tv=%.6g",
                j, t, nu, norm_estimate, report.iterations, report.residual,
                data_energy, tv_energy,
            )
        if j < config.n_lev:
            x = _prolongate_primal(x, m, n)
            y = _prolongate_dual(y, m, n)

    fields = tuple(DisplacementField(x.u[k], 1.0, 1.0) for k in range(N))
    warped_full = _warp_group(pyramid[-1], x.u, 1.0)
    sparse = vec_stack(warped_full) - x.l
    return RegistrationResult(fields, x.l, sparse, tuple(records))
