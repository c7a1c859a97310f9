"""First-order primal-dual (PDHG) iteration with over-relaxation."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "NumericFailure",
    "choose_steps",
    "PdhgSettings",
    "settings_for_norm",
    "SolveReport",
    "pdhg_solve",
]


class NumericFailure(RuntimeError):
    """An iterate became non-finite; maps to exit code 3 at the CLI."""


def choose_steps(norm_estimate: float) -> tuple[float, float]:
    """Equal primal/dual steps tau = eta = 0.99/norm, so tau*eta*norm^2 = 0.9801 < 1."""
    if norm_estimate <= 0.0:
        raise ValueError(f"operator norm estimate must be positive, got {norm_estimate}")
    step = 0.99 / norm_estimate
    return step, step


@dataclass(frozen=True)
class PdhgSettings:
    tau: float
    eta: float
    max_iter: int = 2000
    tol: float = 1e-5
    norm_estimate: float | None = None

    def __post_init__(self):
        if self.tau <= 0.0 or self.eta <= 0.0:
            raise ValueError("step sizes must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")
        if self.tol <= 0.0:
            raise ValueError("tolerance must be positive")
        if self.norm_estimate is not None:
            if self.tau * self.eta * self.norm_estimate**2 >= 1.0:
                raise ValueError(
                    f"step sizes violate tau*eta*norm^2 < 1 "
                    f"(tau={self.tau}, eta={self.eta}, norm={self.norm_estimate})"
                )


def settings_for_norm(norm_estimate: float, max_iter: int = 2000, tol: float = 1e-5) -> PdhgSettings:
    tau, eta = choose_steps(norm_estimate)
    return PdhgSettings(tau, eta, max_iter, tol, norm_estimate)


@dataclass
class SolveReport:
    iterations: int
    residual: float
    energies: list[float] | None = None

    def __post_init__(self):
        if self.residual < 0.0:
            raise ValueError("residual must be nonnegative")


def pdhg_solve(
    apply_op: Callable[[np.ndarray], np.ndarray],
    apply_adjoint: Callable[[np.ndarray], np.ndarray],
    prox_dual: Callable[[np.ndarray, float], np.ndarray],
    prox_primal: Callable[[np.ndarray, float], np.ndarray],
    x0: np.ndarray,
    y0: np.ndarray,
    settings: PdhgSettings,
    energy_fn: Callable[[np.ndarray], float] | None = None,
) -> tuple[np.ndarray, np.ndarray, SolveReport]:
    """Run the primal-dual iteration until the scaled step residual drops below tol.

    Updates per iteration:
        y <- prox_dual(y + eta * A xbar, eta)
        x <- prox_primal(x - tau * A^T y, tau)
        xbar <- 2 x_new - x_old
    Stops when max(||dx||_inf/tau, ||dy||_inf/eta) < tol or max_iter is
    reached.  Deterministic given its inputs.  If `energy_fn` is supplied it
    is evaluated on the primal iterate every 10 iterations.
    """
    tau, eta = settings.tau, settings.eta
    x = np.array(x0, dtype=float)
    y = np.array(y0, dtype=float)
    xbar = x.copy()
    energies: list[float] | None = [] if energy_fn is not None else None
    residual = np.inf
    iterations = 0
    for it in range(1, settings.max_iter + 1):
        iterations = it
        y_next = prox_dual(y + eta * apply_op(xbar), eta)
        x_next = prox_primal(x - tau * apply_adjoint(y_next), tau)
        dx = float(np.max(np.abs(x_next - x))) / tau if x.size else 0.0
        dy = float(np.max(np.abs(y_next - y))) / eta if y.size else 0.0
        residual = max(dx, dy)
        xbar = 2.0 * x_next - x
        x, y = x_next, y_next
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise NumericFailure(f"non-finite iterate at iteration {it}")
        if energies is not None and it % 10 == 0:
            energies.append(float(energy_fn(x)))
        if residual < settings.tol:
            break
    return x, y, SolveReport(iterations, float(residual), energies)
