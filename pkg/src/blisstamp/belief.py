"""Hybrid Move/Scan belief dynamics over the augmented state [x, y, t^2, t].

The agent moves blind (proprioception only) and re-localizes by scanning.
Position uncertainty is modeled as growing quadratically with the time t
since the last scan: Sigma(t) = Sigma_w[0:2, 0:2] * t^2, which keeps the
chance-constraint back-off linear in the t state. A scan keeps x, y and
resets t to 1, so the post-scan covariance is exactly Sigma_w.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np


class BeliefError(ValueError):
    pass


class NonPositiveDt(BeliefError):
    pass


class ControlOnScan(BeliefError):
    """A velocity was supplied together with a Scan action."""


class OutOfDomain(BeliefError):
    pass


class RiskOutOfRange(BeliefError):
    """delta >= 0.5 would give a non-positive back-off and silently disable safety."""


class ActionKind(Enum):
    MOVE = "move"
    SCAN = "scan"


@dataclass(frozen=True)
class HybridAction:
    """Move with velocity u = (vx, vy), or Scan (no control)."""

    kind: ActionKind
    u: tuple[float, float] | None = None

    def __post_init__(self):
        if self.kind is ActionKind.SCAN and self.u is not None:
            raise ControlOnScan("Scan carries no control input")
        if self.kind is ActionKind.MOVE and self.u is None:
            raise BeliefError("Move requires a velocity")

    @classmethod
    def move(cls, vx: float, vy: float) -> "HybridAction":
        return cls(ActionKind.MOVE, (float(vx), float(vy)))

    @classmethod
    def scan(cls) -> "HybridAction":
        return cls(ActionKind.SCAN)


@dataclass(frozen=True)
class ActionMatrices:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    noise: np.ndarray


def action_matrices(kind: ActionKind, dt: float, sigma_w: np.ndarray | None = None) -> ActionMatrices:
    """Transition matrices for one hybrid action.

    Move advances time: t -> t + dt and t^2 -> t^2 + 2*dt*t + dt^2 (the 2*dt
    entry couples the t^2 row to t). Scan keeps the coordinates, zeroes the
    time rows, and re-arms them through C = [0, 0, 1, 1].
    """
    if dt <= 0:
        raise NonPositiveDt(f"dt must be > 0, got {dt}")
    noise = np.zeros((4, 4))
    if kind is ActionKind.MOVE:
        A = np.array([
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 2.0 * dt],
            [0.0, 0.0, 0.0, 1.0],
        ])
        B = np.zeros((4, 4))
        B[0, 0] = dt
        B[1, 1] = dt
        C = np.array([0.0, 0.0, dt * dt, dt])
        if sigma_w is not None:
            noise = np.asarray(sigma_w, dtype=float).copy()
    else:
        A = np.zeros((4, 4))
        A[0, 0] = 1.0
        A[1, 1] = 1.0
        B = np.zeros((4, 4))
        C = np.array([0.0, 0.0, 1.0, 1.0])
    return ActionMatrices(A=A, B=B, C=C, noise=noise)


def propagate_mean(mean, action: HybridAction, dt: float) -> np.ndarray:
    """Expected next mean A @ mean + B @ u + C (process noise has zero mean)."""
    mean = np.asarray(mean, dtype=float)
    mats = action_matrices(action.kind, dt)
    u4 = np.zeros(4)
    if action.kind is ActionKind.MOVE:
        u4[0], u4[1] = action.u
    return mats.A @ mean + mats.B @ u4 + mats.C


def covariance_at(t: float, sigma_w: np.ndarray) -> np.ndarray:
    """Position covariance after time t since the last scan: Sigma_w * t^2."""
    sigma_w = np.asarray(sigma_w, dtype=float)
    return sigma_w[0:2, 0:2] * (t * t)


# Rational approximations from Wichura's AS241 (double precision); the
# composite absolute error is below 1e-15 on (0, 1).
_A241 = (3.3871328727963666080e0, 1.3314166789178437745e2, 1.9715909503065514427e3,
         1.3731693765509461125e4, 4.5921953931549871457e4, 6.7265770927008700853e4,
         3.3430575583588128105e4, 2.5090809287301226727e3)
_B241 = (1.0, 4.2313330701600911252e1, 6.8718700749205790830e2, 5.3941960214247511077e3,
         2.1213794301586595867e4, 3.9307895800092710610e4, 2.8729085735721942674e4,
         5.2264952788528545610e3)
_C241 = (1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
         3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
         2.27238449892691845833e-2, 7.74545014278341407640e-4)
_D241 = (1.0, 2.05319162663775882187e0, 1.67638483018380384940e0, 6.89767334985100004550e-1,
         1.48103976427480074590e-1, 1.51986665636164571966e-2, 5.47593808499534494600e-4,
         1.05075007164441684324e-9)
_E241 = (6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
         2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
         2.71155556874348757815e-5, 2.01033439929228813265e-7)
_F241 = (1.0, 5.99832206555887937690e-1, 1.36929880922735805310e-1, 1.48753612908506148525e-2,
         7.86869131145613259100e-4, 1.84631831751005468180e-5, 1.42151175831644588870e-7,
         2.04426310338993978564e-15)


def _poly(coeffs, x):
    r = coeffs[-1]
    for c in reversed(coeffs[:-1]):
        r = r * x + c
    return r


def normal_quantile(p: float) -> float:
    """Inverse standard normal CDF, |error| <= 1e-9 on (0, 1)."""
    if not 0.0 < p < 1.0:
        raise OutOfDomain(f"probability must be in (0, 1), got {p}")
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        return q * _poly(_A241, r) / _poly(_B241, r)
    r = p if q < 0 else 1.0 - p
    r = math.sqrt(-math.log(r))
    if r <= 5.0:
        r -= 1.6
        val = _poly(_C241, r) / _poly(_D241, r)
    else:
        r -= 5.0
        val = _poly(_E241, r) / _poly(_F241, r)
    return -val if q < 0 else val


def risk_backoff(H, sigma_w: np.ndarray, delta: float) -> float:
    """Per-unit-t safety margin for a half-plane chance constraint.

    beta = -Phi^{-1}(delta) * sqrt(H @ Sigma_w[0:2,0:2] @ H); the constraint
    at step k becomes H @ mu_k - beta * t_k >= b, linear in the t state.
    """
    if not 0.0 < delta < 0.5:
        raise RiskOutOfRange(f"delta must be in (0, 0.5), got {delta}")
    H = np.asarray(H, dtype=float)
    block = np.asarray(sigma_w, dtype=float)[0:2, 0:2]
    var = float(H @ block @ H)
    return -normal_quantile(delta) * math.sqrt(max(var, 0.0))


def risk_backoff_variance_form(H, sigma_w: np.ndarray, delta: float) -> float:
    """Variance-form margin (no square root), paired with the t^2 state.

    Kept behind a config flag for comparison with the standard-deviation
    form; the constraint reads H @ mu_k - beta_var * t_k^2 >= b.
    """
    if not 0.0 < delta < 0.5:
        raise RiskOutOfRange(f"delta must be in (0, 0.5), got {delta}")
    H = np.asarray(H, dtype=float)
    block = np.asarray(sigma_w, dtype=float)[0:2, 0:2]
    return -normal_quantile(delta) * float(H @ block @ H)
