"""Exact one-step transition of the coupled position/velocity Langevin chain.

Conditionally on the current state, one step of the discretized dynamics

    dX = (-beta grad U(X_k) + Y) dt + sqrt(2 sigma_x^2) dB_x
    dY = (-gamma grad U(X_k) - alpha Y) dt + sqrt(2 sigma_y^2) dB_y

over a window of length h is an Ornstein-Uhlenbeck process (the gradient is
frozen at the window start), so the next state is an exact Gaussian draw.
This module evaluates the mean coefficients and the 2x2 per-coordinate
covariance

    cov_xx = (sigma_y^2 / alpha^3) * (2 alpha h - e^{-2 alpha h}
             + 4 e^{-alpha h} - 3) + 2 sigma_x^2 h
    cov_yy = sigma_y^2 (1 - e^{-2 alpha h}) / alpha
    cov_xy = sigma_y^2 (1 - e^{-alpha h})^2 / alpha^2

in a numerically stable way, factors the covariance, and applies one step.

The covariance blocks are scalar multiples of the identity, so the joint
Gaussian factorizes across coordinates and a per-coordinate 2x2 Cholesky
factor suffices (O(d) per step instead of a 2d x 2d factorization).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .potentials import Potential

# Relative tolerance for the coupling identities a = beta/sigma_x^2,
# b = alpha/sigma_y^2, gamma = a/b.
_REL_TOL = 1e-12

# Below this value of alpha*h the direct covariance bracket loses roughly
# 3*log10(1/(alpha h)) digits to cancellation, so a truncated power series
# (terms through (alpha h)^6) takes over.
_SERIES_THRESHOLD = 1e-3

# Round-off slack: the covariance determinant may come out this far negative,
# and the final Cholesky pivot this far below zero, before we call it a bug.
_DET_SLACK = 1e-18


class Mode(str, enum.Enum):
    """Which noise/coupling regime the parameters describe."""

    FULL = "full"
    UNDERDAMPED = "underdamped-baseline"
    OVERDAMPED = "overdamped-baseline"
    # Zero-noise configuration used only by tests: the chain reduces to the
    # deterministic discretization of the damped second-order dynamics.
    DETERMINISTIC = "deterministic"


class DivergenceError(RuntimeError):
    """A chain produced a non-finite state.

    Attributes carry enough context to locate the failure: the iteration
    index at which the state became non-finite and, for batched runs, the
    chain index within the batch.
    """

    def __init__(self, message: str, iteration: int | None = None, chain: int | None = None):
        super().__init__(message)
        self.iteration = iteration
        self.chain = chain


def _close(x: float, y: float) -> bool:
    return math.isclose(x, y, rel_tol=_REL_TOL, abs_tol=0.0)


@dataclass(frozen=True)
class HrlaParams:
    """Parameters (alpha, beta, gamma, a, b, sigma_x2, sigma_y2, h) of the chain.

    ``a`` is the inverse temperature of the position marginal and ``b`` the
    precision of the velocity marginal of the invariant law
    exp(-a U(x) - b ||y||^2 / 2).  In ``FULL`` mode the couplings
    a = beta / sigma_x^2, b = alpha / sigma_y^2 and gamma = a / b must hold;
    the baseline modes zero out one noise channel and keep the constraints
    that remain meaningful.
    """

    alpha: float
    beta: float
    gamma: float
    a: float
    b: float
    sigma_x2: float
    sigma_y2: float
    h: float
    mode: Mode = Mode.FULL

    def __post_init__(self):
        vals = (self.alpha, self.beta, self.gamma, self.a, self.b,
                self.sigma_x2, self.sigma_y2, self.h)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("parameters must be finite")
        if any(v < 0 for v in vals):
            raise ValueError("parameters must be non-negative")
        if self.h <= 0:
            raise ValueError(f"step size must be positive, got {self.h}")

        m = self.mode
        if m is Mode.FULL:
            positive = (self.alpha, self.beta, self.gamma, self.a, self.b,
                        self.sigma_x2, self.sigma_y2)
            if not all(v > 0 for v in positive):
                raise ValueError("full mode requires strictly positive parameters")
            self._require(_close(self.a, self.beta / self.sigma_x2),
                          "a = beta / sigma_x^2")
            self._require(_close(self.b, self.alpha / self.sigma_y2),
                          "b = alpha / sigma_y^2")
            self._require(_close(self.gamma, self.a / self.b), "gamma = a / b")
        elif m is Mode.UNDERDAMPED:
            if self.beta != 0 or self.sigma_x2 != 0:
                raise ValueError("underdamped baseline requires beta = sigma_x^2 = 0")
            if self.alpha <= 0 or self.sigma_y2 <= 0:
                raise ValueError("underdamped baseline requires alpha, sigma_y^2 > 0")
            self._require(_close(self.b, self.alpha / self.sigma_y2),
                          "b = alpha / sigma_y^2")
            self._require(_close(self.gamma, self.a / self.b), "gamma = a / b")
        elif m is Mode.OVERDAMPED:
            if self.gamma != 0 or self.sigma_y2 != 0:
                raise ValueError("overdamped baseline requires gamma = sigma_y^2 = 0")
            if self.sigma_x2 <= 0 or self.beta <= 0:
                raise ValueError("overdamped baseline requires beta, sigma_x^2 > 0")
            self._require(_close(self.a, self.beta / self.sigma_x2),
                          "a = beta / sigma_x^2")
        elif m is Mode.DETERMINISTIC:
            if self.sigma_x2 != 0 or self.sigma_y2 != 0:
                raise ValueError("deterministic mode requires zero noise")
            if self.alpha <= 0:
                raise ValueError("deterministic mode requires alpha > 0")
        else:  # pragma: no cover
            raise ValueError(f"unknown mode {m!r}")

    @staticmethod
    def _require(ok: bool, identity: str) -> None:
        if not ok:
            raise ValueError(f"parameter coupling violated: {identity} "
                             f"must hold to relative tolerance {_REL_TOL}")


@dataclass(frozen=True)
class ChainState:
    """Position/velocity pair (x, y) in R^d x R^d."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        object.__setattr__(self, "y", np.asarray(self.y, dtype=float))
        if self.x.shape != self.y.shape:
            raise ValueError(f"x and y must have equal shape, "
                             f"got {self.x.shape} and {self.y.shape}")
        if not (np.isfinite(self.x).all() and np.isfinite(self.y).all()):
            raise ValueError("state components must be finite")


def _bracket(z: float) -> float:
    """Stable evaluation of f(z) = 2z - e^{-2z} + 4 e^{-z} - 3 for z >= 0.

    f is Theta(z^3) at zero while the individual terms are Theta(1), so the
    direct expression loses ~3 log10(1/z) digits.  Three regimes:

    * z < 1e-3: truncated Taylor series, terms through z^6.
    * 1e-3 <= z < 1: with v = 1 - e^{-z}, exactly f = 2 sum_{n>=3} v^n / n
      (all terms positive, no cancellation; v from expm1).
    * z >= 1: the direct expression, which no longer cancels.
    """
    if z < _SERIES_THRESHOLD:
        return z**3 * (2.0 / 3.0 + z * (-0.5 + z * (7.0 / 30.0 + z * (-1.0 / 12.0))))
    if z < 1.0:
        v = -math.expm1(-z)
        term = v * v * v
        total = 0.0
        n = 3
        while True:
            contrib = term / n
            total += contrib
            if contrib <= total * 1e-17:
                return 2.0 * total
            term *= v
            n += 1
    return 2.0 * z - math.exp(-2.0 * z) + 4.0 * math.exp(-z) - 3.0


@dataclass(frozen=True)
class TransitionKernel:
    """Precomputed per-step coefficients and covariance factor.

    Mean of one step from (x, y) with g = grad U(x):

        m_x = x - grad_x_total * g + vel_weight * y
        m_y = exp_decay * y - grad_y_weight * g

    where grad_x_total = beta h + grad_drift.  The noise is applied per
    coordinate as (l11 xi, l21 xi + l22 eta) with xi, eta standard normal.
    """

    exp_decay: float        # e^{-alpha h}
    vel_weight: float       # (1 - e^{-alpha h}) / alpha
    grad_drift: float       # (gamma / alpha) (h - vel_weight)
    grad_x_total: float     # beta h + grad_drift
    grad_y_weight: float    # (gamma / alpha) (1 - e^{-alpha h})
    cov_xx: float
    cov_yy: float
    cov_xy: float
    chol_xx: float          # l11
    chol_yx: float          # l21
    chol_yy: float          # l22


def build_kernel(params: HrlaParams) -> TransitionKernel:
    """Evaluate the closed-form step coefficients for one parameter set.

    In overdamped-baseline mode the velocity channel carries no noise, so
    cov_yy = cov_xy = 0 and cov_xx = 2 sigma_x^2 h regardless of alpha.
    """
    alpha, h = params.alpha, params.h
    z = alpha * h

    if alpha > 0:
        exp_decay = math.exp(-z)
        vel_weight = -math.expm1(-z) / alpha
        grad_drift = (params.gamma / alpha) * (h - vel_weight)
        grad_y_weight = (params.gamma / alpha) * -math.expm1(-z)
    else:
        # alpha = 0 only arises in overdamped mode, where gamma = sigma_y2 = 0
        # and the velocity channel is inert; take the alpha -> 0 limits.
        exp_decay = 1.0
        vel_weight = h
        grad_drift = 0.0
        grad_y_weight = 0.0
    grad_x_total = params.beta * h + grad_drift

    if params.sigma_y2 > 0:
        cov_yy = params.sigma_y2 * -math.expm1(-2.0 * z) / alpha
        cov_xy = params.sigma_y2 * math.expm1(-z) ** 2 / alpha**2
        cov_xx = (params.sigma_y2 / alpha**3) * _bracket(z) + 2.0 * params.sigma_x2 * h
    else:
        cov_yy = 0.0
        cov_xy = 0.0
        cov_xx = 2.0 * params.sigma_x2 * h

    coeffs = (exp_decay, vel_weight, grad_drift, grad_x_total, grad_y_weight,
              cov_xx, cov_yy, cov_xy)
    if not all(math.isfinite(c) for c in coeffs):
        raise ArithmeticError(f"non-finite kernel coefficient for {params}")

    det = cov_xx * cov_yy - cov_xy**2
    if det < -_DET_SLACK:
        raise ArithmeticError(
            f"covariance determinant {det} is negative beyond round-off; "
            "this indicates a coefficient-evaluation bug"
        )

    if cov_xx > 0:
        chol_xx = math.sqrt(cov_xx)
        chol_yx = cov_xy / chol_xx
    else:
        chol_xx = 0.0
        chol_yx = 0.0
    pivot = cov_yy - chol_yx**2
    if pivot < -_DET_SLACK:
        raise ArithmeticError(
            f"Cholesky pivot {pivot} is negative beyond round-off tolerance"
        )
    chol_yy = math.sqrt(pivot) if pivot > 0 else 0.0

    return TransitionKernel(
        exp_decay=exp_decay,
        vel_weight=vel_weight,
        grad_drift=grad_drift,
        grad_x_total=grad_x_total,
        grad_y_weight=grad_y_weight,
        cov_xx=cov_xx,
        cov_yy=cov_yy,
        cov_xy=cov_xy,
        chol_xx=chol_xx,
        chol_yx=chol_yx,
        chol_yy=chol_yy,
    )


def step(kernel: TransitionKernel, params: HrlaParams, potential: Potential,
         state: ChainState, rng: np.random.Generator) -> ChainState:
    """Advance one chain by one step; exactly one gradient evaluation.

    The xi normals for all coordinates are drawn first, then the eta normals,
    so trajectories are reproducible independently of internal vectorization.
    The arithmetic mirrors the batched engine expression for expression, so a
    single-chain run and a batched run from the same stream agree bitwise.
    """
    x, y = state.x, state.y
    if x.shape != (potential.dim,):
        raise ValueError(f"state dimension {x.shape} does not match "
                         f"potential dimension {potential.dim}")
    g = potential.grad_fn(x)
    xi = rng.standard_normal(potential.dim)
    eta = rng.standard_normal(potential.dim)
    x_new = (x - kernel.grad_x_total * g + kernel.vel_weight * y) + kernel.chol_xx * xi
    y_new = (kernel.exp_decay * y - kernel.grad_y_weight * g
             + kernel.chol_yx * xi) + kernel.chol_yy * eta
    if not (np.isfinite(x_new).all() and np.isfinite(y_new).all()):
        raise DivergenceError("chain diverged: non-finite state after step")
    return ChainState(x=x_new, y=y_new)
