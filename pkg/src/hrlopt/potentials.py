"""Objective functions for the sampler and the optimizer.

A :class:`Potential` bundles the objective value, its gradient, and the
metadata the bounds calculator needs (smoothness constant, integrability
threshold).  Value and gradient callables accept arrays of shape ``(..., d)``
and act on the last axis, so the same object serves the single-chain driver
and the batched engine.

Reductions over coordinates are accumulated coordinate by coordinate (not via
``np.sum``) so that the pure-numpy engine and the compiled engine produce
bit-identical values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

TWO_PI = 2.0 * math.pi

# Identifiers the compiled engine understands; 0 means python-only.
KERNEL_NONE = 0
KERNEL_RASTRIGIN = 1
KERNEL_QUADRATIC = 2


@dataclass(frozen=True)
class Potential:
    """A smooth objective on R^d.

    Attributes:
        name: short identifier, used by experiment configs.
        dim: number of coordinates d.
        value_fn: maps ``(..., d)`` arrays to ``(...)`` objective values.
        grad_fn: maps ``(..., d)`` arrays to ``(..., d)`` gradients.
        minimum_value: known global minimum value, if any.
        smoothness: upper bound on the Hessian spectral norm, if known.
        integrability_threshold: smallest inverse temperature for which
            exp(-a U) is integrable (defaults to 1).
        kernel_id / kernel_params: dispatch data for the compiled engine.

    Whether the objective really is smooth with bounded Hessian is the
    caller's obligation; it is not checked programmatically.
    """

    name: str
    dim: int
    value_fn: Callable[[np.ndarray], np.ndarray]
    grad_fn: Callable[[np.ndarray], np.ndarray]
    minimum_value: float | None = None
    smoothness: float | None = None
    integrability_threshold: float = 1.0
    kernel_id: int = KERNEL_NONE
    kernel_params: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"dimension must be >= 1, got {self.dim}")

    def _check_point(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1:] != (self.dim,):
            raise ValueError(
                f"point has {x.shape[-1] if x.ndim else 0} coordinates, "
                f"potential {self.name!r} expects {self.dim}"
            )
        if not np.isfinite(x).all():
            raise ValueError("point has non-finite coordinates")
        return x

    def value(self, x) -> float | np.ndarray:
        """Objective value with input validation."""
        out = self.value_fn(self._check_point(x))
        return float(out) if np.ndim(out) == 0 else out

    def gradient(self, x) -> np.ndarray:
        """Gradient with input validation."""
        return self.grad_fn(self._check_point(x))


@dataclass(frozen=True)
class QuadraticPotential(Potential):
    """U(x) = curvature * ||x - center||^2 / 2, minimized (at 0) at the center."""

    curvature: float = 1.0
    center: np.ndarray = field(default_factory=lambda: np.zeros(1))


def rastrigin(d: int) -> Potential:
    """The multimodal benchmark U(x) = d + ||x||^2 - sum_i cos(2 pi x_i).

    Global minimum 0 at the origin.  The per-coordinate second derivative is
    2 + 4 pi^2 cos(2 pi x), so 2 + 4 pi^2 is an upper estimate of the Hessian
    norm and is stored as the smoothness constant.
    """
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")

    def value_fn(x):
        c = np.cos(TWO_PI * x)
        acc = np.full(x.shape[:-1], float(d))
        for i in range(d):
            acc = acc + (x[..., i] * x[..., i] - c[..., i])
        return acc

    def grad_fn(x):
        return 2.0 * x + TWO_PI * np.sin(TWO_PI * x)

    return Potential(
        name="rastrigin",
        dim=d,
        value_fn=value_fn,
        grad_fn=grad_fn,
        minimum_value=0.0,
        smoothness=2.0 + 4.0 * math.pi**2,
        kernel_id=KERNEL_RASTRIGIN,
    )


def quadratic(d: int, curvature: float = 1.0, center=None) -> QuadraticPotential:
    """Isotropic quadratic bowl; its Gibbs measure is an exact Gaussian."""
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    if curvature <= 0:
        raise ValueError(f"curvature must be positive, got {curvature}")
    c = np.zeros(d) if center is None else np.asarray(center, dtype=float)
    if c.shape != (d,):
        raise ValueError(f"center must have shape ({d},), got {c.shape}")
    half_mu = 0.5 * curvature

    def value_fn(x):
        dx = x - c
        acc = dx[..., 0] * dx[..., 0]
        for i in range(1, d):
            acc = acc + dx[..., i] * dx[..., i]
        return half_mu * acc

    def grad_fn(x):
        return curvature * (x - c)

    return QuadraticPotential(
        name="quadratic",
        dim=d,
        value_fn=value_fn,
        grad_fn=grad_fn,
        minimum_value=0.0,
        smoothness=curvature,
        kernel_id=KERNEL_QUADRATIC,
        kernel_params=np.concatenate([[curvature], c]),
        curvature=curvature,
        center=c,
    )


def evaluate(potential: Potential, x) -> float | np.ndarray:
    """Evaluate U(x); rejects dimension mismatches and non-finite input."""
    return potential.value(x)


def by_name(name: str, d: int, curvature: float = 1.0) -> Potential:
    """Look up a built-in potential by config name."""
    if name == "rastrigin":
        return rastrigin(d)
    if name == "quadratic":
        return quadratic(d, curvature=curvature)
    raise ValueError(f"unknown potential {name!r} (built-ins: rastrigin, quadratic)")
