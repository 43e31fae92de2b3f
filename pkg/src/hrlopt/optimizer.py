"""Sample-and-argmin global optimization, with the accompanying sample-count
and step-size calculators.

The optimizer draws N independent samples from an oracle (any sampler whose
law is close enough to the Gibbs measure of the objective) and returns the
sample with the lowest objective value.  The guarantee
P(U(best) - U* >= eps) <= delta holds once the oracle's KL error is at most
eps^2/18, N >= 18 ln(1/delta) / eps^2, and the inverse temperature satisfies
a >= max(a0, 9 C^4 L^2 / eps^2); the KL condition cannot be checked for
nonconvex targets and is verified only in the Gaussian validation suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .kernel import DivergenceError, HrlaParams, Mode
from .potentials import Potential


@dataclass(frozen=True)
class OptimizationResult:
    point: np.ndarray
    value: float
    sample_values: np.ndarray
    sample_index: int


def global_optimize(oracle: Callable[[np.random.Generator], np.ndarray],
                    potential: Potential, n_samples: int,
                    rng: np.random.Generator) -> OptimizationResult:
    """Draw ``n_samples`` oracle samples on disjoint substreams, return the argmin.

    Exactly ``n_samples`` oracle invocations are made; ties are broken toward
    the lowest sample index so results are reproducible.  Oracle failures
    propagate with the offending sample index attached.
    """
    if n_samples < 1:
        raise ValueError(f"n_samples must be >= 1, got {n_samples}")
    substreams = rng.spawn(n_samples)
    values = np.empty(n_samples)
    points = []
    for i, sub in enumerate(substreams):
        try:
            point = np.asarray(oracle(sub), dtype=float)
        except DivergenceError as err:
            raise DivergenceError(f"oracle diverged on sample {i}: {err}",
                                  iteration=err.iteration, chain=i) from err
        points.append(point)
        values[i] = potential.value(point)
    best = int(np.argmin(values))  # argmin returns the first minimum
    return OptimizationResult(point=points[best], value=float(values[best]),
                              sample_values=values, sample_index=best)


@dataclass(frozen=True)
class BoundsRequest:
    """Inputs of the sample-count / inverse-temperature bounds.

    ``w2_constant`` is the constant C in the concentration bound
    W2(mu^a, mu*) <= C a^{-1/4}; it depends only on the objective and is not
    computable here, so it is a user input (default 1 for exploratory use).
    ``lsi_constant`` is the log-Sobolev constant rho, likewise user-supplied.
    """

    eps: float
    delta: float
    w2_constant: float = 1.0
    smoothness: float = 1.0
    a0: float = 1.0
    lsi_constant: float | None = None

    def __post_init__(self):
        if not 0.0 < self.eps < 0.5:
            raise ValueError(
                f"eps must lie in (0, 0.5), got {self.eps}; the upper bound is "
                "an artifact of the analysis, not of the method - rescale the "
                "potential by a constant to target larger tolerances"
            )
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if self.w2_constant <= 0 or self.smoothness <= 0 or self.a0 <= 0:
            raise ValueError("w2_constant, smoothness and a0 must be positive")
        if self.lsi_constant is not None and self.lsi_constant <= 0:
            raise ValueError("lsi_constant must be positive when given")


def required_sample_count(request: BoundsRequest) -> tuple[int, float]:
    """Smallest (N, a) satisfying the high-probability guarantee.

    N_min = ceil(18 ln(1/delta) / eps^2) and
    a_min = max(a0, 9 C^4 L^2 / eps^2).
    """
    n_min = math.ceil(18.0 * math.log(1.0 / request.delta) / request.eps**2)
    # 9 C^4 L^2 / eps^2, grouped as 9 (C^2 L / eps)^2: dividing before squaring
    # keeps round numbers exact (e.g. C = L = 1, eps = 0.1 gives exactly 900)
    scaled = request.w2_constant**2 * request.smoothness / request.eps
    a_min = max(request.a0, 9.0 * scaled * scaled)
    return max(n_min, 1), a_min


@dataclass(frozen=True)
class TheoryConstants:
    """Constants of the discrete-time KL convergence bound.

    For a step size below ``max_step`` the chain satisfies

        KL_k <= exp(-contraction * k * h / 2) * KL_0 + 3 * bias_coef * h / (4 * contraction)

    so ``contraction/2`` plays the role of the decay rate and
    ``3 * bias_coef / (4 * contraction)`` of the first-order floor slope.
    """

    contraction: float      # rho * min(sigma_x^2, sigma_y^2)
    mismatch_gain: float    # a^2 L^2 (sigma_x^4 + b^-2) / (2 min(sigma_x^2, sigma_y^2))
    transient_coef: float   # 12 + 4 beta^2 L^2 + 4 gamma^2 L^2
    diffusion_coef: float   # 2 sigma_x^2 + 12/b + 4 beta^2 L/a + 3 sigma_y^2 + 4 gamma^2 L/a
    bias_coef: float        # 2 * mismatch_gain * diffusion_coef * d
    max_step: float         # min(1, 1/contraction, sqrt(contraction*rho/(8*mismatch_gain*transient_coef)))

    @property
    def decay_rate(self) -> float:
        return 0.5 * self.contraction

    @property
    def floor_slope(self) -> float:
        return 0.75 * self.bias_coef / self.contraction


def theory_constants(params: HrlaParams, lsi_constant: float, smoothness: float,
                     dim: int) -> TheoryConstants:
    """Evaluate the convergence-bound constants for full-mode parameters.

    Baseline modes are rejected: the constants divide by min(sigma_x^2,
    sigma_y^2), which is zero there.
    """
    if params.mode is not Mode.FULL:
        raise ValueError("theory constants are defined for full-mode parameters only")
    if lsi_constant <= 0 or smoothness <= 0:
        raise ValueError("lsi_constant and smoothness must be positive")
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")

    rho, L = lsi_constant, smoothness
    min_sigma = min(params.sigma_x2, params.sigma_y2)
    contraction = rho * min_sigma
    mismatch = (params.a**2 * L**2 * (params.sigma_x2**2 + params.b**-2)
                / (2.0 * min_sigma))
    transient = 12.0 + 4.0 * params.beta**2 * L**2 + 4.0 * params.gamma**2 * L**2
    diffusion = (2.0 * params.sigma_x2 + 12.0 / params.b
                 + 4.0 * params.beta**2 * L / params.a + 3.0 * params.sigma_y2
                 + 4.0 * params.gamma**2 * L / params.a)
    bias = 2.0 * mismatch * diffusion * dim
    max_step = min(1.0, 1.0 / contraction,
                   math.sqrt(contraction * rho / (8.0 * mismatch * transient)))
    return TheoryConstants(
        contraction=contraction, mismatch_gain=mismatch, transient_coef=transient,
        diffusion_coef=diffusion, bias_coef=bias, max_step=max_step,
    )


def sufficient_schedule(constants: TheoryConstants, kl_target: float,
                        kl_initial: float = 1.0) -> tuple[float, int]:
    """A sufficient (h, K) for KL_K <= kl_target, given the starting KL.

    The step size bounds the floor term by kl_target/2 (and stays safely
    below max_step); the iteration count kills the geometric term.  Both are
    sufficient, not tight.
    """
    if kl_target <= 0:
        raise ValueError(f"kl_target must be positive, got {kl_target}")
    if kl_initial <= 0:
        raise ValueError(f"kl_initial must be positive, got {kl_initial}")
    h = min(0.5 * kl_target / constants.floor_slope, 0.5 * constants.max_step)
    if kl_initial <= 0.5 * kl_target:
        return h, 1
    k = math.ceil(math.log(2.0 * kl_initial / kl_target)
                  / (constants.decay_rate * h))
    return h, max(k, 1)
