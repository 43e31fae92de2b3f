"""Closed-form Gaussian validation of the sampler, plus run statistics.

For a quadratic objective the transition is linear-Gaussian, so the law of
the chain evolves by the exact recursion m -> M m, S -> M S M^T + Q per
coordinate.  That gives, with no sampling error: the full KL trajectory
against the Gibbs target, the stationary covariance of the discretized
chain, and the step-size bias of both.

The empirical side (probability-of-miss curves, terminal summaries) lives
here too because it shares the same consumers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .kernel import HrlaParams, TransitionKernel, build_kernel

_FIXED_POINT_TOL = 1e-14
_FIXED_POINT_MAX_ITER = 10_000_000


@dataclass(frozen=True)
class GaussianLaw:
    """One (x, y) coordinate block of a d-fold product Gaussian.

    The chain's law for a quadratic objective is the d-fold product of
    identical 2-dimensional blocks, so a single block plus the multiplicity
    ``copies`` describes it.
    """

    mean: np.ndarray
    cov: np.ndarray
    copies: int = 1

    def __post_init__(self):
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=float))
        object.__setattr__(self, "cov", np.asarray(self.cov, dtype=float))
        n = self.mean.shape[0]
        if self.mean.ndim != 1 or self.cov.shape != (n, n):
            raise ValueError(f"mean {self.mean.shape} and cov {self.cov.shape} "
                             "are not a vector and matching square matrix")
        scale = float(np.abs(self.cov).max())
        if not np.allclose(self.cov, self.cov.T, rtol=0, atol=1e-12 * scale):
            raise ValueError("covariance must be symmetric")
        # Positive semidefinite up to round-off; degenerate (zero-noise) laws
        # are representable, but KL evaluation rejects them as singular.
        if np.linalg.eigvalsh(self.cov).min() < -1e-12 * max(scale, 1.0):
            raise ValueError("covariance must be positive semidefinite")
        if self.copies < 1:
            raise ValueError(f"copies must be >= 1, got {self.copies}")


def gibbs_law(params: HrlaParams, curvature: float, copies: int = 1) -> GaussianLaw:
    """Per-coordinate invariant law N(0, diag(1/(a mu), 1/b)) of the dynamics."""
    if curvature <= 0:
        raise ValueError(f"curvature must be positive, got {curvature}")
    return GaussianLaw(mean=np.zeros(2),
                       cov=np.diag([1.0 / (params.a * curvature), 1.0 / params.b]),
                       copies=copies)


def step_matrices(kernel: TransitionKernel, curvature: float) -> tuple[np.ndarray, np.ndarray]:
    """Drift matrix M and noise covariance Q of one step under grad U(x) = mu x."""
    mu = curvature
    drift = np.array([
        [1.0 - kernel.grad_x_total * mu, kernel.vel_weight],
        [-kernel.grad_y_weight * mu, kernel.exp_decay],
    ])
    noise = np.array([
        [kernel.cov_xx, kernel.cov_xy],
        [kernel.cov_xy, kernel.cov_yy],
    ])
    return drift, noise


def _spectral_radius(m: np.ndarray) -> float:
    return float(np.abs(np.linalg.eigvals(m)).max())


def law_recursion(params: HrlaParams, curvature: float, n_steps: int,
                  init: GaussianLaw) -> list[GaussianLaw]:
    """Exact laws of the chain after 0..n_steps steps on a quadratic objective.

    Unstable step sizes (spectral radius of the drift matrix >= 1) are
    rejected: the recursion would diverge instead of mixing.
    """
    kernel = build_kernel(params)
    drift, noise = step_matrices(kernel, curvature)
    radius = _spectral_radius(drift)
    if radius >= 1.0:
        raise ValueError(f"unstable step size: spectral radius {radius:.6f} >= 1")
    m, s = init.mean, init.cov
    laws = [init]
    for _ in range(n_steps):
        m = drift @ m
        s = drift @ s @ drift.T + noise
        s = 0.5 * (s + s.T)  # keep round-off from drifting the symmetry
        laws.append(GaussianLaw(mean=m, cov=s, copies=init.copies))
    return laws


def stationary_covariance(params: HrlaParams, curvature: float) -> np.ndarray:
    """Fixed point of S = M S M^T + Q by iteration to residual 1e-14.

    The iteration contracts whenever the drift matrix is stable, and the
    2x2 blocks make each sweep trivially cheap.
    """
    kernel = build_kernel(params)
    drift, noise = step_matrices(kernel, curvature)
    radius = _spectral_radius(drift)
    if radius >= 1.0:
        raise ValueError(f"unstable step size: spectral radius {radius:.6f} >= 1")
    s = np.zeros((2, 2))
    for _ in range(_FIXED_POINT_MAX_ITER):
        s_next = drift @ s @ drift.T + noise
        s_next = 0.5 * (s_next + s_next.T)
        if np.abs(s_next - s).max() <= _FIXED_POINT_TOL:
            return s_next
        s = s_next
    raise RuntimeError("stationary covariance iteration did not converge")


def gaussian_kl(p: GaussianLaw, q: GaussianLaw) -> float:
    """KL(p || q) between product Gaussians, in closed form.

    Per block: (tr(Sq^-1 Sp) + (mq - mp)^T Sq^-1 (mq - mp) - n
    + ln det Sq - ln det Sp) / 2, summed over the product copies.
    """
    if p.mean.shape != q.mean.shape or p.copies != q.copies:
        raise ValueError("laws must have matching block dimension and copies")
    n = p.mean.shape[0]
    sign_q, logdet_q = np.linalg.slogdet(q.cov)
    sign_p, logdet_p = np.linalg.slogdet(p.cov)
    if sign_q <= 0 or sign_p <= 0:
        raise ValueError("covariances must be positive definite")
    q_inv = np.linalg.inv(q.cov)
    dm = q.mean - p.mean
    per_block = 0.5 * (np.trace(q_inv @ p.cov) + dm @ q_inv @ dm - n
                       + logdet_q - logdet_p)
    return p.copies * float(per_block)


def gaussian_w2(p: GaussianLaw, q: GaussianLaw) -> float:
    """Wasserstein-2 distance between product Gaussians (Bures form)."""
    if p.mean.shape != q.mean.shape or p.copies != q.copies:
        raise ValueError("laws must have matching block dimension and copies")
    # sqrtm of an SPD 2x2 via eigendecomposition
    w, v = np.linalg.eigh(q.cov)
    root_q = (v * np.sqrt(w)) @ v.T
    inner = root_q @ p.cov @ root_q
    wi, vi = np.linalg.eigh(inner)
    cross = (vi * np.sqrt(np.clip(wi, 0.0, None))) @ vi.T
    dm = p.mean - q.mean
    per_block = dm @ dm + np.trace(p.cov + q.cov - 2.0 * cross)
    return math.sqrt(max(p.copies * float(per_block), 0.0))


@dataclass(frozen=True)
class KlProfile:
    """Per-iteration KL against the Gibbs target, with fitted decay summary.

    ``floor`` is the terminal KL value (the step-size bias plateau);
    ``decay_rate``/``r_squared`` come from an ordinary least-squares fit of
    log KL against the iteration index over the pre-floor segment (KL at
    least 10x the floor), which isolates the geometric phase.  They are NaN
    when that segment has fewer than three points.
    """

    kl: np.ndarray
    step_size: float
    floor: float
    decay_rate: float
    r_squared: float

    @property
    def iterations(self) -> np.ndarray:
        return np.arange(self.kl.shape[0])

    @property
    def times(self) -> np.ndarray:
        return self.iterations * self.step_size


def kl_decay_profile(params: HrlaParams, curvature: float, n_steps: int,
                     init: GaussianLaw) -> KlProfile:
    """KL(law_k || Gibbs) for k = 0..n_steps, plus decay-rate and floor fit."""
    target = gibbs_law(params, curvature, copies=init.copies)
    laws = law_recursion(params, curvature, n_steps, init)
    kl = np.array([gaussian_kl(law, target) for law in laws])
    floor = float(kl[-1])
    segment = np.nonzero(kl >= 10.0 * floor)[0] if floor > 0 else np.arange(len(kl))
    decay_rate = float("nan")
    r_squared = float("nan")
    if segment.size >= 3:
        ks = segment.astype(float)
        ys = np.log(kl[segment])
        design = np.column_stack([np.ones_like(ks), ks])
        coef, *_ = np.linalg.lstsq(design, ys, rcond=None)
        fitted = design @ coef
        ss_res = float(((ys - fitted) ** 2).sum())
        ss_tot = float(((ys - ys.mean()) ** 2).sum())
        decay_rate = -float(coef[1])
        r_squared = 1.0 - ss_res / ss_tot if ss_tot > 0 else float("nan")
    return KlProfile(kl=kl, step_size=params.h, floor=floor,
                     decay_rate=decay_rate, r_squared=r_squared)


@dataclass(frozen=True)
class EmpiricalProbabilityCurve:
    """Monte Carlo estimates P_hat_k(eps) = #(runs with best_k - U* >= eps) / M."""

    iterations: np.ndarray        # recorded iteration indices, shape (T,)
    thresholds: np.ndarray        # eps values, shape (E,)
    p_hat: np.ndarray             # shape (T, E)
    n_runs: int

    def column(self, eps: float) -> np.ndarray:
        idx = int(np.nonzero(np.isclose(self.thresholds, eps))[0][0])
        return self.p_hat[:, idx]


@dataclass(frozen=True)
class TerminalSummary:
    average: float
    median: float
    sd: float


def empirical_probability(traces: np.ndarray, minimum_value: float,
                          thresholds: Sequence[float],
                          iterations: np.ndarray | None = None) -> EmpiricalProbabilityCurve:
    """Exact counting estimator over per-run best-value traces.

    ``traces`` has one row per run; columns are recorded iterations (strided
    recording is fine as long as ``iterations`` says which).
    """
    traces = np.asarray(traces, dtype=float)
    if traces.ndim != 2 or traces.shape[0] < 1:
        raise ValueError("traces must be a non-empty (runs, iterations) array")
    thresholds = np.asarray(list(thresholds), dtype=float)
    if thresholds.size < 1:
        raise ValueError("at least one threshold is required")
    if iterations is None:
        iterations = np.arange(traces.shape[1])
    iterations = np.asarray(iterations)
    if iterations.shape[0] != traces.shape[1]:
        raise ValueError("iterations must label the trace columns")
    excess = traces - minimum_value
    p_hat = (excess[:, :, None] >= thresholds[None, None, :]).mean(axis=0)
    return EmpiricalProbabilityCurve(iterations=iterations, thresholds=thresholds,
                                     p_hat=p_hat, n_runs=traces.shape[0])


def terminal_summary(terminal_values: np.ndarray) -> TerminalSummary:
    """Average / median / sample standard deviation of terminal best values."""
    values = np.asarray(terminal_values, dtype=float)
    if values.size < 1:
        raise ValueError("no terminal values")
    sd = float(values.std(ddof=1)) if values.size > 1 else 0.0
    return TerminalSummary(average=float(values.mean()),
                           median=float(np.median(values)), sd=sd)
