"""Batched chain advancement with a compiled core and a numpy fallback.

The hot loop (K transition steps over a batch of chains) dominates the
runtime of every experiment, so it exists twice:

* ``hrlopt._engine_c`` — a Cython core that steps built-in potentials at C
  speed (selected automatically when importable);
* :func:`_advance_block_py` — a pure numpy implementation with identical
  semantics.

Both consume the same per-chain noise blocks, evaluate the same expressions
in the same order, and are compiled/written so that their outputs agree
bitwise (``-ffp-contract=off`` on the C side; coordinate-ordered reductions
on the numpy side).  ``python -m hrlopt.benchmark`` compares their speed.

Per step and per chain the engine makes one gradient evaluation and one
value evaluation, both at the pre-step point, plus a single value evaluation
of the final state after the last step, so the recorded energies cover every
state the chain visits.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .kernel import DivergenceError, HrlaParams, build_kernel
from .potentials import KERNEL_NONE, Potential
from .samplers import AnnealingSchedule

try:
    from . import _engine_c
except ImportError:  # pure-python install
    _engine_c = None

#: Largest per-block noise buffer, in float64 elements.
_NOISE_BUDGET = 8_000_000
_MAX_BLOCK = 1024


def compiled_available() -> bool:
    return _engine_c is not None


def default_backend(potential: Potential) -> str:
    """Backend used when none is requested explicitly.

    The ``HRLOPT_ENGINE`` environment variable ("compiled" or "python")
    overrides the automatic choice.  Potentials without a kernel id always
    run on the python backend.
    """
    forced = os.environ.get("HRLOPT_ENGINE")
    if forced:
        if forced not in ("compiled", "python"):
            raise ValueError(f"HRLOPT_ENGINE must be 'compiled' or 'python', got {forced!r}")
        if forced == "compiled" and _engine_c is None:
            raise RuntimeError("HRLOPT_ENGINE=compiled but the compiled engine is not built")
        if forced == "compiled" and potential.kernel_id == KERNEL_NONE:
            return "python"
        return forced
    if _engine_c is not None and potential.kernel_id != KERNEL_NONE:
        return "compiled"
    return "python"


@dataclass(frozen=True)
class CoefficientTable:
    """Per-iteration step coefficients, one entry per iteration."""

    grad_x: np.ndarray     # beta h + (gamma/alpha)(h - vel_weight)
    vel: np.ndarray        # (1 - e^{-alpha h}) / alpha
    decay: np.ndarray      # e^{-alpha h}
    grad_y: np.ndarray     # (gamma/alpha)(1 - e^{-alpha h})
    noise_xx: np.ndarray   # l11
    noise_yx: np.ndarray   # l21
    noise_yy: np.ndarray   # l22

    @property
    def n_steps(self) -> int:
        return self.grad_x.shape[0]


def coefficient_table(params: HrlaParams, n_steps: int,
                      schedule: AnnealingSchedule | None = None) -> CoefficientTable:
    """Build the coefficient arrays, rebuilding the kernel per iteration
    when a schedule is present."""
    if n_steps < 1:
        raise ValueError(f"n_steps must be >= 1, got {n_steps}")
    if schedule is None:
        k = build_kernel(params)
        kernels = None
    else:
        if schedule.steps != n_steps:
            raise ValueError(f"schedule covers {schedule.steps} iterations, "
                             f"run has {n_steps}")
        kernels = [build_kernel(schedule.params(i, params.h)) for i in range(n_steps)]

    def col(attr):
        if kernels is None:
            return np.full(n_steps, getattr(k, attr))
        return np.array([getattr(kr, attr) for kr in kernels])

    return CoefficientTable(
        grad_x=col("grad_x_total"),
        vel=col("vel_weight"),
        decay=col("exp_decay"),
        grad_y=col("grad_y_weight"),
        noise_xx=col("chol_xx"),
        noise_yx=col("chol_yx"),
        noise_yy=col("chol_yy"),
    )


@dataclass
class BatchTrace:
    """Result of advancing a batch of chains.

    ``best_value[c]`` / ``best_point[c]`` are the lowest energy chain ``c``
    visited and where; ``curves[r]``, present when run boundaries were given,
    is the per-run running best over all of the run's chains, indexed by
    iteration 0..K (entry 0 is the start state).
    """

    x: np.ndarray
    y: np.ndarray
    final_value: np.ndarray
    best_value: np.ndarray
    best_point: np.ndarray
    curves: np.ndarray | None
    grad_evals: int


def _advance_block_py(potential: Potential, tab: CoefficientTable, j0: int,
                      x: np.ndarray, y: np.ndarray, noise: np.ndarray,
                      u_out: np.ndarray, best_value: np.ndarray,
                      best_point: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    value_fn, grad_fn = potential.value_fn, potential.grad_fn
    n_block = u_out.shape[1]
    for j in range(n_block):
        k = j0 + j
        g = grad_fn(x)
        u = value_fn(x)
        u_out[:, j] = u
        improved = u < best_value
        if improved.any():
            best_value[improved] = u[improved]
            best_point[improved] = x[improved]
        xi = noise[:, j, 0, :]
        eta = noise[:, j, 1, :]
        x = (x - tab.grad_x[k] * g + tab.vel[k] * y) + tab.noise_xx[k] * xi
        y = (tab.decay[k] * y - tab.grad_y[k] * g + tab.noise_yx[k] * xi) \
            + tab.noise_yy[k] * eta
    return x, y


def _check_block(u: np.ndarray, j0: int) -> None:
    if np.isfinite(u).all():
        return
    chain, offset = np.argwhere(~np.isfinite(u))[0]
    raise DivergenceError(
        f"chain {chain} diverged: non-finite energy at iteration {j0 + offset}",
        iteration=int(j0 + offset), chain=int(chain),
    )


def simulate(potential: Potential, table: CoefficientTable, x0: np.ndarray,
             y0: np.ndarray, streams, *, run_sizes=None, backend: str | None = None,
             block_steps: int | None = None) -> BatchTrace:
    """Advance ``len(streams)`` chains through all iterations of ``table``.

    Each chain draws its noise from its own stream (all xi for a step, then
    all eta), so results do not depend on how chains are batched, how steps
    are blocked, or which backend runs the arithmetic.
    """
    x = np.array(x0, dtype=float, order="C", copy=True)
    y = np.array(y0, dtype=float, order="C", copy=True)
    if x.ndim != 2 or x.shape != y.shape:
        raise ValueError("x0 and y0 must be matching (chains, dim) arrays")
    n_chains, dim = x.shape
    if dim != potential.dim:
        raise ValueError(f"state dimension {dim} does not match potential "
                         f"dimension {potential.dim}")
    if len(streams) != n_chains:
        raise ValueError(f"{n_chains} chains but {len(streams)} streams")
    n_steps = table.n_steps

    if backend is None:
        backend = default_backend(potential)
    if backend == "compiled":
        if _engine_c is None:
            raise RuntimeError("compiled engine requested but not built")
        if potential.kernel_id == KERNEL_NONE:
            raise RuntimeError(f"potential {potential.name!r} has no compiled kernel")
    elif backend != "python":
        raise ValueError(f"unknown backend {backend!r}")

    if block_steps is None:
        block_steps = max(16, min(_MAX_BLOCK, _NOISE_BUDGET // max(1, 2 * n_chains * dim)))
    block_steps = min(block_steps, n_steps)

    starts = None
    curves = None
    carry = None
    if run_sizes is not None:
        run_sizes = np.asarray(run_sizes, dtype=np.int64)
        if run_sizes.sum() != n_chains or (run_sizes < 1).any():
            raise ValueError("run sizes must be positive and sum to the chain count")
        starts = np.concatenate([[0], np.cumsum(run_sizes)[:-1]])
        curves = np.empty((len(run_sizes), n_steps + 1))
        carry = np.full(len(run_sizes), np.inf)

    best_value = np.full(n_chains, np.inf)
    best_point = np.zeros((n_chains, dim))

    for j0 in range(0, n_steps, block_steps):
        nb = min(block_steps, n_steps - j0)
        noise = np.empty((n_chains, nb, 2, dim))
        u = np.empty((n_chains, nb))
        for c, gen in enumerate(streams):
            gen.standard_normal(out=noise[c])
        if backend == "compiled":
            _engine_c.advance_block(
                potential.kernel_id, potential.kernel_params,
                table.grad_x, table.vel, table.decay, table.grad_y,
                table.noise_xx, table.noise_yx, table.noise_yy,
                j0, x, y, noise, u, best_value, best_point,
            )
        else:
            x, y = _advance_block_py(potential, table, j0, x, y,
                                     noise, u, best_value, best_point)
        _check_block(u, j0)
        if curves is not None:
            m = np.minimum.reduceat(u, starts, axis=0)
            np.minimum.accumulate(m, axis=1, out=m)
            np.minimum(m, carry[:, None], out=m)
            curves[:, j0:j0 + nb] = m
            carry = m[:, -1].copy()

    final_value = np.asarray(potential.value_fn(x), dtype=float)
    if not np.isfinite(final_value).all():
        chain = int(np.argwhere(~np.isfinite(final_value))[0][0])
        raise DivergenceError(
            f"chain {chain} diverged: non-finite energy at iteration {n_steps}",
            iteration=n_steps, chain=chain,
        )
    improved = final_value < best_value
    if improved.any():
        best_value[improved] = final_value[improved]
        best_point[improved] = x[improved]
    if curves is not None:
        curves[:, n_steps] = np.minimum(carry, np.minimum.reduceat(final_value, starts))

    return BatchTrace(
        x=x, y=y, final_value=final_value, best_value=best_value,
        best_point=best_point, curves=curves, grad_evals=n_chains * n_steps,
    )
