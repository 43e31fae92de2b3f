"""Compare the compiled and pure-numpy engines on representative workloads.

Run as ``python -m hrlopt.benchmark``.  Workloads cover the two batching
regimes the harness uses: one small run (few chains) and a full experiment
slab (many chains).  Besides timing, the results of both engines are checked
for exact equality.
"""

from __future__ import annotations

import time

import numpy as np

from .engine import compiled_available, coefficient_table, simulate
from .harness import substream
from .potentials import rastrigin
from .samplers import InitialDistribution, params_for_inverse_temperature


def _setup(n_chains: int, d: int):
    potential = rastrigin(d)
    init = InitialDistribution.gaussian(3.0, 10.0)
    streams = [substream(2024, 0, s) for s in range(n_chains)]
    x0 = np.empty((n_chains, d))
    y0 = np.empty((n_chains, d))
    for c, gen in enumerate(streams):
        state = init.sample(gen, d)
        x0[c], y0[c] = state.x, state.y
    return potential, x0, y0


def _run(backend: str, n_chains: int, n_steps: int, d: int):
    potential, x0, y0 = _setup(n_chains, d)
    table = coefficient_table(params_for_inverse_temperature(4.0, 0.01), n_steps)
    streams = [substream(2024, 0, s) for s in range(n_chains)]
    # re-draw the init so the streams are positioned exactly as in _setup
    init = InitialDistribution.gaussian(3.0, 10.0)
    for gen in streams:
        init.sample(gen, d)
    start = time.perf_counter()
    trace = simulate(potential, table, x0, y0, streams, run_sizes=[n_chains],
                     backend=backend)
    elapsed = time.perf_counter() - start
    return trace, elapsed


def main() -> None:
    workloads = [
        ("single run", 10, 14_000, 10),
        ("experiment slab", 1_000, 2_000, 10),
    ]
    backends = ["python"]
    if compiled_available():
        backends.insert(0, "compiled")
    else:
        print("compiled engine not built; timing the python engine only")

    for name, n_chains, n_steps, d in workloads:
        steps = n_chains * n_steps
        print(f"\n{name}: {n_chains} chains x {n_steps} steps, d={d}")
        results = {}
        for backend in backends:
            trace, elapsed = _run(backend, n_chains, n_steps, d)
            results[backend] = trace
            rate = steps / elapsed / 1e6
            print(f"  {backend:>8}: {elapsed:7.2f} s   {rate:6.2f} M chain-steps/s")
        if len(results) == 2:
            same = (np.array_equal(results["compiled"].x, results["python"].x)
                    and np.array_equal(results["compiled"].curves,
                                       results["python"].curves))
            print(f"  engines agree bitwise: {same}")


if __name__ == "__main__":
    main()
