"""Experiment orchestration: config parsing, reproducible parallel Monte
Carlo over the (runs x samples) grid, and CSV emission.

Every chain owns a counter-based random stream derived from (master seed,
run index, sample index), so results are bit-identical for any worker count
and any batching of the work.  Workers process contiguous slabs of runs and
the reduction walks runs in index order.

Two aggregations of the per-run results are emitted:

* ``summary.csv`` - per-run running best (the minimum over the run's N
  chains and all iterations), averaged over runs.  This is the statistic the
  annealed benchmark protocol reports.
* ``chain_summary.csv`` - per-run mean of the N per-chain running bests,
  averaged over runs.  This is the statistic the fixed-temperature
  step-size benchmark reports.
"""

from __future__ import annotations

import dataclasses
import multiprocessing
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .diagnostics import (
    EmpiricalProbabilityCurve,
    TerminalSummary,
    empirical_probability,
    terminal_summary,
)
from .engine import coefficient_table, simulate
from .potentials import Potential, by_name
from .samplers import AnnealingSchedule, InitialDistribution, params_for_sampler

# Domain separation tag mixed into every stream derivation (arbitrary but
# frozen; changing it changes every trajectory).
STREAM_DOMAIN_TAG = 0x48524C4F50540001  # "HRLOPT" + version nibble


def substream(master_seed: int, run_index: int, sample_index: int) -> np.random.Generator:
    """Counter-based stream for one chain, stable across platforms.

    The Philox key is the 128-bit hash of (domain tag, master seed, run,
    sample) produced by numpy's SeedSequence, whose mixing function is
    documented and versioned.  Identical inputs give identical streams on
    any machine and under any worker count; distinct inputs give
    statistically independent streams.
    """
    if master_seed < 0 or run_index < 0 or sample_index < 0:
        raise ValueError("seed and indices must be non-negative")
    ss = np.random.SeedSequence([STREAM_DOMAIN_TAG, master_seed, run_index, sample_index])
    key = ss.generate_state(2, np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


_INT_FIELDS = {"d", "m", "n", "k", "seed", "workers", "record_every"}
_FLOAT_FIELDS = {"h", "a", "a_low", "a_high", "curvature", "init_mean",
                 "init_variance", "init_point", "init_y_variance"}
_STR_FIELDS = {"potential", "sampler", "init"}
_LIST_FIELDS = {"epsilons"}


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: protocol sizes, sampler parameters, init, seed.

    Exactly one of ``a`` (fixed inverse temperature) or the pair
    ``a_low``/``a_high`` (annealing ramp) must be given.
    """

    potential: str
    d: int
    m: int
    n: int
    k: int
    h: float
    seed: int
    epsilons: tuple[float, ...]
    a: float | None = None
    a_low: float | None = None
    a_high: float | None = None
    sampler: str = "hrla"
    init: str = "gaussian"
    init_mean: float = 3.0
    init_variance: float = 10.0
    init_point: float = 1.0
    init_y_variance: float = 0.0
    curvature: float = 1.0
    workers: int = 1
    record_every: int | None = None

    def __post_init__(self):
        if min(self.m, self.n, self.k) < 1:
            raise ValueError("m, n and k must all be >= 1")
        if self.h <= 0:
            raise ValueError(f"h must be positive, got {self.h}")
        if self.seed < 0:
            raise ValueError("seed must be a non-negative 64-bit integer")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        eps = tuple(float(e) for e in self.epsilons)
        if not eps:
            raise ValueError("epsilons must not be empty")
        if any(b <= a for a, b in zip(eps, eps[1:])):
            raise ValueError("epsilons must be strictly ascending")
        object.__setattr__(self, "epsilons", eps)
        has_fixed = self.a is not None
        has_ramp = self.a_low is not None or self.a_high is not None
        if has_fixed == has_ramp:
            raise ValueError("give either a fixed 'a' or the pair a_low/a_high, not both")
        if has_ramp and (self.a_low is None or self.a_high is None):
            raise ValueError("a_low and a_high must be given together")
        if self.sampler not in ("hrla", "ola", "ula"):
            raise ValueError(f"unknown sampler {self.sampler!r}")
        if has_ramp and self.sampler != "hrla":
            raise ValueError("annealing is only wired for the hrla sampler")
        if self.record_every is not None and self.record_every < 1:
            raise ValueError("record_every must be >= 1")

    @property
    def stride(self) -> int:
        if self.record_every is not None:
            return self.record_every
        return 10 if self.k >= 10_000 else 1

    @property
    def a_final(self) -> float:
        return float(self.a if self.a is not None else self.a_high)

    def build_potential(self) -> Potential:
        return by_name(self.potential, self.d, curvature=self.curvature)

    def build_init(self) -> InitialDistribution:
        if self.init == "gaussian":
            return InitialDistribution.gaussian(self.init_mean, self.init_variance,
                                                self.init_y_variance)
        if self.init == "dirac":
            return InitialDistribution.dirac(self.init_point)
        raise ValueError(f"unknown init {self.init!r}")

    def build_schedule(self) -> AnnealingSchedule | None:
        if self.a is not None:
            return None
        return AnnealingSchedule(a_low=self.a_low, a_high=self.a_high, steps=self.k)


def parse_config(text: str) -> ExperimentConfig:
    """Parse the line-oriented ``key = value`` config format.

    ``#`` starts a comment; keys are exactly the ExperimentConfig field
    names; unknown or repeated keys are errors.
    """
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in known:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ValueError(f"line {lineno}: repeated key {key!r}")
        try:
            if key in _INT_FIELDS:
                values[key] = int(value)
            elif key in _FLOAT_FIELDS:
                values[key] = float(value)
            elif key in _LIST_FIELDS:
                values[key] = tuple(float(v) for v in value.split(",") if v.strip())
            else:
                values[key] = value
        except ValueError as err:
            raise ValueError(f"line {lineno}: bad value for {key!r}: {err}") from err
    return ExperimentConfig(**values)


def read_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())


@dataclass(frozen=True)
class RunRecord:
    """Results of one run (N chains, K iterations).

    ``best_values[t]`` is the running best over the run's chains at recorded
    iteration ``iterations[t]`` (nonincreasing); the terminal entries are
    exact regardless of recording stride.  ``chain_best_values[s]`` is the
    running best of chain ``s`` alone, and the terminal point is where the
    winning chain attained the run's terminal value.
    """

    run_index: int
    iterations: np.ndarray
    best_values: np.ndarray
    terminal_value: float
    terminal_point: np.ndarray
    best_sample_index: int
    chain_best_values: np.ndarray


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    records: list[RunRecord]
    curve: EmpiricalProbabilityCurve
    run_summary: TerminalSummary          # over per-run running bests
    chain_summary: TerminalSummary        # over per-run means of chain bests
    grad_evals: int

    def summary_row(self) -> dict:
        return self._row(self.run_summary)

    def chain_summary_row(self) -> dict:
        return self._row(self.chain_summary)

    def _row(self, s: TerminalSummary) -> dict:
        cfg = self.config
        return {
            "h": cfg.h, "a_final": cfg.a_final, "avg": s.average,
            "median": s.median, "sd": s.sd, "m": cfg.m, "n": cfg.n, "k": cfg.k,
            "sampler": cfg.sampler,
        }


def _recorded_iterations(k: int, stride: int) -> np.ndarray:
    idx = np.arange(0, k + 1, stride)
    if idx[-1] != k:
        idx = np.append(idx, k)
    return idx


def _run_slab(args) -> dict:
    """Advance runs [run_lo, run_hi) and reduce them to per-run payloads."""
    cfg, run_lo, run_hi = args
    potential = cfg.build_potential()
    init = cfg.build_init()
    schedule = cfg.build_schedule()
    if schedule is None:
        base = params_for_sampler(cfg.sampler, cfg.a_final, cfg.h)
    else:
        # only h is taken from the base parameters; the rest is re-derived
        # from a_k before every iteration
        base = params_for_sampler("hrla", 1.0, cfg.h)
    table = coefficient_table(base, cfg.k, schedule=schedule)

    n_runs = run_hi - run_lo
    streams = [substream(cfg.seed, r, s)
               for r in range(run_lo, run_hi) for s in range(cfg.n)]
    d = potential.dim
    x0 = np.empty((n_runs * cfg.n, d))
    y0 = np.empty((n_runs * cfg.n, d))
    for c, gen in enumerate(streams):
        state = init.sample(gen, d)
        x0[c] = state.x
        y0[c] = state.y

    trace = simulate(potential, table, x0, y0, streams,
                     run_sizes=[cfg.n] * n_runs)

    recorded = _recorded_iterations(cfg.k, cfg.stride)
    runs = []
    for i in range(n_runs):
        chain_best = trace.best_value[i * cfg.n:(i + 1) * cfg.n]
        winner = int(np.argmin(chain_best))
        runs.append({
            "run_index": run_lo + i,
            "best_values": trace.curves[i, recorded].copy(),
            "terminal_value": float(trace.curves[i, -1]),
            "terminal_point": trace.best_point[i * cfg.n + winner].copy(),
            "best_sample_index": winner,
            "chain_best_values": chain_best.copy(),
        })
    return {"runs": runs, "grad_evals": trace.grad_evals}


def _slabs(m: int, workers: int) -> list[tuple[int, int]]:
    per = -(-m // workers)  # ceil
    return [(lo, min(lo + per, m)) for lo in range(0, m, per)]


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Execute the full (M runs) x (N chains) x (K iterations) protocol.

    The total number of gradient evaluations is exactly M * N * K and is
    returned (and asserted) in the result.
    """
    # validate the full spec before any compute
    potential = cfg.build_potential()
    cfg.build_init()
    cfg.build_schedule()

    slabs = _slabs(cfg.m, cfg.workers)
    tasks = [(cfg, lo, hi) for lo, hi in slabs]
    if len(tasks) == 1 or cfg.workers == 1:
        slab_results = [_run_slab(t) for t in tasks]
    else:
        methods = multiprocessing.get_all_start_methods()
        ctx = multiprocessing.get_context("fork" if "fork" in methods else "spawn")
        with ctx.Pool(processes=cfg.workers) as pool:
            slab_results = pool.map(_run_slab, tasks)

    recorded = _recorded_iterations(cfg.k, cfg.stride)
    records: list[RunRecord] = []
    grad_evals = 0
    for payload in slab_results:
        grad_evals += payload["grad_evals"]
        records.extend(RunRecord(iterations=recorded, **run) for run in payload["runs"])
    records.sort(key=lambda r: r.run_index)

    expected = cfg.m * cfg.n * cfg.k
    if grad_evals != expected:
        raise AssertionError(f"gradient accounting mismatch: {grad_evals} != {expected}")

    u_star = potential.minimum_value if potential.minimum_value is not None else 0.0
    traces = np.stack([r.best_values for r in records])
    curve = empirical_probability(traces, u_star, cfg.epsilons, iterations=recorded)
    run_summary = terminal_summary(np.array([r.terminal_value for r in records]))
    chain_summary = terminal_summary(
        np.array([r.chain_best_values.mean() for r in records]))
    return ExperimentResult(config=cfg, records=records, curve=curve,
                            run_summary=run_summary, chain_summary=chain_summary,
                            grad_evals=grad_evals)


def _format(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_format(v) for v in row) + "\n")


def write_outputs(result: ExperimentResult, out_dir) -> dict[str, Path]:
    """Emit curves.csv, probabilities.csv, summary.csv and chain_summary.csv."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {}

    paths["curves"] = out / "curves.csv"
    _write_csv(paths["curves"], ["run", "iteration", "best_value"],
               ((r.run_index, int(it), val)
                for r in result.records
                for it, val in zip(r.iterations, r.best_values)))

    curve = result.curve
    paths["probabilities"] = out / "probabilities.csv"
    _write_csv(paths["probabilities"], ["iteration", "epsilon", "p_hat"],
               ((int(curve.iterations[t]), float(curve.thresholds[e]),
                 float(curve.p_hat[t, e]))
                for t in range(curve.iterations.shape[0])
                for e in range(curve.thresholds.shape[0])))

    header = ["h", "a_final", "avg", "median", "sd", "m", "n", "k", "sampler"]
    row = result.summary_row()
    paths["summary"] = out / "summary.csv"
    _write_csv(paths["summary"], header, [[row[c] for c in header]])
    chain_row = result.chain_summary_row()
    paths["chain_summary"] = out / "chain_summary.csv"
    _write_csv(paths["chain_summary"], header, [[chain_row[c] for c in header]])
    return paths
