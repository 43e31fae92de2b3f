"""Global optimization by sampling Gibbs measures.

The sampler is a coupled position/velocity Langevin chain advanced by its
exact per-step Ornstein-Uhlenbeck transition; the optimizer draws N
independent chains and returns the lowest-energy sample.  A closed-form
Gaussian validation suite checks the convergence theory on quadratic
targets, and the harness reproduces the benchmark protocols.
"""

from .diagnostics import (
    EmpiricalProbabilityCurve,
    GaussianLaw,
    KlProfile,
    empirical_probability,
    gaussian_kl,
    gaussian_w2,
    gibbs_law,
    kl_decay_profile,
    law_recursion,
    stationary_covariance,
    terminal_summary,
)
from .engine import BatchTrace, coefficient_table, compiled_available, simulate
from .harness import (
    ExperimentConfig,
    ExperimentResult,
    RunRecord,
    parse_config,
    read_config,
    run_experiment,
    substream,
    write_outputs,
)
from .kernel import (
    ChainState,
    DivergenceError,
    HrlaParams,
    Mode,
    TransitionKernel,
    build_kernel,
    step,
)
from .optimizer import (
    BoundsRequest,
    OptimizationResult,
    TheoryConstants,
    global_optimize,
    required_sample_count,
    sufficient_schedule,
    theory_constants,
)
from .potentials import Potential, QuadraticPotential, by_name, evaluate, quadratic, rastrigin
from .samplers import (
    AnnealingSchedule,
    ChainTrace,
    InitialDistribution,
    make_baseline,
    params_for_gibbs,
    params_for_inverse_temperature,
    params_for_sampler,
    run_chain,
)

__version__ = "0.1.0"
