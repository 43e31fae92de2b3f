"""Command-line entry points.

Subcommands:
  experiment         run a config-file experiment and write the CSV artifacts
  optimize           sample-and-argmin optimization of a built-in potential
  validate-gaussian  closed-form KL profile on the quadratic validation target
  bounds             sample-count / inverse-temperature calculator
"""

from __future__ import annotations

import sys
from pathlib import Path

import click
import numpy as np

from . import diagnostics, harness
from .engine import coefficient_table, simulate
from .optimizer import BoundsRequest, global_optimize, required_sample_count
from .potentials import by_name
from .samplers import (
    InitialDistribution,
    params_for_gibbs,
    params_for_inverse_temperature,
)


@click.group()
def main():
    """Gibbs-sampling global optimization toolkit."""


@main.command()
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
def experiment(config_path, out_dir):
    """Run the experiment described by a key=value config file."""
    cfg = harness.read_config(config_path)
    result = harness.run_experiment(cfg)
    paths = harness.write_outputs(result, out_dir)
    s = result.run_summary
    click.echo(f"runs={cfg.m} samples={cfg.n} iterations={cfg.k} "
               f"grad_evals={result.grad_evals}")
    click.echo(f"run best: avg={s.average:.6g} median={s.median:.6g} sd={s.sd:.6g}")
    c = result.chain_summary
    click.echo(f"chain best: avg={c.average:.6g} median={c.median:.6g} sd={c.sd:.6g}")
    for name, path in paths.items():
        click.echo(f"wrote {name}: {path}")


@main.command()
@click.option("--potential", default="rastrigin", show_default=True)
@click.option("--d", "dim", default=10, show_default=True, type=int)
@click.option("--a", default=4.0, show_default=True, type=float)
@click.option("--h", "step_size", default=0.01, show_default=True, type=float)
@click.option("--n", "n_samples", default=10, show_default=True, type=int)
@click.option("--k", "n_steps", default=14000, show_default=True, type=int)
@click.option("--seed", default=1, show_default=True, type=int)
@click.option("--init-mean", default=3.0, show_default=True, type=float)
@click.option("--init-variance", default=10.0, show_default=True, type=float)
def optimize(potential, dim, a, step_size, n_samples, n_steps, seed,
             init_mean, init_variance):
    """Draw N sampler outputs and report the argmin."""
    pot = by_name(potential, dim)
    params = params_for_inverse_temperature(a, step_size)
    table = coefficient_table(params, n_steps)
    init = InitialDistribution.gaussian(init_mean, init_variance)

    def oracle(rng: np.random.Generator) -> np.ndarray:
        state = init.sample(rng, pot.dim)
        trace = simulate(pot, table, state.x[None, :], state.y[None, :], [rng])
        return trace.x[0]

    result = global_optimize(oracle, pot, n_samples, np.random.default_rng(seed))
    click.echo(f"best value: {result.value!r} (sample {result.sample_index})")
    click.echo("best point: " + " ".join(repr(float(v)) for v in result.point))


@main.command("validate-gaussian")
@click.option("--a", default=4.0, show_default=True, type=float)
@click.option("--b", default=10.0, show_default=True, type=float)
@click.option("--h", "step_size", default=0.001, show_default=True, type=float)
@click.option("--k", "n_steps", default=20000, show_default=True, type=int)
@click.option("--curvature", default=1.0, show_default=True, type=float)
@click.option("--x-offset", default=3.0, show_default=True, type=float,
              help="initial x-mean displacement from the minimizer")
@click.option("--d", "copies", default=1, show_default=True, type=int)
@click.option("--out", "out_path", default="kl_profile.csv", show_default=True,
              type=click.Path(dir_okay=False))
def validate_gaussian(a, b, step_size, n_steps, curvature, x_offset, copies, out_path):
    """Exact KL decay profile on the quadratic target; writes kl_profile.csv."""
    params = params_for_gibbs(a, b, step_size)
    target = diagnostics.gibbs_law(params, curvature, copies=copies)
    start = diagnostics.GaussianLaw(mean=np.array([x_offset, 0.0]),
                                    cov=target.cov, copies=copies)
    profile = diagnostics.kl_decay_profile(params, curvature, n_steps, start)
    path = Path(out_path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("k,t,kl,floor_estimate\n")
        for k in range(profile.kl.shape[0]):
            fh.write(f"{k},{repr(k * profile.step_size)},{repr(float(profile.kl[k]))},"
                     f"{repr(profile.floor)}\n")
    click.echo(f"floor={profile.floor!r} decay_rate={profile.decay_rate!r} "
               f"r_squared={profile.r_squared!r}")
    click.echo(f"wrote {path}")


@main.command()
@click.option("--eps", required=True, type=float)
@click.option("--delta", required=True, type=float)
@click.option("--c", "w2_constant", default=1.0, show_default=True, type=float)
@click.option("--l", "smoothness", default=1.0, show_default=True, type=float)
@click.option("--a0", default=1.0, show_default=True, type=float)
def bounds(eps, delta, w2_constant, smoothness, a0):
    """Smallest sample count N and inverse temperature a with the guarantee."""
    try:
        request = BoundsRequest(eps=eps, delta=delta, w2_constant=w2_constant,
                                smoothness=smoothness, a0=a0)
    except ValueError as err:
        raise click.UsageError(str(err)) from err
    n_min, a_min = required_sample_count(request)
    click.echo(f"n_min={n_min}")
    click.echo(f"a_min={a_min!r}")


if __name__ == "__main__":
    sys.exit(main())
