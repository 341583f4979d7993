"""Command line entry points.

``pmcmc run <config>`` executes an experiment, ``pmcmc tune <config>``
runs the step-length pilot report, and ``pmcmc simulate`` writes a
synthetic observation record.  Exit codes: 0 success, 1 configuration
error, 2 runtime failure.
"""

from __future__ import annotations

import sys

import click

from .experiments import ConfigError, ExperimentConfig, run_experiment, simulate_to_csv, tune_step_report


@click.group()
def main():
    """Particle MCMC experiment runner."""


@main.command("run")
@click.argument("config_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--out-dir", default=None, help="Output directory (overrides the config).")
@click.option("--seed", type=int, default=None, help="Master seed (overrides the config).")
@click.option("--workers", type=int, default=None, help="Worker processes (PMCMC_WORKERS wins).")
def run_cmd(config_file, out_dir, seed, workers):
    """Run the experiment described by CONFIG_FILE."""
    try:
        config = ExperimentConfig.from_file(config_file)
        manifest = run_experiment(config, out_dir=out_dir, seed=seed, workers=workers)
    except ConfigError as exc:
        click.echo(f"configuration error: {exc}", err=True)
        sys.exit(1)
    except Exception as exc:
        click.echo(f"runtime failure: {exc}", err=True)
        sys.exit(2)
    failed = [j for j in manifest["jobs"] if j["status"] != "ok"]
    click.echo(f"experiment {manifest['experiment']}: {len(manifest['jobs'])} jobs, {len(failed)} failed")
    if failed:
        sys.exit(2)


@main.command("tune")
@click.argument("config_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--out-dir", default=None)
@click.option("--seed", type=int, default=None)
@click.option("--workers", type=int, default=None)
def tune_cmd(config_file, out_dir, seed, workers):
    """Pilot-run a step-length grid and report a recommendation."""
    try:
        config = ExperimentConfig.from_file(config_file)
        result = tune_step_report(config, out_dir=out_dir, seed=seed, workers=workers)
    except ConfigError as exc:
        click.echo(f"configuration error: {exc}", err=True)
        sys.exit(1)
    except Exception as exc:
        click.echo(f"runtime failure: {exc}", err=True)
        sys.exit(2)
    for row in result["grid"]:
        click.echo(f"gamma={row['gamma']:g} acceptance={row['acceptance']:.3f} total_iact={row['total_iact']:.2f}")
    click.echo(f"recommended gamma: {result['recommended_gamma']:g}")
    if result["warning"]:
        click.echo(f"warning: {result['warning']}", err=True)


@main.command("simulate")
@click.argument("model")
@click.argument("n_steps", type=int)
@click.argument("seed", type=int)
@click.argument("out_csv", type=click.Path(dir_okay=False, writable=True))
def simulate_cmd(model, n_steps, seed, out_csv):
    """Simulate MODEL for N_STEPS steps with SEED and write OUT_CSV."""
    try:
        simulate_to_csv(model, n_steps, seed, out_csv)
    except ConfigError as exc:
        click.echo(f"configuration error: {exc}", err=True)
        sys.exit(1)
    except Exception as exc:
        click.echo(f"runtime failure: {exc}", err=True)
        sys.exit(2)
    click.echo(f"wrote {out_csv}")


if __name__ == "__main__":
    main()
