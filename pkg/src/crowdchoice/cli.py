"""Command-line entry point wiring the full pipeline.

Subcommands cover design generation, dataset simulation, factor analysis,
model estimation, willingness-to-pay, descriptive summaries, and serving the
survey.  Every command takes its randomness from explicit ``--seed`` flags, so
identical invocations produce byte-identical output files.

Exit codes: 0 success, 1 domain error (one-line diagnostic on stderr),
2 usage error.
"""
from __future__ import annotations

import functools
import sys

import click
import numpy as np

from . import __version__
from .dataio import (
    ParseError,
    read_attribute_specs,
    read_dataset,
    read_design,
    read_likert_scores,
    read_params,
    write_dataset,
    write_design,
    write_json,
    write_params,
)
from .design import (
    DesignError,
    enumerate_full_factorial,
    normalized_log_det,
    partition_blocks,
    select_d_optimal,
)
from .efa import DegenerateInputError, analyze_likert
from .estimation import (
    EstimationConfig,
    SingularHessianError,
    compute_wtp,
    default_initial_parameters,
    maximize_likelihood,
    read_estimates,
    write_estimates,
)
from .model import (
    STATEMENTS,
    CodingError,
    DrawConfig,
    ValidationError,
    default_attribute_specs,
)
from .simulate import PopulationSpec, simulate_dataset, synthesize_population
from .summaries import summarize as build_summary

_DOMAIN_ERRORS = (
    ValidationError, ParseError, DesignError, DegenerateInputError,
    CodingError, SingularHessianError, ZeroDivisionError, OSError,
)


def _domain_errors(fn):
    """Convert domain exceptions into exit-code-1 diagnostics."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except _DOMAIN_ERRORS as exc:
            raise click.ClickException(str(exc)) from exc

    return wrapper


@click.group()
@click.version_option(__version__, prog_name="crowdchoice")
def main() -> None:
    """Stated-preference toolkit for crowd-shipping grocery delivery surveys."""


@main.command()
@click.argument("attrs", type=click.Path(exists=True, dir_okay=False), required=False)
@click.option("--k", type=int, default=54, show_default=True,
              help="Number of choice situations to keep.")
@click.option("--blocks", "n_blocks", type=int, default=6, show_default=True,
              help="Number of equal-size blocks.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--restarts", type=int, default=10, show_default=True,
              help="Random restarts for the exchange search.")
@click.option("--out", type=click.Path(dir_okay=False), default="design.csv",
              show_default=True)
@_domain_errors
def design(attrs, k, n_blocks, seed, restarts, out):
    """Build a blocked D-optimal fractional design.

    ATTRS is an optional attribute-levels JSON file; without it the built-in
    delivery attribute grid is used.
    """
    specs = read_attribute_specs(attrs) if attrs else default_attribute_specs()
    full = enumerate_full_factorial(specs)
    fraction = select_d_optimal(full, k, seed=seed, n_restarts=restarts)
    block_set = partition_blocks(fraction, n_blocks, seed=seed)
    write_design(block_set.to_choice_tasks(), out)
    click.echo(f"wrote {out}: {k} rows in {n_blocks} blocks "
               f"(normalized log-det {normalized_log_det(fraction):.6f})")


@main.command()
@click.option("--design", "design_path", type=click.Path(exists=True, dir_okay=False),
              required=True, help="Blocked design CSV.")
@click.option("--params", "params_path", type=click.Path(exists=True, dir_okay=False),
              required=True, help="True parameter values JSON.")
@click.option("--n", type=int, required=True, help="Number of respondents.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), default="simulated",
              show_default=True, help="Output directory for the CSV bundle.")
@_domain_errors
def simulate(design_path, params_path, n, seed, out):
    """Synthesize a population and simulate its survey responses."""
    tasks = read_design(design_path)
    params = read_params(params_path)
    population = synthesize_population(PopulationSpec(n=n, seed=seed))
    dataset = simulate_dataset(population, tasks, params, seed=seed)
    write_dataset(dataset, out)
    write_params(params, f"{out}/truth.json")
    click.echo(f"wrote {out}: {len(dataset.respondents)} respondents, "
               f"{len(dataset.design)} design rows")


@main.command()
@click.argument("likert", type=click.Path(exists=True, dir_okay=False))
@click.option("--kaiser", type=float, default=1.0, show_default=True,
              help="Eigenvalue retention threshold.")
@click.option("--cutoff", type=float, default=0.4, show_default=True,
              help="Loading magnitude below which entries are blanked.")
@click.option("--out", type=click.Path(dir_okay=False), default="efa.json",
              show_default=True)
@_domain_errors
def efa(likert, kaiser, cutoff, out):
    """Run the exploratory factor analysis on a Likert score table."""
    table = read_likert_scores(likert)
    ids = sorted(table)
    if not ids:
        raise ValidationError(f"{likert} contains no respondents")
    scores = np.array([[table[rid][s] for s in STATEMENTS] for rid in ids], dtype=float)
    report = analyze_likert(scores, kaiser_threshold=kaiser, cutoff=cutoff)
    write_json(report, out)
    click.echo(f"wrote {out}: retained {report['n_retained']} factors "
               f"from {len(ids)} respondents")


@main.command()
@click.option("--data", "data_dir", type=click.Path(exists=True, file_okay=False),
              required=True, help="Directory with the CSV bundle.")
@click.option("--draws", type=int, default=500, show_default=True,
              help="Simulation draws per respondent.")
@click.option("--scheme", type=click.Choice(["halton", "pseudo"]), default="halton",
              show_default=True)
@click.option("--seed", type=int, default=0, show_default=True,
              help="Seed for the pseudo draw scheme.")
@click.option("--init", "init_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Starting parameter values JSON.")
@click.option("--tol", type=float, default=1e-4, show_default=True,
              help="Gradient max-norm convergence tolerance.")
@click.option("--max-iter", type=int, default=500, show_default=True)
@click.option("--threads", type=int, default=1, show_default=True,
              help="Worker threads for the likelihood.")
@click.option("--covariance/--no-covariance", default=True, show_default=True,
              help="Compute robust standard errors at the optimum.")
@click.option("--out", type=click.Path(dir_okay=False), default="estimates.json",
              show_default=True)
@_domain_errors
def estimate(data_dir, draws, scheme, seed, init_path, tol, max_iter, threads,
             covariance, out):
    """Estimate the full choice + attitude model by maximum simulated likelihood."""
    dataset = read_dataset(data_dir)
    init = read_params(init_path) if init_path else default_initial_parameters()
    config = EstimationConfig(
        draws=DrawConfig(n_draws=draws, scheme=scheme, seed=seed),
        tol=tol, max_iter=max_iter, n_threads=threads,
        compute_covariance=covariance,
    )
    result = maximize_likelihood(dataset, init=init, config=config)
    write_estimates(result, out)
    click.echo(f"wrote {out}: LL {result.ll_final:.4f}, "
               f"converged={result.converged}, iterations={result.iterations}")
    if result.non_identified:
        click.echo("warning: robust covariance unavailable; flat directions load on "
                   + ", ".join(result.non_identified), err=True)


@main.command()
@click.argument("estimates", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Optional JSON output path.")
@_domain_errors
def wtp(estimates, out):
    """Print willingness to pay for delivery-time savings, UAH per hour."""
    result = read_estimates(estimates)
    values = {ch: compute_wtp(result.estimates, ch) for ch in ("CS", "CC")}
    for channel, value in values.items():
        click.echo(f"{channel} {value:.2f}")
    if out:
        write_json({"wtp_uah_per_hour": values}, out)


@main.command()
@click.option("--data", "data_dir", type=click.Path(exists=True, file_okay=False),
              required=True, help="Directory with the CSV bundle.")
@click.option("--speed-kmh", type=float, default=20.0, show_default=True,
              help="Assumed courier speed for detour distance.")
@click.option("--out", type=click.Path(dir_okay=False), default="summary.json",
              show_default=True)
@_domain_errors
def summarize(data_dir, speed_kmh, out):
    """Write the descriptive summary bundle (importance, remuneration, modes)."""
    dataset = read_dataset(data_dir)
    report = build_summary(dataset, speed_kmh=speed_kmh)
    write_json(report, out)
    click.echo(f"wrote {out}: {report['n_respondents']} respondents")


@main.command()
@click.option("--design", "design_path", type=click.Path(exists=True, dir_okay=False),
              required=True, help="Blocked design CSV respondents rotate through.")
@click.option("--data-dir", type=click.Path(file_okay=False), required=True,
              help="Directory for the append-only response log.")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--blocks", "n_blocks", type=int, default=None,
              help="Rotate only through blocks 1..N (defaults to all).")
@_domain_errors
def serve(design_path, data_dir, host, port, n_blocks):
    """Run the survey HTTP service."""
    import uvicorn

    from .service import create_app

    tasks = read_design(design_path)
    app = create_app(design=tasks, data_dir=data_dir, n_blocks=n_blocks)
    click.echo(f"serving {len(tasks)} design rows on http://{host}:{port}")
    uvicorn.run(app, host=host, port=port, log_level="warning")


def run(argv=None) -> int:
    """Invoke the CLI programmatically; returns the process exit code."""
    try:
        main.main(args=argv, prog_name="crowdchoice", standalone_mode=True)
    except SystemExit as exc:
        code = exc.code
        if code is None:
            return 0
        return code if isinstance(code, int) else 1
    return 0


if __name__ == "__main__":
    sys.exit(run())
