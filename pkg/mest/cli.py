"""CLI interface for mest.

Usage:
    mest simulate --n 200 --dist normal --reps 100 --format markdown
    mest simulate --n 200 --n 500 --n 700 --out table.csv --parallel 4
    mest normality --n 700 --reps 500 --sn-gamma-power 2 --samples-out t.csv
"""

from functools import wraps
from pathlib import Path
from typing import Optional, Tuple
import logging
import sys

import click
from dotenv import load_dotenv

from .config import ERROR_LAWS, REPORT_FORMATS, Config
from .exceptions import FailureBudgetExceeded, MEstError
from .experiments import (
    DEFAULT_METHODS,
    MethodSpec,
    emit_report,
    normality_check,
    normality_report,
    run_scenario,
    write_samples,
)
from .losses import LossSpec
from .simgen import ScenarioConfig

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FAILURE_BUDGET = 2


def setup_logging(verbose: bool, quiet: bool):
    """Configure logging based on verbosity.

    Args:
        verbose: Enable debug logging
        quiet: Suppress all but errors
    """
    if quiet:
        level = logging.ERROR
    elif verbose:
        level = logging.DEBUG
    else:
        level = logging.INFO

    logging.basicConfig(
        level=level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        datefmt="%H:%M:%S",
    )


class MestGroup(click.Group):
    """Click group whose usage errors exit with 1 instead of click's 2."""

    def main(self, *args, **kwargs):
        kwargs["standalone_mode"] = False
        try:
            return super().main(*args, **kwargs)
        except click.ClickException as e:
            e.show()
            sys.exit(EXIT_USAGE)
        except click.Abort:
            click.echo("Aborted!", err=True)
            sys.exit(EXIT_USAGE)


def common_options(func):
    """--config, --verbose and --quiet for every subcommand."""

    @click.option("--config", "config_path", type=click.Path(path_type=Path), default=None,
                  help="YAML config file")
    @click.option("--verbose", "-v", is_flag=True, help="Debug logging")
    @click.option("--quiet", "-q", is_flag=True, help="Errors only")
    @wraps(func)
    def wrapper(*args, config_path: Optional[Path], verbose: bool, quiet: bool, **kwargs):
        setup_logging(verbose, quiet)
        try:
            config = Config.from_yaml(config_path) if config_path else Config.default()
            config = Config.from_env(config)
            return func(*args, config=config, **kwargs)
        except FailureBudgetExceeded as e:
            click.echo(f"Error: {e}", err=True)
            raise SystemExit(EXIT_FAILURE_BUDGET)
        except MEstError as e:
            click.echo(f"Error: {e}", err=True)
            raise SystemExit(EXIT_USAGE)

    return wrapper


def apply_overrides(config: Config, **flags) -> Config:
    """Copy non-None CLI flags into config, then let M_EST_SEED win over --seed."""
    sim, solver, grid, out = config.simulation, config.solver, config.grid, config.output
    targets = {
        "dist": (sim, "dist"),
        "reps": (sim, "replicates"),
        "seed": (sim, "seed"),
        "loss": (sim, "loss"),
        "parallel": (sim, "parallel"),
        "sn_gamma_power": (sim, "sn_gamma_power"),
        "zero_tol": (solver, "zero_tol"),
        "grid_points": (grid, "n_points"),
        "format": (out, "format"),
        "out": (out, "path"),
        "dump_data": (out, "dump_dir"),
    }
    for name, value in flags.items():
        if value is None or name not in targets:
            continue
        section, attr = targets[name]
        setattr(section, attr, value)
    for name in ("standardize", "holdout_pe"):
        if flags.get(name):
            setattr(sim, name, True)

    # re-validate the sections the flags touched
    for section in (sim, solver, grid, out):
        section.__post_init__()
    return config.apply_seed_env()


def write_output(text: str, path: Optional[Path]):
    if path is None:
        click.echo(text, nl=False)
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    click.echo(f"Report written to {path}", err=True)


@click.group(cls=MestGroup)
@click.version_option(package_name="mest")
def cli():
    """mest - penalized robust M-estimation and its simulation study."""
    load_dotenv()


@cli.command()
@click.option("--n", "ns", type=int, multiple=True, help="Sample size (repeatable, default 200)")
@click.option("--dist", type=click.Choice(ERROR_LAWS), default=None, help="Error law")
@click.option("--reps", type=int, default=None, help="Replicates per scenario (default 500)")
@click.option("--seed", type=int, default=None, help="Master seed (M_EST_SEED overrides)")
@click.option("--methods", default=DEFAULT_METHODS, show_default=True,
              help="Comma list of oracle,lasso-ls,lasso-lad,lla")
@click.option("--loss", default=None, help="lad, huber:c, quantile:a, ls or lq:q (Oracle and LLA)")
@click.option("--grid-points", type=int, default=None, help="Lambda grid size (default 50)")
@click.option("--zero-tol", type=float, default=None, help="Hard-zero threshold (default 1e-6)")
@click.option("--out", type=click.Path(path_type=Path), default=None, help="Output file (default stdout)")
@click.option("--format", type=click.Choice(REPORT_FORMATS), default=None, help="Report format")
@click.option("--dump-data", type=click.Path(path_type=Path), default=None,
              help="Write every replicate's dataset as CSV into this directory")
@click.option("--parallel", type=int, default=None, help="Worker processes (-1 = all cores)")
@click.option("--standardize", is_flag=True, help="Scale columns to unit variance before fitting")
@click.option("--holdout-pe", is_flag=True, help="PE on an independent draw instead of in-sample")
@common_options
def simulate(config: Config, ns: Tuple[int, ...], methods: str, **flags):
    """Run the variable-selection study and print the results table.

    Example:
        mest simulate --n 200 --dist t5 --reps 100 --format markdown
    """
    config = apply_overrides(config, **flags)
    sim = config.simulation
    method_specs = MethodSpec.parse_list(methods, LossSpec.parse(sim.loss))

    rows = []
    for n in ns or (200,):
        scenario = ScenarioConfig(
            n=n, rho=sim.rho, dist=sim.dist, seed=sim.seed, replicates=sim.replicates
        )
        click.echo(
            f"{scenario.scenario_id}: n={scenario.n} p={scenario.p} k={scenario.k} "
            f"m={scenario.m} replicates={scenario.replicates}",
            err=True,
        )
        rows.extend(
            run_scenario(
                scenario,
                method_specs,
                config.solver.to_options(),
                parallel=sim.parallel,
                grid_points=config.grid.n_points,
                min_ratio=config.grid.min_ratio,
                standardize=sim.standardize,
                holdout_pe=sim.holdout_pe,
                dump_dir=config.output.dump_dir,
            )
        )

    write_output(emit_report(rows, config.output.format), config.output.path)


@cli.command()
@click.option("--n", "n", type=int, default=700, show_default=True, help="Sample size")
@click.option("--dist", type=click.Choice(ERROR_LAWS), default=None, help="Error law")
@click.option("--reps", type=int, default=None, help="Replicates (default 500)")
@click.option("--seed", type=int, default=None, help="Master seed (M_EST_SEED overrides)")
@click.option("--loss", default=None, help="Loss for the LLA fits (default lad)")
@click.option("--coord", type=int, default=1, show_default=True,
              help="u = e_J, J counted from 1 within the true support")
@click.option("--sn-gamma-power", type=click.Choice(["1", "2"]), default=None,
              help="Power of gamma in s_n^2 (default 1)")
@click.option("--grid-points", type=int, default=None, help="Lambda grid size (default 50)")
@click.option("--zero-tol", type=float, default=None, help="Hard-zero threshold (default 1e-6)")
@click.option("--parallel", type=int, default=None, help="Worker processes (-1 = all cores)")
@click.option("--samples-out", type=click.Path(path_type=Path), default=None,
              help="Write the standardized statistics as CSV")
@click.option("--out", type=click.Path(path_type=Path), default=None, help="Output file (default stdout)")
@common_options
def normality(config: Config, n: int, coord: int, samples_out: Optional[Path], **flags):
    """Check asymptotic normality of the LLA estimator on the true support.

    Example:
        mest normality --n 700 --reps 500 --sn-gamma-power 2
    """
    if flags.get("sn_gamma_power") is not None:
        flags["sn_gamma_power"] = int(flags["sn_gamma_power"])
    config = apply_overrides(config, **flags)
    sim = config.simulation

    scenario = ScenarioConfig(n=n, rho=sim.rho, dist=sim.dist, seed=sim.seed, replicates=sim.replicates)
    if not 1 <= coord <= scenario.k:
        raise click.BadParameter(f"must be between 1 and k={scenario.k}", param_hint="--coord")
    u = [0.0] * scenario.k
    u[coord - 1] = 1.0

    result = normality_check(
        scenario,
        u,
        loss=LossSpec.parse(sim.loss),
        gamma_power=sim.sn_gamma_power,
        opts=config.solver.to_options(),
        parallel=sim.parallel,
        grid_points=config.grid.n_points,
        min_ratio=config.grid.min_ratio,
    )
    if samples_out is not None:
        write_samples(result, samples_out)
    write_output(normality_report(result, scenario.scenario_id), config.output.path)


def main():
    cli()


if __name__ == "__main__":
    main()
