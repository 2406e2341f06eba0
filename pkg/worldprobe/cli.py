# MIT License
#
# Copyright (c) 2024 worldprobe authors
#
# See LICENSE for the full license text.
"""Command line entry points."""
import functools
import logging
import sys
from pathlib import Path
from typing import Callable, List, Optional

import click
import yaml
from pydantic import ValidationError
from rich.console import Console
from rich.table import Table

from worldprobe.agent import ActionMode, build_agent, play_episode
from worldprobe.env import render_text
from worldprobe.exceptions import ConfigError, MissingArtifactError, WorldProbeError
from worldprobe.jobs import ExperimentJob, ordering_summary
from worldprobe.models import ExperimentConfig, ProbeReport
from worldprobe.probe import Control
from worldprobe.utils.logging import init

__all__ = ["cli", "EXIT_OK", "EXIT_CONFIG", "EXIT_RUNTIME"]

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2

console = Console()


def _field_paths(error: ValidationError) -> List[str]:
    return [f"{'.'.join(str(part) for part in e['loc'])}: {e['msg']}"
            for e in error.errors()]


def handle_errors(command: Callable) -> Callable:
    """Map configuration and runtime failures onto exit codes."""

    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except ValidationError as e:
            for line in _field_paths(e):
                click.echo(f"config error: {line}", err=True)
            sys.exit(EXIT_CONFIG)
        except ConfigError as e:
            click.echo(f"config error: {e}", err=True)
            sys.exit(EXIT_CONFIG)
        except WorldProbeError as e:
            click.echo(f"error: {type(e).__name__}: {e}", err=True)
            sys.exit(EXIT_RUNTIME)
        except (click.ClickException, click.Abort, click.exceptions.Exit):
            raise
        except Exception as e:
            log.exception(f"{command.__name__} failed")
            click.echo(f"error: {type(e).__name__}: {e}", err=True)
            sys.exit(EXIT_RUNTIME)

    return wrapper


def experiment_options(command: Callable) -> Callable:
    options = [
        click.option("--config", "config_path", required=True,
                     type=click.Path(dir_okay=False, path_type=Path),
                     help="Experiment YAML file."),
        click.option("--seed", type=int, default=None,
                     help="Override train, collect and probe seeds."),
        click.option("--out", type=click.Path(file_okay=False, path_type=Path),
                     default=None, help="Output directory."),
        click.option("--map", "map_kind", default=None,
                     type=click.Choice(["random", "monster", "trap", "ultimate"])),
        click.option("--crop", type=click.Choice(["3", "5", "9"]), default=None),
        click.option("--deterministic", is_flag=True, default=False,
                     help="Single process everywhere."),
        click.option("--verbose", "-v", is_flag=True, default=False),
        click.option("--no-progress", is_flag=True, default=False),
    ]
    for option in reversed(options):
        command = option(command)
    return command


def load_config(config_path: Path, seed: Optional[int] = None,
                out: Optional[Path] = None, map_kind: Optional[str] = None,
                crop: Optional[str] = None,
                deterministic: bool = False) -> ExperimentConfig:
    if not config_path.is_file():
        raise ConfigError(f"Config file {config_path} does not exist.")

    try:
        config = ExperimentConfig.from_yaml_file(config_path)
    except yaml.YAMLError as e:
        raise ConfigError(f"{config_path} is not valid YAML: {e}") from e
    except TypeError as e:
        raise ConfigError(f"{config_path} must hold a mapping of sections.") from e

    return config.with_overrides(seed=seed, map_kind=map_kind,
                                 crop=int(crop) if crop else None,
                                 output_dir=out, deterministic=deterministic)


def _job(config_path, seed, out, map_kind, crop, deterministic, verbose,
         no_progress) -> ExperimentJob:
    init(verbose)
    config = load_config(config_path, seed, out, map_kind, crop, deterministic)
    return ExperimentJob(config, progress_bar=not no_progress)


def print_reports(reports: List[ProbeReport]) -> None:
    table = Table(title="Position probes")
    for column in ("tap", "arch", "acc_x", "acc_y", "acc_mean", "chance", "n_test"):
        table.add_column(column)

    for r in reports:
        table.add_row(r.tap, r.arch, f"{r.acc_x:.3f}", f"{r.acc_y:.3f}",
                      f"{r.acc_mean:.3f}", f"{r.chance:.3f}", str(r.n_test))

    console.print(table)


@click.group()
def cli():
    pass


@cli.command()
@experiment_options
@click.option("--dry-run", is_flag=True, default=False,
              help="Validate the config and exit.")
@handle_errors
def train(dry_run, **options):
    """Train the agent, write checkpoints and metrics."""

    job = _job(**options)

    if dry_run:
        net = build_agent(job.config.agent, job.config.seeds.train)
        click.echo(f"config ok: {job.config.name}, {net.num_parameters} agent parameters,"
                   f" {job.config.ppo.max_env_steps} env step budget")
        return

    result = job.train()
    click.echo(f"converged={result.converged} env_steps={result.env_steps}"
               f" mean_return={result.mean_return:.3f}")


@cli.command()
@experiment_options
@click.option("--best", is_flag=True, default=False,
              help="Use the best instead of the final checkpoint.")
@handle_errors
def collect(best, **options):
    """Record activation datasets for every configured tap."""

    job = _job(**options)
    datasets = job.collect(job.load_checkpoint(best))
    for tap, dataset in datasets.items():
        click.echo(f"{tap}: {len(dataset)} records of size {dataset.dim}")


@cli.command()
@experiment_options
@click.option("--control", type=click.Choice([c.value for c in Control]),
              default=Control.NONE.value)
@handle_errors
def probe(control, **options):
    """Train and evaluate the configured probes."""

    job = _job(**options)
    print_reports(job.probe(control))


@cli.command(name="eval")
@experiment_options
@click.option("--control", type=click.Choice([c.value for c in Control]),
              default=Control.NONE.value)
@handle_errors
def evaluate(control, **options):
    """Re-evaluate saved probes on saved datasets."""

    job = _job(**options)
    print_reports(job.evaluate(control))


@cli.command()
@experiment_options
@handle_errors
def experiment(**options):
    """Train, collect, probe and evaluate end to end."""

    job = _job(**options)
    reports = job.run_all()
    print_reports(reports)

    for key, holds in ordering_summary(reports).items():
        click.echo(f"{key}: {'yes' if holds else 'no'}")


@cli.command()
@experiment_options
@click.option("--episode-seed", type=int, default=0)
@click.option("--random-policy", is_flag=True, default=False,
              help="Play uniformly random actions instead of the checkpoint.")
@click.option("--sample", is_flag=True, default=False,
              help="Sample actions instead of acting greedily.")
@click.option("--max-frames", type=int, default=None)
@handle_errors
def render(episode_seed, random_policy, sample, max_frames, **options):
    """Play a seeded episode and print it as text frames."""

    job = _job(**options)
    net = None
    if not random_policy:
        try:
            net = job.load_checkpoint().build()
        except MissingArtifactError:
            log.warning("No checkpoint found, playing a random policy")

    mode = ActionMode.SAMPLE if sample else ActionMode.GREEDY
    total = 0.0

    for number, frame in enumerate(play_episode(net, job.config.room, episode_seed, mode)):
        if max_frames is not None and number >= max_frames:
            break

        header = f"step {frame.state.steps}"
        if frame.result is not None:
            total += frame.result.reward
            header += f" action {frame.action} reward {frame.result.reward:+.3f}"
        click.echo(header)
        click.echo(render_text(frame.canvas))
        click.echo("")

    click.echo(f"return {total:+.3f}")


def main():
    cli()
