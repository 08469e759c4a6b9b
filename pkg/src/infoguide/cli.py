"""Command line interface.

Exit codes: 0 success, 1 usage error, 2 data error (unreadable or
schema-violating input), 3 partial grid failure (the run finished but some
cells recorded errors).
"""
from __future__ import annotations

import json
import sys

import click

from .algorithms import ALGORITHMS, AlgorithmConfig, fit_series
from .baselines import (
    calinski_harabasz,
    gap_statistic,
    select_k_argmax,
    select_k_gap,
    silhouette,
)
from .datagen import (
    ARTIFICIAL_K_STAR,
    ArtificialSpec,
    generate_artificial,
    load_csv,
    schema_from_json,
    write_csv,
)
from .errors import InfoGuideError
from .harness import (
    METRICS,
    ExperimentConfig,
    aggregate,
    read_records,
    run_experiment,
    write_summary_csv,
)
from .selection import select_k_infoguide
from . import fixtures

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_PARTIAL = 3


@click.group()
def cli():
    """Cluster-count selection toolkit: generators, selection, experiments."""


@cli.command()
@click.option("--name", default="b", show_default=True, help="Dataset id.")
@click.option("--n-points", default=1000, show_default=True, type=int)
@click.option("--n-features", default=10, show_default=True, type=int)
@click.option("--k-star", default=None, type=int,
              help="Cluster count; defaults by name for "
                   + ",".join(sorted(ARTIFICIAL_K_STAR)) + ".")
@click.option("--separation", default=4.0, show_default=True, type=float)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--output", required=True, type=click.Path(dir_okay=False))
def generate(name, n_points, n_features, k_star, separation, seed, output):
    """Write one labeled artificial dataset as CSV."""
    spec = ArtificialSpec(
        name=name,
        n_points=n_points,
        n_features=n_features,
        k_star=k_star,
        cluster_separation=separation,
        seed=seed,
    )
    dataset = generate_artificial(spec)
    write_csv(dataset, output)
    click.echo(
        f"wrote {dataset.n_points} x {dataset.n_features} dataset "
        f"({dataset.k_star} clusters) to {output}"
    )


def _load_input(input_path, schema_path, fixture_name):
    if fixture_name is not None:
        return fixtures.load_fixture(fixture_name)
    if input_path is None:
        raise click.UsageError("pass --data with --schema, or --fixture")
    if schema_path is None:
        raise click.UsageError("--data needs --schema")
    return load_csv(input_path, schema_from_json(schema_path))


@cli.command()
@click.option("--data", "input_path", type=click.Path(exists=False), default=None,
              help="CSV file to select on.")
@click.option("--schema", "schema_path", type=click.Path(exists=False), default=None,
              help="JSON schema for --data.")
@click.option("--fixture", "fixture_name", default=None,
              type=click.Choice(sorted(fixtures.FIXTURES)),
              help="Bundled table instead of --data.")
@click.option("--algorithm", default="kmeans", show_default=True,
              type=click.Choice(ALGORITHMS))
@click.option("--metric", default="infoguide", show_default=True,
              type=click.Choice(METRICS))
@click.option("--k-min", default=1, show_default=True, type=int)
@click.option("--k-max", default=11, show_default=True, type=int)
@click.option("--alpha", default=0.05, show_default=True, type=float)
@click.option("--gap-references", default=10, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
def select(input_path, schema_path, fixture_name, algorithm, metric,
           k_min, k_max, alpha, gap_references, seed):
    """Select a cluster count for one dataset and print the evidence."""
    dataset, _ = _load_input(input_path, schema_path, fixture_name)
    config = AlgorithmConfig(seed=seed)
    series = fit_series(algorithm, dataset, k_min, k_max, config)

    if metric == "infoguide":
        result = select_k_infoguide(dataset, series, alpha=alpha)
        for report in result.reports:
            click.echo(
                f"k={report.k} vs k+1={report.k_plus_1}: "
                f"threshold={report.threshold:.3e} "
                f"equivalent={report.equivalent}"
            )
        k_hat = result.k_hat
    elif metric in ("silhouette", "calinski_harabasz"):
        index = silhouette if metric == "silhouette" else calinski_harabasz
        scores = []
        for k in range(max(2, k_min), k_max + 1):
            try:
                score = index(dataset, series.partition_for(k))
            except InfoGuideError as exc:
                click.echo(f"k={k}: skipped ({type(exc).__name__})")
                continue
            scores.append(score)
            click.echo(f"k={k}: {metric}={score.value:.6f}")
        k_hat = select_k_argmax(scores)
    else:
        profile = gap_statistic(
            dataset, algorithm, (k_min, k_max),
            reference_count=gap_references,
            config=AlgorithmConfig(seed=seed),
        )
        for point in profile.per_k:
            click.echo(
                f"k={point.k}: gap={point.gap:.6f} s_k={point.s_k:.6f} "
                f"log_ssw={point.log_ssw:.6f}"
            )
        k_hat = select_k_gap(profile)
    click.echo(f"selected k = {k_hat}")


@cli.command()
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=False), help="Experiment JSON config.")
@click.option("--output", default=None, type=click.Path(dir_okay=False),
              help="Override the config's records path.")
@click.option("--fresh", is_flag=True, help="Ignore any existing records file.")
@click.option("--parallelism", default=None, type=int,
              help="Override the config's worker count.")
def run(config_path, output, fresh, parallelism):
    """Run the experiment grid from a JSON config, streaming JSONL records."""
    from dataclasses import replace

    config = ExperimentConfig.from_json(config_path)
    if output is not None:
        config = replace(config, output_path=output)
    if parallelism is not None:
        config = replace(config, parallelism=parallelism)
    records = run_experiment(config, resume=not fresh)
    failures = sum(1 for r in records if r.error is not None)
    click.echo(
        f"{len(records)} records ({failures} errors) -> {config.output_path}"
    )
    if failures:
        return EXIT_PARTIAL
    return EXIT_OK


@cli.command()
@click.option("--records", "records_path", required=True,
              type=click.Path(exists=False), help="JSONL records file.")
@click.option("--output", required=True, type=click.Path(dir_okay=False),
              help="Summary CSV path.")
@click.option("--group-by", default="dataset,algorithm,metric",
              show_default=True, help="Comma-separated grouping fields.")
def report(records_path, output, group_by):
    """Aggregate records into a delimited summary table."""
    records = read_records(records_path)
    fields = tuple(f.strip() for f in group_by.split(",") if f.strip())
    rows = aggregate(records, group_by=fields)
    write_summary_csv(rows, output)
    click.echo(f"{len(rows)} summary rows -> {output}")


def main(argv=None) -> None:
    """Entry point with the documented exit-code mapping."""
    try:
        rv = cli.main(args=argv, standalone_mode=False)
    except click.UsageError as exc:
        exc.show()
        sys.exit(EXIT_USAGE)
    except click.Abort:
        sys.exit(EXIT_USAGE)
    except click.ClickException as exc:
        exc.show()
        sys.exit(EXIT_USAGE)
    except (FileNotFoundError, json.JSONDecodeError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_DATA)
    except (ValueError, KeyError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_DATA)
    except InfoGuideError as exc:
        click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
        sys.exit(EXIT_DATA)
    sys.exit(rv if isinstance(rv, int) else EXIT_OK)


if __name__ == "__main__":
    main()
