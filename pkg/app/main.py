from __future__ import annotations

from pathlib import Path

import typer

from app.commands import bowen, periodic, pressure
from app.shared.config import get_settings

settings = get_settings()

app = typer.Typer(
    name=settings.app_name,
    help="Periodic-point and separated-set pressure of rational maps, and Bowen roots.",
    no_args_is_help=True,
    add_completion=False,
    pretty_exceptions_enable=settings.debug,
)


@app.callback()
def main(
    ctx: typer.Context,
    config: Path | None = typer.Option(None, "--config", help="TOML run configuration."),
    out: Path | None = typer.Option(None, "--out", help="Artifact directory; overrides [output].directory."),
    n_max: int | None = typer.Option(None, "--n-max", help="Largest period n; overrides run.n_range."),
    alpha: float | None = typer.Option(None, "--alpha", help="Expansion rate of the (alpha, c) filter."),
    c_schedule: str | None = typer.Option(None, "--c-schedule", help="Descending comma-separated c values."),
    seed: int | None = typer.Option(None, "--seed", help="Julia sample seed."),
    threads: int | None = typer.Option(None, "--threads", help="Worker threads for the Newton search."),
    formats: str | None = typer.Option(None, "--format", help="Comma-separated subset of csv,json."),
) -> None:
    ctx.obj = {
        "config_path": config,
        "out": out,
        "n_max": n_max,
        "alpha": alpha,
        "c_schedule": c_schedule,
        "seed": seed,
        "threads": threads,
        "formats": formats,
    }


# Subcommands
periodic.register(app)
pressure.register(app)
bowen.register(app)


def cli() -> None:
    app()
