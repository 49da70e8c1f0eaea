from __future__ import annotations

import typer

from app.commands import dispatch


def periodic_points(ctx: typer.Context) -> None:
    """Enumerate the periodic points of every n in the range; writes periodic_points.csv and enumeration.json."""
    dispatch(ctx, "periodic-points")


def register(app: typer.Typer) -> None:
    app.command("periodic-points")(periodic_points)
