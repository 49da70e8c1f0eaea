from __future__ import annotations

import typer

from app.commands import dispatch


def pressure_pp(ctx: typer.Context) -> None:
    """Periodic-point pressure series with the c-limit; writes pressure_pp.csv and pressure_pp.json."""
    dispatch(ctx, "pressure-pp")


def pressure_sep(ctx: typer.Context) -> None:
    """Separated-set pressure series for each epsilon of the schedule."""
    dispatch(ctx, "pressure-sep")


def compare(ctx: typer.Context) -> None:
    """Both estimators side by side with their difference and the separated-set upper-bound check."""
    dispatch(ctx, "compare")


def register(app: typer.Typer) -> None:
    app.command("pressure-pp")(pressure_pp)
    app.command("pressure-sep")(pressure_sep)
    app.command("compare")(compare)
