from __future__ import annotations

import typer

from app.commands import dispatch


def bowen(
    ctx: typer.Context,
    family_c: str | None = typer.Option(
        None,
        "--family-c",
        help="Comma-separated real parameters c; also sweeps z^2 + c and appends to bowen_sweep.csv.",
    ),
) -> None:
    """Solve P(-t log|f'|) = 0 for t by bisection; writes bowen.json."""
    dispatch(ctx, "bowen", family_c=family_c)


def register(app: typer.Typer) -> None:
    app.command("bowen")(bowen)
