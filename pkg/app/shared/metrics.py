from __future__ import annotations

from pathlib import Path

from prometheus_client import REGISTRY, Counter, Histogram, write_to_textfile

# Command metrics (one observation per CLI invocation)
command_runs_total = Counter(
    "command_runs_total",
    "Total CLI command runs",
    labelnames=("command", "status"),  # status: exit code as string
)

command_duration_seconds = Histogram(
    "command_duration_seconds",
    "CLI command duration in seconds",
    labelnames=("command",),
    buckets=(
        0.1,
        0.5,
        1.0,
        2.5,
        5.0,
        10.0,
        30.0,
        60.0,
        300.0,
    ),
)

# Periodic-point search

newton_seeds_total = Counter(
    "newton_seeds_total",
    "Newton seeds processed by the periodic-point search",
    labelnames=("result",),  # converged|stalled|diverged
)

periodic_cache_lookups_total = Counter(
    "periodic_cache_lookups_total",
    "Periodic-point cache lookups",
    labelnames=("result",),  # hit|miss|stale
)

# Pressure evaluations

pressure_evaluations_total = Counter(
    "pressure_evaluations_total",
    "Finite-n pressure evaluations",
    labelnames=("method",),  # periodic-point|separated-set
)


def export_textfile(path: Path) -> None:
    """Write the default registry in the Prometheus text format (node-exporter textfile collector)."""
    path.parent.mkdir(parents=True, exist_ok=True)
    write_to_textfile(str(path), REGISTRY)
