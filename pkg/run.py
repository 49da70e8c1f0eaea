from app.main import cli


def main() -> None:
    """
    Run the julia-pressure command line, same as the installed `julia-pressure` script.

    Environment variables (optional):
      - JULIA_PRESSURE_CACHE_DIR: periodic-point and sample cache directory
      - JULIA_PRESSURE_THREADS: default worker threads for the Newton search
      - LOG_LEVEL / LOG_DIR / LOG_TO_FILE: logging setup
      - METRICS_TEXTFILE: write Prometheus metrics to this file after each command
    """
    cli()


if __name__ == "__main__":
    main()
