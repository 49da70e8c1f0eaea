from __future__ import annotations

from functools import cached_property
from pathlib import Path
from typing import Any

from app.dynamics.bowen import bowen_root, quadratic_family_sweep
from app.dynamics.julia import Generator, JuliaSample, boundary_scan_sample, inverse_iteration_sample
from app.dynamics.periodic import FilterParams, PeriodicCatalog, SearchOptions, classify
from app.dynamics.pressure import (
    PullbackSeparatedSets,
    SeparatedPool,
    SeparatedSetBuilder,
    p_p_c_limit,
    separated_series,
)
from app.middlewares import build_command_stack
from app.models.Reports import CompareRow, PressureEstimate, SeparatedSeriesPoint
from app.models.RequestsCommands import CommandRequest
from app.models.RunConfig import RunConfig
from app.repositories.periodic_cache_repository import PeriodicCacheRepository, SampleCacheRepository
from app.shared.artifacts import read_csv, write_csv, write_json
from app.shared.config import Settings, get_settings
from app.shared.config_loader import apply_overrides, load_config
from app.shared.exceptions import ConfigError
from app.shared.LoggerSingleton import logger

POINT_COLUMNS = (
    "n",
    "index",
    "re",
    "im",
    "primitive_period",
    "mult_re",
    "mult_im",
    "abs_multiplier",
    "kind",
    "residual",
)
PP_COLUMNS = ("n", "count_filtered", "count_total", "log_qp", "value_n", "fallback_used")
SEP_COLUMNS = ("epsilon", "n", "count", "log_z", "value_n", "increment", "saturated", "lower_bound", "thinning")
SWEEP_COLUMNS = ("c", "t_star", "residual", "n_used")
COMPARE_COLUMNS = ("n", "value_pp", "value_sep", "increment_sep", "gap", "difference_to_estimate", "lemma_ha_ok")


class PipelineService:
    """
    Runs the pipeline subcommands against one validated RunConfig.

    Both caches are injected like the repository of a service layer; by default they live under the
    settings cache directory, or are skipped when caching is disabled. Each command returns the
    paths it wrote.
    """

    def __init__(
        self,
        config: RunConfig,
        settings: Settings | None = None,
        periodic_store: PeriodicCacheRepository | None = None,
        sample_store: SampleCacheRepository | None = None,
    ) -> None:
        self.config = config
        self._settings = settings or get_settings()
        self.rmap = config.map
        self.phi = config.potential.potential
        self.out = config.output.directory
        if self._settings.cache_enabled:
            periodic_store = periodic_store or PeriodicCacheRepository(self._settings.periodic_cache_dir)
            sample_store = sample_store or SampleCacheRepository(self._settings.sample_cache_dir)
        self._periodic_store = periodic_store
        self._sample_store = sample_store
        self._pullback_sets: dict[float, PullbackSeparatedSets] = {}

    # ------------------------------------------------------------------
    # Shared state
    # ------------------------------------------------------------------

    @cached_property
    def options(self) -> SearchOptions:
        return SearchOptions.from_settings(self._settings)

    @cached_property
    def sample(self) -> JuliaSample:
        spec = self.config.sample
        if self._sample_store is not None:
            cached = self._sample_store.load(self.rmap, spec.generator, spec.seed, spec.count, spec.depth)
            if cached is not None:
                return cached
        if spec.generator == Generator.boundary_scan:
            sample = boundary_scan_sample(self.rmap, spec.count, spec.seed, max_iter=spec.depth)
        else:
            sample = inverse_iteration_sample(
                self.rmap,
                spec.count,
                spec.depth,
                spec.seed,
                chains=self._settings.sample_chains,
                escape_check_iterations=self._settings.escape_check_iterations,
            )
        if self._sample_store is not None:
            self._sample_store.save(self.rmap, sample)
        return sample

    @cached_property
    def catalog(self) -> PeriodicCatalog:
        return PeriodicCatalog(self.rmap, self.sample, self.options, self._periodic_store)

    @cached_property
    def builder(self) -> SeparatedSetBuilder:
        return SeparatedSetBuilder(self.rmap, self.sample, self.config.metric)

    @property
    def _formats(self) -> list[str]:
        return self.config.output.formats

    def _csv(self, name: str, columns: tuple[str, ...], rows: list[dict[str, Any]]) -> list[Path]:
        if "csv" not in self._formats:
            return []
        return [write_csv(self.out / name, columns, rows)]

    def _json(self, name: str, payload: Any) -> list[Path]:
        if "json" not in self._formats:
            return []
        return [write_json(self.out / name, payload)]

    def _header(self) -> dict[str, Any]:
        run = self.config.run
        return {
            "map": {
                **self.rmap.to_coefficient_pairs(),
                "fingerprint": self.rmap.fingerprint,
                "degree": self.rmap.degree,
                "polynomial": self.rmap.is_polynomial,
            },
            "potential": str(self.phi),
            "alpha": run.alpha,
            "c_schedule": run.c_schedule,
            "n_range": list(run.n_range),
            "metric": self.config.metric,
            "sample": self.config.sample,
        }

    # ------------------------------------------------------------------
    # Estimates
    # ------------------------------------------------------------------

    def _periodic_estimate(self) -> PressureEstimate:
        run = self.config.run
        return p_p_c_limit(
            self.rmap,
            self.phi,
            run.alpha,
            run.c_schedule,
            run.ns,
            self.sample,
            self.catalog,
            window=run.window,
            stabilization_tolerance=self._settings.stabilization_tolerance,
            monotonicity_tolerance=self._settings.monotonicity_tolerance,
        )

    def pullback_sets(self, epsilon: float) -> PullbackSeparatedSets:
        if epsilon not in self._pullback_sets:
            self._pullback_sets[epsilon] = PullbackSeparatedSets(
                self.rmap,
                self.sample,
                epsilon,
                max_points=self._settings.separated_max_points,
                builder=self.builder,
            )
        return self._pullback_sets[epsilon]

    def _separated_estimate(self, epsilon: float) -> PressureEstimate:
        run = self.config.run
        pullback = run.separated_pool == SeparatedPool.pullback
        return separated_series(
            self.rmap,
            self.phi,
            self.sample,
            run.ns,
            epsilon,
            self.builder,
            pool=run.separated_pool,
            sets=self.pullback_sets(epsilon) if pullback else None,
            saturation_ratio=self._settings.separated_saturation_ratio,
            density_quantile=self._settings.separated_density_quantile,
            convergence_tolerance=self._settings.separated_convergence_tolerance,
            window=run.window,
        )

    # ------------------------------------------------------------------
    # Commands
    # ------------------------------------------------------------------

    def periodic_points(self) -> list[Path]:
        margin = self.options.classification_margin
        rows: list[dict[str, Any]] = []
        reports = []
        for n in self.config.run.ns:
            points, report = self.catalog.get(n)
            reports.append(report)
            for index, p in enumerate(points):
                rows.append(
                    {
                        "n": n,
                        "index": index,
                        "re": p.z.real,
                        "im": p.z.imag,
                        "primitive_period": p.primitive_period,
                        "mult_re": p.multiplier.real,
                        "mult_im": p.multiplier.imag,
                        "abs_multiplier": p.abs_multiplier,
                        "kind": classify(p, margin).value,
                        "residual": p.residual,
                    }
                )
        payload = {**self._header(), "reports": reports, "complete": all(r.complete for r in reports)}
        return self._csv("periodic_points.csv", POINT_COLUMNS, rows) + self._json("enumeration.json", payload)

    def pressure_pp(self) -> list[Path]:
        estimate = self._periodic_estimate()
        rows = [point.model_dump() for point in estimate.series]
        payload = {**self._header(), "estimate": estimate}
        return self._csv("pressure_pp.csv", PP_COLUMNS, rows) + self._json("pressure_pp.json", payload)

    def pressure_sep(self) -> list[Path]:
        estimates = [self._separated_estimate(eps) for eps in self.config.run.epsilon_schedule]
        rows = [point.model_dump() for estimate in estimates for point in estimate.series]
        payload = {
            **self._header(),
            "epsilon_schedule": self.config.run.epsilon_schedule,
            "separated_pool": self.config.run.separated_pool.value,
            "estimates": estimates,
        }
        return self._csv("pressure_sep.csv", SEP_COLUMNS, rows) + self._json("pressure_sep.json", payload)

    def bowen(self) -> list[Path]:
        run = self.config.run
        params = FilterParams(alpha=run.alpha, c=run.c_schedule[-1])
        epsilon = min(run.epsilon_schedule)
        pullback = run.cross_check and run.separated_pool == SeparatedPool.pullback
        result = bowen_root(
            self.rmap,
            params,
            run.ns,
            self.sample,
            run.bracket,
            run.tol,
            self.catalog,
            cross_check=run.cross_check,
            epsilon=epsilon,
            builder=self.builder if run.cross_check else None,
            pool=run.separated_pool,
            sets=self.pullback_sets(epsilon) if pullback else None,
        )
        payload: dict[str, Any] = {**self._header(), "c": params.c, "result": result}
        written: list[Path] = []
        if run.family_c:
            sample = self.config.sample
            sweep = quadratic_family_sweep(
                run.family_c,
                params,
                run.ns,
                bracket=run.bracket,
                tol=run.tol,
                sample_count=sample.count,
                sample_depth=sample.depth,
                seed=sample.seed,
                options=self.options,
                store=self._periodic_store,
            )
            payload["sweep"] = sweep
            written += self._append_sweep([row.model_dump() for row in sweep.rows])
        return self._json("bowen.json", payload) + written

    def _append_sweep(self, rows: list[dict[str, Any]]) -> list[Path]:
        """The sweep CSV accumulates rows across runs; existing rows are kept in front."""
        if "csv" not in self._formats:
            return []
        path = self.out / "bowen_sweep.csv"
        existing: list[dict[str, Any]] = read_csv(path) if path.exists() else []
        return [write_csv(path, SWEEP_COLUMNS, existing + rows)]

    def compare(self) -> list[Path]:
        run = self.config.run
        periodic = self._periodic_estimate()
        epsilon = min(run.epsilon_schedule)
        separated = self._separated_estimate(epsilon)
        rows = compare_rows(periodic, separated, self._settings.lemma_ha_slack)
        violations = [row.n for row in rows if not row.lemma_ha_ok]
        if violations:
            logger.warning("lemma_ha_violated", ns=violations, epsilon=epsilon)
        converged = bool(separated.diagnostics.converged)
        difference = periodic.value - separated.value if converged else None
        agreement_ok = difference is not None and abs(difference) <= self._settings.agreement_tolerance
        if difference is not None and not agreement_ok:
            logger.warning(
                "pressure_methods_disagree",
                difference=difference,
                tolerance=self._settings.agreement_tolerance,
                epsilon=epsilon,
            )
        payload = {
            **self._header(),
            "epsilon": epsilon,
            "periodic_point": periodic,
            "separated_set": separated,
            "separated_converged": converged,
            "difference": difference,
            "agreement_ok": agreement_ok,
            "rows": rows,
        }
        csv_rows = [row.model_dump() for row in rows]
        return self._csv("compare.csv", COMPARE_COLUMNS, csv_rows) + self._json("compare.json", payload)

    def run(self, command: str) -> list[Path]:
        handler = getattr(self, COMMANDS[command])
        written: list[Path] = handler()
        logger.info("artifacts_written", command=command, files=[p.name for p in written])
        return written


def compare_rows(periodic: PressureEstimate, separated: PressureEstimate, slack: float) -> list[CompareRow]:
    """Pair the two series by n; lemma_ha_ok is value_pp <= value_sep + slack at the same n."""
    by_n: dict[int, SeparatedSeriesPoint] = {
        point.n: point for point in separated.series if isinstance(point, SeparatedSeriesPoint)
    }
    rows: list[CompareRow] = []
    for point in periodic.series:
        sep = by_n.get(point.n)
        if sep is None:
            continue
        gap = point.value_n - sep.value_n
        rows.append(
            CompareRow(
                n=point.n,
                value_pp=point.value_n,
                value_sep=sep.value_n,
                increment_sep=sep.increment,
                gap=gap,
                difference_to_estimate=point.value_n - separated.value,
                lemma_ha_ok=gap <= slack,
            )
        )
    return rows


COMMANDS: dict[str, str] = {
    "periodic-points": "periodic_points",
    "pressure-pp": "pressure_pp",
    "pressure-sep": "pressure_sep",
    "bowen": "bowen",
    "compare": "compare",
}


def _settings_for(request: CommandRequest, settings: Settings | None) -> Settings:
    settings = settings or get_settings()
    if request.threads is None:
        return settings
    if request.threads < 1:
        raise ConfigError("--threads must be at least 1")
    return settings.model_copy(update={"threads": request.threads})


def execute(request: CommandRequest, settings: Settings | None = None) -> int:
    """Load the run configuration named by the request, apply its overrides and run the command."""
    if request.command not in COMMANDS:
        raise ConfigError(f"unknown command {request.command!r}")
    if request.config_path is None:
        raise ConfigError("no run configuration given; pass --config PATH")
    config = apply_overrides(load_config(request.config_path), **request.overrides())
    request.out = config.output.directory
    PipelineService(config, _settings_for(request, settings)).run(request.command)
    return 0


def run_pipeline(config: RunConfig, command: str, settings: Settings | None = None) -> int:
    """Run one command on an already validated config; returns the exit status."""
    request = CommandRequest(command=command, out=config.output.directory)

    def handler(req: CommandRequest) -> int:
        if req.command not in COMMANDS:
            raise ConfigError(f"unknown command {req.command!r}")
        PipelineService(config, settings).run(req.command)
        return 0

    return build_command_stack(handler)(request)
