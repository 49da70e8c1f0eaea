from __future__ import annotations

from enum import Enum
from functools import lru_cache
from pathlib import Path

from dotenv import load_dotenv
from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Environment(str, Enum):
    develop = "develop"
    staging = "staging"
    qa = "qa"
    prod = "prod"


def _resolve_env_file(env: str | Environment | None) -> str | None:
    # Priority: explicit APP_ENV/ENVIRONMENT-specific file -> generic .env
    # e.g., .env.develop, .env.staging, .env.qa, .env.prod
    env_name = str(getattr(env, "value", env) or "").strip().lower()
    if env_name in {e.value for e in Environment}:
        candidate = Path(".env." + env_name)
        if candidate.exists():
            return str(candidate)
    # fallback to root .env if it exists
    if Path(".env").exists():
        return ".env"
    return None


class Settings(BaseSettings):
    # Core app settings
    environment: Environment = Field(default=Environment.develop, alias="APP_ENV")
    debug: bool = False
    app_name: str = "julia-pressure"

    # Persistence: periodic-point and sample caches
    cache_dir: Path = Field(default=Path(".cache") / "julia-pressure", alias="JULIA_PRESSURE_CACHE_DIR")
    cache_enabled: bool = Field(default=True, alias="JULIA_PRESSURE_CACHE_ENABLED")

    # Logging
    log_dir: Path = Field(default=Path("logs"), alias="LOG_DIR")
    log_level: str = Field(default="INFO", alias="LOG_LEVEL")
    log_to_file: bool = Field(default=True, alias="LOG_TO_FILE")

    # Prometheus textfile export; disabled when unset
    metrics_textfile: Path | None = Field(default=None, alias="METRICS_TEXTFILE")

    # Parallelism for Newton chunks (results never depend on it)
    threads: int = Field(default=1, ge=1, alias="JULIA_PRESSURE_THREADS")
    newton_chunk_size: int = Field(default=4096, ge=1)

    # Artifact directory when neither --out nor [output] directory is given
    output_dir: Path = Field(default=Path("out"), alias="JULIA_PRESSURE_OUTPUT_DIR")

    # Map defaults for configs whose [map] section leaves them out
    pole_tolerance: float = 1e-12
    sphere_handling: bool = False

    # Periodic-point search
    newton_max_iterations: int = 200
    newton_max_halvings: int = 30
    newton_tolerance: float = 1e-10
    dedup_tolerance: float = 1e-8
    period_tolerance: float = 1e-7
    classification_margin: float = 1e-6
    # d**n_max stays within this budget; 2**14 gives n_max = 14 for quadratics
    max_periodic_points: int = 2**14

    # Potentials
    potential_max_depth: int = 32

    # Julia samples
    sample_count: int = 20_000
    sample_depth: int = 64
    sample_seed: int = 0
    sample_chains: int = 16
    escape_check_iterations: int = 20

    # Pressure
    default_alpha: float = 0.2
    pressure_window: int = 4
    stabilization_tolerance: float = 1e-4
    monotonicity_tolerance: float = 1e-9
    separated_saturation_ratio: float = 1 / 16
    separated_density_quantile: float = 0.95
    separated_max_points: int = Field(default=2**20, ge=1)
    separated_convergence_tolerance: float = 0.01
    # compare: |P_P - P_sep| bound and the slack of value_pp <= value_sep at each n
    agreement_tolerance: float = 0.05
    lemma_ha_slack: float = 0.1

    model_config = SettingsConfigDict(
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
        populate_by_name=True,
    )

    @property
    def periodic_cache_dir(self) -> Path:
        return self.cache_dir / "periodic"

    @property
    def sample_cache_dir(self) -> Path:
        return self.cache_dir / "samples"


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    # Create a temporary settings to resolve env file, then instantiate again so env_file takes effect
    temp = Settings()
    env_file = _resolve_env_file(temp.environment)
    if env_file:
        # Preload environment for non-pydantic consumers as well
        load_dotenv(dotenv_path=env_file, override=False, encoding="utf-8")
        return Settings(_env_file=env_file)  # type: ignore[call-arg]
    return temp
