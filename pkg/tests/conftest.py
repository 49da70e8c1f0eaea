import os
import sys
from collections.abc import Generator
from pathlib import Path

# Console logging only; must be set before the logger singleton is imported
os.environ.setdefault("LOG_TO_FILE", "false")

import pytest
from hypothesis import HealthCheck, settings

# Ensure project root is on sys.path for package imports
PROJECT_ROOT = Path(__file__).resolve().parents[1]
if str(PROJECT_ROOT) not in sys.path:
    sys.path.insert(0, str(PROJECT_ROOT))


from app.dynamics.julia import JuliaSample, inverse_iteration_sample
from app.dynamics.periodic import PeriodicCatalog
from app.dynamics.rational_map import RationalMap
from app.shared.config import get_settings

# The autouse settings fixture is function-scoped; it resets state hypothesis examples do not touch
settings.register_profile("julia-pressure", suppress_health_check=[HealthCheck.function_scoped_fixture], deadline=None)
settings.load_profile("julia-pressure")

Z2_CONFIG = """\
[map]
numerator = [0, 0, 1]
denominator = [1]

[potential]
expression = "const(0.0)"

[run]
alpha = 0.5
c_schedule = [1.0, 0.5]
n_range = [1, 12]
epsilon_schedule = [0.05]
window = 4

[sample]
count = 4000
depth = 32
seed = 0
"""


@pytest.fixture(autouse=True)
def isolated_settings(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> Generator[Path, None, None]:
    # Each test gets its own cache directory; settings are re-read from the environment
    cache_dir = tmp_path / "cache"
    monkeypatch.setenv("JULIA_PRESSURE_CACHE_DIR", str(cache_dir))
    monkeypatch.setenv("LOG_TO_FILE", "false")
    monkeypatch.delenv("METRICS_TEXTFILE", raising=False)
    get_settings.cache_clear()
    yield cache_dir
    get_settings.cache_clear()


@pytest.fixture(scope="session")
def z2() -> RationalMap:
    return RationalMap.quadratic(0)


@pytest.fixture(scope="session")
def z2_minus_1() -> RationalMap:
    return RationalMap.quadratic(-1)


@pytest.fixture(scope="session")
def z3() -> RationalMap:
    return RationalMap.polynomial(0, 0, 0, 1)


@pytest.fixture(scope="session")
def z2_sample(z2: RationalMap) -> JuliaSample:
    return inverse_iteration_sample(z2, 4000, 32, seed=0)


@pytest.fixture(scope="session")
def z2_large_sample(z2: RationalMap) -> JuliaSample:
    return inverse_iteration_sample(z2, 20_000, 64, seed=0)


@pytest.fixture(scope="session")
def z2m1_sample(z2_minus_1: RationalMap) -> JuliaSample:
    return inverse_iteration_sample(z2_minus_1, 4000, 32, seed=0)


@pytest.fixture(scope="session")
def z3_sample(z3: RationalMap) -> JuliaSample:
    return inverse_iteration_sample(z3, 3000, 32, seed=0)


# Session-scoped catalogs share enumerations across modules (expensive for n >= 10)
@pytest.fixture(scope="session")
def z2_catalog(z2: RationalMap, z2_sample: JuliaSample) -> PeriodicCatalog:
    return PeriodicCatalog(z2, z2_sample)


@pytest.fixture(scope="session")
def z2m1_catalog(z2_minus_1: RationalMap, z2m1_sample: JuliaSample) -> PeriodicCatalog:
    return PeriodicCatalog(z2_minus_1, z2m1_sample)


@pytest.fixture(scope="session")
def z3_catalog(z3: RationalMap, z3_sample: JuliaSample) -> PeriodicCatalog:
    return PeriodicCatalog(z3, z3_sample)


@pytest.fixture()
def z2_config_file(tmp_path: Path) -> Path:
    path = tmp_path / "z2.toml"
    path.write_text(Z2_CONFIG, encoding="utf-8")
    return path


@pytest.fixture(scope="session")
def z2m1_large_sample(z2_minus_1: RationalMap) -> JuliaSample:
    return inverse_iteration_sample(z2_minus_1, 20_000, 64, seed=0)
