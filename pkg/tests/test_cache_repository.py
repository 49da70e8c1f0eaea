from __future__ import annotations

import json

import pytest
from prometheus_client import REGISTRY

from app.dynamics.julia import Generator
from app.dynamics.periodic import PeriodicCatalog
from app.repositories.periodic_cache_repository import (
    PeriodicCacheRepository,
    SampleCacheRepository,
    cache_roundtrip,
)
from app.shared.exceptions import CacheError, StaleCacheError


@pytest.fixture()
def repository(tmp_path):
    return PeriodicCacheRepository(tmp_path / "periodic")


def _hits() -> float:
    return REGISTRY.get_sample_value("periodic_cache_lookups_total", {"result": "hit"}) or 0.0


def test_roundtrip_is_exact(z2, z2_catalog, tmp_path):
    points, report = z2_catalog.get(4)
    record = PeriodicCacheRepository.to_record(z2, 4, points, report)
    restored = cache_roundtrip(record, tmp_path)
    assert restored == record
    assert PeriodicCacheRepository.from_record(restored) == points


def test_writes_new_versions(z2, z2_catalog, repository):
    points, report = z2_catalog.get(2)
    first = repository.write(PeriodicCacheRepository.to_record(z2, 2, points, report))
    second = repository.write(PeriodicCacheRepository.to_record(z2, 2, points, report))
    assert first.name.endswith(".v1.ndjson")
    assert second.name.endswith(".v2.ndjson")
    assert first.read_text(encoding="utf-8") == second.read_text(encoding="utf-8")


def test_load_after_save(z2, z2_catalog, repository):
    points, report = z2_catalog.get(3)
    assert repository.load(z2, 3) is None
    repository.save(z2, 3, points, report)
    before = _hits()
    loaded = repository.load(z2, 3)
    assert loaded == (points, report)
    assert _hits() == before + 1


def test_fingerprint_mismatch_is_stale(z2, z2_minus_1, z2_catalog, repository):
    points, report = z2_catalog.get(2)
    path = repository.write(PeriodicCacheRepository.to_record(z2, 2, points, report))
    with pytest.raises(StaleCacheError):
        repository.read(path, z2_minus_1.fingerprint)
    assert repository.load(z2_minus_1, 2) is None


def test_truncated_line_is_skipped(z2, z2_catalog, repository):
    points, report = z2_catalog.get(3)
    path = repository.write(PeriodicCacheRepository.to_record(z2, 3, points, report))
    with path.open("a", encoding="utf-8") as handle:
        handle.write("[0.5, 0.25, 1\n")
    record, skipped = repository.read(path, z2.fingerprint)
    assert skipped == 1
    assert len(record.entries) == len(points)
    # damaged records are rebuilt instead of trusted
    assert repository.load(z2, 3) is None


def test_damaged_header_is_a_miss(z2, z2_catalog, repository):
    points, report = z2_catalog.get(2)
    path = repository.write(PeriodicCacheRepository.to_record(z2, 2, points, report))
    lines = path.read_text(encoding="utf-8").splitlines()
    path.write_text("\n".join(["{not json", *lines[1:]]) + "\n", encoding="utf-8")
    with pytest.raises(CacheError):
        repository.read(path)
    assert repository.load(z2, 2) is None


def test_unsupported_version(z2, z2_catalog, repository):
    points, report = z2_catalog.get(1)
    path = repository.write(PeriodicCacheRepository.to_record(z2, 1, points, report))
    lines = path.read_text(encoding="utf-8").splitlines()
    header = json.loads(lines[0])
    header["version"] = 99
    path.write_text("\n".join([json.dumps(header), *lines[1:]]) + "\n", encoding="utf-8")
    with pytest.raises(CacheError):
        repository.read(path)


def test_catalog_reuses_stored_enumerations(z2, z2_sample, repository):
    first = PeriodicCatalog(z2, z2_sample, store=repository)
    points = first.points(4)
    stored = sorted(p.name for p in repository.directory.iterdir())
    assert len(stored) == 3  # n = 1, 2, 4
    before = _hits()
    second = PeriodicCatalog(z2, z2_sample, store=repository)
    assert second.points(4) == points
    assert _hits() == before + 1
    assert sorted(p.name for p in repository.directory.iterdir()) == stored


def test_sample_cache(z2, z2_sample, tmp_path):
    store = SampleCacheRepository(tmp_path / "samples")
    spec = (z2_sample.generator, z2_sample.seed, z2_sample.count, z2_sample.depth)
    assert store.load(z2, *spec) is None
    store.save(z2, z2_sample)
    loaded = store.load(z2, *spec)
    assert loaded is not None
    assert loaded.points == z2_sample.points
    assert store.load(z2, Generator.boundary_scan, *spec[1:]) is None
    assert store.load(z2, spec[0], spec[1] + 1, *spec[2:]) is None
