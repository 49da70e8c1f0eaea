from __future__ import annotations

import json
import re
from pathlib import Path
from typing import Any

from app.dynamics.julia import Generator, JuliaSample
from app.dynamics.periodic import PeriodicPoint
from app.dynamics.rational_map import RationalMap
from app.models.Reports import CacheEntry, CacheRecord, EnumerationReport
from app.shared.exceptions import CacheError, StaleCacheError
from app.shared.LoggerSingleton import logger
from app.shared.metrics import periodic_cache_lookups_total

CACHE_FORMAT = "periodic-cache"
SAMPLE_FORMAT = "julia-sample"
CACHE_VERSION = 1
_VERSIONED = re.compile(r"\.v(\d+)\.ndjson$")


def _number(value: float) -> str:
    # 17 significant digits reproduce every double exactly
    return f"{value:.17g}"


def _line(values: list[float]) -> str:
    return "[" + ",".join(_number(v) for v in values) + "]\n"


def _next_version(directory: Path, stem: str) -> Path:
    existing = [int(m.group(1)) for p in directory.glob(f"{stem}.v*.ndjson") if (m := _VERSIONED.search(p.name))]
    return directory / f"{stem}.v{max(existing, default=0) + 1}.ndjson"


def _latest_version(directory: Path, stem: str) -> Path | None:
    versions = [(int(m.group(1)), p) for p in directory.glob(f"{stem}.v*.ndjson") if (m := _VERSIONED.search(p.name))]
    return max(versions)[1] if versions else None


def _read_lines(path: Path) -> tuple[dict[str, Any], list[list[float]], int]:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise CacheError(f"cannot read cache file {path.name}", error=exc.strerror) from exc
    lines = text.splitlines()
    if not lines:
        raise CacheError("empty cache file", path=path.name)
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise CacheError("corrupted cache header", path=path.name) from exc
    rows: list[list[float]] = []
    skipped = 0
    for raw in lines[1:]:
        if not raw.strip():
            continue
        try:
            row = json.loads(raw)
            if not isinstance(row, list) or not all(isinstance(v, int | float) for v in row):
                raise ValueError("not a numeric row")
            rows.append([float(v) for v in row])
        except ValueError:
            skipped += 1
    return header, rows, skipped


class PeriodicCacheRepository:
    """Newline-delimited cache of periodic-point enumerations keyed by (map fingerprint, n).

    Each write creates a new versioned file; existing files are never rewritten. The first line is
    a JSON header, every further line one entry [re, im, mult_re, mult_im, primitive_period, residual].
    """

    def __init__(self, directory: Path) -> None:
        self.directory = directory

    def _stem(self, fingerprint: str, n: int) -> str:
        return f"{fingerprint}-n{n:02d}"

    def write(self, record: CacheRecord) -> Path:
        self.directory.mkdir(parents=True, exist_ok=True)
        path = _next_version(self.directory, self._stem(record.fingerprint, record.n))
        header = {
            "format": CACHE_FORMAT,
            "version": record.version,
            "fingerprint": record.fingerprint,
            "n": record.n,
            "report": record.report.model_dump(mode="json"),
        }
        with path.open("x", encoding="utf-8") as handle:
            handle.write(json.dumps(header, sort_keys=True) + "\n")
            for entry in record.entries:
                handle.write(
                    _line([entry.re, entry.im, entry.mult_re, entry.mult_im, entry.primitive_period, entry.residual])
                )
        logger.debug("periodic_cache_written", path=str(path), entries=len(record.entries))
        return path

    def read(self, path: Path, fingerprint: str | None = None) -> tuple[CacheRecord, int]:
        """Read a record; returns it with the number of corrupted lines skipped."""
        header, rows, skipped = _read_lines(path)
        if header.get("format") != CACHE_FORMAT or header.get("version") != CACHE_VERSION:
            raise CacheError("unsupported cache format", path=path.name, version=header.get("version"))
        if fingerprint is not None and header.get("fingerprint") != fingerprint:
            raise StaleCacheError("cache fingerprint does not match the map", path=path.name)
        entries: list[CacheEntry] = []
        for row in rows:
            if len(row) != 6:
                skipped += 1
                continue
            re_, im, mult_re, mult_im, period, residual = row
            entries.append(
                CacheEntry(
                    re=re_,
                    im=im,
                    mult_re=mult_re,
                    mult_im=mult_im,
                    primitive_period=int(period),
                    residual=residual,
                )
            )
        if skipped:
            logger.warning("periodic_cache_lines_skipped", path=path.name, count=skipped)
        record = CacheRecord(
            fingerprint=header["fingerprint"],
            n=int(header["n"]),
            entries=tuple(entries),
            report=EnumerationReport.model_validate(header["report"]),
            version=int(header["version"]),
        )
        return record, skipped

    @staticmethod
    def to_record(rmap: RationalMap, n: int, points: list[PeriodicPoint], report: EnumerationReport) -> CacheRecord:
        return CacheRecord(
            fingerprint=rmap.fingerprint,
            n=n,
            entries=tuple(
                CacheEntry(
                    re=p.z.real,
                    im=p.z.imag,
                    mult_re=p.multiplier.real,
                    mult_im=p.multiplier.imag,
                    primitive_period=p.primitive_period,
                    residual=p.residual,
                )
                for p in points
            ),
            report=report,
        )

    @staticmethod
    def from_record(record: CacheRecord) -> list[PeriodicPoint]:
        return [
            PeriodicPoint(
                z=entry.z,
                n=record.n,
                primitive_period=entry.primitive_period,
                multiplier=entry.multiplier,
                residual=entry.residual,
            )
            for entry in record.entries
        ]

    # PeriodicStore protocol

    def load(self, rmap: RationalMap, n: int) -> tuple[list[PeriodicPoint], EnumerationReport] | None:
        if not self.directory.exists():
            periodic_cache_lookups_total.labels(result="miss").inc()
            return None
        path = _latest_version(self.directory, self._stem(rmap.fingerprint, n))
        if path is None:
            periodic_cache_lookups_total.labels(result="miss").inc()
            return None
        try:
            record, skipped = self.read(path, rmap.fingerprint)
        except StaleCacheError:
            periodic_cache_lookups_total.labels(result="stale").inc()
            logger.warning("periodic_cache_stale", path=path.name)
            return None
        except CacheError as exc:
            periodic_cache_lookups_total.labels(result="miss").inc()
            logger.warning("periodic_cache_unreadable", path=path.name, error=exc.message)
            return None
        if skipped or len(record.entries) != record.report.found:
            # a damaged record is rebuilt rather than trusted
            periodic_cache_lookups_total.labels(result="miss").inc()
            return None
        periodic_cache_lookups_total.labels(result="hit").inc()
        logger.info("periodic_cache_hit", n=n, entries=len(record.entries))
        return self.from_record(record), record.report

    def save(self, rmap: RationalMap, n: int, points: list[PeriodicPoint], report: EnumerationReport) -> None:
        self.write(self.to_record(rmap, n, points, report))


class SampleCacheRepository:
    """Julia samples in the same newline-delimited layout, one [re, im] per line."""

    def __init__(self, directory: Path) -> None:
        self.directory = directory

    def _stem(self, rmap: RationalMap, generator: Generator, seed: int, count: int, depth: int) -> str:
        return f"{rmap.fingerprint}-{generator.value}-s{seed}-c{count}-d{depth}"

    def load(self, rmap: RationalMap, generator: Generator, seed: int, count: int, depth: int) -> JuliaSample | None:
        if not self.directory.exists():
            return None
        path = _latest_version(self.directory, self._stem(rmap, generator, seed, count, depth))
        if path is None:
            return None
        try:
            header, rows, skipped = _read_lines(path)
        except CacheError as exc:
            logger.warning("sample_cache_unreadable", path=path.name, error=exc.message)
            return None
        if header.get("format") != SAMPLE_FORMAT or header.get("fingerprint") != rmap.fingerprint:
            return None
        if skipped or len(rows) != header.get("size"):
            logger.warning("sample_cache_damaged", path=path.name, skipped=skipped)
            return None
        logger.info("sample_cache_hit", count=len(rows), generator=generator.value)
        return JuliaSample(
            points=tuple(complex(r[0], r[1]) for r in rows),
            generator=generator,
            seed=seed,
            count=count,
            depth=depth,
        )

    def save(self, rmap: RationalMap, sample: JuliaSample) -> Path:
        self.directory.mkdir(parents=True, exist_ok=True)
        stem = self._stem(rmap, sample.generator, sample.seed, sample.count, sample.depth)
        path = _next_version(self.directory, stem)
        header = {
            "format": SAMPLE_FORMAT,
            "version": CACHE_VERSION,
            "fingerprint": rmap.fingerprint,
            "generator": sample.generator.value,
            "seed": sample.seed,
            "count": sample.count,
            "depth": sample.depth,
            "size": len(sample.points),
        }
        with path.open("x", encoding="utf-8") as handle:
            handle.write(json.dumps(header, sort_keys=True) + "\n")
            for z in sample.points:
                handle.write(_line([z.real, z.imag]))
        return path


def cache_roundtrip(record: CacheRecord, directory: Path) -> CacheRecord:
    """Write a record and read it back."""
    repository = PeriodicCacheRepository(directory)
    path = repository.write(record)
    restored, _ = repository.read(path, record.fingerprint)
    return restored
