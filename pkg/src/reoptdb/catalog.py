"""Base relations, their Bernoulli samples, CSV ingestion and on-disk persistence."""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import os
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import CatalogError, CorruptCatalogError, CsvFormatError
from .stats import DEFAULT_BUCKET_COUNT, DEFAULT_MCV_LIMIT, AttributeStats, analyze

log = logging.getLogger(__name__)

DEFAULT_FRACTION = 0.05
CATALOG_VERSION = 1
MANIFEST = "manifest.json"

_INT64_MIN, _INT64_MAX = -(2 ** 63), 2 ** 63 - 1
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)


@dataclass
class Relation:
    name: str
    columns: dict[str, np.ndarray]

    def __post_init__(self):
        cols = {}
        lengths = set()
        for k, v in self.columns.items():
            arr = np.asarray(v, dtype=np.int64)
            if arr.ndim != 1:
                raise CatalogError(f"column {k!r} of {self.name!r} is not one-dimensional")
            cols[k] = arr
            lengths.add(len(arr))
        if len(lengths) > 1:
            raise CatalogError(f"columns of {self.name!r} have differing lengths {sorted(lengths)}")
        self.columns = cols

    @property
    def row_count(self) -> int:
        for col in self.columns.values():
            return len(col)
        return 0

    @property
    def schema(self) -> list[str]:
        return list(self.columns)

    def column(self, name: str) -> np.ndarray:
        try:
            return self.columns[name]
        except KeyError:
            raise CatalogError(f"relation {self.name!r} has no column {name!r}") from None

    def take(self, idx: np.ndarray, name: str | None = None) -> "Relation":
        return Relation(name or self.name, {k: v[idx] for k, v in self.columns.items()})

    def __eq__(self, other):
        if not isinstance(other, Relation):
            return NotImplemented
        return (self.name == other.name and self.schema == other.schema
                and all(np.array_equal(self.columns[c], other.columns[c]) for c in self.schema))


@dataclass
class SampleTable:
    source: str
    fraction: float
    seed: int
    row_ids: np.ndarray
    rows: Relation

    @property
    def size(self) -> int:
        return len(self.row_ids)


def _mix64(x: np.ndarray) -> np.ndarray:
    # splitmix64 finalizer; uint64 arithmetic wraps
    x = x ^ (x >> np.uint64(30))
    x = x * np.uint64(0xBF58476D1CE4E5B9)
    x = x ^ (x >> np.uint64(27))
    x = x * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


def row_uniforms(seed: int, n: int) -> np.ndarray:
    """Uniform [0, 1) draw for each row index, a pure function of (seed, index)."""
    with np.errstate(over="ignore"):
        s = _mix64(np.array([seed & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64))[0]
        idx = np.arange(n, dtype=np.uint64)
        bits = _mix64(s + (idx + np.uint64(1)) * _GOLDEN)
    return (bits >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


def derive_seed(seed: int, label: str) -> int:
    """Independent 64-bit seed for ``label`` under a top-level ``seed``."""
    with np.errstate(over="ignore"):
        x = np.uint64(seed & 0xFFFFFFFFFFFFFFFF) ^ (np.uint64(zlib.crc32(label.encode())) * _GOLDEN)
        return int(_mix64(np.array([x], dtype=np.uint64))[0])


def draw_sample(rel: Relation, fraction: float, seed: int) -> SampleTable:
    """Bernoulli sample: each row kept independently with probability ``fraction``."""
    if not (0.0 < fraction <= 1.0):
        raise ValueError(f"sampling fraction must be in (0, 1], got {fraction}")
    if fraction == 1.0:
        ids = np.arange(rel.row_count)
    else:
        ids = np.flatnonzero(row_uniforms(seed, rel.row_count) < fraction)
    return SampleTable(rel.name, float(fraction), int(seed), ids, rel.take(ids))


def load_csv(path, schema) -> Relation:
    path = Path(path)
    if not path.is_file():
        raise CatalogError(f"no such file: {path}")
    schema = list(schema)
    data: list[list[int]] = [[] for _ in schema]
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != schema:
            raise CsvFormatError(path, 1, f"header {header} does not match schema {schema}")
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != len(schema):
                raise CsvFormatError(path, line, f"ragged row: expected {len(schema)} cells, got {len(row)}")
            for j, cell in enumerate(row):
                try:
                    v = int(cell.strip())
                except ValueError:
                    raise CsvFormatError(path, line, f"non-integer cell {cell!r} in column {schema[j]!r}") from None
                if not _INT64_MIN <= v <= _INT64_MAX:
                    raise CsvFormatError(path, line, f"cell {cell!r} overflows a 64-bit integer")
                data[j].append(v)
    return Relation(path.stem, {c: np.array(d, dtype=np.int64) for c, d in zip(schema, data)})


def write_csv(rel: Relation, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(rel.schema)
        if rel.row_count:
            w.writerows(np.column_stack([rel.columns[c] for c in rel.schema]).tolist())


@dataclass
class Catalog:
    relations: dict[str, Relation] = field(default_factory=dict)
    samples: dict[str, SampleTable] = field(default_factory=dict)
    stats: dict[str, dict[str, AttributeStats]] = field(default_factory=dict)

    def add(self, rel: Relation) -> None:
        if rel.name in self.relations:
            raise CatalogError(f"relation {rel.name!r} already loaded")
        self.relations[rel.name] = rel

    def relation(self, name: str) -> Relation:
        try:
            return self.relations[name]
        except KeyError:
            raise CatalogError(f"unknown relation {name!r}") from None

    def column_stats(self, relation: str, column: str) -> AttributeStats:
        try:
            return self.stats[relation][column]
        except KeyError:
            raise CatalogError(f"no statistics for {relation}.{column}; run analyze first") from None

    def analyze(self, mcv_limit=DEFAULT_MCV_LIMIT, bucket_count=DEFAULT_BUCKET_COUNT) -> None:
        for name, rel in self.relations.items():
            self.stats[name] = analyze(rel, mcv_limit, bucket_count)

    def sample(self, fraction: float = DEFAULT_FRACTION, seed: int = 0) -> None:
        """Draw one sample per relation, each under its own derived seed."""
        for name, rel in self.relations.items():
            self.samples[name] = draw_sample(rel, fraction, derive_seed(seed, name))


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def save_catalog(catalog: Catalog, directory) -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    manifest = {"version": CATALOG_VERSION, "relations": {}, "samples": {}, "stats": {}}
    for name, rel in catalog.relations.items():
        fname = f"{name}.csv"
        write_csv(rel, d / fname)
        manifest["relations"][name] = {
            "file": fname,
            "schema": rel.schema,
            "row_count": rel.row_count,
            "sha256": _sha256(d / fname),
        }
    for name, s in catalog.samples.items():
        manifest["samples"][name] = {
            "fraction": s.fraction,
            "seed": s.seed,
            "size": s.size,
            "rows_sha256": hashlib.sha256(s.row_ids.astype(np.int64).tobytes()).hexdigest(),
        }
    for name, cols in catalog.stats.items():
        manifest["stats"][name] = {c: st.to_json() for c, st in cols.items()}
    tmp = d / (MANIFEST + ".tmp")
    tmp.write_text(json.dumps(manifest, indent=1))
    os.replace(tmp, d / MANIFEST)
    return d


def open_catalog(directory) -> Catalog:
    d = Path(directory)
    mpath = d / MANIFEST
    if not d.is_dir():
        raise CatalogError(f"catalog directory {d} does not exist")
    if not mpath.is_file():
        raise CatalogError(f"{d} has no {MANIFEST}")
    try:
        manifest = json.loads(mpath.read_text())
    except json.JSONDecodeError as e:
        raise CorruptCatalogError(f"manifest is not valid JSON: {e}") from None
    if manifest.get("version") != CATALOG_VERSION:
        raise CatalogError(f"catalog version {manifest.get('version')!r} != supported {CATALOG_VERSION}")

    cat = Catalog()
    try:
        for name, meta in manifest["relations"].items():
            path = d / meta["file"]
            if not path.is_file():
                raise CorruptCatalogError(f"missing relation file {path}")
            if _sha256(path) != meta["sha256"]:
                raise CorruptCatalogError(f"checksum mismatch for {path}")
            rel = load_csv(path, meta["schema"])
            rel.name = name
            if rel.row_count != meta["row_count"]:
                raise CorruptCatalogError(f"row count mismatch for {name}")
            cat.add(rel)
        for name, meta in manifest.get("samples", {}).items():
            s = draw_sample(cat.relation(name), meta["fraction"], meta["seed"])
            digest = hashlib.sha256(s.row_ids.astype(np.int64).tobytes()).hexdigest()
            if s.size != meta["size"] or digest != meta["rows_sha256"]:
                raise CorruptCatalogError(f"sample of {name} does not reproduce")
            cat.samples[name] = s
        for name, cols in manifest.get("stats", {}).items():
            cat.stats[name] = {c: AttributeStats.from_json(st) for c, st in cols.items()}
    except (KeyError, TypeError, ValueError) as e:
        raise CorruptCatalogError(f"malformed manifest: {e!r}") from None
    log.debug("opened catalog %s with %d relations", d, len(cat.relations))
    return cat
