"""ANALYZE-style per-column statistics: distinct count, MCV list, equi-depth histogram."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CatalogError

DEFAULT_MCV_LIMIT = 100
DEFAULT_BUCKET_COUNT = 100


@dataclass(frozen=True)
class AttributeStats:
    """Exact statistics for one column.

    ``histogram`` holds bucket boundaries over the non-MCV values (empty when
    every value is an MCV); ``bucket_counts`` holds the population of each of
    the ``len(histogram) - 1`` buckets.
    """

    n_distinct: int
    mcvs: tuple[tuple[int, float], ...]
    histogram: tuple[int, ...]
    row_count: int
    bucket_counts: tuple[int, ...] = ()

    @property
    def mcv_mass(self) -> float:
        return float(sum(f for _, f in self.mcvs))

    def mcv_frequency(self, value: int) -> float | None:
        for v, f in self.mcvs:
            if v == value:
                return f
        return None

    def to_json(self) -> dict:
        return {
            "n_distinct": self.n_distinct,
            "mcvs": [[v, f] for v, f in self.mcvs],
            "histogram": list(self.histogram),
            "bucket_counts": list(self.bucket_counts),
            "row_count": self.row_count,
        }

    @classmethod
    def from_json(cls, d: dict) -> "AttributeStats":
        return cls(
            n_distinct=int(d["n_distinct"]),
            mcvs=tuple((int(v), float(f)) for v, f in d["mcvs"]),
            histogram=tuple(int(b) for b in d["histogram"]),
            row_count=int(d["row_count"]),
            bucket_counts=tuple(int(c) for c in d.get("bucket_counts", [])),
        )


def column_stats(values: np.ndarray, mcv_limit: int = DEFAULT_MCV_LIMIT,
                 bucket_count: int = DEFAULT_BUCKET_COUNT) -> AttributeStats:
    n = len(values)
    uniq, counts = np.unique(values, return_counts=True)
    # descending count, ascending value on ties (np.unique output is value-sorted)
    order = np.lexsort((uniq, -counts))
    top = order[:mcv_limit]
    mcvs = tuple((int(uniq[i]), counts[i] / n) for i in top)

    keep = np.ones(len(uniq), dtype=bool)
    keep[top] = False
    rest = np.repeat(uniq[keep], counts[keep])  # already sorted
    if len(rest) == 0:
        histogram, bucket_counts = (), ()
    else:
        nb = min(bucket_count, len(rest))
        parts = np.array_split(rest, nb)
        histogram = tuple(int(p[0]) for p in parts) + (int(parts[-1][-1]),)
        bucket_counts = tuple(len(p) for p in parts)
    return AttributeStats(
        n_distinct=int(len(uniq)),
        mcvs=tuple((v, float(f)) for v, f in mcvs),
        histogram=histogram,
        row_count=n,
        bucket_counts=bucket_counts,
    )


def analyze(rel, mcv_limit: int = DEFAULT_MCV_LIMIT,
            bucket_count: int = DEFAULT_BUCKET_COUNT) -> dict[str, AttributeStats]:
    """Full-scan statistics for every column of ``rel``."""
    if rel.row_count == 0:
        raise CatalogError(f"cannot analyze empty relation {rel.name!r}")
    if mcv_limit < 0:
        raise ValueError("mcv_limit must be >= 0")
    if bucket_count < 1:
        raise ValueError("bucket_count must be >= 1")
    return {name: column_stats(col, mcv_limit, bucket_count)
            for name, col in rel.columns.items()}
