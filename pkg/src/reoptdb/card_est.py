"""Histogram/MCV selectivity estimation under attribute-value independence.

Selection selectivities use the MCV list when the constant is an MCV and a
uniform spread over the remaining distinct values otherwise.  Join
selectivities use ``1/max(n1, n2)`` unless both sides carry MCVs, in which
case matched MCV mass is counted exactly and the non-MCV remainder gets the
same ``1/max`` factor.
"""
from __future__ import annotations

import math
from typing import Iterable, Mapping

from .errors import QueryError
from .query import QuerySpec
from .stats import AttributeStats

StatsMap = Mapping[str, Mapping[str, AttributeStats]]


def eq_selectivity(stats: AttributeStats, c: int) -> float:
    f = stats.mcv_frequency(c)
    if f is not None:
        return f
    rest = stats.n_distinct - len(stats.mcvs)
    if rest <= 0:
        return 0.0
    return max(0.0, 1.0 - stats.mcv_mass) / rest


def join_selectivity(left: AttributeStats, right: AttributeStats) -> float:
    if not left.mcvs or not right.mcvs:
        return 1.0 / max(left.n_distinct, right.n_distinct, 1)
    rfreq = dict(right.mcvs)
    matched = sum(f * rfreq[v] for v, f in left.mcvs if v in rfreq)
    rest_l = max(0.0, 1.0 - left.mcv_mass)
    rest_r = max(0.0, 1.0 - right.mcv_mass)
    denom = max(left.n_distinct - len(left.mcvs), right.n_distinct - len(right.mcvs), 1)
    return min(1.0, matched + rest_l * rest_r / denom)


def combine_avi(sels: Iterable[float]) -> float:
    out = 1.0
    for s in sels:
        if not 0.0 <= s <= 1.0:
            raise ValueError(f"selectivity out of range: {s}")
        out *= s
    return out


class HistogramEstimator:
    """Per-query cache of base sizes and predicate selectivities.

    ``cardinality(aliases)`` depends only on the alias set, never on the order
    in which a plan assembles it.
    """

    def __init__(self, query: QuerySpec, stats: StatsMap):
        self.query = query
        self.stats = stats
        self.base_rows: dict[str, float] = {}
        self.sel: dict[str, float] = {}
        for alias in query.aliases:
            rel = query.relation_of(alias)
            cols = stats.get(rel)
            if not cols:
                raise QueryError(f"no statistics for relation {rel!r}")
            self.base_rows[alias] = float(next(iter(cols.values())).row_count)
            self.sel[alias] = combine_avi(
                eq_selectivity(self._col(alias, c), v) for c, v in query.selections_on(alias))
        # chain factors between consecutive class members: one per class merge
        self._classes = []
        for cls_ in query.equivalence_classes:
            for a, c in cls_:
                self._col(a, c)
            self._classes.append(cls_)
        self._cache: dict[frozenset, float] = {}

    def _col(self, alias: str, column: str) -> AttributeStats:
        rel = self.query.relation_of(alias)
        try:
            return self.stats[rel][column]
        except KeyError:
            raise QueryError(f"unknown column {alias}.{column} (relation {rel})") from None

    def join_factor(self, aliases: frozenset) -> float:
        factors = []
        for cls_ in self._classes:
            members = [col for col in cls_ if col[0] in aliases]
            for a, b in zip(members, members[1:]):
                factors.append(join_selectivity(self._col(*a), self._col(*b)))
        return combine_avi(factors)

    def cardinality(self, aliases: Iterable[str]) -> float:
        aliases = frozenset(aliases)
        hit = self._cache.get(aliases)
        if hit is not None:
            return hit
        for a in aliases:
            if a not in self.base_rows:
                raise QueryError(f"relation {a!r} is not part of the query")
        rows = math.prod(self.base_rows[a] for a in sorted(aliases))
        sel = combine_avi([self.sel[a] for a in sorted(aliases)] + [self.join_factor(aliases)])
        card = rows * sel
        self._cache[aliases] = card
        return card


def estimate_cardinality(query: QuerySpec, joinset: Iterable[str], stats: StatsMap, gamma=None) -> float:
    """Γ-first cardinality of the join over ``joinset`` (aliases)."""
    joinset = frozenset(joinset)
    if gamma:
        key = query.join_key(joinset)
        if key in gamma:
            return gamma[key]
    return HistogramEstimator(query, stats).cardinality(joinset)
