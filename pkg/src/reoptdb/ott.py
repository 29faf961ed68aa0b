"""Optimizer torture test: correlated tables and select-join queries whose
true size is either M^K or 0 while the independence-based estimate is
M^K / L^(K-1) either way."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .catalog import Relation
from .query import QuerySpec


@dataclass(frozen=True)
class OttConfig:
    K: int = 5
    rows_per_table: int = 1000
    rows_per_value: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if self.rows_per_value < 1 or self.rows_per_table % self.rows_per_value:
            raise ValueError("rows_per_table must be a positive multiple of rows_per_value")
        if self.domain_size < 2:
            raise ValueError("domain size L = rows_per_table / rows_per_value must be >= 2")

    @property
    def domain_size(self) -> int:
        return self.rows_per_table // self.rows_per_value

    L = domain_size

    @property
    def M(self) -> int:
        return self.rows_per_value


DESK = OttConfig(K=5, rows_per_table=1000, rows_per_value=10)
FULL_SCALE = OttConfig(K=4, rows_per_table=10_000, rows_per_value=100)


@dataclass(frozen=True)
class OttQuery:
    constants: tuple[int, ...]
    m: int = 0

    @property
    def K(self) -> int:
        return len(self.constants)

    def spec(self) -> QuerySpec:
        k = self.K
        rels = [f"R{i}" for i in range(1, k + 1)]
        sels = [(f"R{i}", f"A{i}", c) for i, c in enumerate(self.constants, 1)]
        joins = [((f"R{i}", f"B{i}"), (f"R{i + 1}", f"B{i + 1}")) for i in range(1, k)]
        return QuerySpec.create(rels, sels, joins)

    def sql(self) -> str:
        k = self.K
        rels = ", ".join(f"R{i}" for i in range(1, k + 1))
        preds = [f"R{i}.A{i} = {c}" for i, c in enumerate(self.constants, 1)]
        preds += [f"R{i}.B{i} = R{i + 1}.B{i + 1}" for i in range(1, k)]
        return f"SELECT COUNT(*) FROM {rels} WHERE " + " AND ".join(preds)

    @property
    def empty(self) -> bool:
        return len(set(self.constants)) > 1


def generate_ott(config: OttConfig) -> list[Relation]:
    """K tables R_k(A_k, B_k) with B_k = A_k, each value appearing exactly M times.

    Every table is shuffled under its own child seed.
    """
    children = np.random.SeedSequence(config.seed).spawn(config.K)
    base = np.repeat(np.arange(config.domain_size, dtype=np.int64), config.rows_per_value)
    out = []
    for k, child in enumerate(children, 1):
        a = np.random.default_rng(child).permutation(base)
        out.append(Relation(f"R{k}", {f"A{k}": a, f"B{k}": a.copy()}))
    return out


def ott_queries(config: OttConfig, n_join: int, m: int) -> list[OttQuery]:
    """Queries over R_1..R_{n_join+1}: ``m`` selections ``A=0`` and the rest
    ``A=1``, for every placement, followed by the same placements flipped."""
    n = n_join + 1
    if n_join < 0 or n > config.K:
        raise ValueError(f"need 0 <= n_join and n_join + 1 <= K={config.K}")
    if not 0 <= m <= n:
        raise ValueError(f"m must be in [0, {n}]")
    if config.domain_size < 2:
        raise ValueError("constants 0 and 1 need a domain of at least 2 values")
    out, seen = [], set()
    for flip in (0, 1):
        for zeros in itertools.combinations(range(n), m):
            consts = tuple((0 if i in zeros else 1) ^ flip for i in range(n))
            if consts not in seen:
                seen.add(consts)
                out.append(OttQuery(consts, m))
    return out


def true_cardinality(config: OttConfig, query: OttQuery) -> int:
    if query.empty:
        return 0
    return config.M ** query.K


def avi_estimated_cardinality(config: OttConfig, query: OttQuery) -> float:
    return config.M ** query.K / config.domain_size ** (query.K - 1)
