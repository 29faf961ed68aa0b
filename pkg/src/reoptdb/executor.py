"""Materializing, column-at-a-time execution of physical plans.

Intermediate results are row-id arrays, one per alias, all of equal length.
Bag semantics throughout.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .catalog import Relation
from .errors import PlanError, QueryError
from .plan import HASH, NESTED_LOOP, Node, Scan, join_nodes
from .query import QuerySpec

NL_CHUNK_PAIRS = 1 << 20
REFERENCE_PAIR_LIMIT = 10 ** 8

Bindings = Mapping[str, Relation]


@dataclass
class ExecReport:
    result_rows: int
    node_rows: dict[tuple, int]
    leaf_rows: dict[str, int]
    wall_time: float
    rows_processed: int
    root_key: tuple = field(default=())

    @property
    def join_rows(self) -> int:
        """Tuples emitted by join operators only (leaf scans excluded)."""
        return int(sum(self.node_rows.values()))

    def to_json(self) -> dict:
        return {
            "result_rows": self.result_rows,
            "rows_processed": self.rows_processed,
            "join_rows": self.join_rows,
            "wall_time_s": self.wall_time,
            "leaf_rows": dict(sorted(self.leaf_rows.items())),
            "node_rows": [{"join": list(k), "rows": v} for k, v in self.node_rows.items()],
        }


def _bound(tables: Bindings, query: QuerySpec, alias: str) -> Relation:
    if alias in tables:
        return tables[alias]
    name = query.relation_of(alias)
    if name in tables:
        return tables[name]
    raise PlanError(f"no table bound for {alias!r}")


def _column(rel: Relation, alias: str, column: str) -> np.ndarray:
    try:
        return rel.columns[column]
    except KeyError:
        raise QueryError(f"{alias}.{column}: relation {rel.name!r} has no such column") from None


def scan_ids(query: QuerySpec, rel: Relation, alias: str) -> np.ndarray:
    """Row ids of ``rel`` passing the alias's selections and intra-relation equalities."""
    mask = np.ones(rel.row_count, dtype=bool)
    for col, v in query.selections_on(alias):
        mask &= _column(rel, alias, col) == v
    for cls_ in query.equivalence_classes:
        own = [c for a, c in cls_ if a == alias]
        for a, b in zip(own, own[1:]):
            mask &= _column(rel, alias, a) == _column(rel, alias, b)
    return np.flatnonzero(mask)


def _factorize(lkeys: list[np.ndarray], rkeys: list[np.ndarray]):
    nl = len(lkeys[0])
    if len(lkeys) == 1:
        both = np.concatenate([lkeys[0], rkeys[0]])
        _, inv = np.unique(both, return_inverse=True)
    else:
        both = np.concatenate([np.column_stack(lkeys), np.column_stack(rkeys)])
        _, inv = np.unique(both, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    return inv[:nl], inv[nl:]


def _hash_pairs(lkeys, rkeys, nl, nr):
    if not lkeys:
        return np.repeat(np.arange(nl), nr), np.tile(np.arange(nr), nl)
    if nl == 0 or nr == 0:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    lid, rid = _factorize(lkeys, rkeys)
    # build side: inner (right) input grouped by key id
    order = np.argsort(rid, kind="stable")
    table = rid[order]
    lo = np.searchsorted(table, lid, "left")
    hi = np.searchsorted(table, lid, "right")
    counts = hi - lo
    total = int(counts.sum())
    li = np.repeat(np.arange(nl), counts)
    starts = np.repeat(lo - (np.cumsum(counts) - counts), counts)
    ri = order[starts + np.arange(total)]
    return li, ri


def _nested_loop_pairs(lkeys, rkeys, nl, nr):
    if nl == 0 or nr == 0:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    L = np.column_stack(lkeys) if lkeys else np.zeros((nl, 0), np.int64)
    R = np.column_stack(rkeys) if rkeys else np.zeros((nr, 0), np.int64)
    step = max(1, NL_CHUNK_PAIRS // max(nr, 1))
    lis, ris = [], []
    for s in range(0, nl, step):
        block = L[s:s + step]
        eq = np.all(block[:, None, :] == R[None, :, :], axis=2)
        a, b = np.nonzero(eq)
        lis.append(a + s)
        ris.append(b)
    return np.concatenate(lis), np.concatenate(ris)


class _Run:
    def __init__(self, query: QuerySpec, tables: Bindings):
        self.query = query
        self.tables = tables
        self.node_rows: dict[tuple, int] = {}
        self.leaf_rows: dict[str, int] = {}

    def key_columns(self, left: dict, right: dict):
        lk, rk = [], []
        for cls_ in self.query.equivalence_classes:
            lcol = next((c for c in cls_ if c[0] in left), None)
            rcol = next((c for c in cls_ if c[0] in right), None)
            if lcol is None or rcol is None:
                continue
            for (a, c), side, out in ((lcol, left, lk), (rcol, right, rk)):
                rel = _bound(self.tables, self.query, a)
                out.append(_column(rel, a, c)[side[a]])
        return lk, rk

    def run(self, node: Node) -> dict[str, np.ndarray]:
        if isinstance(node, Scan):
            rel = _bound(self.tables, self.query, node.alias)
            ids = scan_ids(self.query, rel, node.alias)
            self.leaf_rows[node.alias] = len(ids)
            return {node.alias: ids}
        left = self.run(node.left)
        right = self.run(node.right)
        lk, rk = self.key_columns(left, right)
        nl = len(next(iter(left.values())))
        nr = len(next(iter(right.values())))
        if node.op == NESTED_LOOP:
            li, ri = _nested_loop_pairs(lk, rk, nl, nr)
        elif node.op in (HASH, None):
            li, ri = _hash_pairs(lk, rk, nl, nr)
        else:
            raise PlanError(f"unknown operator {node.op!r}")
        out = {a: ids[li] for a, ids in left.items()}
        out.update({a: ids[ri] for a, ids in right.items()})
        self.node_rows[self.query.join_key(node.leaves)] = len(li)
        return out


def execute(plan: Node, tables: Bindings, query: QuerySpec) -> ExecReport:
    """Run ``plan`` against ``tables`` (alias or relation name → Relation)."""
    if sorted(plan.leaves) != sorted(query.aliases):
        raise PlanError(f"plan covers {sorted(plan.leaves)}, query has {sorted(query.aliases)}")
    t0 = time.perf_counter()
    r = _Run(query, tables)
    out = r.run(plan)
    elapsed = time.perf_counter() - t0
    result = len(next(iter(out.values())))
    processed = sum(r.leaf_rows.values()) + sum(r.node_rows.values())
    root = query.join_key(plan.leaves)
    return ExecReport(result, r.node_rows, r.leaf_rows, elapsed, int(processed), root)


def nested_loop_reference(query: QuerySpec, tables: Bindings) -> int:
    """Exact result size by block nested loops over the filtered cross product.

    Predicates are the query's literal join predicates; no equivalence-class
    reasoning is involved, so this stays independent of :func:`execute`.
    """
    filtered = {}
    for alias in query.aliases:
        rel = _bound(tables, query, alias)
        mask = np.ones(rel.row_count, dtype=bool)
        for col, v in query.selections_on(alias):
            mask &= _column(rel, alias, col) == v
        filtered[alias] = (rel, np.flatnonzero(mask))
    pairs = math.prod(len(ids) for _, ids in filtered.values())
    if pairs > REFERENCE_PAIR_LIMIT:
        raise PlanError(f"filtered cross product has {pairs} tuples, above {REFERENCE_PAIR_LIMIT}")
    if pairs == 0:
        return 0

    bound: list[str] = []
    partial: dict[str, np.ndarray] = {}
    for alias in query.aliases:
        rel, ids = filtered[alias]
        preds = []
        for (la, lc), (ra, rc) in query.joins:
            if la == alias and ra == alias:
                ids = ids[_column(rel, alias, lc)[ids] == _column(rel, alias, rc)[ids]]
            elif la == alias and ra in bound:
                preds.append((lc, ra, rc))
            elif ra == alias and la in bound:
                preds.append((rc, la, lc))
        if not bound:
            partial = {alias: ids}
            bound.append(alias)
            continue
        n = len(next(iter(partial.values())))
        m = len(ids)
        step = max(1, NL_CHUNK_PAIRS // max(m, 1))
        keep_p, keep_i = [], []
        for s in range(0, n, step):
            e = min(n, s + step)
            ok = np.ones((e - s, m), dtype=bool)
            for col, other, ocol in preds:
                orel = filtered[other][0]
                ov = _column(orel, other, ocol)[partial[other][s:e]]
                nv = _column(rel, alias, col)[ids]
                ok &= ov[:, None] == nv[None, :]
            a, b = np.nonzero(ok)
            keep_p.append(a + s)
            keep_i.append(b)
        pi = np.concatenate(keep_p)
        ii = np.concatenate(keep_i)
        partial = {a: v[pi] for a, v in partial.items()}
        partial[alias] = ids[ii]
        bound.append(alias)
        if len(pi) == 0:
            return 0
    return len(next(iter(partial.values())))


def bind(query: QuerySpec, relations: Mapping[str, Relation]) -> dict[str, Relation]:
    return {a: relations[query.relation_of(a)] for a in query.aliases}


def plan_node_keys(plan: Node, query: QuerySpec) -> list[tuple]:
    return [query.join_key(j.leaves) for j in join_nodes(plan)]

