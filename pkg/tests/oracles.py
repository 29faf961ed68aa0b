"""Independent reference implementations and random instance generators."""
from __future__ import annotations

import itertools
import math

import numpy as np

from reoptdb.catalog import Catalog, Relation
from reoptdb.executor import execute
from reoptdb.optimizer import LEFT_DEEP, CardinalitySource, OptimizerConfig
from reoptdb.plan import Join, Scan, left_deep
from reoptdb.query import QuerySpec


def _splits(items):
    """Ordered (left, right) partitions of ``items`` into two non-empty parts."""
    items = tuple(items)
    n = len(items)
    for r in range(1, n):
        for left in itertools.combinations(items, r):
            right = tuple(x for x in items if x not in left)
            yield left, right


def all_trees(aliases, query: QuerySpec, config: OptimizerConfig):
    """Every ordered binary join tree (without operators) allowed by ``config``."""
    aliases = tuple(sorted(aliases))
    if len(aliases) == 1:
        yield Scan(aliases[0])
        return
    for left, right in _splits(aliases):
        if config.tree_shape == LEFT_DEEP and len(left) > 1 and len(right) > 1:
            continue
        if not config.allow_cross_products and not any(
                frozenset((a, b)) in query.edges for a in left for b in right):
            continue
        for lt in all_trees(left, query, config):
            for rt in all_trees(right, query, config):
                yield Join(lt, rt, None)


def brute_force_min_cost(query: QuerySpec, card: CardinalitySource, config: OptimizerConfig) -> float:
    """Minimum plan cost by enumerating every tree and every operator assignment."""
    cm = config.cost_model
    best = math.inf
    scans = sum(cm.c_scan_row * card.scan_rows[a] for a in query.aliases)
    for tree in all_trees(query.aliases, query, config):
        joins = []

        def walk(n):
            if isinstance(n, Join):
                walk(n.left)
                walk(n.right)
                joins.append(n)

        walk(tree)
        # per-join cost for each operator; ops are chosen independently per node
        table = np.array([[cm.join_cost(op, card(j.left.leaves), card(j.right.leaves), card(j.leaves))
                           for op in config.operators] for j in joins])
        total = scans
        for combo in itertools.product(range(len(config.operators)), repeat=len(joins)):
            best = min(best, total + sum(table[i, c] for i, c in enumerate(combo)))
    return best


# ---------------------------------------------------------------- generators

def random_connected_query(rng: np.random.Generator, n_rel: int, *, n_cols: int = 2,
                           sel_prob: float = 0.5, domain: int = 10, extra_edges: float = 0.3,
                           relation_names=None) -> QuerySpec:
    """A connected select-join query over relations T0..T{n-1} with columns c0..c{n_cols-1}."""
    names = relation_names or [f"T{i}" for i in range(n_rel)]
    joins = []
    for i in range(1, n_rel):
        j = int(rng.integers(0, i))
        joins.append(((names[j], f"c{rng.integers(0, n_cols)}"), (names[i], f"c{rng.integers(0, n_cols)}")))
    for i, j in itertools.combinations(range(n_rel), 2):
        if rng.random() < extra_edges:
            joins.append(((names[i], f"c{rng.integers(0, n_cols)}"), (names[j], f"c{rng.integers(0, n_cols)}")))
    sels = []
    for name in names:
        if rng.random() < sel_prob:
            sels.append((name, f"c{rng.integers(0, n_cols)}", int(rng.integers(0, domain))))
    return QuerySpec.create(names, sels, joins)


def random_correlated_catalog(rng: np.random.Generator, n_rel: int, *, rows=(20, 200), n_cols: int = 2,
                              domain: int = 10, fraction: float = 0.3, seed: int = 0) -> Catalog:
    """Relations whose columns are skewed and correlated with each other."""
    cat = Catalog()
    for i in range(n_rel):
        n = int(rng.integers(rows[0], rows[1] + 1))
        skew = rng.uniform(0.0, 2.0)
        p = 1.0 / np.arange(1, domain + 1) ** skew
        base = rng.choice(domain, size=n, p=p / p.sum())
        cols = {}
        for c in range(n_cols):
            noise = rng.random(n) < rng.uniform(0.0, 0.6)
            col = np.where(noise, rng.integers(0, domain, size=n), (base + c) % domain)
            cols[f"c{c}"] = col.astype(np.int64)
        cat.add(Relation(f"T{i}", cols))
    cat.analyze(mcv_limit=int(rng.integers(1, domain + 1)), bucket_count=5)
    cat.sample(fraction, seed)
    return cat


def connected_subsets(query: QuerySpec):
    aliases = sorted(query.aliases)
    for r in range(1, len(aliases) + 1):
        for sub in itertools.combinations(aliases, r):
            if query.is_connected(sub):
                yield frozenset(sub)


def random_injected_instance(rng: np.random.Generator, m: int, profile: str = "overestimate-only"):
    """Query with ``m`` joins plus oracle/estimate tables keyed by join key.

    Oracle values come from an actual random database so they are mutually
    consistent; estimates inflate (or deflate) every join by a random factor.
    """
    n = m + 1
    cat = random_correlated_catalog(rng, n, rows=(5, 40), domain=6, fraction=1.0)
    q = random_connected_query(rng, n, domain=6, extra_edges=0.4)
    oracle, est = {}, {}
    tables = {a: cat.relation(a) for a in q.aliases}
    for sub in connected_subsets(q):
        sq = q.restrict(sub)
        true = execute(left_deep(sorted(sub)), tables, sq).result_rows
        key = q.join_key(sub)
        oracle[key] = float(true)
        if len(sub) == 1:
            est[key] = float(true)
        elif profile == "overestimate-only":
            est[key] = float(true) * rng.uniform(1.0, 20.0) + rng.uniform(0.0, 50.0)
        elif profile == "underestimate-only":
            est[key] = float(true) * rng.uniform(0.0, 1.0)
        else:
            est[key] = float(true) * math.exp(rng.normal(0.0, 2.0)) + rng.uniform(0.0, 5.0)
    scan_rows = {a: float(cat.relation(a).row_count) for a in q.aliases}
    return q, oracle, est, scan_rows

