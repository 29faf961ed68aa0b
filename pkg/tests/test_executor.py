import itertools

import numpy as np
import pytest

from oracles import all_trees, random_connected_query, random_correlated_catalog
from reoptdb.catalog import Relation
from reoptdb.errors import PlanError
from reoptdb.executor import execute, nested_loop_reference
from reoptdb.optimizer import OptimizerConfig
from reoptdb.ott import DESK, OttQuery, generate_ott
from reoptdb.plan import HASH, NESTED_LOOP, Join, Scan, left_deep
from reoptdb.query import QuerySpec


def test_selection_leaf_count():
    vals = np.concatenate([np.full(100, 5), np.arange(9900) % 5 + 10])
    rel = Relation("R", {"a": vals})
    q = QuerySpec.create(["R"], [("R", "a", 5)])
    rep = execute(Scan("R"), {"R": rel}, q)
    assert rep.result_rows == 100 and rep.leaf_rows == {"R": 100}


def test_hand_built_join():
    r = Relation("R", {"a": np.array([1, 1, 2, 3, 4])})
    s = Relation("S", {"b": np.array([1, 2, 2, 5, 6])})
    q = QuerySpec.create(["R", "S"], [], [(("R", "a"), ("S", "b"))])
    # by hand: 1 matches one row twice, 2 matches two rows once
    for op in (HASH, NESTED_LOOP):
        rep = execute(Join(Scan("R"), Scan("S"), op), {"R": r, "S": s}, q)
        assert rep.result_rows == 4
        assert rep.rows_processed == 5 + 5 + 4
        assert rep.join_rows == 4


def test_ott_mismatch_is_empty_for_any_plan():
    rels = {r.name: r for r in generate_ott(DESK)}
    q = OttQuery((0, 1, 0, 0)).spec()
    for tree in all_trees(q.aliases, q, OptimizerConfig()):
        assert execute(tree, rels, q).result_rows == 0


def test_reference_agrees_with_every_plan():
    rng = np.random.default_rng(5)
    for i in range(200):
        n = int(rng.integers(1, 5))
        cat = random_correlated_catalog(rng, n, rows=(5, 30), fraction=1.0)
        q = random_connected_query(rng, n, sel_prob=0.3)
        tables = {a: cat.relation(a) for a in q.aliases}
        ref = nested_loop_reference(q, tables)
        trees = list(all_trees(q.aliases, q, OptimizerConfig()))
        tree = trees[int(rng.integers(len(trees)))]
        ops = itertools.cycle([HASH, NESTED_LOOP] if i % 2 else [NESTED_LOOP, HASH])

        def with_ops(node):
            if isinstance(node, Scan):
                return node
            return Join(with_ops(node.left), with_ops(node.right), next(ops))

        assert execute(with_ops(tree), tables, q).result_rows == ref


def test_reference_edge_cases():
    empty = Relation("R", {"a": np.array([], dtype=np.int64)})
    assert nested_loop_reference(QuerySpec.create(["R"]), {"R": empty}) == 0
    r = Relation("R", {"a": np.arange(17)})
    assert nested_loop_reference(QuerySpec.create(["R"]), {"R": r}) == 17


def test_self_join_with_aliases():
    r = Relation("R", {"a": np.array([1, 1, 2])})
    q = QuerySpec.create([("R", "x"), ("R", "y")], [], [(("x", "a"), ("y", "a"))])
    assert execute(Join(Scan("x"), Scan("y")), {"R": r}, q).result_rows == 5


def test_plan_must_cover_query():
    q = QuerySpec.create(["R", "S"], [], [(("R", "a"), ("S", "a"))])
    with pytest.raises(PlanError):
        execute(Scan("R"), {}, q)


def test_cross_product_join():
    r, s = Relation("R", {"a": np.arange(3)}), Relation("S", {"b": np.arange(4)})
    q = QuerySpec.create(["R", "S"])
    assert execute(left_deep(["R", "S"]), {"R": r, "S": s}, q).result_rows == 12
