import itertools

import numpy as np
import pytest

from reoptdb.catalog import Relation, SampleTable
from reoptdb.errors import EmptySampleError
from reoptdb.plan import Gamma, Join, Scan
from reoptdb.query import QuerySpec
from reoptdb.sample_est import merge_gamma, sample_selectivity, validate_plan


def _sample(name, fraction=1.0, **cols):
    rel = Relation(name, {k: np.asarray(v, dtype=np.int64) for k, v in cols.items()})
    return SampleTable(name, fraction, 0, np.arange(rel.row_count), rel)


Q2 = QuerySpec.create(["R", "S"], [], [(("R", "a"), ("S", "b"))])


def test_disjoint_keys():
    s = {"R": _sample("R", a=[1, 2, 3]), "S": _sample("S", b=[7, 8])}
    assert sample_selectivity(s, Q2) == 0.0


def test_two_by_two():
    s = {"R": _sample("R", a=[1, 2]), "S": _sample("S", b=[1, 2])}
    assert sample_selectivity(s, Q2) == 0.5


def test_random_matches_nested_loop():
    rng = np.random.default_rng(3)
    for _ in range(20):
        a, b = rng.integers(0, 8, 50), rng.integers(0, 8, 50)
        s = [_sample("R", a=a), _sample("S", b=b)]
        brute = sum(1 for x, y in itertools.product(a, b) if x == y)
        assert sample_selectivity(s, Q2) == brute / 2500


def test_selection_filters_before_join_but_not_denominator():
    q = QuerySpec.create(["R", "S"], [("R", "c", 0)], [(("R", "a"), ("S", "b"))])
    s = {"R": _sample("R", a=[1, 1, 2], c=[0, 1, 0]), "S": _sample("S", b=[1, 2])}
    assert sample_selectivity(s, q) == 2 / 6


def test_empty_sample():
    s = {"R": _sample("R", a=[]), "S": _sample("S", b=[1])}
    with pytest.raises(EmptySampleError):
        sample_selectivity(s, Q2)


Q3 = QuerySpec.create(["A", "B", "C"], [], [(("A", "x"), ("B", "x")), (("B", "x"), ("C", "x"))])


def test_delta_one_entry_per_join():
    s = {n: _sample(n, x=[1, 1, 2]) for n in "ABC"}
    plan = Join(Join(Scan("A"), Scan("B")), Scan("C"))
    d = validate_plan(plan, s, Q3)
    assert set(d) == {("A", "B"), ("A", "B", "C")}
    assert d[("A", "B")] == 5 and d[("A", "B", "C")] == 9


def test_scaling_by_fractions():
    q = QuerySpec.create(["R", "S"], [], [(("R", "a"), ("S", "b"))])
    s = {"R": _sample("R", 0.1, a=[1] * 5), "S": _sample("S", 0.1, b=[1])}
    d = validate_plan(Join(Scan("R"), Scan("S")), s, q)
    assert d[("R", "S")] == pytest.approx(500)


def test_empty_join_yields_zero_entry():
    s = {"R": _sample("R", 0.5, a=[1]), "S": _sample("S", 0.5, b=[2])}
    d = validate_plan(Join(Scan("R"), Scan("S")), s, Q2)
    assert d == {("R", "S"): 0.0}


def test_floor_replaces_zero():
    s = {"R": _sample("R", 0.5, a=[1]), "S": _sample("S", 0.5, b=[2])}
    d = validate_plan(Join(Scan("R"), Scan("S")), s, Q2, floor=1)
    assert d[("R", "S")] == pytest.approx(4)


def test_empty_sample_skip_vs_raise():
    s = {"A": _sample("A", x=[]), "B": _sample("B", x=[1]), "C": _sample("C", x=[1])}
    plan = Join(Scan("A"), Join(Scan("B"), Scan("C")))
    with pytest.raises(EmptySampleError):
        validate_plan(plan, s, Q3)
    assert validate_plan(plan, s, Q3, on_empty="skip") == {("B", "C"): 1.0}


def test_merge_gamma():
    assert merge_gamma(Gamma(), {("A", "B"): 3.0}) == {("A", "B"): 3.0}
    g = Gamma({("A", "B"): 3.0})
    m = merge_gamma(g, {("A", "C"): 1.0})
    assert len(m) == 2 and len(g) == 1
    m2 = merge_gamma(m, {("A", "B"): 9.0})
    assert m2[("A", "B")] == 9.0 and len(m2) == 2
