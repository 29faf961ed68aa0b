"""Sampling-based join selectivity and validation of a plan's joins on samples."""
from __future__ import annotations

import logging
import math
from typing import Mapping

from .catalog import SampleTable
from .errors import EmptySampleError, PlanError
from .executor import execute
from .plan import Gamma, Node, left_deep
from .query import QuerySpec

log = logging.getLogger(__name__)

Delta = dict  # canonical join key -> validated cardinality


def _samples_for(query: QuerySpec, samples) -> dict[str, SampleTable]:
    if isinstance(samples, Mapping):
        by_name = dict(samples)
    else:
        by_name = {s.source: s for s in samples}
    out = {}
    for alias in query.aliases:
        s = by_name.get(alias) or by_name.get(query.relation_of(alias))
        if s is None:
            raise PlanError(f"no sample for relation {query.relation_of(alias)!r}")
        out[alias] = s
    return out


def sample_selectivity(samples, query: QuerySpec) -> float:
    """|σ(R1ˢ) ⋈ ... ⋈ σ(Rkˢ)| / (|R1ˢ| · ... · |Rkˢ|).

    Selections filter the samples before the join; the denominator uses the
    unfiltered sample sizes.
    """
    bound = _samples_for(query, samples)
    for alias, s in bound.items():
        if s.size == 0:
            raise EmptySampleError(f"sample of {s.source!r} is empty")
    plan = left_deep(query.aliases)
    rep = execute(plan, {a: s.rows for a, s in bound.items()}, query)
    denom = math.prod(float(bound[a].size) for a in query.aliases)
    return rep.result_rows / denom


def validate_plan(plan: Node, samples, query: QuerySpec, *, floor: float | None = None,
                  on_empty: str = "raise") -> Delta:
    """Scaled sample cardinality of every join node in ``plan``.

    Each node's estimate is its observed sample count divided by the product
    of the sampling fractions beneath it.  With ``floor`` set, an observed
    count of zero is replaced by ``floor`` rows before scaling.  ``on_empty``
    is ``"raise"`` or ``"skip"``; with ``"skip"``, nodes above an empty base
    sample get no entry.
    """
    if sorted(plan.leaves) != sorted(query.aliases):
        raise PlanError("plan does not cover exactly the query's relations")
    bound = _samples_for(query, samples)
    empty = {a for a, s in bound.items() if s.size == 0}
    if empty and on_empty == "raise":
        raise EmptySampleError(f"empty samples for {sorted(empty)}")
    rep = execute(plan, {a: s.rows for a, s in bound.items()}, query)
    delta: Delta = {}
    labels = {query.leaf_label(a): a for a in query.aliases}
    for key, observed in rep.node_rows.items():
        aliases = [labels[k] for k in key]
        if empty.intersection(aliases):
            log.info("skipping %s: empty base sample", key)
            continue
        count = float(observed)
        if count == 0 and floor is not None:
            count = float(floor)
        scale = math.prod(bound[a].fraction for a in aliases)
        delta[key] = count / scale
    return delta


def merge_gamma(gamma: Mapping, delta: Mapping) -> Gamma:
    """Γ ∪ Δ as a new store; Δ wins on key collisions."""
    out = Gamma()
    out.update(gamma)
    out.update(delta)
    return out
