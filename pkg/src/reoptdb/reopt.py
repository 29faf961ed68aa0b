"""The optimize-then-validate loop and its per-run diagnostics.

Each round asks the optimizer for a plan under the current validated
cardinalities Γ.  If the plan equals the previous round's plan the loop
stops; otherwise its joins are validated (on samples, or against injected
oracle cardinalities) and the results are merged into Γ.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Mapping

from .catalog import Catalog
from .errors import EmptySampleError, InvariantViolation
from .optimizer import CardinalitySource, OptimizerConfig, explain_plan, optimize, plan_cost
from .plan import (Gamma, Node, Transformation, classify_transformation, join_nodes, render_text,
                   to_json, tree_encoding)
from .query import QuerySpec
from .sample_est import merge_gamma, validate_plan

log = logging.getLogger(__name__)

DEFAULT_MAX_ITERS = 64

OVERESTIMATE = "overestimate-only"
UNDERESTIMATE = "underestimate-only"
MIXED = "mixed"
ERROR_PROFILES = (OVERESTIMATE, UNDERESTIMATE, MIXED)


@dataclass
class ReoptReport:
    query: QuerySpec
    plans: list[Node]
    deltas: list[dict]
    gamma_final: Gamma
    transformation_sequence: list[Transformation]
    costs_s: list[float]
    costs_chosen: list[float]
    notices: list[str] = field(default_factory=list)
    trace: list[str] = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return len(self.plans)

    @property
    def final_plan(self) -> Node:
        return self.plans[-1]

    @property
    def distinct_plans(self) -> list[Node]:
        """P_1..P_n, without the confirming round."""
        return self.plans[:-1]

    def sequence_case(self) -> int | None:
        """Which termination pattern the run followed (1, 2 or 3), or None.

        1: stops after two rounds with the first plan repeated.
        2: every new plan is a global transformation of all earlier ones.
        3: as 2, except the last new plan is a local transformation of an
           earlier one.
        """
        n = len(self.distinct_plans)
        seq = self.transformation_sequence
        if n == 1 and not seq:
            return 1
        if n < 2 or len(seq) != n - 1:
            return None
        if all(t is Transformation.GLOBAL for t in seq):
            return 2
        if all(t is Transformation.GLOBAL for t in seq[:-1]) and seq[-1] is Transformation.LOCAL:
            return 3
        return None

    def to_json(self) -> dict:
        return {
            "query": self.query.to_sql(),
            "iterations": self.iterations,
            "plans": [{"plan": to_json(p), "text": render_text(p),
                       "encoding": [list(j) for j in tree_encoding(p)]}
                      for p in self.plans],
            "deltas": [[{"join": list(k), "rows": v} for k, v in sorted(d.items())] for d in self.deltas],
            "gamma_final": self.gamma_final.to_json(),
            "transformation_sequence": [t.value for t in self.transformation_sequence],
            "sequence_case": self.sequence_case(),
            "costs_s": self.costs_s,
            "costs_chosen": self.costs_chosen,
            "notices": self.notices,
        }


def run_loop(query: QuerySpec, source: CardinalitySource, validate: Callable[[Node], dict],
             config: OptimizerConfig, max_iters: int = DEFAULT_MAX_ITERS,
             verbose: Callable[[str], None] | None = None) -> ReoptReport:
    """Generic loop; ``validate`` maps a plan to its Δ."""
    gamma = Gamma()
    plans: list[Node] = []
    deltas: list[dict] = []
    seq: list[Transformation] = []
    costs_s: list[float] = []
    costs_chosen: list[float] = []
    trace: list[str] = []
    cm = config.cost_model

    def emit(text):
        trace.append(text)
        if verbose:
            verbose(text)

    prev = None
    while True:
        if len(plans) >= max_iters:
            raise InvariantViolation(f"re-optimization did not converge in {max_iters} rounds")
        current = source.with_gamma(gamma)
        plan = optimize(query, current, config)
        plans.append(plan)
        rnd = len(plans)
        costs_chosen.append(plan_cost(plan, current, cm))
        emit(f"-- round {rnd}: {render_text(plan)}\n{explain_plan(plan, query, current, cm)}")
        if plan == prev:
            emit(f"-- round {rnd}: plan unchanged, stopping")
            break
        if len(plans) > 1:
            earlier = plans[:-1]
            local = any(classify_transformation(plan, p) is Transformation.LOCAL for p in earlier)
            seq.append(Transformation.LOCAL if local else Transformation.GLOBAL)
            emit(f"-- round {rnd}: {seq[-1].value} transformation")
        delta = validate(plan)
        deltas.append(delta)
        before = len(gamma)
        gamma = merge_gamma(gamma, delta)
        emit(f"-- round {rnd}: Δ = " + ", ".join(f"{'⋈'.join(k)}={v:.6g}" for k, v in sorted(delta.items())))
        costs_s.append(plan_cost(plan, source.with_gamma(gamma), cm))
        log.debug("round %d: |Γ| %d -> %d", rnd, before, len(gamma))
        prev = plan
    return ReoptReport(query, plans, deltas, gamma, seq, costs_s, costs_chosen, [], trace)


def reoptimize(query: QuerySpec, catalog: Catalog, config: OptimizerConfig | None = None,
               max_iters: int = DEFAULT_MAX_ITERS, *, floor: float | None = None,
               verbose: Callable[[str], None] | None = None) -> ReoptReport:
    """Sampling-based re-optimization of ``query`` against ``catalog``."""
    config = config or OptimizerConfig()
    source = CardinalitySource.from_stats(query, catalog.stats)
    samples = {a: catalog.samples[query.relation_of(a)] for a in query.aliases
               if query.relation_of(a) in catalog.samples}
    missing = [a for a in query.aliases if a not in samples]
    if missing:
        raise EmptySampleError(f"no samples drawn for {missing}; run sample first")
    notices: list[str] = []
    empty = sorted(a for a, s in samples.items() if s.size == 0)
    if empty:
        notices.append(f"empty samples for {empty}: joins over them keep histogram estimates")

    def validate(plan):
        return validate_plan(plan, samples, query, floor=floor, on_empty="skip")

    rep = run_loop(query, source, validate, config, max_iters, verbose)
    rep.notices.extend(notices)
    return rep


def check_error_profile(oracle: Mapping, estimates: Mapping, profile: str) -> None:
    if profile not in ERROR_PROFILES:
        raise ValueError(f"unknown error profile {profile!r}")
    if profile == MIXED:
        return
    for key, true in oracle.items():
        if len(key) < 2:
            continue
        est = estimates[key]
        if profile == OVERESTIMATE and est < true:
            raise ValueError(f"overestimate-only profile, but {key} is estimated {est} < {true}")
        if profile == UNDERESTIMATE and est > true:
            raise ValueError(f"underestimate-only profile, but {key} is estimated {est} > {true}")


def reoptimize_injected(query: QuerySpec, oracle_cards: Mapping, error_profile: str,
                        config: OptimizerConfig | None = None, *, estimates: Mapping,
                        scan_rows: Mapping[str, float], max_iters: int = DEFAULT_MAX_ITERS,
                        verbose: Callable[[str], None] | None = None) -> ReoptReport:
    """The same loop, with validation answered from ``oracle_cards``.

    ``estimates`` holds the optimizer's initial cardinalities and
    ``oracle_cards`` the values validation reveals; both are keyed by
    canonical join keys and must cover every alias set the optimizer may ask
    about (single relations included).
    """
    config = config or OptimizerConfig()
    check_error_profile(oracle_cards, estimates, error_profile)
    source = CardinalitySource.from_mapping(query, estimates, scan_rows)

    def validate(plan):
        return {query.join_key(j.leaves): float(oracle_cards[query.join_key(j.leaves)])
                for j in join_nodes(plan)}

    return run_loop(query, source, validate, config, max_iters, verbose)
