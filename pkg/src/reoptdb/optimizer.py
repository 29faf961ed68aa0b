"""Cost model and dynamic-programming join enumeration."""
from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import Callable, Iterable, Mapping

from .card_est import HistogramEstimator
from .errors import PlanError, QueryError
from .plan import HASH, NESTED_LOOP, OPERATORS, Join, Node, Scan, explain, join_nodes
from .query import QuerySpec

BUSHY = "bushy"
LEFT_DEEP = "left-deep"


@dataclass(frozen=True)
class CostModel:
    c_scan_row: float = 1.0
    c_hash_build_row: float = 2.0
    c_hash_probe_row: float = 1.0
    c_nl_inner_row: float = 1.0
    c_output_row: float = 1.0

    def __post_init__(self):
        for f in fields(self):
            if not getattr(self, f.name) > 0:
                raise ValueError(f"cost constant {f.name} must be > 0")

    def join_cost(self, op: str, outer: float, inner: float, out: float) -> float:
        if op == HASH:
            return self.c_hash_build_row * inner + self.c_hash_probe_row * outer + self.c_output_row * out
        if op == NESTED_LOOP:
            return self.c_scan_row * outer + self.c_nl_inner_row * outer * inner + self.c_output_row * out
        raise PlanError(f"unknown operator {op!r}")

    @classmethod
    def unit(cls) -> "CostModel":
        return cls(1.0, 1.0, 1.0, 1.0, 1.0)


@dataclass(frozen=True)
class OptimizerConfig:
    """``left-deep`` restricts the search to linear trees: every join has a
    base relation on at least one side, in either position."""

    tree_shape: str = BUSHY
    allow_cross_products: bool = False
    cost_model: CostModel = field(default_factory=CostModel)
    operators: tuple[str, ...] = OPERATORS

    def __post_init__(self):
        if self.tree_shape not in (BUSHY, LEFT_DEEP):
            raise ValueError(f"unknown tree shape {self.tree_shape!r}")
        if not self.operators or any(op not in OPERATORS for op in self.operators):
            raise ValueError(f"operators must be a non-empty subset of {OPERATORS}")

    def to_json(self) -> dict:
        return {
            "tree_shape": self.tree_shape,
            "allow_cross_products": self.allow_cross_products,
            "operators": list(self.operators),
            "cost_model": {f.name: getattr(self.cost_model, f.name) for f in fields(CostModel)},
        }

    @classmethod
    def from_json(cls, d: dict) -> "OptimizerConfig":
        return cls(
            tree_shape=d.get("tree_shape", BUSHY),
            allow_cross_products=bool(d.get("allow_cross_products", False)),
            cost_model=CostModel(**d.get("cost_model", {})),
            operators=tuple(d.get("operators", OPERATORS)),
        )


class CardinalitySource:
    """Γ-first cardinalities for alias sets, falling back to ``estimate``.

    ``scan_rows`` gives the unfiltered size of each base relation (what a scan
    reads); ``estimate`` must accept single-alias sets too.
    """

    def __init__(self, query: QuerySpec, estimate: Callable[[frozenset], float],
                 scan_rows: Mapping[str, float], gamma: Mapping | None = None):
        self.query = query
        self.estimate = estimate
        self.scan_rows = dict(scan_rows)
        self.gamma = gamma or {}
        self._keys: dict[frozenset, tuple] = {}

    @classmethod
    def from_stats(cls, query: QuerySpec, stats, gamma=None) -> "CardinalitySource":
        est = HistogramEstimator(query, stats)
        return cls(query, est.cardinality, est.base_rows, gamma)

    @classmethod
    def from_mapping(cls, query: QuerySpec, cards: Mapping, scan_rows: Mapping[str, float],
                     gamma=None) -> "CardinalitySource":
        """Cardinalities from an explicit table keyed by canonical join keys."""

        def lookup(aliases):
            key = query.join_key(aliases)
            try:
                return float(cards[key])
            except KeyError:
                raise PlanError(f"no cardinality for {key}") from None

        return cls(query, lookup, scan_rows, gamma)

    def key(self, aliases: frozenset) -> tuple:
        k = self._keys.get(aliases)
        if k is None:
            k = self._keys[aliases] = self.query.join_key(aliases)
        return k

    def validated(self, aliases: Iterable[str]) -> bool:
        return self.key(frozenset(aliases)) in self.gamma

    def __call__(self, aliases: Iterable[str]) -> float:
        aliases = frozenset(aliases)
        key = self.key(aliases)
        if key in self.gamma:
            return float(self.gamma[key])
        return float(self.estimate(aliases))

    def with_gamma(self, gamma) -> "CardinalitySource":
        return CardinalitySource(self.query, self.estimate, self.scan_rows, gamma)


def node_cost(node: Node, card: CardinalitySource, cm: CostModel) -> float:
    if isinstance(node, Scan):
        try:
            return cm.c_scan_row * card.scan_rows[node.alias]
        except KeyError:
            raise PlanError(f"no scan size for {node.alias!r}") from None
    return cm.join_cost(node.op or HASH, card(node.left.leaves), card(node.right.leaves),
                        card(node.leaves))


def plan_cost(plan: Node, card: CardinalitySource, cost_model: CostModel | None = None) -> float:
    """Sum of per-operator costs; every operator is monotone in its cardinalities."""
    cm = cost_model or CostModel()
    total = sum(node_cost(Scan(a), card, cm) for a in plan.leaves)
    return total + sum(node_cost(j, card, cm) for j in join_nodes(plan))


@dataclass
class _Entry:
    cost: float
    encoding: tuple
    ops: tuple
    plan: Node

    def rank(self):
        return (self.cost, self.encoding, self.ops)


def optimize(query: QuerySpec, card: CardinalitySource, config: OptimizerConfig | None = None) -> Node:
    """Cheapest plan by exhaustive DP over connected alias subsets.

    Ties go to the lexicographically smallest tree encoding, then operator
    tag order, so equal inputs always give the same plan.
    """
    config = config or OptimizerConfig()
    cm = config.cost_model
    aliases = sorted(query.aliases)
    n = len(aliases)
    if n == 0:
        raise QueryError("query has no relations")
    op_rank = {op: i for i, op in enumerate(OPERATORS)}

    adj = [0] * n
    for i, a in enumerate(aliases):
        for j, b in enumerate(aliases):
            if i != j and frozenset((a, b)) in query.edges:
                adj[i] |= 1 << j

    def neighbours(mask):
        out = 0
        for i in range(n):
            if mask >> i & 1:
                out |= adj[i]
        return out & ~mask

    def members(mask):
        return frozenset(aliases[i] for i in range(n) if mask >> i & 1)

    full = (1 << n) - 1
    best: dict[int, _Entry] = {}
    cards: dict[int, float] = {}
    for i, a in enumerate(aliases):
        m = 1 << i
        best[m] = _Entry(cm.c_scan_row * card.scan_rows[a], (), (), Scan(a))
        cards[m] = card(frozenset((a,)))

    by_size = sorted(range(1, full + 1), key=lambda m: (bin(m).count("1"), m))
    left_deep = config.tree_shape == LEFT_DEEP
    for mask in by_size:
        if mask & (mask - 1) == 0:
            continue
        winner: _Entry | None = None
        nxt = (mask - 1) & mask
        while nxt:
            lsub, nxt = nxt, (nxt - 1) & mask
            other = mask ^ lsub
            l, r = best.get(lsub), best.get(other)
            if l is None or r is None:
                continue
            if left_deep and lsub & (lsub - 1) and other & (other - 1):
                continue
            if not config.allow_cross_products and not (neighbours(lsub) & other):
                continue
            if mask not in cards:
                cards[mask] = card(members(mask))
            out = cards[mask]
            lc, rc = cards[lsub], cards[other]
            enc = l.encoding + r.encoding + (l.plan.leaves + r.plan.leaves,)
            for op in config.operators:
                cost = l.cost + r.cost + cm.join_cost(op, lc, rc, out)
                cand = _Entry(cost, enc, l.ops + r.ops + (op_rank[op],), None)
                if winner is None or cand.rank() < winner.rank():
                    cand.plan = (l.plan, r.plan, op)
                    winner = cand
        if winner is not None:
            lp, rp, op = winner.plan
            winner.plan = Join(lp, rp, op)
            best[mask] = winner
    if full not in best:
        raise QueryError("join graph is disconnected and cross products are disabled")
    return best[full].plan


def explain_plan(plan: Node, query: QuerySpec, card: CardinalitySource,
                 cost_model: CostModel | None = None) -> str:
    cm = cost_model or CostModel()

    def annotate(node):
        if isinstance(node, Scan):
            return {"label": query.leaf_label(node.alias), "rows": card(node.leaves),
                    "cost": node_cost(node, card, cm)}
        sub = sum(node_cost(Scan(a), card, cm) for a in node.leaves)
        sub += sum(node_cost(j, card, cm) for j in join_nodes(node))
        return {"rows": card(node.leaves), "cost": sub, "gamma": card.validated(node.leaves)}

    return explain(plan, annotate)

