"""Join trees, physical plans, transformation classification and plan coverage.

A plan is a binary tree of :class:`Scan` leaves and :class:`Join` nodes.  The
left child of a join is its outer (probe) input and the right child its inner
(build) input, so exchanging children also exchanges build and probe sides.
Frozen dataclasses give structural equality and hashing for free; that
equality is the one the re-optimization loop uses to detect a fixed point.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Callable, Iterable, Iterator, Union

from .errors import PlanError

HASH = "hash"
NESTED_LOOP = "nl"
OPERATORS = (HASH, NESTED_LOOP)
_OP_LABEL = {HASH: "HashJoin", NESTED_LOOP: "NestedLoop", None: "Join"}


@dataclass(frozen=True)
class Scan:
    alias: str

    @cached_property
    def leaves(self) -> tuple[str, ...]:
        return (self.alias,)


@dataclass(frozen=True)
class Join:
    left: "Node"
    right: "Node"
    op: str | None = HASH

    def __post_init__(self):
        if set(self.left.leaves) & set(self.right.leaves):
            raise PlanError(f"join inputs share relations: {self.left.leaves} / {self.right.leaves}")
        if self.op is not None and self.op not in OPERATORS:
            raise PlanError(f"unknown join operator {self.op!r}")

    @cached_property
    def leaves(self) -> tuple[str, ...]:
        return self.left.leaves + self.right.leaves


Node = Union[Scan, Join]


class Transformation(str, enum.Enum):
    LOCAL = "local"
    GLOBAL = "global"


def join_nodes(plan: Node) -> list[Join]:
    """Join nodes in bottom-up, left-to-right (post-) order."""
    out: list[Join] = []

    def walk(n):
        if isinstance(n, Join):
            walk(n.left)
            walk(n.right)
            out.append(n)

    walk(plan)
    return out


def tree_encoding(plan: Node) -> tuple[tuple[str, ...], ...]:
    """Ordered leaf sequence of every join, bottom-up and left-to-right.

    ``((A⋈B)⋈C)⋈D`` encodes as ``(AB, ABC, ABCD)``.
    """
    return tuple(j.leaves for j in join_nodes(plan))


def join_sets(plan: Node) -> list[frozenset[str]]:
    return [frozenset(j.leaves) for j in join_nodes(plan)]


def op_tags(plan: Node) -> tuple[str, ...]:
    return tuple(j.op for j in join_nodes(plan))


def join_tree(plan: Node) -> Node:
    """The logical skeleton of ``plan`` (operator tags dropped)."""
    if isinstance(plan, Scan):
        return plan
    return Join(join_tree(plan.left), join_tree(plan.right), None)


def structurally_equivalent(p: Node, q: Node) -> bool:
    return join_tree(p) == join_tree(q)


def classify_transformation(t: Node, t2: Node) -> Transformation:
    if sorted(t.leaves) != sorted(t2.leaves):
        raise PlanError(f"plans cover different relations: {sorted(t.leaves)} vs {sorted(t2.leaves)}")
    a = sorted(tuple(sorted(s)) for s in join_sets(t))
    b = sorted(tuple(sorted(s)) for s in join_sets(t2))
    return Transformation.LOCAL if a == b else Transformation.GLOBAL


def covered(plan: Node, plans: Iterable[Node]) -> bool:
    seen: set[frozenset[str]] = set()
    for p in plans:
        seen.update(join_sets(p))
    return all(s in seen for s in join_sets(plan))


def local_transformations(plan: Node, operators=OPERATORS) -> Iterator[Node]:
    """Every plan reachable by child exchanges and operator changes.

    The input plan itself is among the results; no plan is produced twice.
    """

    def variants(n):
        if isinstance(n, Scan):
            yield n
            return
        for l, r in itertools.product(list(variants(n.left)), list(variants(n.right))):
            for a, b in ((l, r), (r, l)):
                for op in operators:
                    yield Join(a, b, op)

    yield from variants(plan)


def left_deep(aliases: Iterable[str], op: str | None = HASH) -> Node:
    it = iter(aliases)
    node: Node = Scan(next(it))
    for a in it:
        node = Join(node, Scan(a), op)
    return node


def is_linear(plan: Node) -> bool:
    """True when every join has at least one base-relation input."""
    return all(isinstance(j.left, Scan) or isinstance(j.right, Scan) for j in join_nodes(plan))


def to_json(plan: Node) -> dict:
    if isinstance(plan, Scan):
        return {"scan": plan.alias}
    return {"op": plan.op, "left": to_json(plan.left), "right": to_json(plan.right)}


def from_json(d: dict) -> Node:
    if "scan" in d:
        return Scan(d["scan"])
    return Join(from_json(d["left"]), from_json(d["right"]), d.get("op"))


def render_text(plan: Node) -> str:
    """Compact one-line form, e.g. ``((R1 ⋈h R2) ⋈n R3)``."""
    if isinstance(plan, Scan):
        return plan.alias
    tag = {HASH: "h", NESTED_LOOP: "n"}.get(plan.op, "")
    return f"({render_text(plan.left)} ⋈{tag} {render_text(plan.right)})"


def explain(plan: Node, annotate: Callable[[Node], dict], indent: int = 2) -> str:
    """Indented EXPLAIN text.

    ``annotate(node)`` returns a dict with ``label``, ``rows`` and ``cost`` and
    optionally ``gamma`` (truthy when the cardinality came from validated
    statistics).
    """
    lines: list[str] = []

    def walk(n, depth):
        info = annotate(n)
        pad = " " * (indent * depth)
        arrow = "-> " if depth else ""
        if isinstance(n, Scan):
            head = f"Scan {info.get('label', n.alias)}"
        else:
            head = _OP_LABEL[n.op]
        marker = " [Γ]" if info.get("gamma") else ""
        lines.append(f"{pad}{arrow}{head}  (rows={info['rows']:.6g} cost={info['cost']:.6g}){marker}")
        if isinstance(n, Join):
            walk(n.left, depth + 1)
            walk(n.right, depth + 1)

    walk(plan, 0)
    return "\n".join(lines)


def with_op(plan: Join, op: str) -> Join:
    return replace(plan, op=op)


class Gamma(dict):
    """Validated cardinalities keyed by canonical (order-free) join keys."""

    def __init__(self, items=()):
        super().__init__()
        self.update(items)

    def __setitem__(self, key, value):
        key = tuple(sorted(key))
        value = float(value)
        if value < 0:
            raise ValueError(f"cardinality must be non-negative, got {value} for {key}")
        super().__setitem__(key, value)

    def update(self, other=(), **kw):
        items = other.items() if hasattr(other, "items") else other
        for k, v in items:
            self[k] = v

    def copy(self) -> "Gamma":
        g = Gamma()
        g.update(self)
        return g

    def to_json(self) -> list:
        return [{"join": list(k), "rows": v} for k, v in sorted(self.items())]

    @classmethod
    def from_json(cls, items) -> "Gamma":
        g = cls()
        for item in items:
            g[tuple(item["join"])] = item["rows"]
        return g
