"""Conjunctive select-join queries and their canonical join keys."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable

from .errors import QueryError

Column = tuple[str, str]  # (alias, column)
JoinKey = tuple[str, ...]  # sorted leaf labels


@dataclass(frozen=True)
class QuerySpec:
    """A SELECT COUNT(*) query with equality selections and equi-joins.

    Instances are always canonical: relations sorted by alias, selections
    sorted, each join predicate stored with its smaller side first.  Use
    :meth:`create` rather than the constructor when building by hand.
    """

    relations: tuple[tuple[str, str], ...]
    selections: tuple[tuple[str, str, int], ...] = ()
    joins: tuple[tuple[Column, Column], ...] = ()

    @classmethod
    def create(cls, relations, selections=(), joins=()) -> "QuerySpec":
        rels = []
        for r in relations:
            if isinstance(r, str):
                rels.append((r, r))
            else:
                name, alias = r
                rels.append((name, alias))
        rels.sort(key=lambda r: r[1])
        aliases = [a for _, a in rels]
        if len(set(aliases)) != len(aliases):
            raise QueryError(f"duplicate relation alias in {aliases}")
        known = set(aliases)

        sels = set()
        for alias, col, const in selections:
            if alias not in known:
                raise QueryError(f"selection references unknown relation {alias!r}")
            sels.add((alias, col, int(const)))

        js = set()
        for left, right in joins:
            left, right = tuple(left), tuple(right)
            for a, _ in (left, right):
                if a not in known:
                    raise QueryError(f"join references unknown relation {a!r}")
            if left == right:
                continue
            js.add((min(left, right), max(left, right)))
        return cls(tuple(rels), tuple(sorted(sels)), tuple(sorted(js)))

    @property
    def aliases(self) -> tuple[str, ...]:
        return tuple(a for _, a in self.relations)

    def relation_of(self, alias: str) -> str:
        for name, a in self.relations:
            if a == alias:
                return name
        raise QueryError(f"unknown relation alias {alias!r}")

    def selections_on(self, alias: str) -> list[tuple[str, int]]:
        return [(c, v) for a, c, v in self.selections if a == alias]

    @cached_property
    def equivalence_classes(self) -> tuple[tuple[Column, ...], ...]:
        """Columns grouped by transitive closure of the join predicates."""
        parent: dict[Column, Column] = {}

        def find(x):
            parent.setdefault(x, x)
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for left, right in self.joins:
            ra, rb = find(left), find(right)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
        groups: dict[Column, list[Column]] = {}
        for col in parent:
            groups.setdefault(find(col), []).append(col)
        return tuple(sorted(tuple(sorted(g)) for g in groups.values()))

    @cached_property
    def edges(self) -> frozenset[frozenset[str]]:
        """Alias pairs joinable after equivalence-class expansion."""
        out = set()
        for cls_ in self.equivalence_classes:
            members = sorted({a for a, _ in cls_})
            for i, a in enumerate(members):
                for b in members[i + 1:]:
                    out.add(frozenset((a, b)))
        return frozenset(out)

    def connected(self, left: Iterable[str], right: Iterable[str]) -> bool:
        right = set(right)
        return any(frozenset((a, b)) in self.edges for a in left for b in right)

    def is_connected(self, aliases: Iterable[str] | None = None) -> bool:
        nodes = set(self.aliases if aliases is None else aliases)
        if not nodes:
            return True
        start = min(nodes)
        seen, stack = {start}, [start]
        while stack:
            a = stack.pop()
            for b in nodes - seen:
                if frozenset((a, b)) in self.edges:
                    seen.add(b)
                    stack.append(b)
        return seen == nodes

    def restrict(self, aliases: Iterable[str]) -> "QuerySpec":
        """The sub-query over ``aliases``, keeping equalities implied through
        relations that are left out."""
        keep = set(aliases)
        rels = [r for r in self.relations if r[1] in keep]
        sels = [s for s in self.selections if s[0] in keep]
        joins = []
        for cls_ in self.equivalence_classes:
            inside = [c for c in cls_ if c[0] in keep]
            joins.extend(zip(inside, inside[1:]))
        return QuerySpec.create(rels, sels, joins)

    def leaf_label(self, alias: str) -> str:
        name = self.relation_of(alias)
        head = name if name == alias else f"{alias}:{name}"
        sels = self.selections_on(alias)
        if not sels:
            return head
        return head + "[" + ",".join(f"{c}={v}" for c, v in sels) + "]"

    def join_key(self, aliases: Iterable[str]) -> JoinKey:
        """Canonical, order-free key for the join of ``aliases``."""
        return tuple(sorted(self.leaf_label(a) for a in aliases))

    def to_sql(self) -> str:
        rels = ", ".join(n if n == a else f"{n} {a}" for n, a in self.relations)
        preds = [f"{a}.{c} = {v}" for a, c, v in self.selections]
        preds += [f"{l[0]}.{l[1]} = {r[0]}.{r[1]}" for l, r in self.joins]
        text = f"SELECT COUNT(*) FROM {rels}"
        if preds:
            text += " WHERE " + " AND ".join(preds)
        return text

    def to_json(self) -> dict:
        return {
            "relations": [list(r) for r in self.relations],
            "selections": [list(s) for s in self.selections],
            "joins": [[list(l), list(r)] for l, r in self.joins],
        }

    @classmethod
    def from_json(cls, d: dict) -> "QuerySpec":
        return cls.create(
            [tuple(r) for r in d["relations"]],
            [tuple(s) for s in d.get("selections", [])],
            [(tuple(l), tuple(r)) for l, r in d.get("joins", [])],
        )
