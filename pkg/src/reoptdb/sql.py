"""Parser for the conjunctive COUNT(*) dialect.

Grammar::

    query := SELECT COUNT ( * ) FROM rel (, rel)* [WHERE pred (AND pred)*] [;]
    rel   := ident [[AS] ident]
    pred  := ident . ident = integer
           | ident . ident = ident . ident
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import ParseError
from .query import QuerySpec

_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<num>-?\d+)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op><>|!=|<=|>=|[=<>])"
    r"|(?P<punct>[,.()*;])"
    r")"
)
_KEYWORDS = {"SELECT", "COUNT", "FROM", "WHERE", "AND", "OR", "AS", "NOT"}


@dataclass
class Token:
    kind: str  # num | ident | kw | op | punct | eof
    text: str
    pos: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            bad = text[pos:].lstrip()
            at = n - len(bad)
            raise ParseError("unexpected character", at, bad[:1])
        kind = m.lastgroup
        value = m.group(kind)
        start = m.start(kind)
        if kind == "ident" and value.upper() in _KEYWORDS:
            tokens.append(Token("kw", value.upper(), start))
        else:
            tokens.append(Token(kind, value, start))
        pos = m.end()
    tokens.append(Token("eof", "", n))
    return tokens


class _Parser:
    def __init__(self, text):
        self.toks = tokenize(text)
        self.i = 0

    @property
    def cur(self) -> Token:
        return self.toks[self.i]

    def advance(self) -> Token:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, kind, text=None) -> Token:
        tok = self.cur
        if tok.kind != kind or (text is not None and tok.text != text):
            want = text or kind
            raise ParseError(f"expected {want}", tok.pos, tok.text or "<end>")
        return self.advance()

    def accept(self, kind, text=None) -> bool:
        tok = self.cur
        if tok.kind == kind and (text is None or tok.text == text):
            self.i += 1
            return True
        return False

    def parse(self) -> QuerySpec:
        self.expect("kw", "SELECT")
        self.expect("kw", "COUNT")
        self.expect("punct", "(")
        self.expect("punct", "*")
        self.expect("punct", ")")
        self.expect("kw", "FROM")
        rels = [self.relation()]
        while self.accept("punct", ","):
            rels.append(self.relation())
        sels, joins = [], []
        if self.accept("kw", "WHERE"):
            self.predicate(sels, joins)
            while True:
                if self.cur.kind == "kw" and self.cur.text == "OR":
                    raise ParseError("disjunction (OR) is not supported; only AND-connected equalities",
                                     self.cur.pos, self.cur.text)
                if not self.accept("kw", "AND"):
                    break
                self.predicate(sels, joins)
        self.accept("punct", ";")
        if self.cur.kind != "eof":
            if self.cur.kind == "kw" and self.cur.text == "OR":
                raise ParseError("disjunction (OR) is not supported; only AND-connected equalities",
                                 self.cur.pos, self.cur.text)
            raise ParseError("unexpected trailing input", self.cur.pos, self.cur.text)

        aliases = {a for _, a in rels}
        for alias, _, _ in sels:
            self._check_alias(alias, aliases)
        for l, r in joins:
            self._check_alias(l[0], aliases)
            self._check_alias(r[0], aliases)
        return QuerySpec.create(rels, sels, joins)

    @staticmethod
    def _check_alias(alias, aliases):
        if alias not in aliases:
            raise ParseError(f"unknown relation reference {alias!r}", None, alias)

    def relation(self):
        name = self.expect("ident").text
        alias = name
        if self.accept("kw", "AS"):
            alias = self.expect("ident").text
        elif self.cur.kind == "ident":
            alias = self.advance().text
        return (name, alias)

    def column(self):
        tok = self.cur
        if tok.kind == "num":
            raise ParseError("constant must appear on the right-hand side", tok.pos, tok.text)
        rel = self.expect("ident").text
        self.expect("punct", ".")
        col = self.expect("ident").text
        return rel, col

    def predicate(self, sels, joins):
        if self.cur.kind == "kw" and self.cur.text == "NOT":
            raise ParseError("negation is not supported", self.cur.pos, self.cur.text)
        left = self.column()
        op = self.cur
        if op.kind == "op" and op.text != "=":
            raise ParseError("only equality predicates are supported", op.pos, op.text)
        self.expect("op", "=")
        if self.cur.kind == "num":
            sels.append((left[0], left[1], int(self.advance().text)))
        else:
            joins.append((left, self.column()))


def parse(text: str) -> QuerySpec:
    """Parse a conjunctive ``SELECT COUNT(*)`` query into a :class:`QuerySpec`."""
    return _Parser(text).parse()
