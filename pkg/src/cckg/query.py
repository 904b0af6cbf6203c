"""A SPARQL subset: PREFIX, SELECT, basic graph patterns, FILTER, ORDER BY, LIMIT.

Supported grammar::

    PREFIX pfx: <iri>
    SELECT [DISTINCT] ?a ?b | *
    WHERE { s p o . s p o . FILTER(?v = term) FILTER(?v != term) FILTER(contains(?v, "text")) }
    [ORDER BY ?v] [LIMIT n]

Results are always de-duplicated.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

from .namespaces import DEFAULT, Namespaces
from .rdf import RDF, XSD, XSD_DECIMAL, Graph, Iri, Literal, RDFError, Term


class QueryError(ValueError):
    pass


class QuerySyntaxError(QueryError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class Var:
    name: str

    def n3(self) -> str:
        return "?" + self.name


Node = Union[Var, Iri, Literal]


@dataclass(frozen=True)
class TriplePattern:
    subject: Node
    predicate: Node
    object: Node

    def vars(self) -> list[str]:
        return [n.name for n in (self.subject, self.predicate, self.object) if isinstance(n, Var)]


@dataclass(frozen=True)
class Filter:
    var: str
    op: str  # "=", "!=", "contains"
    value: Term

    def holds(self, term: Term) -> bool:
        if self.op == "=":
            return term == self.value
        if self.op == "!=":
            return term != self.value
        return str(self.value) in str(term)


@dataclass(frozen=True)
class Query:
    prefixes: dict = field(default_factory=dict, compare=True, hash=False)
    select: Optional[tuple[str, ...]] = None  # None means SELECT *
    patterns: tuple[TriplePattern, ...] = ()
    filters: tuple[Filter, ...] = ()
    order_by: Optional[str] = None
    limit: Optional[int] = None

    def pattern_vars(self) -> list[str]:
        out: list[str] = []
        for p in self.patterns:
            for v in p.vars():
                if v not in out:
                    out.append(v)
        return out

    @property
    def header(self) -> list[str]:
        return list(self.select) if self.select is not None else self.pattern_vars()


# --------------------------------------------------------------------------
# lexer / parser
# --------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>\#[^\n]*)
  | (?P<iri><[^<>"{}|^`\\\s]*>)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<var>[?$][A-Za-z_][A-Za-z0-9_]*)
  | (?P<number>[+-]?(?:\d+\.\d+|\.\d+|\d+))
  | (?P<pname>(?:[A-Za-z][A-Za-z0-9_-]*)?:(?:[A-Za-z0-9_](?:[A-Za-z0-9_-]|\.(?=[A-Za-z0-9_-]))*)?)
  | (?P<lang>@[a-zA-Z]+(?:-[a-zA-Z0-9]+)*)
  | (?P<word>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>\^\^|!=|[{}().,*=])
    """,
    re.VERBOSE,
)

_STRING_ESCAPES = {"t": "\t", "n": "\n", "r": "\r", "b": "\b", "f": "\f", '"': '"', "'": "'", "\\": "\\"}


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise QuerySyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind not in ("ws", "comment"):
            toks.append(_Tok(kind, m.group(), line, pos - line_start + 1))
        chunk = m.group()
        if "\n" in chunk:
            line += chunk.count("\n")
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    # report end-of-input errors just past the last real token, not on trailing blank lines
    if toks:
        last = toks[-1]
        toks.append(_Tok("eof", "", last.line, last.col + len(last.text)))
    else:
        toks.append(_Tok("eof", "", 1, 1))
    return toks


def _unescape(body: str) -> str:
    out, i = [], 0
    while i < len(body):
        ch = body[i]
        if ch == "\\" and i + 1 < len(body):
            out.append(_STRING_ESCAPES.get(body[i + 1], body[i + 1]))
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0
        self.prefixes: dict[str, str] = {}

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def error(self, message: str, tok: Optional[_Tok] = None):
        tok = tok or self.tok
        raise QuerySyntaxError(message, tok.line, tok.col)

    def next(self) -> _Tok:
        tok = self.tok
        self.i += 1
        return tok

    def is_word(self, word: str) -> bool:
        return self.tok.kind == "word" and self.tok.text.upper() == word

    def expect_word(self, word: str) -> None:
        if not self.is_word(word):
            self.error(f"expected {word}, found {self.tok.text or 'end of input'!r}")
        self.next()

    def expect_op(self, op: str) -> None:
        if self.tok.kind != "op" or self.tok.text != op:
            self.error(f"expected '{op}', found {self.tok.text or 'end of input'!r}")
        self.next()

    def make_iri(self, value: str, tok: _Tok) -> Iri:
        try:
            return Iri(value)
        except RDFError as exc:
            self.error(str(exc), tok)

    def pname(self, tok: _Tok) -> Iri:
        prefix, _, local = tok.text.partition(":")
        if prefix not in self.prefixes:
            self.error(f"unknown prefix '{prefix}:'", tok)
        return self.make_iri(self.prefixes[prefix] + local, tok)

    def parse(self) -> Query:
        while self.is_word("PREFIX"):
            self.next()
            tok = self.next()
            if tok.kind != "pname" or not tok.text.endswith(":"):
                self.error("expected prefix name like 'cc:'", tok)
            iri_tok = self.next()
            if iri_tok.kind != "iri":
                self.error("expected <iri> after prefix name", iri_tok)
            self.prefixes[tok.text[:-1]] = self.make_iri(iri_tok.text[1:-1], iri_tok).value

        self.expect_word("SELECT")
        if self.is_word("DISTINCT"):
            self.next()
        select: Optional[list[str]]
        if self.tok.kind == "op" and self.tok.text == "*":
            self.next()
            select = None
        else:
            select = []
            while self.tok.kind == "var":
                select.append(self.next().text[1:])
            if not select:
                self.error("expected variables or '*' after SELECT")

        self.expect_word("WHERE")
        self.expect_op("{")
        patterns, filters = [], []
        while not (self.tok.kind == "op" and self.tok.text == "}"):
            if self.tok.kind == "eof":
                self.error("expected '}' to close WHERE block")
            if self.is_word("FILTER"):
                filters.append(self.filter())
            else:
                patterns.append(self.triple_pattern())
            if self.tok.kind == "op" and self.tok.text == ".":
                self.next()
        self.next()

        order_by = limit = None
        if self.is_word("ORDER"):
            self.next()
            self.expect_word("BY")
            tok = self.next()
            if tok.kind != "var":
                self.error("expected variable after ORDER BY", tok)
            order_by = tok.text[1:]
        if self.is_word("LIMIT"):
            self.next()
            tok = self.next()
            if tok.kind != "number" or not tok.text.isdigit():
                self.error("expected non-negative integer after LIMIT", tok)
            limit = int(tok.text)
        if self.tok.kind != "eof":
            self.error(f"unexpected {self.tok.text!r} after query")

        q = Query(dict(self.prefixes), tuple(select) if select is not None else None, tuple(patterns), tuple(filters), order_by, limit)
        known = set(q.pattern_vars())
        for name in (*(select or ()), *(f.var for f in filters), *([order_by] if order_by else [])):
            if name not in known:
                raise QueryError(f"variable ?{name} does not appear in any triple pattern")
        return q

    def term(self, position: str) -> Node:
        tok = self.next()
        if tok.kind == "var":
            return Var(tok.text[1:])
        if tok.kind == "iri":
            return self.make_iri(tok.text[1:-1], tok)
        if tok.kind == "pname":
            return self.pname(tok)
        if tok.kind == "word" and tok.text == "a" and position == "predicate":
            return Iri(RDF + "type")
        if position == "object":
            lit = self.literal(tok)
            if lit is not None:
                return lit
        self.error(f"expected {position}, found {tok.text or 'end of input'!r}", tok)

    def literal(self, tok: _Tok) -> Optional[Literal]:
        try:
            if tok.kind == "number":
                return Literal(tok.text, XSD_DECIMAL)
            if tok.kind == "word" and tok.text in ("true", "false"):
                return Literal(tok.text, XSD + "boolean")
            if tok.kind != "string":
                return None
            lexical = _unescape(tok.text[1:-1])
            if self.tok.kind == "lang":
                return Literal(lexical, language=self.next().text[1:])
            if self.tok.kind == "op" and self.tok.text == "^^":
                self.next()
                dt_tok = self.next()
                if dt_tok.kind == "iri":
                    dt = dt_tok.text[1:-1]
                elif dt_tok.kind == "pname":
                    dt = self.pname(dt_tok).value
                else:
                    self.error("expected datatype IRI after ^^", dt_tok)
                return Literal(lexical, dt)
            return Literal(lexical)
        except RDFError as exc:
            self.error(str(exc), tok)

    def triple_pattern(self) -> TriplePattern:
        return TriplePattern(self.term("subject"), self.term("predicate"), self.term("object"))

    def filter(self) -> Filter:
        self.next()  # FILTER
        self.expect_op("(")
        if self.is_word("CONTAINS"):
            self.next()
            self.expect_op("(")
            wrapped = self.is_word("STR")
            if wrapped:
                self.next()
                self.expect_op("(")
            var_tok = self.next()
            if var_tok.kind != "var":
                self.error("expected variable in contains()", var_tok)
            if wrapped:
                self.expect_op(")")
            self.expect_op(",")
            lit_tok = self.next()
            if lit_tok.kind != "string":
                self.error("expected string literal in contains()", lit_tok)
            value = self.literal(lit_tok)
            self.expect_op(")")
            result = Filter(var_tok.text[1:], "contains", value)
        else:
            var_tok = self.next()
            if var_tok.kind != "var":
                self.error("expected variable in FILTER", var_tok)
            op_tok = self.next()
            if op_tok.kind != "op" or op_tok.text not in ("=", "!="):
                self.error("expected '=' or '!=' in FILTER", op_tok)
            value = self.term("object")
            if isinstance(value, Var):
                self.error("FILTER compares a variable with a constant", op_tok)
            result = Filter(var_tok.text[1:], op_tok.text, value)
        self.expect_op(")")
        return result


def parse_query(text: str) -> Query:
    return _Parser(text).parse()


def format_query(q: Query) -> str:
    """Debug emitter; ``parse_query(format_query(q)) == q``."""
    lines = [f"PREFIX {p}: <{iri}>" for p, iri in sorted(q.prefixes.items())]
    lines.append("SELECT " + (" ".join("?" + v for v in q.select) if q.select is not None else "*"))
    lines.append("WHERE {")
    for p in q.patterns:
        lines.append(f"  {p.subject.n3()} {p.predicate.n3()} {p.object.n3()} .")
    for f in q.filters:
        if f.op == "contains":
            lines.append(f"  FILTER(contains(?{f.var}, {f.value.n3()}))")
        else:
            lines.append(f"  FILTER(?{f.var} {f.op} {f.value.n3()})")
    lines.append("}")
    if q.order_by:
        lines.append(f"ORDER BY ?{q.order_by}")
    if q.limit is not None:
        lines.append(f"LIMIT {q.limit}")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# evaluation
# --------------------------------------------------------------------------


@dataclass
class ResultTable:
    header: list[str]
    rows: list[dict]

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, var: str) -> list[Term]:
        return [r[var] for r in self.rows]

    def to_text(self, prefixes: Optional[dict] = None) -> str:
        def cell(term: Term) -> str:
            if isinstance(term, Literal):
                return term.lexical
            for p, base in sorted((prefixes or {}).items(), key=lambda kv: -len(kv[1])):
                if term.value.startswith(base):
                    return f"{p}:{term.value[len(base):]}"
            return term.n3()

        grid = [self.header] + [[cell(r[v]) for v in self.header] for r in self.rows]
        widths = [max(len(row[i]) for row in grid) for i in range(len(self.header))]
        lines = ["  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in grid]
        lines.insert(1, "  ".join("-" * w for w in widths))
        return "\n".join(lines) + "\n"

    def to_tsv(self) -> str:
        lines = ["\t".join("?" + v for v in self.header)]
        lines += ["\t".join(r[v].n3() for v in self.header) for r in self.rows]
        return "\n".join(lines) + "\n"

    def to_json_lines(self) -> str:
        return "".join(
            json.dumps({v: str(r[v]) for v in self.header}, ensure_ascii=False) + "\n" for r in self.rows
        )


def _resolve(node: Node, binding: dict):
    if isinstance(node, Var):
        return binding.get(node.name)
    return node


def _extend(pattern: TriplePattern, triple, binding: dict) -> Optional[dict]:
    new = None
    for node, value in zip((pattern.subject, pattern.predicate, pattern.object), triple):
        if not isinstance(node, Var):
            continue
        current = (new or binding).get(node.name)
        if current is None:
            new = dict(new or binding)
            new[node.name] = value
        elif current != value:
            return None
    return new if new is not None else binding


def _solutions(patterns: list[TriplePattern], graph: Graph, binding: dict) -> Iterator[dict]:
    if not patterns:
        yield binding
        return
    # most selective pattern first under the current bindings
    costs = [graph.count(*(_resolve(n, binding) for n in (p.subject, p.predicate, p.object))) for p in patterns]
    idx = min(range(len(patterns)), key=costs.__getitem__)
    if costs[idx] == 0:
        return
    pat = patterns[idx]
    rest = patterns[:idx] + patterns[idx + 1 :]
    s, p, o = (_resolve(n, binding) for n in (pat.subject, pat.predicate, pat.object))
    for triple in graph.triples(s, p, o):
        extended = _extend(pat, triple, binding)
        if extended is not None:
            yield from _solutions(rest, graph, extended)


def order_and_project(q: Query, solutions: list[dict]) -> ResultTable:
    """Shared tail of evaluation: order, project, de-duplicate, limit."""
    header = q.header
    all_vars = sorted(q.pattern_vars())

    def key(sol):
        primary = sol[q.order_by].n3().encode("utf-8") if q.order_by else b""
        return (
            primary,
            tuple(sol[v].n3().encode("utf-8") for v in header),
            tuple(sol[v].n3().encode("utf-8") for v in all_vars),
        )

    rows, seen = [], set()
    for sol in sorted(solutions, key=key):
        if q.limit is not None and len(rows) >= q.limit:
            break
        row = tuple(sol[v] for v in header)
        if row in seen:
            continue
        seen.add(row)
        rows.append(dict(zip(header, row)))
    return ResultTable(header, rows)


def evaluate(q: Query, graph: Graph) -> ResultTable:
    if not q.patterns:
        return ResultTable(q.header, [])
    sols = [
        s
        for s in _solutions(list(q.patterns), graph, {})
        if all(f.holds(s[f.var]) for f in q.filters)
    ]
    return order_and_project(q, sols)


# --------------------------------------------------------------------------
# canned queries for the two reference use cases
# --------------------------------------------------------------------------


def cves_for_service(service: Iri, ns: Namespaces = DEFAULT) -> Query:
    """CVEs linked to any sub-component of ``service``."""
    return parse_query(
        f"""
        PREFIX cc: <{ns.schema}>
        SELECT ?c ?cve ?id
        WHERE {{
          {service.n3()} cc:hasComponent ?c .
          ?c cc:componentImpactedByCVE ?cve .
          ?cve cc:cveId ?id .
        }}
        ORDER BY ?id
        """
    )


def cves_by_cwe(ns: Namespaces = DEFAULT) -> Query:
    """Every CVE paired with its CWE, ordered by CWE id so a weakness's CVEs are adjacent."""
    return parse_query(
        f"""
        PREFIX cc: <{ns.schema}>
        SELECT ?wid ?id ?cwe ?cve
        WHERE {{
          ?cve cc:hasWeakness ?cwe .
          ?cwe cc:cweId ?wid .
          ?cve cc:cveId ?id .
        }}
        ORDER BY ?wid
        """
    )
