"""Minimal RDF model: IRIs, literals, an SPO/POS/OSP indexed graph, N-Triples and DOT.

Blank nodes are deliberately unsupported; every node is an IRI or a literal.
"""

from __future__ import annotations

import re
from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Union

RDF = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
RDFS = "http://www.w3.org/2000/01/rdf-schema#"
OWL = "http://www.w3.org/2002/07/owl#"
XSD = "http://www.w3.org/2001/XMLSchema#"

XSD_STRING = XSD + "string"
XSD_DECIMAL = XSD + "decimal"
XSD_DATETIME = XSD + "dateTime"
XSD_BOOLEAN = XSD + "boolean"
RDF_LANGSTRING = RDF + "langString"

SUPPORTED_DATATYPES = frozenset(
    {XSD_STRING, XSD_DECIMAL, XSD_DATETIME, XSD_BOOLEAN, RDF_LANGSTRING}
)

_IRI_FORBIDDEN = re.compile(r'[\s<>"{}|^`\\\x00-\x20]')
_DECIMAL_RE = re.compile(r"[+-]?(\d+(\.\d*)?|\.\d+)")
_BOOLEAN_RE = re.compile(r"true|false|1|0")
DATETIME_RE = re.compile(
    r"-?\d{4,}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}(\.\d+)?(Z|[+-]\d{2}:\d{2})?"
)
_LANG_RE = re.compile(r"[a-zA-Z]{1,8}(-[a-zA-Z0-9]{1,8})*")


class RDFError(ValueError):
    """Invalid term or triple."""


@dataclass(frozen=True, order=True)
class Iri:
    value: str

    def __post_init__(self) -> None:
        if not isinstance(self.value, str) or not self.value:
            raise RDFError("IRI must be a non-empty string")
        bad = _IRI_FORBIDDEN.search(self.value)
        if bad:
            raise RDFError(f"IRI {self.value!r} contains forbidden character {bad.group()!r}")
        scheme, sep, _ = self.value.partition(":")
        if not sep or not scheme:
            raise RDFError(f"IRI {self.value!r} has no scheme")

    @property
    def local_name(self) -> str:
        v = self.value.rstrip("/#")
        cut = max(v.rfind("#"), v.rfind("/"))
        return v[cut + 1 :] if cut >= 0 else v

    def n3(self) -> str:
        return f"<{self.value}>"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True, order=True)
class Literal:
    lexical: str
    datatype: str = XSD_STRING
    language: Optional[str] = None

    def __post_init__(self) -> None:
        if not isinstance(self.lexical, str):
            raise RDFError(f"literal lexical form must be text, got {type(self.lexical).__name__}")
        if self.language is not None:
            if not _LANG_RE.fullmatch(self.language):
                raise RDFError(f"bad language tag {self.language!r}")
            # normalise so that ("x", lang="en") works without naming the datatype
            object.__setattr__(self, "datatype", RDF_LANGSTRING)
        elif self.datatype == RDF_LANGSTRING:
            raise RDFError("language-string literal requires a language tag")
        if self.datatype not in SUPPORTED_DATATYPES:
            raise RDFError(f"unsupported literal datatype <{self.datatype}>")
        if self.datatype == XSD_DECIMAL and not _DECIMAL_RE.fullmatch(self.lexical):
            raise RDFError(f"{self.lexical!r} is not a valid xsd:decimal")
        if self.datatype == XSD_BOOLEAN and not _BOOLEAN_RE.fullmatch(self.lexical):
            raise RDFError(f"{self.lexical!r} is not a valid xsd:boolean")
        if self.datatype == XSD_DATETIME and not DATETIME_RE.fullmatch(self.lexical):
            raise RDFError(f"{self.lexical!r} is not a valid xsd:dateTime")

    def n3(self) -> str:
        quoted = '"' + escape_string(self.lexical) + '"'
        if self.language is not None:
            return f"{quoted}@{self.language}"
        if self.datatype == XSD_STRING:
            return quoted
        return f"{quoted}^^<{self.datatype}>"

    def __str__(self) -> str:
        return self.lexical


Term = Union[Iri, Literal]


@dataclass(frozen=True)
class Triple:
    subject: Iri
    predicate: Iri
    object: Term

    def __post_init__(self) -> None:
        if not isinstance(self.subject, Iri):
            raise RDFError(f"subject must be an IRI, got {self.subject!r}")
        if not isinstance(self.predicate, Iri):
            raise RDFError(f"predicate must be an IRI, got {self.predicate!r}")
        if not isinstance(self.object, (Iri, Literal)):
            raise RDFError(f"object must be an IRI or literal, got {self.object!r}")

    def n3(self) -> str:
        return f"{self.subject.n3()} {self.predicate.n3()} {self.object.n3()} ."

    def __iter__(self):
        return iter((self.subject, self.predicate, self.object))


def sort_key(triple: Triple) -> bytes:
    return triple.n3().encode("utf-8")


_ESCAPES = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\r": "\\r", "\t": "\\t", "\b": "\\b", "\f": "\\f"}


def escape_string(text: str) -> str:
    out = []
    for ch in text:
        if ch in _ESCAPES:
            out.append(_ESCAPES[ch])
        elif ord(ch) < 0x20 or ord(ch) == 0x7F:
            out.append(f"\\u{ord(ch):04X}")
        else:
            out.append(ch)
    return "".join(out)


class Graph:
    """Set of triples with three nested-dict indexes (spo, pos, osp)."""

    def __init__(self, triples: Iterable[Triple] = ()):
        self._spo: dict = defaultdict(lambda: defaultdict(set))
        self._pos: dict = defaultdict(lambda: defaultdict(set))
        self._osp: dict = defaultdict(lambda: defaultdict(set))
        self._size = 0
        for t in triples:
            self.add(t)

    def add(self, triple: Triple) -> bool:
        """Insert ``triple``; returns True iff it was not already present."""
        if not isinstance(triple, Triple):
            raise RDFError(f"expected a Triple, got {triple!r}")
        s, p, o = triple.subject, triple.predicate, triple.object
        if o in self._spo.get(s, {}).get(p, ()):
            return False
        self._spo[s][p].add(o)
        self._pos[p][o].add(s)
        self._osp[o][s].add(p)
        self._size += 1
        return True

    def update(self, triples: Iterable[Triple]) -> int:
        return sum(self.add(t) for t in triples)

    def __len__(self) -> int:
        return self._size

    def __contains__(self, triple: Triple) -> bool:
        return triple.object in self._spo.get(triple.subject, {}).get(triple.predicate, ())

    def __iter__(self) -> Iterator[Triple]:
        return self.triples()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return len(self) == len(other) and all(t in other for t in self)

    def __repr__(self) -> str:
        return f"<Graph with {len(self)} triples>"

    def copy(self) -> "Graph":
        return Graph(self)

    def __or__(self, other: "Graph") -> "Graph":
        g = self.copy()
        g.update(other)
        return g

    def triples(
        self, s: Optional[Iri] = None, p: Optional[Iri] = None, o: Optional[Term] = None
    ) -> Iterator[Triple]:
        """Unordered pattern scan, choosing the index that fixes the most positions."""
        if s is not None:
            by_p = self._spo.get(s)
            if not by_p:
                return
            if p is not None:
                objs = by_p.get(p, ())
                if o is not None:
                    if o in objs:
                        yield Triple(s, p, o)
                    return
                for obj in objs:
                    yield Triple(s, p, obj)
                return
            if o is not None:
                for pred in self._osp.get(o, {}).get(s, ()):
                    yield Triple(s, pred, o)
                return
            for pred, objs in by_p.items():
                for obj in objs:
                    yield Triple(s, pred, obj)
            return
        if p is not None:
            by_o = self._pos.get(p)
            if not by_o:
                return
            if o is not None:
                for subj in by_o.get(o, ()):
                    yield Triple(subj, p, o)
                return
            for obj, subjs in by_o.items():
                for subj in subjs:
                    yield Triple(subj, p, obj)
            return
        if o is not None:
            for subj, preds in self._osp.get(o, {}).items():
                for pred in preds:
                    yield Triple(subj, pred, o)
            return
        for subj, by_p in self._spo.items():
            for pred, objs in by_p.items():
                for obj in objs:
                    yield Triple(subj, pred, obj)

    def count(self, s=None, p=None, o=None) -> int:
        if s is None and p is None and o is None:
            return self._size
        if s is not None and p is not None and o is None:
            return len(self._spo.get(s, {}).get(p, ()))
        if p is not None and o is not None and s is None:
            return len(self._pos.get(p, {}).get(o, ()))
        return sum(1 for _ in self.triples(s, p, o))

    def match(self, s=None, p=None, o=None) -> list[Triple]:
        """Triples matching every bound position, sorted by their N-Triples line."""
        return sorted(self.triples(s, p, o), key=sort_key)

    def objects(self, s: Iri, p: Iri) -> set:
        return set(self._spo.get(s, {}).get(p, ()))

    def subjects(self, p: Iri, o: Term) -> set:
        return set(self._pos.get(p, {}).get(o, ()))

    def index_views(self) -> tuple[set, set, set]:
        """The triple set as enumerated through each index separately (for consistency checks)."""
        spo = {(s, p, o) for s, m in self._spo.items() for p, os_ in m.items() for o in os_}
        pos = {(s, p, o) for p, m in self._pos.items() for o, ss in m.items() for s in ss}
        osp = {(s, p, o) for o, m in self._osp.items() for s, ps in m.items() for p in ps}
        return spo, pos, osp

    def nodes(self) -> set:
        out = set(self._spo)
        out.update(self._osp)
        return out


def insert(graph: Graph, triple: Triple) -> bool:
    return graph.add(triple)


def match(graph: Graph, s=None, p=None, o=None) -> list[Triple]:
    return graph.match(s, p, o)


# --------------------------------------------------------------------------
# N-Triples
# --------------------------------------------------------------------------


def serialize_ntriples(graph: Graph) -> str:
    lines = sorted((t.n3() for t in graph), key=lambda line: line.encode("utf-8"))
    return "".join(line + "\n" for line in lines)


class NTriplesSyntaxError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


_UNESCAPE = {"t": "\t", "b": "\b", "n": "\n", "r": "\r", "f": "\f", '"': '"', "'": "'", "\\": "\\"}


class _LineReader:
    def __init__(self, text: str, lineno: int):
        self.text = text
        self.pos = 0
        self.lineno = lineno

    def error(self, message: str, pos: Optional[int] = None):
        col = (self.pos if pos is None else pos) + 1
        raise NTriplesSyntaxError(message, self.lineno, col)

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos] in " \t":
            self.pos += 1

    def peek(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def read_uchar(self) -> str:
        kind = self.text[self.pos]
        width = 4 if kind == "u" else 8
        digits = self.text[self.pos + 1 : self.pos + 1 + width]
        if len(digits) != width or not all(c in "0123456789abcdefABCDEF" for c in digits):
            self.error(f"bad \\{kind} escape", self.pos - 1)
        self.pos += 1 + width
        return chr(int(digits, 16))

    def read_iri(self) -> Iri:
        start = self.pos
        self.pos += 1  # '<'
        buf = []
        while True:
            if self.pos >= len(self.text):
                self.error("unterminated IRI", start)
            ch = self.text[self.pos]
            if ch == ">":
                self.pos += 1
                break
            if ch == "\\":
                self.pos += 1
                if self.peek() not in ("u", "U"):
                    self.error("only \\u and \\U escapes are allowed in IRIs")
                buf.append(self.read_uchar())
                continue
            buf.append(ch)
            self.pos += 1
        try:
            return Iri("".join(buf))
        except RDFError as exc:
            self.error(str(exc), start)

    def read_literal(self) -> Literal:
        start = self.pos
        self.pos += 1  # '"'
        buf = []
        while True:
            if self.pos >= len(self.text):
                self.error("unterminated string literal", start)
            ch = self.text[self.pos]
            if ch == '"':
                self.pos += 1
                break
            if ch == "\\":
                self.pos += 1
                esc = self.peek()
                if esc in ("u", "U"):
                    buf.append(self.read_uchar())
                    continue
                if esc not in _UNESCAPE:
                    self.error(f"unknown escape \\{esc}", self.pos - 1)
                buf.append(_UNESCAPE[esc])
                self.pos += 1
                continue
            buf.append(ch)
            self.pos += 1
        lexical = "".join(buf)
        language = None
        datatype = XSD_STRING
        if self.peek() == "@":
            self.pos += 1
            m = re.compile(r"[a-zA-Z]+(-[a-zA-Z0-9]+)*").match(self.text, self.pos)
            if not m:
                self.error("bad language tag")
            language = m.group()
            self.pos = m.end()
        elif self.text.startswith("^^", self.pos):
            self.pos += 2
            if self.peek() != "<":
                self.error("expected datatype IRI after ^^")
            datatype = self.read_iri().value
        try:
            return Literal(lexical, datatype, language)
        except RDFError as exc:
            self.error(str(exc), start)

    def read_term(self, what: str, allow_literal: bool) -> Term:
        self.skip_ws()
        ch = self.peek()
        if ch == "<":
            return self.read_iri()
        if ch == '"' and allow_literal:
            return self.read_literal()
        if ch == "_":
            self.error("blank nodes are not supported")
        self.error(f"expected {what}")


def parse_ntriples(text: str) -> Graph:
    """Parse N-Triples text; any malformed line aborts the whole parse."""
    graph = Graph()
    # only LF / CRLF end a line; str.splitlines would also split on U+0085, U+2028, ...
    for lineno, raw in enumerate(text.split("\n"), start=1):
        if raw.endswith("\r"):
            raw = raw[:-1]
        reader = _LineReader(raw, lineno)
        reader.skip_ws()
        if reader.peek() in ("", "#"):
            continue
        s = reader.read_term("subject IRI", allow_literal=False)
        p = reader.read_term("predicate IRI", allow_literal=False)
        o = reader.read_term("object", allow_literal=True)
        reader.skip_ws()
        if reader.peek() != ".":
            reader.error("expected '.' at end of triple")
        reader.pos += 1
        reader.skip_ws()
        if reader.peek() not in ("", "#"):
            reader.error("unexpected content after '.'")
        graph.add(Triple(s, p, o))
    return graph


# --------------------------------------------------------------------------
# DOT export
# --------------------------------------------------------------------------


def _dot_quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


def _node_label(term: Term) -> str:
    return term.local_name if isinstance(term, Iri) else term.lexical


def neighborhood(graph: Graph, focus: Iri, radius: int) -> set:
    """Nodes within ``radius`` undirected hops of ``focus`` (literals are leaves)."""
    seen = {focus}
    frontier = deque([(focus, 0)])
    while frontier:
        node, dist = frontier.popleft()
        if dist == radius:
            continue
        adjacent = []
        if isinstance(node, Iri):
            adjacent.extend(t.object for t in graph.triples(s=node))
        adjacent.extend(t.subject for t in graph.triples(o=node))
        for nxt in adjacent:
            if nxt not in seen:
                seen.add(nxt)
                frontier.append((nxt, dist + 1))
    return seen


def export_dot(graph: Graph, focus: Optional[Iri] = None, radius: int = 1) -> str:
    if radius < 0:
        raise ValueError("radius must be >= 0")
    if focus is not None:
        if focus not in graph.nodes():
            return f"digraph G {{\n  // focus {focus.n3()} not in graph\n}}\n"
        keep = neighborhood(graph, focus, radius)
        edges = [t for t in graph if t.subject in keep and t.object in keep]
    else:
        edges = list(graph)
    edges.sort(key=sort_key)

    nodes = sorted({t.subject for t in edges} | {t.object for t in edges}, key=lambda n: n.n3())
    if focus is not None and focus not in nodes:
        nodes = [focus]  # radius 0, or an isolated focus
    ids = {node: f"n{i}" for i, node in enumerate(nodes)}
    lines = ["digraph G {"]
    for node in nodes:
        shape = "ellipse" if isinstance(node, Iri) else "box"
        lines.append(f"  {ids[node]} [label={_dot_quote(_node_label(node))}, shape={shape}];")
    for t in edges:
        lines.append(
            f"  {ids[t.subject]} -> {ids[t.object]} [label={_dot_quote(t.predicate.local_name)}];"
        )
    lines.append("}")
    return "\n".join(lines) + "\n"
