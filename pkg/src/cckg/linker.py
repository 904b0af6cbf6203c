"""Link CVE-affected products to catalog service components by normalized name."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .catalog import ServiceCatalog
from .namespaces import DEFAULT, Namespaces
from .ontology import RDF_TYPE
from .rdf import Graph, Iri, Literal, Triple

_PUNCT = re.compile(r"[._\-/]")
_WS = re.compile(r"\s+")


def normalize_name(text: str) -> str:
    """Case-fold, turn ``._-/`` into spaces, and collapse whitespace."""
    return _WS.sub(" ", _PUNCT.sub(" ", text.casefold())).strip()


@dataclass(frozen=True)
class Pattern:
    product: str
    vendor: Optional[str] = None
    origin: str = "component name"  # or "alias"
    source: str = ""  # the catalog text the pattern was built from

    @property
    def key(self) -> tuple:
        return (self.vendor, self.product)

    def describe(self) -> str:
        return "component name" if self.origin == "component name" else f"alias '{self.source}'"


@dataclass(frozen=True)
class MatchRule:
    component_id: str
    component_iri: Iri
    patterns: tuple[Pattern, ...]

    def __post_init__(self) -> None:
        if not self.patterns:
            raise ValueError(f"rule for {self.component_id} has no patterns")

    def first_match(self, names: Iterable[str], vendors: Iterable[str]) -> Optional[Pattern]:
        names, vendors = set(names), set(vendors)
        for pat in self.patterns:
            if pat.product in names and (pat.vendor is None or pat.vendor in vendors):
                return pat
        return None


def _alias_pattern(alias: str) -> Pattern:
    if "/" in alias:
        vendor, _, product = alias.partition("/")
        return Pattern(normalize_name(product), normalize_name(vendor), "alias", alias)
    return Pattern(normalize_name(alias), None, "alias", alias)


def build_rules(catalog: ServiceCatalog, ns: Namespaces = DEFAULT) -> list[MatchRule]:
    rules = []
    for comp in catalog.components:
        patterns: list[Pattern] = [Pattern(normalize_name(comp.name), None, "component name", comp.name)]
        for alias in comp.aliases:
            pat = _alias_pattern(alias)
            if pat.product and pat.key not in {p.key for p in patterns}:
                patterns.append(pat)
        rules.append(MatchRule(comp.id, ns.ind(comp.id), tuple(patterns)))
    return rules


@dataclass(frozen=True)
class Link:
    component: Iri
    cve: Iri
    product: Iri
    product_name: str
    component_id: str
    pattern: Pattern


@dataclass
class LinkReport:
    links: list[Link] = field(default_factory=list)
    unmatched_products: list[Iri] = field(default_factory=list)
    products_seen: int = 0
    new_triples: int = 0

    @property
    def stats(self) -> dict:
        return {
            "products": self.products_seen,
            "matched_products": self.products_seen - len(self.unmatched_products),
            "unmatched_products": len(self.unmatched_products),
            "links": len(self.links),
            "new_triples": self.new_triples,
        }

    def find(self, component: Iri, cve: Iri) -> Optional[Link]:
        for link in self.links:
            if link.component == component and link.cve == cve:
                return link
        return None

    def to_dict(self) -> dict:
        return {
            "links": [
                {
                    "component": l.component.value,
                    "cve": l.cve.value,
                    "product": l.product.value,
                    "productName": l.product_name,
                    "pattern": {"vendor": l.pattern.vendor, "product": l.pattern.product},
                    "origin": l.pattern.describe(),
                }
                for l in self.links
            ],
            "unmatchedProducts": [p.value for p in self.unmatched_products],
            "stats": self.stats,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def to_text(self) -> str:
        rows = [("COMPONENT", "CVE", "PRODUCT", "RULE")]
        rows += [(l.component_id, l.cve.local_name, l.product_name, l.pattern.describe()) for l in self.links]
        widths = [max(len(r[i]) for r in rows) for i in range(4)]
        lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows]
        lines.append(
            "links: {links}, products: {products}, unmatched: {unmatched_products}, new triples: {new_triples}".format(**self.stats)
        )
        return "\n".join(lines) + "\n"


class LinkNotFound(LookupError):
    pass


def _product_index(graph: Graph, ns: Namespaces):
    """Yield (product IRI, normalized names, normalized vendor names, raw names) in IRI order."""
    t = ns.term
    for prod in sorted(graph.subjects(RDF_TYPE, t("Product"))):
        raw = sorted(o.lexical for o in graph.objects(prod, t("productName")) if isinstance(o, Literal))
        vendors = {
            normalize_name(o.lexical)
            for v in graph.objects(prod, t("hasVendor"))
            if isinstance(v, Iri)
            for o in graph.objects(v, t("vendorName"))
            if isinstance(o, Literal)
        }
        yield prod, raw, vendors


def link(graph: Graph, rules: Sequence[MatchRule], ns: Namespaces = DEFAULT) -> tuple[Graph, LinkReport]:
    """Emit componentImpactedByCVE edges for every product matched by a rule.

    Matching is exact on normalized names.  A product matched by several
    rules yields links for all of them; the report attributes each
    (component, CVE) pair to the first product/pattern that produced it.
    The returned graph holds only triples not already present in ``graph``.
    """
    pred = ns.term("componentImpactedByCVE")
    affects = ns.term("affectsProduct")
    out = Graph()
    report = LinkReport()
    seen_pairs: set = set()
    for prod, raw_names, vendors in _product_index(graph, ns):
        report.products_seen += 1
        by_norm = {}
        for name in raw_names:
            by_norm.setdefault(normalize_name(name), name)
        cves = sorted(graph.subjects(affects, prod))
        matched = False
        for rule in rules:
            pat = rule.first_match(by_norm, vendors)
            if pat is None:
                continue
            matched = True
            for cve in cves:
                if (rule.component_iri, cve) in seen_pairs:
                    continue
                seen_pairs.add((rule.component_iri, cve))
                report.links.append(Link(rule.component_iri, cve, prod, by_norm[pat.product], rule.component_id, pat))
                triple = Triple(rule.component_iri, pred, cve)
                if triple not in graph:
                    out.add(triple)
        if not matched:
            report.unmatched_products.append(prod)
    report.new_triples = len(out)
    return out, report


def explain_link(report: LinkReport, component: Iri, cve: Iri) -> str:
    found = report.find(component, cve)
    if found is None:
        raise LinkNotFound(f"no link between {component.value} and {cve.value}")
    return f"{found.component_id} ← {cve.local_name} via product '{found.product_name}' ({found.pattern.describe()})"
