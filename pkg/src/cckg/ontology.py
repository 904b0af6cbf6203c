"""Built-in cloud-stack + CVE ontology, its OWL/RDFS materialisation, and a domain/range validator."""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional

from .namespaces import DEFAULT, Namespaces
from .rdf import (
    OWL,
    RDF,
    RDFS,
    XSD_DATETIME,
    XSD_DECIMAL,
    XSD_STRING,
    SUPPORTED_DATATYPES,
    Graph,
    Iri,
    Literal,
    Triple,
)

RDF_TYPE = Iri(RDF + "type")
RDFS_LABEL = Iri(RDFS + "label")
RDFS_COMMENT = Iri(RDFS + "comment")
RDFS_SUBCLASS = Iri(RDFS + "subClassOf")
RDFS_DOMAIN = Iri(RDFS + "domain")
RDFS_RANGE = Iri(RDFS + "range")
RDFS_SEEALSO = Iri(RDFS + "seeAlso")
OWL_CLASS = Iri(OWL + "Class")
OWL_OBJECT_PROPERTY = Iri(OWL + "ObjectProperty")
OWL_DATATYPE_PROPERTY = Iri(OWL + "DatatypeProperty")

# predicates that describe schema or annotate, never checked against domain/range
ANNOTATION_PREDICATES = frozenset(
    {RDF_TYPE, RDFS_LABEL, RDFS_COMMENT, RDFS_SUBCLASS, RDFS_DOMAIN, RDFS_RANGE, RDFS_SEEALSO}
)

DBPEDIA_COMPANY = "http://dbpedia.org/ontology/Company"
INVENTED = "invented: name not given in the source ontology description"

LAYER_KINDS = (
    "Application",
    "Data",
    "Middleware",
    "Networking",
    "OperatingSystem",
    "Runtime",
    "Servers",
    "Storage",
    "Virtualization",
)

SERVICE_MODELS = {
    "IaaS": "InfrastructureAsAService",
    "PaaS": "PlatformAsAService",
    "SaaS": "SoftwareAsAService",
    "FaaS": "FunctionAsAService",
    "CaaS": "CommunicationAsAService",
    "DaaS": "DesktopAsAService",
}


class SchemaError(ValueError):
    pass


@dataclass(frozen=True)
class ClassDef:
    iri: Iri
    label: str
    parent: Optional[Iri] = None
    comment: Optional[str] = None
    see_also: Optional[str] = None


@dataclass(frozen=True)
class ObjectPropertyDef:
    iri: Iri
    label: str
    domain: Iri
    range: Iri
    comment: Optional[str] = None


@dataclass(frozen=True)
class DataPropertyDef:
    iri: Iri
    label: str
    domain: Iri
    datatype: str = XSD_STRING
    comment: Optional[str] = None


@dataclass(frozen=True)
class OntologySchema:
    classes: tuple[ClassDef, ...]
    object_properties: tuple[ObjectPropertyDef, ...]
    data_properties: tuple[DataPropertyDef, ...]
    _by_iri: dict = field(init=False, repr=False, compare=False)
    _ancestors: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        by_iri: dict = {}
        for d in (*self.classes, *self.object_properties, *self.data_properties):
            if d.iri in by_iri:
                raise SchemaError(f"duplicate schema IRI {d.iri}")
            by_iri[d.iri] = d
        class_iris = {c.iri for c in self.classes}
        for c in self.classes:
            if c.parent is not None and c.parent not in class_iris:
                raise SchemaError(f"class {c.iri} has undeclared parent {c.parent}")
        for op in self.object_properties:
            for end in (op.domain, op.range):
                if end not in class_iris:
                    raise SchemaError(f"object property {op.iri} refers to undeclared class {end}")
        for dp in self.data_properties:
            if dp.domain not in class_iris:
                raise SchemaError(f"data property {dp.iri} refers to undeclared class {dp.domain}")
            if dp.datatype not in SUPPORTED_DATATYPES:
                raise SchemaError(f"data property {dp.iri} has unsupported datatype {dp.datatype}")

        parents = {c.iri: c.parent for c in self.classes}
        ancestors = {}
        for c in self.classes:
            chain, cur = [], c.iri
            while cur is not None:
                if cur in chain:
                    raise SchemaError(f"subclass cycle through {cur}")
                chain.append(cur)
                cur = parents[cur]
            ancestors[c.iri] = frozenset(chain)
        object.__setattr__(self, "_by_iri", by_iri)
        object.__setattr__(self, "_ancestors", ancestors)

    def lookup(self, iri: Iri):
        return self._by_iri.get(iri)

    def superclasses(self, cls: Iri) -> frozenset:
        """``cls`` and all its ancestors; unknown classes map to themselves only."""
        return self._ancestors.get(cls, frozenset({cls}))

    def class_by_name(self, local: str) -> ClassDef:
        for c in self.classes:
            if c.iri.local_name == local:
                return c
        raise KeyError(local)


_CLASSES = [
    ("StackLayer", "Stack layer", None),
    *[(k, k, "StackLayer") for k in LAYER_KINDS],
    ("CloudProvider", "Cloud provider", None),
    ("ServiceModel", "Service model", None),
    *[(cls, cls, "ServiceModel") for cls in SERVICE_MODELS.values()],
    ("ServiceComponent", "Service component", None),
    ("CVE", "Common Vulnerabilities and Exposures (CVE)", None),
    ("CVEInformationSource", "CVE information source", None),
    ("Contributor", "Contributor", None),
    ("Metric", "Metric", None),
    ("Platform", "Platform", None),
    ("Product", "Product", None),
    ("ProductVendor", "Product vendor", None),
    ("CWE", "Common Weakness Enumeration (CWE)", None),
]

# (name, domain, range, invented?)
_OBJECT_PROPERTIES = [
    ("offerServices", "CloudProvider", "ServiceModel", False),
    ("provides", "ServiceModel", "StackLayer", False),
    ("hasComponent", "ServiceModel", "ServiceComponent", False),
    ("componentImpactedByCVE", "ServiceComponent", "CVE", False),
    ("hasMetric", "CVE", "Metric", True),
    ("hasWeakness", "CVE", "CWE", True),
    ("affectsProduct", "CVE", "Product", True),
    ("hasVendor", "Product", "ProductVendor", True),
    ("applicablePlatform", "CVE", "Platform", True),
    ("hasInformationSource", "CVE", "CVEInformationSource", True),
    ("hasContributor", "CVE", "Contributor", True),
    ("sourceOrganization", "CVEInformationSource", "ProductVendor", True),
    ("metricOfRecord", "Metric", "CVE", True),
    ("productOfComponent", "ServiceComponent", "Product", True),
    ("weaknessObservedIn", "CWE", "CVE", True),
    ("vendorOffersService", "ProductVendor", "ServiceModel", True),
]

_DATA_PROPERTIES = [
    ("cveId", "CVE", XSD_STRING),
    ("description", "CVE", XSD_STRING),
    ("datePublished", "CVE", XSD_DATETIME),
    ("dateUpdated", "CVE", XSD_DATETIME),
    ("recordState", "CVE", XSD_STRING),
    ("assignerShortName", "CVE", XSD_STRING),
    ("referenceUrl", "CVE", XSD_STRING),
    ("baseScore", "Metric", XSD_DECIMAL),
    ("cvssVersion", "Metric", XSD_STRING),
    ("vectorString", "Metric", XSD_STRING),
    ("attackVector", "Metric", XSD_STRING),
    ("attackComplexity", "Metric", XSD_STRING),
    ("privilegesRequired", "Metric", XSD_STRING),
    ("userInteraction", "Metric", XSD_STRING),
    ("scopeValue", "Metric", XSD_STRING),
    ("confidentialityImpact", "Metric", XSD_STRING),
    ("integrityImpact", "Metric", XSD_STRING),
    ("availabilityImpact", "Metric", XSD_STRING),
    ("productName", "Product", XSD_STRING),
    ("defaultStatus", "Product", XSD_STRING),
    ("versionValue", "Product", XSD_STRING),
    ("versionStatus", "Product", XSD_STRING),
    ("vendorName", "ProductVendor", XSD_STRING),
    ("cweId", "CWE", XSD_STRING),
    ("cweName", "CWE", XSD_STRING),
    ("contributorName", "Contributor", XSD_STRING),
    ("platformName", "Platform", XSD_STRING),
]


def builtin_schema(ns: Namespaces = DEFAULT) -> OntologySchema:
    """The fixed 27-class / 16-object-property / 27-data-property inventory."""
    t = ns.term
    classes = []
    for name, label, parent in _CLASSES:
        comment = see_also = None
        if name == "CloudProvider":
            see_also = DBPEDIA_COMPANY
        elif name == "CVEInformationSource":
            comment = "invented mapping: populated from the record's assignerShortName"
        classes.append(ClassDef(t(name), label, t(parent) if parent else None, comment, see_also))
    objs = tuple(
        ObjectPropertyDef(t(n), n, t(d), t(r), INVENTED if inv else None)
        for n, d, r, inv in _OBJECT_PROPERTIES
    )
    data = tuple(DataPropertyDef(t(n), n, t(d), dt) for n, d, dt in _DATA_PROPERTIES)
    return OntologySchema(tuple(classes), objs, data)


def emit_schema_triples(schema: OntologySchema) -> Graph:
    g = Graph()

    def annotate(d):
        g.add(Triple(d.iri, RDFS_LABEL, Literal(d.label)))
        if d.comment:
            g.add(Triple(d.iri, RDFS_COMMENT, Literal(d.comment)))

    for c in schema.classes:
        g.add(Triple(c.iri, RDF_TYPE, OWL_CLASS))
        annotate(c)
        if c.parent is not None:
            g.add(Triple(c.iri, RDFS_SUBCLASS, c.parent))
        if c.see_also:
            g.add(Triple(c.iri, RDFS_SEEALSO, Iri(c.see_also)))
    for op in schema.object_properties:
        g.add(Triple(op.iri, RDF_TYPE, OWL_OBJECT_PROPERTY))
        g.add(Triple(op.iri, RDFS_DOMAIN, op.domain))
        g.add(Triple(op.iri, RDFS_RANGE, op.range))
        annotate(op)
    for dp in schema.data_properties:
        g.add(Triple(dp.iri, RDF_TYPE, OWL_DATATYPE_PROPERTY))
        g.add(Triple(dp.iri, RDFS_DOMAIN, dp.domain))
        g.add(Triple(dp.iri, RDFS_RANGE, Iri(dp.datatype)))
        annotate(dp)
    return g


# --------------------------------------------------------------------------
# validation
# --------------------------------------------------------------------------


class ViolationKind(str, Enum):
    UNKNOWN_PREDICATE = "UnknownPredicate"
    DOMAIN = "DomainViolation"
    RANGE = "RangeViolation"
    DATATYPE = "DatatypeMismatch"
    UNTYPED_SUBJECT = "UntypedSubject"


@dataclass(frozen=True)
class Violation:
    kind: ViolationKind
    triple: Triple
    message: str

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "subject": self.triple.subject.value,
            "predicate": self.triple.predicate.value,
            "object": self.triple.object.n3(),
            "message": self.message,
        }

    def __str__(self) -> str:
        return f"{self.kind.value}: {self.message} in {self.triple.n3()}"


def _type_closure(graph: Graph, schema: OntologySchema) -> dict:
    closure: dict = defaultdict(set)
    for t in graph.triples(p=RDF_TYPE):
        if isinstance(t.object, Iri):
            closure[t.subject] |= schema.superclasses(t.object)
    return closure


def validate(graph: Graph, schema: OntologySchema) -> list[Violation]:
    """Check every instance triple against the schema's domain/range/datatype declarations.

    An individual satisfies a class constraint if it is typed with that class
    or any subclass of it.  The graph is not modified.
    """
    types = _type_closure(graph, schema)
    out: list[Violation] = []
    for t in graph.match():
        if t.predicate in ANNOTATION_PREDICATES:
            continue
        prop = schema.lookup(t.predicate)
        if not isinstance(prop, (ObjectPropertyDef, DataPropertyDef)):
            out.append(Violation(ViolationKind.UNKNOWN_PREDICATE, t, f"{t.predicate.local_name} is not a schema property"))
            continue
        name = prop.iri.local_name
        subject_types = types.get(t.subject)
        if not subject_types:
            out.append(Violation(ViolationKind.UNTYPED_SUBJECT, t, f"subject of {name} has no rdf:type"))
        elif prop.domain not in subject_types:
            out.append(Violation(ViolationKind.DOMAIN, t, f"subject of {name} is not a {prop.domain.local_name}"))

        if isinstance(prop, ObjectPropertyDef):
            if not isinstance(t.object, Iri) or prop.range not in types.get(t.object, ()):
                out.append(Violation(ViolationKind.RANGE, t, f"object of {name} is not a {prop.range.local_name}"))
        elif not isinstance(t.object, Literal) or t.object.datatype != prop.datatype:
            out.append(Violation(ViolationKind.DATATYPE, t, f"{name} expects <{prop.datatype}>"))
    return out


def violations_to_text(violations: Iterable[Violation]) -> str:
    return "".join(str(v) + "\n" for v in violations)


def violations_to_json(violations: Iterable[Violation]) -> str:
    return json.dumps([v.to_dict() for v in violations], indent=2) + "\n"
