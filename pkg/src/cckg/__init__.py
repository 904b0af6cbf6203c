"""Cloud-service security knowledge graph: ontology, CVE ingestion, component linking, queries."""

from .namespaces import DEFAULT, Namespaces
from .rdf import Graph, Iri, Literal, Triple, parse_ntriples, serialize_ntriples

__all__ = [
    "DEFAULT",
    "Graph",
    "Iri",
    "Literal",
    "Namespaces",
    "Triple",
    "parse_ntriples",
    "serialize_ntriples",
]

__version__ = "0.1.0"
