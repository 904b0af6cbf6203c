"""Service catalog: providers, the services they offer, and each service's sub-components."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Any

from .namespaces import DEFAULT, Namespaces
from .ontology import LAYER_KINDS, RDF_TYPE, RDFS_LABEL, SERVICE_MODELS
from .rdf import Graph, Literal, Triple

_SLUG_RE = re.compile(r"[a-z0-9]+(-[a-z0-9]+)*")


class CatalogError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class ProviderEntry:
    id: str
    name: str


@dataclass(frozen=True)
class ServiceEntry:
    id: str
    name: str
    provider: str
    model: str
    provides: tuple[str, ...] = ()


@dataclass(frozen=True)
class ComponentEntry:
    id: str
    name: str
    service: str
    layer: str | None = None
    aliases: tuple[str, ...] = ()


@dataclass(frozen=True)
class ServiceCatalog:
    providers: tuple[ProviderEntry, ...] = ()
    services: tuple[ServiceEntry, ...] = ()
    components: tuple[ComponentEntry, ...] = ()

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for kind, entries in (("providers", self.providers), ("services", self.services), ("components", self.components)):
            for i, e in enumerate(entries):
                path = f"$.{kind}[{i}].id"
                if not _SLUG_RE.fullmatch(e.id):
                    raise CatalogError(path, f"{e.id!r} is not a lowercase slug")
                if e.id in seen:
                    raise CatalogError(path, f"duplicate id {e.id!r}")
                seen.add(e.id)
        provider_ids = {p.id for p in self.providers}
        service_ids = {s.id for s in self.services}
        for i, s in enumerate(self.services):
            if s.provider not in provider_ids:
                raise CatalogError(f"$.services[{i}].provider", f"unknown provider {s.provider!r}")
            if s.model not in SERVICE_MODELS:
                raise CatalogError(f"$.services[{i}].model", f"unknown service model {s.model!r}")
            for j, layer in enumerate(s.provides):
                if layer not in LAYER_KINDS:
                    raise CatalogError(f"$.services[{i}].provides[{j}]", f"unknown layer {layer!r}")
        for i, c in enumerate(self.components):
            if c.service not in service_ids:
                raise CatalogError(f"$.components[{i}].service", f"unknown service {c.service!r}")
            if c.layer is not None and c.layer not in LAYER_KINDS:
                raise CatalogError(f"$.components[{i}].layer", f"unknown layer {c.layer!r}")
            for j, alias in enumerate(c.aliases):
                if not alias.strip():
                    raise CatalogError(f"$.components[{i}].aliases[{j}]", "alias must be non-empty")

    @property
    def sizes(self) -> tuple[int, int, int]:
        return len(self.providers), len(self.services), len(self.components)

    def components_of(self, service_id: str) -> list[ComponentEntry]:
        return [c for c in self.components if c.service == service_id]

    def service(self, service_id: str) -> ServiceEntry:
        for s in self.services:
            if s.id == service_id:
                return s
        raise KeyError(service_id)


_FIELDS = {
    "providers": ({"id": str, "name": str}, set()),
    "services": ({"id": str, "name": str, "provider": str, "model": str, "provides": list}, {"provides"}),
    "components": ({"id": str, "name": str, "service": str, "layer": str, "aliases": list}, {"layer", "aliases"}),
}


def _check_object(obj: Any, path: str, kind: str) -> dict:
    spec, optional = _FIELDS[kind]
    if not isinstance(obj, dict):
        raise CatalogError(path, "expected an object")
    for key in obj:
        if key not in spec:
            raise CatalogError(f"{path}.{key}", "unknown key")
    for key, typ in spec.items():
        if key not in obj:
            if key in optional:
                continue
            raise CatalogError(f"{path}.{key}", "missing required key")
        value = obj[key]
        if not isinstance(value, typ):
            raise CatalogError(f"{path}.{key}", f"expected {typ.__name__}")
        if typ is list:
            for j, item in enumerate(value):
                if not isinstance(item, str):
                    raise CatalogError(f"{path}.{key}[{j}]", "expected str")
        elif key == "name" and not value.strip():
            raise CatalogError(f"{path}.{key}", "name must be non-empty")
    return obj


def load_catalog(text: str) -> ServiceCatalog:
    """Parse and validate the JSON catalog format; errors name the offending JSON path."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CatalogError("$", f"malformed JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise CatalogError("$", "expected an object")
    for key in doc:
        if key not in _FIELDS:
            raise CatalogError(f"$.{key}", "unknown key")
    parsed: dict[str, list] = {}
    for kind in _FIELDS:
        items = doc.get(kind, [])
        if not isinstance(items, list):
            raise CatalogError(f"$.{kind}", "expected an array")
        parsed[kind] = [_check_object(o, f"$.{kind}[{i}]", kind) for i, o in enumerate(items)]
    return ServiceCatalog(
        providers=tuple(ProviderEntry(o["id"], o["name"]) for o in parsed["providers"]),
        services=tuple(
            ServiceEntry(o["id"], o["name"], o["provider"], o["model"], tuple(o.get("provides", ())))
            for o in parsed["services"]
        ),
        components=tuple(
            ComponentEntry(o["id"], o["name"], o["service"], o.get("layer"), tuple(o.get("aliases", ())))
            for o in parsed["components"]
        ),
    )


def catalog_to_dict(catalog: ServiceCatalog) -> dict:
    return {
        "providers": [{"id": p.id, "name": p.name} for p in catalog.providers],
        "services": [
            {"id": s.id, "name": s.name, "provider": s.provider, "model": s.model, "provides": list(s.provides)}
            for s in catalog.services
        ],
        "components": [
            {"id": c.id, "name": c.name, "service": c.service, **({"layer": c.layer} if c.layer else {}), "aliases": list(c.aliases)}
            for c in catalog.components
        ],
    }


def builtin_example_catalog() -> ServiceCatalog:
    text = resources.files("cckg.data").joinpath("example_catalog.json").read_text(encoding="utf-8")
    return load_catalog(text)


def layer_iri(layer: str, ns: Namespaces = DEFAULT):
    return ns.ind("layer", layer.lower())


def catalog_to_triples(catalog: ServiceCatalog, ns: Namespaces = DEFAULT) -> Graph:
    """Instance triples for the catalog.

    Layers named in a service's ``provides`` list become shared individuals
    (``ind/layer/<kind>``) typed by their StackLayer subclass.
    """
    t = ns.term
    g = Graph()
    for p in catalog.providers:
        iri = ns.ind(p.id)
        g.add(Triple(iri, RDF_TYPE, t("CloudProvider")))
        g.add(Triple(iri, RDFS_LABEL, Literal(p.name)))
    for s in catalog.services:
        iri = ns.ind(s.id)
        g.add(Triple(ns.ind(s.provider), t("offerServices"), iri))
        g.add(Triple(iri, RDF_TYPE, t(SERVICE_MODELS[s.model])))
        g.add(Triple(iri, RDFS_LABEL, Literal(s.name)))
        for layer in s.provides:
            layer_ind = layer_iri(layer, ns)
            g.add(Triple(iri, t("provides"), layer_ind))
            g.add(Triple(layer_ind, RDF_TYPE, t(layer)))
            g.add(Triple(layer_ind, RDFS_LABEL, Literal(layer)))
    for c in catalog.components:
        iri = ns.ind(c.id)
        g.add(Triple(ns.ind(c.service), t("hasComponent"), iri))
        g.add(Triple(iri, RDF_TYPE, t("ServiceComponent")))
        g.add(Triple(iri, RDFS_LABEL, Literal(c.name)))
        if c.layer:
            g.add(Triple(iri, RDF_TYPE, t(c.layer)))
    return g
